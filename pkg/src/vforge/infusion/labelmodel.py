"""Generative label model over knowledge-function votes.

Naive-Bayes family: latent match label y ∈ {+1,−1}; each vote column j
fires with propensity p_j and, conditioned on firing, agrees with y with
accuracy a_j. Fitted by EM on the observed vote matrix alone — no ground
truth enters here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..errors import DegenerateMatrix

MATCH = 1
ABSTAIN = 0
NO_MATCH = -1

DEFAULT_PRIOR = 0.1
DEFAULT_ACCURACY = 0.7
MAX_ITERATIONS = 100
LL_TOLERANCE = 1e-6

_PRIOR_CLAMP = (1e-4, 1.0 - 1e-4)
_ACCURACY_CLAMP = (0.05, 0.95)


@dataclass(frozen=True)
class ColumnMeta:
    """Identity and strength of one knowledge-function column."""

    id: str
    strength: str  # "weak" | "strong"


@dataclass
class LabelMatrix:
    """Votes: one row per candidate pair, one column per knowledge function."""

    votes: np.ndarray
    columns: tuple[ColumnMeta, ...]
    pair_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        self.votes = np.asarray(self.votes, dtype=np.int8)
        if self.votes.ndim != 2:
            raise ValueError("votes must be a 2-d matrix")
        n, m = self.votes.shape
        if len(self.pair_ids) != n or len(self.columns) != m:
            raise ValueError("votes shape does not match row/column metadata")
        bad = set(np.unique(self.votes)) - {MATCH, ABSTAIN, NO_MATCH}
        if bad:
            raise ValueError(f"votes outside {{-1,0,+1}}: {sorted(bad)}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.votes.shape

    def strong_columns(self) -> list[int]:
        return [j for j, col in enumerate(self.columns) if col.strength == "strong"]


@dataclass
class LabelModelParams:
    """Fitted prior and per-column propensity/accuracy, with the LL trace."""

    prior: float
    propensity: np.ndarray
    accuracy: np.ndarray
    columns: tuple[ColumnMeta, ...]
    ll_trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "prior": self.prior,
            "columns": [
                {
                    "id": col.id,
                    "strength": col.strength,
                    "propensity": float(self.propensity[j]),
                    "accuracy": float(self.accuracy[j]),
                }
                for j, col in enumerate(self.columns)
            ],
            "llTrace": [float(v) for v in self.ll_trace],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "LabelModelParams":
        cols = doc["columns"]
        return cls(
            prior=float(doc["prior"]),
            propensity=np.array([c["propensity"] for c in cols], dtype=float),
            accuracy=np.array([c["accuracy"] for c in cols], dtype=float),
            columns=tuple(ColumnMeta(id=c["id"], strength=c["strength"]) for c in cols),
            ll_trace=[float(v) for v in doc.get("llTrace", [])],
        )


def _log_factors(
    votes: np.ndarray, propensity: np.ndarray, accuracy: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row log P(row | y=+1) and log P(row | y=−1)."""
    pos = votes == MATCH
    neg = votes == NO_MATCH
    abstain = votes == ABSTAIN
    log_fire_agree = np.log(propensity * accuracy)
    log_fire_diff = np.log(propensity * (1.0 - accuracy))
    log_quiet = np.log(1.0 - propensity)
    log_plus = pos @ log_fire_agree + neg @ log_fire_diff + abstain @ log_quiet
    log_minus = pos @ log_fire_diff + neg @ log_fire_agree + abstain @ log_quiet
    return log_plus, log_minus


def _log_likelihood(prior: float, log_plus: np.ndarray, log_minus: np.ndarray) -> float:
    stacked = np.stack(
        [np.log(prior) + log_plus, np.log(1.0 - prior) + log_minus], axis=0
    )
    peak = stacked.max(axis=0)
    return float(np.sum(peak + np.log(np.exp(stacked - peak).sum(axis=0))))


def _responsibilities(prior: float, log_plus: np.ndarray, log_minus: np.ndarray) -> np.ndarray:
    logit = np.log(prior) - np.log(1.0 - prior) + log_plus - log_minus
    return 1.0 / (1.0 + np.exp(-np.clip(logit, -500.0, 500.0)))


def fit_label_model(
    matrix: LabelMatrix,
    max_iterations: int = MAX_ITERATIONS,
    tolerance: float = LL_TOLERANCE,
) -> LabelModelParams:
    """EM fit; the observed-data log-likelihood never decreases across iterations."""
    votes = matrix.votes
    n, m = votes.shape
    if n < 1:
        raise DegenerateMatrix("label matrix has no rows")

    fired = votes != ABSTAIN
    fired_per_col = fired.sum(axis=0)
    degenerate = fired_per_col == 0
    if bool(degenerate.all()):
        raise DegenerateMatrix("every column abstains on every row")
    for j in np.flatnonzero(degenerate):
        warnings.warn(
            f"knowledge function {matrix.columns[j].id!r} abstained everywhere; "
            "its accuracy is pinned at 0.5",
            RuntimeWarning,
            stacklevel=2,
        )

    p_floor, p_ceil = 1.0 / (n + 2), (n + 1.0) / (n + 2)
    propensity = np.clip(fired_per_col / n, p_floor, p_ceil)
    accuracy = np.full(m, DEFAULT_ACCURACY)
    accuracy[degenerate] = 0.5
    prior = DEFAULT_PRIOR

    pos = votes == MATCH
    neg = votes == NO_MATCH
    ll_trace: list[float] = []
    previous_ll = -math.inf
    for _ in range(max_iterations):
        log_plus, log_minus = _log_factors(votes, propensity, accuracy)
        ll = _log_likelihood(prior, log_plus, log_minus)
        assert ll >= previous_ll - 1e-9, "EM log-likelihood decreased"
        ll_trace.append(ll)
        q = _responsibilities(prior, log_plus, log_minus)

        prior = float(np.clip(q.mean(), *_PRIOR_CLAMP))
        agree = q @ pos + (1.0 - q) @ neg
        accuracy = np.clip(agree / np.maximum(fired_per_col, 1), *_ACCURACY_CLAMP)
        accuracy[degenerate] = 0.5

        if abs(ll - previous_ll) < tolerance:
            break
        previous_ll = ll

    return LabelModelParams(
        prior=prior,
        propensity=propensity,
        accuracy=accuracy,
        columns=matrix.columns,
        ll_trace=ll_trace,
    )


def posterior(params: LabelModelParams, row: Sequence[int] | np.ndarray) -> float:
    """P(y=MATCH | vote row), in log-space; an all-abstain row returns the prior."""
    votes = np.asarray(row, dtype=np.int8).reshape(1, -1)
    if votes.shape[1] != len(params.columns):
        raise ValueError("row length does not match fitted columns")
    if not np.any(votes != ABSTAIN):
        return params.prior  # abstain likelihoods cancel exactly
    log_plus, log_minus = _log_factors(votes, params.propensity, params.accuracy)
    return float(_responsibilities(params.prior, log_plus, log_minus)[0])


def posterior_batch(params: LabelModelParams, matrix: LabelMatrix) -> np.ndarray:
    """Posterior per row; all-abstain rows get the prior exactly."""
    log_plus, log_minus = _log_factors(matrix.votes, params.propensity, params.accuracy)
    q = _responsibilities(params.prior, log_plus, log_minus)
    silent = ~np.any(matrix.votes != ABSTAIN, axis=1)
    q[silent] = params.prior
    return q
