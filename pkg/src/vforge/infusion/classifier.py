"""Logistic regression trained on probabilistic labels, written out by hand.

Full-batch gradient descent on the mean cross-entropy against soft labels
q plus an L2 penalty on the feature weights (bias unregularized). Training
is deterministic: zero-initialized weights, no shuffling, fixed schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..errors import EmptyTrainingSet

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 500
DEFAULT_L2 = 1e-3
GRADIENT_STOP = 1e-6

_SCORE_CLIP = 30.0  # keeps predicted scores strictly inside (0, 1)


@dataclass(frozen=True)
class TrainingHyper:
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    l2: float = DEFAULT_L2
    gradient_stop: float = GRADIENT_STOP

    def to_dict(self) -> dict[str, Any]:
        return {
            "learningRate": self.learning_rate,
            "epochs": self.epochs,
            "l2": self.l2,
            "gradientStop": self.gradient_stop,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "TrainingHyper":
        return cls(
            learning_rate=float(doc["learningRate"]),
            epochs=int(doc["epochs"]),
            l2=float(doc["l2"]),
            gradient_stop=float(doc["gradientStop"]),
        )


@dataclass
class ClassifierModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    hyper: TrainingHyper = field(default_factory=TrainingHyper)

    def to_dict(self) -> dict[str, Any]:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
            "hyper": self.hyper.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ClassifierModel":
        return cls(
            weights=np.array(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            mean=np.array(doc["mean"], dtype=float),
            scale=np.array(doc["scale"], dtype=float),
            hyper=TrainingHyper.from_dict(doc["hyper"]),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    # -log(1+e^{-z}) when z >= 0, z - log(1+e^{z}) otherwise; never overflows
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = -np.log1p(np.exp(-z[pos]))
    out[~pos] = z[~pos] - np.log1p(np.exp(z[~pos]))
    return out


def standardize_fit(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and deviations; zero-variance columns get scale 1."""
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    features: np.ndarray,
    soft_labels: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy vs soft labels plus (l2/2)|w|²; bias unpenalized."""
    n = features.shape[0]
    z = features @ weights + bias
    log_sig = _log_sigmoid(z)
    log_one_minus = _log_sigmoid(-z)
    data_loss = -np.mean(soft_labels * log_sig + (1.0 - soft_labels) * log_one_minus)
    loss = float(data_loss + 0.5 * l2 * float(weights @ weights))
    residual = _sigmoid(z) - soft_labels
    grad_w = features.T @ residual / n + l2 * weights
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def train_classifier(
    features: Sequence[Sequence[float]] | np.ndarray,
    soft_labels: Sequence[float] | np.ndarray,
    hyper: TrainingHyper | None = None,
) -> ClassifierModel:
    hyper = hyper or TrainingHyper()
    X = np.asarray(features, dtype=float)
    q = np.asarray(soft_labels, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("need a non-empty 2-d feature matrix")
    if X.shape[0] != q.shape[0]:
        raise EmptyTrainingSet("feature rows and soft labels differ in length")
    if X.shape[0] < 2:
        raise EmptyTrainingSet("need at least two training rows")

    mean, scale = standardize_fit(X)
    Xs = (X - mean) / scale
    weights = np.zeros(X.shape[1])
    bias = 0.0
    for _ in range(hyper.epochs):
        _, grad_w, grad_b = loss_and_gradient(weights, bias, Xs, q, hyper.l2)
        if max(float(np.abs(grad_w).max()), abs(grad_b)) < hyper.gradient_stop:
            break
        weights = weights - hyper.learning_rate * grad_w
        bias = bias - hyper.learning_rate * grad_b
    return ClassifierModel(weights=weights, bias=bias, mean=mean, scale=scale, hyper=hyper)


def predict(model: ClassifierModel, x: Sequence[float] | np.ndarray) -> float:
    xs = (np.asarray(x, dtype=float) - model.mean) / model.scale
    z = float(xs @ model.weights + model.bias)
    return float(_sigmoid(np.array(np.clip(z, -_SCORE_CLIP, _SCORE_CLIP))))


def predict_batch(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(features, dtype=float) - model.mean) / model.scale
    z = np.clip(Xs @ model.weights + model.bias, -_SCORE_CLIP, _SCORE_CLIP)
    return _sigmoid(z)
