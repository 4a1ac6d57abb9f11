"""Strong-vote overrides and greedy 1:1 concept matching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from ..errors import ConflictingStrongVotes
from .labelmodel import ABSTAIN, MATCH, NO_MATCH, LabelMatrix

PAIR_SEPARATOR = "→"  # the arrow in every pairId

DEFAULT_THRESHOLD = 0.5


def pair_id(src_name: str, tgt_name: str) -> str:
    return f"{src_name}{PAIR_SEPARATOR}{tgt_name}"


def split_pair_id(pair: str) -> tuple[str, str]:
    src, sep, tgt = pair.partition(PAIR_SEPARATOR)
    if not sep:
        raise ValueError(f"pair id {pair!r} lacks the separator")
    return src, tgt


def strong_votes_from_matrix(matrix: LabelMatrix) -> dict[str, tuple[int, ...]]:
    """Non-abstain votes of the strong columns, keyed by pairId."""
    out: dict[str, tuple[int, ...]] = {}
    for i, pid in enumerate(matrix.pair_ids):
        votes = tuple(
            int(matrix.votes[i, j])
            for j in matrix.strong_columns()
            if matrix.votes[i, j] != ABSTAIN
        )
        if votes:
            out[pid] = votes
    return out


def apply_strong_overrides(
    scores: Mapping[str, float],
    strong_votes: Mapping[str, int | Sequence[int]],
) -> dict[str, float]:
    """MATCH pins the score to 1.0, NO_MATCH to 0.0, abstain leaves it alone."""
    out = dict(scores)
    for pid, vote in strong_votes.items():
        votes = (vote,) if isinstance(vote, int) else tuple(vote)
        labels = {v for v in votes if v != ABSTAIN}
        if MATCH in labels and NO_MATCH in labels:
            raise ConflictingStrongVotes(f"strong functions disagree on {pid}")
        if MATCH in labels:
            out[pid] = 1.0
        elif NO_MATCH in labels:
            out[pid] = 0.0
    return out


@dataclass(frozen=True)
class MatchResult:
    """A feasible 1:1 matching above the threshold, plus the leftovers."""

    matches: tuple[tuple[str, float], ...]
    threshold: float
    unmatched_source: tuple[str, ...]
    unmatched_target: tuple[str, ...]
    scores: tuple[tuple[str, float], ...] = ()

    @property
    def matched_pair_ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.matches)

    @property
    def score_map(self) -> dict[str, float]:
        return dict(self.scores)

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "matches": [{"pairId": pid, "score": score} for pid, score in self.matches],
            "unmatchedSource": list(self.unmatched_source),
            "unmatchedTarget": list(self.unmatched_target),
            "scores": {pid: score for pid, score in self.scores},
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "MatchResult":
        return cls(
            matches=tuple((m["pairId"], float(m["score"])) for m in doc["matches"]),
            threshold=float(doc["threshold"]),
            unmatched_source=tuple(doc["unmatchedSource"]),
            unmatched_target=tuple(doc["unmatchedTarget"]),
            scores=tuple(sorted((k, float(v)) for k, v in doc.get("scores", {}).items())),
        )


def select_matching(
    scores: Mapping[str, float],
    threshold: float = DEFAULT_THRESHOLD,
    sources: Iterable[str] | None = None,
    targets: Iterable[str] | None = None,
) -> MatchResult:
    """Greedy by (score desc, srcName asc, tgtName asc); endpoints used once."""
    split = {pid: split_pair_id(pid) for pid in scores}
    all_sources = set(sources) if sources is not None else {s for s, _ in split.values()}
    all_targets = set(targets) if targets is not None else {t for _, t in split.values()}

    order = sorted(scores, key=lambda pid: (-scores[pid], split[pid][0], split[pid][1]))
    taken_src: set[str] = set()
    taken_tgt: set[str] = set()
    matches: list[tuple[str, float]] = []
    for pid in order:
        score = scores[pid]
        if score < threshold:
            break
        src, tgt = split[pid]
        if src in taken_src or tgt in taken_tgt:
            continue
        taken_src.add(src)
        taken_tgt.add(tgt)
        matches.append((pid, float(score)))

    return MatchResult(
        matches=tuple(matches),
        threshold=threshold,
        unmatched_source=tuple(sorted(all_sources - taken_src)),
        unmatched_target=tuple(sorted(all_targets - taken_tgt)),
        scores=tuple(sorted((pid, float(s)) for pid, s in scores.items())),
    )
