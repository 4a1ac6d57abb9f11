"""Review sessions: candidate decisions with 1:1 constraint propagation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from ..errors import InvalidTransition, TargetConflict, UnknownPair
from ..infusion.matching import MatchResult, pair_id, split_pair_id
from .annotate import AnnotatedSample, annotations_from_dicts, annotations_to_dicts

PENDING = "PENDING"
APPROVED = "APPROVED"
REJECTED = "REJECTED"
SUPERSEDED = "SUPERSEDED"

CANDIDATE_FLOOR = 0.1

ACTION_APPROVE = "approve"
ACTION_REJECT = "reject"
ACTION_REMAP = "remap"


@dataclass
class CandidateState:
    pair_id: str
    score: float
    recommended: bool
    status: str = PENDING
    decided_by: str | None = None  # "auto" | "human" once decided
    features: tuple[float, ...] | None = None

    def to_dict(self) -> dict[str, Any]:
        src, tgt = split_pair_id(self.pair_id)
        doc: dict[str, Any] = {
            "pairId": self.pair_id,
            "source": src,
            "target": tgt,
            "score": self.score,
            "status": self.status,
            "recommended": self.recommended,
            "decidedBy": self.decided_by,
        }
        if self.features is not None:
            doc["features"] = list(self.features)
        return doc


@dataclass
class ReviewSession:
    session_id: str
    candidates: dict[str, CandidateState]
    annotations: list[AnnotatedSample]
    log: list[dict[str, Any]] = field(default_factory=list)

    # --- queries ---------------------------------------------------------

    def candidate(self, pid: str) -> CandidateState:
        if pid not in self.candidates:
            raise UnknownPair(f"no candidate {pid!r} in session {self.session_id}")
        return self.candidates[pid]

    def by_status(self, status: str | None = None) -> list[CandidateState]:
        rows = sorted(
            self.candidates.values(),
            key=lambda c: (not c.recommended, -c.score, c.pair_id),
        )
        if status is None:
            return rows
        return [c for c in rows if c.status == status]

    def approved_pairs(self) -> list[tuple[str, str]]:
        return sorted(
            split_pair_id(c.pair_id)
            for c in self.candidates.values()
            if c.status == APPROVED
        )

    def progress(self) -> dict[str, int]:
        total = len(self.candidates)
        decided = sum(1 for c in self.candidates.values() if c.status != PENDING)
        return {"decided": decided, "total": total}

    # --- invariant --------------------------------------------------------

    def _assert_one_to_one(self) -> None:
        sources = [s for s, _ in self.approved_pairs()]
        targets = [t for _, t in self.approved_pairs()]
        assert len(set(sources)) == len(sources), "two approvals share a source"
        assert len(set(targets)) == len(targets), "two approvals share a target"


def _session_id(scores: Mapping[str, float], recommended: Iterable[str]) -> str:
    body = json.dumps(
        {"scores": dict(sorted(scores.items())), "recommended": sorted(recommended)},
        sort_keys=True,
        separators=(",", ":"),
    )
    return "rs-" + hashlib.sha256(body.encode()).hexdigest()[:12]


def create_session(
    match: MatchResult,
    annotations: Sequence[AnnotatedSample],
    features: Mapping[str, Sequence[float]] | None = None,
    floor: float = CANDIDATE_FLOOR,
) -> ReviewSession:
    """Every scored pair at or above the floor becomes a PENDING candidate."""
    scores = match.score_map
    recommended = set(match.matched_pair_ids)
    kept = {
        pid: score
        for pid, score in scores.items()
        if score >= floor or pid in recommended
    }
    candidates = {
        pid: CandidateState(
            pair_id=pid,
            score=score,
            recommended=pid in recommended,
            features=tuple(features[pid]) if features and pid in features else None,
        )
        for pid, score in sorted(kept.items())
    }
    return ReviewSession(
        session_id=_session_id(kept, recommended),
        candidates=candidates,
        annotations=list(annotations),
    )


def _supersede_competitors(session: ReviewSession, pid: str) -> list[str]:
    src, tgt = split_pair_id(pid)
    hit = []
    for other in session.candidates.values():
        if other.pair_id == pid or other.status != PENDING:
            continue
        osrc, otgt = split_pair_id(other.pair_id)
        if osrc == src or otgt == tgt:
            other.status = SUPERSEDED
            other.decided_by = "auto"
            hit.append(other.pair_id)
    return sorted(hit)


def _revive_superseded(session: ReviewSession, pid: str) -> list[str]:
    """Returns SUPERSEDED competitors of a withdrawn approval to PENDING."""
    src, tgt = split_pair_id(pid)
    blocked_src = {s for s, _ in session.approved_pairs()}
    blocked_tgt = {t for _, t in session.approved_pairs()}
    revived = []
    for other in session.candidates.values():
        if other.status != SUPERSEDED:
            continue
        osrc, otgt = split_pair_id(other.pair_id)
        if (osrc == src or otgt == tgt) and osrc not in blocked_src and otgt not in blocked_tgt:
            other.status = PENDING
            other.decided_by = None
            revived.append(other.pair_id)
    return sorted(revived)


def decide(
    session: ReviewSession,
    pid: str,
    action: str,
    target: str | None = None,
    decided_by: str = "human",
    _replaying: bool = False,
) -> dict[str, Any]:
    """Apply one decision; returns the state delta it caused."""
    cand = session.candidate(pid)
    delta: dict[str, Any] = {"pairId": pid, "action": action}

    if action == ACTION_APPROVE:
        if cand.status != PENDING:
            raise InvalidTransition(f"cannot approve {pid!r} in status {cand.status}")
        cand.status = APPROVED
        cand.decided_by = decided_by
        delta["superseded"] = _supersede_competitors(session, pid)

    elif action == ACTION_REJECT:
        if cand.status == PENDING:
            cand.status = REJECTED
            cand.decided_by = decided_by
            delta["superseded"] = []
        elif cand.status == APPROVED:
            # withdrawing an approval frees its competitors again
            cand.status = REJECTED
            cand.decided_by = decided_by
            delta["revived"] = _revive_superseded(session, pid)
        else:
            raise InvalidTransition(f"cannot reject {pid!r} in status {cand.status}")

    elif action == ACTION_REMAP:
        if not target:
            raise InvalidTransition("remap needs a target concept")
        if cand.status != PENDING:
            raise InvalidTransition(f"cannot remap {pid!r} in status {cand.status}")
        src, _ = split_pair_id(pid)
        new_pid = pair_id(src, target)
        for s, t in session.approved_pairs():
            if t == target:
                raise TargetConflict(f"target {target!r} already approved for {s!r}")
        delta["synthesized"] = new_pid not in session.candidates
        if delta["synthesized"]:
            session.candidates[new_pid] = CandidateState(
                pair_id=new_pid, score=0.0, recommended=False
            )
        new_cand = session.candidates[new_pid]
        if new_cand.status != PENDING:
            raise InvalidTransition(
                f"remap target pair {new_pid!r} is already {new_cand.status}"
            )
        new_cand.status = APPROVED
        new_cand.decided_by = decided_by
        delta["approvedPairId"] = new_pid
        delta["superseded"] = _supersede_competitors(session, new_pid)

    else:
        raise InvalidTransition(f"unknown action {action!r}")

    session._assert_one_to_one()
    entry = {"seq": len(session.log), "pairId": pid, "action": action, "decidedBy": decided_by}
    if target is not None:
        entry["target"] = target
    if "synthesized" in delta:
        entry["synthesized"] = delta["synthesized"]
    if not _replaying:
        session.log.append(entry)
    return delta


# --- persistence -----------------------------------------------------------

def session_to_dict(session: ReviewSession) -> dict[str, Any]:
    # pairs synthesized by remap re-emerge during replay, so only the
    # pre-decision candidates are persisted as the initial set
    synthesized = set()
    for entry in session.log:
        if entry["action"] == ACTION_REMAP and entry.get("synthesized"):
            src, _ = split_pair_id(entry["pairId"])
            synthesized.add(pair_id(src, entry["target"]))
    initial = {
        pid: {
            "score": c.score,
            "recommended": c.recommended,
            **({"features": list(c.features)} if c.features is not None else {}),
        }
        for pid, c in sorted(session.candidates.items())
        if pid not in synthesized
    }
    return {
        "sessionId": session.session_id,
        "initialCandidates": initial,
        "log": list(session.log),
        "annotations": annotations_to_dicts(session.annotations),
    }


def session_from_dict(doc: Mapping[str, Any]) -> ReviewSession:
    """Rebuild by replaying the decision log over the initial candidates."""
    candidates = {
        pid: CandidateState(
            pair_id=pid,
            score=float(body["score"]),
            recommended=bool(body["recommended"]),
            features=tuple(body["features"]) if "features" in body else None,
        )
        for pid, body in doc["initialCandidates"].items()
    }
    session = ReviewSession(
        session_id=doc["sessionId"],
        candidates=candidates,
        annotations=annotations_from_dicts(doc.get("annotations", [])),
        log=[],
    )
    for entry in doc.get("log", []):
        decide(
            session,
            entry["pairId"],
            entry["action"],
            target=entry.get("target"),
            decided_by=entry.get("decidedBy", "human"),
            _replaying=True,
        )
        session.log.append(dict(entry))
    return session
