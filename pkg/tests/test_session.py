"""Review sessions: floor, propagation, replay, and the 1:1 invariant."""

from __future__ import annotations

import random

import pytest

from vforge.errors import InvalidTransition, TargetConflict, UnknownPair
from vforge.infusion.matching import pair_id, select_matching
from vforge.pipeline.session import (
    ACTION_APPROVE,
    ACTION_REJECT,
    ACTION_REMAP,
    APPROVED,
    CANDIDATE_FLOOR,
    PENDING,
    REJECTED,
    SUPERSEDED,
    create_session,
    decide,
    session_from_dict,
    session_to_dict,
)

from conftest import random_name


def make_session(scores, threshold=0.5, annotations=()):
    return create_session(select_matching(scores, threshold=threshold), list(annotations))


def snapshot(session):
    return {
        pid: (c.status, c.decided_by, c.score, c.recommended)
        for pid, c in session.candidates.items()
    }


def oracle_assert_one_to_one(session):
    """Recount approved endpoints without going through session helpers."""
    sources, targets = [], []
    for pid, cand in session.candidates.items():
        if cand.status == APPROVED:
            src, _, tgt = pid.partition("→")
            sources.append(src)
            targets.append(tgt)
    assert len(sources) == len(set(sources))
    assert len(targets) == len(set(targets))


# --- creation ---------------------------------------------------------------

def test_floor_excludes_weak_pairs_unless_recommended():
    scores = {
        pair_id("a", "X"): 0.95,
        pair_id("a", "Y"): 0.09,   # below floor, dropped
        pair_id("b", "Y"): 0.10,   # exactly at floor, kept
        pair_id("c", "Z"): 0.04,
    }
    session = make_session(scores)
    assert set(session.candidates) == {pair_id("a", "X"), pair_id("b", "Y")}
    assert all(c.status == PENDING for c in session.candidates.values())


def test_recommended_flags_equal_match_result_matches():
    scores = {
        pair_id("a", "X"): 0.9,
        pair_id("b", "Y"): 0.7,
        pair_id("b", "X"): 0.6,  # loses X to the greedy matcher
        pair_id("c", "Z"): 0.2,  # above floor, below threshold
    }
    match = select_matching(scores)
    session = create_session(match, [])
    flagged = {pid for pid, c in session.candidates.items() if c.recommended}
    assert flagged == set(match.matched_pair_ids)
    scored = {pid: session.candidates[pid].score for pid in session.candidates}
    assert scored == {pid: scores[pid] for pid in scored}


def test_empty_match_result_keeps_only_pairs_at_floor():
    scores = {pair_id("a", "X"): 0.3, pair_id("b", "Y"): 0.01}
    session = make_session(scores, threshold=0.99)
    assert set(session.candidates) == {pair_id("a", "X")}
    assert not any(c.recommended for c in session.candidates.values())


def test_session_id_is_deterministic_and_input_sensitive():
    scores = {pair_id("a", "X"): 0.8, pair_id("b", "Y"): 0.6}
    one = make_session(scores)
    two = make_session(dict(reversed(list(scores.items()))))
    assert one.session_id == two.session_id
    assert one.session_id.startswith("rs-")
    assert len(one.session_id) == len("rs-") + 12
    other = make_session({**scores, pair_id("a", "X"): 0.81})
    assert other.session_id != one.session_id


# --- decide: pinned transitions ----------------------------------------------

def test_approve_supersedes_pending_competitors():
    scores = {
        pair_id("A", "X"): 0.9,
        pair_id("A", "Y"): 0.8,  # shares source A
        pair_id("B", "X"): 0.7,  # shares target X
        pair_id("B", "Z"): 0.6,  # untouched
    }
    session = make_session(scores, threshold=0.95)
    delta = decide(session, pair_id("A", "X"), ACTION_APPROVE)
    assert session.candidate(pair_id("A", "X")).status == APPROVED
    assert session.candidate(pair_id("A", "Y")).status == SUPERSEDED
    assert session.candidate(pair_id("B", "X")).status == SUPERSEDED
    assert session.candidate(pair_id("B", "Z")).status == PENDING
    assert delta["superseded"] == sorted([pair_id("A", "Y"), pair_id("B", "X")])
    assert session.candidate(pair_id("A", "Y")).decided_by == "auto"


def test_reject_then_approve_is_invalid():
    session = make_session({pair_id("A", "X"): 0.9})
    decide(session, pair_id("A", "X"), ACTION_REJECT)
    assert session.candidate(pair_id("A", "X")).status == REJECTED
    with pytest.raises(InvalidTransition):
        decide(session, pair_id("A", "X"), ACTION_APPROVE)


def test_double_approve_is_invalid():
    session = make_session({pair_id("A", "X"): 0.9})
    decide(session, pair_id("A", "X"), ACTION_APPROVE)
    with pytest.raises(InvalidTransition):
        decide(session, pair_id("A", "X"), ACTION_APPROVE)


def test_unknown_pair_and_unknown_action():
    session = make_session({pair_id("A", "X"): 0.9})
    with pytest.raises(UnknownPair):
        decide(session, pair_id("A", "nope"), ACTION_APPROVE)
    with pytest.raises(InvalidTransition):
        decide(session, pair_id("A", "X"), "promote")


def test_remap_synthesizes_and_approves_new_pair():
    scores = {pair_id("A", "X"): 0.9, pair_id("A", "Y"): 0.6}
    session = make_session(scores, threshold=0.95)
    delta = decide(session, pair_id("A", "X"), ACTION_REMAP, target="Z")
    new_pid = pair_id("A", "Z")
    assert delta["approvedPairId"] == new_pid
    assert session.candidate(new_pid).status == APPROVED
    assert session.candidate(new_pid).score == 0.0
    assert not session.candidate(new_pid).recommended
    # propagation runs for the synthesized pair's endpoints
    assert session.candidate(pair_id("A", "X")).status == SUPERSEDED
    assert session.candidate(pair_id("A", "Y")).status == SUPERSEDED
    assert session.approved_pairs() == [("A", "Z")]


def test_remap_to_existing_candidate_approves_it():
    scores = {pair_id("A", "X"): 0.9, pair_id("A", "Y"): 0.6}
    session = make_session(scores, threshold=0.95)
    decide(session, pair_id("A", "X"), ACTION_REMAP, target="Y")
    assert session.candidate(pair_id("A", "Y")).status == APPROVED
    assert session.candidate(pair_id("A", "Y")).score == 0.6


def test_remap_to_occupied_target_conflicts():
    scores = {pair_id("A", "X"): 0.9, pair_id("B", "Y"): 0.8}
    session = make_session(scores, threshold=0.95)
    decide(session, pair_id("A", "X"), ACTION_APPROVE)
    with pytest.raises(TargetConflict):
        decide(session, pair_id("B", "Y"), ACTION_REMAP, target="X")
    # the failed remap left no trace
    assert session.candidate(pair_id("B", "Y")).status == PENDING
    assert session.approved_pairs() == [("A", "X")]


def test_remap_requires_target():
    session = make_session({pair_id("A", "X"): 0.9})
    with pytest.raises(InvalidTransition):
        decide(session, pair_id("A", "X"), ACTION_REMAP)


def test_reject_undo_revives_only_unblocked_competitors():
    scores = {
        pair_id("A", "X"): 0.9,
        pair_id("A", "Y"): 0.8,
        pair_id("B", "X"): 0.7,
        pair_id("B", "Y"): 0.6,
    }
    session = make_session(scores, threshold=0.95)
    decide(session, pair_id("A", "X"), ACTION_APPROVE)   # supersedes A→Y, B→X
    decide(session, pair_id("B", "Y"), ACTION_APPROVE)   # blocks Y and B
    delta = decide(session, pair_id("A", "X"), ACTION_REJECT)
    # A→Y stays blocked by B→Y's target, B→X by B→Y's source
    assert delta["revived"] == []
    assert session.candidate(pair_id("A", "Y")).status == SUPERSEDED
    decide(session, pair_id("B", "Y"), ACTION_REJECT)
    assert session.candidate(pair_id("A", "Y")).status == PENDING
    assert session.candidate(pair_id("B", "X")).status == PENDING


def test_reject_undo_simple_revival():
    scores = {pair_id("A", "X"): 0.9, pair_id("A", "Y"): 0.8}
    session = make_session(scores, threshold=0.95)
    decide(session, pair_id("A", "X"), ACTION_APPROVE)
    assert session.candidate(pair_id("A", "Y")).status == SUPERSEDED
    delta = decide(session, pair_id("A", "X"), ACTION_REJECT)
    assert delta["revived"] == [pair_id("A", "Y")]
    assert session.candidate(pair_id("A", "Y")).status == PENDING
    assert session.candidate(pair_id("A", "X")).status == REJECTED


def test_progress_counts_decided_candidates():
    scores = {pair_id("A", "X"): 0.9, pair_id("A", "Y"): 0.8, pair_id("B", "Z"): 0.7}
    session = make_session(scores, threshold=0.95)
    assert session.progress() == {"decided": 0, "total": 3}
    decide(session, pair_id("A", "X"), ACTION_APPROVE)  # also supersedes A→Y
    assert session.progress() == {"decided": 2, "total": 3}
    decide(session, pair_id("B", "Z"), ACTION_REJECT)
    assert session.progress() == {"decided": 3, "total": 3}


def test_by_status_orders_recommended_first_then_score():
    scores = {
        pair_id("a", "X"): 0.9,   # recommended
        pair_id("b", "Y"): 0.95,  # recommended, higher score
        pair_id("c", "Z"): 0.45,  # not recommended
        pair_id("d", "W"): 0.30,
    }
    session = make_session(scores)
    assert [c.pair_id for c in session.by_status()] == [
        pair_id("b", "Y"),
        pair_id("a", "X"),
        pair_id("c", "Z"),
        pair_id("d", "W"),
    ]
    assert [c.pair_id for c in session.by_status(PENDING)] == [
        c.pair_id for c in session.by_status()
    ]
    decide(session, pair_id("c", "Z"), ACTION_REJECT)
    assert [c.pair_id for c in session.by_status(REJECTED)] == [pair_id("c", "Z")]


# --- persistence -------------------------------------------------------------

def test_log_replay_reproduces_state():
    scores = {
        pair_id("A", "X"): 0.9,
        pair_id("A", "Y"): 0.8,
        pair_id("B", "X"): 0.7,
        pair_id("C", "Z"): 0.6,
    }
    session = make_session(scores, threshold=0.95)
    decide(session, pair_id("A", "X"), ACTION_APPROVE)
    decide(session, pair_id("A", "X"), ACTION_REJECT)
    decide(session, pair_id("C", "Z"), ACTION_REMAP, target="Q")
    decide(session, pair_id("A", "Y"), ACTION_APPROVE, decided_by="auto")

    restored = session_from_dict(session_to_dict(session))
    assert snapshot(restored) == snapshot(session)
    assert restored.log == session.log
    assert restored.session_id == session.session_id
    # replay constructs the remap-synthesized pair rather than persisting it
    assert pair_id("C", "Q") not in session_to_dict(session)["initialCandidates"]
    assert restored.candidate(pair_id("C", "Q")).status == APPROVED


def test_random_decision_sequences_hold_the_invariant_and_replay():
    rng = random.Random(1106)
    for round_no in range(30):
        sources = [random_name(rng, 1, 4) for _ in range(rng.randint(2, 5))]
        targets = [random_name(rng, 1, 4).upper() for _ in range(rng.randint(2, 5))]
        scores = {
            pair_id(s, t): round(rng.random(), 3)
            for s in sources
            for t in targets
            if rng.random() < 0.7
        }
        if not scores:
            continue
        session = make_session(scores, threshold=rng.choice([0.3, 0.6, 0.9]))
        pids = list(session.candidates)
        for _ in range(rng.randint(0, 12)):
            if not pids:
                break
            action = rng.choice([ACTION_APPROVE, ACTION_REJECT, ACTION_REMAP])
            pid = rng.choice(pids)
            target = rng.choice(targets) if action == ACTION_REMAP else None
            try:
                decide(session, pid, action, target=target)
            except (InvalidTransition, TargetConflict):
                pass
            oracle_assert_one_to_one(session)
            pids = list(session.candidates)
        restored = session_from_dict(session_to_dict(session))
        assert snapshot(restored) == snapshot(session), f"round {round_no} diverged"
        assert session_to_dict(restored) == session_to_dict(session)


def test_floor_constant_pinned():
    assert CANDIDATE_FLOOR == 0.1
