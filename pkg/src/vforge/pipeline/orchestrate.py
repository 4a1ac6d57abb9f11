"""One-shot orchestration: samples in, reviewed translation config out."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..infusion.classifier import predict_batch, train_classifier
from ..infusion.labelmodel import fit_label_model, posterior_batch
from ..infusion.matching import (
    DEFAULT_THRESHOLD,
    MatchResult,
    apply_strong_overrides,
    select_matching,
    strong_votes_from_matrix,
)
from ..ontology import (
    FEATURE_NAMES,
    Ontology,
    apply_knowledge_functions,
    build_candidate_table,
    bundled_knowledge_functions,
)
from ..schema_infer import infer_from_samples, schema_to_ontology
from .annotate import annotate_samples, annotations_to_dicts
from .session import ReviewSession, create_session, decide, session_to_dict
from .translation import TranslationConfig, compile_config


@dataclass(frozen=True)
class PendingReview:
    """Returned instead of a config when a human decision round is required."""

    session_id: str
    session: ReviewSession
    artifacts: Mapping[str, str] = field(default_factory=dict)


@dataclass
class PipelineOptions:
    auto_approve: bool = False
    seed: int = 0  # reserved; every stage is deterministic today
    out_dir: str | None = None
    root_name: str = "source_record"
    threshold: float = DEFAULT_THRESHOLD
    geo_enabled: bool = True
    disjoint: Sequence[tuple[str, str]] = ()
    epoch: int | None = None  # provenance clock override; 0 drops timestamps


def _digest(doc: Any) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def provenance_timestamp(epoch: int | None) -> str | None:
    """ISO-8601 UTC stamp; epoch pins the clock and epoch 0 suppresses it."""
    if epoch == 0:
        return None
    if epoch is None:
        now = _dt.datetime.now(_dt.timezone.utc)
    else:
        now = _dt.datetime.fromtimestamp(epoch, _dt.timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def build_provenance(
    session: ReviewSession,
    source_ont: Ontology,
    target_ont: Ontology,
    label_model_doc: Mapping[str, Any],
    classifier_doc: Mapping[str, Any],
    epoch: int | None = None,
) -> dict[str, Any]:
    prov: dict[str, Any] = {
        "sessionId": session.session_id,
        "sourceOntology": source_ont.name,
        "targetOntology": target_ont.name,
        "labelModelHash": _digest(dict(label_model_doc)),
        "classifierHash": _digest(dict(classifier_doc)),
    }
    stamp = provenance_timestamp(epoch)
    if stamp is not None:
        prov["generatedAt"] = stamp
    return prov


class ArtifactStore:
    """Writes pipeline artifacts as stable, diff-friendly JSON files."""

    def __init__(self, out_dir: str | None):
        self.out_dir = out_dir
        self.written: dict[str, str] = {}
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

    def write(self, name: str, doc: Any) -> None:
        if not self.out_dir:
            return
        path = os.path.join(self.out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        self.written[name] = path


def run_pipeline(
    samples: Sequence[Mapping[str, Any]],
    target_ont: Ontology,
    opts: PipelineOptions | None = None,
) -> TranslationConfig | PendingReview:
    """Schema extraction, matching, annotation, review, compilation, in order."""
    opts = opts or PipelineOptions()
    store = ArtifactStore(opts.out_dir)

    # step 0: induce the source model
    schema = infer_from_samples(samples, opts.root_name, geo_enabled=opts.geo_enabled)
    store.write("schema.json", schema.to_dict())
    source_ont = schema_to_ontology(schema)
    store.write("source_ontology.json", source_ont.to_dict())

    # step 1: score every candidate pair
    table = build_candidate_table(source_ont, target_ont)
    kfs = bundled_knowledge_functions(disjoint=opts.disjoint)
    matrix = apply_knowledge_functions(table, kfs)
    store.write(
        "candidates.json",
        {
            "featureNames": list(FEATURE_NAMES),
            "pairs": [
                {"pairId": p.pair_id, "features": [float(f) for f in p.features]}
                for p in table
            ],
            "votes": {
                "columns": [{"id": c.id, "strength": c.strength} for c in matrix.columns],
                "rows": [
                    {"pairId": pid, "votes": [int(v) for v in row]}
                    for pid, row in zip(matrix.pair_ids, matrix.votes)
                ],
            },
        },
    )
    params = fit_label_model(matrix)
    label_model_doc = params.to_dict()
    store.write("label_model.json", label_model_doc)
    posteriors = posterior_batch(params, matrix)
    features = np.array([p.features for p in table], dtype=float)
    model = train_classifier(features, posteriors)
    classifier_doc = model.to_dict()
    store.write("classifier.json", classifier_doc)
    raw_scores = {
        p.pair_id: float(s) for p, s in zip(table, predict_batch(model, features))
    }
    scores = apply_strong_overrides(raw_scores, strong_votes_from_matrix(matrix))
    store.write("scores.json", scores)
    match = select_matching(
        scores,
        threshold=opts.threshold,
        sources=list(source_ont.concepts),
        targets=list(target_ont.concepts),
    )
    store.write("match.json", match.to_dict())

    # step 2: annotate the instance data with the candidates
    annotations = annotate_samples(samples, schema, scores)
    store.write("annotations.json", annotations_to_dicts(annotations))

    # step 3: review session; recommended pairs auto-approved only on request
    feature_map = {p.pair_id: [float(f) for f in p.features] for p in table}
    session = create_session(match, annotations, features=feature_map)
    if not opts.auto_approve:
        store.write("session.json", session_to_dict(session))
        return PendingReview(
            session_id=session.session_id, session=session, artifacts=dict(store.written)
        )
    for cand in list(session.candidates.values()):
        if cand.recommended and cand.status == "PENDING":
            decide(session, cand.pair_id, "approve", decided_by="auto")
    store.write("session.json", session_to_dict(session))

    # step 4: compile the approved mapping
    provenance = build_provenance(
        session, source_ont, target_ont, label_model_doc, classifier_doc, epoch=opts.epoch
    )
    config = compile_config(session, schema, target_ont, provenance=provenance)
    store.write("translation_config.json", config.to_dict())
    return config
