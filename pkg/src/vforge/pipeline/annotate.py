"""Annotate raw samples with candidate target concepts for the review step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from ..errors import UnknownConcept
from ..infusion.matching import split_pair_id
from ..schema_infer import KIND_ARRAY, KIND_OBJECT, SourceSchema

MAX_CANDIDATES = 3


@dataclass(frozen=True)
class Candidate:
    target_concept: str
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {"targetConcept": self.target_concept, "score": self.score}


@dataclass(frozen=True)
class Annotation:
    """One concept occurrence inside one sample."""

    source_path: str  # root-relative, e.g. "$.pos"
    source_concept: str
    candidates: tuple[Candidate, ...]
    snippet: Any  # the instance value at source_path

    def to_dict(self) -> dict[str, Any]:
        return {
            "sourcePath": self.source_path,
            "sourceConcept": self.source_concept,
            "candidates": [c.to_dict() for c in self.candidates],
            "snippet": self.snippet,
        }


@dataclass(frozen=True)
class AnnotatedSample:
    sample_index: int
    annotations: tuple[Annotation, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "sampleIndex": self.sample_index,
            "annotations": [a.to_dict() for a in self.annotations],
        }


def _top_candidates(concept: str, scores: Mapping[str, float]) -> tuple[Candidate, ...]:
    entries = []
    for pid, score in scores.items():
        src, tgt = split_pair_id(pid)
        if src == concept and score > 0.0:
            entries.append((tgt, score))
    entries.sort(key=lambda e: (-e[1], e[0]))
    return tuple(Candidate(target_concept=t, score=s) for t, s in entries[:MAX_CANDIDATES])


def _child_ref(schema: SourceSchema, concept: str, key: str) -> str | None:
    prop = schema.concepts[concept].properties.get(key)
    if prop is None:
        return None
    t = prop.type
    if t.kind == KIND_OBJECT and t.concept_ref:
        return t.concept_ref
    if t.kind == KIND_ARRAY and t.inner is not None and t.inner.kind == KIND_OBJECT:
        return t.inner.concept_ref
    return None


def _walk(
    sample: Mapping[str, Any],
    schema: SourceSchema,
    concept: str,
    path: str,
    scores: Mapping[str, float],
    out: list[Annotation],
) -> None:
    if concept not in schema.concepts:
        raise UnknownConcept(f"sample path {path!r} has no concept {concept!r} in the schema")
    known = schema.concepts[concept].properties
    for key in sample:
        if key not in known:
            raise UnknownConcept(f"sample key {path}.{key} not covered by the schema")
    out.append(
        Annotation(
            source_path=path,
            source_concept=concept,
            candidates=_top_candidates(concept, scores),
            snippet=dict(sample),
        )
    )
    for key, value in sample.items():
        child = _child_ref(schema, concept, key)
        if child is None:
            continue
        if isinstance(value, Mapping):
            _walk(value, schema, child, f"{path}.{key}", scores, out)
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, Mapping):
                    _walk(item, schema, child, f"{path}.{key}[]", scores, out)


def annotate_samples(
    samples: Sequence[Mapping[str, Any]],
    schema: SourceSchema,
    scores: Mapping[str, float],
) -> list[AnnotatedSample]:
    """Top-3 positive-score candidates for every concept occurrence, per sample."""
    annotated = []
    for index, sample in enumerate(samples):
        found: list[Annotation] = []
        _walk(sample, schema, schema.root_concept, "$", scores, found)
        annotated.append(AnnotatedSample(sample_index=index, annotations=tuple(found)))
    return annotated


def annotations_to_dicts(annotated: Sequence[AnnotatedSample]) -> list[dict[str, Any]]:
    return [a.to_dict() for a in annotated]


def annotations_from_dicts(docs: Sequence[Mapping[str, Any]]) -> list[AnnotatedSample]:
    out = []
    for doc in docs:
        out.append(
            AnnotatedSample(
                sample_index=int(doc["sampleIndex"]),
                annotations=tuple(
                    Annotation(
                        source_path=a["sourcePath"],
                        source_concept=a["sourceConcept"],
                        candidates=tuple(
                            Candidate(target_concept=c["targetConcept"], score=float(c["score"]))
                            for c in a["candidates"]
                        ),
                        snippet=a.get("snippet"),
                    )
                    for a in doc["annotations"]
                ),
            )
        )
    return out
