"""Source-model inference from instance documents.

Folds key-value samples into a concept-per-structural-path schema with a
small type lattice. ``unify_types`` is the lattice join: commutative,
associative, idempotent, with ``text`` as the top scalar.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

from .errors import EmptyInput, NonObjectSample
from .ontology import Concept, ConceptProperty, Ontology

KIND_TEXT = "text"
KIND_NUMBER = "number"
KIND_INTEGER = "integer"
KIND_BOOLEAN = "boolean"
KIND_DATETIME = "datetime"
KIND_GEO = "geo"
KIND_NULL = "null"
KIND_ARRAY = "array"
KIND_OBJECT = "object"

SCALAR_KINDS = {KIND_TEXT, KIND_NUMBER, KIND_INTEGER, KIND_BOOLEAN, KIND_DATETIME}

MAX_SAMPLE_VALUES = 5

_DATETIME_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})?)?$"
)

_GEO_KEY_SETS = ({"lat", "lon"}, {"latitude", "longitude"})


@dataclass(frozen=True)
class InferredType:
    """A lattice term; arrays carry an inner type, objects a concept name."""

    kind: str
    nullable: bool = False
    inner: "InferredType | None" = None
    concept_ref: str | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.nullable:
            doc["nullable"] = True
        if self.inner is not None:
            doc["inner"] = self.inner.to_dict()
        if self.concept_ref is not None:
            doc["concept"] = self.concept_ref
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "InferredType":
        return cls(
            kind=doc["kind"],
            nullable=bool(doc.get("nullable", False)),
            inner=cls.from_dict(doc["inner"]) if "inner" in doc else None,
            concept_ref=doc.get("concept"),
        )


TEXT = InferredType(KIND_TEXT)
NULL = InferredType(KIND_NULL)


def unify_types(a: InferredType, b: InferredType) -> InferredType:
    """Least upper bound; incompatible combinations fall back to text."""
    nullable = a.nullable or b.nullable
    if a.kind == KIND_NULL and b.kind == KIND_NULL:
        return replace(a, nullable=nullable)
    if a.kind == KIND_NULL:
        return replace(b, nullable=True)
    if b.kind == KIND_NULL:
        return replace(a, nullable=True)

    if a.kind == KIND_ARRAY and b.kind == KIND_ARRAY:
        return InferredType(KIND_ARRAY, nullable=nullable, inner=unify_types(a.inner, b.inner))
    if a.kind == KIND_ARRAY or b.kind == KIND_ARRAY:
        return InferredType(KIND_TEXT, nullable=nullable)

    if a.kind == KIND_OBJECT and b.kind == KIND_OBJECT:
        if a.concept_ref == b.concept_ref:
            return replace(a, nullable=nullable)
        return InferredType(KIND_TEXT, nullable=nullable)
    # a geo value is an object shape; the concept absorbs it
    if a.kind == KIND_OBJECT and b.kind == KIND_GEO:
        return replace(a, nullable=nullable)
    if a.kind == KIND_GEO and b.kind == KIND_OBJECT:
        return replace(b, nullable=nullable)
    if a.kind == KIND_OBJECT or b.kind == KIND_OBJECT:
        return InferredType(KIND_TEXT, nullable=nullable)

    if a.kind == b.kind:
        return InferredType(a.kind, nullable=nullable)
    if {a.kind, b.kind} == {KIND_INTEGER, KIND_NUMBER}:
        return InferredType(KIND_NUMBER, nullable=nullable)
    return InferredType(KIND_TEXT, nullable=nullable)


@dataclass
class PropertyInference:
    """Type, multiplicity and display evidence for one source key."""

    type: InferredType
    presence_count: int = 0
    sample_values: list[Any] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": self.type.to_dict(),
            "presenceCount": self.presence_count,
            "sampleValues": list(self.sample_values),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PropertyInference":
        return cls(
            type=InferredType.from_dict(doc["type"]),
            presence_count=int(doc["presenceCount"]),
            sample_values=list(doc.get("sampleValues", [])),
        )


@dataclass
class SourceConcept:
    name: str
    properties: dict[str, PropertyInference] = field(default_factory=dict)
    parent: str | None = None
    samples_seen: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "parent": self.parent,
            "samplesSeen": self.samples_seen,
            "properties": {k: self.properties[k].to_dict() for k in sorted(self.properties)},
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SourceConcept":
        return cls(
            name=doc["name"],
            parent=doc.get("parent"),
            samples_seen=int(doc.get("samplesSeen", 0)),
            properties={
                k: PropertyInference.from_dict(v) for k, v in doc["properties"].items()
            },
        )


@dataclass
class SourceSchema:
    root_concept: str
    concepts: dict[str, SourceConcept] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rootConcept": self.root_concept,
            "concepts": [self.concepts[k].to_dict() for k in sorted(self.concepts)],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SourceSchema":
        concepts = [SourceConcept.from_dict(c) for c in doc["concepts"]]
        return cls(
            root_concept=doc["rootConcept"],
            concepts={c.name: c for c in concepts},
        )


def is_geo_shape(value: Any) -> bool:
    if not isinstance(value, dict):
        return False
    keys = set(value.keys())
    if keys not in _GEO_KEY_SETS:
        return False
    return all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value.values()
    )


def _scalar_kind(value: Any) -> str:
    if isinstance(value, bool):
        return KIND_BOOLEAN
    if isinstance(value, int):
        return KIND_INTEGER
    if isinstance(value, float):
        return KIND_NUMBER
    if isinstance(value, str):
        return KIND_DATETIME if _DATETIME_RE.match(value) else KIND_TEXT
    return KIND_TEXT


class _Node:
    """Mutable accumulator for one structural path."""

    def __init__(self, path: tuple[str, ...], parent: tuple[str, ...] | None) -> None:
        self.path = path
        self.parent = parent
        self.samples_seen = 0
        self.properties: dict[str, PropertyInference] = {}
        self._sample_keys: dict[str, set[str]] = {}

    def record(self, key: str, inferred: InferredType, value: Any) -> None:
        slot = self.properties.get(key)
        if slot is None:
            slot = PropertyInference(type=inferred)
            self.properties[key] = slot
            self._sample_keys[key] = set()
        else:
            slot.type = unify_types(slot.type, inferred)
        slot.presence_count += 1
        if len(slot.sample_values) < MAX_SAMPLE_VALUES:
            digest = json.dumps(value, sort_keys=True, default=str)
            if digest not in self._sample_keys[key]:
                self._sample_keys[key].add(digest)
                slot.sample_values.append(value)


class _Folder:
    def __init__(self, geo_enabled: bool) -> None:
        self.geo_enabled = geo_enabled
        self.nodes: dict[tuple[str, ...], _Node] = {}

    def ensure(self, path: tuple[str, ...], parent: tuple[str, ...] | None) -> _Node:
        node = self.nodes.get(path)
        if node is None:
            node = _Node(path, parent)
            self.nodes[path] = node
        return node

    def fold_object(self, value: dict[str, Any], path: tuple[str, ...]) -> None:
        node = self.ensure(path, path[:-1] if len(path) > 1 else None)
        node.samples_seen += 1
        for key, item in value.items():
            node.record(key, self.classify(item, path + (key,)), item)

    def classify(self, value: Any, child_path: tuple[str, ...]) -> InferredType:
        if value is None:
            return NULL
        if isinstance(value, dict):
            if self.geo_enabled and is_geo_shape(value):
                return InferredType(KIND_GEO)
            self.fold_object(value, child_path)
            # concept_ref carries the encoded path until names are assigned
            return InferredType(KIND_OBJECT, concept_ref=json.dumps(list(child_path)))
        if isinstance(value, list):
            inner = NULL
            for element in value:
                inner = unify_types(inner, self.classify(element, child_path))
            return InferredType(KIND_ARRAY, inner=inner)
        return InferredType(_scalar_kind(value))


def _assign_names(
    nodes: dict[tuple[str, ...], _Node], root_name: str
) -> dict[tuple[str, ...], str]:
    """Root keeps its name; nested nodes use their key, collisions get _2, _3."""
    assigned: dict[tuple[str, ...], str] = {("$",): root_name}
    used = {root_name}
    for path in sorted(p for p in nodes if p != ("$",)):
        base = path[-1]
        name = base
        serial = 1
        while name in used:
            serial += 1
            name = f"{base}_{serial}"
        used.add(name)
        assigned[path] = name
    return assigned


def _rename_refs(t: InferredType, names: dict[tuple[str, ...], str]) -> InferredType:
    if t.kind == KIND_OBJECT and t.concept_ref is not None:
        return replace(t, concept_ref=names[tuple(json.loads(t.concept_ref))])
    if t.kind == KIND_ARRAY and t.inner is not None:
        return replace(t, inner=_rename_refs(t.inner, names))
    return t


def infer_from_samples(
    samples: Iterable[Mapping[str, Any]],
    root_name: str,
    geo_enabled: bool = True,
) -> SourceSchema:
    """Structural induction over the samples; merge order never matters."""
    sample_list = list(samples)
    if not sample_list:
        raise EmptyInput("need at least one sample")
    folder = _Folder(geo_enabled)
    for index, sample in enumerate(sample_list):
        if not isinstance(sample, dict):
            raise NonObjectSample(f"sample {index} is not a key-value document")
        folder.fold_object(sample, ("$",))

    names = _assign_names(folder.nodes, root_name)
    concepts: dict[str, SourceConcept] = {}
    for path, node in folder.nodes.items():
        concept = SourceConcept(
            name=names[path],
            parent=names[node.parent] if node.parent else None,
            samples_seen=node.samples_seen,
        )
        for key in node.properties:
            slot = node.properties[key]
            concept.properties[key] = PropertyInference(
                type=_rename_refs(slot.type, names),
                presence_count=slot.presence_count,
                sample_values=slot.sample_values,
            )
        concepts[concept.name] = concept
    return SourceSchema(root_concept=root_name, concepts=concepts)


def _range_of(t: InferredType) -> str:
    if t.kind == KIND_OBJECT and t.concept_ref:
        return t.concept_ref
    if t.kind == KIND_ARRAY and t.inner is not None:
        return _range_of(t.inner)
    return t.kind


def schema_to_ontology(schema: SourceSchema) -> Ontology:
    """The schema's structural image: one concept per source concept."""
    concepts: dict[str, Concept] = {}
    for name in sorted(schema.concepts):
        source = schema.concepts[name]
        concepts[name] = Concept(
            name=name,
            parents=(source.parent,) if source.parent else (),
            properties=tuple(
                ConceptProperty(name=key, range=_range_of(source.properties[key].type))
                for key in sorted(source.properties)
            ),
        )
    return Ontology(name=schema.root_concept, concepts=concepts)
