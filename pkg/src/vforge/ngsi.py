"""Neutral exchange format: NGSI-LD entities as property graphs.

Entities are URI-identified, typed nodes carrying Properties (values) and
Relationships (references to other entities). The canonical document form
is a flat JSON object with ``id``, ``type`` and one object per attribute;
serialization is deterministic so equal entities produce identical bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import AmbiguousAttribute, MalformedDocument, MissingField, ReservedName

RESERVED_ENTITY_KEYS = ("id", "type")
_ATTR_SCALAR_KEYS = ("type", "value", "object", "observedAt", "unitCode")

# ISO-8601 with a mandatory timezone designator, e.g. 2024-05-01T12:30:00Z
_OBSERVED_AT_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})$"
)


class AttributeKind(str, Enum):
    PROPERTY = "Property"
    RELATIONSHIP = "Relationship"


def validate_entity_id(value: Any) -> str:
    """Check the EntityId invariants: non-empty text containing a ':'."""
    if not isinstance(value, str) or not value:
        raise MalformedDocument(f"entity id must be non-empty text, got {value!r}")
    if ":" not in value:
        raise MalformedDocument(f"entity id {value!r} has no URI scheme separator ':'")
    return value


def canonical_entity_id(entity_type: str, suffix: str) -> str:
    """Render the canonical id template ``urn:ngsi-ld:{Type}:{suffix}``."""
    return f"urn:ngsi-ld:{entity_type}:{suffix}"


@dataclass(frozen=True)
class Attribute:
    """One edge of the property graph: a Property or a Relationship.

    A Property carries ``value`` and never ``object``; a Relationship
    carries ``object`` (a target entity id) and never ``value``.
    """

    kind: AttributeKind
    value: Any = None
    object: str | None = None
    observed_at: str | None = None
    unit_code: str | None = None
    sub_attributes: tuple[tuple[str, "Attribute"], ...] = ()

    def __post_init__(self) -> None:
        if self.kind is AttributeKind.PROPERTY and self.object is not None:
            raise AmbiguousAttribute("Property must not carry an object")
        if self.kind is AttributeKind.RELATIONSHIP:
            if self.value is not None:
                raise AmbiguousAttribute("Relationship must not carry a value")
            validate_entity_id(self.object)
        if self.observed_at is not None and not _OBSERVED_AT_RE.match(self.observed_at):
            raise MalformedDocument(
                f"observedAt {self.observed_at!r} is not ISO-8601 with timezone"
            )

    @property
    def subs(self) -> dict[str, "Attribute"]:
        return dict(self.sub_attributes)


def _attribute_pairs(
    items: Mapping[str, Attribute] | Iterable[tuple[str, Attribute]] | None,
) -> tuple[tuple[str, Attribute], ...]:
    if items is None:
        return ()
    if isinstance(items, Mapping):
        return tuple(items.items())
    return tuple(items)


def property_of(
    value: Any,
    observed_at: str | None = None,
    unit_code: str | None = None,
    sub_attributes: Mapping[str, Attribute] | Iterable[tuple[str, Attribute]] | None = None,
) -> Attribute:
    """Convenience constructor for a Property attribute."""
    return Attribute(
        kind=AttributeKind.PROPERTY,
        value=value,
        observed_at=observed_at,
        unit_code=unit_code,
        sub_attributes=_attribute_pairs(sub_attributes),
    )


def relationship_of(
    target: str,
    observed_at: str | None = None,
    sub_attributes: Mapping[str, Attribute] | Iterable[tuple[str, Attribute]] | None = None,
) -> Attribute:
    """Convenience constructor for a Relationship attribute."""
    return Attribute(
        kind=AttributeKind.RELATIONSHIP,
        object=target,
        observed_at=observed_at,
        sub_attributes=_attribute_pairs(sub_attributes),
    )


@dataclass(frozen=True)
class Entity:
    """An NGSI-LD entity: URI id, one or more types, ordered attributes."""

    id: str
    types: tuple[str, ...]
    attributes: tuple[tuple[str, Attribute], ...] = ()

    def __post_init__(self) -> None:
        validate_entity_id(self.id)
        if not self.types:
            raise MissingField("entity needs at least one type")
        seen: set[str] = set()
        for name, _ in self.attributes:
            if name in RESERVED_ENTITY_KEYS:
                raise ReservedName(f"attribute name {name!r} is reserved")
            if name in seen:
                raise MalformedDocument(f"duplicate attribute name {name!r}")
            seen.add(name)

    @property
    def attrs(self) -> dict[str, Attribute]:
        return dict(self.attributes)

    def attribute(self, name: str) -> Attribute:
        for key, attr in self.attributes:
            if key == name:
                return attr
        raise KeyError(name)


def make_entity(
    entity_id: str,
    entity_type: str | Iterable[str],
    attributes: Mapping[str, Attribute] | Iterable[tuple[str, Attribute]] | None = None,
) -> Entity:
    """Build an Entity from a type (or types) and named attributes in order."""
    if isinstance(entity_type, str):
        types: tuple[str, ...] = (entity_type,)
    else:
        types = tuple(dict.fromkeys(entity_type))
    if attributes is None:
        pairs: tuple[tuple[str, Attribute], ...] = ()
    elif isinstance(attributes, Mapping):
        pairs = tuple(attributes.items())
    else:
        pairs = tuple(attributes)
    return Entity(id=entity_id, types=types, attributes=pairs)


# --- document conversion ----------------------------------------------------

def attribute_to_document(attr: Attribute) -> dict[str, Any]:
    """Render an attribute in canonical key order."""
    doc: dict[str, Any] = {"type": attr.kind.value}
    if attr.kind is AttributeKind.PROPERTY:
        doc["value"] = attr.value
    else:
        doc["object"] = attr.object
    if attr.observed_at is not None:
        doc["observedAt"] = attr.observed_at
    if attr.unit_code is not None:
        doc["unitCode"] = attr.unit_code
    for name, sub in attr.sub_attributes:
        doc[name] = attribute_to_document(sub)
    return doc


def attribute_from_document(doc: Any, context: str = "attribute") -> Attribute:
    """Parse one attribute object, recursing into sub-attributes."""
    if not isinstance(doc, dict):
        raise MalformedDocument(f"{context} must be an object, got {type(doc).__name__}")
    has_value = "value" in doc
    has_object = "object" in doc
    if has_value and has_object:
        raise AmbiguousAttribute(f"{context} carries both value and object")
    if not has_value and not has_object:
        raise MissingField(f"{context} carries neither value nor object")

    declared = doc.get("type")
    inferred = AttributeKind.PROPERTY if has_value else AttributeKind.RELATIONSHIP
    if declared is not None:
        if declared not in (k.value for k in AttributeKind):
            raise MalformedDocument(f"{context} has unknown attribute type {declared!r}")
        if AttributeKind(declared) is not inferred:
            raise MalformedDocument(
                f"{context} declares {declared} but carries "
                f"{'value' if has_value else 'object'}"
            )

    observed_at = doc.get("observedAt")
    if observed_at is not None and not isinstance(observed_at, str):
        raise MalformedDocument(f"{context}.observedAt must be text")
    unit_code = doc.get("unitCode")
    if unit_code is not None and not isinstance(unit_code, str):
        raise MalformedDocument(f"{context}.unitCode must be text")

    subs: list[tuple[str, Attribute]] = []
    for key, sub in doc.items():
        if key in _ATTR_SCALAR_KEYS:
            continue
        if not isinstance(sub, dict):
            raise MalformedDocument(f"{context}.{key} is not a recognised attribute field")
        subs.append((key, attribute_from_document(sub, context=f"{context}.{key}")))

    if inferred is AttributeKind.PROPERTY:
        return Attribute(
            kind=inferred,
            value=doc["value"],
            observed_at=observed_at,
            unit_code=unit_code,
            sub_attributes=tuple(subs),
        )
    target = doc["object"]
    if not isinstance(target, str):
        raise MalformedDocument(f"{context}.object must be an entity id")
    return Attribute(
        kind=inferred,
        object=target,
        observed_at=observed_at,
        unit_code=unit_code,
        sub_attributes=tuple(subs),
    )


def entity_to_document(entity: Entity) -> dict[str, Any]:
    """Render the canonical document: id, type, then attributes in order."""
    doc: dict[str, Any] = {"id": entity.id}
    doc["type"] = entity.types[0] if len(entity.types) == 1 else list(entity.types)
    for name, attr in entity.attributes:
        doc[name] = attribute_to_document(attr)
    return doc


def entity_from_document(doc: Any) -> Entity:
    """Build an Entity from an already-parsed document object."""
    if not isinstance(doc, dict):
        raise MalformedDocument(f"entity document must be an object, got {type(doc).__name__}")
    if "id" not in doc:
        raise MissingField("entity document has no id")
    if "type" not in doc:
        raise MissingField("entity document has no type")

    raw_type = doc["type"]
    if isinstance(raw_type, str):
        types: tuple[str, ...] = (raw_type,)
    elif isinstance(raw_type, list) and raw_type and all(isinstance(t, str) for t in raw_type):
        types = tuple(dict.fromkeys(raw_type))
    else:
        raise MalformedDocument(f"entity type must be text or a list of text, got {raw_type!r}")

    attributes: list[tuple[str, Attribute]] = []
    for key, value in doc.items():
        if key in RESERVED_ENTITY_KEYS:
            continue
        if key.startswith("@"):
            raise MalformedDocument(f"unknown reserved key {key!r}")
        attributes.append((key, attribute_from_document(value, context=key)))

    return Entity(id=validate_entity_id(doc["id"]), types=types, attributes=tuple(attributes))


def canonical_json(doc: Any) -> str:
    """Serialize a document with the canonical compact layout."""
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def parse_entity(document: str) -> Entity:
    """Parse a canonical entity document from text."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid document syntax: {exc}") from exc
    return entity_from_document(doc)


def serialize_entity(entity: Entity) -> str:
    """Serialize to the canonical text form (pure and deterministic)."""
    return canonical_json(entity_to_document(entity))


def apply_update(entity: Entity, name: str, attr: Attribute) -> Entity:
    """Upsert one attribute: replace wholesale if present, else append."""
    if name in RESERVED_ENTITY_KEYS:
        raise ReservedName(f"cannot update reserved name {name!r}")
    replaced = False
    attributes: list[tuple[str, Attribute]] = []
    for key, existing in entity.attributes:
        if key == name:
            attributes.append((key, attr))
            replaced = True
        else:
            attributes.append((key, existing))
    if not replaced:
        attributes.append((name, attr))
    return Entity(id=entity.id, types=entity.types, attributes=tuple(attributes))


# --- batch files ------------------------------------------------------------

def load_entity_batch(text: str) -> list[Entity]:
    """Parse the batch file format: one entity document per line."""
    return [parse_entity(line) for line in text.splitlines() if line.strip()]


def dump_entity_batch(entities: Iterable[Entity]) -> str:
    """Render the batch file format: one canonical document per line."""
    return "".join(serialize_entity(e) + "\n" for e in entities)


# --- term expansion ---------------------------------------------------------

_CORE_IRI_BASE = "https://uri.etsi.org/ngsi-ld/"

DEFAULT_CORE_CONTEXT: dict[str, str] = {
    "Property": _CORE_IRI_BASE + "Property",
    "Relationship": _CORE_IRI_BASE + "Relationship",
    "observedAt": _CORE_IRI_BASE + "observedAt",
    "unitCode": _CORE_IRI_BASE + "unitCode",
    "location": _CORE_IRI_BASE + "location",
}


@dataclass(frozen=True)
class ContextMap:
    """A single flat short-name to IRI map (no remote context fetching).

    Expansion followed by compaction is the identity on every short name
    the map defines, which requires the IRI side to be duplicate-free.
    """

    terms: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        merged = dict(DEFAULT_CORE_CONTEXT)
        merged.update(self.terms)
        object.__setattr__(self, "terms", merged)
        reverse: dict[str, str] = {}
        for short, iri in merged.items():
            if iri in reverse:
                raise ValueError(f"IRI {iri} mapped from both {reverse[iri]!r} and {short!r}")
            reverse[iri] = short
        object.__setattr__(self, "_reverse", reverse)

    def expand(self, short_name: str) -> str:
        return self.terms.get(short_name, short_name)

    def compact(self, iri: str) -> str:
        return getattr(self, "_reverse").get(iri, iri)
