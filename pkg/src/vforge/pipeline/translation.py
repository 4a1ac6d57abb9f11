"""Compile approved concept mappings into executable translation configs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..errors import ConfigNotFound, MissingIdField, NoApprovedPairs
from ..ngsi import Attribute, Entity, property_of, relationship_of
from ..ontology import Ontology, name_similarity, tokenize_name
from ..schema_infer import KIND_ARRAY, KIND_OBJECT, SourceSchema
from .session import ReviewSession

PROPERTY_MATCH_THRESHOLD = 0.6

KIND_PROPERTY = "Property"
KIND_RELATIONSHIP = "Relationship"

TRANSFORM_IDENTITY = "identity"
TRANSFORM_DATETIME = "datetime-normalize"
TRANSFORM_GEO = "geo-point"

CONFIG_VERSION = 1


@dataclass(frozen=True)
class AttributeRule:
    source_path: str  # key in the source record
    target_name: str
    kind: str  # Property | Relationship
    transform: str = TRANSFORM_IDENTITY
    child_concept: str | None = None  # set when the value is a mapped child record
    ref_type: str | None = None  # concept scalar references are lifted to ids of this type

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "sourcePath": self.source_path,
            "targetName": self.target_name,
            "kind": self.kind,
            "transform": self.transform,
        }
        if self.child_concept is not None:
            doc["childConcept"] = self.child_concept
        if self.ref_type is not None:
            doc["refType"] = self.ref_type
        return doc


@dataclass(frozen=True)
class TranslationRule:
    source_concept: str
    entity_type: str
    id_template: str  # contains {field} placeholders or {hash}
    attribute_rules: tuple[AttributeRule, ...]
    carry_over: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "sourceConcept": self.source_concept,
            "entityType": self.entity_type,
            "idTemplate": self.id_template,
            "attributeRules": [r.to_dict() for r in self.attribute_rules],
            "carryOver": list(self.carry_over),
        }


@dataclass(frozen=True)
class TranslationConfig:
    rules: tuple[TranslationRule, ...]
    root_concept: str
    version: int = CONFIG_VERSION
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def rule_for(self, source_concept: str) -> TranslationRule | None:
        for rule in self.rules:
            if rule.source_concept == source_concept:
                return rule
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "rootConcept": self.root_concept,
            "provenance": dict(self.provenance),
            "rules": [r.to_dict() for r in self.rules],
        }


def config_from_dict(doc: Mapping[str, Any]) -> TranslationConfig:
    rules = tuple(
        TranslationRule(
            source_concept=r["sourceConcept"],
            entity_type=r["entityType"],
            id_template=r["idTemplate"],
            attribute_rules=tuple(
                AttributeRule(
                    source_path=a["sourcePath"],
                    target_name=a["targetName"],
                    kind=a["kind"],
                    transform=a.get("transform", TRANSFORM_IDENTITY),
                    child_concept=a.get("childConcept"),
                    ref_type=a.get("refType"),
                )
                for a in r["attributeRules"]
            ),
            carry_over=tuple(r.get("carryOver", ())),
        )
        for r in doc["rules"]
    )
    return TranslationConfig(
        rules=rules,
        root_concept=doc["rootConcept"],
        version=int(doc.get("version", CONFIG_VERSION)),
        provenance=dict(doc.get("provenance", {})),
    )


def save_config(config: TranslationConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_config(path: str) -> TranslationConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return config_from_dict(json.load(fh))
    except OSError as exc:
        raise ConfigNotFound(f"cannot read translation config {path!r}") from exc


# --- compilation ---------------------------------------------------------------

def _property_similarity(source_key: str, target_prop) -> float:
    best = name_similarity(source_key, target_prop.name)
    for synonym in target_prop.synonyms:
        best = max(best, name_similarity(source_key, synonym))
    return best


def _match_properties(
    source_keys: Sequence[str], target_props: Sequence[Any]
) -> dict[str, Any]:
    """Greedy 1:1 source-key to target-property assignment above the threshold."""
    scored = []
    for key in source_keys:
        for prop in target_props:
            sim = _property_similarity(key, prop)
            if sim >= PROPERTY_MATCH_THRESHOLD:
                scored.append((sim, key, prop))
    scored.sort(key=lambda e: (-e[0], e[1], e[2].name))
    taken_keys: set[str] = set()
    taken_props: set[str] = set()
    assignment: dict[str, Any] = {}
    for sim, key, prop in scored:
        if key in taken_keys or prop.name in taken_props:
            continue
        taken_keys.add(key)
        taken_props.add(prop.name)
        assignment[key] = prop
    return assignment


def _transform_for(range_name: str) -> str:
    if range_name == "geo":
        return TRANSFORM_GEO
    if range_name == "datetime":
        return TRANSFORM_DATETIME
    return TRANSFORM_IDENTITY


def _id_template(
    entity_type: str, source_keys: Sequence[str], assignment: Mapping[str, Any]
) -> str:
    # a key qualifies by carrying an "id" token itself, or by mapping onto
    # a target property that does (e.g. station -> stationId)
    for key in source_keys:
        if "id" in tokenize_name(key):
            return f"urn:ngsi-ld:{entity_type}:{{{key}}}"
        if key in assignment and "id" in tokenize_name(assignment[key].name):
            return f"urn:ngsi-ld:{entity_type}:{{{key}}}"
    return f"urn:ngsi-ld:{entity_type}:{{hash}}"


def compile_config(
    session: ReviewSession,
    schema: SourceSchema,
    target_ont: Ontology,
    provenance: Mapping[str, Any] | None = None,
) -> TranslationConfig:
    """One executable rule per approved concept pair."""
    approved = session.approved_pairs()
    if not approved:
        raise NoApprovedPairs(f"session {session.session_id} has no approved pairs")
    approved_by_source = dict(approved)

    rules = []
    for source_name, target_name in approved:
        source_concept = schema.concepts[source_name]
        target_concept = target_ont.concepts[target_name]
        source_keys = list(source_concept.properties)

        # child-concept keys link to their own rules when the child is approved
        child_links: dict[str, str] = {}
        plain_keys = []
        for key in source_keys:
            t = source_concept.properties[key].type
            ref = None
            if t.kind == KIND_OBJECT and t.concept_ref:
                ref = t.concept_ref
            elif t.kind == KIND_ARRAY and t.inner is not None and t.inner.kind == KIND_OBJECT:
                ref = t.inner.concept_ref
            if ref is not None and ref in approved_by_source:
                child_links[key] = ref
            else:
                plain_keys.append(key)

        assignment = _match_properties(plain_keys, list(target_concept.properties))
        attribute_rules = []
        for key in source_keys:
            if key in child_links:
                attribute_rules.append(
                    AttributeRule(
                        source_path=key,
                        target_name=key,
                        kind=KIND_RELATIONSHIP,
                        transform=TRANSFORM_IDENTITY,
                        child_concept=child_links[key],
                    )
                )
            elif key in assignment:
                prop = assignment[key]
                is_concept_range = prop.range in target_ont.concepts
                attribute_rules.append(
                    AttributeRule(
                        source_path=key,
                        target_name=prop.name,
                        kind=KIND_RELATIONSHIP if is_concept_range else KIND_PROPERTY,
                        transform=TRANSFORM_IDENTITY
                        if is_concept_range
                        else _transform_for(prop.range),
                        ref_type=prop.range if is_concept_range else None,
                    )
                )
        carry_over = tuple(
            key for key in source_keys if key not in assignment and key not in child_links
        )
        rules.append(
            TranslationRule(
                source_concept=source_name,
                entity_type=target_name,
                id_template=_id_template(target_name, plain_keys, assignment),
                attribute_rules=tuple(attribute_rules),
                carry_over=carry_over,
            )
        )

    return TranslationConfig(
        rules=tuple(rules),
        root_concept=schema.root_concept,
        provenance=dict(provenance or {}),
    )


# --- execution --------------------------------------------------------------------

def _record_hash(record: Mapping[str, Any]) -> str:
    canon = json.dumps(record, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _fill_id_template(template: str, record: Mapping[str, Any]) -> str:
    out = []
    rest = template
    while "{" in rest:
        head, _, tail = rest.partition("{")
        out.append(head)
        name, closed, tail = tail.partition("}")
        if not closed:
            out.append("{" + name)
            rest = ""
            break
        if name == "hash":
            out.append(_record_hash(record))
        elif name in record:
            out.append(str(record[name]))
        else:
            raise MissingIdField(f"record lacks id field {name!r} for template {template!r}")
        rest = tail
    out.append(rest)
    return "".join(out)


def _normalize_datetime(value: Any) -> Any:
    if not isinstance(value, str):
        return value
    text = value.strip()
    if len(text) == 10:  # date only
        text += "T00:00:00Z"
    if text.endswith("+00:00"):
        text = text[:-6] + "Z"
    return text


def _geo_point(value: Any) -> Any:
    if isinstance(value, Mapping):
        lat = value.get("lat", value.get("latitude"))
        lon = value.get("lon", value.get("longitude"))
        if lat is not None and lon is not None:
            return {"type": "Point", "coordinates": [lon, lat]}
    return value


_TRANSFORMS = {
    TRANSFORM_IDENTITY: lambda v: v,
    TRANSFORM_DATETIME: _normalize_datetime,
    TRANSFORM_GEO: _geo_point,
}


def translate(config: TranslationConfig, record: Mapping[str, Any]) -> list[Entity]:
    """Root entity first, then child entities in source-key order."""
    root_rule = config.rule_for(config.root_concept)
    if root_rule is None:
        raise ConfigNotFound(f"config has no rule for root concept {config.root_concept!r}")
    return _translate_with(config, root_rule, record)


def _translate_with(
    config: TranslationConfig, rule: TranslationRule, record: Mapping[str, Any]
) -> list[Entity]:
    entity_id = _fill_id_template(rule.id_template, record)
    attributes: list[tuple[str, Attribute]] = []
    children: list[Entity] = []

    ruled_keys = set()
    for attr_rule in rule.attribute_rules:
        key = attr_rule.source_path
        ruled_keys.add(key)
        if key not in record:
            continue
        value = record[key]
        if attr_rule.child_concept is not None:
            child_rule = config.rule_for(attr_rule.child_concept)
            if child_rule is None:
                attributes.append((attr_rule.target_name, property_of(value)))
            elif isinstance(value, Mapping):
                child_entities = _translate_with(config, child_rule, value)
                children.extend(child_entities)
                attributes.append(
                    (attr_rule.target_name, relationship_of(child_entities[0].id))
                )
            elif isinstance(value, list):
                # a Relationship points at exactly one entity, so a list of
                # child records becomes entities plus an ordered id list
                ids = []
                for item in value:
                    if isinstance(item, Mapping):
                        child_entities = _translate_with(config, child_rule, item)
                        children.extend(child_entities)
                        ids.append(child_entities[0].id)
                    else:
                        ids.append(item)
                attributes.append((attr_rule.target_name, property_of(ids)))
            else:
                attributes.append((attr_rule.target_name, property_of(value)))
        elif attr_rule.kind == KIND_RELATIONSHIP:
            ref = str(value)
            if ":" not in ref:  # lift bare foreign keys to canonical entity ids
                ref = f"urn:ngsi-ld:{attr_rule.ref_type or attr_rule.target_name}:{ref}"
            attributes.append((attr_rule.target_name, relationship_of(ref)))
        else:
            transformed = _TRANSFORMS[attr_rule.transform](value)
            attributes.append((attr_rule.target_name, property_of(transformed)))

    for key, value in record.items():
        if key in ruled_keys:
            continue
        # carry-over and unknown extras alike stay verbatim
        attributes.append((key, property_of(value)))

    entity = Entity(
        id=entity_id,
        types=(rule.entity_type,),
        attributes=tuple(attributes),
    )
    return [entity, *children]
