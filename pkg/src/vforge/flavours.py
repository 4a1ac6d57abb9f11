"""Pure converters from the neutral entity format to target flavours.

Every output is a function of ``(entity, tenant_id, vthing_id)`` alone:
the neutral format is the single pivot, and no converter ever sees
source-format data.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .bus import Topic
from .ngsi import (
    AttributeKind,
    Entity,
    attribute_to_document,
    canonical_json,
    entity_from_document,
)

ONEM2M_CSE_ROOT = "cse-in"

_DATETIME_VALUE_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})?$"
)


def sanitize(text: str) -> str:
    """Make a resource name path-safe: '/' and ':' become '_'."""
    return text.replace("/", "_").replace(":", "_")


def topic_segment(text: str) -> str:
    """Make text safe as a single MQTT topic segment."""
    cleaned = sanitize(text).replace("+", "_").replace("#", "_")
    return cleaned or "_"


def last_urn_segment(entity_id: str) -> str:
    return entity_id.rsplit(":", 1)[-1]


# --- NGSIv2 ------------------------------------------------------------------

def _ngsiv2_value_type(value: Any) -> str:
    if isinstance(value, bool):
        return "Boolean"
    if isinstance(value, (int, float)):
        return "Number"
    if isinstance(value, str):
        return "DateTime" if _DATETIME_VALUE_RE.match(value) else "Text"
    return "StructuredValue"


def convert_to_ngsiv2(entity: Entity) -> dict[str, Any]:
    """Render an NGSIv2 entity document (same id, first type)."""
    doc: dict[str, Any] = {"id": entity.id, "type": entity.types[0]}
    for name, attr in entity.attributes:
        if attr.kind is AttributeKind.RELATIONSHIP:
            doc[name] = {"type": "Relationship", "value": attr.object}
            continue
        metadata: dict[str, Any] = {}
        if attr.observed_at is not None:
            metadata["timestamp"] = {"type": "DateTime", "value": attr.observed_at}
        if attr.unit_code is not None:
            metadata["unitCode"] = {"type": "Text", "value": attr.unit_code}
        for sub_name, sub in attr.sub_attributes:
            if sub.kind is AttributeKind.RELATIONSHIP:
                metadata[sub_name] = {"type": "Relationship", "value": sub.object}
            else:
                metadata[sub_name] = {
                    "type": _ngsiv2_value_type(sub.value),
                    "value": sub.value,
                }
        doc[name] = {
            "type": _ngsiv2_value_type(attr.value),
            "value": attr.value,
            "metadata": metadata,
        }
    return doc


def convert_from_ngsiv2(doc: dict[str, Any]) -> Entity:
    """Inverse NGSIv2 conversion; exact on the convertible subset."""
    neutral: dict[str, Any] = {"id": doc["id"], "type": doc["type"]}
    for name, attr in doc.items():
        if name in ("id", "type"):
            continue
        if attr.get("type") == "Relationship":
            neutral[name] = {"type": "Relationship", "object": attr["value"]}
            continue
        rebuilt: dict[str, Any] = {"type": "Property", "value": attr["value"]}
        metadata = attr.get("metadata", {})
        if "timestamp" in metadata:
            rebuilt["observedAt"] = metadata["timestamp"]["value"]
        if "unitCode" in metadata:
            rebuilt["unitCode"] = metadata["unitCode"]["value"]
        for sub_name, sub in metadata.items():
            if sub_name in ("timestamp", "unitCode"):
                continue
            if sub.get("type") == "Relationship":
                rebuilt[sub_name] = {"type": "Relationship", "object": sub["value"]}
            else:
                rebuilt[sub_name] = {"type": "Property", "value": sub["value"]}
        neutral[name] = rebuilt
    return entity_from_document(neutral)


# --- oneM2M ------------------------------------------------------------------

class OneM2MOpKind(str, Enum):
    ENSURE_AE = "ensure-AE"
    ENSURE_CONTAINER = "ensure-Container"
    CREATE_CONTENT_INSTANCE = "create-ContentInstance"


@dataclass(frozen=True)
class OneM2MResourceOp:
    """One step of the oneM2M resource-tree change journal.

    ContentInstance names are assigned by the store on apply, so the op
    carries an empty ``resource_name`` for that kind.
    """

    op_kind: OneM2MOpKind
    parent_path: str
    resource_name: str
    content: str | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "opKind": self.op_kind.value,
            "parentPath": self.parent_path,
            "resourceName": self.resource_name,
        }
        if self.content is not None:
            doc["content"] = self.content
        return doc


def convert_to_onem2m(entity: Entity, tenant_id: str, vthing_id: str) -> list[OneM2MResourceOp]:
    """Emit the ordered resource ops: AE, entity Container, then per attribute."""
    ae_name = sanitize(vthing_id)
    ae_path = f"{ONEM2M_CSE_ROOT}/{ae_name}"
    entity_name = sanitize(entity.id)
    entity_path = f"{ae_path}/{entity_name}"
    ops = [
        OneM2MResourceOp(OneM2MOpKind.ENSURE_AE, ONEM2M_CSE_ROOT, ae_name),
        OneM2MResourceOp(OneM2MOpKind.ENSURE_CONTAINER, ae_path, entity_name),
    ]
    for name, attr in entity.attributes:
        attr_path = f"{entity_path}/{name}"
        ops.append(OneM2MResourceOp(OneM2MOpKind.ENSURE_CONTAINER, entity_path, name))
        ops.append(
            OneM2MResourceOp(
                OneM2MOpKind.CREATE_CONTENT_INSTANCE,
                attr_path,
                "",
                content=canonical_json(attribute_to_document(attr)),
            )
        )
    return ops


# --- plain MQTT --------------------------------------------------------------

def convert_to_mqtt_records(
    entity: Entity, tenant_id: str, vthing_id: str
) -> list[tuple[Topic, bytes]]:
    """One record per attribute under vSilo/{tenant}/{vthing}/{entity}/{attr}."""
    records: list[tuple[Topic, bytes]] = []
    base = (
        "vSilo",
        topic_segment(tenant_id),
        topic_segment(vthing_id),
        topic_segment(last_urn_segment(entity.id)),
    )
    for name, attr in entity.attributes:
        topic = Topic(base + (topic_segment(name),))
        payload = canonical_json(attribute_to_document(attr)).encode()
        records.append((topic, payload))
    return records


__all__ = [
    "OneM2MOpKind",
    "OneM2MResourceOp",
    "ONEM2M_CSE_ROOT",
    "convert_from_ngsiv2",
    "convert_to_mqtt_records",
    "convert_to_ngsiv2",
    "convert_to_onem2m",
    "last_urn_segment",
    "sanitize",
    "topic_segment",
]
