"""Master-controller registry, ThingVisor publication and vSilo stores.

ThingVisors ingest source records and publish neutral-format updates on
the bus topic ``TV/{thingVisorId}/{vThingName}/data_out``; each vSilo
subscribes per added vThing and maintains a flavour-native store fed by
the pure converters in :mod:`vforge.flavours`.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from . import flavours
from .bus import InProcessBus, Message, SubscriptionHandle, Topic, TopicFilter
from .errors import (
    AlreadyAdded,
    DuplicateId,
    InvalidSourceConfig,
    NotFound,
    UnknownFlavour,
    UnknownSilo,
    UnknownVThing,
)
from .ngsi import Entity, entity_from_document, entity_to_document, parse_entity, serialize_entity

_SLUG_RE = re.compile(r"^[a-z0-9-]+$")

DATA_OUT_TOPIC = "TV/{thing_visor_id}/{vthing_name}/data_out"


class SourceKind(str, Enum):
    FILE_REPLAY = "file-replay"
    HTTP_POLL = "http-poll"
    BUS_INGEST = "bus-ingest"


class Flavour(str, Enum):
    ONEM2M = "onem2m"
    NGSIV2 = "ngsiv2"
    NGSILD = "ngsild"
    MQTT = "mqtt"


@dataclass
class ThingVisorDescriptor:
    """Registration record for one ThingVisor."""

    id: str
    source_kind: SourceKind
    source_config: dict[str, Any] = field(default_factory=dict)
    translation_config_ref: str | None = None
    vthings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "sourceKind": self.source_kind.value,
            "sourceConfig": dict(self.source_config),
            "translationConfigRef": self.translation_config_ref,
            "vthings": list(self.vthings),
        }


@dataclass
class VThingDescriptor:
    """A virtual thing: ``{thingVisorId}/{vThingName}``, typed, with its entity ids."""

    vthing_id: str
    type: str
    entity_ids: set[str] = field(default_factory=set)

    def to_dict(self) -> dict[str, Any]:
        return {
            "vThingId": self.vthing_id,
            "type": self.type,
            "entityIds": sorted(self.entity_ids),
        }


# --- flavour-native stores ---------------------------------------------------

class NgsiLdStore:
    """Identity flavour: latest canonical document text per entity."""

    def __init__(self) -> None:
        self.documents: dict[str, str] = {}

    def apply(self, entity: Entity, tenant_id: str, vthing_id: str) -> None:
        self.documents[entity.id] = serialize_entity(entity)

    def retrieve(self, entity_ref: str) -> str:
        if entity_ref not in self.documents:
            raise NotFound(f"no entity {entity_ref!r} in silo store")
        return self.documents[entity_ref]

    def to_dict(self) -> dict[str, Any]:
        return {eid: json.loads(doc) for eid, doc in sorted(self.documents.items())}


class Ngsiv2Store:
    """Latest NGSIv2 rendering per entity."""

    def __init__(self) -> None:
        self.documents: dict[str, dict[str, Any]] = {}

    def apply(self, entity: Entity, tenant_id: str, vthing_id: str) -> None:
        self.documents[entity.id] = flavours.convert_to_ngsiv2(entity)

    def retrieve(self, entity_ref: str) -> dict[str, Any]:
        if entity_ref not in self.documents:
            raise NotFound(f"no entity {entity_ref!r} in silo store")
        return self.documents[entity_ref]

    def to_dict(self) -> dict[str, Any]:
        return dict(sorted(self.documents.items()))


class MqttStore:
    """Latest payload per record topic, plus the full publish log."""

    def __init__(self) -> None:
        self.latest: dict[str, str] = {}
        self.log: list[tuple[str, str]] = []

    def apply(self, entity: Entity, tenant_id: str, vthing_id: str) -> None:
        for topic, payload in flavours.convert_to_mqtt_records(entity, tenant_id, vthing_id):
            text = payload.decode()
            self.latest[str(topic)] = text
            self.log.append((str(topic), text))

    def retrieve(self, entity_ref: str) -> dict[str, Any]:
        marker = f"/{flavours.topic_segment(flavours.last_urn_segment(entity_ref))}/"
        matches = {
            topic: json.loads(payload)
            for topic, payload in self.latest.items()
            if marker in topic
        }
        if not matches:
            raise NotFound(f"no records for entity {entity_ref!r} in silo store")
        return dict(sorted(matches.items()))

    def to_dict(self) -> dict[str, Any]:
        return {topic: json.loads(payload) for topic, payload in sorted(self.latest.items())}


class OneM2MStore:
    """In-memory oneM2M resource tree with the applied-op journal."""

    def __init__(self) -> None:
        self.tree: dict[str, dict[str, Any]] = {
            flavours.ONEM2M_CSE_ROOT: {"type": "CSEBase", "children": []}
        }
        self.journal: list[dict[str, Any]] = []
        self._ci_counters: dict[str, int] = {}

    def _ensure(self, parent_path: str, name: str, resource_type: str) -> str:
        if parent_path not in self.tree:
            raise NotFound(f"oneM2M parent {parent_path!r} does not exist")
        path = f"{parent_path}/{name}"
        if path not in self.tree:
            self.tree[path] = {"type": resource_type, "children": []}
            self.tree[parent_path]["children"].append(name)
        return path

    def apply_ops(self, ops: list[flavours.OneM2MResourceOp]) -> None:
        for op in ops:
            if op.op_kind is flavours.OneM2MOpKind.ENSURE_AE:
                self._ensure(op.parent_path, op.resource_name, "AE")
                applied = op.to_dict()
            elif op.op_kind is flavours.OneM2MOpKind.ENSURE_CONTAINER:
                self._ensure(op.parent_path, op.resource_name, "Container")
                applied = op.to_dict()
            else:
                count = self._ci_counters.get(op.parent_path, 0) + 1
                self._ci_counters[op.parent_path] = count
                name = f"ci-{count:06d}"
                path = self._ensure(op.parent_path, name, "ContentInstance")
                self.tree[path]["content"] = op.content
                applied = op.to_dict()
                applied["resourceName"] = name
            self.journal.append(applied)

    def apply(self, entity: Entity, tenant_id: str, vthing_id: str) -> None:
        self.apply_ops(flavours.convert_to_onem2m(entity, tenant_id, vthing_id))

    def retrieve(self, entity_ref: str) -> dict[str, Any]:
        container_rn = flavours.sanitize(entity_ref)
        root = self.tree[flavours.ONEM2M_CSE_ROOT]
        for ae_name in root["children"]:
            ae_path = f"{flavours.ONEM2M_CSE_ROOT}/{ae_name}"
            if container_rn not in self.tree[ae_path]["children"]:
                continue
            entity_path = f"{ae_path}/{container_rn}"
            attributes: dict[str, Any] = {}
            for attr_name in self.tree[entity_path]["children"]:
                attr_path = f"{entity_path}/{attr_name}"
                instances = self.tree[attr_path]["children"]
                if instances:
                    latest = self.tree[f"{attr_path}/{instances[-1]}"]
                    attributes[attr_name] = json.loads(latest["content"])
            return {"ae": ae_name, "container": container_rn, "attributes": attributes}
        raise NotFound(f"no entity container for {entity_ref!r} in silo store")

    def to_dict(self) -> dict[str, Any]:
        rendered = {}
        for path in sorted(self.tree):
            node = self.tree[path]
            entry: dict[str, Any] = {"type": node["type"], "children": list(node["children"])}
            if "content" in node:
                entry["content"] = json.loads(node["content"])
            rendered[path] = entry
        return rendered


_STORE_FACTORIES: dict[Flavour, Callable[[], Any]] = {
    Flavour.NGSILD: NgsiLdStore,
    Flavour.NGSIV2: Ngsiv2Store,
    Flavour.MQTT: MqttStore,
    Flavour.ONEM2M: OneM2MStore,
}


@dataclass
class VSiloDescriptor:
    """An isolated tenant environment with one flavour-native store."""

    silo_id: str
    tenant_id: str
    flavour: Flavour
    added_vthings: set[str] = field(default_factory=set)
    store: Any = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "siloId": self.silo_id,
            "tenantId": self.tenant_id,
            "flavour": self.flavour.value,
            "addedVThings": sorted(self.added_vthings),
        }


# --- master controller -------------------------------------------------------

_REQUIRED_SOURCE_KEYS = {
    SourceKind.FILE_REPLAY: "path",
    SourceKind.HTTP_POLL: "url",
    SourceKind.BUS_INGEST: "topic",
}


class Platform:
    """The registry and control plane, wired to one in-process bus."""

    def __init__(self, bus: InProcessBus | None = None) -> None:
        self.bus = bus or InProcessBus()
        self._lock = threading.RLock()
        self.thing_visors: dict[str, ThingVisorDescriptor] = {}
        self.vthings: dict[str, VThingDescriptor] = {}
        self.silos: dict[str, VSiloDescriptor] = {}
        self._silo_counters: dict[str, int] = {}
        self._silo_locks: dict[str, threading.Lock] = {}
        self._subscriptions: list[SubscriptionHandle] = []
        self._translators: dict[str, Callable[[dict[str, Any]], list[Entity]]] = {}

    # -- ThingVisors ----------------------------------------------------------

    def register_thingvisor(self, desc: ThingVisorDescriptor) -> str:
        with self._lock:
            if desc.id in self.thing_visors:
                raise DuplicateId(f"ThingVisor {desc.id!r} already registered")
            if not _SLUG_RE.match(desc.id):
                raise InvalidSourceConfig(f"ThingVisor id {desc.id!r} is not a [a-z0-9-] slug")
            if not isinstance(desc.source_config, dict):
                raise InvalidSourceConfig("sourceConfig must be a key-value map")
            required = _REQUIRED_SOURCE_KEYS[desc.source_kind]
            if required not in desc.source_config:
                raise InvalidSourceConfig(
                    f"{desc.source_kind.value} sourceConfig needs {required!r}"
                )
            if not desc.vthings:
                raise InvalidSourceConfig("ThingVisor must declare at least one vThing")

            vthing_type = desc.source_config.get("type", "Thing")
            for name in desc.vthings:
                vthing_id = f"{desc.id}/{name}"
                if vthing_id in self.vthings:
                    raise DuplicateId(f"vThing {vthing_id!r} already registered")
            for name in desc.vthings:
                vthing_id = f"{desc.id}/{name}"
                self.vthings[vthing_id] = VThingDescriptor(vthing_id=vthing_id, type=vthing_type)
            self.thing_visors[desc.id] = desc

        if desc.translation_config_ref:
            self._translators[desc.id] = self._load_translator(desc.translation_config_ref)
        if desc.source_kind is SourceKind.BUS_INGEST:
            self._start_bus_ingest(desc)
        if desc.source_config.get("auto"):
            threading.Thread(target=self.trigger_replay, args=(desc.id,), daemon=True).start()
        return desc.id

    def _load_translator(self, config_ref: str) -> Callable[[dict[str, Any]], list[Entity]]:
        from .pipeline.translation import load_config, translate

        config = load_config(config_ref)
        return lambda record: translate(config, record)

    def _record_to_entities(self, tv_id: str, record: dict[str, Any]) -> list[Entity]:
        translator = self._translators.get(tv_id)
        if translator is not None:
            return translator(record)
        return [entity_from_document(record)]

    def trigger_replay(self, tv_id: str) -> int:
        """Run one synchronous replay/poll pass; returns records processed."""
        with self._lock:
            if tv_id not in self.thing_visors:
                raise UnknownVThing(f"no ThingVisor {tv_id!r}")
            desc = self.thing_visors[tv_id]
        vthing_name = desc.source_config.get("vthing", desc.vthings[0])

        if desc.source_kind is SourceKind.FILE_REPLAY:
            try:
                with open(desc.source_config["path"], encoding="utf-8") as fh:
                    lines = [line for line in fh.read().splitlines() if line.strip()]
            except OSError as exc:
                raise InvalidSourceConfig(f"cannot read replay file: {exc}") from exc
            records = [json.loads(line) for line in lines]
        elif desc.source_kind is SourceKind.HTTP_POLL:
            records = self._poll_once(desc.source_config["url"])
        else:
            return 0  # bus-ingest is push-driven

        for record in records:
            self.publish_vthing_update(tv_id, vthing_name, self._record_to_entities(tv_id, record))
        return len(records)

    @staticmethod
    def _poll_once(url: str) -> list[dict[str, Any]]:
        from urllib.request import urlopen

        with urlopen(url) as response:
            body = json.loads(response.read().decode())
        return body if isinstance(body, list) else [body]

    def _start_bus_ingest(self, desc: ThingVisorDescriptor) -> None:
        vthing_name = desc.source_config.get("vthing", desc.vthings[0])
        ingest_filter = TopicFilter.parse(desc.source_config["topic"])

        def on_record(message: Message) -> None:
            record = json.loads(message.payload.decode())
            self.publish_vthing_update(
                desc.id, vthing_name, self._record_to_entities(desc.id, record)
            )

        self._subscriptions.append(self.bus.subscribe(ingest_filter, on_record))

    # -- vThings ----------------------------------------------------------------

    def list_vthings(self) -> list[VThingDescriptor]:
        with self._lock:
            return [self.vthings[k] for k in sorted(self.vthings)]

    def publish_vthing_update(self, tv_id: str, vthing_name: str, entities: list[Entity]) -> None:
        """Publish one batched data-out message for the vThing's update."""
        vthing_id = f"{tv_id}/{vthing_name}"
        with self._lock:
            vthing = self.vthings.get(vthing_id)
            if vthing is None:
                raise UnknownVThing(f"no vThing {vthing_id!r}")
            vthing.entity_ids.update(e.id for e in entities)
        if not entities:
            return
        topic = Topic.parse(DATA_OUT_TOPIC.format(thing_visor_id=tv_id, vthing_name=vthing_name))
        payload = json.dumps(
            {"data": [entity_to_document(e) for e in entities]},
            separators=(",", ":"),
            ensure_ascii=False,
        ).encode()
        self.bus.publish(topic, payload, publisher=vthing_id)

    # -- vSilos -------------------------------------------------------------------

    def create_vsilo(self, tenant_id: str, flavour: str) -> VSiloDescriptor:
        try:
            flavour_value = Flavour(flavour)
        except ValueError:
            raise UnknownFlavour(f"flavour {flavour!r} is not supported") from None
        with self._lock:
            count = self._silo_counters.get(tenant_id, 0) + 1
            self._silo_counters[tenant_id] = count
            silo_id = f"{tenant_id}-{count}"
            silo = VSiloDescriptor(
                silo_id=silo_id,
                tenant_id=tenant_id,
                flavour=flavour_value,
                store=_STORE_FACTORIES[flavour_value](),
            )
            self.silos[silo_id] = silo
            self._silo_locks[silo_id] = threading.Lock()
            return silo

    def add_vthing_to_silo(self, silo_id: str, vthing_id: str) -> None:
        """Subscribe the silo to the vThing's data-out topic."""
        with self._lock:
            silo = self.silos.get(silo_id)
            if silo is None:
                raise UnknownSilo(f"no vSilo {silo_id!r}")
            if vthing_id not in self.vthings:
                raise UnknownVThing(f"no vThing {vthing_id!r}")
            if vthing_id in silo.added_vthings:
                raise AlreadyAdded(f"vThing {vthing_id!r} already added to {silo_id!r}")
            silo.added_vthings.add(vthing_id)
            silo_lock = self._silo_locks[silo_id]

        data_filter = TopicFilter.parse(
            DATA_OUT_TOPIC.format(
                thing_visor_id=vthing_id.split("/", 1)[0],
                vthing_name=vthing_id.split("/", 1)[1],
            )
        )

        def on_update(message: Message) -> None:
            body = json.loads(message.payload.decode())
            with silo_lock:  # updates applied serially in arrival order
                for doc in body.get("data", []):
                    silo.store.apply(entity_from_document(doc), silo.tenant_id, vthing_id)

        self._subscriptions.append(self.bus.subscribe(data_filter, on_update))

    def silo_retrieve(self, silo_id: str, entity_ref: str) -> Any:
        with self._lock:
            silo = self.silos.get(silo_id)
            if silo is None:
                raise UnknownSilo(f"no vSilo {silo_id!r}")
            silo_lock = self._silo_locks[silo_id]
        with silo_lock:
            return silo.store.retrieve(entity_ref)

    def drain(self, timeout: float | None = 10.0) -> bool:
        """Wait for all in-flight bus deliveries to settle."""
        return self.bus.drain(timeout)

    def close(self) -> None:
        self.bus.close()


def replay_entities_file(path: str) -> list[Entity]:
    """Load a neutral-format batch file (one entity document per line)."""
    with open(path, encoding="utf-8") as fh:
        return [parse_entity(line) for line in fh.read().splitlines() if line.strip()]
