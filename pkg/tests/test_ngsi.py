"""Neutral entity format: parsing, canonical serialization, updates."""

from __future__ import annotations

import json
import random

import pytest

from conftest import make_random_entity
from vforge.errors import (
    AmbiguousAttribute,
    MalformedDocument,
    MissingField,
    ReservedName,
)
from vforge.ngsi import (
    AttributeKind,
    ContextMap,
    apply_update,
    canonical_entity_id,
    dump_entity_batch,
    entity_to_document,
    load_entity_batch,
    make_entity,
    parse_entity,
    property_of,
    relationship_of,
    serialize_entity,
)

CAR_DOC = '{"id":"urn:ngsi-ld:Car:1","type":"Car","speed":{"type":"Property","value":55}}'
CAMERA_DOC = (
    '{"id":"urn:ngsi-ld:Camera:c1","type":"Camera",'
    '"attachedTo":{"type":"Relationship","object":"urn:ngsi-ld:PowerPole:p1"}}'
)
SHOP_DOC = '{"id":"urn:ngsi-ld:Shop:s1","type":"Shop"}'


def test_parse_car_document():
    entity = parse_entity(CAR_DOC)
    assert entity.id == "urn:ngsi-ld:Car:1"
    assert entity.types == ("Car",)
    speed = entity.attribute("speed")
    assert speed.kind is AttributeKind.PROPERTY
    assert speed.value == 55


def test_parse_camera_relationship():
    entity = parse_entity(CAMERA_DOC)
    attached = entity.attribute("attachedTo")
    assert attached.kind is AttributeKind.RELATIONSHIP
    assert attached.object == "urn:ngsi-ld:PowerPole:p1"


def test_parse_entity_with_zero_attributes():
    entity = parse_entity(SHOP_DOC)
    assert entity.attributes == ()


def test_serialize_car_round_trips_to_input_bytes():
    assert serialize_entity(parse_entity(CAR_DOC)) == CAR_DOC


def test_serialize_orders_observed_at_and_unit_code_after_value():
    entity = make_entity(
        "urn:ngsi-ld:Car:1",
        "Car",
        [("speed", property_of(55, observed_at="2026-01-05T10:00:00Z", unit_code="KMH"))],
    )
    doc = json.loads(serialize_entity(entity))
    keys = list(doc["speed"].keys())
    assert keys == ["type", "value", "observedAt", "unitCode"]


def test_missing_id_or_type_rejected():
    with pytest.raises(MissingField):
        parse_entity('{"type":"Car"}')
    with pytest.raises(MissingField):
        parse_entity('{"id":"urn:ngsi-ld:Car:1"}')


def test_attribute_with_value_and_object_rejected():
    doc = (
        '{"id":"urn:ngsi-ld:Car:1","type":"Car",'
        '"speed":{"value":55,"object":"urn:ngsi-ld:Car:2"}}'
    )
    with pytest.raises(AmbiguousAttribute):
        parse_entity(doc)


def test_attribute_with_neither_value_nor_object_rejected():
    with pytest.raises(MissingField):
        parse_entity('{"id":"urn:ngsi-ld:Car:1","type":"Car","speed":{"type":"Property"}}')


def test_bad_syntax_rejected():
    with pytest.raises(MalformedDocument):
        parse_entity("{not json")
    with pytest.raises(MalformedDocument):
        parse_entity('["id","type"]')


def test_reserved_at_keys_rejected():
    doc = '{"id":"urn:ngsi-ld:Car:1","type":"Car","@context":["x"]}'
    with pytest.raises(MalformedDocument):
        parse_entity(doc)


def test_declared_kind_must_match_payload_slot():
    doc = (
        '{"id":"urn:ngsi-ld:Car:1","type":"Car",'
        '"speed":{"type":"Relationship","value":55}}'
    )
    with pytest.raises(MalformedDocument):
        parse_entity(doc)


def test_observed_at_requires_timezone():
    doc = (
        '{"id":"urn:ngsi-ld:Car:1","type":"Car",'
        '"speed":{"type":"Property","value":5,"observedAt":"2026-01-05T10:00:00"}}'
    )
    with pytest.raises(MalformedDocument):
        parse_entity(doc)


def test_multi_type_entity_round_trips_as_list():
    doc = '{"id":"urn:ngsi-ld:Car:1","type":["Car","Vehicle"]}'
    entity = parse_entity(doc)
    assert entity.types == ("Car", "Vehicle")
    assert serialize_entity(entity) == doc


def test_randomized_round_trip():
    rng = random.Random(7)
    for _ in range(300):
        entity = make_random_entity(rng)
        text = serialize_entity(entity)
        again = parse_entity(text)
        assert again == entity
        assert serialize_entity(again) == text


def test_apply_update_replaces_existing_attribute():
    car = parse_entity(CAR_DOC)
    updated = apply_update(car, "speed", property_of(60))
    assert updated.attribute("speed").value == 60
    assert len(updated.attributes) == 1


def test_apply_update_appends_new_attribute():
    car = parse_entity(CAR_DOC)
    point = property_of({"type": "Point", "coordinates": [12.5, 41.9]})
    updated = apply_update(car, "location", point)
    assert [name for name, _ in updated.attributes] == ["speed", "location"]
    assert updated.attribute("speed").value == 55


def test_apply_update_is_idempotent():
    rng = random.Random(21)
    for _ in range(50):
        entity = make_random_entity(rng)
        attr = property_of(rng.randint(0, 100))
        once = apply_update(entity, "gauge", attr)
        twice = apply_update(once, "gauge", attr)
        assert once == twice
        assert once.id == entity.id and once.types == entity.types


def test_apply_update_rejects_reserved_names():
    car = parse_entity(CAR_DOC)
    for name in ("id", "type"):
        with pytest.raises(ReservedName):
            apply_update(car, name, property_of(1))


def test_relationship_helper_sets_object_slot():
    rel = relationship_of("urn:ngsi-ld:PowerPole:p1")
    assert rel.kind is AttributeKind.RELATIONSHIP
    assert rel.object == "urn:ngsi-ld:PowerPole:p1"
    assert rel.value is None


def test_canonical_entity_id_shape():
    assert canonical_entity_id("Car", "1") == "urn:ngsi-ld:Car:1"


def test_batch_file_round_trip():
    rng = random.Random(3)
    entities = [make_random_entity(rng) for _ in range(20)]
    text = dump_entity_batch(entities)
    assert load_entity_batch(text) == entities


def test_context_map_expand_compact_identity():
    ctx = ContextMap({"speed": "https://example.org/vocab/speed"})
    assert ctx.compact(ctx.expand("speed")) == "speed"
    # core terms stay available after merging
    assert ctx.expand("Property").endswith("Property")


def test_context_map_rejects_duplicate_iris():
    with pytest.raises(ValueError):
        ContextMap({"a": "https://example.org/x", "b": "https://example.org/x"})


def test_entity_document_shape():
    entity = parse_entity(CAMERA_DOC)
    doc = entity_to_document(entity)
    assert list(doc.keys()) == ["id", "type", "attachedTo"]
