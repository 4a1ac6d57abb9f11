"""Shared randomized generators and brute-force oracles for the test suite."""

from __future__ import annotations

import random
import string

from vforge.ngsi import Attribute, Entity, make_entity, property_of, relationship_of

_TYPES = ["Car", "Camera", "Shop", "Building", "PowerPole", "WeatherObserved", "Person"]
_UNITS = ["KMH", "CEL", "P1", "MTR", "SEC"]
_TOPIC_POOL = ["TV", "tv1", "tv2", "vt1", "data_out", "a", "b", "c", "sensor", "1"]


def random_name(rng: random.Random, min_len: int = 3, max_len: int = 10) -> str:
    length = rng.randint(min_len, max_len)
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(length))


def random_timestamp(rng: random.Random) -> str:
    base = (
        f"20{rng.randint(10, 29)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"
        f"T{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}"
    )
    if rng.random() < 0.3:
        base += f".{rng.randint(0, 999):03d}"
    if rng.random() < 0.7:
        return base + "Z"
    sign = rng.choice("+-")
    return f"{base}{sign}{rng.randint(0, 12):02d}:{rng.choice(['00', '30'])}"


def random_json_value(rng: random.Random, depth: int = 0):
    roll = rng.random()
    if depth < 2 and roll < 0.12:
        return [random_json_value(rng, depth + 1) for _ in range(rng.randint(0, 3))]
    if depth < 2 and roll < 0.24:
        return {
            random_name(rng): random_json_value(rng, depth + 1)
            for _ in range(rng.randint(1, 3))
        }
    roll = rng.random()
    if roll < 0.25:
        return rng.randint(-1000, 1000)
    if roll < 0.45:
        # limited precision keeps repr round-trips exact
        return round(rng.uniform(-500.0, 500.0), 6)
    if roll < 0.6:
        return rng.random() < 0.5
    if roll < 0.68:
        return None
    return random_name(rng, 1, 14)


def random_attribute(rng: random.Random, allow_subs: bool = True) -> Attribute:
    observed_at = random_timestamp(rng) if rng.random() < 0.35 else None
    subs = None
    if allow_subs and rng.random() < 0.2:
        subs = [
            (f"sub{random_name(rng, 2, 6)}", random_attribute(rng, allow_subs=False))
            for _ in range(rng.randint(1, 2))
        ]
    if rng.random() < 0.25:
        target = f"urn:ngsi-ld:{rng.choice(_TYPES)}:{random_name(rng, 2, 6)}"
        return relationship_of(target, observed_at=observed_at, sub_attributes=subs)
    unit = rng.choice(_UNITS) if rng.random() < 0.25 else None
    return property_of(
        random_json_value(rng), observed_at=observed_at, unit_code=unit, sub_attributes=subs
    )


def make_random_entity(rng: random.Random) -> Entity:
    entity_type = rng.choice(_TYPES)
    suffix = random_name(rng, 2, 8)
    if rng.random() < 0.2:
        suffix = f"{suffix}:{rng.randint(1, 99)}"
    entity_id = f"urn:ngsi-ld:{entity_type}:{suffix}"
    names: set[str] = set()
    attributes: list[tuple[str, Attribute]] = []
    for _ in range(rng.randint(0, 6)):
        name = random_name(rng)
        if name in names or name in ("id", "type"):
            continue
        names.add(name)
        attributes.append((name, random_attribute(rng)))
    entity = make_entity(entity_id, entity_type, attributes)
    if rng.random() < 0.15:
        entity = Entity(
            id=entity.id,
            types=(entity_type, rng.choice([t for t in _TYPES if t != entity_type])),
            attributes=entity.attributes,
        )
    return entity


# --- topic generators and the matching oracle ---------------------------------

def random_topic_segments(rng: random.Random) -> tuple[str, ...]:
    return tuple(rng.choice(_TOPIC_POOL) for _ in range(rng.randint(1, 5)))


def random_filter_segments(rng: random.Random) -> tuple[str, ...]:
    segments = [
        "+" if rng.random() < 0.25 else rng.choice(_TOPIC_POOL)
        for _ in range(rng.randint(1, 5))
    ]
    if rng.random() < 0.25:
        segments[-1] = "#"
    return tuple(segments)


def topic_from_filter(rng: random.Random, filter_segments: tuple[str, ...]) -> tuple[str, ...]:
    """Instantiate a filter into a concrete topic it should usually match."""
    out: list[str] = []
    for seg in filter_segments:
        if seg == "#":
            out.extend(rng.choice(_TOPIC_POOL) for _ in range(rng.randint(0, 3)))
            break
        out.append(rng.choice(_TOPIC_POOL) if seg == "+" else seg)
    if not out:
        out.append(rng.choice(_TOPIC_POOL))
    # occasional mutation so mismatches are exercised too
    if out and rng.random() < 0.3:
        out[rng.randrange(len(out))] = rng.choice(_TOPIC_POOL)
    return tuple(out)


def oracle_topic_matches(filter_segments: tuple[str, ...], topic_segments: tuple[str, ...]) -> bool:
    """Brute-force segment recursion, structurally unlike the production matcher."""
    if not filter_segments:
        return not topic_segments
    head = filter_segments[0]
    if head == "#":
        return True
    if not topic_segments:
        return False
    if head == "+" or head == topic_segments[0]:
        return oracle_topic_matches(filter_segments[1:], topic_segments[1:])
    return False
