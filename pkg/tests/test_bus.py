"""Bus semantics: filter matching against the oracle, delivery, backpressure."""

from __future__ import annotations

import random
import threading

import pytest

from conftest import (
    oracle_topic_matches,
    random_filter_segments,
    random_topic_segments,
    topic_from_filter,
)
from vforge.bus import InProcessBus, Topic, TopicFilter, topic_matches
from vforge.errors import BusClosed, MalformedDocument


def test_wildcard_expansion():
    assert topic_matches(TopicFilter.parse("TV/+/+/data_out"), Topic.parse("TV/tv1/vt1/data_out"))


def test_universal_filter():
    assert topic_matches(TopicFilter.parse("#"), Topic.parse("a/b/c"))


def test_plus_matches_exactly_one_segment():
    f = TopicFilter.parse("TV/+")
    assert topic_matches(f, Topic.parse("TV/x"))
    assert not topic_matches(f, Topic.parse("TV"))
    assert not topic_matches(f, Topic.parse("TV/x/y"))


def test_hash_matches_zero_trailing_segments():
    f = TopicFilter.parse("TV/#")
    assert topic_matches(f, Topic.parse("TV"))
    assert topic_matches(f, Topic.parse("TV/a/b"))
    assert not topic_matches(f, Topic.parse("TX"))


def test_hash_only_allowed_at_end():
    with pytest.raises(MalformedDocument):
        TopicFilter.parse("TV/#/data_out")


def test_topic_rejects_wildcard_characters():
    for bad in ("a/+", "a/#", "", "a//b"):
        with pytest.raises(MalformedDocument):
            Topic.parse(bad)


def test_matching_agrees_with_recursive_oracle():
    rng = random.Random(1234)
    disagreements = 0
    for _ in range(10_000):
        fsegs = random_filter_segments(rng)
        tsegs = (
            topic_from_filter(rng, fsegs) if rng.random() < 0.5 else random_topic_segments(rng)
        )
        got = topic_matches(TopicFilter(fsegs), Topic(tsegs))
        want = oracle_topic_matches(fsegs, tsegs)
        if got != want:
            disagreements += 1
    assert disagreements == 0


def test_subscribe_then_publish_delivers_once():
    bus = InProcessBus()
    received = []
    bus.subscribe(TopicFilter.parse("TV/+/+/data_out"), received.append)
    count = bus.publish(Topic.parse("TV/tv1/vt1/data_out"), b"hello")
    assert count == 1
    assert bus.drain()
    assert [m.payload for m in received] == [b"hello"]
    bus.close()


def test_cancelled_subscription_receives_nothing():
    bus = InProcessBus()
    received = []
    handle = bus.subscribe(TopicFilter.parse("#"), received.append)
    handle.cancel()
    assert bus.publish(Topic.parse("a/b"), b"x") == 0
    assert bus.drain()
    assert received == []
    bus.close()


def test_overlapping_filters_deliver_once_per_subscription():
    bus = InProcessBus()
    received = []
    bus.subscribe(TopicFilter.parse("a/#"), received.append)
    bus.subscribe(TopicFilter.parse("a/+"), received.append)
    assert bus.publish(Topic.parse("a/b"), b"x") == 2
    assert bus.drain()
    assert len(received) == 2
    bus.close()


def test_publish_with_no_subscribers_returns_zero():
    bus = InProcessBus()
    assert bus.publish(Topic.parse("a"), b"x") == 0
    bus.close()


def test_non_matching_subscription_not_counted():
    bus = InProcessBus()
    bus.subscribe(TopicFilter.parse("a/+"), lambda m: None)
    bus.subscribe(TopicFilter.parse("b/+"), lambda m: None)
    assert bus.publish(Topic.parse("a/x"), b"x") == 1
    bus.close()


def test_messages_arrive_in_publish_order():
    bus = InProcessBus()
    received = []
    bus.subscribe(TopicFilter.parse("seq"), lambda m: received.append(int(m.payload)))
    for i in range(1, 101):
        bus.publish(Topic.parse("seq"), str(i).encode(), publisher="p1")
    assert bus.drain()
    assert received == list(range(1, 101))
    bus.close()


def test_seq_strictly_increasing_per_publisher():
    bus = InProcessBus()
    received = []
    bus.subscribe(TopicFilter.parse("#"), received.append)
    for _ in range(5):
        bus.publish(Topic.parse("t"), b"x", publisher="p1")
    bus.publish(Topic.parse("t"), b"x", publisher="p2")
    assert bus.drain()
    p1_seqs = [m.seq for m in received if m.publisher == "p1"]
    assert p1_seqs == sorted(p1_seqs) and len(set(p1_seqs)) == len(p1_seqs)
    bus.close()


def test_slow_consumer_drops_oldest_and_counts():
    bus = InProcessBus(queue_capacity=4)
    gate = threading.Event()
    received = []

    def sink(message):
        gate.wait(5.0)
        received.append(int(message.payload))

    handle = bus.subscribe(TopicFilter.parse("t"), sink)
    for i in range(10):
        bus.publish(Topic.parse("t"), str(i).encode())
    gate.set()
    assert bus.drain()
    # worker may have grabbed message 0 before the queue filled
    assert handle.dropped >= 5
    assert received[-4:] == [6, 7, 8, 9]
    bus.close()


def test_sink_exception_does_not_kill_subscription():
    bus = InProcessBus()
    received = []

    def sink(message):
        if message.payload == b"boom":
            raise RuntimeError("sink fault")
        received.append(message.payload)

    bus.subscribe(TopicFilter.parse("t"), sink)
    bus.publish(Topic.parse("t"), b"boom")
    bus.publish(Topic.parse("t"), b"ok")
    assert bus.drain()
    assert received == [b"ok"]
    bus.close()


def test_closed_bus_rejects_operations():
    bus = InProcessBus()
    bus.close()
    with pytest.raises(BusClosed):
        bus.publish(Topic.parse("a"), b"x")
    with pytest.raises(BusClosed):
        bus.subscribe(TopicFilter.parse("a"), lambda m: None)


def test_concurrent_publishers_preserve_per_publisher_order():
    bus = InProcessBus()
    received = []
    lock = threading.Lock()

    def sink(message):
        with lock:
            received.append((message.publisher, int(message.payload)))

    bus.subscribe(TopicFilter.parse("t"), sink)

    def run(publisher):
        for i in range(50):
            bus.publish(Topic.parse("t"), str(i).encode(), publisher=publisher)

    threads = [threading.Thread(target=run, args=(f"p{k}",)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert bus.drain()
    for k in range(4):
        seen = [i for publisher, i in received if publisher == f"p{k}"]
        assert seen == list(range(50))
    bus.close()
