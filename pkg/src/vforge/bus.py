"""In-process publish/subscribe bus with MQTT topic-filter semantics.

Stands in for the MQTT cluster of the platform: at-most-once, in-memory
delivery with bounded per-subscription queues (overflow drops the oldest
message and counts it). An optional bridge replays traffic to and from a
real broker when ``VFORGE_MQTT_BRIDGE`` is set; core behaviour never
depends on it.
"""

from __future__ import annotations

import itertools
import os
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import BusClosed, MalformedDocument

WILDCARD_SINGLE = "+"
WILDCARD_MULTI = "#"

DEFAULT_QUEUE_CAPACITY = 1024

BRIDGE_ENV_VAR = "VFORGE_MQTT_BRIDGE"


@dataclass(frozen=True)
class Topic:
    """A concrete topic: non-empty segments joined by '/'."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise MalformedDocument("topic needs at least one segment")
        for seg in self.segments:
            if not seg:
                raise MalformedDocument("topic segment must be non-empty")
            if any(ch in seg for ch in ("/", WILDCARD_SINGLE, WILDCARD_MULTI)):
                raise MalformedDocument(f"topic segment {seg!r} contains a reserved character")

    @classmethod
    def parse(cls, text: str) -> "Topic":
        return cls(tuple(text.split("/")))

    def __str__(self) -> str:
        return "/".join(self.segments)


@dataclass(frozen=True)
class TopicFilter:
    """A subscription filter: literals, '+' per level, '#' only at the end."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise MalformedDocument("filter needs at least one segment")
        for i, seg in enumerate(self.segments):
            if seg == WILDCARD_MULTI:
                if i != len(self.segments) - 1:
                    raise MalformedDocument("'#' is only allowed as the final segment")
            elif seg != WILDCARD_SINGLE:
                if not seg:
                    raise MalformedDocument("filter segment must be non-empty")
                if any(ch in seg for ch in ("/", WILDCARD_SINGLE, WILDCARD_MULTI)):
                    raise MalformedDocument(
                        f"filter segment {seg!r} contains a reserved character"
                    )

    @classmethod
    def parse(cls, text: str) -> "TopicFilter":
        return cls(tuple(text.split("/")))

    def __str__(self) -> str:
        return "/".join(self.segments)


@dataclass(frozen=True)
class Message:
    """A delivered message; ``seq`` increases strictly per publisher."""

    topic: Topic
    payload: bytes
    seq: int
    publisher: str = ""


def topic_matches(topic_filter: TopicFilter, topic: Topic) -> bool:
    """MQTT matching: '+' covers exactly one segment, trailing '#' zero or more."""
    fsegs = topic_filter.segments
    tsegs = topic.segments
    i = 0
    for i, fseg in enumerate(fsegs):
        if fseg == WILDCARD_MULTI:
            return True
        if i >= len(tsegs):
            return False
        if fseg != WILDCARD_SINGLE and fseg != tsegs[i]:
            return False
    return len(fsegs) == len(tsegs)


class SubscriptionHandle:
    """One live subscription with its own bounded queue and worker."""

    def __init__(
        self,
        topic_filter: TopicFilter,
        sink: Callable[[Message], None],
        capacity: int,
    ) -> None:
        self.filter = topic_filter
        self._sink = sink
        self._capacity = capacity
        self._queue: deque[Message] = deque()
        self._lock = threading.Lock()
        self._wakeup = threading.Condition(self._lock)
        self._busy = False
        self._cancelled = False
        self.dropped = 0
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    @property
    def active(self) -> bool:
        return not self._cancelled

    def cancel(self) -> None:
        """Stop delivery; queued but undelivered messages are discarded."""
        with self._wakeup:
            self._cancelled = True
            self._queue.clear()
            self._wakeup.notify_all()
        if threading.current_thread() is not self._worker:
            self._worker.join(timeout=5)

    def _offer(self, message: Message) -> None:
        with self._wakeup:
            if self._cancelled:
                return
            if len(self._queue) >= self._capacity:
                self._queue.popleft()
                self.dropped += 1
            self._queue.append(message)
            self._wakeup.notify_all()

    def _run(self) -> None:
        while True:
            with self._wakeup:
                while not self._queue and not self._cancelled:
                    self._wakeup.wait()
                if self._cancelled:
                    return
                message = self._queue.popleft()
                self._busy = True
            try:
                self._sink(message)
            except Exception:
                pass  # a failing sink must not take down delivery
            finally:
                with self._wakeup:
                    self._busy = False
                    self._wakeup.notify_all()

    def _drain(self, deadline: float | None) -> bool:
        import time

        with self._wakeup:
            while self._queue or self._busy:
                if self._cancelled:
                    return True
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return False
                self._wakeup.wait(timeout=remaining)
        return True


class InProcessBus:
    """Thread-safe pub/sub hub; each sink is invoked serially."""

    def __init__(self, queue_capacity: int = DEFAULT_QUEUE_CAPACITY) -> None:
        self._capacity = queue_capacity
        self._subscriptions: list[SubscriptionHandle] = []
        self._lock = threading.Lock()
        self._closed = False
        self._publisher_seq: dict[str, "itertools.count[int]"] = {}

    def subscribe(
        self, topic_filter: TopicFilter, sink: Callable[[Message], None]
    ) -> SubscriptionHandle:
        """Register a sink for every future message matching the filter."""
        with self._lock:
            if self._closed:
                raise BusClosed("cannot subscribe on a closed bus")
            handle = SubscriptionHandle(topic_filter, sink, self._capacity)
            self._subscriptions.append(handle)
            return handle

    def publish(self, topic: Topic, payload: bytes, publisher: str = "") -> int:
        """Deliver to all live matching subscriptions; returns their count."""
        with self._lock:
            if self._closed:
                raise BusClosed("cannot publish on a closed bus")
            counter = self._publisher_seq.setdefault(publisher, itertools.count(1))
            message = Message(
                topic=topic, payload=bytes(payload), seq=next(counter), publisher=publisher
            )
            targets = [
                s for s in self._subscriptions if s.active and topic_matches(s.filter, topic)
            ]
        for handle in targets:
            handle._offer(message)
        return len(targets)

    def drain(self, timeout: float | None = 10.0) -> bool:
        """Block until every subscription queue is empty and idle."""
        import time

        deadline = None if timeout is None else time.monotonic() + timeout
        with self._lock:
            handles = list(self._subscriptions)
        return all(h._drain(deadline) for h in handles)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            handles = list(self._subscriptions)
            self._subscriptions.clear()
        for handle in handles:
            handle.cancel()


class MqttBridge:
    """Optional replay of bus traffic to/from an external MQTT broker.

    Activated by passing a broker URI or setting ``VFORGE_MQTT_BRIDGE``
    (e.g. ``mqtt://host:1883``). Requires the ``paho-mqtt`` package, which
    is deliberately not a hard dependency.
    """

    def __init__(self, bus: InProcessBus, uri: str | None = None) -> None:
        self.bus = bus
        self.uri = uri or os.environ.get(BRIDGE_ENV_VAR)
        self._client = None
        self._subscription: SubscriptionHandle | None = None

    @property
    def configured(self) -> bool:
        return bool(self.uri)

    def start(self, filters: Sequence[TopicFilter] = ()) -> bool:
        """Connect and mirror traffic both ways; returns False when inactive."""
        if not self.configured:
            return False
        try:
            import paho.mqtt.client as mqtt  # type: ignore[import-not-found]
        except ImportError:
            return False

        host, _, port = self.uri.removeprefix("mqtt://").partition(":")
        client = mqtt.Client()
        client.on_message = lambda _c, _u, msg: self.bus.publish(
            Topic.parse(msg.topic), msg.payload, publisher="bridge"
        )
        client.connect(host, int(port or 1883))
        for topic_filter in filters or (TopicFilter.parse("#"),):
            client.subscribe(str(topic_filter))
        client.loop_start()
        self._client = client

        def forward(message: Message) -> None:
            if message.publisher != "bridge":  # suppress the echo loop
                client.publish(str(message.topic), message.payload)

        self._subscription = self.bus.subscribe(TopicFilter.parse("#"), forward)
        return True

    def stop(self) -> None:
        if self._subscription is not None:
            self._subscription.cancel()
            self._subscription = None
        if self._client is not None:
            self._client.loop_stop()
            self._client.disconnect()
            self._client = None
