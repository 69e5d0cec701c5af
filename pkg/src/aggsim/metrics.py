"""Per-run counters, latency shards, and the summarized RunMetrics record.

Message counters are recorded at the origin when a coalesced message is
emitted; per-item latency samples are recorded at delivery on the destination
worker's shard. Shards are merged once, at quiescence. Percentiles use the
nearest-rank rule on a uniform reservoir (exact while sample counts stay
under the cap).
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import InternalInvariantError, UsageError

DEFAULT_SAMPLES_CAP = 1_000_000


def nearest_rank(sorted_samples, pct: float):
    """Nearest-rank percentile of an ascending list (pct in (0, 100])."""
    n = len(sorted_samples)
    if n == 0:
        return None
    if not 0 < pct <= 100:
        raise UsageError(f"percentile must be in (0, 100], got {pct}")
    rank = max(1, math.ceil(pct * n / 100))
    return sorted_samples[rank - 1]


def summarize(samples, total=None, count=None, maximum=None) -> dict:
    """Summary dict for a latency sample list.

    total/count/maximum override the per-sample aggregates when the caller
    kept exact running values beside a capped reservoir.
    """
    if count is None:
        count = len(samples)
    if count == 0:
        return {"count": 0, "mean_ns": None, "p50_ns": None,
                "p99_ns": None, "max_ns": None}
    if total is None:
        total = sum(samples)
    if maximum is None:
        maximum = max(samples)
    s = sorted(samples)
    return {
        "count": count,
        "mean_ns": total / count,
        "p50_ns": nearest_rank(s, 50),
        "p99_ns": nearest_rank(s, 99),
        "max_ns": maximum,
    }


class LatencyShard:
    """One worker's latency samples: exact mean/max, capped uniform reservoir."""

    __slots__ = ("samples", "seen", "total", "max", "cap", "_rng")

    def __init__(self, cap: int, seed_material):
        self.samples = []
        self.seen = 0
        self.total = 0
        self.max = 0
        self.cap = cap
        # repr: str seeding is stable across runs; tuple seeding is not
        self._rng = random.Random(repr(seed_material))

    def record(self, d: int) -> None:
        if d < 0:
            raise InternalInvariantError(f"negative latency sample {d}")
        self.seen += 1
        self.total += d
        if d > self.max:
            self.max = d
        s = self.samples
        if len(s) < self.cap:
            s.append(d)
        else:
            j = self._rng.randrange(self.seen)
            if j < self.cap:
                s[j] = d


class MessageLog:
    """Origin-side message counters, optionally with a trace.

    Threaded engines call record_message under the transport lock; sequential
    engines are single-threaded, so plain ints are safe in both.
    """

    __slots__ = ("msgs_full", "msgs_flush", "bytes_sent", "transport_cost_ns",
                 "trace", "header_bytes", "item_bytes")

    def __init__(self, n_scopes: int, item_bytes: int, header_bytes: int,
                 trace: bool):
        self.msgs_full = [0] * n_scopes
        self.msgs_flush = [0] * n_scopes
        self.bytes_sent = 0
        self.transport_cost_ns = 0.0
        self.trace = [] if trace else None
        self.header_bytes = header_bytes
        self.item_bytes = item_bytes

    def record_message(self, msg, scope: int, net_cost_ns: float) -> None:
        k = len(msg.items)
        self.bytes_sent += k * self.item_bytes + self.header_bytes
        self.transport_cost_ns += net_cost_ns
        if msg.cause == "full":
            self.msgs_full[scope] += 1
        else:
            self.msgs_flush[scope] += 1
        if self.trace is not None:
            self.trace.append({
                "origin": msg.origin,
                "dest_scope": msg.dest_scope,
                "k": k,
                "cause": msg.cause,
                "grouped": msg.grouped,
                "sent_at": msg.sent_at,
            })


@dataclass
class RunMetrics:
    """Merged result of one run. to_dict() is the stable JSON shape."""

    scheme: str
    mode: str
    seed: int
    topo: dict
    g: int
    item_bytes: int
    messages_sent: int
    full_messages: int
    flush_messages: int
    bytes_sent: int
    produced: int
    delivered: int
    self_sends: int
    item_latency: dict
    transport_cost_ns: float
    runtime_ns: int
    wasted_updates: int = 0
    out_of_order_events: int = 0
    # Internal detail kept out of the JSON summary; tests use these.
    scope_kind: str = field(default="worker", repr=False)
    messages_by_scope: list = field(default_factory=list, repr=False)
    inserted_by_scope: list = field(default_factory=list, repr=False)
    comm: Optional[dict] = field(default=None, repr=False)
    latency_samples: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "scheme": self.scheme,
            "mode": self.mode,
            "seed": self.seed,
            "topo": dict(self.topo),
            "g": self.g,
            "item_bytes": self.item_bytes,
            "messages_sent": self.messages_sent,
            "full_messages": self.full_messages,
            "flush_messages": self.flush_messages,
            "bytes_sent": self.bytes_sent,
            "produced": self.produced,
            "delivered": self.delivered,
            "self_sends": self.self_sends,
            "item_latency": dict(self.item_latency),
            "wasted_updates": self.wasted_updates,
            "out_of_order_events": self.out_of_order_events,
            "transport_cost_ns": self.transport_cost_ns,
            "runtime_ns": self.runtime_ns,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def merge(log: MessageLog, shards, *, scheme, mode, seed, topo, g, item_bytes,
          produced, delivered, self_sends, inserted_by_scope, scope_kind,
          runtime_ns, comm=None, quiesced=True) -> RunMetrics:
    """Fold the message log and worker shards into a RunMetrics.

    Refuses to summarize a run that has not quiesced: counters would be
    mid-flight and the latency population incomplete.
    """
    if not quiesced:
        raise UsageError("summarize called before quiescence")
    samples = []
    total = 0
    count = 0
    maximum = 0
    for sh in shards:
        samples.extend(sh.samples)
        total += sh.total
        count += sh.seen
        if sh.max > maximum:
            maximum = sh.max
    lat = summarize(samples, total=total, count=count,
                    maximum=maximum if count else None)
    msgs_by_scope = [a + b for a, b in zip(log.msgs_full, log.msgs_flush)]
    return RunMetrics(
        scheme=scheme, mode=mode, seed=seed, topo=topo, g=g,
        item_bytes=item_bytes,
        messages_sent=sum(msgs_by_scope),
        full_messages=sum(log.msgs_full),
        flush_messages=sum(log.msgs_flush),
        bytes_sent=log.bytes_sent,
        produced=produced, delivered=delivered, self_sends=self_sends,
        item_latency=lat,
        transport_cost_ns=log.transport_cost_ns,
        runtime_ns=runtime_ns,
        scope_kind=scope_kind,
        messages_by_scope=msgs_by_scope,
        inserted_by_scope=list(inserted_by_scope),
        comm=comm,
        latency_samples=samples,
    )
