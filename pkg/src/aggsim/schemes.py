"""The four aggregation schemes and their buffer machinery.

Scheme tokens:
  ww  - each source worker keeps one buffer per destination worker.
  wps - each source worker keeps one buffer per destination process; the
        receiving process groups items by destination worker.
  wsp - same buffer layout as wps, but the source worker groups the batch
        before sending, so the receiver only splits contiguous runs.
  pp  - all workers of a process share one buffer per destination process;
        grouping happens at the destination, as in wps.

Items whose destination worker lives in the source process bypass buffering
entirely and go straight to the local delivery queue; shared-memory delivery
needs no coalescing. ww still allocates the buffers for same-process
destinations (the layout formula counts them) but never fills them.

A buffer emits exactly when it reaches g items (cause "full", k == g) or when
flushed while non-empty (cause "flush", k < g, message resized to k).
"""
from __future__ import annotations

import threading
from enum import Enum
from typing import Callable, Optional, Sequence

from .errors import SetupError, UsageError
from .topology import Item, Topology

CAUSE_FULL = "full"
CAUSE_FLUSH = "flush"


class SchemeKind(str, Enum):
    WW = "ww"
    WPS = "wps"
    WSP = "wsp"
    PP = "pp"

    @classmethod
    def parse(cls, token) -> "SchemeKind":
        if isinstance(token, cls):
            return token
        try:
            return cls(str(token).lower())
        except ValueError:
            raise UsageError(
                f"unknown scheme {token!r}; expected one of "
                f"{[k.value for k in cls]}") from None


class CoalescedMessage(tuple):
    """One wire message carrying k buffered items.

    origin is the source process, dest_scope the destination worker (ww) or
    process (wps/wsp/pp). grouped means items are contiguous by destination
    worker. sent_at is the departure timestamp on the emitting worker's clock.
    """

    __slots__ = ()

    def __new__(cls, origin, dest_scope, items, grouped, cause, sent_at,
                priority=False, src_worker=-1):
        return tuple.__new__(cls, (origin, dest_scope, items, grouped, cause,
                                   sent_at, priority, src_worker))

    origin = property(lambda s: s[0])
    dest_scope = property(lambda s: s[1])
    items = property(lambda s: s[2])
    grouped = property(lambda s: s[3])
    cause = property(lambda s: s[4])
    sent_at = property(lambda s: s[5])
    priority = property(lambda s: s[6])
    src_worker = property(lambda s: s[7])

    @property
    def k(self) -> int:
        return len(self[2])


class GroupingStats:
    """Touch counter for group_items: one per item plus one per bucket."""

    __slots__ = ("touches", "calls")

    def __init__(self):
        self.touches = 0
        self.calls = 0


def group_items(items: Sequence[Item], topo: Topology,
                stats: Optional[GroupingStats] = None) -> list:
    """Stable counting sort of a batch by destination worker.

    All destinations must live in one process. Two passes: count per local
    destination rank, then place in input order, so relative order per
    destination is preserved. O(k + t) with t = workers per process.
    """
    if not items:
        return []
    t = topo.workers_per_proc
    w = topo.total_workers
    first = items[0][0]
    if not 0 <= first < w:
        raise UsageError(f"destination {first} out of range")
    base = (first // t) * t
    counts = [0] * t
    for it in items:
        local = it[0] - base
        if not 0 <= local < t:
            raise UsageError(
                "group_items batch spans more than one destination process")
        counts[local] += 1
    offsets = [0] * t
    acc = 0
    for i, c in enumerate(counts):
        offsets[i] = acc
        acc += c
    out = [None] * len(items)
    for it in items:
        local = it[0] - base
        out[offsets[local]] = it
        offsets[local] += 1
    if stats is not None:
        stats.touches += len(items) + t
        stats.calls += 1
    return out


def split_grouped(items: Sequence[Item]) -> list:
    """Split a dest-contiguous batch into (worker, run) pairs, in order."""
    plan = []
    i = 0
    n = len(items)
    while i < n:
        d = items[i][0]
        j = i + 1
        while j < n and items[j][0] == d:
            j += 1
        plan.append((d, list(items[i:j])))
        i = j
    return plan


class _SharedBuffer:
    """pp buffer shared by all workers of one source process.

    Every operation runs under the buffer mutex, which linearizes the
    append-and-seal protocol; generation counts seals. inserted is the
    cumulative item count for per-scope accounting.
    """

    __slots__ = ("items", "lock", "generation", "inserted", "first_ts",
                 "max_ts")

    def __init__(self):
        self.items = []
        self.lock = threading.Lock()
        self.generation = 0
        self.inserted = 0
        self.first_ts = None
        # newest created_at in the buffer; contributors have independent
        # clocks, so a message may not depart before its newest item
        self.max_ts = 0


class Aggregator:
    """Base class: buffer bookkeeping common to all schemes.

    Subclasses own the layout. An aggregator is inert until bind() attaches a
    transport (the engine); create -> register sinks -> spawn is the intended
    order, and a second spawn on the same instance is refused.
    """

    kind: SchemeKind
    scope_kind = "worker"  # flush/accounting scope; pp overrides

    def __init__(self, kind: SchemeKind, topo: Topology, g: int,
                 item_bytes: int, sinks=None):
        if g < 1:
            raise UsageError(f"g must be >= 1, got {g}")
        if item_bytes < 1:
            raise UsageError(f"item_bytes must be >= 1, got {item_bytes}")
        self.kind = kind
        self.topo = topo
        self.g = g
        self.item_bytes = item_bytes
        w = topo.total_workers
        self.sinks: list = [None] * w
        if sinks is not None:
            for wid, fn in enumerate(sinks):
                self.sinks[wid] = fn
        self.auto_flush_idle = False
        self.flush_timeout_ns: Optional[int] = None
        self.expedited = False
        self.grouping_stats = GroupingStats()
        self._transport = None
        self._t = topo.workers_per_proc
        self._w = w
        self._n = topo.total_processes

    # -- wiring -----------------------------------------------------------
    def register_sink(self, worker: int, fn: Callable) -> None:
        if not 0 <= worker < self._w:
            raise UsageError(f"worker {worker} out of range")
        self.sinks[worker] = fn

    def bind(self, transport) -> None:
        if self._transport is not None:
            raise UsageError("aggregator is already attached to a run")
        self._transport = transport

    def set_auto_flush(self, on_idle: bool, timeout_ns: Optional[int] = None):
        if timeout_ns is not None and timeout_ns <= 0:
            raise UsageError("flush timeout must be a positive ns count")
        self.auto_flush_idle = bool(on_idle)
        self.flush_timeout_ns = timeout_ns

    def _check(self, source: int, dest: int):
        if not 0 <= dest < self._w:
            raise UsageError(f"destination worker {dest} out of range")
        if self.sinks[dest] is None:
            raise SetupError(f"no delivery sink registered for worker {dest}")
        if self._transport is None:
            raise SetupError("aggregator not attached to a run")

    def _emit(self, src_worker, dest_scope, batch, grouped, cause, now):
        msg = CoalescedMessage(src_worker // self._t, dest_scope, batch,
                               grouped, cause, now, self.expedited, src_worker)
        self._transport.send(msg)

    # -- introspection ------------------------------------------------------
    def buffers_per_owner(self) -> int:
        raise NotImplementedError

    def owners(self) -> int:
        """Number of buffer owners (workers, or processes for pp)."""
        raise NotImplementedError

    def allocated_bytes(self) -> dict:
        """Modeled buffer bytes: every allocated buffer holds g slots of
        item_bytes each. Matches the analytic memory overhead by construction
        of the layout, which is exactly what the cross-check pins down."""
        per_owner = self.buffers_per_owner() * self.g * self.item_bytes
        if self.scope_kind == "worker":
            return {"per_core_bytes": per_owner,
                    "per_process_bytes": per_owner * self._t}
        return {"per_core_bytes": 0, "per_process_bytes": per_owner}

    def inserted_per_scope(self) -> list:
        raise NotImplementedError

    def flush_owners(self) -> range:
        """Worker ids whose flush() calls cover every buffer exactly once."""
        if self.scope_kind == "worker":
            return range(self._w)
        return range(0, self._w, self._t)

    # -- scheme API (subclasses) -------------------------------------------
    def insert(self, source: int, item: Item, now: int) -> None:
        raise NotImplementedError

    def flush(self, source: int, now: int) -> int:
        raise NotImplementedError

    def on_receive(self, msg: CoalescedMessage) -> list:
        """Delivery plan for an arrived message: [(worker, items), ...]."""
        raise NotImplementedError

    def owner_buffered(self, worker: int) -> int:
        """Items currently buffered in the scope worker would flush."""
        raise NotImplementedError

    def total_buffered(self) -> int:
        raise NotImplementedError

    # -- timeout flush support ----------------------------------------------
    def pending_deadlines(self) -> list:
        """[(flushing worker, deadline_ns)] for non-empty buffers, oldest
        first. Only meaningful when flush_timeout_ns is set."""
        raise NotImplementedError

    def flush_expired(self, source: int, now: int) -> int:
        """Flush buffers in source's scope whose first item is older than the
        timeout. Returns messages emitted."""
        raise NotImplementedError


class _WorkerBufferedAggregator(Aggregator):
    """Common machinery for ww/wps/wsp: per-source-worker buffer rows."""

    def __init__(self, kind, topo, g, item_bytes, sinks, n_cols):
        super().__init__(kind, topo, g, item_bytes, sinks)
        self._cols = n_cols
        self._bufs = [[[] for _ in range(n_cols)] for _ in range(self._w)]
        self._pending = [0] * self._w       # currently buffered per owner
        self._inserted = [0] * self._w      # cumulative buffered inserts
        self._first_ts = [{} for _ in range(self._w)]  # per owner: col -> ts

    def buffers_per_owner(self) -> int:
        return self._cols

    def owners(self) -> int:
        return self._w

    def inserted_per_scope(self) -> list:
        return list(self._inserted)

    def owner_buffered(self, worker: int) -> int:
        return self._pending[worker]

    def total_buffered(self) -> int:
        return sum(self._pending)

    def _column(self, source: int, dest: int) -> int:
        raise NotImplementedError

    def _seal_batch(self, batch: list):
        """Hook: wsp groups at the source; others pass through."""
        return batch, False

    def insert(self, source, item, now):
        dest = item[0]
        self._check(source, dest)
        t = self._t
        if dest // t == source // t:
            self._transport.local_deliver(source, dest, (item,), now)
            return
        col = self._column(source, dest)
        buf = self._bufs[source][col]
        if not buf and self.flush_timeout_ns is not None:
            self._first_ts[source][col] = now
        buf.append(item)
        self._inserted[source] += 1
        self._pending[source] += 1
        if len(buf) == self.g:
            self._bufs[source][col] = []
            self._pending[source] -= self.g
            if self.flush_timeout_ns is not None:
                self._first_ts[source].pop(col, None)
            batch, grouped = self._seal_batch(buf)
            self._emit(source, self._dest_scope(col), batch, grouped,
                       CAUSE_FULL, now)

    def _dest_scope(self, col: int) -> int:
        raise NotImplementedError

    def flush(self, source, now):
        row = self._bufs[source]
        n = 0
        for col in range(self._cols):
            buf = row[col]
            if buf:
                row[col] = []
                self._pending[source] -= len(buf)
                if self.flush_timeout_ns is not None:
                    self._first_ts[source].pop(col, None)
                batch, grouped = self._seal_batch(buf)
                self._emit(source, self._dest_scope(col), batch, grouped,
                           CAUSE_FLUSH, now)
                n += 1
        return n

    def pending_deadlines(self):
        tns = self.flush_timeout_ns
        if tns is None:
            return []
        out = [(ts + tns, owner)
               for owner, cols in enumerate(self._first_ts)
               for ts in cols.values()]
        out.sort()
        return [(owner, ddl) for ddl, owner in out]

    def flush_expired(self, source, now):
        tns = self.flush_timeout_ns
        if tns is None:
            return 0
        timers = self._first_ts[source]
        if not timers:
            return 0
        due = [col for col, ts in timers.items() if ts + tns <= now]
        row = self._bufs[source]
        n = 0
        for col in sorted(due):
            buf = row[col]
            if not buf:
                continue
            row[col] = []
            self._pending[source] -= len(buf)
            timers.pop(col, None)
            batch, grouped = self._seal_batch(buf)
            self._emit(source, self._dest_scope(col), batch, grouped,
                       CAUSE_FLUSH, now)
            n += 1
        return n


class _WWAggregator(_WorkerBufferedAggregator):
    """ww: one buffer per destination worker at each source worker."""

    def __init__(self, topo, g, item_bytes, sinks=None):
        super().__init__(SchemeKind.WW, topo, g, item_bytes, sinks,
                         topo.total_workers)

    def _column(self, source, dest):
        return dest

    def _dest_scope(self, col):
        return col

    def _seal_batch(self, batch):
        # Single destination: trivially contiguous.
        return batch, True

    def on_receive(self, msg):
        return [(msg.dest_scope, list(msg.items))]


class _ProcBufferedAggregator(_WorkerBufferedAggregator):
    """wps/wsp: one buffer per destination process at each source worker."""

    group_at_source = False

    def __init__(self, kind, topo, g, item_bytes, sinks=None):
        super().__init__(kind, topo, g, item_bytes, sinks,
                         topo.total_processes)

    def _column(self, source, dest):
        return dest // self._t

    def _dest_scope(self, col):
        return col

    def on_receive(self, msg):
        items = msg.items
        if msg.grouped:
            return split_grouped(items)
        grouped = group_items(items, self.topo, self.grouping_stats)
        return split_grouped(grouped)


class _WPsAggregator(_ProcBufferedAggregator):
    def __init__(self, topo, g, item_bytes, sinks=None):
        super().__init__(SchemeKind.WPS, topo, g, item_bytes, sinks)


class _WsPAggregator(_ProcBufferedAggregator):
    """wsp groups at the source worker, so receivers only split runs."""

    def __init__(self, topo, g, item_bytes, sinks=None):
        super().__init__(SchemeKind.WSP, topo, g, item_bytes, sinks)

    def _seal_batch(self, batch):
        return group_items(batch, self.topo, self.grouping_stats), True


class _PPAggregator(Aggregator):
    """pp: one shared buffer per destination process on each source process."""

    scope_kind = "process"

    def __init__(self, topo, g, item_bytes, sinks=None):
        super().__init__(SchemeKind.PP, topo, g, item_bytes, sinks)
        n = self._n
        self._shared = [[_SharedBuffer() for _ in range(n)] for _ in range(n)]

    def buffers_per_owner(self) -> int:
        return self._n

    def owners(self) -> int:
        return self._n

    def inserted_per_scope(self) -> list:
        return [sum(b.inserted for b in row) for row in self._shared]

    def owner_buffered(self, worker: int) -> int:
        row = self._shared[worker // self._t]
        return sum(len(b.items) for b in row)

    def total_buffered(self) -> int:
        return sum(len(b.items) for row in self._shared for b in row)

    def insert(self, source, item, now):
        dest = item[0]
        self._check(source, dest)
        t = self._t
        sp = source // t
        dp = dest // t
        if dp == sp:
            self._transport.local_deliver(source, dest, (item,), now)
            return
        b = self._shared[sp][dp]
        sealed = None
        with b.lock:
            buf = b.items
            if not buf and self.flush_timeout_ns is not None:
                b.first_ts = now
            buf.append(item)
            b.inserted += 1
            if now > b.max_ts:
                b.max_ts = now
            if len(buf) == self.g:
                b.items = []
                b.generation += 1
                b.first_ts = None
                seal_ts = b.max_ts if b.max_ts > now else now
                b.max_ts = 0
                sealed = buf
        if sealed is not None:
            self._emit(source, dp, sealed, False, CAUSE_FULL, seal_ts)

    def flush(self, source, now):
        sp = source // self._t
        n = 0
        for dp, b in enumerate(self._shared[sp]):
            with b.lock:
                buf = b.items
                if buf:
                    b.items = []
                    b.generation += 1
                    b.first_ts = None
                    seal_ts = b.max_ts if b.max_ts > now else now
                    b.max_ts = 0
                else:
                    buf = None
            if buf:
                self._emit(source, dp, buf, False, CAUSE_FLUSH, seal_ts)
                n += 1
        return n

    def on_receive(self, msg):
        grouped = group_items(msg.items, self.topo, self.grouping_stats)
        return split_grouped(grouped)

    def pending_deadlines(self):
        tns = self.flush_timeout_ns
        if tns is None:
            return []
        t = self._t
        out = []
        for sp, row in enumerate(self._shared):
            for b in row:
                if b.first_ts is not None:
                    out.append((b.first_ts + tns, sp * t))
        out.sort()
        return [(owner, ddl) for ddl, owner in out]

    def flush_expired(self, source, now):
        tns = self.flush_timeout_ns
        if tns is None:
            return 0
        sp = source // self._t
        n = 0
        for dp, b in enumerate(self._shared[sp]):
            with b.lock:
                buf = b.items
                if buf and b.first_ts is not None and b.first_ts + tns <= now:
                    b.items = []
                    b.generation += 1
                    b.first_ts = None
                    seal_ts = b.max_ts if b.max_ts > now else now
                    b.max_ts = 0
                else:
                    buf = None
            if buf:
                self._emit(source, dp, buf, False, CAUSE_FLUSH, seal_ts)
                n += 1
        return n


_SCHEME_CLASSES = {
    SchemeKind.WW: _WWAggregator,
    SchemeKind.WPS: _WPsAggregator,
    SchemeKind.WSP: _WsPAggregator,
    SchemeKind.PP: _PPAggregator,
}


def create_aggregator(kind, topo: Topology, g: int, item_bytes: int,
                      sinks=None) -> Aggregator:
    """Build an aggregator of the given scheme for a topology."""
    kind = SchemeKind.parse(kind)
    return _SCHEME_CLASSES[kind](topo, g, item_bytes, sinks)


def set_auto_flush(agg: Aggregator, on_idle: bool,
                   timeout_ns: Optional[int] = None) -> None:
    """Configure idle and timeout flushing on an aggregator."""
    agg.set_auto_flush(on_idle, timeout_ns)
