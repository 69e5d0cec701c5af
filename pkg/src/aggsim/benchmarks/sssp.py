"""Single-source shortest paths over the aggregation fabric.

Vertices are block-partitioned one contiguous range per worker. A distance
update (v, d) travels to v's owner; if it improves the stored distance the
owner relaxes v's out-edges, otherwise it counts as a wasted update. Updates
whose tentative distance falls beyond the current threshold window are held
in a per-worker heap and released when the window advances by
threshold_delta, so cheap paths propagate before expensive ones
(delta-stepping-style phases). Distances are checked against a reference
Dijkstra run; wasted updates are schedule-dependent and only compared as
trends.
"""
from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass

import numpy as np

from ..errors import OracleMismatch, UsageError
from ..runtime import WorkerProgram
from ..topology import Topology
from .base import BenchResult, DEFAULT_TIMEOUT_S, launch, positive
from .graphs import Graph, INF, dijkstra

_MAX_PHASES = 1_000_000  # defense against a zero-progress window bug


@dataclass(frozen=True)
class SSSPSpec:
    graph: Graph
    source: int = 0
    threshold_delta: int = 100
    seed: int = 0

    def __post_init__(self):
        positive("threshold_delta", self.threshold_delta)
        if not 0 <= self.source < self.graph.n:
            raise UsageError("source vertex out of range")

    def validate(self, topo: Topology) -> None:
        if self.graph.n < topo.total_workers:
            raise UsageError("need at least one vertex per worker")


def _block(n, w, wid):
    # ceil-sized blocks; trailing workers may own a short or empty block
    size = (n + w - 1) // w
    lo = min(n, wid * size)
    return lo, min(n, lo + size)


class _SSSPWorker(WorkerProgram):
    def __init__(self, wid, spec, topo):
        self.wid = wid
        self.w = topo.total_workers
        self.spec = spec
        g = spec.graph
        self.block_size = (g.n + self.w - 1) // self.w
        self.lo, self.hi = _block(g.n, self.w, wid)
        self.dist = np.full(self.hi - self.lo, INF, dtype=np.int64)
        self.threshold = spec.threshold_delta
        self.deferred = []  # (distance, tie, vertex) min-heap
        self._tie = 0
        self.wasted = 0

    def on_start(self, ctx):
        src = self.spec.source
        if self.lo <= src < self.hi:
            self.dist[src - self.lo] = 0
            self._relax(ctx, src, 0)

    def _route(self, ctx, v, d):
        if d < self.threshold:
            ctx.insert(v // self.block_size, (v, d))
        else:
            heapq.heappush(self.deferred, (d, self._tie, v))
            self._tie += 1

    def _relax(self, ctx, v, d):
        g = self.spec.graph
        lo, hi = g.indptr[v], g.indptr[v + 1]
        heads = g.heads
        weights = g.weights
        for i in range(lo, hi):
            self._route(ctx, int(heads[i]), d + int(weights[i]))

    def on_item(self, ctx, item):
        v, d = item[1]
        slot = v - self.lo
        if d < self.dist[slot]:
            self.dist[slot] = d
            self._relax(ctx, v, d)
        else:
            self.wasted += 1

    # called between phases via broadcast_task
    def release(self, ctx, new_threshold):
        self.threshold = new_threshold
        heap = self.deferred
        while heap and heap[0][0] < new_threshold:
            d, _, v = heapq.heappop(heap)
            ctx.insert(v // self.block_size, (v, d))
        return len(heap)


class SSSPResult(BenchResult):
    benchmark = "sssp"

    def __init__(self, metrics, distances, expected, phases):
        super().__init__(metrics)
        self.distances = distances
        self.expected = expected
        self.phases = phases

    def extra(self):
        reachable = int((self.distances != INF).sum())
        return {
            "vertices": int(self.distances.size),
            "reachable": reachable,
            "phases": self.phases,
            "distance_digest": _digest(self.distances),
            "oracle_ok": bool(np.array_equal(self.distances, self.expected)),
        }

    def verify(self):
        if not np.array_equal(self.distances, self.expected):
            bad = int(np.flatnonzero(self.distances != self.expected)[0])
            raise OracleMismatch(
                f"sssp distance[{bad}] = {int(self.distances[bad])}, "
                f"oracle {int(self.expected[bad])}")
        return self


def _digest(dist) -> str:
    # canonical form: unreachable as -1 so the sentinel value is not baked in
    canon = np.where(dist == INF, -1, dist).astype(np.int64)
    return hashlib.sha256(np.ascontiguousarray(canon).tobytes()).hexdigest()


def run_sssp(spec: SSSPSpec, *, scheme, g, topo, mode="sequential", cfg=None,
             item_bytes=24, work_ns=100, deliver_ns=50, seed=None,
             timeout_s=DEFAULT_TIMEOUT_S, flush_timeout_ns=None, verify=True,
             trace=False) -> SSSPResult:
    spec.validate(topo)
    run_seed = spec.seed if seed is None else seed
    handle, _ = launch(
        topo=topo, scheme=scheme, g=g, item_bytes=item_bytes,
        program=lambda wid: _SSSPWorker(wid, spec, topo),
        mode=mode, seed=run_seed, cfg=cfg, work_ns=work_ns,
        deliver_ns=deliver_ns, trace=trace,
        flush_timeout_ns=flush_timeout_ns)

    threshold = spec.threshold_delta
    phases = 0
    while True:
        handle.run_phase(timeout_s=timeout_s)
        phases += 1
        if phases > _MAX_PHASES:
            raise OracleMismatch("threshold window made no progress")
        # quiescent here, so the heaps are the complete remaining work
        if not any(handle.broadcast_task(
                lambda ctx: len(ctx.driver.deferred))):
            break
        threshold += spec.threshold_delta
        handle.broadcast_task(
            lambda ctx, thr=threshold: ctx.driver.release(ctx, thr))
    metrics = handle.await_quiescence(timeout_s=timeout_s)

    drivers = [wk.driver for wk in handle.workers]
    dist = np.concatenate([d.dist for d in drivers])[:spec.graph.n]
    metrics.wasted_updates = sum(d.wasted for d in drivers)
    expected = dijkstra(spec.graph, spec.source)
    result = SSSPResult(metrics, dist, expected, phases)
    if trace:
        result.trace = handle.trace
    if verify:
        result.verify()
    return result
