"""Distributed histogram workload.

Every worker inserts updates_per_worker increments to uniformly random bins;
bins are dealt to workers cyclically (bin b lives on worker b mod w). The
oracle is a direct bincount over every worker's pre-drawn bin stream, so the
final table must match it exactly for any scheme, mode, or buffer size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OracleMismatch, UsageError
from ..runtime import WorkerProgram
from ..topology import Topology
from .base import BenchResult, DEFAULT_TIMEOUT_S, launch, positive


@dataclass(frozen=True)
class HistogramSpec:
    updates_per_worker: int
    table_size: int
    seed: int = 0

    def __post_init__(self):
        positive("updates_per_worker", self.updates_per_worker)
        positive("table_size", self.table_size)

    def validate(self, topo: Topology) -> None:
        if self.table_size < topo.total_workers:
            raise UsageError("table_size must be >= total workers")


class _HistWorker(WorkerProgram):
    def __init__(self, wid, spec, topo, chunk):
        self.wid = wid
        self.w = topo.total_workers
        self.chunk = chunk
        self.spec = spec
        self.pos = 0
        self.bins = None
        self.counts = None

    def on_start(self, ctx):
        spec = self.spec
        # pre-draw the whole stream; lists beat numpy scalars in the hot loop
        draws = ctx.rng.integers(0, spec.table_size,
                                 size=spec.updates_per_worker)
        self.bins = draws.tolist()
        n_local = (spec.table_size - self.wid + self.w - 1) // self.w
        self.counts = np.zeros(n_local, dtype=np.int64)

    def step(self, ctx):
        bins = self.bins
        end = min(self.pos + self.chunk, len(bins))
        if self.pos >= end:
            return False
        w = self.w
        insert = ctx.insert
        for i in range(self.pos, end):
            b = bins[i]
            insert(b % w, b)
        self.pos = end
        return True

    def on_item(self, ctx, item):
        # cyclic deal: bin b maps to local slot (b - wid) / w
        self.counts[(item[1] - self.wid) // self.w] += 1


class HistogramResult(BenchResult):
    benchmark = "histogram"

    def __init__(self, metrics, table, expected):
        super().__init__(metrics)
        self.table = table
        self.expected = expected

    def extra(self):
        return {
            "table_size": int(self.table.size),
            "table_total": int(self.table.sum()),
            "table_digest": _digest(self.table),
            "oracle_ok": bool(np.array_equal(self.table, self.expected)),
        }

    def verify(self):
        if not np.array_equal(self.table, self.expected):
            bad = int(np.flatnonzero(self.table != self.expected)[0])
            raise OracleMismatch(
                f"histogram bin {bad}: got {int(self.table[bad])}, "
                f"expected {int(self.expected[bad])}")
        return self


def _digest(arr) -> str:
    import hashlib
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def run_histogram(spec: HistogramSpec, *, scheme, g, topo, mode="sequential",
                  cfg=None, item_bytes=16, work_ns=100, deliver_ns=50,
                  chunk=256, seed=None, timeout_s=DEFAULT_TIMEOUT_S,
                  flush_timeout_ns=None, verify=True,
                  trace=False) -> HistogramResult:
    spec.validate(topo)
    run_seed = spec.seed if seed is None else seed
    handle, _ = launch(
        topo=topo, scheme=scheme, g=g, item_bytes=item_bytes,
        program=lambda wid: _HistWorker(wid, spec, topo, chunk),
        mode=mode, seed=run_seed, cfg=cfg, work_ns=work_ns,
        deliver_ns=deliver_ns, trace=trace,
        flush_timeout_ns=flush_timeout_ns)
    metrics = handle.await_quiescence(timeout_s=timeout_s)

    w = topo.total_workers
    drivers = [wk.driver for wk in handle.workers]
    table = np.zeros(spec.table_size, dtype=np.int64)
    for d in drivers:
        table[d.wid::w] = d.counts
    expected = np.zeros(spec.table_size, dtype=np.int64)
    for d in drivers:
        expected += np.bincount(np.asarray(d.bins, dtype=np.int64),
                                minlength=spec.table_size)
    result = HistogramResult(metrics, table, expected)
    if trace:
        result.trace = handle.trace
    if verify:
        result.verify()
        if metrics.produced != w * spec.updates_per_worker:
            raise OracleMismatch(
                f"produced {metrics.produced} != "
                f"{w * spec.updates_per_worker} expected updates")
    return result
