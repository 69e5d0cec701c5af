"""Shared plumbing for the benchmark drivers."""
from __future__ import annotations

import json

from ..errors import UsageError
from ..runtime import TransportConfig, spawn
from ..schemes import SchemeKind, create_aggregator
from ..topology import Topology

SCHEME_NONE = "none"  # no aggregation: every item ships as its own message
DEFAULT_TIMEOUT_S = 120.0


def resolve_scheme(token):
    """Map a CLI scheme token to (SchemeKind, g override or None).

    "none" runs the per-destination-worker layout with g=1, which degenerates
    to one message per item.
    """
    if str(token).lower() == SCHEME_NONE:
        return SchemeKind.WW, 1
    return SchemeKind.parse(token), None


def launch(*, topo: Topology, scheme, g: int, item_bytes: int, program,
           mode: str, seed: int, cfg: TransportConfig = None,
           work_ns: int = 100, deliver_ns: int = 50, record_items=False,
           trace=False, samples_cap=None, sinks_optional=False,
           auto_flush_idle=False, flush_timeout_ns=None):
    """Build the aggregator for a scheme token and spawn a run."""
    kind, g_override = resolve_scheme(scheme)
    g_eff = g_override if g_override is not None else g
    agg = create_aggregator(kind, topo, g_eff, item_bytes)
    if auto_flush_idle or flush_timeout_ns is not None:
        agg.set_auto_flush(auto_flush_idle, flush_timeout_ns)
    kw = dict(mode=mode, program=program, seed=seed, work_ns=work_ns,
              deliver_ns=deliver_ns, record_items=record_items, trace=trace)
    if samples_cap is not None:
        kw["samples_cap"] = samples_cap
    return spawn(topo, agg, cfg, **kw), g_eff


class BenchResult:
    """Base for benchmark results: metrics plus workload-specific fields."""

    benchmark = "?"

    def __init__(self, metrics):
        self.metrics = metrics
        self.trace = None  # message trace entries when the run recorded them

    def extra(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        out = self.metrics.to_dict()
        out["benchmark"] = self.benchmark
        out.update(self.extra())
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))


def positive(name, value):
    if int(value) != value or value < 1:
        raise UsageError(f"{name} must be a positive integer")
    return int(value)
