"""Benchmark workloads driving the aggregation schemes."""
from .graphs import Graph, INF, dijkstra, load_edge_list, random_graph
from .histogram import HistogramResult, HistogramSpec, run_histogram
from .ig import IGResult, IGSpec, run_ig, table_value
from .phold import PholdResult, PholdSpec, recount_out_of_order, run_phold
from .pingack import PingAckResult, PingAckSpec, run_pingack, sweep_pingack
from .sssp import SSSPResult, SSSPSpec, run_sssp

__all__ = [
    "Graph", "HistogramResult", "HistogramSpec", "IGResult", "IGSpec", "INF",
    "PholdResult", "PholdSpec", "PingAckResult", "PingAckSpec", "SSSPResult",
    "SSSPSpec", "dijkstra", "load_edge_list", "random_graph",
    "recount_out_of_order", "run_histogram", "run_ig", "run_phold",
    "run_pingack", "run_sssp", "sweep_pingack", "table_value",
]
