"""Test plumbing: a loopback transport for driving aggregators by hand."""
from aggsim.schemes import create_aggregator
from aggsim.topology import Item


class LoopbackTransport:
    """Collects emitted messages and local deliveries for assertions."""

    def __init__(self):
        self.messages = []
        self.local = []

    def send(self, msg):
        self.messages.append(msg)

    def local_deliver(self, source, dest, items, now):
        self.local.append((source, dest, tuple(items), now))


def make_agg(kind, topo, g, item_bytes=8, timeout_ns=None):
    agg = create_aggregator(kind, topo, g, item_bytes)
    for wid in range(topo.total_workers):
        agg.register_sink(wid, lambda items: None)
    if timeout_ns is not None:
        agg.set_auto_flush(False, timeout_ns)
    transport = LoopbackTransport()
    agg.bind(transport)
    return agg, transport


def mk_item(dest, seq, created_at=0, payload=None):
    return Item(dest, payload, created_at, seq)
