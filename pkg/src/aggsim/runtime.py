"""Execution engine: worker contexts, simulated transport, quiescence.

Run modes:

* sequential: a single thread steps every worker in seeded shuffled rounds.
  Clocks are virtual integer ns that advance only through work (insert,
  delivery, explicit advance), and a run is bit-reproducible per seed.
* threaded: one OS thread per worker with wall clocks. Interleavings are
  real; transport costs are recorded but not slept.

A remote message pays alpha_ns + beta_ns_per_byte * bytes of network cost.
With the communication context enabled, each outgoing message first occupies
its origin process's single comm context for comm_cost_ns; that context is a
serial resource, so fine-grained traffic saturates at 1/comm_cost_ns messages
per ns per process. Channels between process pairs are FIFO: arrival stamps
are clamped monotone per (origin process, destination process) pair.

Quiescence holds when every driver is done, every delivery queue is empty,
and the produced item count equals the delivered count. await_quiescence
performs idle-flush rounds (flushing every buffer scope) whenever the run
stalls short of that, so buffered items cannot be stranded; run_idle stops at
the stall instead and leaves buffers alone.
"""
from __future__ import annotations

import random
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InternalInvariantError, QuiescenceTimeout, UsageError
from .metrics import DEFAULT_SAMPLES_CAP, LatencyShard, MessageLog, merge
from .schemes import Aggregator
from .topology import Item, Topology

MODE_SEQUENTIAL = "sequential"
MODE_THREADED = "threaded"
RUN_MODES = (MODE_SEQUENTIAL, MODE_THREADED)

_DELIVER_BUDGET = 256  # max items drained per worker turn (sequential)


@dataclass(frozen=True)
class TransportConfig:
    """Cost knobs for the simulated transport.

    comm_cost_ns is the per-message serial occupancy of the origin process's
    communication context; it only applies when comm_enabled. header_bytes is
    added to every message's byte count.
    """

    alpha_ns: float = 0.0
    beta_ns_per_byte: float = 0.0
    comm_cost_ns: float = 0.0
    comm_enabled: bool = False
    header_bytes: int = 0

    def __post_init__(self):
        for name in ("alpha_ns", "beta_ns_per_byte", "comm_cost_ns",
                     "header_bytes"):
            if getattr(self, name) < 0:
                raise UsageError(f"{name} must be >= 0")


def parse_mode(token: str) -> str:
    t = str(token).lower()
    if t not in RUN_MODES:
        raise UsageError(f"unknown run mode {token!r}; expected {RUN_MODES}")
    return t


class WorkerProgram:
    """Per-worker driver. Subclass and override what the workload needs.

    step() runs when the worker has no queued deliveries; it should do a
    bounded chunk of work and return True, or return False once the driver
    has no more self-generated work (delivery sinks may still run after
    that). on_item is the delivery sink and is mandatory for any worker that
    can receive items.
    """

    def on_start(self, ctx) -> None:
        pass

    def step(self, ctx) -> bool:
        return False

    def on_item(self, ctx, item: Item) -> None:
        raise NotImplementedError("driver received an item but has no sink")


# ---------------------------------------------------------------------------
# sequential engine
# ---------------------------------------------------------------------------

class _SeqWorker:
    """Worker context for the sequential engine; also the ctx drivers see."""

    __slots__ = ("wid", "proc", "now", "queue", "prio", "driver",
                 "driver_done", "rng", "work_ns", "produced", "delivered",
                 "self_sends", "shard", "seq_next", "seq_stride", "ins_log",
                 "dl_log", "_agg")

    def __init__(self, wid, proc, rng, work_ns, shard, stride, record_items,
                 agg):
        self.wid = wid
        self.proc = proc
        self.now = 0
        self.queue = deque()
        self.prio = deque()
        self.driver = None
        self.driver_done = False
        self.rng = rng
        self.work_ns = work_ns
        self.produced = 0
        self.delivered = 0
        self.self_sends = 0
        self.shard = shard
        self.seq_next = wid
        self.seq_stride = stride
        self.ins_log = [] if record_items else None
        self.dl_log = [] if record_items else None
        self._agg = agg

    def time_ns(self) -> int:
        return self.now

    def advance(self, ns: int) -> None:
        self.now += ns

    def insert(self, dest: int, payload) -> None:
        self.now += self.work_ns
        s = self.seq_next
        self.seq_next = s + self.seq_stride
        self.produced += 1
        if self.ins_log is not None:
            self.ins_log.append(s)
        self._agg.insert(self.wid, Item(dest, payload, self.now, s), self.now)

    def flush(self) -> int:
        return self._agg.flush(self.wid, self.now)


class _BaseRun:
    """Shared wiring for both engines (a RunHandle in the public API)."""

    mode = "?"

    def __init__(self, topo: Topology, agg: Aggregator, cfg: TransportConfig,
                 program, *, seed, work_ns, deliver_ns, samples_cap,
                 record_items, trace, record_arrivals):
        if agg.topo != topo:
            raise UsageError("aggregator topology does not match the run")
        self._topo = topo
        self._agg = agg
        self._cfg = cfg or TransportConfig()
        self._seed = seed
        self._work_ns = work_ns
        self._deliver_ns = deliver_ns
        w = topo.total_workers
        n = topo.total_processes
        self._n_workers = w
        self._n_procs = n
        self._t = topo.workers_per_proc
        scope_kind = agg.scope_kind
        n_scopes = w if scope_kind == "worker" else n
        self._log = MessageLog(n_scopes, agg.item_bytes,
                               self._cfg.header_bytes, trace)
        self._comm_ready = [0.0] * n
        self._comm_count = [0] * n
        self._comm_first = [None] * n
        self._comm_last = [0.0] * n
        self._chan_last = {}
        self._arrivals = [] if record_arrivals else None
        self._quiesced = False
        self._final = None
        cap = max(1, samples_cap // w)
        self._shard_cap = cap
        self._record_items = record_items
        # drivers
        self._programs = [program(wid) for wid in range(w)]
        agg.bind(self)

    # -- public handle surface -------------------------------------------
    @property
    def topology(self) -> Topology:
        return self._topo

    @property
    def aggregator(self) -> Aggregator:
        return self._agg

    @property
    def n_worker_contexts(self) -> int:
        return self._n_workers

    @property
    def n_comm_contexts(self) -> int:
        return self._n_procs if self._cfg.comm_enabled else 0

    @property
    def workers(self):
        return self._workers

    @property
    def trace(self):
        return self._log.trace

    @property
    def arrival_log(self):
        return self._arrivals

    def comm_stats(self) -> dict:
        per = []
        for p in range(self._n_procs):
            per.append({
                "process": p,
                "messages": self._comm_count[p],
                "first_start_ns": self._comm_first[p],
                "last_done_ns": self._comm_last[p],
                "busy_ns": self._comm_count[p] * self._cfg.comm_cost_ns,
            })
        return {"enabled": self._cfg.comm_enabled, "per_process": per}

    def summarize(self, *, scheme=None, extra_runtime_ns=None):
        workers = self._workers
        return merge(
            self._log, [w.shard for w in workers],
            scheme=scheme or self._agg.kind.value,
            mode=self.mode, seed=self._seed,
            topo=self._topo.to_config(), g=self._agg.g,
            item_bytes=self._agg.item_bytes,
            produced=sum(w.produced for w in workers),
            delivered=sum(w.delivered for w in workers),
            self_sends=sum(w.self_sends for w in workers),
            inserted_by_scope=self._agg.inserted_per_scope(),
            scope_kind=self._agg.scope_kind,
            runtime_ns=self._runtime_ns() if extra_runtime_ns is None
            else extra_runtime_ns,
            comm=self.comm_stats() if self._cfg.comm_enabled else None,
            quiesced=self._quiesced,
        )

    def inserted_seqs(self):
        out = []
        for w in self._workers:
            if w.ins_log is not None:
                out.extend(w.ins_log)
        return out

    def delivered_seqs(self):
        out = []
        for w in self._workers:
            if w.dl_log is not None:
                out.extend(w.dl_log)
        return out

    def _diagnostics(self) -> dict:
        workers = self._workers
        return {
            "produced": sum(w.produced for w in workers),
            "delivered": sum(w.delivered for w in workers),
            "drivers_pending": [w.wid for w in workers if not w.driver_done],
            "queue_depths": {w.wid: self._qdepth(w) for w in workers
                             if self._qdepth(w)},
            "buffered_total": self._agg.total_buffered(),
            "buffered_by_owner": {o: self._agg.owner_buffered(o)
                                  for o in self._agg.flush_owners()
                                  if self._agg.owner_buffered(o)},
        }

    def _runtime_ns(self):
        raise NotImplementedError

    def _qdepth(self, w):
        raise NotImplementedError


class SequentialRun(_BaseRun):
    """Deterministic single-thread engine over virtual time."""

    mode = MODE_SEQUENTIAL

    def __init__(self, topo, agg, cfg, program, **kw):
        super().__init__(topo, agg, cfg, program, **kw)
        w = self._n_workers
        seed = self._seed
        stride = w
        self._workers = []
        for wid in range(w):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(1, wid)))
            shard = LatencyShard(self._shard_cap, (seed, 2, wid))
            ctx = _SeqWorker(wid, wid // self._t, rng, self._work_ns, shard,
                             stride, self._record_items, agg)
            ctx.driver = self._programs[wid]
            agg.register_sink(wid, ctx.driver.on_item)
            self._workers.append(ctx)
        self._sched = random.Random(repr((seed, 0x5EED)))
        self._tns_active = agg.flush_timeout_ns is not None
        for ctx in self._workers:
            ctx.driver.on_start(ctx)

    # -- transport interface (called by the aggregator) --------------------
    def send(self, msg):
        agg = self._agg
        plan = agg.on_receive(msg)
        dp = plan[0][0] // self._t
        po = msg.origin
        scope = msg.src_worker if agg.scope_kind == "worker" else po
        cfg = self._cfg
        k = len(msg.items)
        nbytes = k * agg.item_bytes + cfg.header_bytes
        net = cfg.alpha_ns + cfg.beta_ns_per_byte * nbytes
        self._log.record_message(msg, scope, net)
        base = float(msg.sent_at)
        if cfg.comm_enabled:
            ready = self._comm_ready[po]
            start = base if base > ready else ready
            done = start + cfg.comm_cost_ns
            self._comm_ready[po] = done
            if self._comm_count[po] == 0:
                self._comm_first[po] = start
            self._comm_count[po] += 1
            self._comm_last[po] = done
            base = done
        arrival = int(base + net + 0.5)
        ch = (po, dp)
        last = self._chan_last.get(ch)
        if last is not None and arrival < last:
            arrival = last
        self._chan_last[ch] = arrival
        if self._arrivals is not None:
            self._arrivals.append((po, dp, arrival))
        workers = self._workers
        prio = msg.priority
        for wid, group in plan:
            tgt = workers[wid]
            (tgt.prio if prio else tgt.queue).append((arrival, group))

    def local_deliver(self, source, dest, items, now):
        self._workers[source].self_sends += len(items)
        self._workers[dest].queue.append((now, items))

    # -- stepping -----------------------------------------------------------
    def _drain(self, w, budget):
        dns = self._deliver_ns
        done = 0
        shard = w.shard
        dl_log = w.dl_log
        while done < budget:
            if w.prio:
                arrival, items = w.prio.popleft()
            elif w.queue:
                arrival, items = w.queue.popleft()
            else:
                break
            if arrival > w.now:
                w.now = arrival
            on_item = w.driver.on_item
            for it in items:
                w.now += dns
                shard.record(w.now - it[2])
                on_item(w, it)
                w.delivered += 1
                if dl_log is not None:
                    dl_log.append(it[3])
            done += len(items)
        if done:
            # deliveries may hand the driver new local work; poll it again
            w.driver_done = False
        return done > 0

    def _round(self, order):
        workers = self._workers
        agg = self._agg
        idle_flush = agg.auto_flush_idle
        tns = self._tns_active
        progress = False
        for wid in order:
            w = workers[wid]
            # deadlines fire at every scheduling turn, busy or not
            if tns and agg.flush_expired(wid, w.now):
                progress = True
            if w.prio or w.queue:
                if self._drain(w, _DELIVER_BUDGET):
                    progress = True
            elif not w.driver_done:
                if w.driver.step(w):
                    progress = True
                else:
                    w.driver_done = True
            elif idle_flush and agg.owner_buffered(wid):
                if agg.flush(wid, w.now):
                    progress = True
        return progress

    def _is_quiescent(self):
        prod = 0
        deliv = 0
        for w in self._workers:
            if not w.driver_done or w.queue or w.prio:
                return False
            prod += w.produced
            deliv += w.delivered
        return prod == deliv

    def _try_unstall(self, flush_rounds):
        agg = self._agg
        if self._is_quiescent():
            return False
        if self._tns_active:
            pend = agg.pending_deadlines()
            if pend:
                emitted = 0
                for owner, ddl in pend:
                    w = self._workers[owner]
                    if ddl > w.now:
                        w.now = ddl
                    emitted += agg.flush_expired(owner, w.now)
                if emitted:
                    return True
        if not flush_rounds:
            return False
        if agg.total_buffered() > 0:
            emitted = 0
            for owner in agg.flush_owners():
                emitted += agg.flush(owner, self._workers[owner].now)
            if emitted:
                return True
        raise InternalInvariantError(
            f"stalled without quiescence: {self._diagnostics()}")

    def _run(self, flush_rounds, timeout_s):
        t0 = time.monotonic()
        order = list(range(self._n_workers))
        shuffle = self._sched.shuffle
        rounds = 0
        while True:
            shuffle(order)
            progress = self._round(order)
            if not progress and not self._try_unstall(flush_rounds):
                break
            rounds += 1
            if timeout_s is not None and rounds % 256 == 0:
                if time.monotonic() - t0 > timeout_s:
                    raise QuiescenceTimeout(
                        f"run exceeded {timeout_s}s wall budget",
                        self._diagnostics())

    # -- handle surface -----------------------------------------------------
    def run_idle(self, timeout_s=None):
        """Run until no progress is possible without flushing buffers."""
        self._run(flush_rounds=False, timeout_s=timeout_s)

    def run_phase(self, timeout_s=None):
        """Run to quiescence (with idle-flush rounds) without finalizing."""
        self._run(flush_rounds=True, timeout_s=timeout_s)

    def broadcast_task(self, fn):
        """Run fn(ctx) once on every worker context; returns the results."""
        return [fn(w) for w in self._workers]

    def await_quiescence(self, timeout_s=None):
        self._run(flush_rounds=True, timeout_s=timeout_s)
        if not self._is_quiescent():
            raise InternalInvariantError("run loop exited without quiescence")
        if self._agg.total_buffered():
            raise InternalInvariantError(
                "quiescent with non-empty buffers: "
                f"{self._diagnostics()}")
        self._quiesced = True
        self._final = self.summarize()
        return self._final

    def _runtime_ns(self):
        return max((w.now for w in self._workers), default=0)

    def _qdepth(self, w):
        return len(w.queue) + len(w.prio)


# ---------------------------------------------------------------------------
# threaded engine
# ---------------------------------------------------------------------------

_T_DELIVER = 0
_T_FLUSH = 1
_T_TASK = 2
_T_STOP = 3


class _TQueue:
    __slots__ = ("dq", "prio", "lock", "cond")

    def __init__(self):
        self.dq = deque()
        self.prio = deque()
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)

    def push(self, entry, priority=False):
        with self.lock:
            (self.prio if priority else self.dq).append(entry)
            self.cond.notify()

    def pop(self):
        with self.lock:
            if self.prio:
                return self.prio.popleft()
            if self.dq:
                return self.dq.popleft()
            return None

    def wait(self, timeout):
        with self.lock:
            if not (self.prio or self.dq):
                self.cond.wait(timeout)

    def depth(self):
        with self.lock:
            return len(self.dq) + len(self.prio)


class _ThreadWorker:
    """Worker context for the threaded engine (wall clock)."""

    __slots__ = ("wid", "proc", "q", "driver", "driver_done", "rng",
                 "work_ns", "produced", "delivered", "self_sends", "shard",
                 "seq_next", "seq_stride", "ins_log", "dl_log", "_agg",
                 "_epoch", "thread")

    def __init__(self, wid, proc, rng, work_ns, shard, stride, record_items,
                 agg, epoch):
        self.wid = wid
        self.proc = proc
        self.q = _TQueue()
        self.driver = None
        self.driver_done = False
        self.rng = rng
        self.work_ns = work_ns
        self.produced = 0
        self.delivered = 0
        self.self_sends = 0
        self.shard = shard
        self.seq_next = wid
        self.seq_stride = stride
        self.ins_log = [] if record_items else None
        self.dl_log = [] if record_items else None
        self._agg = agg
        self._epoch = epoch
        self.thread = None

    def time_ns(self) -> int:
        return time.monotonic_ns() - self._epoch

    def advance(self, ns: int) -> None:
        pass  # wall time passes on its own

    def insert(self, dest: int, payload) -> None:
        s = self.seq_next
        self.seq_next = s + self.seq_stride
        self.produced += 1
        if self.ins_log is not None:
            self.ins_log.append(s)
        now = time.monotonic_ns() - self._epoch
        self._agg.insert(self.wid, Item(dest, payload, now, s), now)

    def flush(self) -> int:
        return self._agg.flush(self.wid, self.time_ns())


class ThreadedRun(_BaseRun):
    """One OS thread per worker; wall clocks; costs recorded, not slept."""

    mode = MODE_THREADED

    def __init__(self, topo, agg, cfg, program, **kw):
        super().__init__(topo, agg, cfg, program, **kw)
        self._epoch = time.monotonic_ns()
        self._tlock = threading.Lock()
        self._error = None
        self._stopped = False
        w = self._n_workers
        seed = self._seed
        self._workers = []
        for wid in range(w):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(1, wid)))
            shard = LatencyShard(self._shard_cap, (seed, 2, wid))
            ctx = _ThreadWorker(wid, wid // self._t, rng, self._work_ns,
                                shard, w, self._record_items, agg,
                                self._epoch)
            ctx.driver = self._programs[wid]
            agg.register_sink(wid, ctx.driver.on_item)
            self._workers.append(ctx)
        self._tns_active = agg.flush_timeout_ns is not None
        for ctx in self._workers:
            th = threading.Thread(target=self._wloop, args=(ctx,),
                                  name=f"worker-{ctx.wid}", daemon=True)
            ctx.thread = th
        for ctx in self._workers:
            ctx.thread.start()

    # -- transport interface -------------------------------------------------
    def send(self, msg):
        agg = self._agg
        plan = agg.on_receive(msg)
        po = msg.origin
        scope = msg.src_worker if agg.scope_kind == "worker" else po
        cfg = self._cfg
        k = len(msg.items)
        nbytes = k * agg.item_bytes + cfg.header_bytes
        net = cfg.alpha_ns + cfg.beta_ns_per_byte * nbytes
        with self._tlock:
            self._log.record_message(msg, scope, net)
            if cfg.comm_enabled:
                base = float(msg.sent_at)
                ready = self._comm_ready[po]
                start = base if base > ready else ready
                self._comm_ready[po] = start + cfg.comm_cost_ns
                if self._comm_count[po] == 0:
                    self._comm_first[po] = start
                self._comm_count[po] += 1
                self._comm_last[po] = start + cfg.comm_cost_ns
            arrival = time.monotonic_ns() - self._epoch
        prio = msg.priority
        for wid, group in plan:
            self._workers[wid].q.push((_T_DELIVER, arrival, group), prio)

    def local_deliver(self, source, dest, items, now):
        self._workers[source].self_sends += len(items)
        self._workers[dest].q.push((_T_DELIVER, now, items))

    # -- worker thread --------------------------------------------------------
    def _deliver_batch(self, w, items):
        epoch = self._epoch
        shard = w.shard
        on_item = w.driver.on_item
        dl_log = w.dl_log
        for it in items:
            d = time.monotonic_ns() - epoch - it[2]
            shard.record(d if d >= 0 else 0)
            on_item(w, it)
            w.delivered += 1
            if dl_log is not None:
                dl_log.append(it[3])
        if items:
            # deliveries may hand the driver new local work; poll it again
            w.driver_done = False

    def _wloop(self, w):
        agg = self._agg
        try:
            w.driver.on_start(w)
            q = w.q
            tns = self._tns_active
            while True:
                if tns:
                    agg.flush_expired(w.wid, w.time_ns())
                e = q.pop()
                if e is not None:
                    tag = e[0]
                    if tag == _T_DELIVER:
                        self._deliver_batch(w, e[2])
                    elif tag == _T_FLUSH:
                        agg.flush(w.wid, w.time_ns())
                        e[1].set()
                    elif tag == _T_TASK:
                        e[3].append(e[1](w))
                        e[2].set()
                    else:
                        break
                elif not w.driver_done:
                    if not w.driver.step(w):
                        w.driver_done = True
                else:
                    if agg.auto_flush_idle and agg.owner_buffered(w.wid):
                        agg.flush(w.wid, w.time_ns())
                        continue
                    q.wait(0.005)
        except BaseException as exc:  # propagate through the coordinator
            with self._tlock:
                if self._error is None:
                    self._error = exc

    # -- coordinator ----------------------------------------------------------
    def _snapshot(self):
        prod = 0
        deliv = 0
        done = True
        qempty = True
        for w in self._workers:
            prod += w.produced
            deliv += w.delivered
            if not w.driver_done:
                done = False
            if w.q.depth():
                qempty = False
        return (prod, deliv, done, qempty)

    def _flush_round(self):
        evs = []
        for owner in self._agg.flush_owners():
            ev = threading.Event()
            evs.append(ev)
            self._workers[owner].q.push((_T_FLUSH, ev))
        for ev in evs:
            if not ev.wait(10.0):
                raise QuiescenceTimeout("flush round did not acknowledge",
                                        self._diagnostics())

    def _raise_pending(self):
        if self._error is not None:
            self._shutdown()
            raise self._error

    def _run_threaded(self, flush_rounds, timeout_s):
        deadline = None if timeout_s is None else time.monotonic() + timeout_s
        prev = None
        while True:
            self._raise_pending()
            s = self._snapshot()
            if s[2] and s[3]:
                if s[0] == s[1]:
                    s2 = self._snapshot()
                    if s2 == s:
                        return
                elif prev == s:
                    if flush_rounds:
                        if self._agg.total_buffered() > 0:
                            self._flush_round()
                    else:
                        return
            prev = s
            time.sleep(0.001)
            if deadline is not None and time.monotonic() > deadline:
                self._shutdown()
                raise QuiescenceTimeout(
                    f"run exceeded {timeout_s}s wall budget",
                    self._diagnostics())

    def _shutdown(self):
        if self._stopped:
            return
        self._stopped = True
        for w in self._workers:
            w.q.push((_T_STOP,))
        for w in self._workers:
            w.thread.join(timeout=5.0)

    # -- handle surface --------------------------------------------------------
    def run_idle(self, timeout_s=None):
        self._run_threaded(flush_rounds=False, timeout_s=timeout_s)

    def run_phase(self, timeout_s=None):
        self._run_threaded(flush_rounds=True, timeout_s=timeout_s)

    def broadcast_task(self, fn):
        evs = []
        boxes = []
        for w in self._workers:
            ev = threading.Event()
            box = []
            evs.append(ev)
            boxes.append(box)
            w.q.push((_T_TASK, fn, ev, box))
        out = []
        for ev, box in zip(evs, boxes):
            if not ev.wait(10.0):
                self._raise_pending()
                raise QuiescenceTimeout("task did not acknowledge",
                                        self._diagnostics())
            out.append(box[0])
        return out

    def await_quiescence(self, timeout_s=None):
        self._run_threaded(flush_rounds=True, timeout_s=timeout_s)
        self._shutdown()
        self._raise_pending()
        if self._agg.total_buffered():
            raise InternalInvariantError(
                f"quiescent with non-empty buffers: {self._diagnostics()}")
        self._quiesced = True
        self._final = self.summarize()
        return self._final

    def _runtime_ns(self):
        return time.monotonic_ns() - self._epoch

    def _qdepth(self, w):
        return w.q.depth()


RunHandle = _BaseRun  # public name for type hints


def spawn(topo: Topology, agg: Aggregator, cfg: TransportConfig = None, *,
          mode: str = MODE_SEQUENTIAL, program, seed: int = 0,
          work_ns: int = 100, deliver_ns: int = 50,
          samples_cap: int = DEFAULT_SAMPLES_CAP, record_items: bool = False,
          trace: bool = False, record_arrivals: bool = False) -> RunHandle:
    """Create worker contexts, wire the aggregator, and start the run.

    program is a callable worker_id -> WorkerProgram. work_ns advances the
    inserting worker's virtual clock per insert; deliver_ns advances the
    destination's per delivered item (sequential mode only; wall clocks tick
    on their own). Returns the run handle; call await_quiescence on it.
    """
    mode = parse_mode(mode)
    kw = dict(seed=seed, work_ns=work_ns, deliver_ns=deliver_ns,
              samples_cap=samples_cap, record_items=record_items,
              trace=trace, record_arrivals=record_arrivals)
    if mode == MODE_SEQUENTIAL:
        return SequentialRun(topo, agg, cfg, program, **kw)
    return ThreadedRun(topo, agg, cfg, program, **kw)
