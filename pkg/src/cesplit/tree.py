"""Tree diagonalization against an arbitrary splitting-procedure candidate.

Given a total candidate h, the run registers a set A (whose index is handed
to h before stage zero), builds disjoint computable-set pieces R_node /
Rtilde_node along a binary tree, and makes A look maximal inside each piece.
Whatever h answers, the finite-stage evidence sorts into one of three
buckets: the halves fail to split A, the split is trivial, or the split is
Friedberg-like while A acquires a distinguished non-Friedberg split of its
own.

Tree geometry (addresses are bit strings, tree growing downward):

  - nodes at square depths i*i > 0 construct piece sets ("R-nodes");
  - the root constructs A itself; every other node is an A-node, positive
    when its last bit is 1;
  - depth d carries one coded question.  If d+1 is a square j*j (j >= 2) the
    question asks whether (W_j intersect Rtilde_delta) entered-before-A is
    infinite, with delta the prefix at depth (j-1)^2.  Otherwise, with
    j = isqrt(d) and r = d - j*j, the question asks whether
    W_j |_| (W_{e_b} intersect R_beta) = R_beta, where b = r mod 2 and beta
    is the prefix at depth k*k for k = r//2 + 1.  The root's branching is
    driven by the j=1 question (W_1 minus A) kept internal to the run.

  - left order: bit 1 sorts left of bit 0, prefixes left of extensions.
    Ball movement and request voiding trigger only on the divergence case
    (the path actually passing a node on the left), never on the prefix
    case, otherwise relocation targets would not exist.

Each question node owns a chip counter: a monotone count of expansionary
events whose unboundedness would answer the question positively.  The path
approximation f_s walks from the root, branching 1 exactly when a chip
changed since the node was last on the path, and stops at positive A-nodes
or at the depth cap min(s*s, depth_bound).

Balls enter at the depth-1 node of the current path, one per tree stage, and
move only left (when the path passes them) or via pulls.  Pulls commit balls
to the pulling R-node's piece sets; markers over each piece drive the
maximal-set dumping, and positive A-nodes on the path dump markers of the
other pieces.  All set emissions go through the kernel's single FIFO; the
tree advances one stage per kernel poll only when its own emissions have
drained, which is how the constructed sets keep pace with their enumeration
indices.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from heapq import heappop, heappush
from math import isqrt
from typing import Callable, Optional

import numpy as np

from .kernel import HostGenerator, Kernel, host_index

E_WINDOW = 64  # membership bits tracked per ball for marker states
MARKER_WINDOW = 512  # marker table depth examined by the dump scan
FEEDER_PACE = 4  # the background universe set emits every 4th stage

ROOT = ""


class TreeError(Exception):
    pass


def is_r_node(node: str) -> bool:
    d = len(node)
    if d == 0:
        return False
    r = isqrt(d)
    return r * r == d


def node_kind(node: str) -> str:
    if node == ROOT:
        return "root"
    return "r" if is_r_node(node) else "a"


def is_positive_a(node: str) -> bool:
    return node_kind(node) == "a" and node.endswith("1")


def greatest_r_prefix(node: str) -> str:
    """The deepest proper R-node prefix; the root stands in for none."""
    d = len(node) - 1
    while d > 0:
        r = isqrt(d)
        if r * r == d:
            return node[:d]
        d -= 1
    return ROOT


def left_key(node: str) -> tuple:
    """Sort key realising the left order: 1 before 0, prefix before extension."""
    return tuple(1 - int(b) for b in node)


def diverges_left(a: str, b: str) -> bool:
    """True when a passes b on the left: 1 at the first differing bit."""
    for ba, bb in zip(a, b):
        if ba != bb:
            return ba == "1"
    return False


def is_left_of(a: str, b: str) -> bool:
    """Full left order: proper prefix or leftward divergence."""
    if a != b and b.startswith(a):
        return True
    return diverges_left(a, b)


@dataclass(frozen=True)
class Question:
    kind: str  # "R" or "T"
    j: int
    base: str  # delta for R-questions, beta for T-questions
    b: int = 0  # which half of h's answer a T-question consults
    k: int = 0


def question_at(node: str) -> Question:
    """Decode the question carried at a node address.

    The root carries no decodable question (its branching is internal), so
    it is rejected here.
    """
    d = len(node)
    if d == 0:
        raise TreeError("the root carries no coded question")
    j = isqrt(d + 1)
    if j * j == d + 1 and j >= 2:
        return Question("R", j, node[: (j - 1) * (j - 1)])
    j = isqrt(d)
    r = d - j * j
    b = r % 2
    k = r // 2 + 1
    if not 1 <= k <= j:
        raise TreeError(f"no question reachable at depth {d}")
    return Question("T", j, node[: k * k], b, k)


class _RangeQueue:
    """Pending request stages stored as merged [start, end] ranges."""

    __slots__ = ("ranges", "count")

    def __init__(self):
        self.ranges: list = []
        self.count = 0

    def push(self, stage: int) -> None:
        if self.ranges and self.ranges[-1][1] + 1 == stage:
            self.ranges[-1][1] = stage
        else:
            self.ranges.append([stage, stage])
        self.count += 1

    def pop_least(self) -> int:
        start, end = self.ranges[0]
        if start == end:
            self.ranges.pop(0)
        else:
            self.ranges[0][0] = start + 1
        self.count -= 1
        return start

    def void(self) -> int:
        n = self.count
        self.ranges = []
        self.count = 0
        return n


class _Measure:
    """The monotone set (W_j intersect Rtilde_delta) entered-before-A.

    Shared between the question node that counts it and the R-nodes that
    pull from it.  ``live`` keeps the members still on the machine, sorted.
    """

    __slots__ = ("j_index", "delta", "members", "live", "count", "subscribers")

    def __init__(self, j_index: int, delta: str):
        self.j_index = j_index
        self.delta = delta
        self.members: set = set()
        self.live: list = []
        self.count = 0
        self.subscribers: list = []

    def add(self, x: int) -> None:
        if x not in self.members:
            self.members.add(x)
            insort(self.live, x)
            self.count += 1
            for node in self.subscribers:
                heappush(node.cand_heap, x)

    def drop_live(self, x: int) -> None:
        i = bisect_left(self.live, x)
        if i < len(self.live) and self.live[i] == x:
            del self.live[i]


class _TMeasure:
    """Confirmation counter for one 'W_j |_| (W_eb & R_beta) = R_beta' node.

    The counter ticks whenever the least unconfirmed element of R_beta's
    sorted enumeration becomes confirmed; a violation seen at any stage
    freezes it for good.  Insertions below the frontier pull the frontier
    back, so re-confirmations count again; the counter stays monotone.
    """

    __slots__ = ("j_index", "eb_index", "beta", "count", "frozen", "wj_cursor", "fi")

    def __init__(self, j_index: int, eb_index: int, beta: str):
        self.j_index = j_index
        self.eb_index = eb_index
        self.beta = beta
        self.count = 0
        self.frozen = False
        self.wj_cursor = 0
        self.fi = 0


class _NodeState:
    __slots__ = (
        "address", "kind", "positive", "question", "chip_snapshot", "last_visit",
        "requests", "measure", "tmeasure",
        "r_slot", "rt_slot", "r_index", "rt_index", "r_committed", "rt_committed",
        "r_sorted", "live_markers", "live_revs", "live_rt", "rt_subscribers",
        "mids_subscribers", "needs_scan", "moved_marker_floor", "patch_cursor",
        "cand_heap", "mids_pool", "left_cache", "patched",
    )

    def __init__(self, address: str):
        self.address = address
        self.kind = node_kind(address)
        self.positive = is_positive_a(address)
        self.question = None
        self.chip_snapshot = 0
        self.last_visit = 0
        self.requests = _RangeQueue()
        self.measure = None
        self.tmeasure = None
        self.r_slot = self.rt_slot = None
        self.r_index = self.rt_index = None
        self.r_committed: set = set()
        self.rt_committed: set = set()
        self.r_sorted: list = []
        self.live_markers: list = []
        self.live_revs: list = []
        self.live_rt: list = []
        self.rt_subscribers: list = []
        self.mids_subscribers: list = []
        self.needs_scan = False
        self.moved_marker_floor = None  # least marker index moved this stage
        self.patch_cursor = 0
        self.cand_heap: list = []
        self.mids_pool: list = []  # 1-ending R-nodes: consumable bystander pool
        self.left_cache = (0, 0)  # (f-history index checked, best left-pass stage)
        self.patched: set = set()


class TreeRun:
    """Drives one diagonalization as a family of host generators."""

    def __init__(self, kernel: Kernel, proc: Callable, depth_bound: int = 25,
                 slot_base: int = 1, collect_trace: bool = True,
                 trace_sink: Optional[Callable] = None):
        d = isqrt(depth_bound)
        if d * d != depth_bound:
            raise TreeError("depth bound must be a perfect square")
        self.kernel = kernel
        self.depth = depth_bound
        self.collect_trace = collect_trace
        self.trace_sink = trace_sink
        self.trace: list = []
        self.violations: list = []

        # background universe set at slot 0 so that index 1 enumerates
        # a paced copy of N; the root question measures W_1 minus A
        if kernel.free_slot(0) != 0:
            raise TreeError("the tree run must own slot 0 for the feeder")
        feeder_state = {"next": 0}

        def pull_feeder(stage):
            if stage % FEEDER_PACE == 0:
                n = feeder_state["next"]
                feeder_state["next"] = n + 1
                return [("slot0", n)]
            return ()

        self.feeder_index = kernel.register_generator(
            HostGenerator(slot=0, pull=pull_feeder, watch=None)
        )
        # blocky background sets at the smallest indices give the balls
        # durable membership structure, so marker states keep improving no
        # matter where the construction's own slots land
        self.spectrum_indexes = []
        for k in range(1, 5):
            self.spectrum_indexes.append(
                kernel.register_generator(self._spectrum_generator(k))
            )

        # A's slot: the brain generator drives the whole construction
        a_slot = kernel.free_slot(slot_base)
        self.a_slot = a_slot
        self._a_tag = f"slot{a_slot}"
        self._a_out: list = []
        self.e_a = kernel.register_generator(
            HostGenerator(slot=a_slot, pull=self._brain_pull, watch=None)
        )

        # the candidate procedure is consulted once, before stage zero
        self.e0, self.e1 = proc(kernel, self.e_a)

        self.tree_stage = 0
        self.f: str = ROOT
        self.f_kernel_stage = 0
        self.nodes: dict[str, _NodeState] = {}
        self.measures: dict[tuple, _Measure] = {}
        self.measures_by_index: dict[int, list] = {}
        self.measures_by_delta: dict[str, list] = {}
        self.positions: dict[int, str] = {}
        self.node_balls: dict[str, set] = {}
        self.live_balls: list = []  # every on-machine ball, ascending
        self.a_committed: set = set()
        self.a_order: list = []
        self.masks: dict[int, int] = {}
        self.mask_nodes: dict[int, list] = {}
        self._key_to_addr: dict[tuple, str] = {}
        self._ball_keys: list = []      # sorted left keys of ball-holding nodes
        self._request_keys: list = []   # sorted left keys of request-holding nodes
        self._entry_subscribers: list = []  # nodes whose pull pool is every ball
        self._entry_mids_subscribers: list = []  # 1-ending nodes sweeping every ball
        self._f_history: list = [(0, ROOT)]  # (tree stage, f) on change
        self.tmeasures_by_beta: dict[str, list] = {}
        self._moved_nodes: list = []
        self._out_queues: dict[int, list] = {}
        self._cursor = 0
        self._stub_slots: dict[str, tuple] = {}
        self._endpoint_history: list = []  # (tree_stage, kernel_stage, f, kind)
        self._get_node(ROOT)
        self._emit_record(
            {
                "op": "meta", "kind": "tree", "e_a": self.e_a, "e0": self.e0,
                "e1": self.e1, "depth": self.depth, "feeder": self.feeder_index,
            }
        )
        self._emit_record({"op": "f", "s": 0, "ks": 0, "node": ROOT})

    # -- plumbing ---------------------------------------------------------

    def _spectrum_generator(self, k: int) -> HostGenerator:
        state = {"next": 0}
        tag = f"slot{k}"

        def member(n):
            return (n >> k) & 1 == 0

        def pull(stage):
            if stage % 16 == (4 * k) % 16:
                n = state["next"]
                while not member(n):
                    n += 1
                state["next"] = n + 1
                return [(tag, n)]
            return ()

        return HostGenerator(slot=k, pull=pull, watch=None)

    def _emit_record(self, record: dict) -> None:
        if self.collect_trace:
            self.trace.append(record)
        if self.trace_sink is not None:
            self.trace_sink(record)

    def _violation(self, kind: str, detail) -> None:
        self.violations.append((self.tree_stage, kind, detail))

    def _key_of(self, address: str) -> tuple:
        key = left_key(address)
        if key not in self._key_to_addr:
            self._key_to_addr[key] = address
        return key

    def _mark_has_balls(self, address: str) -> None:
        key = self._key_of(address)
        i = bisect_left(self._ball_keys, key)
        if i >= len(self._ball_keys) or self._ball_keys[i] != key:
            self._ball_keys.insert(i, key)

    def _unmark_has_balls(self, address: str) -> None:
        key = left_key(address)
        i = bisect_left(self._ball_keys, key)
        if i < len(self._ball_keys) and self._ball_keys[i] == key:
            del self._ball_keys[i]

    def _mark_has_requests(self, address: str) -> None:
        key = self._key_of(address)
        i = bisect_left(self._request_keys, key)
        if i >= len(self._request_keys) or self._request_keys[i] != key:
            self._request_keys.insert(i, key)

    def _unmark_has_requests(self, address: str) -> None:
        key = left_key(address)
        i = bisect_left(self._request_keys, key)
        if i < len(self._request_keys) and self._request_keys[i] == key:
            del self._request_keys[i]

    def _last_left_pass(self, state: _NodeState) -> int:
        """Greatest tree stage at which the path ran left of this node."""
        idx, best = state.left_cache
        history = self._f_history
        address = state.address
        while idx < len(history):
            st, f = history[idx]
            idx += 1
            if is_left_of(f, address):
                best = st
        state.left_cache = (idx, best)
        return best

    def _get_node(self, address: str) -> _NodeState:
        state = self.nodes.get(address)
        if state is not None:
            return state
        state = _NodeState(address)
        self.nodes[address] = state
        if address != ROOT:
            state.question = question_at(address)
        if address == ROOT:
            state.measure = self._get_measure(1, ROOT)
        elif state.question.kind == "R":
            q = state.question
            state.measure = self._get_measure(q.j, q.base)
        elif state.question.kind == "T":
            q = state.question
            eb = self.e0 if q.b == 0 else self.e1
            state.tmeasure = _TMeasure(self._w_index(q.j), eb, q.base)
            self.tmeasures_by_beta.setdefault(q.base, []).append(state.tmeasure)
        if state.kind == "r":
            r_slot = self.kernel.free_slot(self.a_slot + 1)
            state.r_slot = r_slot
            state.r_index = self._register_stub(r_slot)
            rt_slot = self.kernel.free_slot(r_slot + 1)
            state.rt_slot = rt_slot
            state.rt_index = self._register_stub(rt_slot)
            self._stub_slots[address] = (r_slot, rt_slot)
            # absorb any casualties that predate this node
            self._patch_node(state)
        if state.kind == "r" or state.positive:
            self._seed_candidates(state)
        return state

    def _seed_candidates(self, state: _NodeState) -> None:
        address = state.address
        delta = greatest_r_prefix(address)
        if state.kind == "r" and address.endswith("1"):
            m = self._get_measure(isqrt(len(address)), delta)
            state.cand_heap = list(m.live)
            m.subscribers.append(state)
            if delta == ROOT:
                state.mids_pool = list(self.live_balls)
                self._entry_mids_subscribers.append(state)
            else:
                dstate = self._get_node(delta)
                state.mids_pool = list(dstate.live_rt)
                dstate.mids_subscribers.append(state)
        elif delta == ROOT:
            state.cand_heap = list(self.live_balls)
            self._entry_subscribers.append(state)
        else:
            dstate = self._get_node(delta)
            state.cand_heap = list(dstate.live_rt)
            dstate.rt_subscribers.append(state)
        import heapq

        heapq.heapify(state.cand_heap)

    def _w_index(self, j: int) -> int:
        return j  # questions quantify over the canonical enumeration directly

    def _get_measure(self, j: int, delta: str) -> _Measure:
        key = (j, delta)
        got = self.measures.get(key)
        if got is not None:
            return got
        j_index = self.feeder_index if (j, delta) == (1, ROOT) else self._w_index(j)
        m = _Measure(j_index, delta)
        self.measures[key] = m
        self.measures_by_index.setdefault(j_index, []).append(m)
        self.measures_by_delta.setdefault(delta, []).append(m)
        # replay history: members of W_j already logged
        log = self.kernel.log
        for _, x in log.entries(j_index):
            self._measure_try_add(m, x)
        return m

    def _measure_try_add(self, m: _Measure, x: int) -> None:
        if x in m.members or x in self.a_committed:
            return
        if m.delta == ROOT:
            in_delta = True
        else:
            dstate = self.nodes.get(m.delta)
            in_delta = dstate is not None and x in dstate.rt_committed
        if in_delta and self.kernel.log.entry_stage(m.j_index, x) is not None:
            m.add(x)

    def _register_stub(self, slot: int) -> int:
        queue: list = []
        self._out_queues[slot] = queue
        tag = f"slot{slot}"

        def pull(stage):
            out = [(tag, x) for x in queue]
            queue.clear()
            return out

        return self.kernel.register_generator(
            HostGenerator(slot=slot, pull=pull, watch=())
        )

    def _queue_emission(self, slot: int, x: int) -> None:
        if slot == self.a_slot:
            self._a_out.append(x)
        else:
            self._out_queues[slot].append(x)
            self.kernel.wake_slot(slot)

    # -- event ingestion ---------------------------------------------------

    def _ingest(self) -> None:
        log = self.kernel.log
        while self._cursor < len(log):
            _, idx, x = log.get(self._cursor)
            self._cursor += 1
            for m in self.measures_by_index.get(idx, ()):
                self._measure_try_add(m, x)
            if idx < E_WINDOW:
                mask = self.masks.get(x, 0)
                bit = 1 << (E_WINDOW - 1 - idx)
                if not mask & bit:
                    new = mask | bit
                    self.masks[x] = new
                    for address in self.mask_nodes.get(x, ()):
                        st = self.nodes.get(address)
                        if st is None:
                            continue
                        k = bisect_left(st.live_markers, x)
                        if k < len(st.live_markers) and st.live_markers[k] == x:
                            st.live_revs[k] = new
                            st.needs_scan = True

    # -- chips and the walk -------------------------------------------------

    def _chip_value(self, state: _NodeState) -> int:
        if state.measure is not None:
            return state.measure.count
        tm = state.tmeasure
        if tm is None:
            return 0
        self._advance_tmeasure(tm)
        return tm.count

    def _advance_tmeasure(self, tm: _TMeasure) -> None:
        if tm.frozen:
            return
        log = self.kernel.log
        beta_state = self.nodes.get(tm.beta)
        r_comm = beta_state.r_committed if beta_state is not None else set()
        entries = log.entries(tm.j_index)
        while tm.wj_cursor < len(entries):
            _, x = entries[tm.wj_cursor]
            tm.wj_cursor += 1
            if x not in r_comm or log.entry_stage(tm.eb_index, x) is not None:
                tm.frozen = True
                return
        if beta_state is None:
            return
        r_sorted = beta_state.r_sorted
        while tm.fi < len(r_sorted):
            x = r_sorted[tm.fi]
            if log.entry_stage(tm.j_index, x) is None and (
                log.entry_stage(tm.eb_index, x) is None
            ):
                break
            tm.fi += 1
            tm.count += 1

    def _compute_f(self, st: int) -> str:
        cap = min(st * st, self.depth)
        node = ROOT
        while True:
            state = self._get_node(node)
            state.last_visit = st
            if state.positive:
                break
            if len(node) >= cap:
                if not (node == ROOT or state.kind == "r"):
                    self._violation("f-endpoint-kind", node)
                break
            chip = self._chip_value(state)
            bit = "1" if chip != state.chip_snapshot else "0"
            state.chip_snapshot = chip
            if self.collect_trace and bit == "1":
                self._emit_record({"op": "chip", "s": st, "node": node, "c": chip})
            node = node + bit
        # requests pile up for the pulling kinds along the path
        walk = node
        while True:
            wstate = self.nodes[walk]
            if wstate.kind == "r" or wstate.positive:
                if not wstate.requests.count:
                    self._mark_has_requests(walk)
                wstate.requests.push(st)
            if walk == ROOT:
                break
            walk = walk[:-1]
        if len(node) > cap:
            self._violation("f-length", node)
        return node

    # -- sweeping right of the path -----------------------------------------

    def _sweep_right(self, st: int, f: str) -> None:
        fkey = left_key(f)
        # void requests at strictly left-passed nodes
        i = bisect_right(self._request_keys, fkey)
        drop = []
        while i < len(self._request_keys):
            key = self._request_keys[i]
            address = self._key_to_addr[key]
            if not address.startswith(f):
                state = self.nodes[address]
                voided = state.requests.void()
                drop.append(key)
                if voided and self.collect_trace:
                    self._emit_record({"op": "void", "s": st, "node": address, "n": voided})
            i += 1
        if drop:
            dropset = set(drop)
            self._request_keys = [k for k in self._request_keys if k not in dropset]
        # relocate balls at strictly left-passed nodes
        i = bisect_right(self._ball_keys, fkey)
        moved: list = []
        while i < len(self._ball_keys):
            address = self._key_to_addr[self._ball_keys[i]]
            if not address.startswith(f):
                moved.append(address)
            i += 1
        for address in moved:
            balls = sorted(self.node_balls.pop(address, ()))
            self._unmark_has_balls(address)
            if not balls:
                continue
            target = self._left_target(f, address)
            self._get_node(target)
            bucket = self.node_balls.setdefault(target, set())
            for x in balls:
                bucket.add(x)
                self.positions[x] = target
                if len(target) > max(1, x * x):
                    self._violation("ball-depth", (x, target))
            self._mark_has_balls(target)
            self._emit_record(
                {"op": "left", "s": st, "from": address, "to": target, "balls": balls}
            )

    def _left_target(self, f: str, address: str) -> str:
        d = 0
        for bf, ba in zip(f, address):
            if bf != ba:
                break
            d += 1
        L = (isqrt(d) + 1) ** 2
        if L > len(f):
            return f
        return f[:L]

    # -- ball entry ----------------------------------------------------------

    def _ball_entry(self, st: int, f: str) -> None:
        ball = st - 1
        target = f[:1]
        self._get_node(target)
        self.positions[ball] = target
        self.node_balls.setdefault(target, set()).add(ball)
        self.live_balls.append(ball)  # balls arrive in increasing order
        for node in self._entry_subscribers:
            heappush(node.cand_heap, ball)
        for node in self._entry_mids_subscribers:
            node.mids_pool.append(ball)
        self._mark_has_balls(target)
        self._emit_record({"op": "enter", "s": st, "x": ball, "node": target})

    # -- pulling --------------------------------------------------------------

    def _eligible(self, state: _NodeState, x: int) -> bool:
        pos = self.positions.get(x)
        if pos is None:
            return False
        address = state.address
        if pos == address:
            return state.kind == "r"  # entry-parked balls are reachable
        if pos != address and address.startswith(pos):
            return True  # strictly above
        return diverges_left(address, pos)  # strictly to the right

    def _pull(self, st: int, f: str) -> None:
        for key in list(self._request_keys):
            address = self._key_to_addr[key]
            state = self.nodes[address]
            if not state.requests.count:
                continue
            if self._try_pull_at(st, state):
                return

    def _try_pull_at(self, st: int, state: _NodeState) -> bool:
        # pop candidates in value order; every rejection below is permanent
        floor = len(state.address)
        address = state.address
        heap = state.cand_heap
        picked: list = []
        while heap and len(picked) < 2:
            x = heappop(heap)
            if x <= floor or x in self.a_committed:
                continue
            if state.kind == "r" and (x in state.r_committed or x in state.rt_committed):
                continue
            pos = self.positions.get(x)
            if pos is None:
                continue
            if pos == address:
                if state.kind != "r":
                    continue
            elif address.startswith(pos):
                pass  # strictly above
            elif not diverges_left(address, pos):
                continue  # strictly left of us, or below: permanently out
            picked.append(x)
        if len(picked) < 2:
            for x in picked:
                heappush(heap, x)  # still eligible, waiting for a partner
            return False
        x0, x1 = picked
        request = state.requests.pop_least()
        if not state.requests.count:
            self._unmark_has_requests(address)
        delta = greatest_r_prefix(address)
        mids = [y for y in self._intermediates(state, delta, x1) if y != x0]
        for x in (x0, x1):
            self._move_ball(x, address)
        if state.kind == "r":
            self._commit(state, x0, tilde=False)
            self._commit(state, x1, tilde=True)
        for y in mids:
            self._move_ball(y, address)
            if state.kind == "r":
                self._commit(state, y, tilde=False)
        self._emit_record(
            {
                "op": "pull",
                "s": st,
                "ks": self.f_kernel_stage,
                "node": address,
                "req": request,
                "x0": x0,
                "x1": x1,
                "mid": mids,
            }
        )
        return True

    def _intermediates(self, state: _NodeState, delta: str, top: int) -> list:
        # when the pull pool is the piece pool itself, pair minimality leaves
        # nothing strictly between the chosen pair; only sets gated by W_j
        # can have sweepable bystanders.  Every scanned pool entry is either
        # swept here or permanently out, so the slice is consumed wholesale.
        if not (state.kind == "r" and state.address.endswith("1")):
            return []
        out = []
        floor = len(state.address)
        pool = state.mids_pool
        lo = bisect_right(pool, floor)
        hi = bisect_left(pool, top)
        for y in pool[lo:hi]:
            if y in self.a_committed:
                continue
            if y in state.r_committed or y in state.rt_committed:
                continue
            if self._eligible(state, y):
                out.append(y)
        del pool[lo:hi]
        return out

    def _move_ball(self, x: int, target: str) -> None:
        pos = self.positions.get(x)
        if pos == target:
            return
        if pos is not None:
            bucket = self.node_balls.get(pos)
            if bucket is not None:
                bucket.discard(x)
                if not bucket:
                    self._unmark_has_balls(pos)
        self.positions[x] = target
        self.node_balls.setdefault(target, set()).add(x)
        self._mark_has_balls(target)
        if len(target) > max(1, x * x):
            self._violation("ball-depth", (x, target))

    def _commit(self, state: _NodeState, x: int, tilde: bool) -> None:
        if tilde:
            state.rt_committed.add(x)
            if x not in self.a_committed:
                insort(state.live_rt, x)
                for node in state.rt_subscribers:
                    heappush(node.cand_heap, x)
                for node in state.mids_subscribers:
                    insort(node.mids_pool, x)
            self._queue_emission(state.rt_slot, x)
            for m in self.measures_by_delta.get(state.address, ()):
                self._measure_try_add(m, x)
        else:
            state.r_committed.add(x)
            pos = bisect_left(state.r_sorted, x)
            state.r_sorted.insert(pos, x)
            for tm in self.tmeasures_by_beta.get(state.address, ()):
                if pos < tm.fi:
                    tm.fi = pos
            self._queue_emission(state.r_slot, x)
            if x not in self.a_committed:
                k = bisect_left(state.live_markers, x)
                state.live_markers.insert(k, x)
                state.live_revs.insert(k, self.masks.get(x, 0))
                if state.moved_marker_floor is None or k < state.moved_marker_floor:
                    state.moved_marker_floor = k
                    self._moved_nodes.append(state)
                self.mask_nodes.setdefault(x, []).append(state.address)
                state.needs_scan = True

    # -- dumping into A --------------------------------------------------------

    def _dump_to_a(self, st: int, x: int) -> None:
        self.a_committed.add(x)
        self.a_order.append(x)
        self._a_out.append(x)
        pos = self.positions.pop(x, None)
        if pos is not None:
            bucket = self.node_balls.get(pos)
            if bucket is not None:
                bucket.discard(x)
                if not bucket:
                    self._unmark_has_balls(pos)
        i = bisect_left(self.live_balls, x)
        if i < len(self.live_balls) and self.live_balls[i] == x:
            del self.live_balls[i]
        for address in self.mask_nodes.get(x, ()):
            holder = self.nodes.get(address)
            if holder is None:
                continue
            k = bisect_left(holder.live_markers, x)
            if k < len(holder.live_markers) and holder.live_markers[k] == x:
                del holder.live_markers[k]
                del holder.live_revs[k]
                holder.needs_scan = True
                if holder.moved_marker_floor is None or k < holder.moved_marker_floor:
                    holder.moved_marker_floor = k
                    self._moved_nodes.append(holder)

    def _patch_node(self, state: _NodeState) -> None:
        """Absorb casualties: Rtilde_delta balls that entered A uncommitted."""
        delta = greatest_r_prefix(state.address)
        dstate = self.nodes.get(delta) if delta != ROOT else None
        while state.patch_cursor < len(self.a_order):
            y = self.a_order[state.patch_cursor]
            state.patch_cursor += 1
            if y in state.r_committed or y in state.rt_committed:
                continue
            if delta != ROOT:
                if dstate is None or y not in dstate.rt_committed:
                    continue
            self._commit(state, y, tilde=False)
            state.patched.add(y)
            self._emit_record(
                {"op": "patch", "s": self.tree_stage, "node": state.address, "x": y}
            )

    def _patch(self, st: int, f: str) -> None:
        d = 1
        while d <= len(f):
            if is_r_node(f[:d]):
                self._patch_node(self.nodes[f[:d]])
            d += 1

    def _maximal(self, st: int, f: str) -> None:
        d = 1
        while d <= len(f):
            prefix = f[:d]
            if is_r_node(prefix):
                state = self.nodes[prefix]
                if state.needs_scan:
                    self._maximal_scan(st, state)
            d += 1

    def _maximal_scan(self, st: int, state: _NodeState) -> None:
        """One original dump: raise the least marker's state when possible.

        The dump scan examines the table up to MARKER_WINDOW positions; the
        suffix maxima of the membership masks let each candidate prefix
        length be tested with one shift and compare.
        """
        state.needs_scan = False
        live = state.live_markers
        n = len(live)
        if n < 2:
            return
        w = min(n, MARKER_WINDOW)
        rv = np.array(state.live_revs[:w], dtype=np.uint64)
        suffix = np.maximum.accumulate(rv[::-1])[::-1]
        top = min(w - 1, E_WINDOW, st)
        shifts = np.arange(E_WINDOW - 1, E_WINDOW - 1 - top, -1, dtype=np.uint64)
        mine = rv[:top] >> shifts
        best = suffix[1 : top + 1] >> shifts
        hits = np.nonzero(best > mine)[0]
        if hits.size == 0:
            return
        e = int(hits[0])
        shift = int(E_WINDOW - 1 - e)
        floor = int(mine[e])
        i = e + 1
        while int(rv[i]) >> shift <= floor:
            i += 1
        if i >= st:
            return
        dumped = list(live[e:i])
        self._emit_record(
            {
                "op": "dump-orig",
                "s": st,
                "ks": self.f_kernel_stage,
                "node": state.address,
                "e": e,
                "i": i,
                "balls": dumped,
            }
        )
        for x in dumped:
            self._dump_to_a(st, x)
        state.needs_scan = True  # more states may now be raisable

    def _extra_dump(self, st: int, f: str) -> None:
        state = self.nodes[f]
        if not state.positive:
            return
        q = question_at(f[:-1])
        if q.kind != "T":
            return
        d = 1
        while d < len(f):
            prefix = f[:d]
            if is_r_node(prefix) and prefix != q.base:
                target = self.nodes[prefix]
                t = max(len(f), self._last_left_pass(target))
                if t < len(target.live_markers):
                    moved = target.moved_marker_floor
                    if moved is not None and moved <= t:
                        d += 1
                        continue  # this stage's movement already did the job
                    x = target.live_markers[t]
                    self._emit_record(
                        {
                            "op": "dump-extra",
                            "s": st,
                            "ks": self.f_kernel_stage,
                            "gamma": f,
                            "node": prefix,
                            "idx": t,
                            "x": x,
                        }
                    )
                    self._dump_to_a(st, x)
            d += 1

    # -- stage driver -----------------------------------------------------------

    def _brain_pull(self, stage: int):
        self._ingest()
        if self.kernel.backlog > 0:
            return ()
        st = self.tree_stage + 1
        self.tree_stage = st
        for node in self._moved_nodes:
            node.moved_marker_floor = None
        self._moved_nodes = []
        f = self._compute_f(st)
        f_changed = f != self.f
        if f_changed:
            self._emit_record({"op": "f", "s": st, "ks": stage, "node": f})
            self._f_history.append((st, f))
        self.f = f
        self.f_kernel_stage = stage
        kind = "positive-a" if self.nodes[f].positive else node_kind(f)
        self._endpoint_history.append((st, stage, f, kind))
        self._ball_entry(st, f)
        if f_changed:
            self._sweep_right(st, f)
        self._pull(st, f)
        self._patch(st, f)
        self._maximal(st, f)
        self._extra_dump(st, f)
        if self._a_out:
            out = [(self._a_tag, x) for x in self._a_out]
            self._a_out = []
            return out
        return ()


# -- verdicts and entry points ---------------------------------------------


@dataclass
class Verdict:
    kind: int  # 1 = not a split, 2 = trivial split, 3 = Friedberg-like
    reason: str
    detail: dict = field(default_factory=dict)


@dataclass
class TreeResult:
    kernel: Kernel
    run: TreeRun
    e_a: int
    e0: int
    e1: int
    verdict: Verdict
    checkpoints: list
    stable: bool
    witness_halves: Optional[tuple] = None

    @property
    def trace(self):
        return self.run.trace

    @property
    def violations(self):
        return self.run.violations


EMPTY_SLOT = 10**6  # never registered: its indices enumerate nothing


def empty_index(offset: int = 0) -> int:
    return host_index(EMPTY_SLOT + offset)


def proc_friedberg(kernel: Kernel, e: int) -> tuple[int, int]:
    from .friedberg import install_friedberg

    return install_friedberg(kernel, e).halves


def proc_trivial(kernel: Kernel, e: int) -> tuple[int, int]:
    return (e, empty_index())


def proc_broken(kernel: Kernel, e: int) -> tuple[int, int]:
    return (empty_index(0), empty_index(1))


PROCEDURES = {
    "hf": proc_friedberg,
    "trivial": proc_trivial,
    "broken": proc_broken,
}


def verdict_at(kernel: Kernel, run: TreeRun, e_a: int, e0: int, e1: int,
               stage: int, witness_breadth: int = 16) -> Verdict:
    from .setalg import check_split_history
    from .verify import complement_witnesses, probe_friedberg

    log = kernel.log
    # in-flight tolerance: construction bursts can hold a routing hostage
    # for about two queue drains, so the window tracks the observed backlog
    settle = max(64, stage // 10, 4 * kernel.max_backlog)
    violation = check_split_history(log, e_a, e0, e1, stage, settle=settle)
    if violation is not None:
        s, kind, x = violation
        return Verdict(1, "split-violation", {"stage": s, "kind": kind, "x": x})
    for side, half in ((0, e0), (1, e1)):
        if half == e_a:
            continue  # the input itself is not a complement candidate
        live = [ev.j for ev in complement_witnesses(log, half, stage, witness_breadth)
                if ev.status == "live"]
        if live:
            return Verdict(
                2, "complement-witness", {"side": side, "witnesses": live}
            )
    tail = [kind for st, ks, _, kind in run._endpoint_history if ks >= stage * 4 // 5]
    if tail:
        positive = sum(1 for kind in tail if kind == "positive-a")
        if positive * 2 >= len(tail):
            return Verdict(2, "positive-endpoint", {"fraction": positive / len(tail)})
    growth = [ev.as_dict() for ev in probe_friedberg(log, e_a, e0, e1, stage, 8)
              if ev.swallowed_total]
    return Verdict(3, "friedberg-like", {"per_index": growth})


class _WitnessSplit:
    """Routes dumped balls by membership in the designated piece R_alpha*.

    Registered alongside a tree run; routing waits until the piece's patch
    cursor has passed the ball, at which point membership is final.
    """

    def __init__(self, kernel: Kernel, run: TreeRun, alpha: str = "1"):
        self.kernel = kernel
        self.run = run
        self.alpha = alpha
        self.cursor = 0
        base = kernel.free_slot(run.a_slot + 1)
        slot1 = kernel.free_slot(base + 1)
        self._queues = ([], [])
        tags = (f"slot{base}", f"slot{slot1}")

        def make_pull(side):
            def pull(stage):
                if side == 0:
                    self._route()
                queued = self._queues[side]
                out = [(tags[side], x) for x in queued]
                queued.clear()
                return out

            return pull

        self.w0 = kernel.register_generator(
            HostGenerator(slot=base, pull=make_pull(0), watch=None)
        )
        self.w1 = kernel.register_generator(
            HostGenerator(slot=slot1, pull=make_pull(1), watch=None)
        )

    def _route(self) -> None:
        run = self.run
        target = run.nodes.get(self.alpha)
        if target is None:
            return
        while self.cursor < len(run.a_order):
            if target.patch_cursor <= self.cursor:
                break  # membership not final yet
            x = run.a_order[self.cursor]
            self.cursor += 1
            side = 0 if x in target.r_committed else 1
            self._queues[side].append(x)

    @property
    def halves(self) -> tuple[int, int]:
        return (self.w0, self.w1)


def diagonalize(proc: Callable, stages: int, depth: int = 25,
                corpus_texts=None, slot_base: int = 1,
                collect_trace: bool = True, trace_sink=None,
                with_witness_split: bool = False) -> TreeResult:
    """Run the full construction against one candidate procedure.

    The verdict is evaluated at five checkpoints across the trailing fifth
    of the stage budget; ``stable`` reports whether they all agree.
    """
    from . import corpus as corpus_mod

    texts = corpus_texts if corpus_texts is not None else corpus_mod.BASIC
    kernel = Kernel(texts)
    run = TreeRun(kernel, proc, depth, slot_base, collect_trace, trace_sink)
    witness = _WitnessSplit(kernel, run) if with_witness_split else None
    checkpoints = sorted({stages * k // 100 for k in (80, 85, 90, 95, 100)})
    verdicts = []
    for target in checkpoints:
        kernel.run_to(target)
        verdicts.append(verdict_at(kernel, run, run.e_a, run.e0, run.e1, target - 1))
    kinds = {v.kind for v in verdicts}
    return TreeResult(
        kernel, run, run.e_a, run.e0, run.e1, verdicts[-1],
        [v.kind for v in verdicts], len(kinds) == 1,
        witness.halves if witness else None,
    )


def iterate_splitting_procedures(proc: Callable, rounds: int, stages: int,
                                 depth: int = 25, corpus_texts=None) -> list[dict]:
    """Round-by-round diagonalization with per-round patched procedures.

    Each round pins the previous round's constructed index to its own
    non-Friedberg witness pair; fresh slot bases keep the constructed
    indices pairwise distinct.
    """
    patched: dict[int, tuple[int, int]] = {}
    current = proc
    out = []
    for i in range(rounds):
        def h(kernel, e, _inner=current, _patched=dict(patched)):
            if e in _patched:
                return _patched[e]
            return _inner(kernel, e)

        result = diagonalize(
            h, stages, depth, corpus_texts,
            slot_base=1 + 50 * i, collect_trace=False, with_witness_split=True,
        )
        patched[result.e_a] = result.witness_halves
        out.append(
            {
                "round": i,
                "e": result.e_a,
                "halves": (result.e0, result.e1),
                "verdict": result.verdict.kind,
                "reason": result.verdict.reason,
                "stable": result.stable,
                "witness_pair": result.witness_halves,
                "violations": len(result.violations),
            }
        )
        current = h
    return out


def structural_report(run: TreeRun) -> dict:
    """Invariant audit over a finished run's internal state.

    Checks marker tables, the piece-set partition along the current path,
    ball depth bounds and endpoint kinds; counts land in the report, any
    violation is appended to the run's violation list as well.
    """
    problems = []
    for address, state in run.nodes.items():
        if state.kind != "r":
            continue
        markers = state.live_markers
        if any(a >= b for a, b in zip(markers, markers[1:])):
            problems.append(("markers-not-increasing", address))
        if state.r_sorted != sorted(state.r_committed):
            problems.append(("r-sorted-drift", address))
        if not set(markers) <= (state.r_committed - run.a_committed):
            problems.append(("marker-membership", address))
    # partition along the current path: chain pieces plus the deepest tilde
    f = run.f
    chain = [f[:d] for d in range(1, len(f) + 1) if is_r_node(f[:d])]
    exceptions = []
    seen: dict[int, str] = {}
    for address in chain:
        state = run.nodes[address]
        for x in state.r_committed:
            if x in seen:
                exceptions.append((x, seen[x], address))
            seen[x] = address
    if chain:
        deepest = run.nodes[chain[-1]]
        for x in deepest.rt_committed:
            if x in seen:
                exceptions.append((x, seen[x], chain[-1] + "~"))
    # casualties: committed-into-A piece members the patching already claimed
    unpatched = 0
    for address in chain:
        state = run.nodes[address]
        delta = greatest_r_prefix(address)
        if delta == ROOT:
            pool = run.a_committed
        else:
            dstate = run.nodes.get(delta)
            pool = dstate.rt_committed & run.a_committed if dstate else set()
        for y in pool:
            if y not in state.r_committed and y not in state.rt_committed:
                unpatched += 1
    for x, pos in run.positions.items():
        if len(pos) > max(1, x * x):
            problems.append(("ball-depth", (x, pos)))
    bad_endpoints = [
        (st, f_) for st, _, f_, kind in run._endpoint_history
        if kind not in ("r", "positive-a") and f_ != ROOT
    ]
    if bad_endpoints:
        problems.append(("endpoint-kind", bad_endpoints[:3]))
    for problem in problems:
        run.violations.append((run.tree_stage, *problem))
    return {
        "problems": problems,
        "partition_exceptions": len(exceptions),
        "unpatched_casualties": unpatched,
        "chain": chain,
        "nodes": len(run.nodes),
        "balls_on_machine": len(run.positions),
        "dumped": len(run.a_committed),
    }
