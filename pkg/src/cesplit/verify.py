"""Replay oracles and stage-bounded evidence probes.

Every oracle here re-derives construction decisions from the raw event log
with its own bookkeeping, kept deliberately separate from the construction
modules.  Non-effective notions (computability, c.e.-ness of a difference)
are never decided; the probes report monotone evidence with explicit
trailing windows instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from bisect import bisect_left

from .kernel import EventLog
from .pairing import balance_code, pair, unpair
from .setalg import before_then


@dataclass
class Divergence:
    line: int
    field_name: str
    got: object
    want: object

    def as_dict(self):
        return {"line": self.line, "field": self.field_name, "got": self.got, "want": self.want}


# -- Friedberg routing replay ---------------------------------------------


def replay_friedberg(log: EventLog, a: int, a0: int, a1: int, trace: list) -> list[Divergence]:
    """Re-derive every routing decision from the raw log and diff the trace."""
    by_element: dict[int, list[tuple[int, int]]] = {}
    a_entries: list[tuple[int, int]] = []
    for t, idx, x in log.events():
        by_element.setdefault(x, []).append((t, idx))
        if idx == a:
            a_entries.append((t, x))
    trace = [r for r in trace if r.get("op") == "route"]
    out: list[Divergence] = []
    counters: dict[tuple[int, int], int] = {}
    for line, (entered, x) in enumerate(a_entries):
        if line >= len(trace):
            out.append(Divergence(line, "missing-record", None, {"x": x}))
            break
        record = trace[line]
        candidates = sorted(idx for t, idx in by_element.get(x, ()) if t < entered)
        options = []
        for e in candidates:
            for i in (0, 1):
                k = counters.get((e, i), 0) + 1
                options.append((balance_code(e, i, k), e, i, k))
        if options:
            _, e, i, k = min(options)
            want_req, want_side = [e, i, k], i
        else:
            want_req, want_side = None, 0
        for fieldname, want in (
            ("x", x), ("s", entered), ("req", want_req), ("side", want_side),
        ):
            if record.get(fieldname) != want:
                out.append(Divergence(line, fieldname, record.get(fieldname), want))
        side = want_side
        for e in candidates:
            counters[(e, side)] = counters.get((e, side), 0) + 1
        # the routed ball must surface in exactly the chosen half
        half, other = (a0, a1) if side == 0 else (a1, a0)
        landed = log.entry_stage(half, x)
        if landed is None or landed <= entered:
            out.append(Divergence(line, "landing", landed, f"stage > {entered} in half {side}"))
        if log.entry_stage(other, x) is not None:
            out.append(Divergence(line, "landing", f"also in half {1 - side}", None))
    for line in range(len(a_entries), len(trace)):
        out.append(Divergence(line, "extra-record", trace[line], None))
    return out


# -- Herrmann-Kummer restraint replay --------------------------------------


def _member(log: EventLog, index: int, x: int, stage: int) -> bool:
    t = log.entry_stage(index, x)
    return t is not None and t <= stage


class _NaiveRestraint:
    """Slow recomputation of one triple's l/r history from the log."""

    def __init__(self, log, code, y_idx, z_idx, bi_idx, a_idx):
        self.log = log
        self.code = code
        self.y_idx = y_idx
        self.z_idx = z_idx
        self.bi_idx = bi_idx
        self.a_idx = a_idx
        merged = []
        for idx in {y_idx, z_idx, bi_idx, a_idx}:
            merged.extend(log.entries(idx))
        merged.sort()
        self.events = merged
        self.pos = 0
        self.qual: dict[int, bool] = {}
        self.r = code
        self.last = 0

    def _qualifies(self, x: int, stage: int) -> bool:
        in_bi = _member(self.log, self.bi_idx, x, stage)
        in_a = _member(self.log, self.a_idx, x, stage)
        in_y = _member(self.log, self.y_idx, x, stage)
        if not (in_bi or in_a or in_y):
            return True
        lhs = in_bi and in_y and not in_a
        return lhs == (not _member(self.log, self.z_idx, x, stage))

    def _min_qual(self) -> int:
        n = 0
        while not self.qual.get(n, True):
            n += 1
        return n

    def advance(self, stage: int) -> None:
        while self.pos < len(self.events) and self.events[self.pos][0] <= stage:
            t, x = self.events[self.pos]
            self.pos += 1
            new = self._qualifies(x, t)
            if new != self.qual.get(x, True):
                if t > self.last:
                    self.r = max(self.r, min(self._min_qual(), t - 1))
                    self.last = t
                self.qual[x] = new

    def l_at(self, stage: int) -> int:
        return min(self._min_qual(), stage)

    def r_at(self, stage: int) -> int:
        self.advance(stage)
        return max(self.r, self.l_at(stage))


def replay_hk(
    log: EventLog, b: int, a: int, b0: int, b1: int, trace: list,
    y_listing=None, z_listing=None,
) -> list[Divergence]:
    y_listing = y_listing or (lambda e: e)
    z_listing = z_listing or (lambda j: j)
    states: dict[int, _NaiveRestraint] = {}

    def state_for(m: int, i: int) -> _NaiveRestraint:
        code = pair(m, i)
        got = states.get(code)
        if got is None:
            e, j = unpair(m)
            got = _NaiveRestraint(log, code, y_listing(e), z_listing(j),
                                  b0 if i == 0 else b1, a)
            states[code] = got
        return got

    trace = [r for r in trace if r.get("op") == "hk"]
    b_entries = [(t, x) for t, x in log.entries(b)]
    out: list[Divergence] = []
    for line, (entered, x) in enumerate(b_entries):
        if line >= len(trace):
            out.append(Divergence(line, "missing-record", None, {"x": x}))
            break
        record = trace[line]
        chosen = None
        m = 0
        while chosen is None:
            for i in (0, 1):
                st = state_for(m, i)
                if x <= st.r_at(entered):
                    chosen = (m, i, st)
                    break
            m += 1
        m, i, st = chosen
        e, j = unpair(m)
        want = {
            "x": x,
            "s": entered,
            "triple": [e, j, i],
            "l": st.l_at(entered),
            "r": st.r_at(entered),
            "side": i,
        }
        for fieldname, value in want.items():
            if record.get(fieldname) != value:
                out.append(Divergence(line, fieldname, record.get(fieldname), value))
        half, other = (b0, b1) if i == 0 else (b1, b0)
        landed = log.entry_stage(half, x)
        if landed is None or landed <= entered:
            out.append(Divergence(line, "landing", landed, f"stage > {entered} in half {i}"))
        if log.entry_stage(other, x) is not None:
            out.append(Divergence(line, "landing", f"also in half {1 - i}", None))
    for line in range(len(b_entries), len(trace)):
        out.append(Divergence(line, "extra-record", trace[line], None))
    return out


def restraint_history(log: EventLog, code: int, y_idx, z_idx, bi_idx, a_idx, stages) -> list[int]:
    """r values at the requested stages; monotone by construction rule."""
    tracker = _NaiveRestraint(log, code, y_idx, z_idx, bi_idx, a_idx)
    return [tracker.r_at(s) for s in stages]


# -- evidence probes --------------------------------------------------------


def covered_prefix(log: EventLog, indices, stage: int) -> int:
    union = set()
    for idx in indices:
        union |= log.members_at(idx, stage)
    n = 0
    while n in union:
        n += 1
    return n


def universe_frontier(log: EventLog, stage: int) -> int:
    """Largest element released by the stage; the scale coverage is judged on."""
    best = 0
    for t, _, x in log.events():
        if t > stage:
            break
        if x > best:
            best = x
    return best


@dataclass
class ComplementEvidence:
    j: int
    status: str  # "live" or "refuted"
    stage: Optional[int] = None
    reason: Optional[str] = None

    def as_dict(self):
        return {"j": self.j, "status": self.status, "stage": self.stage, "reason": self.reason}


def complement_witnesses(
    log: EventLog, half: int, S: int, J: int, window: Optional[int] = None
) -> list[ComplementEvidence]:
    """Which W_j still behave like a computable complement of the half by S.

    Live requires disjointness from the half through S, a covered prefix
    that still grew over the trailing window, and coverage keeping pace
    with the universe: the prefix must reach a fixed fraction of the
    largest element in play, otherwise the union has holes it never fills.
    """
    window = window or max(1, S // 10)
    out = []
    half_members = log.members_at(half, S)
    frontier = universe_frontier(log, S)
    for j in range(J):
        clash = half_members & log.members_at(j, S)
        if clash:
            x = min(clash)
            stage = max(log.entry_stage(half, x), log.entry_stage(j, x))
            out.append(ComplementEvidence(j, "refuted", stage, "intersects-half"))
            continue
        now = covered_prefix(log, (j, half), S)
        past = covered_prefix(log, (j, half), S - window)
        if now <= past:
            out.append(ComplementEvidence(j, "refuted", S, "coverage-stalled"))
        elif now * 8 < frontier:
            out.append(ComplementEvidence(j, "refuted", S, "coverage-gap"))
        else:
            out.append(ComplementEvidence(j, "live"))
    return out


def probe_trivial_split(
    log: EventLog, a0: int, a1: int, S: int, J: int, window: Optional[int] = None
) -> dict[int, list[ComplementEvidence]]:
    """Complement-witness evidence for both halves of a split."""
    return {
        0: complement_witnesses(log, a0, S, J, window),
        1: complement_witnesses(log, a1, S, J, window),
    }


@dataclass
class FriedbergEvidence:
    j: int
    swallowed_total: int
    swallowed_recent: int
    side_swallowed_recent: tuple[int, int]
    signature_side: Optional[int] = None

    def as_dict(self):
        return {
            "j": self.j,
            "swallowed_total": self.swallowed_total,
            "swallowed_recent": self.swallowed_recent,
            "side_swallowed_recent": list(self.side_swallowed_recent),
            "signature_side": self.signature_side,
        }


def probe_friedberg(
    log: EventLog, a: int, a0: int, a1: int, S: int, J: int, window: Optional[int] = None
) -> list[FriedbergEvidence]:
    """Finite-stage echo of the Friedberg property per candidate W_j.

    The difference W_j - A_i can only fail to be c.e. by repeatedly losing
    elements, i.e. when W_j-then-A_i keeps growing.  A non-Friedberg
    signature for side i is: W_j-then-A still grows over the trailing
    window while W_j-then-A_i does not.
    """
    window = window or max(1, S // 10)
    past = S - window
    out = []
    for j in range(J):
        total_now = len(before_then(log, j, a, S))
        total_past = len(before_then(log, j, a, past))
        side_now = (len(before_then(log, j, a0, S)), len(before_then(log, j, a1, S)))
        side_past = (len(before_then(log, j, a0, past)), len(before_then(log, j, a1, past)))
        recent = total_now - total_past
        side_recent = (side_now[0] - side_past[0], side_now[1] - side_past[1])
        signature = None
        if recent > 0:
            if side_recent[0] == 0:
                signature = 0
            elif side_recent[1] == 0:
                signature = 1
        out.append(FriedbergEvidence(j, total_now, recent, side_recent, signature))
    return out


@dataclass
class DProbeReport:
    consistent: bool
    counterexample: Optional[tuple] = None  # (x, kind)
    covered: int = 0

    def as_dict(self):
        return {
            "consistent": self.consistent,
            "counterexample": list(self.counterexample) if self.counterexample else None,
            "covered": self.covered,
        }


def d_probe(log: EventLog, a: int, w: int, y: int, z: int, S: int,
            window: Optional[int] = None) -> DProbeReport:
    """Finite-stage check that (w, y, z) witness complementation modulo A.

    Coverage: w | y | a covers a still-growing prefix.  Agreement: the
    stage-S snapshot of (w & y) - a equals the snapshot of z.
    """
    window = window or max(1, S // 10)
    now = covered_prefix(log, (w, y, a), S)
    past = covered_prefix(log, (w, y, a), S - window)
    if now <= past and now < S:
        return DProbeReport(False, (now, "uncovered"), now)
    lhs = (log.members_at(w, S) & log.members_at(y, S)) - log.members_at(a, S)
    rhs = log.members_at(z, S)
    gaps = sorted(lhs ^ rhs)
    if gaps:
        x = gaps[0]
        kind = "missing-from-z" if x in lhs else "extra-in-z"
        return DProbeReport(False, (x, kind), now)
    return DProbeReport(True, None, now)


# -- tree trace replay -------------------------------------------------------


def replay_tree(log: EventLog, records: list, depth: int = 25) -> list[Divergence]:
    """Re-derive the legality of every traced tree decision.

    Positions, piece commitments, request ledgers and marker tables are
    rebuilt from the decision records alone; pull eligibility, dump-state
    comparisons and endpoint shapes are then re-checked against the raw
    event log.  Chip counters themselves are not re-derived (that would be
    a second full simulation); everything downstream of them is.
    """
    from math import isqrt

    from .tree import (
        E_WINDOW, MARKER_WINDOW, ROOT,
        diverges_left, greatest_r_prefix, is_positive_a, is_r_node, question_at,
    )

    out: list[Divergence] = []
    meta = next((r for r in records if r.get("op") == "meta"), {})
    feeder = meta.get("feeder", 1)

    positions: dict[int, str] = {}
    r_comm: dict[str, set] = {}
    rt_comm: dict[str, set] = {}
    markers: dict[str, list] = {}
    requests: dict[str, list] = {}
    dumped: set = set()
    dump_order: dict[int, int] = {}
    f = ROOT
    f_hist: list[tuple[int, str]] = [(0, ROOT)]
    ks = 0
    stage = 0

    def member(idx, x, bound):
        t = log.entry_stage(idx, x)
        return t is not None and t <= bound

    def fail(line, fieldname, got, want):
        out.append(Divergence(line, fieldname, got, want))

    def on_path_requests(st):
        walk = f
        while True:
            if is_r_node(walk) or is_positive_a(walk):
                requests.setdefault(walk, []).append(st)
            if walk == ROOT:
                break
            walk = walk[:-1]

    def eligible(node, x):
        pos = positions.get(x)
        if pos is None:
            return False
        if pos == node:
            return is_r_node(node)
        if pos != node and node.startswith(pos):
            return True
        return diverges_left(node, pos)

    for line, rec in enumerate(records):
        op = rec.get("op")
        if op in ("meta", "chip", "event", "verdict"):
            continue
        if op == "f":
            node = rec["node"]
            st, ks = rec["s"], rec.get("ks", ks)
            if node != ROOT and not (is_r_node(node) or is_positive_a(node)):
                fail(line, "endpoint-kind", node, "r-node or positive a-node")
            if len(node) > min(st * st, depth) and st > 0:
                fail(line, "endpoint-length", len(node), min(st * st, depth))
            f = node
            f_hist.append((st, node))
            continue
        if op == "enter":
            stage = rec["s"]
            on_path_requests(stage)
            if rec["x"] != stage - 1:
                fail(line, "ball-number", rec["x"], stage - 1)
            if rec["node"] != f[:1]:
                fail(line, "entry-node", rec["node"], f[:1])
            positions[rec["x"]] = rec["node"]
            continue
        if op == "void":
            node = rec["node"]
            if not is_left_of(f, node) or node.startswith(f):
                fail(line, "void-target", node, f"strictly right of {f}")
            requests.pop(node, None)
            continue
        if op == "left":
            src_node, dst = rec["from"], rec["to"]
            if not diverges_left(f, src_node):
                fail(line, "left-source", src_node, f"right of {f}")
            d = 0
            for bf, bs in zip(f, src_node):
                if bf != bs:
                    break
                d += 1
            want = f[: (isqrt(d) + 1) ** 2] if (isqrt(d) + 1) ** 2 <= len(f) else f
            if dst != want:
                fail(line, "left-target", dst, want)
            for x in rec["balls"]:
                if positions.get(x) != src_node:
                    fail(line, "left-ball-position", (x, positions.get(x)), src_node)
                positions[x] = dst
            continue
        if op == "pull":
            node = rec["node"]
            ks = rec.get("ks", ks)
            ledger = requests.get(node, [])
            if not ledger:
                fail(line, "pull-request", None, "a pending request")
            else:
                if rec["req"] != ledger[0]:
                    fail(line, "pull-request-least", rec["req"], ledger[0])
                ledger.pop(0)
                if not ledger:
                    requests.pop(node, None)
            x0, x1 = rec["x0"], rec["x1"]
            if not x0 < x1:
                fail(line, "pull-pair-order", (x0, x1), "x0 < x1")
            floor = len(node)
            for x in (x0, x1):
                if x <= floor:
                    fail(line, "pull-floor", x, f"> {floor}")
                if not eligible(node, x):
                    fail(line, "pull-eligibility", (x, positions.get(x)), node)
                if x in r_comm.get(node, ()) or x in rt_comm.get(node, ()):
                    fail(line, "pull-fresh", x, "uncommitted at the node")
            if is_r_node(node) and node.endswith("1"):
                j = isqrt(len(node))
                j_idx = feeder if j == 1 else j
                for x in (x0, x1):
                    if not member(j_idx, x, ks - 1):
                        fail(line, "pull-gate", x, f"member of W_{j_idx}")
            for x in (x0, x1):
                positions[x] = node
            if is_r_node(node):
                r_comm.setdefault(node, set()).add(x0)
                insort_list(markers.setdefault(node, []), x0, dumped)
                rt_comm.setdefault(node, set()).add(x1)
            delta = greatest_r_prefix(node)
            for y in rec["mid"]:
                if not (floor < y < x1):
                    fail(line, "mid-range", y, f"({floor}, {x1})")
                if delta != ROOT and y not in rt_comm.get(delta, ()):
                    fail(line, "mid-source", y, f"tilde piece of {delta!r}")
                positions[y] = node
                if is_r_node(node):
                    r_comm.setdefault(node, set()).add(y)
                    insort_list(markers.setdefault(node, []), y, dumped)
            continue
        if op == "patch":
            node, y = rec["node"], rec["x"]
            delta = greatest_r_prefix(node)
            if y not in dumped:
                fail(line, "patch-casualty", y, "a ball that entered A")
            if delta != ROOT and y not in rt_comm.get(delta, ()):
                fail(line, "patch-source", y, f"tilde piece of {delta!r}")
            if y in r_comm.get(node, ()) or y in rt_comm.get(node, ()):
                fail(line, "patch-fresh", y, "uncommitted at the node")
            r_comm.setdefault(node, set()).add(y)
            continue
        if op == "dump-orig":
            node = rec["node"]
            ks = rec.get("ks", ks)
            live = markers.get(node, [])
            e, i = rec["e"], rec["i"]
            if not (0 <= e < i <= len(live)):
                fail(line, "dump-bounds", (e, i), f"within {len(live)} markers")
                continue
            if rec["balls"] != live[e:i]:
                fail(line, "dump-balls", rec["balls"], live[e:i])
            revs = [_rev_mask(log, x, ks - 1) for x in live[: min(len(live), MARKER_WINDOW)]]
            found = _least_dump(revs, E_WINDOW)
            if found != (e, i):
                fail(line, "dump-least", (e, i), found)
            balls = live[e:i]
            for x in balls:
                dumped.add(x)
                dump_order[x] = len(dump_order)
                positions.pop(x, None)
            del live[e:i]
            for other, table in markers.items():
                if other != node:
                    for x in balls:
                        k = bisect_left(table, x)
                        if k < len(table) and table[k] == x:
                            del table[k]
            continue
        if op == "dump-extra":
            gamma, node = rec["gamma"], rec["node"]
            if gamma != f or not is_positive_a(gamma):
                fail(line, "extra-gamma", gamma, f"the positive endpoint {f}")
            q = question_at(gamma[:-1])
            if q.kind != "T" or q.base == node:
                fail(line, "extra-question", (q.kind, q.base), "T question about another piece")
            best = 0
            for st_h, fh in f_hist:
                if is_left_of(fh, gamma):
                    best = st_h
            want_t = max(len(gamma), best)
            if rec["idx"] != want_t:
                fail(line, "extra-index", rec["idx"], want_t)
            live = markers.get(node, [])
            if rec["idx"] < len(live):
                if rec["x"] != live[rec["idx"]]:
                    fail(line, "extra-ball", rec["x"], live[rec["idx"]])
                x = rec["x"]
                dumped.add(x)
                dump_order[x] = len(dump_order)
                positions.pop(x, None)
                for table in markers.values():
                    k = bisect_left(table, x)
                    if k < len(table) and table[k] == x:
                        del table[k]
            else:
                fail(line, "extra-exists", rec["idx"], f"< {len(live)} markers")
            continue
        fail(line, "op", op, "a known tree record")
    return out


def insort_list(lst: list, x: int, dumped: set) -> None:
    if x in dumped:
        return
    from bisect import insort

    insort(lst, x)


def _rev_mask(log: EventLog, x: int, bound: int, width: int = 64) -> int:
    mask = 0
    for idx, t in log.containers_of(x).items():
        if idx < width and t <= bound:
            mask |= 1 << (width - 1 - idx)
    return mask


def _least_dump(revs: list, width: int = 64):
    n = len(revs)
    if n < 2:
        return None
    suffix = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = revs[k] if revs[k] > suffix[k + 1] else suffix[k + 1]
    for e in range(min(n - 1, width)):
        shift = width - 1 - e
        mine = revs[e] >> shift
        if (suffix[e + 1] >> shift) > mine:
            i = e + 1
            while (revs[i] >> shift) <= mine:
                i += 1
            return (e, i)
    return None


def is_left_of(a: str, b: str) -> bool:
    if a != b and b.startswith(a):
        return True
    for ba, bb in zip(a, b):
        if ba != bb:
            return ba == "1"
    return False


# -- trace-file level checking ------------------------------------------------


def replay_check(records: list, kind: str = "replay") -> dict:
    """Re-simulate the decisions in a parsed trace and report divergences.

    ``records`` is the full record list including interleaved events; the
    kind picks the suite ("replay" dispatches on the trace's own meta
    record).  The report carries a boolean ``ok`` plus per-line divergences.
    """
    from .setalg import check_split_history
    from .trace import TraceError, split_events

    log, decisions = split_events(records)
    meta = next((r for r in decisions if r.get("op") == "meta"), None)
    if meta is None:
        raise TraceError("trace has no meta record to dispatch on")
    flavour = meta.get("kind")
    if kind == "replay":
        kind = {"friedberg": "friedberg", "hk": "hk", "tree": "tree"}.get(flavour)
        if kind is None:
            raise TraceError(f"cannot dispatch on meta kind {flavour!r}")
    if kind == "friedberg":
        divergences = replay_friedberg(log, meta["a"], meta["a0"], meta["a1"], decisions)
    elif kind == "hk":
        def listing_from(field):
            overrides = {pos: idx for pos, idx in meta.get(field, ())}
            return (lambda p: overrides.get(p, p)) if overrides else None

        divergences = replay_hk(
            log, meta["b"], meta["a"], meta["b0"], meta["b1"], decisions,
            y_listing=listing_from("y_over"), z_listing=listing_from("z_over"),
        )
    elif kind == "tree":
        divergences = replay_tree(log, decisions, meta.get("depth", 25))
    elif kind == "split":
        if flavour == "friedberg":
            triple_ids = (meta["a"], meta["a0"], meta["a1"])
        elif flavour == "hk":
            triple_ids = (meta["b"], meta["b0"], meta["b1"])
        else:
            triple_ids = (meta["e_a"], meta["e0"], meta["e1"])
        hit = check_split_history(
            log, *triple_ids, log.last_stage, settle=max(64, (log.last_stage + 1) // 10)
        )
        divergences = (
            [] if hit is None else [Divergence(0, "split", {"stage": hit[0], "kind": hit[1], "x": hit[2]}, None)]
        )
    else:
        raise TraceError(f"unknown suite {kind!r}")
    return {
        "ok": not divergences,
        "kind": kind,
        "divergences": [d.as_dict() for d in divergences],
        "decisions": sum(1 for r in decisions if r.get("op") != "meta"),
        "events": len(log),
    }


def iterate_corollary(proc, rounds: int, stages: int, depth: int = 25,
                      corpus_texts=None) -> list[dict]:
    """Round-iterated diagonalization; see the tree module for the engine."""
    from .tree import iterate_splitting_procedures

    return iterate_splitting_procedures(proc, rounds, stages, depth, corpus_texts)
