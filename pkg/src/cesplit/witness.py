"""Witness constructions: sets built together with a distinguished split.

The central construction splits a computable set R against its complement:
push a fixed noncomputable-looking c.e. set (the kernel's diagonal set
{e : e enters W_e as an element}) through the increasing enumerations of R
and of its complement, and take A to be the disjoint union of the two
images.  R minus the complement-side image is R itself, a c.e. set, so the
split of A it induces cannot be a Friedberg split; the R-side difference
keeps losing elements forever.

Also here: the before/after pair operators used to split a set against two
incomparable supersets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .kernel import EventLog, HostGenerator, Kernel
from .setalg import ComputablePair


@dataclass
class WitnessBundle:
    kernel: Kernel
    r: ComputablePair
    k_r: int
    k_rbar: int
    a: int


class _DiagonalImageBrain:
    """Maps the diagonal set through the increasing enumerations of R / R-bar.

    The diagonal set collects every index code e whose own set receives e as
    an element.  Position i of R's increasing enumeration is only trusted
    once the pair certifies the interval [0, bound) past it, so emissions
    never move.
    """

    def __init__(self, kernel: Kernel, pair: ComputablePair):
        self.kernel = kernel
        self.pair = pair
        self.cursor = 0
        self.diagonal: list[int] = []
        self.diag_seen: set[int] = set()
        self.certified = 0
        self.pos_list: list[int] = []
        self.neg_list: list[int] = []
        self.sent = [0, 0]  # how many diagonal positions emitted per side
        self.out: tuple[list[int], list[int]] = ([], [])

    def _advance_certified(self) -> None:
        log = self.kernel.log
        while True:
            n = self.certified
            in_pos = log.entry_stage(self.pair.pos, n) is not None
            in_neg = log.entry_stage(self.pair.neg, n) is not None
            if in_pos and in_neg:
                raise RuntimeError(f"computable pair sides share element {n}")
            if in_pos:
                self.pos_list.append(n)
            elif in_neg:
                self.neg_list.append(n)
            else:
                return
            self.certified = n + 1

    def pump(self) -> None:
        log = self.kernel.log
        while self.cursor < len(log):
            _, idx, x = log.get(self.cursor)
            self.cursor += 1
            if idx == x and x not in self.diag_seen:
                self.diag_seen.add(x)
                self.diagonal.append(x)
        self._advance_certified()
        for side, enum in ((0, self.pos_list), (1, self.neg_list)):
            while self.sent[side] < len(self.diagonal):
                i = self.diagonal[self.sent[side]]
                if i >= len(enum):
                    break
                self.out[side].append(enum[i])
                self.sent[side] += 1


def build_split_witness(kernel: Kernel, pair: ComputablePair,
                        slot_base: Optional[int] = None) -> WitnessBundle:
    """Register K_R, K_R-bar and their union A on the kernel."""
    brain = _DiagonalImageBrain(kernel, pair)
    base = kernel.free_slot(slot_base or 0)
    slots = [base]
    for _ in range(2):
        slots.append(kernel.free_slot(slots[-1] + 1))
    tags = [f"slot{s}" for s in slots]

    def pull_kr(stage):
        brain.pump()
        queued = brain.out[0]
        out = [(tags[0], x) for x in queued]
        queued.clear()
        return out

    def pull_krbar(stage):
        queued = brain.out[1]
        out = [(tags[1], x) for x in queued]
        queued.clear()
        return out

    k_r = kernel.register_generator(HostGenerator(slot=slots[0], pull=pull_kr, watch=None))
    k_rbar = kernel.register_generator(HostGenerator(slot=slots[1], pull=pull_krbar, watch=None))

    union = _UnionEcho(kernel, (k_r, k_rbar))

    def pull_union(stage):
        out = [(tags[2], x) for x in union.fresh()]
        return out

    a = kernel.register_generator(
        HostGenerator(slot=slots[2], pull=pull_union, watch=(k_r, k_rbar))
    )
    return WitnessBundle(kernel, pair, k_r, k_rbar, a)


class _UnionEcho:
    def __init__(self, kernel: Kernel, sources: tuple[int, ...]):
        self.kernel = kernel
        self.sources = sources
        self.cursor = 0

    def fresh(self) -> list[int]:
        log = self.kernel.log
        out = []
        while self.cursor < len(log):
            _, idx, x = log.get(self.cursor)
            self.cursor += 1
            if idx in self.sources:
                out.append(x)
        return out


def register_paced_pair(kernel: Kernel, predicate, pace: int = 2,
                        slot_base: Optional[int] = None) -> ComputablePair:
    """Host-backed computable pair: value n lands on the predicate's side.

    Values are emitted in increasing order, one every ``pace`` stages, so the
    certified interval grows linearly instead of waiting for machine runs.
    """
    base = kernel.free_slot(slot_base or 0)
    neg_slot = kernel.free_slot(base + 1)
    state = {"next": 0, "out": ([], [])}
    tags = (f"slot{base}", f"slot{neg_slot}")

    def pull_pos(stage):
        if stage % pace == 0:
            n = state["next"]
            state["next"] = n + 1
            state["out"][0 if predicate(n) else 1].append(n)
        queued = state["out"][0]
        out = [(tags[0], x) for x in queued]
        queued.clear()
        return out

    def pull_neg(stage):
        queued = state["out"][1]
        out = [(tags[1], x) for x in queued]
        queued.clear()
        return out

    pos = kernel.register_generator(HostGenerator(slot=base, pull=pull_pos, watch=None))
    neg = kernel.register_generator(HostGenerator(slot=neg_slot, pull=pull_neg, watch=None))
    return ComputablePair(pos, neg)


def run_split_witness(corpus_texts, pos: int, neg: int, stages: int,
                      slot_base: Optional[int] = None) -> WitnessBundle:
    kernel = Kernel(corpus_texts)
    bundle = build_split_witness(kernel, ComputablePair(pos, neg), slot_base)
    kernel.run_to(stages)
    return bundle


def run_parity_witness(corpus_texts, stages: int, pace: int = 3) -> WitnessBundle:
    """The canonical scenario: R = evens via a paced host pair."""
    kernel = Kernel(corpus_texts)
    pair = register_paced_pair(kernel, lambda n: n % 2 == 0, pace)
    bundle = build_split_witness(kernel, pair)
    kernel.run_to(stages)
    return bundle


# -- before/after pair operators -------------------------------------------


def shavrukov_pair(kernel: Kernel, w: int, y: int,
                   slot_base: Optional[int] = None) -> tuple[int, int]:
    """Registered enumerations of w-before-y and y-before-w.

    Disjoint at every stage: an element's first-entry order between w and y
    is unique under the single-event convention.
    """
    base = kernel.free_slot(slot_base or 0)
    slot_x1 = kernel.free_slot(base + 1)

    def make_pull(first: int, second: int, tag: str):
        state = {"cursor": 0}

        def pull(stage):
            log = kernel.log
            out = []
            while state["cursor"] < len(log):
                t, idx, x = log.get(state["cursor"])
                state["cursor"] += 1
                if idx != first:
                    continue
                t_other = log.entry_stage(second, x)
                if t_other is None or t_other > t:
                    out.append((tag, x))
            return out

        return pull

    x0 = kernel.register_generator(
        HostGenerator(slot=base, pull=make_pull(w, y, f"slot{base}"), watch=(w,))
    )
    x1 = kernel.register_generator(
        HostGenerator(slot=slot_x1, pull=make_pull(y, w, f"slot{slot_x1}"), watch=(y,))
    )
    return x0, x1


@dataclass
class ShavSplit:
    a0: int
    a1: int
    _pending: dict = field(default_factory=dict)

    def coverage_exceptions(self, log: EventLog, a: int, x0: int, x1: int, s: int) -> list[int]:
        """Entrants of a never covered by x0 | x1 through stage s."""
        out = []
        for t, x in log.entries(a):
            if t > s:
                break
            if log.entry_stage(x0, x) is None and log.entry_stage(x1, x) is None:
                out.append(x)
        return out


def shav_split(kernel: Kernel, a: int, x0: int, x1: int,
               slot_base: Optional[int] = None) -> tuple[int, int, ShavSplit]:
    """Halves a & x0 and a & x1; an entrant routes once its side is known."""
    base = kernel.free_slot(slot_base or 0)
    slot1 = kernel.free_slot(base + 1)
    state = {"cursor": 0, "pending": [], "out": ([], [])}
    tags = (f"slot{base}", f"slot{slot1}")

    def ingest(stage):
        log = kernel.log
        while state["cursor"] < len(log):
            _, idx, x = log.get(state["cursor"])
            state["cursor"] += 1
            if idx == a:
                state["pending"].append(x)
        still = []
        for x in state["pending"]:
            t0 = log.entry_stage(x0, x)
            t1 = log.entry_stage(x1, x)
            if t0 is not None and (t1 is None or t0 < t1):
                state["out"][0].append(x)
            elif t1 is not None:
                state["out"][1].append(x)
            else:
                still.append(x)
        state["pending"] = still

    def make_pull(side: int):
        def pull(stage):
            if side == 0:
                ingest(stage)
            queued = state["out"][side]
            out = [(tags[side], x) for x in queued]
            queued.clear()
            return out

        return pull

    a0 = kernel.register_generator(HostGenerator(slot=base, pull=make_pull(0), watch=None))
    a1 = kernel.register_generator(HostGenerator(slot=slot1, pull=make_pull(1), watch=None))
    return a0, a1, ShavSplit(a0, a1)
