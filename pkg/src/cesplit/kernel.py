"""Deterministic single-event enumeration kernel.

One global stage clock drives both machine simulation and host generators.
Each stage releases at most one membership event (stage, index, element); all
sources share a single FIFO, and machine simulation only advances on stages
with an empty FIFO.  That pause-and-resume discipline is what lets constructed
sets keep pace with their inputs without ever violating the one-event
convention.

Index space:

  even code 2*m                 machine program corpus[m % len(corpus)]
                                (diverging when the corpus is empty or the
                                text is invalid; every m >= len(corpus) is a
                                padding code for the same program)
  odd  code 2*pair(slot, p)+1   host slot; pad 0 carries the slot's own
                                emissions, higher pads echo the previous pad's
                                released events once materialised by pad().

Machine simulation dovetails fairly over (program code, input) pairs.  A new
pair is activated every third machine tick, alternating between a dense lane
cycling over the first len(corpus)+64 codes (so the diagonal pairs (m, 2m)
keep arriving at a linear rate) and a sparse diagonal lane over the remaining
padding codes.  Active pairs live in a ladder of level queues served in the ruler
sequence (level i every 2**(i+1) ticks) with bursts that double per level, so
fresh pairs are simulated promptly, long-running pairs get geometrically
growing budgets, and divergers sink to rarely-served deep levels while still
receiving unboundedly many steps in the limit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional

from .machine import new_state, parse_program, step_state
from .pairing import pair, unpair


MAX_LEVEL = 24
BURST_CAP = 1024


class KernelError(Exception):
    """Base class for kernel misuse; signals a construction bug."""


class DuplicateSlotError(KernelError):
    pass


class OutOfOrderStepError(KernelError):
    pass


class StageNotSteppedError(KernelError):
    pass


class EmissionConflictError(KernelError):
    pass


class EnumerationEvent(NamedTuple):
    stage: int
    index: int
    element: int


def machine_index(m: int) -> int:
    return 2 * m


def host_index(slot: int, pad: int = 0) -> int:
    return 2 * pair(slot, pad) + 1


def decode_index(code: int) -> tuple[str, int, int]:
    """('machine', m, 0) for even codes, ('host', slot, pad) for odd ones."""
    if code % 2 == 0:
        return ("machine", code // 2, 0)
    slot, pad = unpair((code - 1) // 2)
    return ("host", slot, pad)


class EventLog:
    """Append-only record of released events with per-index entry stamps."""

    __slots__ = ("_stages", "_indices", "_elements", "_entries", "_memb", "_by_element")

    def __init__(self):
        self._stages: list[int] = []
        self._indices: list[int] = []
        self._elements: list[int] = []
        self._entries: dict[int, list[tuple[int, int]]] = {}
        self._memb: dict[int, dict[int, int]] = {}
        self._by_element: dict[int, dict[int, int]] = {}

    def __len__(self) -> int:
        return len(self._stages)

    @property
    def last_stage(self) -> int:
        return self._stages[-1] if self._stages else -1

    def append(self, stage: int, index: int, element: int) -> None:
        memb = self._memb.setdefault(index, {})
        if element in memb:
            raise EmissionConflictError(
                f"element {element} already entered index {index} at stage {memb[element]}"
            )
        if self._stages and stage <= self._stages[-1]:
            raise OutOfOrderStepError(f"stage {stage} is not past {self._stages[-1]}")
        self._stages.append(stage)
        self._indices.append(index)
        self._elements.append(element)
        self._entries.setdefault(index, []).append((stage, element))
        memb[element] = stage
        self._by_element.setdefault(element, {})[index] = stage

    def entry_stage(self, index: int, element: int) -> Optional[int]:
        memb = self._memb.get(index)
        if memb is None:
            return None
        return memb.get(element)

    def entries(self, index: int) -> list[tuple[int, int]]:
        """(stage, element) pairs for one index, in release order."""
        return self._entries.get(index, [])

    def containers_of(self, element: int) -> dict[int, int]:
        """index -> entry stage for every set the element has entered."""
        return self._by_element.get(element, {})

    def members_at(self, index: int, stage: int) -> frozenset:
        out = []
        for t, x in self._entries.get(index, ()):
            if t > stage:
                break
            out.append(x)
        return frozenset(out)

    def count_at(self, index: int, stage: int) -> int:
        n = 0
        for t, _ in self._entries.get(index, ()):
            if t > stage:
                break
            n += 1
        return n

    def events(self) -> Iterable[tuple[int, int, int]]:
        return zip(self._stages, self._indices, self._elements)

    def get(self, i: int) -> tuple[int, int, int]:
        return (self._stages[i], self._indices[i], self._elements[i])

    def event_at(self, stage: int) -> Optional[tuple[int, int, int]]:
        # binary search over the sparse stage column
        lo, hi = 0, len(self._stages)
        while lo < hi:
            mid = (lo + hi) // 2
            if self._stages[mid] < stage:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self._stages) and self._stages[lo] == stage:
            return (stage, self._indices[lo], self._elements[lo])
        return None


@dataclass
class HostGenerator:
    """A deterministic emission source for one constructed set.

    ``pull(stage)`` yields (set_tag, element) emissions which the kernel
    queues FIFO and releases one per stage.  The tag must match the
    generator's own tag; multi-set constructions register one generator per
    set and coordinate through shared state.  ``watch`` lists indices whose
    released events should wake the generator; None means poll every stage.
    """

    slot: int
    pull: Callable[[int], Iterable[tuple[str, int]]]
    tag: str = ""
    watch: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if not self.tag:
            self.tag = f"slot{self.slot}"


@dataclass
class _GenEntry:
    gen: HostGenerator
    index: int
    dirty: bool = True
    emitted: dict = field(default_factory=dict)  # element -> emit stage


class Kernel:
    def __init__(self, corpus: Iterable[str] = (), *, track_fairness: bool = False):
        texts = list(corpus)
        self._programs = [parse_program(t) for t in texts]
        self._n_programs = len(self._programs)
        self._dense_codes = self._n_programs + 64
        self._any_valid = any(p is not None for p in self._programs)
        self._log = EventLog()
        self._pending: deque[tuple[int, int]] = deque()
        self._pending_set: set[tuple[int, int]] = set()
        self.max_backlog = 0
        self._entries: dict[int, _GenEntry] = {}
        self._always: list[_GenEntry] = []
        self._dirty_batch: list[_GenEntry] = []
        self._watchers: dict[int, list[_GenEntry]] = {}
        self._levels: list[deque[list]] = [deque() for _ in range(MAX_LEVEL + 1)]
        self._mtick = 0
        self._stick = 0
        self._act_primary = 0
        self._act_pad = 0
        self._act_toggle = False
        self._next_stage = 0
        self._pads: dict[int, int] = {}
        self._echoes: dict[int, list[int]] = {}
        self._fairness: Optional[dict[tuple[int, int], int]] = (
            {} if track_fairness else None
        )

    # -- inspection ------------------------------------------------------

    @property
    def log(self) -> EventLog:
        return self._log

    @property
    def next_stage(self) -> int:
        return self._next_stage

    def require_stepped(self, stage: int) -> None:
        if stage >= self._next_stage:
            raise StageNotSteppedError(
                f"stage {stage} not reached; kernel is at {self._next_stage}"
            )

    def w_at(self, index: int, stage: int) -> frozenset:
        self.require_stepped(stage)
        return self._log.members_at(index, stage)

    def fairness_counts(self) -> dict[tuple[int, int], int]:
        if self._fairness is None:
            raise KernelError("kernel was not constructed with track_fairness")
        return dict(self._fairness)

    # -- registration ----------------------------------------------------

    def register_generator(self, gen: HostGenerator) -> int:
        if gen.slot in self._entries:
            raise DuplicateSlotError(f"slot {gen.slot} already registered")
        entry = _GenEntry(gen, host_index(gen.slot, 0))
        self._entries[gen.slot] = entry
        if gen.watch is None:
            self._always.append(entry)
        else:
            for idx in gen.watch:
                self._watchers.setdefault(idx, []).append(entry)
            self._dirty_batch.append(entry)
        return entry.index

    def free_slot(self, at_least: int = 0) -> int:
        slot = at_least
        while slot in self._entries:
            slot += 1
        return slot

    def pad(self, index: int) -> int:
        """A fresh index with the same enumeration up to stage shifts."""
        got = self._pads.get(index)
        if got is not None:
            return got
        if index % 2 == 0:
            out = index + 2 * max(self._n_programs, 1)
        else:
            slot, p = unpair((index - 1) // 2)
            out = host_index(slot, p + 1)
            # materialise the echo: mirror past releases, then future ones
            self._echoes.setdefault(index, []).append(out)
            for _, x in list(self._log.entries(index)):
                self._enqueue(out, x)
        self._pads[index] = out
        return out

    # -- stepping --------------------------------------------------------

    def _enqueue(self, index: int, element: int) -> None:
        key = (index, element)
        if key in self._pending_set or self._log.entry_stage(index, element) is not None:
            raise EmissionConflictError(
                f"duplicate emission of element {element} for index {index}"
            )
        self._pending_set.add(key)
        self._pending.append(key)
        if len(self._pending) > self.max_backlog:
            self.max_backlog = len(self._pending)

    def _release(self, stage: int, index: int, element: int) -> EnumerationEvent:
        self._log.append(stage, index, element)
        for echo in self._echoes.get(index, ()):
            self._enqueue(echo, element)
        for entry in self._watchers.get(index, ()):
            if not entry.dirty:
                entry.dirty = True
                self._dirty_batch.append(entry)
        return EnumerationEvent(stage, index, element)

    def wake_slot(self, slot: int) -> None:
        """Ask the kernel to poll a generator although nothing it watches fired."""
        entry = self._entries.get(slot)
        if entry is None:
            raise KernelError(f"slot {slot} is not registered")
        if not entry.dirty:
            entry.dirty = True
            self._dirty_batch.append(entry)

    def _poll_one(self, entry: _GenEntry, stage: int) -> None:
        entry.dirty = False
        for tag, x in entry.gen.pull(stage):
            if tag != entry.gen.tag:
                raise KernelError(
                    f"generator for slot {entry.gen.slot} emitted foreign tag {tag!r}"
                )
            if x in entry.emitted:
                raise EmissionConflictError(
                    f"slot {entry.gen.slot} emitted element {x} twice"
                )
            entry.emitted[x] = stage
            self._enqueue(entry.index, x)

    def _poll_generators(self, stage: int) -> None:
        for entry in self._always:
            self._poll_one(entry, stage)
        # generators woken during this stage's polls run in the same stage
        while self._dirty_batch:
            batch = self._dirty_batch
            self._dirty_batch = []
            for entry in sorted(batch, key=lambda e: e.gen.slot):
                if entry.dirty:
                    self._poll_one(entry, stage)

    def _activate_pair(self) -> None:
        n = self._n_programs
        dense = self._dense_codes
        if not self._act_toggle:
            # dense lane over the first few codes
            while True:
                k = self._act_primary
                self._act_primary += 1
                m, x = k % dense, k // dense
                if self._programs[m % n] is not None:
                    break
        else:
            # sparse diagonal lane over the remaining padding codes
            while True:
                u, v = unpair(self._act_pad)
                self._act_pad += 1
                if self._programs[(dense + u) % n] is not None:
                    m, x = dense + u, v
                    break
        self._act_toggle = not self._act_toggle
        program = self._programs[m % n]
        self._levels[0].append([machine_index(m), x, new_state(program, x), program])

    def _machine_tick(self, stage: int) -> Optional[EnumerationEvent]:
        if not self._any_valid:
            return None
        tick = self._mtick
        self._mtick += 1
        if tick % 3 == 0:
            self._activate_pair()
        # ruler sequence: level i is served every 2**(i+1) service ticks
        self._stick += 1
        want = (self._stick & -self._stick).bit_length() - 1
        if want > MAX_LEVEL:
            want = MAX_LEVEL
        level = None
        for lvl in range(want, -1, -1):
            if self._levels[lvl]:
                level = lvl
                break
        if level is None:
            for lvl in range(want + 1, MAX_LEVEL + 1):
                if self._levels[lvl]:
                    level = lvl
                    break
        if level is None:
            return None
        entry = self._levels[level].popleft()
        burst = BURST_CAP if level >= 10 else 1 << level
        program, state = entry[3], entry[2]
        if self._fairness is not None:
            key = (entry[0], entry[1])
        for _ in range(burst):
            if self._fairness is not None:
                self._fairness[key] = self._fairness.get(key, 0) + 1
            if step_state(program, state):
                return self._release(stage, entry[0], entry[1])
        self._levels[min(level + 1, MAX_LEVEL)].append(entry)
        return None

    def step(self, stage: Optional[int] = None) -> Optional[EnumerationEvent]:
        if stage is None:
            stage = self._next_stage
        elif stage != self._next_stage:
            raise OutOfOrderStepError(
                f"expected stage {self._next_stage}, got {stage}"
            )
        self._poll_generators(stage)
        if self._pending:
            index, element = self._pending.popleft()
            self._pending_set.discard((index, element))
            event = self._release(stage, index, element)
        else:
            event = self._machine_tick(stage)
        self._next_stage = stage + 1
        return event

    def run_to(self, stage: int) -> None:
        """Step every stage strictly below ``stage``."""
        while self._next_stage < stage:
            self.step()

    @property
    def backlog(self) -> int:
        return len(self._pending)

    # -- export ----------------------------------------------------------

    def export_events_jsonl(self, path) -> None:
        import json

        with open(path, "w", encoding="utf-8") as fh:
            for s, e, x in self._log.events():
                fh.write(json.dumps({"s": s, "e": e, "x": x}) + "\n")
