#!/usr/bin/env python3
"""The entered-before operators and the stagewise decomposition.

W before A collects elements seen in W strictly before they show up in A;
W before-then A keeps those that do land in A later.  At every stage the
difference set and the before-then set tile the before set.
"""

from cesplit import Kernel, before, before_then
from cesplit.corpus import BASIC

kernel = Kernel(BASIC)
kernel.run_to(20_000)
log = kernel.log

halt, evens = 0, 2  # machine codes: halt-everything and halt-on-evens
S = 19_999

bf = before(log, halt, evens, S)
bt = before_then(log, halt, evens, S)
w_halt = log.members_at(halt, S)
w_evens = log.members_at(evens, S)

print(f"|W_halt| = {len(w_halt)}, |W_evens| = {len(w_evens)}")
print(f"halt-before-evens:        {len(bf)} elements")
print(f"halt-before-then-evens:   {len(bt)} elements (all even)",
      all(x % 2 == 0 for x in bt))

diff = w_halt - w_evens
print("\ndecomposition  before = (difference) |_| (before-then):")
print("  equal:    ", bf == diff | bt)
print("  disjoint: ", diff & bt == frozenset())

for s in (500, 2_000, 8_000, S):
    print(f"  at stage {s:>6}: |before|={len(before(log, halt, evens, s)):4d}  "
          f"|before-then|={len(before_then(log, halt, evens, s)):4d}")
print("\nboth operators are monotone in the stage, as the rows show")
