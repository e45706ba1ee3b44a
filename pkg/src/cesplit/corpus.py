"""Program corpora: small machine-program families with varied halting sets."""

from __future__ import annotations

from typing import Iterable

HALT_ALL = "HALT"
DIVERGE = "JMP 0"
HALT_EVEN = "DECJZ 0 3; DECJZ 0 4; JMP 0; HALT; JMP 4"
HALT_ODD = "DECJZ 0 4; DECJZ 0 3; JMP 0; HALT; JMP 4"
HALT_SLOW = "DECJZ 0 2; JMP 0; HALT"  # halts after ~2x ticks

BASIC = [HALT_ALL, HALT_EVEN, HALT_ODD, DIVERGE, HALT_SLOW]

# heavy on instant halters so the diagonal pairs (code, code) keep firing at
# a linear rate; a diverger and a slow lane keep the diagonal patchy
WITNESS = [HALT_ALL, HALT_EVEN, DIVERGE, HALT_ALL, HALT_SLOW, HALT_ALL]


def halt_mod(k: int, r: int) -> str:
    """Program halting exactly on inputs congruent to r modulo k."""
    # spin off r decrements first, diverging if zero strikes early or late
    size = r + k + 3
    lines = []
    for i in range(r):
        lines.append(f"DECJZ 0 {size - 1}")
    loop = len(lines)
    for i in range(k):
        target = size - 2 if i == 0 else size - 1
        lines.append(f"DECJZ 0 {target}")
    lines.append(f"JMP {loop}")
    lines.append("HALT")
    lines.append(f"JMP {size - 1}")
    return "; ".join(lines)


def halt_below(k: int) -> str:
    """Program halting exactly on inputs < k."""
    lines = [f"DECJZ 0 {k + 1}" for _ in range(k)]
    lines.append(f"JMP {k}")
    lines.append("HALT")
    return "; ".join(lines)


def halt_from(k: int) -> str:
    """Program halting exactly on inputs >= k."""
    lines = [f"DECJZ 0 {k + 1}" for _ in range(k)]
    lines.append("HALT")
    lines.append(f"JMP {k + 1}")
    return "; ".join(lines)


def make_corpus(n: int) -> list[str]:
    """Deterministic corpus of n program texts with varied behaviour."""
    out = list(BASIC[: max(0, n)])
    k, r = 2, 0
    while len(out) < n:
        slot = len(out)
        kind = slot % 7
        if kind == 0:
            out.append(halt_mod(k, r % k))
            r += 1
            if r >= 2 * k:
                k += 1
                r = 0
        elif kind == 1:
            out.append(halt_below(2 + slot % 23))
        elif kind == 2:
            out.append(halt_from(1 + slot % 17))
        elif kind == 3:
            out.append(DIVERGE)
        elif kind == 4:
            out.append(HALT_SLOW)
        elif kind == 5:
            out.append(halt_mod(2 + slot % 5, slot % 2))
        else:
            # unparsable on purpose; decoding must stay total
            out.append(f"NOP {slot}")
    return out[:n]


def load_corpus(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def save_corpus(path, corpus: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in corpus:
            fh.write(line + "\n")
