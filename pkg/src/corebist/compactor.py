"""Response compaction: XOR-cascade width folding, MISRs, output selection.

The MISR is the same Fibonacci LFSR as the pattern generator with the
incoming word XORed into the register after the shift:

    next = shift(state) XOR word

so an all-zero register absorbing an all-zero stream stays zero, and the
whole compactor is linear over GF(2).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import PlanError, SimulationError
from .tpg import Polynomial, lfsr_next


@dataclass(frozen=True)
class XorCascade:
    """Width folder: output bit j collects input bits i with i mod out == j."""

    in_width: int
    out_width: int

    def __post_init__(self):
        if self.out_width > self.in_width:
            raise PlanError("cascade cannot widen a word")
        if self.out_width < 1:
            raise PlanError("cascade output width must be >= 1")


def fold(cascade, word):
    """Fold an ``in_width`` bit word (LSB-first tuple) down to ``out_width``."""
    word = tuple(word)
    if len(word) != cascade.in_width:
        raise SimulationError(f"fold width mismatch: got {len(word)}, "
                              f"expected {cascade.in_width}")
    out = [0] * cascade.out_width
    for i, b in enumerate(word):
        out[i % cascade.out_width] ^= b & 1
    return tuple(out)


@dataclass(frozen=True)
class MisrState:
    """Multiple-input signature register; all-zero is a legal state."""

    polynomial: Polynomial
    register: int = 0

    @property
    def bits(self):
        return tuple((self.register >> i) & 1 for i in range(self.polynomial.degree))


def misr_absorb(state, word):
    """Absorb one parallel word (LSB-first bit tuple of the MISR width)."""
    word = tuple(word)
    k = state.polynomial.degree
    if len(word) != k:
        raise SimulationError(f"MISR word width {len(word)} != degree {k}")
    w = 0
    for i, b in enumerate(word):
        w |= (b & 1) << i
    return MisrState(state.polynomial, lfsr_next(state.polynomial, state.register) ^ w)


def misr_absorb_int(state, word):
    """Integer fast path of :func:`misr_absorb` (word already packed)."""
    return MisrState(state.polynomial,
                     lfsr_next(state.polynomial, state.register) ^ word)


@dataclass(frozen=True)
class Signature:
    """Final compacted response of one block."""

    block: str
    polynomial: Polynomial
    value: int
    pattern_count: int

    def hex(self):
        return f"{self.value:0{(self.polynomial.degree + 3) // 4}x}"


def select_output(signatures, sel):
    """Pick the MISR addressed by the 2-bit output selector."""
    if not 0 <= sel < len(signatures):
        raise PlanError(f"selector {sel} out of range (have {len(signatures)} signatures)")
    if sel > 3:
        raise PlanError("selector is a 2-bit code")
    return signatures[sel]


def signature_of_stream(poly, words, init=0):
    """Signature of a word stream (ints) from ``init``; linearity helper."""
    s = MisrState(poly, init)
    for w in words:
        s = misr_absorb_int(s, w)
    return s.register


def aliasing_estimate(width, trials, stream_len=4, rng=None,
                      polynomial=None):
    """Monte-Carlo aliasing rate of a ``width``-bit MISR.

    Each trial corrupts a stream of ``stream_len`` words with uniform random
    error words (all-zero error streams are redrawn); by linearity the trial
    aliases iff the error stream's own signature is zero. Expected rate is
    about 2^-width.
    """
    if trials < 10_000:
        raise SimulationError("aliasing estimate needs >= 10^4 trials")
    rng = rng or random.Random(0)
    if polynomial is None:
        from .tpg import DEFAULT_POLYNOMIALS
        polynomial = Polynomial.parse(DEFAULT_POLYNOMIALS[width])
    mask = polynomial.tap_mask
    regmask = (1 << width) - 1
    top = 1 << width
    aliased = 0
    randrange = rng.randrange
    for _ in range(trials):
        while True:
            words = [randrange(top) for _ in range(stream_len)]
            if any(words):
                break
        s = 0
        for w in words:
            fb = (s & mask).bit_count() & 1
            s = (((s << 1) | fb) & regmask) ^ w
        if s == 0:
            aliased += 1
    return aliased / trials
