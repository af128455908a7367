"""Pseudo-random pattern generation: ALFSR, constraint generators, port bindings.

The ALFSR uses the Fibonacci (external-XOR) configuration: the feedback bit is
the XOR of the stages selected by the characteristic polynomial's exponents,
shifted into stage degree-1 while every other stage moves down one position.
Register bit 0 is the LSB of the emitted pattern word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import PlanError, SimulationError

_POLY_RE = re.compile(r"x\^(\d+)|x|1")

# primitive polynomials used as engine defaults, verified by the period
# property tests (orbit length 2^n - 1)
DEFAULT_POLYNOMIALS = {
    2: "x^2+x+1",
    4: "x^4+x+1",
    8: "x^8+x^4+x^3+x^2+1",
    16: "x^16+x^12+x^3+x+1",
    20: "x^20+x^3+1",
}


@dataclass(frozen=True)
class Polynomial:
    """Characteristic polynomial over GF(2); constant term implicit.

    ``taps`` holds the exponents of every non-constant term, the degree
    included. Canonical text form: ``x^20+x^3+1``.
    """

    degree: int
    taps: frozenset

    def __post_init__(self):
        if not 2 <= self.degree <= 64:
            raise PlanError(f"polynomial degree {self.degree} outside 2..64")
        if not self.taps:
            raise PlanError("empty tap set")
        if self.degree not in self.taps:
            raise PlanError("tap set must include the degree term")
        for t in self.taps:
            if not 0 < t <= self.degree:
                raise PlanError(f"tap {t} out of range for degree {self.degree}")

    @classmethod
    def parse(cls, text):
        terms = [t.strip() for t in text.replace(" ", "").split("+") if t.strip()]
        taps = set()
        has_one = False
        for t in terms:
            if t == "1":
                has_one = True
            elif t == "x":
                taps.add(1)
            else:
                m = re.fullmatch(r"x\^(\d+)", t)
                if not m:
                    raise PlanError(f"bad polynomial term {t!r} in {text!r}")
                taps.add(int(m.group(1)))
        if not has_one:
            raise PlanError(f"polynomial {text!r} missing constant term")
        if not taps:
            raise PlanError(f"polynomial {text!r} has no x terms")
        return cls(max(taps), frozenset(taps))

    def __str__(self):
        parts = []
        for t in sorted(self.taps, reverse=True):
            parts.append("x" if t == 1 else f"x^{t}")
        parts.append("1")
        return "+".join(parts)

    @property
    def tap_mask(self):
        m = 0
        for t in self.taps:
            m |= 1 << (t - 1)
        return m


def lfsr_next(poly, register):
    """One Fibonacci shift of an integer register under ``poly``."""
    fb = (register & poly.tap_mask).bit_count() & 1
    return ((register << 1) | fb) & ((1 << poly.degree) - 1)


@dataclass(frozen=True)
class AlfsrState:
    """Autonomous LFSR state; the all-zero register is rejected at seed time."""

    polynomial: Polynomial
    register: int

    @property
    def bits(self):
        return tuple((self.register >> i) & 1 for i in range(self.polynomial.degree))

    def bit(self, i):
        return (self.register >> i) & 1


def seed(polynomial, seed_bits):
    """Build a validated ALFSR state from LSB-first seed bits."""
    seed_bits = tuple(seed_bits)
    if len(seed_bits) != polynomial.degree:
        raise PlanError(f"seed length {len(seed_bits)} != degree {polynomial.degree}")
    reg = 0
    for i, b in enumerate(seed_bits):
        reg |= (b & 1) << i
    if reg == 0:
        raise PlanError("all-zero ALFSR seed (fixed point of the feedback)")
    return AlfsrState(polynomial, reg)


def seed_int(polynomial, value):
    return seed(polynomial, tuple((value >> i) & 1 for i in range(polynomial.degree)))


def alfsr_step(state):
    """Advance one clock: shift with external-XOR feedback."""
    return AlfsrState(state.polynomial, lfsr_next(state.polynomial, state.register))


def alfsr_period(state, limit=None):
    """Orbit length of ``state`` under repeated stepping (exhaustive)."""
    poly = state.polynomial
    mask = poly.tap_mask
    regmask = (1 << poly.degree) - 1
    start = state.register
    r = start
    n = 0
    limit = limit if limit is not None else 1 << poly.degree
    while n < limit:
        fb = (r & mask).bit_count() & 1
        r = ((r << 1) | fb) & regmask
        n += 1
        if r == start:
            return n
    raise SimulationError("orbit longer than limit")


@dataclass(frozen=True)
class ConstraintProgram:
    """Declarative constraint-generator schedule.

    ``schedule`` is a list of (value, hold) pairs; ``value`` is an int of
    ``port_width`` bits held for ``hold`` cycles. Cyclic programs wrap;
    non-cyclic ones hold the last value forever.
    """

    port_width: int
    schedule: tuple  # ((value:int, hold:int), ...)
    cyclic: bool = True

    def __post_init__(self):
        if self.port_width < 1:
            raise PlanError("constraint port width must be >= 1")
        if not self.schedule:
            raise PlanError("constraint schedule is empty")
        for value, hold in self.schedule:
            if hold < 1:
                raise PlanError("hold count must be >= 1")
            if value >> self.port_width:
                raise PlanError(f"value {value:#x} exceeds port width {self.port_width}")

    @property
    def total_cycles(self):
        return sum(h for _, h in self.schedule)


def cg_step(program, cycle):
    """Constraint value driven at ``cycle`` (int, ``port_width`` bits)."""
    if cycle < 0:
        raise SimulationError("cycle must be >= 0")
    total = program.total_cycles
    if program.cyclic:
        cycle %= total
    elif cycle >= total:
        return program.schedule[-1][0]
    for value, hold in program.schedule:
        if cycle < hold:
            return value
        cycle -= hold
    return program.schedule[-1][0]


@dataclass(frozen=True)
class PortBinding:
    """How one block's input port is driven (the a-d wiring situations).

    ``alfsr_slice`` maps block input bit -> ALFSR bit index; bits listed in
    ``cg_bits`` are driven by the constraint program instead and must not
    appear in the slice. Replication (several input bits reading the same
    ALFSR bit) is allowed.
    """

    block: str
    width: int
    alfsr_slice: dict = field(default_factory=dict)   # input bit -> alfsr bit
    cg: ConstraintProgram = None
    cg_bits: tuple = ()                               # input bits, LSB-first order

    def __post_init__(self):
        cg_set = set(self.cg_bits)
        if len(cg_set) != len(self.cg_bits):
            raise PlanError(f"duplicate CG bit in binding for {self.block!r}")
        if cg_set and self.cg is None:
            raise PlanError(f"CG bits given without a program for {self.block!r}")
        if self.cg is not None and len(self.cg_bits) != self.cg.port_width:
            raise PlanError(f"CG port width mismatch for {self.block!r}")
        if cg_set & set(self.alfsr_slice):
            raise PlanError(f"bit driven by both CG and ALFSR in {self.block!r}")
        covered = cg_set | set(self.alfsr_slice)
        if covered != set(range(self.width)):
            missing = sorted(set(range(self.width)) - covered)
            extra = sorted(covered - set(range(self.width)))
            raise PlanError(f"binding for {self.block!r} must drive every input bit "
                            f"exactly once (missing {missing}, extra {extra})")


def modular_binding(block_name, width, degree, cg=None, cg_bits=()):
    """Default binding: CG bits as given, the rest replicated modulo degree.

    Covers all four wiring situations: with no CG and width == degree this is
    the identity slice; width > degree replicates.
    """
    cg_set = set(cg_bits)
    remaining = [i for i in range(width) if i not in cg_set]
    alfsr_slice = {bit: j % degree for j, bit in enumerate(remaining)}
    return PortBinding(block_name, width, alfsr_slice, cg, tuple(cg_bits))


def assemble_pattern(binding, alfsr, cycle):
    """Block input word for this cycle (LSB-first bit tuple)."""
    degree = alfsr.polynomial.degree
    out = [0] * binding.width
    for bit, src in binding.alfsr_slice.items():
        if src >= degree:
            raise PlanError(f"ALFSR bit {src} out of range for degree {degree}")
        out[bit] = alfsr.bit(src)
    if binding.cg is not None:
        value = cg_step(binding.cg, cycle)
        for j, bit in enumerate(binding.cg_bits):
            out[bit] = (value >> j) & 1
    return tuple(out)
