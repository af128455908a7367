"""Diagnostic matrix, syndromes, and equivalent-fault-class statistics.

A fault's syndrome is its observable response under the test set: at
pattern granularity the per-pattern detection bit-vector, at signature
granularity the tuple of final MISR values under injection. Faults with
identical syndromes are indistinguishable by the test and form one
equivalent class; the undetected (all-zero-syndrome) faults are reported
as their own designated class since grouping them says nothing about
logical equivalence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import bist as bist_mod
from . import faultsim
from .errors import SimulationError

GRANULARITIES = ("pattern", "signature")


@dataclass(frozen=True)
class Syndrome:
    fault: faultsim.FaultDescriptor
    observations: tuple
    granularity: str

    def canonical(self):
        """Platform-independent bytes used as the classification key."""
        if self.granularity == "pattern":
            bits = 0
            for i, b in enumerate(self.observations):
                bits |= int(bool(b)) << i
            n = (len(self.observations) + 7) // 8
            return bits.to_bytes(n, "little")
        return b"".join(v.to_bytes(8, "little") for v in self.observations)


@dataclass(frozen=True)
class DiagnosticMatrix:
    granularity: str
    pattern_count: int
    faults: tuple
    rows: tuple            # canonical bytes per fault
    detected: tuple        # bool per fault


@dataclass(frozen=True)
class ClassReport:
    granularity: str
    pattern_count: int
    classes: tuple         # tuples of fault indices, detected classes only
    undetected: tuple      # fault indices with all-zero / golden syndrome
    fault_count: int

    @property
    def max_size(self):
        return max((len(c) for c in self.classes), default=0)

    @property
    def mean_size(self):
        if not self.classes:
            return 0.0
        return sum(len(c) for c in self.classes) / len(self.classes)

    @property
    def mean_size_with_undetected(self):
        total = list(self.classes) + ([self.undetected] if self.undetected else [])
        if not total:
            return 0.0
        return sum(len(c) for c in total) / len(total)

    def to_dict(self, faults=None):
        d = {
            "granularity": self.granularity,
            "pattern_count": self.pattern_count,
            "fault_count": self.fault_count,
            "class_count": len(self.classes),
            "max_size": self.max_size,
            "mean_size": round(self.mean_size, 4),
            "mean_size_with_undetected": round(self.mean_size_with_undetected, 4),
            "undetected": len(self.undetected),
        }
        if faults is not None:
            d["classes"] = [[faults[i].key for i in c] for c in self.classes]
            d["undetected_faults"] = [faults[i].key for i in self.undetected]
        return d


def build_matrix(netlist, universe, patterns, granularity="pattern",
                 plan=None, workers=1):
    """One syndrome row per fault, in universe order.

    Pattern granularity replays every fault through the fault simulator
    for its full per-pattern detection vector. Signature granularity runs
    the BIST signature path per fault and needs a ``plan``.
    """
    if granularity not in GRANULARITIES:
        raise SimulationError(f"unknown granularity {granularity!r}")
    patterns = [tuple(p) for p in patterns]
    if granularity == "pattern":
        obs = faultsim.observation_nets(netlist)
        golden = faultsim._serial_outputs(netlist, patterns, obs)
        rows = []
        detected = []
        for f in universe.faults:
            if netlist.flops:
                vec = faultsim._serial_detect(netlist, patterns, obs, golden,
                                              f, early_exit=False)[1]
            else:
                vec = faultsim._sa_detection_vector(netlist, patterns, f)
            s = Syndrome(f, tuple(vec), "pattern")
            rows.append(s.canonical())
            detected.append(any(vec))
        return DiagnosticMatrix("pattern", len(patterns), universe.faults,
                                tuple(rows), tuple(detected))
    if plan is None:
        raise SimulationError("signature granularity needs a BIST plan")
    if plan.golden is None:
        plan = bist_mod.compute_golden(netlist, plan)
    golden_sigs = tuple(s.value for s in plan.golden)
    rows = []
    detected = []
    for f in universe.faults:
        result = bist_mod.run_selftest(netlist, plan, injected=f)
        sigs = tuple(s.value for s in result.signatures)
        rows.append(b"".join(v.to_bytes(8, "little") for v in sigs))
        detected.append(sigs != golden_sigs)
    return DiagnosticMatrix("signature", plan.pattern_count, universe.faults,
                            tuple(rows), tuple(detected))


def classify(matrix):
    """Group identical syndrome rows; stable numbering by first member."""
    groups = {}
    undetected = []
    for i, (row, det) in enumerate(zip(matrix.rows, matrix.detected)):
        if not det:
            undetected.append(i)
        else:
            groups.setdefault(row, []).append(i)
    classes = sorted((tuple(g) for g in groups.values()), key=lambda c: c[0])
    return ClassReport(matrix.granularity, matrix.pattern_count,
                       tuple(classes), tuple(undetected), len(matrix.faults))


def refine(matrix, netlist, universe, extra_patterns, workers=1):
    """Extend the observation set with more patterns; classes can only split.

    Returns (before report, after report, combined matrix).
    """
    if matrix.granularity != "pattern":
        raise SimulationError("refine works on pattern-granularity matrices")
    before = classify(matrix)
    extended = build_matrix(netlist, universe,
                            list(extra_patterns), "pattern", workers=workers)
    if extended.faults != matrix.faults:
        raise SimulationError("refine needs the same fault universe")
    rows = tuple(a + b for a, b in zip(matrix.rows, extended.rows))
    detected = tuple(a or b for a, b in zip(matrix.detected, extended.detected))
    combined = DiagnosticMatrix("pattern",
                                matrix.pattern_count + extended.pattern_count,
                                matrix.faults, rows, detected)
    after = classify(combined)
    return before, after, combined


def classify_per_block(matrix, fault_blocks):
    """Per-block class statistics (the per-component rows of the report).

    ``fault_blocks`` assigns each fault a block name (or None); rows are
    compared only within a block.
    """
    table = {}
    for block in sorted({b for b in fault_blocks if b is not None},
                        key=lambda b: fault_blocks.index(b)):
        idx = [i for i, b in enumerate(fault_blocks) if b == block]
        groups = {}
        undetected = []
        for i in idx:
            if matrix.detected[i]:
                groups.setdefault(matrix.rows[i], []).append(i)
            else:
                undetected.append(i)
        classes = sorted((tuple(g) for g in groups.values()), key=lambda c: c[0])
        rep = ClassReport(matrix.granularity, matrix.pattern_count,
                          tuple(classes), tuple(undetected), len(idx))
        table[block] = rep
    return table


def export_matrix(matrix, path):
    """Packed binary rows with a JSON header (fault dictionary + metadata)."""
    header = {
        "granularity": matrix.granularity,
        "pattern_count": matrix.pattern_count,
        "faults": [f.key for f in matrix.faults],
        "row_bytes": len(matrix.rows[0]) if matrix.rows else 0,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        for row in matrix.rows:
            fh.write(row)
