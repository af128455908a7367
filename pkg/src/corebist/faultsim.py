"""Fault universe, structural collapsing, stuck-at and transition-delay
fault simulation, and coverage computation.

Two stuck-at simulation paths are kept deliberately separate:

* :func:`serial_fault_sim` replays every fault one pattern at a time through
  the scalar evaluator in :mod:`corebist.circuit` - the oracle path.
* :func:`parallel_fault_sim` packs 64 patterns per integer word and evaluates
  bit-planes - the production path. Its report must be bit-identical to the
  serial one; that equivalence is the main regression property.

Fault model: stuck-at faults live on net stems and, where a net fans out to
more than one gate pin, on the individual branch pins; transition-delay
faults (slow-to-rise STR, slow-to-fall STF) live on net stems only and are
detected launch-on-capture over consecutive pattern pairs.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import circuit
from .errors import SimulationError

WORD_WIDTH = 64

SA_KINDS = ("SA0", "SA1")
TDF_KINDS = ("STR", "STF")


@dataclass(frozen=True)
class FaultDescriptor:
    """One fault site. ``gate``/``pin`` name a branch (gate input pin);
    both None means the net stem (driver output)."""

    net: str
    kind: str
    gate: str = None   # output net of the gate owning the faulted input pin
    pin: int = None

    @property
    def site(self):
        if self.gate is None:
            return self.net
        return f"{self.net}->{self.gate}.{self.pin}"

    @property
    def key(self):
        return f"{self.site}:{self.kind}"


@dataclass(frozen=True)
class FaultUniverse:
    faults: tuple
    collapse_map: dict = None   # fault -> representative fault

    @property
    def counts(self):
        c = {}
        for f in self.faults:
            c[f.kind] = c.get(f.kind, 0) + 1
        return c

    def __len__(self):
        return len(self.faults)


def _fanout(netlist):
    """Net -> list of (gate output net, pin index) reading it."""
    fan = {n: [] for n in netlist.nets}
    for g in netlist.gates:
        for pin, net in enumerate(g.inputs):
            fan[net].append((g.output, pin))
    return fan


def enumerate_faults(netlist, kinds=("SA0", "SA1")):
    """Deterministic full fault universe for the requested kinds.

    Stuck-at: one stem fault per net plus branch faults on every gate input
    pin of nets with fanout > 1 (on fanout-free nets the pin fault is the
    stem fault). Transition faults: stems only.
    """
    kinds = tuple(kinds)
    for k in kinds:
        if k not in SA_KINDS + TDF_KINDS:
            raise SimulationError(f"unknown fault kind {k!r}")
    fan = _fanout(netlist)
    faults = []
    sa = [k for k in kinds if k in SA_KINDS]
    tdf = [k for k in kinds if k in TDF_KINDS]
    for net in netlist.nets:
        for k in sa:
            faults.append(FaultDescriptor(net, k))
        for k in tdf:
            faults.append(FaultDescriptor(net, k))
    for net in netlist.nets:
        if len(fan[net]) > 1:
            for gate, pin in fan[net]:
                for k in sa:
                    faults.append(FaultDescriptor(net, k, gate, pin))
    return FaultUniverse(tuple(faults))


# gate-local equivalences: pin fault (kind) == output stem fault (kind)
_EQUIV_IN_OUT = {
    "AND": {"SA0": "SA0"},
    "NAND": {"SA0": "SA1"},
    "OR": {"SA1": "SA1"},
    "NOR": {"SA1": "SA0"},
    "BUF": {"SA0": "SA0", "SA1": "SA1"},
    "NOT": {"SA0": "SA1", "SA1": "SA0"},
}


def collapse(universe, netlist):
    """Structural equivalence collapsing of the stuck-at faults.

    Classic gate-local rules (e.g. any AND input SA0 is equivalent to the
    output SA0). Transition faults pass through uncollapsed. Returns a
    universe holding class representatives with the full map recorded.
    """
    fan = _fanout(netlist)
    index = {f: i for i, f in enumerate(universe.faults)}

    parent = list(range(len(universe.faults)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for g in netlist.gates:
        rules = _EQUIV_IN_OUT.get(g.kind)
        if not rules:
            continue
        for in_kind, out_kind in rules.items():
            out_f = FaultDescriptor(g.output, out_kind)
            if out_f not in index:
                continue
            for pin, net in enumerate(g.inputs):
                if len(fan[net]) > 1:
                    in_f = FaultDescriptor(net, in_kind, g.output, pin)
                else:
                    in_f = FaultDescriptor(net, in_kind)
                if in_f in index:
                    union(index[in_f], index[out_f])

    collapse_map = {}
    reps = []
    for i, f in enumerate(universe.faults):
        r = universe.faults[find(i)]
        collapse_map[f] = r
        if r == f:
            reps.append(f)
    return FaultUniverse(tuple(reps), collapse_map)


# -- observation and reporting ----------------------------------------------

def observation_nets(netlist):
    """Primary outputs plus every block output net, deduplicated in order."""
    seen = set()
    obs = []
    for n in netlist.primary_outputs:
        if n not in seen:
            obs.append(n)
            seen.add(n)
    for b in netlist.blocks:
        for n in b.output_port:
            if n not in seen:
                obs.append(n)
                seen.add(n)
    return tuple(obs)


def _block_cones(netlist):
    """Block name -> set of nets in the fanin cone of its output port."""
    by_output = {g.output: g for g in netlist.gates}
    flop_d = {f.q: f.d for f in netlist.flops}
    cones = {}
    for b in netlist.blocks:
        cone = set()
        stack = list(b.output_port) + list(b.input_port)
        while stack:
            n = stack.pop()
            if n in cone:
                continue
            cone.add(n)
            g = by_output.get(n)
            if g is not None:
                stack.extend(g.inputs)
            elif n in flop_d:
                stack.append(flop_d[n])
        cones[b.name] = cone
    return cones


@dataclass(frozen=True)
class CoverageReport:
    """Per-fault first-detection indices plus per-block rollup."""

    pattern_count: int
    faults: tuple            # FaultDescriptor, universe order
    first_detect: tuple      # int pattern index or None, parallel to faults
    fault_blocks: tuple      # block name or None, parallel to faults

    @property
    def detected(self):
        return sum(1 for d in self.first_detect if d is not None)

    @property
    def coverage(self):
        if not self.faults:
            raise SimulationError("empty fault universe")
        return self.detected / len(self.faults)

    def detected_faults(self):
        return tuple(f for f, d in zip(self.faults, self.first_detect)
                     if d is not None)

    def per_block(self):
        table = {}
        for f, d, b in zip(self.faults, self.first_detect, self.fault_blocks):
            row = table.setdefault(b or "-", {"faults": 0, "detected": 0})
            row["faults"] += 1
            if d is not None:
                row["detected"] += 1
        for row in table.values():
            row["coverage"] = row["detected"] / row["faults"] if row["faults"] else 0.0
        return table

    def to_dict(self):
        return {
            "pattern_count": self.pattern_count,
            "faults": len(self.faults),
            "detected": self.detected,
            "coverage": self.coverage,
            "per_block": self.per_block(),
            "per_fault": [
                {"site": f.site, "kind": f.kind, "first_detect": d}
                for f, d in zip(self.faults, self.first_detect)
            ],
        }


def _assign_blocks(netlist, faults):
    cones = _block_cones(netlist)
    order = [b.name for b in netlist.blocks]
    out = []
    for f in faults:
        name = None
        for bname in order:
            if f.net in cones[bname]:
                name = bname
                break
        out.append(name)
    return tuple(out)


def coverage(report, per_kind=True):
    """Summary table over a report; an empty universe is an error, not 100%."""
    if not report.faults:
        raise SimulationError("empty fault universe")
    summary = {"total": {"faults": len(report.faults),
                         "detected": report.detected,
                         "coverage": report.coverage}}
    if per_kind:
        for kind in SA_KINDS + TDF_KINDS:
            idx = [i for i, f in enumerate(report.faults) if f.kind == kind]
            if not idx:
                continue
            det = sum(1 for i in idx if report.first_detect[i] is not None)
            summary[kind] = {"faults": len(idx), "detected": det,
                             "coverage": det / len(idx)}
    return summary


# -- serial (oracle) path ----------------------------------------------------

def _serial_outputs(netlist, patterns, obs, fault=None):
    """Observed output tuples per pattern, scalar replay from reset."""
    outs = []
    for st in circuit.run_patterns(netlist, patterns, fault=fault):
        outs.append(tuple(st[n] for n in obs))
    return outs


def _serial_detect(netlist, patterns, obs, golden, fault, early_exit=True):
    """First-detection index, or full detection vector if not early_exit."""
    vector = []
    first = None
    state = circuit.initial_state(netlist)
    forced = None
    if fault.pin is None:
        forced = (fault.net, 1 if fault.kind == "SA1" else 0)
    for i, p in enumerate(patterns):
        prev_q = {f.q: state[f.q] for f in netlist.flops}
        if forced is not None and forced[0] in prev_q:
            prev_q[forced[0]] = forced[1]  # a stuck Q net stays stuck pre-edge
        nxt = circuit.evaluate(netlist, state, p, fault=fault)
        got = tuple(prev_q[n] if n in prev_q else nxt[n] for n in obs)
        hit = got != golden[i]
        vector.append(hit)
        if hit and first is None:
            first = i
            if early_exit:
                return first, vector
        state = nxt
    return first, vector


def serial_fault_sim(netlist, universe, patterns, workers=1):
    """Oracle stuck-at fault simulation: one fault, one pattern at a time."""
    patterns = [tuple(p) for p in patterns]
    if not patterns:
        raise SimulationError("no patterns")
    faults = universe.faults
    for f in faults:
        if f.kind not in SA_KINDS:
            raise SimulationError("serial_fault_sim handles stuck-at faults only")
    obs = observation_nets(netlist)
    golden = _serial_outputs(netlist, patterns, obs)
    firsts = _map_faults(_serial_worker, netlist, faults, patterns, obs,
                         golden, workers)
    return CoverageReport(len(patterns), faults, tuple(firsts),
                          _assign_blocks(netlist, faults))


def _serial_worker(netlist, faults, patterns, obs, golden):
    return [_serial_detect(netlist, patterns, obs, golden, f)[0] for f in faults]


def _map_faults(worker, netlist, faults, patterns, obs, golden, workers):
    if workers <= 1 or len(faults) < 2 * workers:
        return worker(netlist, faults, patterns, obs, golden)
    chunks = _split(faults, workers)
    results = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, netlist, c, patterns, obs, golden)
                   for c in chunks]
        for fut in futures:   # submission order keeps the merge deterministic
            results.extend(fut.result())
    return results


def _split(items, n):
    size = (len(items) + n - 1) // n
    return [items[i:i + size] for i in range(0, len(items), size)]


# -- bit-parallel production path --------------------------------------------

class _Compiled:
    """Netlist lowered to integer-indexed ops for bit-plane evaluation."""

    def __init__(self, netlist):
        if netlist.flops:
            raise SimulationError("bit-parallel path requires a combinational netlist")
        self.netlist = netlist
        self.index = {n: i for i, n in enumerate(netlist.nets)}
        self.n_nets = len(netlist.nets)
        self.pi = [self.index[n] for n in netlist.primary_inputs]
        self.ops = []
        for g in netlist.topo_gates:
            self.ops.append((g.kind, self.index[g.output],
                             tuple(self.index[i] for i in g.inputs)))
        self.obs = [self.index[n] for n in observation_nets(netlist)]

    def eval_planes(self, pi_planes, mask, fault=None):
        """Evaluate one chunk; planes are ints, bit t = pattern t."""
        v = [0] * self.n_nets
        for idx, plane in zip(self.pi, pi_planes):
            v[idx] = plane
        f_net = f_gate = f_pin = None
        f_val = 0
        if fault is not None:
            f_net = self.index[fault.net]
            f_val = mask if fault.kind == "SA1" else 0
            if fault.pin is not None:
                f_gate = self.index[fault.gate]
                f_pin = fault.pin
            else:
                # stem fault forces the net plane everywhere it is read;
                # gate-output stems are re-forced after their driver evaluates
                v[f_net] = f_val
        for kind, out, ins in self.ops:
            planes = [v[i] for i in ins]
            if f_gate == out:
                planes[f_pin] = f_val
            if kind == "AND" or kind == "NAND":
                r = mask
                for p in planes:
                    r &= p
                if kind == "NAND":
                    r ^= mask
            elif kind == "OR" or kind == "NOR":
                r = 0
                for p in planes:
                    r |= p
                if kind == "NOR":
                    r ^= mask
            elif kind == "XOR" or kind == "XNOR":
                r = 0
                for p in planes:
                    r ^= p
                if kind == "XNOR":
                    r ^= mask
            elif kind == "NOT":
                r = planes[0] ^ mask
            else:  # BUF
                r = planes[0]
            if f_gate is None and f_net == out:
                r = f_val
            v[out] = r
        return v


def _pack_chunks(netlist, patterns):
    """Pattern list -> list of (pi_planes, mask, base_index) chunks."""
    chunks = []
    for base in range(0, len(patterns), WORD_WIDTH):
        part = patterns[base:base + WORD_WIDTH]
        mask = (1 << len(part)) - 1
        planes = []
        for col in range(len(netlist.primary_inputs)):
            plane = 0
            for t, p in enumerate(part):
                plane |= (p[col] & 1) << t
            planes.append(plane)
        chunks.append((planes, mask, base))
    return chunks


def _parallel_detect(comp, chunks, golden, fault, early_exit=True):
    """First detection index (and per-chunk diff masks if not early_exit)."""
    first = None
    diffs = []
    for (planes, mask, base), gold in zip(chunks, golden):
        v = comp.eval_planes(planes, mask, fault)
        diff = 0
        for idx, g in zip(comp.obs, gold):
            diff |= v[idx] ^ g
        diffs.append(diff)
        if diff and first is None:
            first = base + (diff & -diff).bit_length() - 1
            if early_exit:
                return first, diffs
    return first, diffs


def _parallel_worker(netlist, faults, patterns, obs, golden_chunks):
    comp = _Compiled(netlist)
    chunks = _pack_chunks(netlist, patterns)
    return [_parallel_detect(comp, chunks, golden_chunks, f)[0] for f in faults]


def parallel_fault_sim(netlist, universe, patterns, workers=1):
    """Bit-parallel stuck-at simulation, 64 patterns per word.

    Combinational circuits only; sequential netlists fall back to the serial
    path. The report is bit-identical to :func:`serial_fault_sim`.
    """
    patterns = [tuple(p) for p in patterns]
    if not patterns:
        raise SimulationError("no patterns")
    for f in universe.faults:
        if f.kind not in SA_KINDS:
            raise SimulationError("parallel_fault_sim handles stuck-at faults only")
    if netlist.flops:
        return serial_fault_sim(netlist, universe, patterns, workers=workers)
    comp = _Compiled(netlist)
    chunks = _pack_chunks(netlist, patterns)
    golden = [[v[i] for i in comp.obs]
              for v in (comp.eval_planes(p, m) for p, m, _ in chunks)]
    firsts = _map_faults(_parallel_worker, netlist, universe.faults, patterns,
                         None, golden, workers)
    return CoverageReport(len(patterns), universe.faults, tuple(firsts),
                          _assign_blocks(netlist, universe.faults))


# -- transition-delay faults --------------------------------------------------

def _net_values_per_pattern(netlist, patterns):
    """Fault-free value of every net at every pattern (list of dicts)."""
    return [dict(st.values) for st in circuit.run_patterns(netlist, patterns)]


def _sa_detection_vector(netlist, patterns, fault):
    """Full per-pattern detection vector for a stem stuck-at fault."""
    obs = observation_nets(netlist)
    if not netlist.flops:
        comp = _Compiled(netlist)
        chunks = _pack_chunks(netlist, patterns)
        golden = [[v[i] for i in comp.obs]
                  for v in (comp.eval_planes(p, m) for p, m, _ in chunks)]
        _, diffs = _parallel_detect(comp, chunks, golden, fault, early_exit=False)
        vec = []
        for (_, mask, base), d in zip(chunks, diffs):
            width = mask.bit_length()
            vec.extend(bool((d >> t) & 1) for t in range(width))
        return vec
    golden = _serial_outputs(netlist, patterns, obs)
    _, vec = _serial_detect(netlist, patterns, obs, golden, fault,
                            early_exit=False)
    return vec


def _tdf_first_parallel(comp, chunks, golden, capmask, sa_fault):
    """First capture index where the launch condition meets observability.

    Faulty chunks are evaluated lazily: chunks with no capture bit are
    skipped entirely.
    """
    for (planes, mask, base), gold in zip(chunks, golden):
        caps = (capmask >> base) & mask
        if not caps:
            continue
        v = comp.eval_planes(planes, mask, sa_fault)
        diff = 0
        for idx, g in zip(comp.obs, gold):
            diff |= v[idx] ^ g
        hit = diff & caps
        if hit:
            return base + (hit & -hit).bit_length() - 1
    return None


def tdf_sim(netlist, universe, patterns, workers=1):
    """Launch-on-capture transition-delay fault simulation.

    A slow-to-rise fault at net n is detected by the consecutive pair
    (p_i, p_i+1) iff the fault-free run drives n 0 -> 1 across the pair and
    n stuck-at-0 is observable at an output under p_i+1 (dual for
    slow-to-fall). First detection is recorded at the capture pattern.
    """
    patterns = [tuple(p) for p in patterns]
    if len(patterns) < 2:
        raise SimulationError("transition fault simulation needs >= 2 patterns")
    faults = universe.faults
    for f in faults:
        if f.kind not in TDF_KINDS:
            raise SimulationError("tdf_sim handles transition faults only")
    total = len(patterns)
    full = (1 << total) - 1
    if not netlist.flops:
        comp = _Compiled(netlist)
        chunks = _pack_chunks(netlist, patterns)
        clean = [comp.eval_planes(p, m) for p, m, _ in chunks]
        golden = [[v[i] for i in comp.obs] for v in clean]
        # fault-free value of every net across all patterns, one int per net
        value = {}
        for net in netlist.nets:
            idx = comp.index[net]
            plane = 0
            for v, (_, _, base) in zip(clean, chunks):
                plane |= v[idx] << base
            value[net] = plane
    else:
        chunks = comp = clean = golden = None
        per_pattern = _net_values_per_pattern(netlist, patterns)
        value = {net: sum(per_pattern[t][net] << t for t in range(total))
                 for net in netlist.nets}
    firsts = []
    obsvec_cache = {}
    for f in faults:
        v = value[f.net]
        if f.kind == "STR":
            capmask = (~v << 1) & v & full & ~1
            sa = FaultDescriptor(f.net, "SA0")
        else:
            capmask = (v << 1) & ~v & full & ~1
            sa = FaultDescriptor(f.net, "SA1")
        if not capmask:
            firsts.append(None)
            continue
        if comp is not None:
            firsts.append(_tdf_first_parallel(comp, chunks, golden, capmask, sa))
        else:
            if sa not in obsvec_cache:
                obsvec_cache[sa] = _sa_detection_vector(netlist, patterns, sa)
            obsvec = obsvec_cache[sa]
            first = None
            for cap in range(1, total):
                if (capmask >> cap) & 1 and obsvec[cap]:
                    first = cap
                    break
            firsts.append(first)
    return CoverageReport(len(patterns), faults, tuple(firsts),
                          _assign_blocks(netlist, faults))
