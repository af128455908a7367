"""Gate-level netlist model: bench-format parser, logic evaluation, toggle activity.

The textual format is ISCAS-89 flavored:

    # comment
    INPUT(a)
    OUTPUT(y)
    y = AND(a, b)
    q = DFF(d)
    #@block NAME in: a,b out: y

Identifiers are case-sensitive ``[A-Za-z_][A-Za-z0-9_]*``. Block pragmas list
ports LSB-first. DFFs initialize to 0 unless the pragma ``#@init q 1`` is
given.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import NetlistError, SimulationError

GATE_KINDS = ("AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF")
_UNARY = ("NOT", "BUF")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Gate:
    kind: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise NetlistError(f"unknown gate kind {self.kind!r}")
        if self.kind in _UNARY and len(self.inputs) != 1:
            raise NetlistError(f"{self.kind} takes exactly 1 input")
        if self.kind not in _UNARY and len(self.inputs) < 1:
            raise NetlistError(f"{self.kind} needs at least 1 input")


@dataclass(frozen=True)
class Flop:
    d: str
    q: str
    init: int = 0


@dataclass(frozen=True)
class Block:
    name: str
    input_port: tuple   # net names, LSB-first
    output_port: tuple


class Netlist:
    """Validated, immutable gate-level circuit.

    Construction checks the structural invariants: every net has exactly one
    driver, fan-ins reference declared nets, port lists are duplicate-free,
    and the combinational part is acyclic.
    """

    def __init__(self, name, primary_inputs, primary_outputs, gates,
                 flops=(), blocks=()):
        self.name = name
        self.primary_inputs = tuple(primary_inputs)
        self.primary_outputs = tuple(primary_outputs)
        self.gates = tuple(gates)
        self.flops = tuple(flops)
        self.blocks = tuple(blocks)
        self._validate()
        self.nets = self._collect_nets()
        self.topo_gates = self._toposort()
        # index of the driving gate per net, for fault injection
        self.driver = {g.output: g for g in self.gates}

    # -- structure ---------------------------------------------------------

    def _collect_nets(self):
        seen = []
        have = set()
        for n in self.primary_inputs:
            seen.append(n)
            have.add(n)
        for f in self.flops:
            if f.q not in have:
                seen.append(f.q)
                have.add(f.q)
        for g in self.gates:
            if g.output not in have:
                seen.append(g.output)
                have.add(g.output)
        return tuple(seen)

    def _validate(self):
        drivers = {}
        for n in self.primary_inputs:
            if n in drivers:
                raise NetlistError(f"duplicate primary input {n!r}")
            drivers[n] = "input"
        if len(set(self.primary_outputs)) != len(self.primary_outputs):
            raise NetlistError("duplicate primary output")
        for f in self.flops:
            if f.q in drivers:
                raise NetlistError(f"multiply-driven net {f.q!r}")
            drivers[f.q] = "flop"
        for g in self.gates:
            if g.output in drivers:
                raise NetlistError(f"multiply-driven net {g.output!r}")
            drivers[g.output] = "gate"
        declared = set(drivers)
        for g in self.gates:
            for i in g.inputs:
                if i not in declared:
                    raise NetlistError(f"undriven net {i!r}")
        for f in self.flops:
            if f.d not in declared:
                raise NetlistError(f"undriven net {f.d!r} (flop {f.q!r})")
        for n in self.primary_outputs:
            if n not in declared:
                raise NetlistError(f"undriven net {n!r} (primary output)")
        for b in self.blocks:
            for port in (b.input_port, b.output_port):
                if len(set(port)) != len(port):
                    raise NetlistError(f"duplicate net in port of block {b.name!r}")
                for n in port:
                    if n not in declared:
                        raise NetlistError(f"block {b.name!r} references unknown net {n!r}")

    def _toposort(self):
        # flop Q nets break cycles: they are sources like primary inputs
        order = []
        state = {}  # net -> 0 visiting, 1 done
        by_output = {g.output: g for g in self.gates}

        for root in self.gates:
            stack = [(root, iter(root.inputs))]
            if state.get(root.output) == 1:
                continue
            state[root.output] = 0
            while stack:
                gate, it = stack[-1]
                advanced = False
                for net in it:
                    dep = by_output.get(net)
                    if dep is None:
                        continue
                    st = state.get(dep.output)
                    if st == 0:
                        raise NetlistError(f"combinational loop through net {dep.output!r}")
                    if st is None:
                        state[dep.output] = 0
                        stack.append((dep, iter(dep.inputs)))
                        advanced = True
                        break
                if not advanced:
                    state[gate.output] = 1
                    order.append(gate)
                    stack.pop()
        return tuple(order)

    # -- serialization -----------------------------------------------------

    def to_bench(self):
        lines = [f"# {self.name}"]
        for b in self.blocks:
            lines.append(f"#@block {b.name} in: {','.join(b.input_port)} "
                         f"out: {','.join(b.output_port)}")
        for f in self.flops:
            if f.init:
                lines.append(f"#@init {f.q} 1")
        for n in self.primary_inputs:
            lines.append(f"INPUT({n})")
        for n in self.primary_outputs:
            lines.append(f"OUTPUT({n})")
        for f in self.flops:
            lines.append(f"{f.q} = DFF({f.d})")
        for g in self.gates:
            lines.append(f"{g.output} = {g.kind}({', '.join(g.inputs)})")
        return "\n".join(lines) + "\n"


class LogicState:
    """Per-net values in {0, 1}, X (None) only before initialization."""

    def __init__(self, values=None):
        self.values = dict(values) if values else {}

    def copy(self):
        return LogicState(self.values)

    def __getitem__(self, net):
        return self.values.get(net)

    def __eq__(self, other):
        return isinstance(other, LogicState) and self.values == other.values


def initial_state(netlist):
    """Reset state: flops at their declared init values, all else X."""
    st = LogicState()
    for f in netlist.flops:
        st.values[f.q] = f.init
    return st


_EVAL = {
    "AND": lambda vs: int(all(vs)),
    "NAND": lambda vs: int(not all(vs)),
    "OR": lambda vs: int(any(vs)),
    "NOR": lambda vs: int(not any(vs)),
    "XOR": lambda vs: sum(vs) & 1,
    "XNOR": lambda vs: (sum(vs) & 1) ^ 1,
    "NOT": lambda vs: vs[0] ^ 1,
    "BUF": lambda vs: vs[0],
}


def evaluate(netlist, state, inputs, fault=None):
    """One clock cycle: settle combinational nets, then update flops once.

    ``inputs`` assigns every primary input (dict name -> bit, or a bit tuple
    aligned with ``netlist.primary_inputs``). Returns a new LogicState with
    all nets settled. ``fault`` optionally injects a stuck-at fault (see
    faultsim); this single scalar path is shared by golden and faulty runs.
    """
    if not isinstance(inputs, dict):
        if len(inputs) != len(netlist.primary_inputs):
            raise SimulationError("input vector width mismatch")
        inputs = dict(zip(netlist.primary_inputs, inputs))
    vals = {}
    for n in netlist.primary_inputs:
        if n not in inputs:
            raise SimulationError(f"unassigned primary input {n!r}")
        vals[n] = inputs[n] & 1
    for f in netlist.flops:
        q = state[f.q]
        if q is None:
            raise SimulationError(f"uninitialized flop {f.q!r}")
        vals[f.q] = q

    forced = None
    if fault is not None and fault.pin is None:
        forced = (fault.net, 1 if fault.kind == "SA1" else 0)
        if forced[0] in vals:
            vals[forced[0]] = forced[1]

    for g in netlist.topo_gates:
        ins = [vals[i] for i in g.inputs]
        if fault is not None and fault.pin is not None and fault.gate == g.output:
            ins[fault.pin] = 1 if fault.kind == "SA1" else 0
        v = _EVAL[g.kind](ins)
        if forced is not None and g.output == forced[0]:
            v = forced[1]
        vals[g.output] = v

    out = LogicState(vals)
    # combinational nets keep settled values; flop Q reflects the new edge
    for f in netlist.flops:
        out.values[f.q] = vals[f.d]
    return out


def run_patterns(netlist, patterns, fault=None):
    """Apply a pattern sequence from reset; yield the settled state per cycle.

    Note flop Q values in each yielded state are post-edge; the combinational
    nets are the pre-edge settled values for that pattern.
    """
    state = initial_state(netlist)
    forced = None
    if fault is not None and fault.pin is None:
        forced = (fault.net, 1 if fault.kind == "SA1" else 0)
    for p in patterns:
        prev_q = {f.q: state[f.q] for f in netlist.flops}
        if forced is not None and forced[0] in prev_q:
            prev_q[forced[0]] = forced[1]  # a stuck Q net stays stuck pre-edge
        nxt = evaluate(netlist, state, p, fault=fault)
        observed = nxt.copy()
        for q, v in prev_q.items():
            observed.values[q] = v  # what the combinational logic actually saw
        yield observed
        state = nxt


def toggle_activity(netlist, patterns):
    """Fraction of nets that changed value across consecutive patterns.

    The initial X -> value settle of the first pattern is excluded. Returns
    (fraction, per-net toggle counts).
    """
    patterns = list(patterns)
    if len(patterns) < 2:
        raise SimulationError("toggle activity needs at least 2 patterns")
    counts = {n: 0 for n in netlist.nets}
    prev = None
    for st in run_patterns(netlist, patterns):
        if prev is not None:
            for n in netlist.nets:
                if st[n] != prev[n]:
                    counts[n] += 1
        prev = st
    toggled = sum(1 for c in counts.values() if c > 0)
    return toggled / len(netlist.nets), counts


# -- parser ----------------------------------------------------------------

_BLOCK_RE = re.compile(r"#@block\s+(\w+)\s+in:\s*([\w,\s]*?)\s*out:\s*([\w,\s]*?)\s*$")
_INIT_RE = re.compile(r"#@init\s+(\w+)\s+([01])\s*$")
_PORT_RE = re.compile(r"(INPUT|OUTPUT)\s*\(\s*(\S+?)\s*\)\s*$")
_ASSIGN_RE = re.compile(r"(\S+)\s*=\s*(\w+)\s*\(\s*(.*?)\s*\)\s*$")


def _check_ident(name, lineno):
    if not _IDENT.match(name):
        raise NetlistError(f"bad identifier {name!r}", line=lineno)


def parse_netlist(text, name="netlist"):
    """Parse bench-format text into a validated Netlist."""
    inputs, outputs, gates, flops, blocks = [], [], [], [], []
    inits = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _BLOCK_RE.match(line)
            if m:
                bname, ins, outs = m.groups()
                blocks.append(Block(
                    bname,
                    tuple(s.strip() for s in ins.split(",") if s.strip()),
                    tuple(s.strip() for s in outs.split(",") if s.strip()),
                ))
                continue
            m = _INIT_RE.match(line)
            if m:
                inits[m.group(1)] = int(m.group(2))
            continue
        m = _PORT_RE.match(line)
        if m:
            kind, net = m.groups()
            _check_ident(net, lineno)
            (inputs if kind == "INPUT" else outputs).append(net)
            continue
        m = _ASSIGN_RE.match(line)
        if m:
            out, kind, args = m.groups()
            _check_ident(out, lineno)
            fanin = tuple(s.strip() for s in args.split(",") if s.strip())
            for a in fanin:
                _check_ident(a, lineno)
            if kind == "DFF":
                if len(fanin) != 1:
                    raise NetlistError("DFF takes exactly 1 input", line=lineno)
                flops.append(Flop(fanin[0], out))
                continue
            if kind not in GATE_KINDS:
                raise NetlistError(f"unknown gate kind {kind!r}", line=lineno)
            try:
                gates.append(Gate(kind, fanin, out))
            except NetlistError as e:
                raise NetlistError(str(e), line=lineno) from None
            continue
        raise NetlistError(f"syntax error: {raw.strip()!r}", line=lineno,
                           column=len(raw) - len(raw.lstrip()) + 1)
    if inits:
        flops = [Flop(f.d, f.q, inits.get(f.q, 0)) for f in flops]
    return Netlist(name, inputs, outputs, gates, flops, blocks)


def load_netlist(path):
    with open(path) as fh:
        text = fh.read()
    import os
    return parse_netlist(text, name=os.path.splitext(os.path.basename(path))[0])
