import itertools
import random

import pytest

from corebist import circuit, fixture_path


@pytest.fixture
def and2():
    return circuit.load_netlist(fixture_path("and2.bench"))


@pytest.fixture
def mini10():
    return circuit.load_netlist(fixture_path("mini10.bench"))


@pytest.fixture
def seventeen():
    return circuit.load_netlist(fixture_path("seventeen.bench"))


@pytest.fixture
def seqmini():
    return circuit.load_netlist(fixture_path("seqmini.bench"))


def exhaustive_patterns(netlist):
    return [tuple(p) for p in
            itertools.product([0, 1], repeat=len(netlist.primary_inputs))]


def random_combinational(rng, n_in=4, n_gates=10, name="rand"):
    """Random combinational netlist builder shared by property tests."""
    kinds2 = ["AND", "NAND", "OR", "NOR", "XOR", "XNOR"]
    nets = [f"i{k}" for k in range(n_in)]
    lines = [f"INPUT({n})" for n in nets]
    for k in range(n_gates):
        out = f"g{k}"
        if rng.random() < 0.15:
            kind = rng.choice(["NOT", "BUF"])
            fanin = [rng.choice(nets)]
        else:
            kind = rng.choice(kinds2)
            fanin = rng.sample(nets, min(rng.choice([2, 2, 3]), len(nets)))
        lines.append(f"{out} = {kind}({', '.join(fanin)})")
        nets.append(out)
    n_out = max(1, n_gates // 4)
    for j, net in enumerate(nets[-n_out:]):
        lines.append(f"OUTPUT({net})")
    return circuit.parse_netlist("\n".join(lines), name=name)


def random_patterns(rng, netlist, count):
    return [tuple(rng.randint(0, 1) for _ in netlist.primary_inputs)
            for _ in range(count)]
