import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.checks import PASS_NAMES, pass_instance, single_gate_circuit, teleport_branches
from artifact.circuit import (
    CircuitBuilder, InteractionGraph, Linear, Rectangle, cpauli, gate, meas, prep, validate_locality,
)
from artifact.noise import FaultPattern
from artifact.passes import (
    ActionMismatch, PassError, Routing, change_geometry, inflate, path_bilinear_routing, postpone_adaptive_paulis,
    run_pipeline, substitute_unitary, teleport_substitute, to_alternating_form, to_normal_form,
)
from artifact.sim import branch_oracle, reduced_canonical, run
from randcirc import random_circuit, random_faults

STATES = ("0", "1", "+", "-", "+i", "-i")


def one_layer(n, ops, ins=None):
    b = CircuitBuilder(n, range(n) if ins is None else ins, range(n))
    for L in ops:
        b.layer(L)
    return b.build()


# postponement

def test_postpone_without_adaptive_ops_is_identity():
    c = one_layer(2, [[gate("H", 0)], [gate("CNOT", 0, 1)]])
    assert postpone_adaptive_paulis(c).circuit is c


def test_postpone_moves_teleport_corrections_to_the_end():
    tc = teleport_substitute(single_gate_circuit("H")).circuit
    r = postpone_adaptive_paulis(tc)
    assert r.circuit.adaptive_layers() == [r.circuit.depth - 1]
    assert branch_oracle(r.circuit, tc)


def test_postpone_drops_correction_before_preparation():
    b = CircuitBuilder(2, (), (0, 1))
    bit = b.new_bit()
    b.layer([prep(0), prep(1)])
    b.layer([gate("H", 0)])
    b.layer([meas(0, bit)])
    b.layer([cpauli(Linear((1,), (0,), (bit,)), [1])])
    b.layer([prep(1), prep(0)])
    c = b.build()
    out = postpone_adaptive_paulis(c).circuit
    assert not any(o.kind == "cpauli" for L in out.layers for o in L)
    assert branch_oracle(out, c)


# inflation

def test_inflate_depths_and_fault_map():
    c = one_layer(1, [[gate("H", 0)], [gate("S", 0)], [gate("H", 0)]])
    assert inflate(c, 0).circuit == c
    r = inflate(c, 1)
    assert r.circuit.depth == 6
    # two X faults on the same qubit in wait layers cancel
    assert r.fault_map(FaultPattern({(0, 0): "X", (1, 0): "X"})) == FaultPattern()


# unitary substitution

def test_substitution_micro_moves():
    c = one_layer(1, [[], [gate("H", 0)]])
    rep = one_layer(1, [[gate("H", 0)], []])
    out = substitute_unitary(c, [(Rectangle(frozenset({0}), -1, 2), rep)])
    assert out.circuit.layers[0] == (gate("H", 0),)
    hh = one_layer(1, [[gate("H", 0)], [gate("H", 0)]])
    ii = one_layer(1, [[], []])
    assert substitute_unitary(hh, [(Rectangle(frozenset({0}), -1, 2), ii)]).circuit.depth == 2
    cx = one_layer(2, [[gate("CNOT", 0, 1)]])
    sw = one_layer(2, [[gate("SWAP", 0, 1)]])
    with pytest.raises(ActionMismatch):
        substitute_unitary(cx, [(Rectangle(frozenset({0, 1}), -1, 1), sw)])


# alternating and normal form

def test_alternating_form_structure():
    c = one_layer(2, [[gate("H", 0)], [gate("CNOT", 0, 1)], [gate("S", 1)]])
    out = to_alternating_form(c).circuit
    assert out.depth == 2 * c.depth
    assert all(not out.layers[t] for t in range(0, out.depth, 2))
    b = CircuitBuilder(3, (0, 1, 2), (1, 2))
    b.layer([meas(0, b.new_bit()), gate("CNOT", 1, 2)])
    mixed = b.build()
    r = to_alternating_form(mixed)
    assert [o.kind for o in r.circuit.layers[0]] == ["measz"]
    assert [o.gate for o in r.circuit.layers[1]] == ["CNOT"]
    assert branch_oracle(r.circuit, mixed)


def test_normal_form_depths():
    c = one_layer(4, [[gate("CNOT", 0, 1), gate("CNOT", 2, 3)]])
    assert to_normal_form(c, InteractionGraph.path(4)).circuit.depth == 3
    c = one_layer(4, [[gate("H", 0)], [gate("H", 1)]])
    assert to_normal_form(c, InteractionGraph.bilinear(4)).circuit.depth == 4 * 2
    with pytest.raises(PassError):
        to_normal_form(one_layer(3, [[gate("CNOT", 0, 2)]]), InteractionGraph.path(3))


# routing

def test_routing_permutations():
    assert path_bilinear_routing(2).swap_layers == ((), (((1, 2),),), ())
    rt = path_bilinear_routing(4)
    assert rt.swap_layers[1] == (((1, 2), (5, 6)),)
    assert rt.swap_layers[2] == (((3, 4),),)
    for r in (2, 4, 6):
        rt = path_bilinear_routing(r)
        rt.validate()
        for a, cls in enumerate(rt.classes):
            pi = rt.perm(a)
            assert all(rt.dst.has_edge(pi[u], pi[v]) for u, v in cls)
    with pytest.raises(PassError):
        path_bilinear_routing(3)


def test_identity_routing_adds_no_swaps():
    g = InteractionGraph.path(4)
    c = one_layer(4, [[gate("CNOT", 0, 1)], [gate("CNOT", 1, 2)]])
    out = change_geometry(c, Routing.identity(g, g)).circuit
    assert not any(o.gate == "SWAP" for L in out.layers for o in L)
    assert branch_oracle(out, c)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_geometry_change_bilinear_to_path(seed):
    rng = np.random.default_rng(seed)
    rt = path_bilinear_routing(4)
    c = random_circuit(rng, n=8, depth=3, graph=rt.src, unitary=True, n_in=8)
    out = change_geometry(c, rt).circuit
    assert validate_locality(out, rt.dst) == []
    assert branch_oracle(out, c)


# teleportation

def _outputs_agree(tc, c, labels):
    """Every outcome branch of tc on the product input ``labels`` gives c's output."""
    want = reduced_canonical(run(c, init=dict(zip(c.inputs, labels))), c)
    init = dict(zip(tc.inputs, labels))
    bits = range(tc.cbits)
    for outcome in itertools.product((0, 1), repeat=tc.cbits):
        res = run(tc, init=init, forced=dict(zip(bits, outcome)))
        if reduced_canonical(res, tc) != want:
            return False
    return True


@pytest.mark.parametrize("g", ["H", "S", "X"])
def test_teleported_single_qubit_gate_on_stabilizer_inputs(g):
    c = single_gate_circuit(g)
    tc = teleport_substitute(c).circuit
    assert tc.cbits == 2  # four outcome branches
    for s in STATES:
        assert _outputs_agree(tc, c, [s])


def test_teleported_cnot_branches():
    c = single_gate_circuit("CNOT")
    events, v = teleport_branches("CNOT")
    assert events == 4 and v
    tc = teleport_substitute(c).circuit
    for a, b in itertools.product(("0", "+", "+i"), repeat=2):
        assert _outputs_agree(tc, c, [a, b])


def test_teleported_identity():
    events, v = teleport_branches("I")
    assert events == 2 and v


def test_pipeline_rejects_unknown_pass():
    with pytest.raises(PassError):
        run_pipeline(single_gate_circuit("H"), [("nope", {})])


@pytest.mark.parametrize("name", PASS_NAMES)
def test_pass_fault_map_spot_check(name):
    rng = np.random.default_rng([7, PASS_NAMES.index(name)])
    for _ in range(10):
        new, old, fmap = pass_instance(name, rng)
        f = random_faults(rng, new) if new.depth and new.n else FaultPattern()
        assert branch_oracle(new, old)
        assert branch_oracle(new, old, f, fmap(f))
