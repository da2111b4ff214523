import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.pauli import (
    CliffordAction, DimensionError, PauliOperator, StabilizerState, bell_pair_status,
    clifford_conjugate, conjugate_gate, is_bell_pair, pauli_mul, tableau_apply,
    tableau_measure_z,
)
from dense import gate_matrix, measure_dense, pauli_matrix, projector_from_stabilizers

ONE_Q = ["I", "X", "Y", "Z", "H", "S", "SDG"]
TWO_Q = ["CNOT", "CZ", "SWAP"]


def paulis(n):
    return st.builds(lambda x, z, k: PauliOperator(n, x, z, k),
                     st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.integers(0, 3))


def gates(n):
    one = st.tuples(st.sampled_from(ONE_Q), st.integers(0, n - 1).map(lambda q: (q,)))
    two = st.tuples(st.sampled_from(TWO_Q), st.permutations(range(n)).map(lambda p: tuple(p[:2])))
    return st.one_of(one, two)


def test_mul_examples():
    x = PauliOperator.from_string("XI")
    z = PauliOperator.from_string("ZI")
    assert str(x * z) == "-iYI"
    assert x * PauliOperator.identity(2) == x
    with pytest.raises(DimensionError):
        pauli_mul(x, PauliOperator.identity(3))


def test_single_qubit_products_brute_force():
    for a, b in itertools.product(range(16), repeat=2):
        pa = PauliOperator(1, a & 1, (a >> 1) & 1, a >> 2)
        pb = PauliOperator(1, b & 1, (b >> 1) & 1, b >> 2)
        np.testing.assert_allclose(pauli_matrix(pa * pb), pauli_matrix(pa) @ pauli_matrix(pb), atol=1e-12)
    for a in range(16):
        p = PauliOperator(1, a & 1, (a >> 1) & 1, a >> 2)
        sq = p * p
        assert sq.x == 0 and sq.z == 0


@settings(max_examples=60, deadline=None)
@given(paulis(3), paulis(3))
def test_product_matches_dense(a, b):
    np.testing.assert_allclose(pauli_matrix(a * b), pauli_matrix(a) @ pauli_matrix(b), atol=1e-12)


@pytest.mark.parametrize("g", ONE_Q + TWO_Q)
def test_gate_conjugation_matches_dense(g):
    n = 2
    qs = (0,) if g in ONE_Q else (0, 1)
    U = gate_matrix(n, g, qs)
    for a in range(4 ** n * 4):
        p = PauliOperator(n, a & 3, (a >> 2) & 3, a >> 4)
        want = U @ pauli_matrix(p) @ U.conj().T
        np.testing.assert_allclose(pauli_matrix(conjugate_gate(g, qs, p)), want, atol=1e-12)


def test_conjugation_examples():
    assert str(conjugate_gate("H", (0,), PauliOperator.from_string("X"))) == "+Z"
    assert str(conjugate_gate("CNOT", (0, 1), PauliOperator.from_string("XI"))) == "+XX"


@settings(max_examples=40, deadline=None)
@given(st.lists(gates(3), min_size=1, max_size=6), paulis(3), paulis(3))
def test_clifford_action_properties(gs, p, q):
    act = CliffordAction.from_gates(3, gs)
    assert act.is_symplectic()
    step = p
    for g, qs in gs:
        step = conjugate_gate(g, qs, step)
    assert clifford_conjugate(act, p) == step
    assert act.conjugate(p).commutes(act.conjugate(q)) == p.commutes(q)
    inv = act.inverse()
    assert inv.conjugate(act.conjugate(p)) == p
    # symplectic matrix is the GF(2) product of the gate matrices
    m = np.eye(6, dtype=np.int64)
    for g, qs in gs:
        m = (m @ CliffordAction.from_gates(3, [(g, qs)]).symplectic_matrix()) % 2
    np.testing.assert_array_equal(m, act.symplectic_matrix())


def test_tableau_examples():
    s = StabilizerState(1)
    tableau_apply(s, "H", [0])
    assert [str(g) for g in s.stabilizers()] == ["+X"]
    s = StabilizerState(2)
    tableau_apply(s, "H", [0])
    tableau_apply(s, "CNOT", [0, 1])
    assert is_bell_pair(s, 0, 1)
    s2 = s.copy()
    s2.apply_pauli(PauliOperator.from_string("XI"))
    assert not is_bell_pair(s2, 0, 1)
    assert bell_pair_status(s2, 0, 1) == "wrong-sign"
    s2.apply_pauli(PauliOperator.from_string("XI"))
    assert is_bell_pair(s2, 0, 1)
    assert not is_bell_pair(StabilizerState(2), 0, 1)
    with pytest.raises(IndexError):
        tableau_apply(StabilizerState(2), "H", [2])


def test_measurement_examples():
    rng = np.random.default_rng(1)
    s = StabilizerState(3)
    assert tableau_measure_z(s, 1, rng)[0] == 0
    s = StabilizerState(2)
    s.h(0)
    s.cnot(0, 1)
    assert not s.is_deterministic(0)
    b, _ = tableau_measure_z(s, 0, rng)
    assert s.is_deterministic(1)
    assert tableau_measure_z(s, 1, rng)[0] == b
    assert tableau_measure_z(s, 0, rng)[0] == b


def test_mixed_reduced_state():
    s = StabilizerState(3)
    s.h(0)
    s.cnot(0, 1)
    s.cnot(1, 2)
    assert bell_pair_status(s, 0, 1) == "mixed"
    from artifact.pauli import EntangledWithEnvironment
    with pytest.raises(EntangledWithEnvironment):
        is_bell_pair(s, 0, 1, strict=True)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(gates(4), st.tuples(st.just("M"), st.integers(0, 3).map(lambda q: (q,)))),
                min_size=1, max_size=20),
       st.integers(0, 2 ** 20))
def test_tableau_matches_dense(ops, branch_seed):
    n = 4
    s = StabilizerState(n)
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    rng = np.random.default_rng(branch_seed)
    for g, qs in ops:
        if g == "M":
            det = s.is_deterministic(qs[0])
            bit, rand, _ = s.measure_z(qs[0], rng)
            psi, prob = measure_dense(psi, n, qs[0], bit)
            assert psi is not None
            assert abs(prob - (0.5 if rand else 1.0)) < 1e-9
            assert rand != det
        else:
            s.apply_gate(g, qs)
            psi = gate_matrix(n, g, qs) @ psi
    P = projector_from_stabilizers(s.stabilizers())
    np.testing.assert_allclose(P, np.outer(psi, psi.conj()), atol=1e-9)
    # canonical form is a function of the state only
    assert s.canonical() == s.copy().canonical()


def test_canonical_form_state_equality():
    a = StabilizerState(2)
    a.h(0)
    a.cnot(0, 1)
    b = StabilizerState(2)
    b.h(1)
    b.cnot(1, 0)
    assert a.canonical() == b.canonical()
    b.pauli_z(0)
    assert a.canonical() != b.canonical()
