import numpy as np
import pytest

from artifact import steane
from artifact.circuit import CircuitBuilder, compose, gate, identity_circuit, prep
from artifact.noise import FaultPattern
from artifact.pauli import PauliOperator, is_bell_pair
from artifact.protocol import build_c_prep
from artifact.sim import branch_oracle, fault_sweep, reduced_canonical, run
from artifact.steane import (
    BLOCK, N_CODE, build_c_ft, build_gadget, check_contract, concat_dec, concat_enc, data_qubits, enc_dec_circuits,
    gadget_metrics, level_simulate, steane_spec, transversal_ok,
)

STATES = ("0", "1", "+", "-", "+i", "-i")


def test_code_parameters():
    spec = steane_spec()
    assert (spec.n, spec.k, spec.d, spec.t) == (7, 1, 3, 1)
    syn = {spec.x_syndrome(1 << j) for j in range(N_CODE)}
    assert len(syn) == 7 and 0 not in syn
    lx = PauliOperator(7, spec.logical_x, 0)
    lz = PauliOperator(7, 0, spec.logical_z)
    assert all(lx.commutes(s) and lz.commutes(s) for s in spec.stabilizers())
    assert not lx.commutes(lz)


def test_transversal_gates():
    spec = steane_spec()
    for g in ("I", "X", "Y", "Z", "H", "S", "CNOT", "SWAP"):
        assert transversal_ok(spec, g), g
    assert steane.TRANSVERSAL["S"] == "SDG"
    # H exchanges logical X and Z
    H = steane.CliffordAction.from_gates(7, [("H", (j,)) for j in range(7)])
    lx = PauliOperator(7, spec.logical_x, 0)
    assert H.conjugate(lx).unsigned() == PauliOperator(7, 0, spec.logical_x)


def _round_trip(enc, dec):
    rt = compose(enc, dec, wiring=list(range(enc.n)))
    for s in STATES:
        a = run(rt, init={rt.inputs[0]: s})
        b = run(identity_circuit(1), init={0: s})
        assert reduced_canonical(a, rt) == reduced_canonical(b, identity_circuit(1)), s
    return rt


def test_enc_dec_round_trip_and_codespace():
    enc, dec = enc_dec_circuits()
    rt = _round_trip(enc, dec)
    spec = steane_spec()
    res = run(enc, init={enc.inputs[0]: "+"})
    D = data_qubits(0)
    for g in spec.stabilizers():
        px = np.zeros(res.state.n, bool)
        pz = np.zeros(res.state.n, bool)
        for j in range(N_CODE):
            px[res.slot[D[j]]] = (g.x >> j) & 1
            pz[res.slot[D[j]]] = (g.z >> j) & 1
        assert res.state.stabilizer_sign(px, pz) == 1
    for q in D:
        for p in "XYZ":
            assert branch_oracle(rt, identity_circuit(1), FaultPattern({(enc.depth - 1, q): p}))


def test_concatenated_round_trip_level_two():
    enc, dec = concat_enc(2), concat_dec(2)
    m = gadget_metrics()
    assert 7 ** 2 <= enc.n <= m.n_max ** 3
    _round_trip(enc, dec)


def test_gadget_metrics():
    m = gadget_metrics()
    assert (m.n_max, m.d_min, m.d_max) == (2 * BLOCK, 1, 81)
    ec = build_gadget("EC")
    assert ec.circuit.n == BLOCK and ec.circuit.depth == 81


def test_level_zero_is_identity_and_level_one_prep():
    c = build_c_prep()
    assert level_simulate(c, 0) == c
    b = CircuitBuilder(1, (), (0,))
    b.layer([prep(0)])
    one = level_simulate(b.build(), 1)
    assert one.n == BLOCK
    assert one.depth == build_gadget("Prep0-Ga").circuit.depth + build_gadget("EC").circuit.depth


@pytest.mark.parametrize("L", [1, 2])
def test_overhead_brackets(L):
    c = identity_circuit(1, 1)
    out = level_simulate(c, L)
    m = gadget_metrics()
    assert 7 ** L <= out.n / c.n <= m.n_max ** L
    assert out.depth >= m.d_min ** L


def test_noiseless_c_ft():
    ident = identity_circuit(1, 1)
    ft = build_c_ft(ident, 1)
    for s in STATES:
        a = run(ft, init={ft.inputs[0]: s})
        b = run(ident, init={0: s})
        assert reduced_canonical(a, ft) == reduced_canonical(b, ident)
    bell = build_c_ft(build_c_prep(), 1)
    res = run(bell)
    assert is_bell_pair(res.state, *res.output_slots(bell))


def test_single_faults_only_fail_in_the_fringe():
    ident = identity_circuit(1, 1)
    ft = build_c_ft(ident, 1)
    enc_d = concat_enc(1).depth
    body_d = level_simulate(ident, 1).depth
    cases = [FaultPattern({(t, q): p}) for t in range(ft.depth) for q in range(ft.n) for p in "XYZ"]
    res = fault_sweep(ft, [FaultPattern()] + cases, 4, np.random.default_rng(0))
    ok = res.case_ok()
    assert ok[0]
    bad_t = {next(iter(cases[i].support))[0] for i in np.flatnonzero(~ok[1:])}
    protected = range(enc_d, enc_d + body_d - 1)
    assert bad_t, "some fringe faults must be fatal: Enc and Dec are not protected"
    assert not bad_t & set(protected)
    frac = 1 - len(bad_t) / ft.depth
    print(f"fatal single faults confined to {len(bad_t)} fringe layers; protected layer fraction {frac:.3f}")


@pytest.mark.parametrize("role,g", [("EC", None), ("Prep0-Ga", None), ("Meas-Ga", None), ("Gate-Ga", "H"),
                                    ("Gate-Ga", "CNOT")])
def test_contracts(role, g):
    rep = check_contract(role, g, branches=2)
    assert rep.ok, rep.failures[:3]


@pytest.fixture
def fresh_gadgets():
    steane.build_gadget.cache_clear()
    steane._two_block_gate.cache_clear()
    yield
    steane.build_gadget.cache_clear()
    steane._two_block_gate.cache_clear()


def test_dropping_a_correction_entry_breaks_the_ec_contract(monkeypatch, fresh_gadgets):
    # a weight-1 residual is still tolerated by the contract, so drop a
    # weight-2 leak correction: zero syndrome, both ancilla cosets equal to 1
    orig = steane.correction_table
    entry = (1 << 3) | (1 << 7)

    def mutated(kind, data_measured, syn_known=True):
        t = list(orig(kind, data_measured, syn_known))
        if kind == "x" and data_measured:
            assert bin(t[entry]).count("1") == 2
            t[entry] = 0
        return tuple(t)
    monkeypatch.setattr(steane, "correction_table", mutated)
    rep = check_contract("EC", branches=2)
    assert not rep.ok
    assert any(isinstance(f, FaultPattern) for f in rep.failures)


def test_gate_gadget_without_faults_matches_the_gate():
    for g in ("X", "H", "S", "CNOT", "SWAP"):
        c, ideal, *_ = steane.contract_setup("Gate-Ga", g)
        assert branch_oracle(c, ideal), g


def test_unsupported_gadget():
    with pytest.raises(steane.UnsupportedGadget):
        build_gadget("Gate-Ga", "T")
    b = CircuitBuilder(1, (0,), (0,))
    b.layer([gate("H", 0)])
    assert level_simulate(b.build(), 1).n == BLOCK
