import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.circuit import CircuitBuilder, gate, identity_circuit, meas, prep
from artifact.noise import FaultPattern, NoiseSpec
from artifact.protocol import ProtocolConfig, build_c_bell, build_c_prep
from artifact.sim import (
    BranchCapExceeded, branch_distribution, branch_oracle, fault_sweep, reduced_canonical, run, run_protocol_trial,
    run_trials, trial_faults,
)
from randcirc import random_circuit, random_faults


def test_bell_prep_with_an_x_fault():
    c = build_c_prep()
    res = run(c, FaultPattern({(2, 1): "X"}))
    assert sorted(str(p) for p in res.state.stabilizers()) == ["+XX", "-ZZ"]


def fresh_teleport_chain(steps):
    """Bare teleportation (no corrections) onto a new qubit pair at every step."""
    n = 2 * steps + 1
    b = CircuitBuilder(n, (0,), (n - 1,))
    cur = 0
    for k in range(steps):
        a, o = 2 * k + 1, 2 * k + 2
        b.layer([prep(a), prep(o)])
        b.layer([gate("H", a)])
        b.layer([gate("CNOT", a, o)])
        b.layer([gate("CNOT", cur, a)])
        b.layer([gate("H", cur)])
        b.layer([meas(cur, b.new_bit()), meas(a, b.new_bit())])
        cur = o
    return b.build()


def test_streaming_matches_flat_on_a_long_chain():
    c = fresh_teleport_chain(200)
    flat = run(c, choi=True, forced={})
    stream = run(c, choi=True, forced={}, streaming=True)
    assert stream.peak_live <= 5 < flat.peak_live == c.n
    assert np.array_equal(flat.record.bits, stream.record.bits)
    assert reduced_canonical(flat, c) == reduced_canonical(stream, c)
    f = FaultPattern({(3, 0): "Z", (600, 2 * 100 + 2): "X"})
    a = run(c, f, choi=True, forced={})
    b = run(c, f, choi=True, forced={}, streaming=True)
    assert np.array_equal(a.record.bits, b.record.bits)


def test_identical_circuits_and_hh():
    b = CircuitBuilder(1, (0,), (0,))
    b.layer([gate("H", 0)])
    b.layer([gate("H", 0)])
    hh = b.build()
    assert branch_oracle(hh, identity_circuit(1, 2))
    b = CircuitBuilder(1, (0,), (0,))
    b.layer([gate("H", 0)])
    v = branch_oracle(b.build(), identity_circuit(1))
    assert not v and "differ" in v.detail


def test_arity_mismatch():
    assert not branch_oracle(identity_circuit(2), identity_circuit(1))


def test_branch_cap():
    c = fresh_teleport_chain(6)
    gens, dist = branch_distribution(c)
    assert sum(dist.values()) == 1
    with pytest.raises(BranchCapExceeded):
        branch_distribution(c, cap=8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_frames_agree_with_the_tableau(seed):
    """Faults injected into Pauli frames reach the same output states as the
    tableau run with the faults applied directly."""
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n=3, depth=6)
    cases = [random_faults(rng, c) for _ in range(4)]
    res = fault_sweep(c, cases, 32, rng)
    for i, f in enumerate(cases):
        gens, dist = branch_distribution(c, f)
        assert gens == res.generators
        seen = {bytes(np.packbits(res.signs[i, b])) for b in range(res.signs.shape[1])}
        if res.signs.shape[2] == 0:
            continue
        assert seen <= set(dist)


def _art(R=4):
    return build_c_bell(ProtocolConfig(R=R))


def test_zero_noise_always_succeeds():
    res = run_trials(_art(), NoiseSpec(), 3, 0, 200)
    assert all(r.success and r.faults == 0 for r in res)


def test_replay_reproduces_a_trial():
    art = _art()
    cfg = ProtocolConfig(R=4, noise=NoiseSpec.depolarizing(0.05), seed=11)
    for i in (0, 5, 77):
        f = trial_faults(cfg, art, i)
        a = run_protocol_trial(cfg, art, i)
        b = run_protocol_trial(cfg, art, i, f)
        assert a == b
        assert a.faults == len(f)


def test_batching_does_not_change_trials():
    art = _art()
    spec = NoiseSpec.depolarizing(0.02)
    whole = run_trials(art, spec, 4, 0, 200)
    parts = run_trials(art, spec, 4, 0, 64) + run_trials(art, spec, 4, 64, 70) + run_trials(art, spec, 4, 134, 66)
    assert whole == parts


def test_full_depolarization_scrambles_the_pair():
    res = run_trials(_art(), NoiseSpec.depolarizing(1.0), 0, 0, 2000)
    rate = np.mean([r.success for r in res])
    assert rate < 0.25 + 3 * np.sqrt(0.25 * 0.75 / 2000)


def test_failures_grow_with_noise():
    art = _art()
    rates = [np.mean([r.success for r in run_trials(art, NoiseSpec.depolarizing(p), 1, 0, 1000)])
             for p in (0.0, 0.01, 0.1)]
    assert rates[0] == 1.0 and rates[0] > rates[1] > rates[2]
