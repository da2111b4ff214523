import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.circuit import CircuitBuilder, Linear, Lookup, Rectangle, cpauli, gate, identity_circuit, meas, prep
from artifact.noise import (
    FaultPattern, InvalidRectangle, NoiseSpec, NonUnitaryError, certificate_chain, clean_adaptive_rects,
    clean_unitary_rects, multiply, multiply_certificate, propagate_to_end, push_through, sample_noise,
    sample_wire_faults,
)
from artifact.sim import branch_oracle
from randcirc import random_circuit, random_faults


def test_fault_pattern_algebra():
    f = FaultPattern({(0, 0): "X", (1, 2): "Z"})
    assert multiply(f, FaultPattern()) == f
    assert multiply(FaultPattern({(0, 0): "X"}), FaultPattern({(0, 0): "X"})) == FaultPattern()
    assert multiply(FaultPattern({(0, 0): "X"}), FaultPattern({(0, 0): "Z"})) == FaultPattern({(0, 0): "Y"})
    assert FaultPattern([((0, 0), "X"), ((0, 0), "X")]) == FaultPattern()
    with pytest.raises(ValueError):
        FaultPattern({(0, 0): "Q"})


def test_fault_pattern_text_round_trip():
    f = FaultPattern({(3, 1): "Y", (0, 4): "X"})
    assert FaultPattern.from_text(f.to_text()) == f
    with pytest.raises(ValueError):
        FaultPattern.from_text("oops t=1\n")


def test_check_within():
    c = identity_circuit(2, 3)
    FaultPattern({(2, 1): "X"}).check_within(c)
    with pytest.raises(ValueError):
        FaultPattern({(3, 0): "X"}).check_within(c)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("weird")
    with pytest.raises(ValueError):
        NoiseSpec("iid_z", p=1.5)
    assert NoiseSpec().is_zero and NoiseSpec.depolarizing(0.0).is_zero


def test_sampler_extremes():
    rng = np.random.default_rng(0)
    c = identity_circuit(3, 1)
    for _ in range(50):
        assert len(sample_noise(c, NoiseSpec.depolarizing(0.0), rng)) == 0
    f = sample_noise(c, NoiseSpec.depolarizing(1.0), rng)
    assert f.support == {(0, 0), (0, 1), (0, 2)}


def test_pair_statistics():
    c = identity_circuit(2, 1)
    rng = np.random.default_rng(1)
    n, p = 100_000, 0.1
    both = 0
    for _ in range(n):
        idx, _ = sample_wire_faults(c, NoiseSpec.depolarizing(p), rng)
        both += idx.size == 2
    sd = math.sqrt(p * p * (1 - p * p) / n)
    assert abs(both / n - p * p) < 3 * sd


def test_letter_laws():
    c = identity_circuit(100, 100)
    rng = np.random.default_rng(2)
    _, let = sample_wire_faults(c, NoiseSpec("iid_z", p=0.2), rng)
    assert set(let.tolist()) == {3}
    _, let = sample_wire_faults(c, NoiseSpec.depolarizing(0.3), rng)
    frac = np.bincount(let, minlength=4)[1:] / let.size
    assert np.allclose(frac, 1 / 3, atol=0.02)
    # iid_xz: P(Y | fault) = px pz / (1 - (1-px)(1-pz))
    _, let = sample_wire_faults(c, NoiseSpec("iid_xz", p_x=0.2, p_z=0.2), rng)
    assert abs((let == 2).mean() - 0.04 / 0.36) < 0.02


def test_thermal_faults_follow_preparations():
    b = CircuitBuilder(3, (), (0, 1, 2))
    b.layer([prep(0), prep(1)])
    b.layer([prep(2), gate("H", 0)])
    c = b.build()
    f = sample_noise(c, NoiseSpec("thermal", p=1.0), np.random.default_rng(0))
    assert f == FaultPattern({(0, 0): "X", (0, 1): "X", (1, 2): "X"})


def test_certificates():
    assert certificate_chain([], 0.01).p == 0.01
    assert multiply_certificate([0.01, 0.01]).p == pytest.approx(0.2)
    assert certificate_chain([("inflation", {"m": 1})], 1e-4).p == pytest.approx(2 * math.sqrt(2) * 1e-4 ** 0.25)
    assert certificate_chain([("inflation", {"m": 1})], 1e-4).p == pytest.approx(0.2828, abs=1e-4)
    assert certificate_chain([("alternating_form", {})], 1e-4).p < 10 * 1e-4 ** (1 / 64) + 1e-12
    cert = certificate_chain([("inflation", {"m": 1}), ("propagation", {"D": 2})], 1e-8)
    assert [s[0] for s in cert.trace] == ["inflation", "propagation"]
    assert certificate_chain([("union", {"r": 2})], 0.9).p == 1.0
    with pytest.raises(KeyError):
        certificate_chain([("nope", {})], 0.1)


def test_propagate_examples():
    c = identity_circuit(1, 1)
    assert propagate_to_end(c, FaultPattern()) == FaultPattern()
    b = CircuitBuilder(1, (0,), (0,))
    b.layer([gate("X", 0)])
    b.layer([gate("H", 0)])
    c = b.build()
    assert propagate_to_end(c, FaultPattern({(0, 0): "X"})) == FaultPattern({(1, 0): "Z"})
    b = CircuitBuilder(1, (0,), ())
    b.layer([gate("H", 0)])
    b.layer([meas(0, b.new_bit())])
    with pytest.raises(NonUnitaryError):
        propagate_to_end(b.build(), FaultPattern())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_propagate_preserves_instrument(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n=4, depth=5, unitary=True, n_in=4)
    f = random_faults(rng, c, 3)
    g = propagate_to_end(c, f)
    assert all(t == c.depth - 1 for (t, _), _ in g.items())
    assert branch_oracle(c, c, f, g)


def test_unitary_cleaning():
    b = CircuitBuilder(2, (0, 1), (0, 1))
    b.layer([gate("H", 0)])
    b.layer([gate("CNOT", 0, 1)])
    b.layer([gate("S", 1)])
    c = b.build()
    r = Rectangle(frozenset({0, 1}), 0, 2)
    outside = FaultPattern({(2, 0): "X"})
    assert clean_unitary_rects(c, outside, [r]) == outside
    f = FaultPattern({(0, 0): "X"})
    g = clean_unitary_rects(c, f, [r])
    assert g == FaultPattern({(2, 0): "X", (2, 1): "Y"})
    # same as propagating through the sub-circuit of the rectangle's layers
    sub = CircuitBuilder(2, (0, 1), (0, 1))
    sub.layer([])
    sub.layer([gate("CNOT", 0, 1)])
    sub.layer([gate("S", 1)])
    assert propagate_to_end(sub.build(), FaultPattern({(0, 0): "X"})) == g
    assert branch_oracle(c, c, f, g)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unitary_cleaning_random(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n=4, depth=6, unitary=True, n_in=4)
    t = int(rng.integers(0, 3))
    omega = frozenset(range(4))
    r = Rectangle(omega, t, 3)
    f = random_faults(rng, c, 4)
    g = clean_unitary_rects(c, f, [r])
    assert not any(r.contains_wire(tt, q) for (tt, q), _ in g.items())
    assert branch_oracle(c, c, f, g)


def test_invalid_rectangles():
    b = CircuitBuilder(3, range(3), range(3))
    b.layer([gate("CNOT", 1, 2)])
    c = b.build()
    with pytest.raises(InvalidRectangle):
        clean_unitary_rects(c, FaultPattern(), [Rectangle(frozenset({0, 1}), -1, 1)])


def _adaptive():
    b = CircuitBuilder(2, (0, 1), (1,))
    bit = b.new_bit()
    b.layer([gate("H", 0)])
    b.layer([meas(0, bit)])
    b.layer([prep(0), cpauli(Linear((1,), (0,), (bit,)), [1])])
    b.outputs = (0, 1)
    return b.build()


def test_adaptive_cleaning_compensates_flipped_bits():
    c = _adaptive()
    r = Rectangle(frozenset({0, 1}), 0, 2, "adaptive")
    assert clean_adaptive_rects(c, FaultPattern(), [r]) == FaultPattern()
    f = FaultPattern({(0, 0): "X"})
    g = clean_adaptive_rects(c, f, [r])
    assert g == FaultPattern({(2, 1): "X"})
    assert branch_oracle(c, c, f, g)
    assert clean_adaptive_rects(c, FaultPattern({(0, 0): "Z"}), [r]) == FaultPattern()


def test_adaptive_cleaning_rejects_lookup():
    b = CircuitBuilder(2, (0, 1), (0, 1))
    bit = b.new_bit()
    b.layer([gate("H", 0)])
    b.layer([meas(0, bit)])
    b.layer([prep(0), cpauli(Lookup((0, 1), (bit,), 1), [1])])
    with pytest.raises(InvalidRectangle):
        clean_adaptive_rects(b.build(), FaultPattern(), [Rectangle(frozenset({0, 1}), 0, 2, "adaptive")])


def test_push_through_reports_flips():
    c = _adaptive()
    out, flips = push_through(c, FaultPattern({(0, 0): "Y"}), 0, 2, {0})
    assert flips == {0: 1}
    assert out == FaultPattern()
