import math

import numpy as np
import pytest

from artifact.checks import single_gate_circuit
from artifact.circuit import InteractionGraph, locations, max_lifespan
from artifact.noise import FaultPattern, NoiseSpec
from artifact.passes import postpone_adaptive_paulis, teleport_substitute
from artifact.pauli import is_bell_pair
from artifact.protocol import (
    LIFESPAN_BOUND, ProtocolConfig, ThermalConfig, build_c_1d_res, build_c_bell, build_c_prep, identity_strip,
    structure_metrics, thermal_noise_strength, unfold,
)
from artifact.sim import branch_oracle, reduced_canonical, run, run_trials


def test_c_prep_is_a_bell_pair():
    c = build_c_prep()
    assert (c.n, c.depth, c.n_in) == (2, 3, 0)
    res = run(c)
    assert sorted(str(p) for p in res.state.stabilizers()) == ["+XX", "+ZZ"]
    assert is_bell_pair(res.state, *res.output_slots(c))


def test_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(R=2)
    with pytest.raises(ValueError):
        ProtocolConfig(L=-1)
    with pytest.raises(ValueError):
        ProtocolConfig(variant="torus")
    with pytest.raises(ValueError):
        ThermalConfig(0.0)


def test_thermal_strength():
    assert thermal_noise_strength(0.5) == pytest.approx((1 - math.tanh(0.5)) / 2)
    assert thermal_noise_strength(ThermalConfig(0.5)) == pytest.approx(0.2689, abs=1e-4)
    assert thermal_noise_strength(20.0) < 1e-15
    assert thermal_noise_strength(1e-9) == pytest.approx(0.5)


@pytest.mark.parametrize("R", [4, 8, 16])
def test_1d_pipeline_lifespan_and_adaptivity(R):
    c = build_c_1d_res(identity_strip(R), 0)
    assert max_lifespan(c) <= LIFESPAN_BOUND
    assert c.adaptive_layers() == [c.depth - 1]
    assert validate_path(c)


def validate_path(c):
    from artifact.circuit import validate_locality
    return validate_locality(c, InteractionGraph.path(c.n)) == []


def test_lifespan_is_independent_of_R():
    spans = {max_lifespan(build_c_1d_res(identity_strip(R), 0)) for R in (4, 8, 16)}
    assert len(spans) == 1


def test_level_one_pipeline_lifespan():
    c = build_c_1d_res(identity_strip(4), 1)
    assert max_lifespan(c) <= LIFESPAN_BOUND
    assert c.adaptive_layers() == [c.depth - 1]


def test_unfold_single_teleport_step():
    c = single_gate_circuit("H")
    tc = postpone_adaptive_paulis(teleport_substitute(c).circuit).circuit
    u = unfold(tc)
    assert (u.layout.lx, u.layout.ly) == (1, tc.n)
    assert u.layout.validate(u.circuit) == []
    assert u.circuit.depth < tc.depth
    assert branch_oracle(u.circuit, c)
    for t in range(u.circuit.depth):
        for q in range(u.circuit.n):
            f = FaultPattern({(t, q): "X"})
            assert branch_oracle(u.circuit, tc, f, u.fault_map(f))


@pytest.mark.parametrize("L", [0, 1])
def test_grid_circuit_structure(L):
    ms = {R: structure_metrics(build_c_bell(ProtocolConfig(R=R, L=L))) for R in (4, 8)}
    a, b = ms[4], ms[8]
    assert a["grid_errors"] == b["grid_errors"] == 0
    assert a["depth"] == b["depth"]
    assert a["l_x"] == b["l_x"]
    assert a["lifespan"] == b["lifespan"] <= LIFESPAN_BOUND
    assert b["distance"] > a["distance"]
    assert b["N"] > a["N"]


def test_depth_constant_up_to_R16():
    d = {structure_metrics(build_c_bell(ProtocolConfig(R=R)))["depth"] for R in (4, 8, 16)}
    assert len(d) == 1
    ms = [structure_metrics(build_c_bell(ProtocolConfig(R=R))) for R in (8, 16)]
    assert 1.8 <= ms[1]["distance"] / ms[0]["distance"] <= 2.2


def test_grid_circuit_is_adaptive_only_at_the_end():
    art = build_c_bell(ProtocolConfig(R=4))
    c = art.circuit
    assert c.adaptive_layers() == [c.depth - 1]
    assert c.n_in == 0 and c.n_out == 2
    assert locations(c)[0] > 0


def test_decoder_reads_the_final_layer():
    art = build_c_bell(ProtocolConfig(R=4))
    dec = art.decoder
    assert dec.targets == (art.layout.q1, art.layout.q2)
    assert dec.is_linear()
    rows = dec.linear_rows()
    assert len(rows) == 4 and any(rows)
    text = dec.to_text()
    assert text.startswith("decoder targets=") and "out x=" in text
    assert dec.pauli(np.zeros(art.circuit.cbits, np.uint8)) == "II"


def test_noiseless_trials_succeed():
    for variant in ("bell_strip", "square_grid"):
        art = build_c_bell(ProtocolConfig(R=4, variant=variant))
        res = run_trials(art, NoiseSpec(), 0, 0, 70)
        assert all(r.success for r in res)
        assert len({r.digest for r in res}) > 1   # outcomes are random, the output is not


def test_single_faults_map_back_through_the_unfolding():
    art = build_c_bell(ProtocolConfig(R=3))
    u = art.unfolded
    src = art.source
    rng = np.random.default_rng(5)
    for _ in range(30):
        t = int(rng.integers(0, u.circuit.depth))
        q = int(rng.integers(0, u.circuit.n))
        f = FaultPattern({(t, q): "XYZ"[int(rng.integers(0, 3))]})
        a = run(u.circuit, f, None, choi=True, forced={})
        b = run(src, u.fault_map(f), None, choi=True, forced={})
        # same outcome record on the forced branch and the same output group
        assert np.array_equal(a.record.bits, b.record.bits)
        assert reduced_canonical(a, u.circuit)[0] == reduced_canonical(b, src)[0]
