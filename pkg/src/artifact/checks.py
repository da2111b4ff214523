"""Property suites run by ``artifact verify`` and the acceptance tests.

Each suite returns plain data (counts of cases and failures) so callers can
print one line per group and decide on exit codes themselves.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circuit import (
    Circuit, CircuitBuilder, InteractionGraph, Linear, Rectangle, cpauli, gate, meas, prep,
)
from .noise import LETTERS, FaultPattern
from .passes import (
    PassError, change_geometry, inflate, path_bilinear_routing, postpone_adaptive_paulis, substitute_unitary,
    teleport_substitute, to_alternating_form, to_normal_form,
)
from .sim import branch_distribution, branch_oracle, run

ONE = ["H", "S", "SDG", "X", "Y", "Z"]
TWO = ["CNOT", "CZ", "SWAP"]
TELEPORT_GATES = ("X", "Y", "Z", "H", "S", "I", "CNOT", "SWAP")


@dataclass
class GroupResult:
    name: str
    cases: int
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.cases} cases, {len(self.failures)} failures ({self.seconds:.1f}s)"


def _timed(name: str, fn: Callable[[], tuple[int, list]]) -> GroupResult:
    t0 = time.perf_counter()
    cases, fails = fn()
    return GroupResult(name, cases, fails, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# random circuits


def random_circuit(rng, n=3, depth=6, adaptive=True, unitary=False, graph: InteractionGraph | None = None,
                   n_in=None) -> Circuit:
    """Small random adaptive Clifford circuit with Linear controlled Paulis."""
    n_in = rng.integers(0, n + 1) if n_in is None else n_in
    inputs = tuple(sorted(rng.choice(n, size=n_in, replace=False).tolist()))
    b = CircuitBuilder(n, inputs, ())
    written = []
    for t in range(depth):
        free = list(rng.permutation(n))
        ops = []
        while free:
            q = int(free.pop())
            r = rng.random()
            if r < 0.35 and free:
                cand = [int(x) for x in free if graph is None or graph.has_edge(q, int(x))]
                if cand:
                    q2 = cand[rng.integers(len(cand))]
                    free.remove(q2)
                    ops.append(gate(TWO[rng.integers(3)], q, q2))
                    continue
            if r < 0.6:
                ops.append(gate(ONE[rng.integers(len(ONE))], q))
            elif not unitary and r < 0.7 and not (t == 0 and q in inputs):
                ops.append(prep(q))
            elif not unitary and r < 0.78 and t < depth - 1:
                c = b.new_bit()
                ops.append(meas(q, c))
                written.append((t, c))
            elif not unitary and adaptive and r < 0.88:
                srcs = [c for tt, c in written if tt < t]
                if srcs:
                    k = min(len(srcs), int(rng.integers(1, 3)))
                    src = tuple(int(x) for x in rng.choice(srcs, size=k, replace=False))
                    A = (int(rng.integers(0, 1 << k)),)
                    B = (int(rng.integers(0, 1 << k)),)
                    ops.append(cpauli(Linear(A, B, src), [q]))
        b.layer(ops)
    # outputs: qubits not measured in the final layer
    last = {o.qubits[0] for o in b.layers[-1] if o.kind in ("measz", "discard")} if b.layers else set()
    cand = [q for q in range(n) if q not in last]
    k = int(rng.integers(1, len(cand) + 1)) if cand else 0
    b.outputs = tuple(sorted(rng.choice(cand, size=k, replace=False).tolist())) if k else ()
    return b.build()


def random_faults(rng, c: Circuit, k=None) -> FaultPattern:
    k = int(rng.integers(0, 4)) if k is None else k
    ents = []
    for _ in range(k):
        ents.append(((int(rng.integers(c.depth)), int(rng.integers(c.n))), LETTERS[rng.integers(3)]))
    return FaultPattern(ents)


# ---------------------------------------------------------------------------
# teleportation branches


def single_gate_circuit(name: str) -> Circuit:
    k = 2 if name in TWO else 1
    b = CircuitBuilder(k, range(k), range(k))
    b.layer([gate(name, *range(k))])
    return b.build()


def teleport_branches(name: str):
    """(number of random outcome events, verdict) for the teleported gate."""
    c = single_gate_circuit(name)
    tc = teleport_substitute(c).circuit
    events = len(run(tc, choi=True, forced={}, want_gauges=True).gauges)
    return events, branch_oracle(tc, c)


def teleport_suite() -> GroupResult:
    def body():
        fails = []
        for g in TELEPORT_GATES:
            events, v = teleport_branches(g)
            want = 4 if g in TWO else 2
            if events != want or not v:
                fails.append((g, events, v.detail))
        return len(TELEPORT_GATES), fails
    return _timed("teleport-branches", body)


# ---------------------------------------------------------------------------
# passes


def _alt_micro_move(rng) -> tuple[Circuit, list]:
    """Unitary circuit with a wait-then-gate rectangle replaced by gate-then-wait."""
    c = random_circuit(rng, n=int(rng.integers(1, 5)), depth=int(rng.integers(2, 8)), unitary=True)
    pairs = []
    taken: set[tuple[int, int]] = set()
    for t in range(c.depth - 1):
        for o in c.layers[t + 1]:
            if len(o.qubits) != 1 or any((s, o.qubits[0]) in taken for s in (t, t + 1)):
                continue
            q = o.qubits[0]
            if c.op_at(t, q).kind != "wait":
                continue
            rep = CircuitBuilder(1, (0,), (0,))
            rep.layer([gate(o.gate, 0)])
            rep.layer([])
            pairs.append((Rectangle(frozenset({q}), t - 1, 2), rep.build()))
            taken |= {(t, q), (t + 1, q)}
    return c, pairs


def _unfold_instance(rng):
    from .passes import run_pipeline
    from .protocol import unfold
    n = int(rng.integers(1, 3))
    c = random_circuit(rng, n=n, depth=int(rng.integers(1, 4)), graph=InteractionGraph.path(n))
    c1d, _ = run_pipeline(c, (("postpone", {}), ("teleport", {}), ("postpone", {})))
    u = unfold(c1d)
    return c1d, u


PASS_NAMES = ("postpone", "inflate", "substitute_unitary", "alternating", "normal_form",
              "change_geometry", "teleport", "unfold_2d")


def pass_instance(name: str, rng):
    """(new circuit, old circuit, fault map) for one random instance of a pass."""
    if name == "postpone":
        c = random_circuit(rng, n=int(rng.integers(1, 5)), depth=int(rng.integers(1, 11)))
        r = postpone_adaptive_paulis(c)
    elif name == "inflate":
        c = random_circuit(rng, n=int(rng.integers(1, 5)), depth=int(rng.integers(1, 6)))
        r = inflate(c, int(rng.integers(0, 3)))
    elif name == "substitute_unitary":
        c, pairs = _alt_micro_move(rng)
        r = substitute_unitary(c, pairs)
    elif name == "alternating":
        c = random_circuit(rng, n=int(rng.integers(1, 5)), depth=int(rng.integers(1, 6)))
        r = to_alternating_form(c)
    elif name == "normal_form":
        g = InteractionGraph.path(4)
        c = random_circuit(rng, n=4, depth=int(rng.integers(1, 4)), graph=g)
        r = to_normal_form(c, g)
    elif name == "change_geometry":
        rt = path_bilinear_routing(2)
        c = random_circuit(rng, n=4, depth=int(rng.integers(1, 4)), graph=rt.src)
        r = change_geometry(c, rt)
    elif name == "teleport":
        n = int(rng.integers(1, 3))
        c = random_circuit(rng, n=n, depth=int(rng.integers(1, 4)), graph=InteractionGraph.path(n))
        r = teleport_substitute(c)
    elif name == "unfold_2d":
        c1d, u = _unfold_instance(rng)
        return u.circuit, c1d, u.fault_map
    else:
        raise KeyError(name)
    return r.circuit, c, r.fault_map


def pass_oracle_suite(name: str, instances: int = 100, seed: int = 0) -> GroupResult:
    """Instrument equality and fault-map equality on random instances."""
    def body():
        rng = np.random.default_rng([seed, PASS_NAMES.index(name)])
        fails = []
        for i in range(instances):
            new, old, fmap = pass_instance(name, rng)
            f = random_faults(rng, new) if new.depth and new.n else FaultPattern()
            v = branch_oracle(new, old)
            v2 = branch_oracle(new, old, f, fmap(f))
            if not v or not v2:
                fails.append((i, f, v.detail, v2.detail))
        return instances, fails
    return _timed(f"pass-{name}", body)


def routing_suite(rs=(2, 4, 6)) -> GroupResult:
    def body():
        fails = []
        for r in rs:
            try:
                path_bilinear_routing(r).validate()
            except PassError as e:
                fails.append((r, str(e)))
        return len(rs), fails
    return _timed("routing", body)


# ---------------------------------------------------------------------------
# gadgets


def contract_suite(branches: int = 3) -> GroupResult:
    from .steane import check_contract
    roles = [("EC", None), ("Prep0-Ga", None), ("Meas-Ga", None)] + [("Gate-Ga", g) for g in TELEPORT_GATES]

    def body():
        fails, cases = [], 0
        for role, g in roles:
            rep = check_contract(role, g, branches=branches)
            cases += rep.cases
            fails += [(role, g, f) for f in rep.failures]
        return cases, fails
    return _timed("gadget-contracts", body)


def level_reduction_cases():
    """C^(1)(C^prep) followed by noiseless decoders, and every single-wire fault
    of the level-1 body."""
    from .protocol import build_c_prep
    from .steane import build_c_ft, level_simulate
    cp = build_c_prep()
    body = level_simulate(cp, 1)
    full = build_c_ft(cp, 1)
    cases = [FaultPattern({(t, q): p}) for t in range(body.depth) for q in range(body.n) for p in LETTERS]
    return cp, full, cases


def level_reduction_suite() -> GroupResult:
    from .sim import sampled_check

    def body():
        cp, full, cases = level_reduction_cases()
        base, ok = sampled_check(full, cp, cases, branches=4, rng=np.random.default_rng(0))
        fails = [] if base else ["noiseless run"]
        fails += [cases[i] for i in np.flatnonzero(~ok)]
        return len(cases), fails
    return _timed("level-reduction", body)


def enc_dec_suite() -> GroupResult:
    from .steane import data_qubits, enc_dec_circuits
    from .circuit import compose, identity_circuit

    def body():
        enc, dec = enc_dec_circuits()
        rt = compose(enc, dec, wiring=list(range(enc.n)))
        fails = []
        if not branch_oracle(rt, identity_circuit(1)):
            fails.append("Dec o Enc")
        cases = 0
        for q in data_qubits(0):
            for p in LETTERS:
                cases += 1
                f = FaultPattern({(enc.depth - 1, q): p})
                if not branch_oracle(rt, identity_circuit(1), f):
                    fails.append(f)
        return cases + 1, fails
    return _timed("enc-dec", body)


def all_groups(quick: bool = False) -> list[Callable[[], GroupResult]]:
    n = 20 if quick else 100
    groups = [teleport_suite, routing_suite, enc_dec_suite, contract_suite, level_reduction_suite]
    groups += [lambda name=name: pass_oracle_suite(name, n) for name in PASS_NAMES]
    return groups


def branch_count(c: Circuit) -> int:
    return len(branch_distribution(c)[1])
