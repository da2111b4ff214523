"""Execution of adaptive Clifford circuits.

Three engines share one semantics (faults on wire (t, q) act right after layer t):

* ``run`` - exact tableau simulation of one shot, optionally streaming qubits
  through a recycled slot pool.
* ``FrameSimulator`` - batched Pauli-frame simulation relative to one reference
  tableau run, 64 shots per uint64 word.
* ``branch_oracle`` - exhaustive comparison of two circuits on Choi input; all
  outcome branches are enumerated as frames relative to one reference run.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .circuit import CPAULI, DISCARD, GATE, MEAS, PREP, Circuit, Linear, Lookup, ProgramRef
from .noise import FaultPattern
from .pauli import StabilizerState, reduced_generators

_XZ = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


class SimulationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# classical evaluation on a single record


class _Evaluator:
    """Memoised evaluation of classical functions on one outcome record."""

    def __init__(self, c: Circuit, bits: np.ndarray):
        self.c = c
        self.bits = bits
        self.memo: dict[int, int] = {}

    def bit(self, b: int) -> int:
        v = self.bits[b]
        if v < 0:
            raise SimulationError(f"classical bit c{b} read before write")
        return int(v)

    def node(self, i: int) -> int:
        if i < 0:
            return 0
        if i in self.memo:
            return self.memo[i]
        nodes = self.c.program.nodes
        stack = [i]
        while stack:
            j = stack[-1]
            if j in self.memo:
                stack.pop()
                continue
            nd = nodes[j]
            if nd[0] == "raw":
                self.memo[j] = self.bit(nd[1])
                stack.pop()
                continue
            deps = nd[1] if nd[0] == "xor" else [s for s in nd[2] if s >= 0]
            todo = [d for d in deps if d not in self.memo]
            if todo:
                stack.extend(todo)
                continue
            if nd[0] == "xor":
                v = 0
                for d in nd[1]:
                    v ^= self.memo[d]
            else:
                idx = sum((self.memo[s] if s >= 0 else 0) << k for k, s in enumerate(nd[2]))
                v = (self.c.program.tables[nd[1]][idx] >> nd[3]) & 1
            self.memo[j] = v
            stack.pop()
        return self.memo[i]

    def pauli(self, fn) -> tuple[int, int]:
        if isinstance(fn, (Linear, Lookup)):
            return fn.pauli([self.bit(b) for b in fn.src])
        xm = sum(self.node(i) << j for j, i in enumerate(fn.xs))
        zm = sum(self.node(i) << j for j, i in enumerate(fn.zs))
        return xm, zm


def evaluate_function(c: Circuit, fn, bits: Sequence[int]) -> tuple[int, int]:
    return _Evaluator(c, np.asarray(bits, dtype=np.int64)).pauli(fn)


# ---------------------------------------------------------------------------
# tableau execution


@dataclass
class OutcomeRecord:
    bits: np.ndarray
    provenance: dict[int, tuple[int, int]] = field(default_factory=dict)

    def digest(self) -> str:
        return hashlib.sha1(self.bits.astype(np.int8).tobytes()).hexdigest()[:16]


@dataclass
class RunResult:
    record: OutcomeRecord
    state: StabilizerState
    slot: dict[int, int]          # circuit qubit -> tableau slot (live qubits)
    ref_slots: list[int]          # Choi reference qubits, one per input
    gauges: list[tuple]           # random events: (t, kind, cbit, gx, gz)
    peak_live: int = 0

    def output_slots(self, c: Circuit) -> list[int]:
        return [self.slot[q] for q in c.outputs]


def _next_kinds(c: Circuit):
    """For each (t, q) with a non-wait op, the kind of q's next non-wait op."""
    nxt: dict[tuple[int, int], str | None] = {}
    last: dict[int, str | None] = {}
    for t in range(c.depth - 1, -1, -1):
        for o in c.layers[t]:
            for q in o.qubits:
                nxt[(t, q)] = last.get(q)
                last[q] = o.kind
    return nxt


def _choi_state(n_slots: int, pairs: Sequence[tuple[int, int]]) -> StabilizerState:
    s = StabilizerState(n_slots)
    if pairs:
        a = [p[0] for p in pairs]
        b = [p[1] for p in pairs]
        s.h(b)
        s.cnot(b, a)
    return s


def run(c: Circuit, f: FaultPattern | None = None, rng: np.random.Generator | None = None, *,
        streaming: bool = False, choi: bool = False, forced: dict[int, int] | None = None,
        want_gauges: bool = False, init: dict[int, str] | None = None,
        apply_cpauli: bool = True) -> RunResult:
    """Execute ``c`` once on the tableau.

    choi: entangle each input qubit with a fresh reference qubit.
    forced: outcome to take at random measurements (by cbit); others use rng
      or 0 when rng is None.
    init: optional single-qubit stabilizer states for inputs ('0','1','+','-','+i','-i').
    """
    f = f if f is not None else FaultPattern()
    faults = f.by_layer()
    nxt = _next_kinds(c) if streaming else None
    live_inputs = list(c.inputs)

    # slot allocation
    if streaming:
        peak = _streaming_peak(c, nxt)
        n_slots = peak
    else:
        n_slots = c.n
        peak = c.n
    n_ref = len(c.inputs) if choi else 0
    total = n_slots + n_ref
    slot: dict[int, int] = {}
    free: list[int] = []
    if streaming:
        free = list(range(n_slots - 1, -1, -1))
        for q in live_inputs:
            slot[q] = free.pop()
    else:
        slot = {q: q for q in range(c.n)}
    ref_slots = list(range(n_slots, total))
    pairs = [(slot[q], ref_slots[i]) for i, q in enumerate(c.inputs)] if choi else []
    st = _choi_state(total, pairs)
    if init:
        for q, lab in init.items():
            _init_single(st, slot[q], lab)
    fresh = set(range(n_slots)) if streaming else set()
    bits = np.full(c.cbits, -1, dtype=np.int64)
    prov: dict[int, tuple[int, int]] = {}
    gauges: list[tuple] = []
    ev = _Evaluator(c, bits)

    def alloc(q):
        s = free.pop()
        if s not in fresh:
            st.reset(s)
        fresh.discard(s)
        slot[q] = s
        return s

    for t, L in enumerate(c.layers):
        groups: dict[str, list] = {}
        for o in L:
            if o.kind == GATE:
                if streaming:
                    for q in o.qubits:
                        if q not in slot:
                            alloc(q)
                groups.setdefault(o.gate, []).append(tuple(slot[q] for q in o.qubits))
        for g, qs in groups.items():
            if g == "I":
                continue
            if len(qs[0]) == 1:
                st.apply_gate(g, [np.array([a[0] for a in qs])])
            else:
                st.apply_gate(g, [np.array([a[0] for a in qs]), np.array([a[1] for a in qs])])
        for o in L:
            q = o.qubits[0]
            if o.kind == PREP:
                if streaming and q not in slot:
                    alloc(q)
                else:
                    s = slot[q]
                    bit, rnd, gauge = st.measure_z(s, rng if forced is None else None, want_gauge=want_gauges)
                    if rnd and want_gauges:
                        gauges.append((t, PREP, None, gauge[0], gauge[1], s))
                    if bit:
                        st.pauli_x(s)
            elif o.kind in (MEAS, DISCARD):
                if streaming and q not in slot:
                    alloc(q)
                s = slot[q]
                fb = None
                if forced is not None and o.kind == MEAS:
                    fb = forced.get(o.cbit, 0)
                elif forced is not None:
                    fb = 0
                bit, rnd, gauge = st.measure_z(s, rng, forced=fb, want_gauge=want_gauges)
                if rnd and want_gauges:
                    gauges.append((t, o.kind, o.cbit, gauge[0], gauge[1], s))
                if o.kind == MEAS:
                    bits[o.cbit] = bit
                    prov[o.cbit] = (t, q)
            elif o.kind == CPAULI and apply_cpauli:
                xm, zm = ev.pauli(o.fn)
                px = np.zeros(total, np.uint8)
                pz = np.zeros(total, np.uint8)
                for i, qq in enumerate(o.qubits):
                    if streaming and qq not in slot:
                        alloc(qq)
                    px[slot[qq]] = (xm >> i) & 1
                    pz[slot[qq]] = (zm >> i) & 1
                if px.any() or pz.any():
                    st.apply_masks(px, pz)
        # faults after layer t
        if t in faults:
            px = np.zeros(total, np.uint8)
            pz = np.zeros(total, np.uint8)
            for q, p in faults[t]:
                if q in slot:
                    x, z = _XZ[p]
                    px[slot[q]] ^= x
                    pz[slot[q]] ^= z
            if px.any() or pz.any():
                st.apply_masks(px, pz)
        if streaming:
            for o in L:
                if o.kind in (MEAS, DISCARD):
                    q = o.qubits[0]
                    if nxt[(t, q)] in (None, PREP) and q not in c.outputs:
                        free.append(slot.pop(q))
    return RunResult(OutcomeRecord(bits, prov), st, slot, ref_slots, gauges, peak)


def _streaming_peak(c: Circuit, nxt) -> int:
    live = set(c.inputs)
    peak = len(live)
    for t, L in enumerate(c.layers):
        for o in L:
            for q in o.qubits:
                live.add(q)
        peak = max(peak, len(live))
        for o in L:
            if o.kind in (MEAS, DISCARD):
                q = o.qubits[0]
                if nxt[(t, q)] in (None, PREP) and q not in c.outputs:
                    live.discard(q)
    return max(peak, 1)


def _init_single(st: StabilizerState, s: int, lab: str) -> None:
    if lab in ("1", "-"):
        st.pauli_x(s)
    if lab in ("+", "-", "+i", "-i"):
        st.h(s)
    if lab in ("+i", "-i"):
        st.s(s)
    if lab == "-i":
        st.pauli_z(s)


STABILIZER_STATES = ("0", "1", "+", "-", "+i", "-i")


def reduced_canonical(res: RunResult, c: Circuit, extra: Sequence[int] = ()):
    """Canonical generators of the state on outputs (+ Choi refs + extra slots)."""
    keep = res.output_slots(c) + list(res.ref_slots) + list(extra)
    st = res.state
    gx, gz, sign = reduced_generators(st.x[st.n:], st.z[st.n:], st.k[st.n:], keep)
    return gx.tobytes(), gz.tobytes(), sign.tobytes()


# ---------------------------------------------------------------------------
# batched Pauli frames


def pack_bits(b: np.ndarray) -> np.ndarray:
    """(..., S) bool -> (..., ceil(S/64)) uint64, little-endian bit order."""
    S = b.shape[-1]
    W = (S + 63) // 64
    pad = np.zeros(b.shape[:-1] + (W * 64,), dtype=np.uint8)
    pad[..., :S] = b
    return np.packbits(pad, axis=-1, bitorder="little").view(np.uint64)


def unpack_bits(w: np.ndarray, S: int) -> np.ndarray:
    u = np.unpackbits(w.view(np.uint8), axis=-1, bitorder="little")
    return u[..., :S].astype(bool)


class FrameSimulator:
    """Pauli frames for ``shots`` executions of a circuit relative to a
    reference run.

    mode 'zrand': random Z gauge on each prepared/measured qubit (Monte Carlo).
    mode 'gauge': explicit branch bits; the reference run must have recorded
    the anticommuting stabilizer of every random event (``want_gauges``).
    ``word_rngs`` (one generator per 64 shots) makes each word's random
    frames independent of how shots are batched.
    """

    def __init__(self, c: Circuit, ref_bits: np.ndarray, shots: int, *, mode: str = "zrand",
                 rng: np.random.Generator | None = None, gauges=None, gauge_bits=None,
                 n_slots: int | None = None, slot: dict[int, int] | None = None,
                 word_rngs: Sequence[np.random.Generator] | None = None):
        self.c = c
        self.shots = shots
        self.W = (shots + 63) // 64
        self.mode = mode
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.word_rngs = list(word_rngs) if word_rngs is not None else None
        if self.word_rngs is not None and len(self.word_rngs) != (shots + 63) // 64:
            raise ValueError("need one generator per 64-shot word")
        n = n_slots if n_slots is not None else c.n
        self.n = n
        self.slot = slot if slot is not None else {q: q for q in range(c.n)}
        self.fx = np.zeros((n, self.W), dtype=np.uint64)
        self.fz = np.zeros((n, self.W), dtype=np.uint64)
        if mode == "zrand":
            # every qubit starts in |0>, so a random Z frame is free
            self.fz[:] = self._rand_words(n)
        self.flips = np.zeros((c.cbits, self.W), dtype=np.uint64)
        self.ref_bits = np.asarray(ref_bits, dtype=np.int64)
        self.gauges = {}
        if gauges is not None:
            for j, gg in enumerate(gauges):
                t, kind, cbit, gx, gz, s = gg
                self.gauges[(t, s)] = (gx, gz, gauge_bits[j])
        self.fault_count = np.zeros(shots, dtype=np.int64)
        self._ref_cp: dict[int, tuple[int, int]] = {}
        self._tail_mask = np.uint64((1 << (shots % 64)) - 1) if shots % 64 else np.uint64(0xFFFFFFFFFFFFFFFF)

    def _rand_words(self, k: int) -> np.ndarray:
        if self.word_rngs is not None:
            cols = [r.integers(0, np.iinfo(np.uint64).max, size=k, dtype=np.uint64, endpoint=True)
                    for r in self.word_rngs]
            return np.stack(cols, axis=1) if cols else np.zeros((k, 0), np.uint64)
        return self.rng.integers(0, np.iinfo(np.uint64).max, size=(k, self.W), dtype=np.uint64, endpoint=True)

    def actual_bits(self, bits: Sequence[int] | None = None) -> np.ndarray:
        """Packed actual outcomes (cbits, W)."""
        ref = self.ref_bits
        ones = np.uint64(0xFFFFFFFFFFFFFFFF)
        base = np.where(ref[:, None] > 0, ones, np.uint64(0)).astype(np.uint64)
        return self.flips ^ base

    def _apply_gauge(self, t: int, s: int):
        gx, gz, b = self.gauges[(t, s)]
        for j in np.flatnonzero(gx):
            self.fx[j] ^= b
        for j in np.flatnonzero(gz):
            self.fz[j] ^= b

    def _xor_masks(self, xs: dict[int, np.ndarray], zs: dict[int, np.ndarray]):
        for s, v in xs.items():
            self.fx[s] ^= v
        for s, v in zs.items():
            self.fz[s] ^= v

    def inject(self, t: int, qs: np.ndarray, shot_idx: np.ndarray, letters: np.ndarray):
        """XOR single-qubit faults (letter codes 1=X, 2=Y, 3=Z) at wires after layer t."""
        if qs.size == 0:
            return
        slots = np.array([self.slot.get(int(q), -1) for q in qs]) if self.slot is not None else qs
        ok = slots >= 0
        slots, shot_idx, letters = slots[ok], shot_idx[ok], letters[ok]
        w = shot_idx // 64
        bit = (np.uint64(1) << (shot_idx % 64).astype(np.uint64))
        xm = (letters == 1) | (letters == 2)
        zm = (letters == 2) | (letters == 3)
        np.bitwise_xor.at(self.fx, (slots[xm], w[xm]), bit[xm])
        np.bitwise_xor.at(self.fz, (slots[zm], w[zm]), bit[zm])

    def run_layer(self, t: int) -> None:
        L = self.c.layers[t]
        sl = self.slot
        fx, fz = self.fx, self.fz
        by: dict[str, list] = {}
        for o in L:
            if o.kind == GATE:
                by.setdefault(o.gate, []).append(o.qubits)
        for g, qss in by.items():
            if g in ("I", "X", "Y", "Z"):
                continue
            if len(qss[0]) == 1:
                a = np.array([sl[q[0]] for q in qss])
                if g == "H":
                    fx[a], fz[a] = fz[a], fx[a].copy()
                elif g in ("S", "SDG"):
                    fz[a] ^= fx[a]
            else:
                a = np.array([sl[q[0]] for q in qss])
                b = np.array([sl[q[1]] for q in qss])
                if g == "CNOT":
                    fx[b] ^= fx[a]
                    fz[a] ^= fz[b]
                elif g == "CZ":
                    fz[a] ^= fx[b]
                    fz[b] ^= fx[a]
                elif g == "SWAP":
                    fx[a], fx[b] = fx[b], fx[a].copy()
                    fz[a], fz[b] = fz[b], fz[a].copy()
        meas = [o for o in L if o.kind in (MEAS, DISCARD)]
        if meas and self.mode == "zrand":
            a = np.array([sl[o.qubits[0]] for o in meas])
            cb = [o.cbit for o in meas if o.kind == MEAS]
            if cb:
                am = np.array([sl[o.qubits[0]] for o in meas if o.kind == MEAS])
                self.flips[cb] = fx[am]
            fz[a] ^= self._rand_words(len(a))
        elif meas:
            # sequential: a gauge of one outcome may anticommute with a later
            # measurement of the same layer
            for o in meas:
                s = sl[o.qubits[0]]
                if o.kind == MEAS:
                    self.flips[o.cbit] = fx[s]
                if (t, s) in self.gauges:
                    b = self.gauges[(t, s)][2]
                    if o.kind == MEAS:
                        self.flips[o.cbit] ^= b
                    self._apply_gauge(t, s)
        preps = [o for o in L if o.kind == PREP]
        if preps:
            a = np.array([sl[o.qubits[0]] for o in preps])
            if self.mode == "gauge":
                for o in preps:
                    s = sl[o.qubits[0]]
                    if (t, s) in self.gauges:
                        self._apply_gauge(t, s)
            fx[a] = 0
            fz[a] = 0
            if self.mode == "zrand":
                fz[a] = self._rand_words(len(a))
        cps = [o for o in L if o.kind == CPAULI]
        if cps:
            self._cpaulis(t, cps)

    def _cpaulis(self, t: int, cps) -> None:
        act = self.actual_bits()
        roots = []
        for o in cps:
            if isinstance(o.fn, ProgramRef):
                roots += [i for i in o.fn.xs + o.fn.zs if i >= 0]
        vals = self.c.program.evaluate(act, roots) if roots else {}
        ref_ev = _Evaluator(self.c, self.ref_bits)
        ones = np.uint64(0xFFFFFFFFFFFFFFFF)
        zero = np.zeros(self.W, np.uint64)
        for o in cps:
            rx, rz = ref_ev.pauli(o.fn)
            if isinstance(o.fn, ProgramRef):
                xs = [vals[i] if i >= 0 else zero for i in o.fn.xs]
                zs = [vals[i] if i >= 0 else zero for i in o.fn.zs]
            else:
                src = act[list(o.fn.src)] if o.fn.src else np.zeros((0, self.W), np.uint64)
                xm, zm = o.fn.masks(src)
                xs, zs = list(xm), list(zm)
            for i, q in enumerate(o.qubits):
                s = self.slot[q]
                self.fx[s] ^= xs[i] ^ (ones if (rx >> i) & 1 else np.uint64(0))
                self.fz[s] ^= zs[i] ^ (ones if (rz >> i) & 1 else np.uint64(0))


# ---------------------------------------------------------------------------
# branch oracle


BRANCH_CAP = 1 << 20


class BranchCapExceeded(RuntimeError):
    pass


@dataclass
class Verdict:
    equal: bool
    detail: str = ""

    def __bool__(self):
        return self.equal


def branch_distribution(c: Circuit, f: FaultPattern | None = None, cap: int = BRANCH_CAP):
    """Exact output distribution of ``c`` (with faults f) on Choi input.

    Returns (generators, {sign-vector bytes: Fraction}).  The generators are
    the canonical reduced stabilizer group on outputs + reference qubits of
    the reference branch; each branch differs from it by sign flips only.
    """
    ref = run(c, f, None, choi=True, forced={}, want_gauges=True)
    k = len(ref.gauges)
    B = 1 << k
    if B > cap:
        raise BranchCapExceeded(f"{B} branches exceed the cap of {cap}")
    st = ref.state
    keep = ref.output_slots(c) + list(ref.ref_slots)
    gx, gz, sign = reduced_generators(st.x[st.n:], st.z[st.n:], st.k[st.n:], keep)
    idx = np.arange(B, dtype=np.int64)
    gbits = [pack_bits(((idx >> j) & 1).astype(bool)) for j in range(k)]
    fs = FrameSimulator(c, ref.record.bits, B, mode="gauge", gauges=ref.gauges, gauge_bits=gbits,
                        n_slots=st.n, slot=dict(ref.slot))
    for t in range(c.depth):
        fs.run_layer(t)
        # faults are part of the reference run already; frames only track branch differences
    # sign flip of generator g in branch b: <frame_b, g> restricted to kept columns
    fx = unpack_bits(fs.fx[keep], B).astype(np.uint8)  # (m, B)
    fz = unpack_bits(fs.fz[keep], B).astype(np.uint8)
    flips = (gx.astype(np.int64) @ fz + gz.astype(np.int64) @ fx) & 1  # (r, B)
    sig = (flips ^ sign[:, None]).astype(np.uint8)
    packed = np.packbits(sig, axis=0) if sig.size else np.zeros((0, B), np.uint8)
    cnt = Counter(bytes(packed[:, b]) for b in range(B)) if packed.shape[0] else Counter({b"": B})
    dist = {key: Fraction(v, B) for key, v in cnt.items()}
    return (gx.tobytes(), gz.tobytes(), gx.shape), dist


def branch_oracle(c: Circuit, reference: Circuit, f: FaultPattern | None = None,
                  f_ref: FaultPattern | None = None, cap: int = BRANCH_CAP) -> Verdict:
    """Compare the instruments of two circuits (outcomes discarded) exactly."""
    if c.n_in != reference.n_in or c.n_out != reference.n_out:
        return Verdict(False, "input/output arity differs")
    ga, da = branch_distribution(c, f, cap)
    gb, db = branch_distribution(reference, f_ref, cap)
    if ga != gb:
        return Verdict(False, "reduced stabilizer groups differ")
    if da != db:
        for key in sorted(set(da) | set(db)):
            if da.get(key) != db.get(key):
                return Verdict(False, f"sign pattern {key.hex()} has probability {da.get(key, 0)} vs {db.get(key, 0)}")
    return Verdict(True, f"{len(da)} distinct output states")


# ---------------------------------------------------------------------------
# batched fault sweeps

_LETTER_CODE = {"X": 1, "Y": 2, "Z": 3}


@dataclass
class SweepResult:
    generators: tuple            # canonical reduced generators (x bytes, z bytes, shape)
    signs: np.ndarray            # (cases, branches, r) sign bits of each generator
    reference_signs: np.ndarray  # (r,) noiseless reference branch

    def case_ok(self, want: np.ndarray | None = None) -> np.ndarray:
        """True where every sampled branch of a case matches a row of ``want``.

        ``want`` is one sign vector or a (k, r) array of allowed vectors; it
        defaults to the noiseless reference branch.
        """
        want = self.reference_signs if want is None else np.asarray(want, np.uint8)
        want = want.reshape(-1, self.signs.shape[2])
        hit = (self.signs[:, :, None, :] == want[None, None, :, :]).all(axis=3).any(axis=2)
        return hit.all(axis=1)


def fault_sweep(c: Circuit, cases: Sequence[FaultPattern], branches: int = 4,
                rng: np.random.Generator | None = None) -> SweepResult:
    """Output stabilizer signs (Choi input) for many fault patterns at once.

    Shot (i, b) runs case i in gauge branch b; branch 0 is the reference
    branch, the others draw their branch bits at random.  Exact whenever the
    circuit's correction logic makes the fault effect branch independent,
    which holds for decoders that only read syndromes.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    ref = run(c, None, None, choi=True, forced={}, want_gauges=True)
    st = ref.state
    keep = ref.output_slots(c) + list(ref.ref_slots)
    gx, gz, sign = reduced_generators(st.x[st.n:], st.z[st.n:], st.k[st.n:], keep)
    n_cases = len(cases)
    S = n_cases * branches
    k = len(ref.gauges)
    gb = rng.integers(0, 2, size=(k, n_cases, branches)).astype(bool)
    gb[:, :, 0] = False
    gbits = [pack_bits(gb[j].reshape(-1)) for j in range(k)]
    fs = FrameSimulator(c, ref.record.bits, S, mode="gauge", gauges=ref.gauges, gauge_bits=gbits,
                        n_slots=st.n, slot=dict(ref.slot))
    per_t: dict[int, list[tuple[int, int, int]]] = {}
    for i, f in enumerate(cases):
        for (t, q), p in f.items():
            for b in range(branches):
                per_t.setdefault(t, []).append((q, i * branches + b, _LETTER_CODE[p]))
    for t in range(c.depth):
        fs.run_layer(t)
        if t in per_t:
            arr = np.array(per_t[t], dtype=np.int64)
            fs.inject(t, arr[:, 0], arr[:, 1], arr[:, 2])
    fx = unpack_bits(fs.fx[keep], S).astype(np.int64)
    fz = unpack_bits(fs.fz[keep], S).astype(np.int64)
    flips = (gx.astype(np.int64) @ fz + gz.astype(np.int64) @ fx) & 1
    sig = (flips ^ sign[:, None].astype(np.int64)).astype(np.uint8)
    sig = sig.T.reshape(n_cases, branches, -1)
    return SweepResult((gx.tobytes(), gz.tobytes(), gx.shape), sig, sign.astype(np.uint8))


def sampled_check(c: Circuit, ideal: Circuit, cases: Sequence[FaultPattern] = (), branches: int = 16,
                  rng: np.random.Generator | None = None) -> tuple[bool, np.ndarray]:
    """Check c (with each fault case) against a small ideal circuit on sampled branches.

    Returns (noiseless run ok, per-case ok).  A branch passes when its output
    group equals the ideal's and its sign vector is one the ideal produces.
    For circuits too large to enumerate; branch_oracle is the exact version.
    """
    gens, dist = branch_distribution(ideal)
    r = gens[2][0]
    want = np.array([np.unpackbits(np.frombuffer(key, np.uint8))[:r] for key in dist], np.uint8).reshape(len(dist), r)
    res = fault_sweep(c, [FaultPattern()] + list(cases), branches, rng)
    if res.generators != gens:
        return False, np.zeros(len(cases), bool)
    ok = res.case_ok(want)
    return bool(ok[0]), ok[1:]


# ---------------------------------------------------------------------------
# protocol trials

FAULT_STREAM, OUTCOME_STREAM = 0, 1
WORD = 64


def stream_rng(seed: int, index: int, tag: int) -> np.random.Generator:
    """Independent stream for (master seed, trial or word index, stream tag)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index), int(tag)]))


@dataclass(frozen=True)
class TrialResult:
    index: int
    success: bool
    faults: int
    digest: str
    correction: str

    def log_line(self) -> str:
        return f"trial={self.index} faults={self.faults} success={int(self.success)} digest={self.digest}"


def reference_record(art) -> np.ndarray:
    """A noiseless outcome record of the protocol circuit.

    Taken from a tableau run of the 1D source circuit, which has the same
    measurements and instrument as the unfolded one but only a few dozen
    live qubits.  Also checks that the decoded output of that run is the
    Bell pair, which every frame shot is then compared against.
    """
    cached = getattr(art, "_reference", None)
    if cached is not None:
        return cached
    src = art.source
    res = run(src, None, None, streaming=True, choi=bool(src.inputs))
    if src.inputs:
        a, b = res.slot[src.outputs[0]], res.ref_slots[0]
    else:
        a, b = (res.slot[q] for q in src.outputs[:2])
    from .pauli import is_bell_pair
    if not is_bell_pair(res.state, a, b):
        raise SimulationError("noiseless reference run does not end in the Bell pair")
    bits = res.record.bits.copy()
    art._reference = bits
    return bits


def _shot_digests(act: np.ndarray, S: int) -> list[str]:
    out = []
    for w in range(act.shape[1]):
        cols = unpack_bits(act[:, w:w + 1], min(64, S - 64 * w))   # (cbits, shots in word)
        packed = np.packbits(cols, axis=0)
        for j in range(cols.shape[1]):
            out.append(hashlib.blake2b(packed[:, j].tobytes(), digest_size=8).hexdigest())
    return out


def run_trials(art, spec, seed: int, start: int, count: int,
               faults: Sequence[FaultPattern] | None = None) -> list[TrialResult]:
    """Trials start..start+count-1 of the protocol, batched as Pauli frames.

    Trial i draws its faults from stream (seed, i, FAULT_STREAM) unless
    ``faults`` supplies them; measurement randomness comes from one stream per
    64-trial word, so every trial's result is independent of the batching.
    """
    from .noise import _wire_pool, sample_wire_faults
    c = art.circuit
    ref = reference_record(art)
    w0 = start // WORD
    w1 = (start + count - 1) // WORD + 1
    S = (w1 - w0) * WORD
    off = start - w0 * WORD
    pool = _wire_pool(c, spec)
    ts, qs, shots, letters, counts = [], [], [], [], []
    for j in range(count):
        if faults is not None:
            f = faults[j]
            idx = np.array([t * c.n + q for (t, q), _ in f.items()], np.int64)
            let = np.array([{"X": 1, "Y": 2, "Z": 3}[p] for _, p in f.items()], np.int8)
        else:
            idx, let = sample_wire_faults(c, spec, stream_rng(seed, start + j, FAULT_STREAM), pool)
        counts.append(idx.size)
        ts.append(idx // c.n)
        qs.append(idx % c.n)
        shots.append(np.full(idx.size, off + j, np.int64))
        letters.append(let)
    ts, qs = np.concatenate(ts), np.concatenate(qs)
    shots, letters = np.concatenate(shots), np.concatenate(letters)
    order = np.argsort(ts, kind="stable")
    ts, qs, shots, letters = ts[order], qs[order], shots[order], letters[order]
    bounds = np.searchsorted(ts, np.arange(c.depth + 1))
    fs = FrameSimulator(c, ref, S, mode="zrand", word_rngs=[stream_rng(seed, w, OUTCOME_STREAM) for w in range(w0, w1)])
    for t in range(c.depth):
        fs.run_layer(t)
        a, b = bounds[t], bounds[t + 1]
        if b > a:
            fs.inject(t, qs[a:b], shots[a:b], letters[a:b])
    q1, q2 = art.layout.q1, art.layout.q2
    bad = (fs.fx[q1] ^ fs.fx[q2]) | (fs.fz[q1] ^ fs.fz[q2])
    ok = ~unpack_bits(bad, S)
    act = fs.actual_bits()
    corr = unpack_bits(art.decoder.evaluate(act), S)     # (4, S)
    digests = _shot_digests(act, S)
    out = []
    for j in range(count):
        s = off + j
        letters2 = "".join("IXZY"[int(corr[i, s]) | (int(corr[2 + i, s]) << 1)] for i in range(2))
        out.append(TrialResult(start + j, bool(ok[s]), counts[j], digests[s], letters2))
    return out


def run_protocol_trial(cfg, art, index: int = 0, fault: FaultPattern | None = None) -> TrialResult:
    """One trial: sample (or replay) a fault pattern, run, decode, adjudicate."""
    return run_trials(art, cfg.noise, cfg.seed, index, 1, None if fault is None else [fault])[0]


def trial_faults(cfg, art, index: int) -> FaultPattern:
    """The fault pattern trial ``index`` samples (for replay files)."""
    from .noise import _wire_pool, sample_wire_faults
    c = art.circuit
    idx, let = sample_wire_faults(c, cfg.noise, stream_rng(cfg.seed, index, FAULT_STREAM), _wire_pool(c, cfg.noise))
    return FaultPattern({(int(i // c.n), int(i % c.n)): "XYZ"[l - 1] for i, l in zip(idx, let)})
