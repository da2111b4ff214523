"""Steane [[7,1,3]] gadgets on a line and the recursive level-L simulation.

Every logical qubit owns a 21-qubit block laid out as ``[B A D]``: the data
code block D and two ancilla code blocks A and B used by error correction.
Blocks of neighbouring logical qubits sit next to each other, so all gadgets
are nearest-neighbour on a path; couplings between code blocks are made
transversal by interleaving the two blocks with SWAP layers and undoing the
interleave afterwards.

Error correction measures each stabilizer type with an ancilla prepared by a
non-fault-tolerant encoder U.  The coupled ancilla A is decoded (U^dagger)
before measurement, which reveals both the data syndrome and the ancilla's own
error coset.  A second ancilla B is coupled to A before A touches the data
and is measured transversally; it reports the same coset iff the error came
from A's preparation.  The correction applies A's coset only when both
agree, which makes a single fault anywhere leave at most a weight-one error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .circuit import (
    CPAULI, DISCARD, GATE, MEAS, PREP, WAIT, Circuit, CircuitBuilder, ClassicalProgram,
    Lookup, Op, ProgramRef, compose, cpauli, embed_into, function_to_program, gate, meas, prep,
)
from .pauli import CliffordAction, PauliOperator, popcount

N_CODE = 7
BLOCK = 21
B_OFF, A_OFF, D_OFF = 0, 7, 14

# Nearest-neighbour encoder: H on the pivots, then five CNOT layers.  Found by
# a beam search over directed matchings of the 7-path; slot 0 carries the
# input, pivots end up spanning the X checks.
INPUT_SLOT = 0
PIVOTS = (1, 3, 5)
ZERO_SLOTS = (2, 4, 6)
ENCODER_CNOTS = (
    ((1, 0), (3, 2), (5, 4)),
    ((2, 1), (4, 3)),
    ((1, 2), (3, 4), (5, 6)),
    ((0, 1), (2, 3), (4, 5)),
    ((1, 2), (3, 4)),
)

# logical gate -> physical gate applied on every qubit of the block
TRANSVERSAL = {"I": "I", "X": "X", "Y": "Y", "Z": "Z", "H": "H", "S": "SDG", "SDG": "S",
               "CNOT": "CNOT", "SWAP": "SWAP", "CZ": "CZ"}
ROLES = ("Prep0-Ga", "Meas-Ga", "Gate-Ga", "EC", "Enc", "Dec")


class UnsupportedGadget(ValueError):
    pass


def _parity(v: int) -> int:
    return popcount(v) & 1


# ---------------------------------------------------------------------------
# code


@dataclass(frozen=True)
class CodeSpec:
    """Masks are over the 7 code positions (bit j = position j)."""

    n: int
    k: int
    d: int
    x_checks: tuple[int, ...]      # X-type generators, one per pivot
    z_checks: tuple[int, ...]      # Z-type generators, one per zero slot
    logical_x: int
    logical_z: int
    transversal: dict = field(default_factory=dict, compare=False)

    @property
    def t(self) -> int:
        return (self.d - 1) // 2

    def stabilizers(self) -> list[PauliOperator]:
        return [PauliOperator(self.n, m, 0) for m in self.x_checks] + \
               [PauliOperator(self.n, 0, m) for m in self.z_checks]

    def x_syndrome(self, xmask: int) -> int:
        """Syndrome of an X error (bit i: anticommutes with z_checks[i])."""
        return sum(_parity(xmask & g) << i for i, g in enumerate(self.z_checks))

    def z_syndrome(self, zmask: int) -> int:
        return sum(_parity(zmask & h) << i for i, h in enumerate(self.x_checks))

    def x_coset(self, xmask: int) -> int:
        """4-bit label of an X pattern modulo X stabilizers."""
        return self.x_syndrome(xmask) | (_parity(xmask & self.logical_z) << 3)

    def z_coset(self, zmask: int) -> int:
        return self.z_syndrome(zmask) | (_parity(zmask & self.logical_x) << 3)

    def syndrome(self, p: PauliOperator) -> tuple[int, int]:
        return self.x_syndrome(p.x), self.z_syndrome(p.z)


def _min_weight_table(label) -> dict[int, int]:
    """label value -> lowest-weight mask (ties: lowest qubit indices)."""
    best: dict[int, int] = {}
    for m in sorted(range(1 << N_CODE), key=lambda v: (popcount(v), [-(v >> j & 1) for j in range(N_CODE)])):
        best.setdefault(label(m), m)
    return best


@lru_cache(maxsize=None)
def encoder_action() -> CliffordAction:
    return CliffordAction.from_gates(N_CODE, [("H", (p,)) for p in PIVOTS] +
                                     [("CNOT", cq) for L in ENCODER_CNOTS for cq in L])


@lru_cache(maxsize=None)
def steane_spec() -> CodeSpec:
    U = encoder_action()
    # X checks are the images of X on the pivots after their H, i.e. under
    # the CNOT network alone
    net = CliffordAction.from_gates(N_CODE, [("CNOT", cq) for L in ENCODER_CNOTS for cq in L])
    xs = tuple(net.conjugate(PauliOperator.single(N_CODE, p, "X")).x for p in PIVOTS)
    zs = tuple(U.conjugate(PauliOperator.single(N_CODE, s, "Z")).z for s in ZERO_SLOTS)
    lx = U.conjugate(PauliOperator.single(N_CODE, INPUT_SLOT, "X"))
    lz = U.conjugate(PauliOperator.single(N_CODE, INPUT_SLOT, "Z"))
    spec = CodeSpec(N_CODE, 1, 3, xs, zs, lx.x, lz.z)
    object.__setattr__(spec, "transversal", {g: TRANSVERSAL[g] for g in ("I", "X", "Y", "Z", "H", "S", "CNOT", "SWAP")
                                             if transversal_ok(spec, g)})
    return spec


def _block_pauli(spec: CodeSpec, nblocks: int, which: int, x: int, z: int) -> PauliOperator:
    return PauliOperator(N_CODE, x, z).embed(N_CODE * nblocks, range(N_CODE * which, N_CODE * which + N_CODE))


def transversal_ok(spec: CodeSpec, g: str) -> bool:
    """Symplectic check that the transversal gate preserves the code and acts
    as the logical gate on X-bar and Z-bar (signs up to stabilizers)."""
    phys = TRANSVERSAL[g]
    nb = 2 if g in ("CNOT", "SWAP", "CZ") else 1
    gates = [(phys, tuple(j + N_CODE * b for b in range(nb))) for j in range(N_CODE)]
    act = CliffordAction.from_gates(N_CODE * nb, gates)
    stabs = [_block_pauli(spec, nb, b, s.x, s.z) for b in range(nb) for s in spec.stabilizers()]
    stab_sets = _span(stabs)
    for s in stabs:
        if act.conjugate(s) not in stab_sets:
            return False
    ideal = CliffordAction.from_gates(nb, [(g, tuple(range(nb)))])
    for b in range(nb):
        for letter in "XZ":
            lp = PauliOperator.single(nb, b, letter)
            want = ideal.conjugate(lp)
            enc = _encode_logical(spec, want)
            got = act.conjugate(_encode_logical(spec, lp))
            if not any(got * s == enc for s in stab_sets):
                return False
    return True


def _encode_logical(spec: CodeSpec, p: PauliOperator) -> PauliOperator:
    out = PauliOperator.identity(N_CODE * p.n)
    for b in range(p.n):
        x, z = (p.x >> b) & 1, (p.z >> b) & 1
        if x:
            out = out * _block_pauli(spec, p.n, b, spec.logical_x, 0)
        if z:
            out = out * _block_pauli(spec, p.n, b, 0, spec.logical_z)
    # p's phase relative to the product of X and Z factors
    base = PauliOperator(p.n, p.x, 0) * PauliOperator(p.n, 0, p.z)
    return PauliOperator(out.n, out.x, out.z, (out.k + p.k - base.k) % 4)


def _span(gens: Sequence[PauliOperator]) -> set[PauliOperator]:
    out = {PauliOperator.identity(gens[0].n)}
    for g in gens:
        out |= {g * s for s in out}
    return out


@lru_cache(maxsize=None)
def decode_tables():
    """Weight-<=1 decoders and coset representatives, all as dicts."""
    spec = steane_spec()
    dx = {spec.x_syndrome(m): m for m in [0] + [1 << j for j in range(N_CODE)]}
    dz = {spec.z_syndrome(m): m for m in [0] + [1 << j for j in range(N_CODE)]}
    rx = _min_weight_table(spec.x_coset)
    rz = _min_weight_table(spec.z_coset)
    return dx, dz, rx, rz


# ---------------------------------------------------------------------------
# line scheduling helpers


def sorting_layers(order: Sequence, target: Sequence) -> list[list[tuple[int, int]]]:
    """Odd-even transposition sort turning ``order`` into ``target``.

    Returns SWAP layers of adjacent position pairs (relative positions)."""
    rank = {lab: i for i, lab in enumerate(target)}
    cur = [rank[x] for x in order]
    layers: list[list[tuple[int, int]]] = []
    step = 0
    idle = 0
    while idle < 2:
        L = []
        for i in range(step % 2, len(cur) - 1, 2):
            if cur[i] > cur[i + 1]:
                cur[i], cur[i + 1] = cur[i + 1], cur[i]
                L.append((i, i + 1))
        if L:
            layers.append(L)
            idle = 0
        else:
            idle += 1
        step += 1
    return layers


class _Sched:
    """Layer list over physical qubits with a label -> position tracker for
    states moved around by SWAP networks."""

    def __init__(self, n: int):
        self.n = n
        self.layers: list[list[Op]] = []
        self.cbits = 0
        self.program = ClassicalProgram()

    def at(self, t: int) -> list[Op]:
        while len(self.layers) <= t:
            self.layers.append([])
        return self.layers[t]

    def bits(self, k: int) -> list[int]:
        out = list(range(self.cbits, self.cbits + k))
        self.cbits += k
        return out

    def swap_network(self, t: int, positions: Sequence[int], order, target) -> int:
        """Emit SWAPs moving labels ``order`` (at ``positions``) to ``target``.
        Returns the number of layers used."""
        net = sorting_layers(order, target)
        for i, L in enumerate(net):
            for a, b in L:
                self.at(t + i).append(gate("SWAP", positions[a], positions[b]))
        return len(net)


def _encode_ops(seg: Sequence[int], plus: bool, with_h: bool = True) -> list[list[Op]]:
    """U on a contiguous 7-qubit segment (slot j at seg[j]); with ``plus`` the
    input slot starts in |+>."""
    hs = list(PIVOTS) + ([INPUT_SLOT] if plus else [])
    out = [[gate("H", seg[j]) for j in hs]] if with_h else []
    for L in ENCODER_CNOTS:
        out.append([gate("CNOT", seg[c], seg[t]) for c, t in L])
    return out


def _decode_ops(seg: Sequence[int], plus: bool) -> list[list[Op]]:
    hs = list(PIVOTS) + ([INPUT_SLOT] if plus else [])
    out = [[gate("CNOT", seg[c], seg[t]) for c, t in L] for L in reversed(ENCODER_CNOTS)]
    out.append([gate("H", seg[j]) for j in hs])
    return out


def _interleave_target(left: str, right: str) -> list[str]:
    return [f"{s}{k}" for k in range(N_CODE) for s in (left, right)]


# ---------------------------------------------------------------------------
# error-correction halves


@dataclass
class _HalfBits:
    a: list[int]      # decoded A slots 0..6
    b: list[int]      # transversal B outcomes, code position order


def _half(s: _Sched, t0: int, kind: str, base: int, with_data: bool = True) -> tuple[_HalfBits, int]:
    """One stabilizer type of extraction on block at ``base``.

    kind 'x': A,B in |+bar>, data X errors copied into A (CNOT D->A), A's Z
    errors leak into D and are recorded by B.  kind 'z' is the dual.
    Returns bits and the first free layer."""
    plus = kind == "x"
    Bq = [base + B_OFF + j for j in range(N_CODE)]
    Aq = [base + A_OFF + j for j in range(N_CODE)]
    Dq = [base + D_OFF + j for j in range(N_CODE)]
    t = t0
    s.at(t).extend(prep(q) for q in Aq + Bq)
    t += 1
    for La, Lb in zip(_encode_ops(Aq, plus), _encode_ops(Bq, plus)):
        s.at(t).extend(La + Lb)
        t += 1
    # couple A and B
    labels = [f"B{k}" for k in range(N_CODE)] + [f"A{k}" for k in range(N_CODE)]
    target = _interleave_target("B", "A")
    pos14 = Bq + Aq
    net = sorting_layers(labels, target)
    t += s.swap_network(t, pos14, labels, target)
    for k in range(N_CODE):
        b_, a_ = pos14[2 * k], pos14[2 * k + 1]
        s.at(t).append(gate("CNOT", b_, a_) if plus else gate("CNOT", a_, b_))
    t += 1
    for L in reversed(net):
        s.at(t).extend(gate("SWAP", pos14[a], pos14[b]) for a, b in L)
        t += 1
    # measure B (X basis for kind x) while A meets the data
    bbits = s.bits(N_CODE)
    tb = t
    if plus:
        s.at(tb).extend(gate("H", q) for q in Bq)
        tb += 1
    s.at(tb).extend(meas(q, c) for q, c in zip(Bq, bbits))
    if with_data:
        labels = [f"A{k}" for k in range(N_CODE)] + [f"D{k}" for k in range(N_CODE)]
        target = _interleave_target("A", "D")
        pos14 = Aq + Dq
        net = sorting_layers(labels, target)
        t += s.swap_network(t, pos14, labels, target)
        for k in range(N_CODE):
            a_, d_ = pos14[2 * k], pos14[2 * k + 1]
            s.at(t).append(gate("CNOT", d_, a_) if plus else gate("CNOT", a_, d_))
        t += 1
        for L in reversed(net):
            s.at(t).extend(gate("SWAP", pos14[a], pos14[b]) for a, b in L)
            t += 1
    t = max(t, tb + 1)
    for L in _decode_ops(Aq, plus):
        s.at(t).extend(L)
        t += 1
    abits = s.bits(N_CODE)
    s.at(t).extend(meas(q, c) for q, c in zip(Aq, abits))
    return _HalfBits(abits, bbits), t + 1


def _coset_nodes(prog: ClassicalProgram, hb: _HalfBits, kind: str) -> tuple[list[int], list[int], list[int]]:
    """(data syndrome, A coset, B coset) node lists for one half."""
    spec = steane_spec()
    raw_a = [prog.raw(b) for b in hb.a]
    raw_b = [prog.raw(b) for b in hb.b]
    if kind == "x":
        syn = [raw_a[j] for j in ZERO_SLOTS]
        ca = [raw_a[j] for j in PIVOTS] + [raw_a[INPUT_SLOT]]
        masks = list(spec.x_checks) + [spec.logical_x]
    else:
        syn = [raw_a[j] for j in PIVOTS]
        ca = [raw_a[j] for j in ZERO_SLOTS] + [raw_a[INPUT_SLOT]]
        masks = list(spec.z_checks) + [spec.logical_z]
    cb = [prog.xor(*(raw_b[j] for j in range(N_CODE) if (m >> j) & 1)) for m in masks]
    return syn, ca, cb


def _bits_of(v: int, k: int) -> list[int]:
    return [(v >> i) & 1 for i in range(k)]


@lru_cache(maxsize=None)
def correction_table(kind: str, data_measured: bool, syn_known: bool = True) -> tuple[int, ...]:
    """Table over (syndrome 3 bits, A coset 4 bits, B coset 4 bits) -> 7-bit mask.

    kind 'x': X correction from the X-half syndrome and the Z-half cosets.
    kind 'z': Z correction from the Z-half syndrome and the X-half cosets; the
    leaked pattern was already seen by the Z-half syndrome, so it is removed
    from the syndrome before decoding.  ``data_measured`` False drops the
    syndrome term (fresh preparation of |0bar> needs no X decoding).
    """
    dx, dz, rx, rz = decode_tables()
    dec = dx if kind == "x" else dz
    rep = rx if kind == "x" else rz
    out = []
    for idx in range(1 << 11):
        syn, ca, cb = idx & 7, (idx >> 3) & 15, (idx >> 7) & 15
        agree = ca == cb
        leak = rep[ca] if agree else 0
        if kind == "x":
            corr = (dec[syn] if data_measured else 0) ^ leak
        else:
            rest = syn ^ (ca & 7) if agree else syn
            corr = leak ^ dec[rest]
        out.append(corr)
    return tuple(out)


def _correction(s: _Sched, t: int, dq: Sequence[int], xsrc, zsrc, xtab, ztab) -> None:
    prog = s.program
    xs = tuple(-1 for _ in range(N_CODE))
    zs = tuple(-1 for _ in range(N_CODE))
    if xsrc is not None:
        tid = prog.add_table(xtab)
        xs = tuple(prog.lut(tid, xsrc, j) for j in range(N_CODE))
    if zsrc is not None:
        tid = prog.add_table(ztab)
        zs = tuple(prog.lut(tid, zsrc, j) for j in range(N_CODE))
    s.at(t).append(cpauli(ProgramRef(xs, zs), dq))


# ---------------------------------------------------------------------------
# gadgets


@dataclass(frozen=True)
class Gadget:
    role: str
    gate: str | None
    circuit: Circuit
    data: tuple[tuple[int, ...], ...]     # data qubits of each block (code order)
    ancillas: tuple[int, ...]
    logical_nodes: tuple[int, ...] = ()   # Meas-Ga: program node of the logical outcome

    @property
    def n_blocks(self) -> int:
        return len(self.data)


def data_qubits(block: int = 0) -> tuple[int, ...]:
    return tuple(BLOCK * block + D_OFF + j for j in range(N_CODE))


def _ancillas(nb: int) -> tuple[int, ...]:
    return tuple(BLOCK * b + j for b in range(nb) for j in range(D_OFF))


def _finish(role, g, s: _Sched, nb: int, ins, outs, nodes=()) -> Gadget:
    c = Circuit(BLOCK * nb, tuple(ins), tuple(outs), s.cbits, tuple(tuple(L) for L in s.layers), s.program)
    c.audit()
    return Gadget(role, g, c, tuple(data_qubits(b) for b in range(nb)), _ancillas(nb), tuple(nodes))


@lru_cache(maxsize=None)
def build_gadget(role: str, gate_name: str | None = None) -> Gadget:
    if role not in ROLES:
        raise UnsupportedGadget(f"unknown gadget role {role!r}")
    D = data_qubits(0)
    s = _Sched(BLOCK)
    if role == "EC":
        hx, t = _half(s, 0, "x", 0)
        hz, t = _half(s, t, "z", 0)
        sx, cax, cbx = _coset_nodes(s.program, hx, "x")
        sz, caz, cbz = _coset_nodes(s.program, hz, "z")
        _correction(s, t, D, sx + caz + cbz, sz + cax + cbx,
                    correction_table("x", True), correction_table("z", True))
        return _finish(role, None, s, 1, D, D)
    if role == "Prep0-Ga":
        s.at(0).extend(prep(q) for q in D)
        hz, t = _half(s, 0, "z", 0)
        # prep of D shares layer 0 with the ancilla preps; D is untouched
        # until the coupling so this is harmless
        sz, caz, cbz = _coset_nodes(s.program, hz, "z")
        zero3 = [-1, -1, -1]
        _correction(s, t, D, zero3 + caz + cbz, sz + [-1] * 8,
                    correction_table("x", False), correction_table("z", True))
        return _finish(role, None, s, 1, (), D)
    if role == "Meas-Ga":
        bits = s.bits(N_CODE)
        s.at(0).extend(meas(q, c) for q, c in zip(D, bits))
        tid = s.program.add_table(meas_decode_table())
        node = s.program.lut(tid, [s.program.raw(b) for b in bits], 0)
        return _finish(role, None, s, 1, D, (), (node,))
    if role == "Enc":
        c = enc_dec_circuits()[0]
        return Gadget(role, None, c, (D,), _ancillas(1))
    if role == "Dec":
        c = enc_dec_circuits()[1]
        return Gadget(role, None, c, (D,), _ancillas(1))
    # Gate-Ga
    if gate_name is None or gate_name.upper() not in TRANSVERSAL:
        raise UnsupportedGadget(f"no transversal gadget for gate {gate_name!r}")
    g = gate_name.upper()
    phys = TRANSVERSAL[g]
    if g in ("CNOT", "SWAP", "CZ"):
        return _two_block_gate(g, phys, False)
    if phys != "I":
        s.at(0).extend(gate(phys, q) for q in D)
    else:
        s.at(0)
    return _finish(role, g, s, 1, D, D)


@lru_cache(maxsize=None)
def _two_block_gate(g: str, phys: str, flipped: bool) -> Gadget:
    """Transversal two-block gate; ``flipped`` puts the first operand on the
    right block."""
    s = _Sched(2 * BLOCK)
    D1, D2 = data_qubits(0), data_qubits(1)
    # bring D1 next to D2: [B1 A1 D1 B2 A2 D2] -> [B1 A1 B2 A2 (D1 D2 interleaved)]
    order = [f"q{i}" for i in range(2 * BLOCK)]
    lab = {q: f"q{q}" for q in range(2 * BLOCK)}
    rest = [lab[q] for q in range(2 * BLOCK) if q not in D1 and q not in D2]
    inter = [x for k in range(N_CODE) for x in (lab[D1[k]], lab[D2[k]])]
    target = rest + inter
    net = sorting_layers(order, target)
    t = s.swap_network(0, list(range(2 * BLOCK)), order, target)
    first = len(rest)
    for k in range(N_CODE):
        pair = (first + 2 * k, first + 2 * k + 1)
        s.at(t).append(gate(phys, *(pair[::-1] if flipped else pair)))
    t += 1
    for L in reversed(net):
        s.at(t).extend(gate("SWAP", a, b) for a, b in L)
        t += 1
    return _finish("Gate-Ga", g, s, 2, D1 + D2, D1 + D2)


@lru_cache(maxsize=None)
def meas_decode_table() -> tuple[int, ...]:
    """Transversal Z outcomes (7 bits) -> logical bit after Hamming decode."""
    spec = steane_spec()
    dx = decode_tables()[0]
    out = []
    for w in range(1 << N_CODE):
        e = dx[spec.x_syndrome(w)]
        out.append(_parity((w ^ e) & spec.logical_z))
    return tuple(out)


@lru_cache(maxsize=None)
def dec_lookup() -> Lookup:
    """Decoder correction on the input slot from the six measured slots
    (bit i of the index = slot i+1)."""
    U = encoder_action()
    Ui = U.inverse()
    table: dict[int, tuple[int, int]] = {}
    singles = [0] + [1 << j for j in range(N_CODE)]
    for ex in singles:
        for ez in singles:
            e = Ui.conjugate(PauliOperator(N_CODE, ex, ez))
            idx = sum(((e.x >> j) & 1) << (j - 1) for j in range(1, N_CODE))
            fix = ((e.x >> INPUT_SLOT) & 1, (e.z >> INPUT_SLOT) & 1)
            if table.setdefault(idx, fix) != fix:
                raise AssertionError("decoder syndrome collision")
    return Lookup(tuple(table[i] for i in range(1 << (N_CODE - 1))), tuple(range(N_CODE - 1)), 1)


@lru_cache(maxsize=None)
def enc_dec_circuits() -> tuple[Circuit, Circuit]:
    """Encoder and decoder on one 21-qubit block (ancilla segments idle).

    Enc reads the bare qubit on data slot 0 and leaves the code block on D.
    Dec inverts U, measures the six check slots and fixes slot 0."""
    D = data_qubits(0)
    b = CircuitBuilder(BLOCK, inputs=(D[INPUT_SLOT],), outputs=D)
    b.layer(prep(D[j]) for j in range(N_CODE) if j != INPUT_SLOT)
    for L in _encode_ops(D, plus=False):
        b.layer(L)
    enc = b.build()
    b = CircuitBuilder(BLOCK, inputs=D, outputs=(D[INPUT_SLOT],))
    for L in _decode_ops(D, plus=False):
        b.layer(L)
    bits = [b.new_bit() for _ in range(N_CODE - 1)]
    b.layer(meas(D[j], bits[j - 1]) for j in range(1, N_CODE))
    lk = dec_lookup()
    b.layer([cpauli(Lookup(lk.table, tuple(bits), 1), (D[INPUT_SLOT],))])
    return enc, b.build()


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class GadgetMetrics:
    n_max: int
    d_min: int
    d_max: int


def all_gadgets() -> list[Gadget]:
    out = [build_gadget("Prep0-Ga"), build_gadget("Meas-Ga"), build_gadget("EC")]
    out += [build_gadget("Gate-Ga", g) for g in ("I", "X", "Y", "Z", "H", "S", "CNOT", "SWAP")]
    return out


def gadget_metrics() -> GadgetMetrics:
    gs = all_gadgets()
    return GadgetMetrics(max(g.circuit.n for g in gs), min(g.circuit.depth for g in gs),
                         max(g.circuit.depth for g in gs))


# ---------------------------------------------------------------------------
# level-L simulation


@dataclass(frozen=True)
class FtConfig:
    L: int = 1
    gadget_set: str = "steane-line"

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("concatenation level must be >= 0")


def _sequence_for(o: Op) -> list[Gadget]:
    ec = build_gadget("EC")
    if o.kind == GATE:
        return [build_gadget("Gate-Ga", o.gate), ec]
    if o.kind == WAIT:
        return [build_gadget("Gate-Ga", "I"), ec]
    if o.kind == PREP:
        return [build_gadget("Prep0-Ga"), ec]
    if o.kind == MEAS:
        return [ec, ec, build_gadget("Meas-Ga")]
    raise UnsupportedGadget(f"no gadget for {o.kind}")


class _NodeMapper:
    """Lazily copies nodes of the source circuit's program into the target
    program, mapping raw bits to logical outcome nodes."""

    def __init__(self, src: ClassicalProgram, dst: ClassicalProgram, logical: dict[int, int]):
        self.src, self.dst, self.logical = src, dst, logical
        self.map: dict[int, int] = {}
        self.tabs: dict[int, int] = {}

    def node(self, i: int) -> int:
        if i < 0:
            return -1
        if i in self.map:
            return self.map[i]
        for j in self.src.reachable([i]):
            if j in self.map:
                continue
            nd = self.src.nodes[j]
            if nd[0] == "raw":
                self.map[j] = self.logical[nd[1]]
            elif nd[0] == "xor":
                self.map[j] = self.dst.xor(*(self.map[k] for k in nd[1]))
            else:
                _, tab, srcs, bit = nd
                if tab not in self.tabs:
                    self.tabs[tab] = self.dst.add_table(self.src.tables[tab])
                self.map[j] = self.dst.lut(self.tabs[tab], [self.map[k] if k >= 0 else -1 for k in srcs], bit)
        return self.map[i]


def block_qubits(q: int) -> range:
    return range(BLOCK * q, BLOCK * (q + 1))


def _level_one(c: Circuit) -> Circuit:
    """Replace every location of c by its 1-gadget sequence on 21-qubit blocks."""
    n = BLOCK * c.n
    layers: list[list[Op]] = []
    prog = ClassicalProgram()
    logical: dict[int, int] = {}
    mapper = _NodeMapper(c.program, prog, logical)
    cshift = 0
    t0 = 0
    for t in range(c.depth):
        plan: list[tuple[list[int], list[Gadget], Op]] = []
        cps: list[Op] = []
        for o in c.ops(t):
            if o.kind == CPAULI:
                cps.append(o)
                continue
            if o.kind == DISCARD:
                plan.append(([o.qubits[0]], [], o))
                continue
            if o.kind == GATE and len(o.qubits) == 2:
                a, b = o.qubits
                if abs(a - b) != 1:
                    raise UnsupportedGadget("two-qubit gadgets need neighbouring blocks")
            plan.append((list(o.qubits), _sequence_for(o), o))
        depth = max([sum(g.circuit.depth for g in seq) for _, seq, _ in plan] + [1 if (cps or plan) else 0])
        while len(layers) < t0 + depth:
            layers.append([])
        for qs, seq, o in plan:
            if o.kind == DISCARD:
                layers[t0].extend(Op(DISCARD, (q,)) for q in (BLOCK * qs[0] + D_OFF + j for j in range(N_CODE)))
                continue
            tt = t0
            for g in seq:
                if g.n_blocks == 2:
                    a, b = o.qubits
                    if a > b:
                        g = _two_block_gate(g.gate, TRANSVERSAL[g.gate], True)
                    qmap = list(block_qubits(min(a, b))) + list(block_qubits(min(a, b) + 1))
                elif len(qs) == 1:
                    qmap = list(block_qubits(qs[0]))
                else:
                    # EC after a two-block gate runs on both blocks in parallel
                    for q in qs:
                        nm = embed_into(None, g.circuit, list(block_qubits(q)), tt, layers, prog, cshift)
                        cshift += g.circuit.cbits
                    tt += g.circuit.depth
                    continue
                nm = embed_into(None, g.circuit, qmap, tt, layers, prog, cshift)
                if g.role == "Meas-Ga":
                    logical[o.cbit] = nm[g.logical_nodes[0]]
                cshift += g.circuit.cbits
                tt += g.circuit.depth
        for o in cps:
            xs, zs = [], []
            fn = o.fn
            if not isinstance(fn, ProgramRef):
                tmp = ClassicalProgram()
                ref = function_to_program(fn, tmp, lambda b: tmp.raw(b))
                sub = _NodeMapper(tmp, prog, logical)
                xs0 = [sub.node(i) for i in ref.xs]
                zs0 = [sub.node(i) for i in ref.zs]
            else:
                xs0 = [mapper.node(i) for i in fn.xs]
                zs0 = [mapper.node(i) for i in fn.zs]
            targets = []
            for j, q in enumerate(o.qubits):
                targets += [BLOCK * q + D_OFF + k for k in range(N_CODE)]
                xs += [xs0[j]] * N_CODE
                zs += [zs0[j]] * N_CODE
            layers[t0].append(cpauli(ProgramRef(tuple(xs), tuple(zs)), targets))
        t0 += depth
    ins = tuple(q for i in c.inputs for q in data_qubits(i))
    outs = tuple(q for i in c.outputs for q in data_qubits(i))
    return Circuit(n, ins, outs, cshift, tuple(tuple(L) for L in layers), prog)


def level_simulate(c: Circuit, cfg: FtConfig | int) -> Circuit:
    L = cfg.L if isinstance(cfg, FtConfig) else int(cfg)
    if L < 0:
        raise ValueError("concatenation level must be >= 0")
    out = c
    for _ in range(L):
        out = _level_one(out)
    return out


def _offset(c: Circuit, off: int, n: int) -> Circuit:
    qmap = [q + off for q in range(c.n)]
    layers = [[o.relabel(qmap) for o in L] for L in c.layers]
    return Circuit(n, tuple(qmap[q] for q in c.inputs), tuple(qmap[q] for q in c.outputs), c.cbits,
                   tuple(tuple(L) for L in layers), c.program)


def _widen(c: Circuit, n: int) -> Circuit:
    return c.replace(n=n)


@lru_cache(maxsize=None)
def concat_enc(L: int) -> Circuit:
    """Bare qubit -> level-L code block on BLOCK**L qubits."""
    if L < 1:
        raise ValueError("concat_enc needs L >= 1")
    enc = enc_dec_circuits()[0]
    if L == 1:
        return enc
    inner = concat_enc(L - 1)
    size = BLOCK ** L
    sub = BLOCK ** (L - 1)
    first = _offset(inner, sub * enc.inputs[0], size)
    outer = _widen(level_simulate(enc, L - 1), size)
    return compose(first, outer, wiring=list(range(size)))


@lru_cache(maxsize=None)
def concat_dec(L: int) -> Circuit:
    """Level-L code block -> bare qubit (level-by-level decoding)."""
    if L < 1:
        raise ValueError("concat_dec needs L >= 1")
    dec = enc_dec_circuits()[1]
    if L == 1:
        return dec
    inner = concat_dec(L - 1)
    size = BLOCK ** L
    sub = BLOCK ** (L - 1)
    outer = _widen(level_simulate(dec, L - 1), size)
    last = _offset(inner, sub * dec.outputs[0], size)
    return compose(outer, last, wiring=list(range(size)))


def _parallel(cs: Sequence[Circuit], n: int) -> Circuit:
    """Place circuits (already on disjoint qubits of an n-qubit register) side by side."""
    layers: list[list[Op]] = [[] for _ in range(max((c.depth for c in cs), default=0))]
    prog = ClassicalProgram()
    cshift = 0
    ins, outs = [], []
    for c in cs:
        embed_into(None, c, list(range(c.n)), 0, layers, prog, cshift)
        cshift += c.cbits
        ins += c.inputs
        outs += c.outputs
    return Circuit(n, tuple(ins), tuple(outs), cshift, tuple(tuple(L) for L in layers), prog)


def build_c_ft(c: Circuit, L: int) -> Circuit:
    """Dec^{(L->0)} o C^(L) o Enc^{(0->L)} on bare inputs and outputs."""
    if L == 0:
        return c
    size = BLOCK ** L
    n = size * c.n
    body = level_simulate(c, L)
    if c.inputs:
        enc = concat_enc(L)
        encs = _parallel([_offset(enc, size * q, n) for q in c.inputs], n)
        body = compose(encs, body, wiring=list(range(n)))
    if c.outputs:
        dec = concat_dec(L)
        decs = _parallel([_offset(dec, size * q, n) for q in c.outputs], n)
        body = compose(body, decs, wiring=list(range(n)))
    return body


# ---------------------------------------------------------------------------
# exhaustive contract checks


@dataclass
class ContractReport:
    role: str
    gate: str | None
    cases: int
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        name = self.role + (f"({self.gate})" if self.gate else "")
        return f"{name}: {self.cases} single-fault cases, {len(self.failures)} failures"


def _stack(n: int, segments, inputs, outputs) -> tuple[Circuit, list[int]]:
    """Sequential segments of parallel (circuit, qmap) pieces.  Returns the
    circuit and each segment's first layer; the second value of a piece may
    be a callback receiving (node_map, prog, layers, t0)."""
    layers: list[list[Op]] = []
    prog = ClassicalProgram()
    cshift = 0
    starts = []
    t0 = 0
    for seg in segments:
        starts.append(t0)
        depth = 0
        for c, qmap, *hook in seg:
            nm = embed_into(None, c, qmap, t0, layers, prog, cshift)
            cshift += c.cbits
            depth = max(depth, c.depth)
            if hook:
                depth = max(depth, hook[0](nm, prog, layers, t0 + c.depth))
        t0 += depth
        while len(layers) < t0:
            layers.append([])
    starts.append(t0)
    c = Circuit(n, tuple(inputs), tuple(outputs), cshift, tuple(tuple(L) for L in layers), prog)
    c.audit()
    return c, starts


def contract_setup(role: str, gate_name: str | None = None):
    """(test circuit, ideal circuit, gadget layer range, gadget qubits, input-error layer)."""
    from .circuit import Linear
    enc, dec = enc_dec_circuits()
    ec = build_gadget("EC")
    g = build_gadget(role, gate_name)
    nb = g.n_blocks
    n = BLOCK * nb
    blocks = [list(block_qubits(b)) for b in range(nb)]
    segs = []
    ins, outs = [], []
    has_input = role != "Prep0-Ga"
    if has_input:
        segs.append([(enc, blocks[b]) for b in range(nb)])
        ins = [blocks[b][enc.inputs[0]] for b in range(nb)]
    if role == "Meas-Ga":
        D0 = data_qubits(0)[INPUT_SLOT]

        def reprep(nm, prog, layers, t):
            while len(layers) < t + 2:
                layers.append([])
            layers[t].append(prep(D0))
            layers[t + 1].append(cpauli(ProgramRef((nm[g.logical_nodes[0]],), (-1,)), (D0,)))
            return g.circuit.depth + 2
        segs.append([(g.circuit, list(range(n)), reprep)])
        outs = [D0]
    else:
        segs.append([(g.circuit, list(range(n)))])
        segs.append([(ec.circuit, blocks[b]) for b in range(nb)])
        segs.append([(dec, blocks[b]) for b in range(nb)])
        outs = [blocks[b][dec.outputs[0]] for b in range(nb)]
    c, starts = _stack(n, segs, ins, outs)
    gi = 1 if has_input else 0
    t_lo, t_hi = starts[gi], starts[gi] + g.circuit.depth
    # ideal 0-gadget
    b = CircuitBuilder(nb, inputs=range(nb) if has_input else (), outputs=range(nb))
    if role == "Prep0-Ga":
        b.layer([prep(0)])
    elif role == "Meas-Ga":
        cb = b.new_bit()
        b.layer([meas(0, cb)])
        b.layer([prep(0)])
        b.layer([cpauli(Linear((1,), (0,), (cb,)), (0,))])
    elif role == "Gate-Ga":
        b.layer([gate(g.gate, *range(nb))])
    ideal = b.build()
    return c, ideal, (t_lo, t_hi), list(range(n)), (t_lo - 1 if has_input else None), [q for d in g.data for q in d]


def contract_cases(c: Circuit, t_range, qubits, t_in, data, pairs: bool = False) -> list:
    """Every single-qubit Pauli on every wire of the gadget and every weight-1
    input error.  With ``pairs`` also every Pauli on the output pair of each
    two-qubit gate (a weight-2 event under wire noise)."""
    from .noise import FaultPattern
    cases = []
    for t in range(*t_range):
        for q in qubits:
            for p in "XYZ":
                cases.append(FaultPattern({(t, q): p}))
        for o in c.layers[t]:
            if pairs and o.kind == GATE and len(o.qubits) == 2:
                a, b = o.qubits
                for pa, pb in itertools.product("XYZ", repeat=2):
                    cases.append(FaultPattern({(t, a): pa, (t, b): pb}))
    if t_in is not None:
        for q in data:
            for p in "XYZ":
                cases.append(FaultPattern({(t_in, q): p}))
    return cases


def check_contract(role: str, gate_name: str | None = None, branches: int = 3, seed: int = 0,
                   pairs: bool = False) -> ContractReport:
    import numpy as np
    from .sim import sampled_check
    c, ideal, t_range, qubits, t_in, data = contract_setup(role, gate_name)
    cases = contract_cases(c, t_range, qubits, t_in, data, pairs)
    base, ok = sampled_check(c, ideal, cases, branches, np.random.default_rng(seed))
    fails = [] if base else ["noiseless run differs from the ideal gadget"]
    fails += [cases[i] for i in np.flatnonzero(~ok)]
    return ContractReport(role, gate_name, len(cases), fails)
