"""Entanglement-generation circuits: the fault-tolerant 1D pipeline, its
unfolding onto a 2D grid, the correction decoder and the thermal mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import (
    CPAULI, DISCARD, GATE, MEAS, PREP, Circuit, CircuitBuilder, ClassicalProgram, Op, ProgramRef, gate,
    locations, max_lifespan, prep, wait,
)
from .noise import FaultPattern, NoiseSpec
from .passes import TELEPORT_DEPTH, PassResult, pipeline_fault_map, run_pipeline
from .steane import build_c_ft

VARIANTS = ("bell_strip", "square_grid")
LIFESPAN_BOUND = 4 * TELEPORT_DEPTH
PIPELINE = (("postpone", {}), ("teleport", {}), ("postpone", {}))


@dataclass(frozen=True)
class ProtocolConfig:
    R: int = 8
    L: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    variant: str = "bell_strip"

    def __post_init__(self):
        if self.R < 3:
            raise ValueError("R must be at least 3")
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class ThermalConfig:
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def thermal_noise_strength(t: ThermalConfig | float) -> float:
    """Flip probability of each stabilizer term of the Gibbs state."""
    beta = t.beta if isinstance(t, ThermalConfig) else float(t)
    if not beta > 0:
        raise ValueError("beta must be positive")
    return (1.0 - math.tanh(beta)) / 2.0


# ---------------------------------------------------------------------------
# small named circuits


def build_c_prep() -> Circuit:
    """Bell pair on two qubits: Prep0 x2, H on qubit 0, CNOT 0 -> 1."""
    b = CircuitBuilder(2, inputs=(), outputs=(0, 1))
    b.layer([prep(0), prep(1)])
    b.layer([gate("H", 0)])
    b.layer([gate("CNOT", 0, 1)])
    return b.build()


def identity_strip(R: int) -> Circuit:
    """One qubit carried through R identity locations."""
    b = CircuitBuilder(1, inputs=(0,), outputs=(0,))
    for _ in range(R):
        b.layer([wait(0)])
    return b.build()


# ---------------------------------------------------------------------------
# 1D pipeline


@dataclass
class Pipeline1D:
    circuit: Circuit
    ft: Circuit
    results: list[PassResult]

    def fault_map(self, f: FaultPattern) -> FaultPattern:
        """Fault on the final 1D circuit -> fault on C_FT."""
        return pipeline_fault_map(self.results)(f)


def pipeline_1d_res(c: Circuit, L: int) -> Pipeline1D:
    ft = build_c_ft(c, L)
    out, results = run_pipeline(ft, PIPELINE)
    span = max_lifespan(out)
    if span > LIFESPAN_BOUND:
        raise ValueError(f"qubit lifespan {span} exceeds the bound {LIFESPAN_BOUND}")
    return Pipeline1D(out, ft, results)


def build_c_1d_res(c: Circuit, L: int) -> Circuit:
    """Level-L simulation of c, teleported so that every qubit is reset
    within a bounded number of layers; adaptive only in the final layer."""
    return pipeline_1d_res(c, L).circuit


# ---------------------------------------------------------------------------
# 2D unfolding


@dataclass
class GridLayout:
    lx: int
    ly: int
    placement: dict[int, tuple[int, int]]
    q1: int
    q2: int
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()

    def point(self, q: int) -> tuple[int, int]:
        return self.placement[q]

    def distance(self, a: int | None = None, b: int | None = None) -> int:
        a = self.q1 if a is None else a
        b = self.q2 if b is None else b
        (xa, ya), (xb, yb) = self.placement[a], self.placement[b]
        return abs(xa - xb) + abs(ya - yb)

    def validate(self, c: Circuit) -> list[str]:
        """Layout audit: injective, inside the box, two-qubit gates on neighbours."""
        errs = []
        pts = list(self.placement.values())
        if len(set(pts)) != len(pts):
            errs.append("placement is not injective")
        for q, (x, y) in self.placement.items():
            if not (0 <= x < self.lx and 0 <= y < self.ly):
                errs.append(f"qubit {q} at {(x, y)} outside the {self.lx}x{self.ly} box")
        for t, L in enumerate(c.layers):
            for o in L:
                if o.kind == GATE and len(o.qubits) == 2:
                    a, b = o.qubits
                    if a not in self.placement or b not in self.placement or self.distance(a, b) != 1:
                        errs.append(f"layer {t}: {o.gate}{o.qubits} joins non-neighbouring points")
        return errs

    def to_csv(self) -> str:
        rows = ["qubit,x,y,role"]
        for q in sorted(self.placement):
            x, y = self.placement[q]
            role = "Q1" if q == self.q1 else "Q2" if q == self.q2 else \
                "input" if q in self.inputs else "output" if q in self.outputs else "bulk"
            rows.append(f"{q},{x},{y},{role}")
        return "\n".join(rows) + "\n"


@dataclass
class Unfolded:
    circuit: Circuit
    layout: GridLayout
    origin: dict[tuple[int, int], tuple[int, int] | None]   # (2D layer, qubit) -> 1D wire after that op
    first: dict[int, tuple[int, int]]                 # qubit -> 1D wire just before its first op
    initial: frozenset = frozenset()                  # qubits live from the start (inputs, implicit |0>)

    def fault_map(self, f: FaultPattern) -> FaultPattern:
        """Fault on the unfolded circuit -> equivalent fault on the 1D source.

        A fault after layer t on qubit q moves back to just after q's most
        recent operation; its 1D wire is where q sits after that operation.
        Faults before a prepared qubit's preparation vanish."""
        ents = []
        for (t, q), p in f.items():
            s = t
            while s >= 0 and (s, q) not in self.origin:
                s -= 1
            if s >= 0:
                if self.origin[(s, q)] is not None:   # None: the qubit was discarded
                    ents.append((self.origin[(s, q)], p))
            elif q in self.initial:
                if q not in self.first:
                    raise ValueError(f"fault on qubit {q} has no 1D wire")
                ents.append((self.first[q], p))
        return FaultPattern(ents)


def _triple(pos: int) -> int:
    return pos // 3


def unfold_to_2d(c1d: Circuit) -> tuple[Circuit, GridLayout]:
    """Give every (re)initialisation a fresh qubit, delete the repositioning
    SWAPs inside each triple and schedule as early as possible."""
    u = unfold(c1d)
    return u.circuit, u.layout


def _is_reposition(o: Op) -> bool:
    return o.kind == GATE and o.gate == "SWAP" and _triple(o.qubits[0]) == _triple(o.qubits[1])


def unfold(c1d: Circuit) -> Unfolded:
    if c1d.n % 3:
        raise ValueError("unfolding expects the 3-qubits-per-wire teleported layout")
    ad = c1d.adaptive_layers()
    if ad and ad != [c1d.depth - 1]:
        raise ValueError("adaptive operations must be confined to the final layer")
    m = c1d.n // 3
    at = list(range(c1d.n))          # 1D position -> qubit id
    nid = c1d.n
    born: dict[int, tuple[int, int]] = {}   # id -> (slice, triple)
    used: set[int] = set()
    recs: list[tuple[int, Op, tuple[int, ...]]] = []   # (1D layer, op on ids, 1D positions)
    holders: dict[tuple[int, int], int] = {}
    cps: list[Op] = []
    last: dict[int, str] = {}        # id -> kind of its latest op
    inputs = set(c1d.inputs)
    for t, L in enumerate(c1d.layers):
        for o in L:
            if _is_reposition(o):
                a, b = o.qubits
                at[a], at[b] = at[b], at[a]
            elif o.kind == PREP:
                p = o.qubits[0]
                if (at[p] in used or at[p] in inputs) and last.get(at[p]) not in (MEAS, DISCARD):
                    # resetting a live qubit traces it out: discard the old qubit explicitly
                    recs.append((t, Op(DISCARD, (at[p],)), (p,)))
                at[p] = nid
                born[nid] = (t // TELEPORT_DEPTH, _triple(p))
                nid += 1
        for o in L:
            if _is_reposition(o):
                continue
            new = Op(o.kind, tuple(at[q] for q in o.qubits), o.gate, o.cbit, o.fn)
            if o.kind == CPAULI:
                cps.append(new)
                continue
            if o.kind != PREP:
                used.update(new.qubits)
            for q in new.qubits:
                last[q] = o.kind
            recs.append((t, new, o.qubits))
        if t % TELEPORT_DEPTH == TELEPORT_DEPTH - 1 or t == c1d.depth - 1:
            for k in range(m):
                holders[(t // TELEPORT_DEPTH, k)] = at[3 * k]
    out_ids = [at[q] for q in c1d.outputs]
    keep = used | set(out_ids) | set(c1d.inputs)
    # inputs on row 0; in slice s a triple's data holder goes to row 2s+2, its partner to 2s+1
    place: dict[int, tuple[int, int]] = {q: (_triple(q), 0) for q in c1d.inputs}
    # qubits that start in |0> without an explicit preparation: row 0, right of the triples
    implicit = sorted(q for q in keep if q < c1d.n and q not in place)
    place.update({q: (m + i, 0) for i, q in enumerate(implicit)})
    for q, (s, k) in born.items():
        if q in keep:
            place[q] = (k, 2 * s + 2 if holders.get((s, k)) == q else 2 * s + 1)
    order = sorted(keep, key=lambda q: (place[q][1], place[q][0]))
    ren = {q: i for i, q in enumerate(order)}
    ready = np.zeros(len(order), dtype=np.int64)
    layers: list[list[Op]] = []
    origin: dict[tuple[int, int], tuple[int, int]] = {}
    first: dict[int, tuple[int, int]] = {}
    for t, o, pos in recs:
        if o.kind == PREP and o.qubits[0] not in keep:
            continue
        qs = tuple(ren[q] for q in o.qubits)
        tt = int(ready[list(qs)].max())
        while len(layers) <= tt:
            layers.append([])
        layers[tt].append(Op(o.kind, qs, o.gate, o.cbit, o.fn))
        for q, p in zip(qs, pos):
            ready[q] = tt + 1
            first.setdefault(q, (t - 1, p))
            origin[(tt, q)] = None if o.kind == DISCARD else (t, p)
    if cps:
        layers.append([Op(o.kind, tuple(ren[q] for q in o.qubits), o.gate, o.cbit, o.fn) for o in cps])
    ins = tuple(ren[q] for q in c1d.inputs)
    outs = tuple(ren[q] for q in out_ids)
    if layers and any(o.kind in (MEAS, DISCARD) and o.qubits[0] in outs for o in layers[-1]):
        layers.append([])  # early scheduling moved an output's measurement into the final layer
    c2d = Circuit(len(order), ins, outs, c1d.cbits, tuple(tuple(L) for L in layers), c1d.program, "grid")
    c2d.audit()
    placement = {ren[q]: place[q] for q in order}
    lx = max(x for x, _ in placement.values()) + 1
    ly = max(y for _, y in placement.values()) + 1
    q1 = ins[0] if ins else outs[0]
    lay = GridLayout(lx, ly, placement, q1, outs[-1], ins, outs)
    initial = frozenset(ren[q] for q in keep if q < c1d.n)
    final_pos = {q: p for p, q in enumerate(at)}
    for q in initial - set(first):
        if order[q] not in final_pos:
            continue
        # never operated on: the fault can wait until the end
        first[q] = (c1d.depth - 1, final_pos[order[q]])
    return Unfolded(c2d, lay, origin, {q: w for q, w in first.items() if w[0] >= 0}, initial)


# ---------------------------------------------------------------------------
# decoder and the Bell-pair circuit


@dataclass
class CorrectionDecoder:
    """P(z): outcome record -> Pauli on (Q1, Q2), read off the final layer."""

    program: ClassicalProgram
    targets: tuple[int, int]
    xs: tuple[int, int]      # program node per target, -1 for constant 0
    zs: tuple[int, int]

    @classmethod
    def from_circuit(cls, c: Circuit, q1: int, q2: int) -> "CorrectionDecoder":
        prog = c.program.copy()
        xs, zs = {q1: -1, q2: -1}, {q1: -1, q2: -1}
        for o in (c.layers[-1] if c.depth else ()):
            if o.kind != CPAULI:
                continue
            if not isinstance(o.fn, ProgramRef):
                raise ValueError("final corrections must be program references")
            for i, q in enumerate(o.qubits):
                if q not in xs:
                    raise ValueError(f"final correction touches qubit {q} outside (Q1, Q2)")
                xs[q] = prog.xor(xs[q], o.fn.xs[i])
                zs[q] = prog.xor(zs[q], o.fn.zs[i])
        return cls(prog, (q1, q2), (xs[q1], xs[q2]), (zs[q1], zs[q2]))

    def roots(self) -> list[int]:
        return [i for i in self.xs + self.zs if i >= 0]

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        """bits: (cbits, ...) raw outcomes -> (4, ...) values x1, x2, z1, z2."""
        vals = self.program.evaluate(bits, self.roots())
        zero = np.zeros(bits.shape[1:], dtype=bits.dtype)
        return np.stack([vals[i] if i >= 0 else zero for i in self.xs + self.zs])

    def pauli(self, bits: np.ndarray) -> str:
        """Correction for one outcome record as a two-letter string."""
        v = self.evaluate(np.asarray(bits, dtype=np.uint8).reshape(-1, 1))[:, 0]
        return "".join("IXZY"[int(v[i]) | (int(v[2 + i]) << 1)] for i in range(2))

    def is_linear(self) -> bool:
        nodes = self.program.nodes
        return all(nodes[i][0] != "lut" for i in self.program.reachable(self.roots()))

    def linear_rows(self) -> list[int]:
        """GF(2) rows (bit masks over raw outcomes) of a lookup-free decoder."""
        if not self.is_linear():
            raise ValueError("decoder contains lookup tables")
        nodes = self.program.nodes
        memo: dict[int, int] = {}

        def row(i):
            if i < 0:
                return 0
            if i not in memo:
                nd = nodes[i]
                if nd[0] == "raw":
                    memo[i] = 1 << nd[1]
                else:
                    acc = 0
                    for j in nd[1]:
                        acc ^= row(j)
                    memo[i] = acc
            return memo[i]

        for i in self.program.reachable(self.roots()):
            row(i)
        return [row(i) for i in self.xs + self.zs]

    def to_text(self) -> str:
        """Tables in hex, then the nodes feeding the four outputs."""
        lines = [f"decoder targets={self.targets[0]},{self.targets[1]}"]
        used = self.program.reachable(self.roots())
        tabs = sorted({self.program.nodes[i][1] for i in used if self.program.nodes[i][0] == "lut"})
        for t in tabs:
            lines.append(f"table {t} " + "".join(f"{e:x}," for e in self.program.tables[t]).rstrip(","))
        for i in used:
            nd = self.program.nodes[i]
            if nd[0] == "raw":
                lines.append(f"node {i} raw {nd[1]}")
            elif nd[0] == "xor":
                lines.append(f"node {i} xor " + ",".join(map(str, nd[1])))
            else:
                lines.append(f"node {i} lut {nd[1]} " + ",".join(map(str, nd[2])) + f" bit={nd[3]}")
        lines.append("out x=" + ",".join(map(str, self.xs)) + " z=" + ",".join(map(str, self.zs)))
        return "\n".join(lines) + "\n"


@dataclass
class BellArtifacts:
    circuit: Circuit
    layout: GridLayout
    decoder: CorrectionDecoder
    source: Circuit            # 1D equivalent used for reference runs
    unfolded: Unfolded
    pipeline: Pipeline1D
    offset: int = 0            # layers of the circuit before the unfolded part

    def __iter__(self):
        return iter((self.circuit, self.layout, self.decoder))


def _bell_strip(u: Unfolded) -> tuple[Circuit, GridLayout]:
    """(C^2D (x) C^wait) o C^prep: Q1 sits just below the strip's input."""
    c2 = u.circuit
    n = c2.n + 1
    q1 = c2.n
    qin = c2.inputs[0]
    pre = [[prep(q1), prep(qin)], [gate("H", q1)], [gate("CNOT", q1, qin)]]
    body = [list(L) for L in c2.layers]
    layers = pre + body
    c = Circuit(n, (), (q1,) + c2.outputs, c2.cbits, tuple(tuple(L) for L in layers), c2.program, "grid")
    c.audit()
    place = {q: (x, y + 1) for q, (x, y) in u.layout.placement.items()}
    x0, _ = u.layout.placement[qin]
    place[q1] = (x0, 0)
    q2 = c2.outputs[0]
    lay = GridLayout(u.layout.lx, u.layout.ly + 1, place, q1, q2, (), (q1, q2))
    return c, lay


@lru_cache(maxsize=16)
def _build(variant: str, R: int, L: int) -> BellArtifacts:
    src = identity_strip(R) if variant == "bell_strip" else build_c_prep()
    pipe = pipeline_1d_res(src, L)
    u = unfold(pipe.circuit)
    if variant == "bell_strip":
        c, lay = _bell_strip(u)
        offset = 3
    else:
        c, lay, offset = u.circuit, u.layout, 0
    dec = CorrectionDecoder.from_circuit(c, lay.q1, lay.q2)
    return BellArtifacts(c, lay, dec, pipe.circuit, u, pipe, offset)


def build_c_bell(cfg: ProtocolConfig) -> BellArtifacts:
    """The one-shot Bell-pair circuit on the grid with its layout and decoder.

    bell_strip: a Bell pair whose second half is carried along R logical
    identity steps.  square_grid: the Bell preparation itself run through
    the pipeline (R does not enter the construction)."""
    R = cfg.R if cfg.variant == "bell_strip" else 3
    return _build(cfg.variant, R, cfg.L)


def structure_metrics(art: BellArtifacts) -> dict:
    """Structural numbers of a built protocol circuit.  Lifespan is measured
    on the 1D source, where qubits are reused; the unfolded circuit gives
    every preparation a fresh qubit."""
    c = art.circuit
    return {
        "N": c.n,
        "depth": c.depth,
        "unfolded_depth": art.unfolded.circuit.depth,
        "locations": locations(c)[0],
        "l_x": art.layout.lx,
        "l_y": art.layout.ly,
        "distance": art.layout.distance(),
        "lifespan": max_lifespan(art.source),
        "grid_errors": len(art.layout.validate(c)),
    }
