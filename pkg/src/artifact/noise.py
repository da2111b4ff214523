"""Local stochastic Pauli noise: fault patterns, sampling, propagation and
the constructive cleaning maps used by the compiler passes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import CPAULI, DISCARD, GATE, MEAS, PREP, Circuit, Linear, Rectangle
from .pauli import PauliOperator, conjugate_gate

LETTERS = ("X", "Y", "Z")
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_XZ = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def letter_mul(a: str, b: str) -> str:
    xa, za = _XZ[a]
    xb, zb = _XZ[b]
    return _FROM_XZ[(xa ^ xb, za ^ zb)]


class FaultPattern:
    """Sparse map wire (t, q) -> single-qubit Pauli letter, phases ignored."""

    __slots__ = ("_d",)

    def __init__(self, entries: Mapping[tuple[int, int], str] | Iterable = ()):
        d = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for (t, q), p in items:
            p = p.upper()
            if p not in LETTERS and p != "I":
                raise ValueError(f"bad Pauli letter {p!r}")
            cur = letter_mul(d.get((t, q), "I"), p)
            if cur == "I":
                d.pop((t, q), None)
            else:
                d[(int(t), int(q))] = cur
        self._d = d

    def __len__(self):
        return len(self._d)

    def __iter__(self):
        return iter(sorted(self._d.items()))

    def __getitem__(self, w):
        return self._d.get(w, "I")

    def __eq__(self, other):
        return isinstance(other, FaultPattern) and self._d == other._d

    def __repr__(self):
        return f"FaultPattern({dict(sorted(self._d.items()))})"

    def items(self):
        return sorted(self._d.items())

    @property
    def support(self) -> set[tuple[int, int]]:
        return set(self._d)

    def by_layer(self) -> dict[int, list[tuple[int, str]]]:
        out: dict[int, list[tuple[int, str]]] = {}
        for (t, q), p in self._d.items():
            out.setdefault(t, []).append((q, p))
        return out

    def restrict(self, wires) -> "FaultPattern":
        wires = set(wires)
        return FaultPattern({w: p for w, p in self._d.items() if w in wires})

    def check_within(self, c: Circuit) -> None:
        for t, q in self._d:
            if not (0 <= t < c.depth and 0 <= q < c.n):
                raise ValueError(f"fault wire ({t},{q}) outside the circuit")

    def to_text(self) -> str:
        return "".join(f"fault t={t} q={q} p={p}\n" for (t, q), p in self.items())

    @classmethod
    def from_text(cls, text: str) -> "FaultPattern":
        ents = []
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if toks[0] != "fault":
                raise ValueError(f"line {ln}: expected 'fault'")
            kv = dict(tok.split("=", 1) for tok in toks[1:])
            ents.append(((int(kv["t"]), int(kv["q"])), kv["p"]))
        return cls(ents)


def multiply(*fs: FaultPattern) -> FaultPattern:
    ents = []
    for f in fs:
        ents.extend(f.items())
    return FaultPattern(ents)


# ---------------------------------------------------------------------------
# noise specs and sampling


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"  # none | iid_depolarizing | iid_xz | iid_z | thermal
    p: float = 0.0
    p_x: float = 0.0
    p_z: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "iid_depolarizing", "iid_xz", "iid_z", "thermal"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        for v in (self.p, self.p_x, self.p_z):
            if not 0.0 <= v <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")

    @classmethod
    def depolarizing(cls, p: float) -> "NoiseSpec":
        return cls("iid_depolarizing", p=p)

    @property
    def is_zero(self) -> bool:
        return self.kind == "none" or (self.p == 0 and self.p_x == 0 and self.p_z == 0)


def prep_wires(c: Circuit) -> list[tuple[int, int]]:
    return [(t, o.qubits[0]) for t, L in enumerate(c.layers) for o in L if o.kind == PREP]


def _wire_pool(c: Circuit, spec: NoiseSpec) -> np.ndarray | None:
    """Flat wire indices t*n+q eligible for faults (None: every wire)."""
    if spec.kind == "thermal":
        return np.array([t * c.n + q for t, q in prep_wires(c)], dtype=np.int64)
    return None


def sample_wire_faults(c: Circuit, spec: NoiseSpec, rng: np.random.Generator,
                       pool: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sparse draw of an iid pattern: (flat wire indices t*n+q, letter codes 1=X 2=Y 3=Z).

    The number of faulty wires is binomial and their positions uniform
    without replacement, which is the same law as one coin per wire.
    """
    if spec.is_zero:
        return np.zeros(0, np.int64), np.zeros(0, np.int8)
    pool = _wire_pool(c, spec) if pool is None else pool
    N = c.depth * c.n if pool is None else pool.size
    if spec.kind == "iid_xz":
        px, pz = spec.p_x, spec.p_z
    elif spec.kind == "iid_z":
        px, pz = 0.0, spec.p
    elif spec.kind == "thermal":
        px, pz = spec.p, 0.0
    else:
        px = pz = None
    p_any = spec.p if px is None else 1.0 - (1.0 - px) * (1.0 - pz)
    k = int(rng.binomial(N, p_any)) if N else 0
    idx = rng.choice(N, size=k, replace=False) if k else np.zeros(0, np.int64)
    if px is None:
        letters = rng.integers(1, 4, size=k).astype(np.int8)
    else:
        # conditional law of (x, z) given at least one flip
        w = np.array([px * (1 - pz), px * pz, (1 - px) * pz]) / p_any
        letters = (rng.choice(3, size=k, p=w) + 1).astype(np.int8)
    if pool is not None:
        idx = pool[idx]
    return np.asarray(idx, np.int64), letters


def sample_noise(c: Circuit, spec: NoiseSpec, rng: np.random.Generator) -> FaultPattern:
    """Draw a fault pattern; each wire independently."""
    idx, letters = sample_wire_faults(c, spec, rng)
    n = max(c.n, 1)
    return FaultPattern({(int(i // n), int(i % n)): LETTERS[l - 1] for i, l in zip(idx, letters)})


# ---------------------------------------------------------------------------
# strength certificates


@dataclass
class StrengthCertificate:
    p: float
    trace: list[tuple[str, dict, float]] = field(default_factory=list)

    def then(self, name: str, **params) -> "StrengthCertificate":
        f = LEMMA_FORMULAS.get(name)
        if f is None:
            raise KeyError(f"unknown lemma formula {name!r}")
        q = min(1.0, f(self.p, **params))
        return StrengthCertificate(q, self.trace + [(name, params, q)])


def _union(p, r=2, ps=None):
    ps = ps if ps is not None else [p] * r
    return r * max(x ** (1.0 / r) for x in ps)


LEMMA_FORMULAS = {
    "union": _union,
    "propagation": lambda p, D: D * (2 * p ** (2.0 ** -(D - 1))) ** (1.0 / D),
    "unitary_cleaning": lambda p, delta: 2 * delta ** 0.5 * (2 * p ** (2.0 ** -(delta - 1))) ** (1.0 / (2 * delta)),
    "adaptive_cleaning": lambda p, U, V: 5 * (U * p) ** (1.0 / (5 * V)),
    "inflation": lambda p, m: 2 * (m + 1) ** 0.5 * p ** (1.0 / (2 * (m + 1))),
    "alternating_form": lambda p: 10 * p ** (1.0 / 64),
}


def certificate_chain(steps: Sequence[tuple[str, dict]], p0: float) -> StrengthCertificate:
    cert = StrengthCertificate(p0)
    for name, params in steps:
        cert = cert.then(name, **params)
    return cert


def multiply_certificate(ps: Sequence[float]) -> StrengthCertificate:
    r = len(ps)
    if r == 0:
        return StrengthCertificate(0.0)
    q = min(1.0, _union(0, r=r, ps=list(ps)))
    return StrengthCertificate(q, [("union", {"r": r, "ps": list(ps)}, q)])


# ---------------------------------------------------------------------------
# propagation and cleaning


class NonUnitaryError(ValueError):
    pass


class InvalidRectangle(ValueError):
    pass


def _frame_from(f: FaultPattern, t: int, qubits=None) -> dict[int, tuple[int, int]]:
    out = {}
    for (tt, q), p in f.items():
        if tt == t and (qubits is None or q in qubits):
            out[q] = _XZ[p]
    return out


def _push_layer(frame: dict[int, tuple[int, int]], c: Circuit, t: int, omega=None,
                flips: dict[int, int] | None = None, allow=("gate",)) -> dict[int, tuple[int, int]]:
    """Conjugate a per-qubit (x, z) frame through layer t restricted to omega."""
    if not frame:
        return frame
    qo = c.qubit_ops(t)
    out = dict(frame)
    done = set()
    for q in list(frame):
        o = qo.get(q)
        if o is None or o in done:
            continue
        done.add(o)
        if o.kind == GATE:
            qs = o.qubits
            n = len(qs)
            x = z = 0
            for i, qq in enumerate(qs):
                xi, zi = out.get(qq, (0, 0))
                x |= xi << i
                z |= zi << i
            p = conjugate_gate(o.gate, tuple(range(n)), PauliOperator(n, x, z, 0))
            for i, qq in enumerate(qs):
                v = ((p.x >> i) & 1, (p.z >> i) & 1)
                if v == (0, 0):
                    out.pop(qq, None)
                else:
                    out[qq] = v
        elif o.kind == MEAS and "meas" in allow:
            # an X before the measurement equals a flipped bit plus the same X after it
            xq, _ = out[q]
            if flips is not None and xq:
                flips[o.cbit] = flips.get(o.cbit, 0) ^ 1
        elif o.kind in (PREP, DISCARD) and "prep" in allow:
            out.pop(q)
        elif o.kind == CPAULI and "cpauli" in allow:
            pass  # Paulis commute with the frame up to sign
        else:
            raise NonUnitaryError(f"layer {t}: cannot push a fault through {o.kind}")
    return out


def propagate_to_end(c: Circuit, f: FaultPattern) -> FaultPattern:
    """Push every fault to the final-layer wires (unitary circuits only)."""
    if not c.is_unitary():
        raise NonUnitaryError("propagate_to_end needs a unitary circuit")
    f.check_within(c)
    layers = f.by_layer()
    frame: dict[int, tuple[int, int]] = {}
    for t in range(c.depth):
        if t > 0:
            frame = _push_layer(frame, c, t)
        for q, p in layers.get(t, []):
            x, z = _XZ[p]
            ox, oz = frame.get(q, (0, 0))
            v = (ox ^ x, oz ^ z)
            if v == (0, 0):
                frame.pop(q, None)
            else:
                frame[q] = v
    last = c.depth - 1
    return FaultPattern({(last, q): _FROM_XZ[v] for q, v in frame.items()})


def _check_rects(c: Circuit, rects: Sequence[Rectangle]) -> None:
    cells = set()
    for r in rects:
        if not r.is_valid(c):
            raise InvalidRectangle(f"rectangle at t={r.t} crosses its boundary or leaves the circuit")
        for t in range(r.t, r.t + r.delta + 1):
            for q in r.omega:
                if (t, q) in cells and not (t == r.t or t == r.t + r.delta):
                    raise InvalidRectangle("rectangles overlap")
                cells.add((t, q))


def clean_unitary_rects(c: Circuit, f: FaultPattern, rects: Sequence[Rectangle]) -> FaultPattern:
    """Move faults on each rectangle's left boundary and interior to its right
    boundary by conjugating through the rectangle's gates."""
    _check_rects(c, rects)
    for r in rects:
        if not r.is_unitary(c):
            raise InvalidRectangle("clean_unitary_rects needs unitary rectangles")
    return _clean(c, f, rects, allow=("gate",))


def _clean(c: Circuit, f: FaultPattern, rects, allow, compensate=None) -> FaultPattern:
    ents = dict(f.items())
    for r in rects:
        frame: dict[int, tuple[int, int]] = {}
        flips: dict[int, int] = {}
        for t in range(r.t, r.t + r.delta):
            if t > r.t:
                frame = _push_layer(frame, c, t, flips=flips, allow=allow)
            for q in r.omega:
                p = ents.pop((t, q), None)
                if p is None:
                    continue
                x, z = _XZ[p]
                ox, oz = frame.get(q, (0, 0))
                v = (ox ^ x, oz ^ z)
                if v == (0, 0):
                    frame.pop(q, None)
                else:
                    frame[q] = v
        frame = _push_layer(frame, c, r.t + r.delta, flips=flips, allow=allow)
        if compensate is not None:
            for q, v in compensate(r, flips).items():
                ox, oz = frame.get(q, (0, 0))
                frame[q] = (ox ^ v[0], oz ^ v[1])
        tr = r.t + r.delta
        for q, v in frame.items():
            cur = _XZ[ents.get((tr, q), "I")]
            nv = (cur[0] ^ v[0], cur[1] ^ v[1])
            if nv == (0, 0):
                ents.pop((tr, q), None)
            else:
                ents[(tr, q)] = _FROM_XZ[nv]
    return FaultPattern(ents)


def clean_adaptive_rects(c: Circuit, f: FaultPattern, rects: Sequence[Rectangle]) -> FaultPattern:
    """Cleaning for depth-2 measure-then-correct rectangles.

    Layer t+1 measures omega1 (and may act on omega2 with gates), layer t+2
    applies Linear corrections to omega2 and re-prepares omega1.  Faults
    inside are moved to the right boundary; X-type faults before a measurement
    flip its bit, which is compensated by P(e) on the right boundary.
    """
    _check_rects(c, rects)
    bit_use = {}
    for t, L in enumerate(c.layers):
        for o in L:
            if o.kind == CPAULI:
                for b in getattr(o.fn, "src", ()):
                    bit_use.setdefault(b, []).append(t)
    for r in rects:
        if r.delta != 2:
            raise InvalidRectangle("adaptive rectangles have depth 2")
        for o in c.layers[r.t + 2]:
            if o.kind == CPAULI and o.qubits[0] in r.omega:
                if not isinstance(o.fn, Linear):
                    raise InvalidRectangle("adaptive rectangle correction is not Linear")
                for b in o.fn.src:
                    if bit_use.get(b) != [r.t + 2]:
                        raise InvalidRectangle(f"classical bit c{b} is not read-once")

    def compensate(r, flips):
        out: dict[int, tuple[int, int]] = {}
        for o in c.layers[r.t + 2]:
            if o.kind == CPAULI and o.qubits[0] in r.omega:
                e = [flips.get(b, 0) for b in o.fn.src]
                xm, zm = o.fn.pauli(e)
                for i, q in enumerate(o.qubits):
                    v = ((xm >> i) & 1, (zm >> i) & 1)
                    if v != (0, 0):
                        ox, oz = out.get(q, (0, 0))
                        out[q] = (ox ^ v[0], oz ^ v[1])
        return out

    return _clean(c, f, rects, allow=("gate", "meas", "prep", "cpauli"), compensate=compensate)


def push_through(c: Circuit, f: FaultPattern, t_from: int, t_to: int, omega) -> tuple[FaultPattern, dict[int, int]]:
    """Generic forward push of faults on omega, wires t_from..t_to-1, to t_to.

    Handles gates, measurements (recording flipped bits), preparations and
    controlled Paulis.  Faults outside the window are returned unchanged.
    """
    r = Rectangle(frozenset(omega), t_from, t_to - t_from)
    flips_all: dict[int, int] = {}

    def comp(rr, flips):
        flips_all.update(flips)
        return {}
    out = _clean(c, f, [r], allow=("gate", "meas", "prep", "cpauli"), compensate=comp)
    return out, flips_all
