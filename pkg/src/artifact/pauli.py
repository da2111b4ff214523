"""Pauli group, Clifford actions and an exact stabilizer tableau.

A Pauli on n qubits is stored as ``i**k * X**x * Z**z`` where ``x`` and ``z``
are Python-int bit masks (bit j <-> qubit j).  The exponent ``k`` is the phase
relative to the bare ``X**x Z**z`` product, so a Hermitian Pauli has
``k = popcount(x & z) (mod 2)``.  ``PauliOperator.phase`` reports the phase
relative to the letter string instead (``Y = iXZ``), which is what humans read.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_PHASES = (1, 1j, -1, -1j)
_PHASE_STR = ("+", "+i", "-", "-i")


def popcount(v: int) -> int:
    return int(v).bit_count()


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    k: int = 0  # exponent of i relative to X^x Z^z

    def __post_init__(self):
        lim = 1 << self.n
        if self.x < 0 or self.z < 0 or self.x >= lim or self.z >= lim:
            raise DimensionError(f"mask wider than {self.n} qubits")
        object.__setattr__(self, "k", self.k % 4)

    # construction -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def from_string(cls, s: str) -> "PauliOperator":
        """Parse e.g. ``"-iXYZ"``; qubit 0 is the first letter."""
        s = s.strip()
        sign = 0
        for pre, val in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if s.startswith(pre):
                sign = val
                s = s[len(pre):]
                break
        x = z = 0
        for j, ch in enumerate(s):
            if ch in "XY":
                x |= 1 << j
            if ch in "ZY":
                z |= 1 << j
            if ch not in "IXYZ_":
                raise ValueError(f"bad Pauli letter {ch!r}")
        n = len(s)
        return cls(n, x, z, sign + popcount(x & z))

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> "PauliOperator":
        x = (1 << q) if letter in "XY" else 0
        z = (1 << q) if letter in "ZY" else 0
        return cls(n, x, z, 1 if letter == "Y" else 0)

    # views --------------------------------------------------------------
    @property
    def letter_k(self) -> int:
        return (self.k - popcount(self.x & self.z)) % 4

    @property
    def phase(self) -> complex:
        return _PHASES[self.letter_k]

    def letters(self) -> str:
        return "".join(_LETTER[((self.x >> j) & 1, (self.z >> j) & 1)] for j in range(self.n))

    def __str__(self) -> str:
        return _PHASE_STR[self.letter_k] + self.letters()

    def __repr__(self) -> str:
        return f"PauliOperator({self})"

    def letter(self, q: int) -> str:
        return _LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    @property
    def support(self) -> list[int]:
        m = self.x | self.z
        return [j for j in range(self.n) if (m >> j) & 1]

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0 and self.k == 0

    def is_hermitian(self) -> bool:
        return self.letter_k % 2 == 0

    def unsigned(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, popcount(self.x & self.z))

    # algebra -------------------------------------------------------------
    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return pauli_mul(self, other)

    def commutes(self, other: "PauliOperator") -> bool:
        if self.n != other.n:
            raise DimensionError("qubit counts differ")
        return (popcount(self.x & other.z) + popcount(self.z & other.x)) % 2 == 0

    def restrict(self, qubits: Sequence[int]) -> "PauliOperator":
        """Sub-Pauli on ``qubits`` (in that order), letter phase dropped."""
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << i
            z |= ((self.z >> q) & 1) << i
        return PauliOperator(len(qubits), x, z, popcount(x & z))

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliOperator":
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> i) & 1) << q
            z |= ((self.z >> i) & 1) << q
        return PauliOperator(n, x, z, self.letter_k + popcount(x & z))


def pauli_mul(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    if a.n != b.n:
        raise DimensionError(f"cannot multiply {a.n}- and {b.n}-qubit Paulis")
    # X^xa Z^za X^xb Z^zb = (-1)^{za.xb} X^(xa^xb) Z^(za^zb)
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z, a.k + b.k + 2 * popcount(a.z & b.x))


def symplectic_product(x1: int, z1: int, x2: int, z2: int) -> int:
    return (popcount(x1 & z2) + popcount(z1 & x2)) & 1


# ---------------------------------------------------------------------------
# gates

GATE_ARITY = {
    "I": 1, "X": 1, "Y": 1, "Z": 1, "H": 1, "S": 1, "SDG": 1,
    "CNOT": 2, "CZ": 2, "SWAP": 2,
}
PAULI_GATES = frozenset({"I", "X", "Y", "Z"})


def conjugate_gate(gate: str, qubits: Sequence[int], p: PauliOperator) -> PauliOperator:
    """Return ``G p G^dagger`` for a named gate."""
    x, z, k = p.x, p.z, p.k
    if gate == "CNOT":
        c, t = qubits
        xc, zt = (x >> c) & 1, (z >> t) & 1
        x ^= xc << t
        z ^= zt << c
        return PauliOperator(p.n, x, z, k)
    if gate == "CZ":
        a, b = qubits
        xa, xb = (x >> a) & 1, (x >> b) & 1
        # CZ X_a CZ = X_a Z_b ; reorder X^x Z^z picks up a sign when both x set
        k += 2 * (xa & xb)
        z ^= (xb << a) | (xa << b)
        return PauliOperator(p.n, x, z, k)
    if gate == "SWAP":
        a, b = qubits
        for m in ("x", "z"):
            v = x if m == "x" else z
            ba, bb = (v >> a) & 1, (v >> b) & 1
            if ba != bb:
                v ^= (1 << a) | (1 << b)
            if m == "x":
                x = v
            else:
                z = v
        return PauliOperator(p.n, x, z, k)
    (q,) = qubits
    xq, zq = (x >> q) & 1, (z >> q) & 1
    if gate == "I":
        return p
    if gate == "X":
        return PauliOperator(p.n, x, z, k + 2 * zq)
    if gate == "Z":
        return PauliOperator(p.n, x, z, k + 2 * xq)
    if gate == "Y":
        return PauliOperator(p.n, x, z, k + 2 * (xq ^ zq))
    if gate == "H":
        k += 2 * (xq & zq)
        if xq != zq:
            x ^= 1 << q
            z ^= 1 << q
        return PauliOperator(p.n, x, z, k)
    if gate == "S":
        return PauliOperator(p.n, x, z ^ (xq << q), k + xq)
    if gate == "SDG":
        # S^dag X S = -i XZ... tracked as S^3
        return conjugate_gate("S", qubits, conjugate_gate("S", qubits, conjugate_gate("S", qubits, p)))
    raise ValueError(f"unknown gate {gate}")


@dataclass(frozen=True)
class CliffordAction:
    """Images of X_0..X_{n-1}, Z_0..Z_{n-1} under conjugation."""

    n: int
    images: tuple[PauliOperator, ...]

    @classmethod
    def identity(cls, n: int) -> "CliffordAction":
        ims = [PauliOperator.single(n, j, "X") for j in range(n)]
        ims += [PauliOperator.single(n, j, "Z") for j in range(n)]
        return cls(n, tuple(ims))

    @classmethod
    def from_gates(cls, n: int, gates: Iterable[tuple[str, Sequence[int]]]) -> "CliffordAction":
        """Action of the product of ``gates`` applied first-to-last."""
        act = cls.identity(n)
        for g, qs in gates:
            act = act.then_gate(g, qs)
        return act

    def then_gate(self, gate: str, qubits: Sequence[int]) -> "CliffordAction":
        return CliffordAction(self.n, tuple(conjugate_gate(gate, qubits, im) for im in self.images))

    def conjugate(self, p: PauliOperator) -> PauliOperator:
        return clifford_conjugate(self, p)

    def then(self, other: "CliffordAction") -> "CliffordAction":
        """Apply self first, then other."""
        return CliffordAction(self.n, tuple(other.conjugate(im) for im in self.images))

    def is_symplectic(self) -> bool:
        n = self.n
        for a in range(2 * n):
            for b in range(2 * n):
                want = (a % n == b % n) and (a // n != b // n)
                if self.images[a].commutes(self.images[b]) == want:
                    return False
        return all(im.is_hermitian() for im in self.images)

    def symplectic_matrix(self) -> np.ndarray:
        n = self.n
        m = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        for a, im in enumerate(self.images):
            for j in range(n):
                m[a, j] = (im.x >> j) & 1
                m[a, n + j] = (im.z >> j) & 1
        return m

    def inverse(self) -> "CliffordAction":
        n = self.n
        m = self.symplectic_matrix().astype(np.int64)
        inv = _gf2_inv(m)
        ims = []
        for a in range(2 * n):
            x = z = 0
            for b in range(2 * n):
                if inv[a, b]:
                    if b < n:
                        x ^= 1 << b
                    else:
                        z ^= 1 << (b - n)
            cand = PauliOperator(n, x, z, popcount(x & z))
            # fix sign so that self.conjugate(cand) is exactly the generator
            img = self.conjugate(cand)
            gen = PauliOperator.single(n, a % n, "X" if a < n else "Z")
            if img.k != gen.k:
                cand = PauliOperator(n, x, z, cand.k + 2)
            ims.append(cand)
        return CliffordAction(n, tuple(ims))

    def __eq__(self, other):
        return isinstance(other, CliffordAction) and self.n == other.n and self.images == other.images

    def __hash__(self):
        return hash(self.images)


def clifford_conjugate(c: CliffordAction, p: PauliOperator) -> PauliOperator:
    if c.n != p.n:
        raise DimensionError("Clifford and Pauli sizes differ")
    out = PauliOperator(c.n, 0, 0, p.k)
    for j in range(c.n):
        if (p.x >> j) & 1:
            out = out * c.images[j]
    for j in range(c.n):
        if (p.z >> j) & 1:
            out = out * c.images[c.n + j]
    return out


def _gf2_inv(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    a = np.concatenate([m % 2, np.eye(n, dtype=np.int64)], axis=1)
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, n) if a[i, col]), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        a[[r, piv]] = a[[piv, r]]
        for i in range(n):
            if i != r and a[i, col]:
                a[i] ^= a[r]
        r += 1
    return a[:, n:]


# ---------------------------------------------------------------------------
# stabilizer tableau


class EntangledWithEnvironment(RuntimeError):
    pass


class StabilizerState:
    """Aaronson-Gottesman tableau with destabilizers and Z4 phases.

    Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers.  Each row
    is ``i**k X**x Z**z`` with ``x``/``z`` stored unpacked as uint8 columns so a
    whole layer of gates can be applied with one fancy-indexed update.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.k = np.zeros(2 * n, dtype=np.int64)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1

    def copy(self) -> "StabilizerState":
        s = StabilizerState.__new__(StabilizerState)
        s.n = self.n
        s.x, s.z, s.k = self.x.copy(), self.z.copy(), self.k.copy()
        return s

    # -- rows as Paulis
    def row(self, i: int) -> PauliOperator:
        x = int(sum(1 << j for j in np.flatnonzero(self.x[i])))
        z = int(sum(1 << j for j in np.flatnonzero(self.z[i])))
        return PauliOperator(self.n, x, z, int(self.k[i]))

    def stabilizers(self) -> list[PauliOperator]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliOperator]:
        return [self.row(i) for i in range(self.n)]

    # -- gates, vectorised over a set of disjoint qubits
    def h(self, qs) -> None:
        qs = np.atleast_1d(np.asarray(qs, dtype=np.intp))
        xq, zq = self.x[:, qs], self.z[:, qs]
        self.k += 2 * (xq & zq).sum(axis=1, dtype=np.int64)
        self.x[:, qs], self.z[:, qs] = zq, xq

    def s(self, qs) -> None:
        qs = np.atleast_1d(np.asarray(qs, dtype=np.intp))
        xq = self.x[:, qs]
        self.k += xq.sum(axis=1, dtype=np.int64)
        self.z[:, qs] ^= xq

    def sdg(self, qs) -> None:
        for _ in range(3):
            self.s(qs)

    def pauli_x(self, qs) -> None:
        qs = np.atleast_1d(np.asarray(qs, dtype=np.intp))
        self.k += 2 * self.z[:, qs].sum(axis=1, dtype=np.int64)

    def pauli_z(self, qs) -> None:
        qs = np.atleast_1d(np.asarray(qs, dtype=np.intp))
        self.k += 2 * self.x[:, qs].sum(axis=1, dtype=np.int64)

    def pauli_y(self, qs) -> None:
        qs = np.atleast_1d(np.asarray(qs, dtype=np.intp))
        self.k += 2 * (self.x[:, qs] ^ self.z[:, qs]).sum(axis=1, dtype=np.int64)

    def cnot(self, cs, ts) -> None:
        cs = np.atleast_1d(np.asarray(cs, dtype=np.intp))
        ts = np.atleast_1d(np.asarray(ts, dtype=np.intp))
        self.x[:, ts] ^= self.x[:, cs]
        self.z[:, cs] ^= self.z[:, ts]

    def cz(self, a_s, b_s) -> None:
        self.h(b_s)
        self.cnot(a_s, b_s)
        self.h(b_s)

    def swap(self, a_s, b_s) -> None:
        a_s = np.atleast_1d(np.asarray(a_s, dtype=np.intp))
        b_s = np.atleast_1d(np.asarray(b_s, dtype=np.intp))
        self.x[:, a_s], self.x[:, b_s] = self.x[:, b_s].copy(), self.x[:, a_s].copy()
        self.z[:, a_s], self.z[:, b_s] = self.z[:, b_s].copy(), self.z[:, a_s].copy()

    def apply_gate(self, gate: str, qubits: Sequence[int]) -> None:
        if gate == "I":
            return
        if GATE_ARITY[gate] == 1:
            {"X": self.pauli_x, "Y": self.pauli_y, "Z": self.pauli_z,
             "H": self.h, "S": self.s, "SDG": self.sdg}[gate](qubits[0])
        else:
            {"CNOT": self.cnot, "CZ": self.cz, "SWAP": self.swap}[gate](qubits[0], qubits[1])

    def apply_pauli(self, p: PauliOperator) -> None:
        if p.n != self.n:
            raise DimensionError("Pauli size differs from state")
        self.apply_masks(_bits(p.x, self.n), _bits(p.z, self.n))

    def apply_masks(self, px: np.ndarray, pz: np.ndarray) -> None:
        """Apply the Pauli X^px Z^pz (global phase ignored)."""
        # row R picks up -1 iff R anticommutes with P
        anti = (self.x.astype(np.int64) @ pz.astype(np.int64) + self.z.astype(np.int64) @ px.astype(np.int64)) & 1
        self.k += 2 * anti

    # -- row products
    def _rowmul_into(self, targets: np.ndarray, p: int) -> None:
        """row[t] <- row[t] * row[p] for each t in targets."""
        if targets.size == 0:
            return
        cross = (self.z[targets].astype(np.int64) & self.x[p].astype(np.int64)).sum(axis=1, dtype=np.int64)
        self.k[targets] += self.k[p] + 2 * cross
        self.x[targets] ^= self.x[p]
        self.z[targets] ^= self.z[p]

    def _product_of_rows(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        if rows.size == 0:
            return np.zeros(self.n, np.uint8), np.zeros(self.n, np.uint8), 0
        xs, zs = self.x[rows].astype(np.int64), self.z[rows].astype(np.int64)
        zprefix = np.bitwise_xor.accumulate(zs, axis=0)
        zprefix = np.vstack([np.zeros((1, self.n), np.int64), zprefix[:-1]])
        cross = int((zprefix & xs).sum())
        k = int(self.k[rows].sum()) + 2 * cross
        return (np.bitwise_xor.reduce(xs, axis=0).astype(np.uint8),
                np.bitwise_xor.reduce(zs, axis=0).astype(np.uint8), k % 4)

    # -- measurement
    def is_deterministic(self, q: int) -> bool:
        return not self.x[self.n:, q].any()

    def measure_z(self, q: int, rng=None, forced: int | None = None,
                  want_gauge: bool = False):
        """Measure Z_q.  Returns ``(bit, random, gauge)``.

        ``gauge`` (only when ``want_gauge``) is the pre-measurement stabilizer
        that anticommutes with Z_q as (x, z) uint8 arrays; applying it to the
        post-measurement state flips the outcome and nothing else.
        """
        n = self.n
        stab_hits = np.flatnonzero(self.x[n:, q]) + n
        if stab_hits.size:
            p = int(stab_hits[0])
            gauge = (self.x[p].copy(), self.z[p].copy()) if want_gauge else None
            others = np.flatnonzero(self.x[:, q])
            others = others[others != p]
            self._rowmul_into(others, p)
            self.x[p - n], self.z[p - n], self.k[p - n] = self.x[p], self.z[p], self.k[p]
            if forced is not None:
                bit = int(forced)
            elif rng is None:
                bit = 0
            else:
                bit = int(rng.integers(2))
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            self.k[p] = 2 * bit
            return bit, True, gauge
        rows = np.flatnonzero(self.x[:n, q]) + n
        _, _, k = self._product_of_rows(rows)
        bit = (k // 2) & 1
        return bit, False, None

    def reset(self, q: int, rng=None) -> None:
        bit, _, _ = self.measure_z(q, rng)
        if bit:
            self.pauli_x(q)

    # -- canonical form and membership
    def canonical(self) -> tuple[bytes, bytes, bytes]:
        return canonical_form(self.x[self.n:], self.z[self.n:], self.k[self.n:])

    def stabilizer_sign(self, px: np.ndarray, pz: np.ndarray) -> int | None:
        """If the Hermitian Pauli X^px Z^pz (letter phase +1) is in +-S
        return +1/-1, else None."""
        n = self.n
        anti_stab = ((self.x[n:].astype(np.int64) @ pz + self.z[n:].astype(np.int64) @ px) & 1)
        if anti_stab.any():
            return None
        rows = np.flatnonzero((self.x[:n].astype(np.int64) @ pz + self.z[:n].astype(np.int64) @ px) & 1) + n
        x, z, k = self._product_of_rows(rows)
        if not (np.array_equal(x, px) and np.array_equal(z, pz)):
            return None
        target = int((px.astype(np.int64) & pz).sum()) % 4  # phase of +letters
        d = (k - target) % 4
        return 1 if d == 0 else -1

    def reduced_group(self, keep: Sequence[int]):
        """Generators of the stabilizer subgroup supported on ``keep``."""
        return reduced_generators(self.x[self.n:], self.z[self.n:], self.k[self.n:], keep)


def _bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> j) & 1 for j in range(n)], dtype=np.uint8)


def _rref_rows(x: np.ndarray, z: np.ndarray, k: np.ndarray, col_order: list[tuple[str, int]]):
    """Gaussian elimination over the given (block, qubit) column order with
    exact phase tracking.  Returns reduced copies and the pivot rows."""
    x, z, k = x.astype(np.uint8).copy(), z.astype(np.uint8).copy(), k.astype(np.int64).copy()
    m = x.shape[0]
    r = 0
    pivots = []
    for blk, q in col_order:
        col = x[:, q] if blk == "x" else z[:, q]
        cand = np.flatnonzero(col[r:]) + r
        if cand.size == 0:
            continue
        piv = int(cand[0])
        if piv != r:
            x[[r, piv]] = x[[piv, r]]
            z[[r, piv]] = z[[piv, r]]
            k[[r, piv]] = k[[piv, r]]
        col = x[:, q] if blk == "x" else z[:, q]
        hits = np.flatnonzero(col)
        hits = hits[hits != r]
        if hits.size:
            cross = (z[hits].astype(np.int64) & x[r].astype(np.int64)).sum(axis=1, dtype=np.int64)
            k[hits] += k[r] + 2 * cross
            x[hits] ^= x[r]
            z[hits] ^= z[r]
        pivots.append((blk, q))
        r += 1
        if r == m:
            break
    return x, z, k % 4, r


def canonical_form(x: np.ndarray, z: np.ndarray, k: np.ndarray) -> tuple[bytes, bytes, bytes]:
    n = x.shape[1]
    order = [("x", q) for q in range(n)] + [("z", q) for q in range(n)]
    x2, z2, k2, r = _rref_rows(x, z, k, order)
    # letter-phase sign of each (Hermitian) row: 0 -> +, 2 -> -
    sign = (k2 - (x2.astype(np.int64) & z2).sum(axis=1, dtype=np.int64)) % 4
    return x2[:r].tobytes(), z2[:r].tobytes(), sign[:r].astype(np.uint8).tobytes()


def reduced_generators(x, z, k, keep: Sequence[int]):
    """Subgroup of the group generated by rows supported on ``keep``.

    Returns (x, z, sign) arrays over the kept columns (in ``keep`` order),
    in canonical RREF, signs as 0/1 for +/-.
    """
    n = x.shape[1]
    keep = list(keep)
    drop = [q for q in range(n) if q not in set(keep)]
    order = [("x", q) for q in drop] + [("z", q) for q in drop]
    x2, z2, k2, r = _rref_rows(x, z, k, order)
    rest = slice(r, None)
    xs, zs, ks = x2[rest][:, keep], z2[rest][:, keep], k2[rest]
    # rows past r have no support on dropped qubits
    m = len(keep)
    order = [("x", q) for q in range(m)] + [("z", q) for q in range(m)]
    x3, z3, k3, r3 = _rref_rows(xs, zs, ks, order)
    sign = ((k3 - (x3.astype(np.int64) & z3).sum(axis=1, dtype=np.int64)) % 4) // 2
    return x3[:r3], z3[:r3], sign[:r3].astype(np.uint8)


def tableau_apply(s: StabilizerState, gate: str, qubits: Sequence[int]) -> StabilizerState:
    for q in qubits:
        if not 0 <= q < s.n:
            raise IndexError(f"qubit {q} out of range")
    s.apply_gate(gate, qubits)
    return s


def tableau_measure_z(s: StabilizerState, q: int, rng=None) -> tuple[int, StabilizerState]:
    bit, _, _ = s.measure_z(q, rng)
    return bit, s


def bell_pair_status(s: StabilizerState, q1: int, q2: int) -> str:
    """'bell', 'wrong-sign', 'mixed' or 'other'."""
    n = s.n
    xx = np.zeros(n, np.uint8)
    xx[[q1, q2]] = 1
    zz = xx.copy()
    zero = np.zeros(n, np.uint8)
    sx = s.stabilizer_sign(xx, zero)
    sz = s.stabilizer_sign(zero, zz)
    if sx is not None and sz is not None:
        return "bell" if sx == 1 and sz == 1 else "wrong-sign"
    gx, gz, _ = s.reduced_group([q1, q2])
    if gx.shape[0] < 2:
        return "mixed"
    return "other"


def is_bell_pair(s: StabilizerState, q1: int, q2: int, strict: bool = False) -> bool:
    st = bell_pair_status(s, q1, q2)
    if strict and st == "mixed":
        raise EntangledWithEnvironment(f"qubits {q1},{q2} are entangled with the environment")
    return st == "bell"
