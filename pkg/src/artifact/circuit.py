"""Layered adaptive-Clifford circuits.

Layers store only their non-wait operations; every qubit not touched in a
layer is implicitly waiting there.  ``Circuit.ops(t)`` materialises the waits so
callers (locations, noise, serialisation) always see a full cover of the
qubits.  Layer and wire indices are 0-based: wire ``(t, q)`` sits right after
layer ``t``.

Classical post-processing lives in three ClassicalFunction variants.  Linear
and Lookup read raw measurement bits directly; ProgramRef reads nodes of the
circuit-wide ClassicalProgram, a straight-line program of XOR and table-bit
nodes that passes use to compose corrections symbolically.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .pauli import GATE_ARITY, popcount

PREP, MEAS, GATE, CPAULI, WAIT, DISCARD = "prep0", "measz", "gate", "cpauli", "wait", "discard"


# ---------------------------------------------------------------------------
# classical functions


def _parity_rows(rows: Sequence[int], zbits: np.ndarray) -> np.ndarray:
    """rows[j] is a bitmask over source index; zbits has shape (k, W)."""
    out = np.zeros((len(rows),) + zbits.shape[1:], dtype=zbits.dtype)
    for j, r in enumerate(rows):
        i = 0
        while r:
            if r & 1:
                out[j] ^= zbits[i]
            r >>= 1
            i += 1
    return out


@dataclass(frozen=True)
class Linear:
    """P(z) = X(Az) Z(Bz); row j of A/B is a bitmask over ``src`` positions."""

    A: tuple[int, ...]
    B: tuple[int, ...]
    src: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.A)

    def masks(self, zbits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _parity_rows(self.A, zbits), _parity_rows(self.B, zbits)

    def pauli(self, z: Sequence[int]) -> tuple[int, int]:
        """x/z masks over targets for a concrete source vector."""
        v = sum(int(b) << i for i, b in enumerate(z))
        xm = sum((popcount(r & v) & 1) << j for j, r in enumerate(self.A))
        zm = sum((popcount(r & v) & 1) << j for j, r in enumerate(self.B))
        return xm, zm


@dataclass(frozen=True)
class Lookup:
    """table[index] = (xmask, zmask) over targets, index = sum z_i 2^i."""

    table: tuple[tuple[int, int], ...]
    src: tuple[int, ...]
    width: int

    def __post_init__(self):
        if len(self.table) != 1 << len(self.src):
            raise ValueError("Lookup table must cover all 2^k inputs")

    def pauli(self, z: Sequence[int]) -> tuple[int, int]:
        return self.table[sum(int(b) << i for i, b in enumerate(z))]

    def masks(self, zbits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return lut_eval(np.array([x | (zz << self.width) for x, zz in self.table], dtype=np.int64),
                        zbits, 2 * self.width, split=self.width)


@dataclass(frozen=True)
class ProgramRef:
    """Per-target X and Z bits given by ClassicalProgram node ids (-1 = 0)."""

    xs: tuple[int, ...]
    zs: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.xs)


ClassicalFunction = Linear | Lookup | ProgramRef


def lut_eval(entries: np.ndarray, zbits: np.ndarray, nbits: int, split: int | None = None):
    """Table lookup on packed shots.

    zbits: (k, W) uint64 packed source bits.  Returns (nbits, W) packed output
    bits, or the X/Z halves if ``split`` is given.
    """
    k, W = zbits.shape[0], zbits.shape[1] if zbits.ndim > 1 else 1
    if zbits.dtype == np.uint64:
        unpacked = np.unpackbits(zbits.view(np.uint8).reshape(k, -1), axis=1, bitorder="little")
        idx = np.zeros(unpacked.shape[1], dtype=np.int64)
        for i in range(k):
            idx |= unpacked[i].astype(np.int64) << i
        vals = entries[idx]
        outbits = np.zeros((nbits, unpacked.shape[1]), dtype=np.uint8)
        for b in range(nbits):
            outbits[b] = (vals >> b) & 1
        packed = np.packbits(outbits, axis=1, bitorder="little").view(np.uint64).reshape(nbits, W)
    else:
        idx = np.zeros(zbits.shape[1:], dtype=np.int64)
        for i in range(k):
            idx |= zbits[i].astype(np.int64) << i
        vals = entries[idx]
        packed = np.stack([((vals >> b) & 1).astype(zbits.dtype) for b in range(nbits)]) if nbits else \
            np.zeros((0,) + zbits.shape[1:], zbits.dtype)
    if split is None:
        return packed
    return packed[:split], packed[split:]


class ClassicalProgram:
    """Append-only straight-line program over raw measurement bits.

    node kinds: ("raw", bit) | ("xor", (n1, n2, ...)) | ("lut", table, (srcs), bit)
    Node ids are topologically ordered.
    """

    def __init__(self, nodes=None, tables=None):
        self.nodes: list[tuple] = list(nodes or [])
        self.tables: list[tuple[int, ...]] = list(tables or [])
        self._raw: dict[int, int] = {}
        self._xor: dict[tuple, int] = {}
        for i, nd in enumerate(self.nodes):
            if nd[0] == "raw":
                self._raw[nd[1]] = i

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        return isinstance(other, ClassicalProgram) and self.nodes == other.nodes and self.tables == other.tables

    def copy(self) -> "ClassicalProgram":
        return ClassicalProgram(self.nodes, self.tables)

    def raw(self, bit: int) -> int:
        if bit not in self._raw:
            self._raw[bit] = len(self.nodes)
            self.nodes.append(("raw", bit))
        return self._raw[bit]

    def xor(self, *ids: int) -> int:
        """XOR of nodes; -1 means constant 0.  Returns -1 or a node id."""
        cnt = Counter(i for i in ids if i >= 0)
        terms = tuple(sorted(i for i, c in cnt.items() if c % 2))
        if not terms:
            return -1
        if len(terms) == 1:
            return terms[0]
        if terms not in self._xor:
            self._xor[terms] = len(self.nodes)
            self.nodes.append(("xor", terms))
        return self._xor[terms]

    def add_table(self, entries: Sequence[int]) -> int:
        self.tables.append(tuple(int(e) for e in entries))
        return len(self.tables) - 1

    def lut(self, table: int, srcs: Sequence[int], bit: int) -> int:
        self.nodes.append(("lut", table, tuple(srcs), bit))
        return len(self.nodes) - 1

    def raw_bits(self) -> set[int]:
        return {nd[1] for nd in self.nodes if nd[0] == "raw"}

    def reachable(self, roots: Iterable[int]) -> list[int]:
        seen = set()
        stack = [r for r in roots if r >= 0]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            nd = self.nodes[i]
            if nd[0] == "xor":
                stack.extend(nd[1])
            elif nd[0] == "lut":
                stack.extend(s for s in nd[2] if s >= 0)
        return sorted(seen)

    def evaluate(self, raw: np.ndarray, roots: Iterable[int]) -> dict[int, np.ndarray]:
        """Evaluate the nodes needed for ``roots``.

        raw: (K, ...) array of raw bit values (bool/uint8 or packed uint64).
        """
        vals: dict[int, np.ndarray] = {}
        zero = np.zeros(raw.shape[1:], dtype=raw.dtype)
        lut_cache: dict[tuple, np.ndarray] = {}
        for i in self.reachable(roots):
            nd = self.nodes[i]
            if nd[0] == "raw":
                vals[i] = raw[nd[1]]
            elif nd[0] == "xor":
                acc = vals[nd[1][0]].copy()
                for j in nd[1][1:]:
                    acc ^= vals[j]
                vals[i] = acc
            else:
                _, tab, srcs, bit = nd
                key = (tab, srcs)
                if key not in lut_cache:
                    entries = np.asarray(self.tables[tab], dtype=np.int64)
                    nb = int(entries.max()).bit_length() if entries.size else 0
                    zb = np.stack([vals[s] if s >= 0 else zero for s in srcs]) if srcs else \
                        np.zeros((0,) + raw.shape[1:], raw.dtype)
                    lut_cache[key] = lut_eval(entries, zb, max(nb, 1))
                out = lut_cache[key]
                vals[i] = out[bit] if bit < out.shape[0] else zero.copy()
        return vals

    def extend_from(self, other: "ClassicalProgram", raw_map, node_map: dict[int, int] | None = None) -> dict[int, int]:
        """Copy ``other``'s nodes into self.  ``raw_map(bit)`` gives the node id
        that a raw bit of ``other`` becomes.  Returns old->new node ids."""
        node_map = {} if node_map is None else node_map
        tab_map: dict[int, int] = {}
        for i, nd in enumerate(other.nodes):
            if i in node_map:
                continue
            if nd[0] == "raw":
                node_map[i] = raw_map(nd[1])
            elif nd[0] == "xor":
                node_map[i] = self.xor(*(node_map[j] for j in nd[1]))
            else:
                _, tab, srcs, bit = nd
                if tab not in tab_map:
                    tab_map[tab] = self.add_table(other.tables[tab])
                node_map[i] = self.lut(tab_map[tab], [node_map[s] if s >= 0 else -1 for s in srcs], bit)
        return node_map


def function_to_program(fn, prog: ClassicalProgram, bit_node) -> ProgramRef:
    """Express any ClassicalFunction as nodes of ``prog``.

    ``bit_node(raw_bit)`` maps a raw source bit to a node id (or -1)."""
    if isinstance(fn, ProgramRef):
        return fn
    srcs = [bit_node(b) for b in fn.src]
    if isinstance(fn, Linear):
        xs, zs = [], []
        for rows, out in ((fn.A, xs), (fn.B, zs)):
            for r in rows:
                out.append(prog.xor(*(srcs[i] for i in range(len(srcs)) if (r >> i) & 1)))
        return ProgramRef(tuple(xs), tuple(zs))
    w = fn.width
    entries = [x | (z << w) for x, z in fn.table]
    tab = prog.add_table(entries)
    xs = tuple(prog.lut(tab, srcs, j) for j in range(w))
    zs = tuple(prog.lut(tab, srcs, w + j) for j in range(w))
    return ProgramRef(xs, zs)


# ---------------------------------------------------------------------------
# operations


@dataclass(frozen=True)
class Op:
    kind: str
    qubits: tuple[int, ...]
    gate: str | None = None
    cbit: int | None = None
    fn: object = None

    def __post_init__(self):
        if self.kind == GATE:
            if self.gate not in GATE_ARITY:
                raise ValueError(f"unknown gate {self.gate}")
            if GATE_ARITY[self.gate] != len(self.qubits):
                raise ValueError(f"{self.gate} acts on {GATE_ARITY[self.gate]} qubits")
            if len(set(self.qubits)) != len(self.qubits):
                raise ValueError("repeated qubit in gate")
        elif self.kind == CPAULI:
            if self.fn is None or self.fn.width != len(self.qubits):
                raise ValueError("controlled Pauli width does not match its targets")
        elif len(self.qubits) != 1:
            raise ValueError(f"{self.kind} acts on one qubit")

    def relabel(self, qmap, cshift: int = 0, fn_map=None) -> "Op":
        qs = tuple(qmap[q] for q in self.qubits)
        cb = None if self.cbit is None else self.cbit + cshift
        fn = self.fn
        if fn is not None:
            fn = fn_map(fn) if fn_map else fn
        return Op(self.kind, qs, self.gate, cb, fn)

    @property
    def is_unitary(self) -> bool:
        return self.kind in (GATE, WAIT)


def prep(q: int) -> Op:
    return Op(PREP, (q,))


def meas(q: int, c: int) -> Op:
    return Op(MEAS, (q,), cbit=c)


def gate(name: str, *qs: int) -> Op:
    return Op(GATE, tuple(qs), gate=name.upper())


def wait(q: int) -> Op:
    return Op(WAIT, (q,))


def discard(q: int) -> Op:
    return Op(DISCARD, (q,))


def cpauli(fn, targets: Sequence[int]) -> Op:
    return Op(CPAULI, tuple(targets), fn=fn)


def fn_sources(fn) -> tuple[int, ...]:
    return tuple(fn.src) if isinstance(fn, (Linear, Lookup)) else ()


# ---------------------------------------------------------------------------
# circuit


class CircuitError(ValueError):
    pass


@dataclass(eq=False)
class Circuit:
    n: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    cbits: int
    layers: tuple[tuple[Op, ...], ...]
    program: ClassicalProgram = field(default_factory=ClassicalProgram)
    graph: str | None = None

    def __post_init__(self):
        self.inputs = tuple(self.inputs)
        self.outputs = tuple(self.outputs)
        self.layers = tuple(tuple(sorted((o for o in L if o.kind != WAIT), key=lambda o: o.qubits))
                            for L in self.layers)

    # -- basic views
    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def n_in(self) -> int:
        return len(self.inputs)

    @property
    def n_out(self) -> int:
        return len(self.outputs)

    def ops(self, t: int, waits: bool = True) -> list[Op]:
        L = list(self.layers[t])
        if waits:
            used = {q for o in L for q in o.qubits}
            L += [Op(WAIT, (q,)) for q in range(self.n) if q not in used]
            L.sort(key=lambda o: o.qubits)
        return L

    def op_at(self, t: int, q: int) -> Op:
        for o in self.layers[t]:
            if q in o.qubits:
                return o
        return Op(WAIT, (q,))

    def qubit_ops(self, t: int) -> dict[int, Op]:
        return {q: o for o in self.layers[t] for q in o.qubits}

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.n, self.inputs, self.outputs, self.cbits, self.layers, self.program) == \
            (other.n, other.inputs, other.outputs, other.cbits, other.layers, other.program)

    def __repr__(self):
        return f"Circuit(n={self.n}, depth={self.depth}, in={len(self.inputs)}, out={len(self.outputs)}, cbits={self.cbits})"

    def replace(self, **kw) -> "Circuit":
        d = dict(n=self.n, inputs=self.inputs, outputs=self.outputs, cbits=self.cbits,
                 layers=self.layers, program=self.program, graph=self.graph)
        d.update(kw)
        return Circuit(**d)

    # -- structure
    def measured_qubit_of_bit(self) -> dict[int, tuple[int, int]]:
        out = {}
        for t, L in enumerate(self.layers):
            for o in L:
                if o.kind == MEAS:
                    out[o.cbit] = (t, o.qubits[0])
        return out

    def is_unitary(self) -> bool:
        return all(o.kind == GATE for L in self.layers for o in L)

    def adaptive_layers(self) -> list[int]:
        return [t for t, L in enumerate(self.layers) if any(o.kind == CPAULI for o in L)]

    def audit(self) -> None:
        """Check layer disjointness, classical causality and io rules."""
        written: dict[int, int] = {}
        written_all = {o.cbit: t for t, L in enumerate(self.layers) for o in L if o.kind == MEAS}
        node_t = None
        for t, L in enumerate(self.layers):
            seen: set[int] = set()
            for o in L:
                for q in o.qubits:
                    if not 0 <= q < self.n:
                        raise CircuitError(f"layer {t}: qubit {q} out of range")
                    if q in seen:
                        raise CircuitError(f"layer {t}: qubit {q} used twice")
                    seen.add(q)
            for o in L:
                if o.kind == MEAS:
                    if o.cbit in written or not 0 <= o.cbit < self.cbits:
                        raise CircuitError(f"layer {t}: classical bit c{o.cbit} written twice or out of range")
                    written[o.cbit] = t
            for o in L:
                if o.kind == CPAULI:
                    for b in fn_sources(o.fn):
                        if written.get(b, t) >= t:
                            raise CircuitError(f"layer {t}: classical bit c{b} read before it is written")
                    if isinstance(o.fn, ProgramRef):
                        if node_t is None:
                            node_t = self._node_times(written_all)
                        for i in o.fn.xs + o.fn.zs:
                            if i >= 0 and node_t[i] >= t:
                                raise CircuitError(f"layer {t}: classical node {i} read before it is written")
        if self.layers:
            for o in self.layers[0]:
                if o.kind == PREP and o.qubits[0] in self.inputs:
                    raise CircuitError("input qubit prepared in the first layer")
            for o in self.layers[-1]:
                if o.kind in (MEAS, DISCARD) and o.qubits[0] in self.outputs:
                    raise CircuitError("output qubit measured in the final layer")
        for q in list(self.inputs) + list(self.outputs):
            if not 0 <= q < self.n:
                raise CircuitError(f"io qubit {q} out of range")

    def _node_times(self, written: dict[int, int]) -> list[int]:
        """Layer by which each program node is computable (inf if never)."""
        big = 1 << 60
        out = []
        for nd in self.program.nodes:
            if nd[0] == "raw":
                out.append(written.get(nd[1], big))
            elif nd[0] == "xor":
                out.append(max(out[j] for j in nd[1]))
            else:
                out.append(max([out[j] for j in nd[2] if j >= 0], default=-1))
        return out

    # -- locations and wires
    def n_locations(self) -> int:
        tot = 0
        for L in self.layers:
            used = sum(len(o.qubits) for o in L)
            tot += len(L) + (self.n - used)
        return tot

    def wires(self) -> Iterator[tuple[int, int]]:
        for t in range(self.depth):
            for q in range(self.n):
                yield t, q


def locations(c: Circuit) -> tuple[int, Iterator[tuple[int, Op]]]:
    """Location count (gates, preps, measurements, waits) and an iterator."""
    def it():
        for t in range(c.depth):
            for o in c.ops(t):
                if o.kind != CPAULI:
                    yield t, o
    cnt = sum(1 for t in range(c.depth) for o in c.layers[t] if o.kind == CPAULI)
    return c.n_locations() - cnt, it()


# ---------------------------------------------------------------------------
# builder


class CircuitBuilder:
    """Mutable helper: append layers, allocate classical bits."""

    def __init__(self, n: int, inputs=(), outputs=(), program: ClassicalProgram | None = None):
        self.n = n
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.layers: list[list[Op]] = []
        self.cbits = 0
        self.program = program if program is not None else ClassicalProgram()

    def new_bit(self) -> int:
        self.cbits += 1
        return self.cbits - 1

    def layer(self, ops: Iterable[Op] = ()) -> list[Op]:
        L = [o for o in ops if o.kind != WAIT]
        self.layers.append(L)
        return L

    def waits(self, k: int = 1) -> None:
        for _ in range(k):
            self.layers.append([])

    def build(self, audit: bool = True, graph: str | None = None) -> Circuit:
        c = Circuit(self.n, self.inputs, self.outputs, self.cbits, tuple(tuple(L) for L in self.layers),
                    self.program, graph)
        if audit:
            c.audit()
        return c


def identity_circuit(n: int, depth: int = 0) -> Circuit:
    qs = tuple(range(n))
    return Circuit(n, qs, qs, 0, tuple(() for _ in range(depth)))


# ---------------------------------------------------------------------------
# relabelling, composition, tensor


def _fn_remap(fn, cshift: int, node_map: dict[int, int]):
    if isinstance(fn, Linear):
        return Linear(fn.A, fn.B, tuple(b + cshift for b in fn.src))
    if isinstance(fn, Lookup):
        return Lookup(fn.table, tuple(b + cshift for b in fn.src), fn.width)
    return ProgramRef(tuple(node_map.get(i, -1) if i >= 0 else -1 for i in fn.xs),
                      tuple(node_map.get(i, -1) if i >= 0 else -1 for i in fn.zs))


def embed_into(target: CircuitBuilder | None, c: Circuit, qmap: Sequence[int], t0: int,
               layers: list[list[Op]], program: ClassicalProgram, cshift: int) -> dict[int, int]:
    """Write c's ops into ``layers`` starting at ``t0`` with qubit map qmap.

    Returns the map from c's program nodes to nodes of ``program``."""
    node_map = program.extend_from(c.program, lambda b: program.raw(b + cshift))
    while len(layers) < t0 + c.depth:
        layers.append([])
    for t, L in enumerate(c.layers):
        for o in L:
            layers[t0 + t].append(o.relabel(qmap, cshift, lambda f: _fn_remap(f, cshift, node_map)))
    return node_map


def compose(a: Circuit, b: Circuit, wiring: Sequence[int] | None = None) -> Circuit:
    """Run ``a`` then ``b``; b's inputs are fed by a's outputs in order.

    ``wiring`` optionally gives, for each qubit of ``b``, the qubit of the
    result it lives on (must send b.inputs to a.outputs).  By default b's
    non-input qubits become fresh qubits appended after a's.
    """
    if a.n_out != b.n_in:
        raise CircuitError(f"arity mismatch: {a.n_out} outputs feed {b.n_in} inputs")
    if wiring is None:
        qmap = {}
        for i, q in enumerate(b.inputs):
            qmap[q] = a.outputs[i]
        nxt = a.n
        for q in range(b.n):
            if q not in qmap:
                qmap[q] = nxt
                nxt += 1
        n = nxt
        wmap = [qmap[q] for q in range(b.n)]
    else:
        wmap = list(wiring)
        for i, q in enumerate(b.inputs):
            if wmap[q] != a.outputs[i]:
                raise CircuitError("wiring does not send b's inputs to a's outputs")
        n = max([a.n] + [w + 1 for w in wmap])
    prog = a.program.copy()
    layers = [list(L) for L in a.layers]
    embed_into(None, b, wmap, a.depth, layers, prog, a.cbits)
    c = Circuit(n, a.inputs, tuple(wmap[q] for q in b.outputs), a.cbits + b.cbits,
                tuple(tuple(L) for L in layers), prog)
    return c


def tensor(*cs: Circuit) -> Circuit:
    if not cs:
        return identity_circuit(0)
    n = sum(c.n for c in cs)
    depth = max(c.depth for c in cs)
    prog = ClassicalProgram()
    layers: list[list[Op]] = [[] for _ in range(depth)]
    ins, outs = [], []
    qoff = coff = 0
    for c in cs:
        qmap = [q + qoff for q in range(c.n)]
        embed_into(None, c, qmap, 0, layers, prog, coff)
        ins += [q + qoff for q in c.inputs]
        outs += [q + qoff for q in c.outputs]
        qoff += c.n
        coff += c.cbits
    return Circuit(n, tuple(ins), tuple(outs), coff, tuple(tuple(L) for L in layers), prog)


def relabel(c: Circuit, qmap: Sequence[int], n: int | None = None) -> Circuit:
    n = n if n is not None else max(qmap) + 1
    layers = [[o.relabel(qmap) for o in L] for L in c.layers]
    return Circuit(n, tuple(qmap[q] for q in c.inputs), tuple(qmap[q] for q in c.outputs), c.cbits,
                   tuple(tuple(L) for L in layers), c.program, c.graph)


# ---------------------------------------------------------------------------
# interaction graphs and rectangles


@dataclass(frozen=True)
class InteractionGraph:
    n: int
    edges: frozenset
    name: str = ""
    coloring: tuple = ()  # tuple of frozensets of edges

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    @property
    def max_degree(self) -> int:
        deg = Counter()
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return max(deg.values(), default=0)

    def is_proper_coloring(self, coloring=None) -> bool:
        coloring = coloring if coloring is not None else self.coloring
        allc = set()
        for cls in coloring:
            verts = Counter(v for e in cls for v in e)
            if any(c > 1 for c in verts.values()):
                return False
            allc |= set(cls)
        return allc == set(self.edges)

    @classmethod
    def path(cls, n: int) -> "InteractionGraph":
        edges = frozenset((i, i + 1) for i in range(n - 1))
        col = (frozenset(e for e in edges if e[0] % 2 == 0), frozenset(e for e in edges if e[0] % 2 == 1))
        return cls(n, edges, f"path{n}", col)

    @classmethod
    def complete(cls, n: int) -> "InteractionGraph":
        edges = frozenset((i, j) for i in range(n) for j in range(i + 1, n))
        return cls(n, edges, f"complete{n}", greedy_edge_coloring(n, edges))

    @classmethod
    def bilinear(cls, two_r: int) -> "InteractionGraph":
        """Bilinear array on 2r vertices in zigzag numbering (1-based v is
        vertex v-1 here): rungs (2a-1, 2a), rails 1-3-5-... and 2-4-6-....

        Colour classes: E'_1 = rungs (2a-1, 2a) for a < r, E'_2 = rail edges
        (4a-3, 4a-1), (4a-2, 4a), E'_3 = rail edges (4a-1, 4a+1), (4a, 4a+2).
        """
        if two_r % 2:
            raise ValueError("bilinear array needs an even vertex count")
        r = two_r // 2
        e1 = frozenset((2 * a - 2, 2 * a - 1) for a in range(1, r))
        e2 = frozenset([(4 * a - 4, 4 * a - 2) for a in range(1, r // 2 + 1)]
                       + [(4 * a - 3, 4 * a - 1) for a in range(1, r // 2 + 1)])
        e3 = frozenset([(4 * a - 2, 4 * a) for a in range(1, r // 2)]
                       + [(4 * a - 1, 4 * a + 1) for a in range(1, r // 2)])
        e2 = frozenset(e for e in e2 if e[1] < two_r)
        e3 = frozenset(e for e in e3 if e[1] < two_r)
        return cls(two_r, frozenset(e1 | e2 | e3), f"bilinear{two_r}", (e1, e2, e3))

    @classmethod
    def grid(cls, lx: int, ly: int) -> "InteractionGraph":
        def vid(x, y):
            return y * lx + x
        # four matchings: horizontal / vertical edges split by the parity of the lower end
        cls4: list[set] = [set(), set(), set(), set()]
        for y in range(ly):
            for x in range(lx):
                if x + 1 < lx:
                    cls4[x % 2].add((vid(x, y), vid(x + 1, y)))
                if y + 1 < ly:
                    cls4[2 + y % 2].add((vid(x, y), vid(x, y + 1)))
        coloring = tuple(frozenset(k) for k in cls4 if k)
        return cls(lx * ly, frozenset().union(*coloring), f"grid{lx}x{ly}", coloring)


def greedy_edge_coloring(n, edges) -> tuple:
    classes: list[set] = []
    used: list[set] = []
    for e in sorted(edges):
        for i, cl in enumerate(classes):
            if e[0] not in used[i] and e[1] not in used[i]:
                cl.add(e)
                used[i] |= set(e)
                break
        else:
            classes.append({e})
            used.append(set(e))
    return tuple(frozenset(c) for c in classes)


def validate_locality(c: Circuit, g: InteractionGraph) -> list[tuple[int, tuple[int, int]]]:
    """Empty list when every two-qubit op is along an edge of g."""
    if c.n > g.n:
        raise CircuitError("circuit has more qubits than the graph")
    bad = []
    for t, L in enumerate(c.layers):
        for o in L:
            if o.kind == GATE and len(o.qubits) == 2 and not g.has_edge(*o.qubits):
                bad.append((t, o.qubits))
    return bad


@dataclass(frozen=True)
class Rectangle:
    """Qubits ``omega`` over the ops of layers t+1..t+delta.

    Its left boundary is the wire set {t} x omega, interior t+1..t+delta-1,
    right boundary t+delta.  ``t = -1`` puts the left boundary before the
    first layer (faults there are input faults and never occur).
    """

    omega: frozenset
    t: int
    delta: int
    flavor: str = "unitary"
    omega1: frozenset = frozenset()  # adaptive: measured and re-prepared qubits
    omega2: frozenset = frozenset()  # adaptive: corrected qubits

    @property
    def layers(self) -> range:
        return range(self.t + 1, self.t + self.delta + 1)

    def contains_wire(self, t: int, q: int, right: bool = False) -> bool:
        hi = self.t + self.delta if right else self.t + self.delta - 1
        return q in self.omega and self.t <= t <= hi

    def is_valid(self, c: Circuit) -> bool:
        for t in self.layers:
            if t >= c.depth:
                return False
            for o in c.layers[t]:
                inside = [q in self.omega for q in o.qubits]
                if any(inside) and not all(inside):
                    return False
        return True

    def is_unitary(self, c: Circuit) -> bool:
        return all(o.kind == GATE for t in self.layers for o in c.layers[t] if o.qubits[0] in self.omega)


# ---------------------------------------------------------------------------
# lifespan


def lifespans(c: Circuit) -> list[int]:
    """Per qubit, the longest run of layers between a (re)initialisation or
    the start and the next measurement, discard or end of circuit; runs that
    start on an idle unprepared qubit are not counted.  A non-output qubit
    whose run is never closed ends at its last operation (it could be
    discarded there)."""
    best = [0] * c.n
    outs = set(c.outputs)
    for q in range(c.n):
        start = 0 if q in c.inputs else None
        last = -1
        for t in range(c.depth):
            o = c.op_at(t, q)
            if o.kind == WAIT:
                continue
            last = t
            if o.kind == PREP:
                start = t
            elif o.kind in (MEAS, DISCARD):
                if start is not None:
                    best[q] = max(best[q], t - start + 1)
                start = None
        if start is not None:
            end = c.depth if q in outs else last + 1
            best[q] = max(best[q], end - start)
    return best


def max_lifespan(c: Circuit) -> int:
    return max(lifespans(c), default=0)


# ---------------------------------------------------------------------------
# text format


def _hexlist(v: Iterable[int]) -> str:
    return ",".join(format(int(x), "x") for x in v)


def _fmt_fn(fn) -> str:
    if isinstance(fn, Linear):
        return f"lin A={_hexlist(fn.A)} B={_hexlist(fn.B)} src={','.join(f'c{b}' for b in fn.src)}"
    if isinstance(fn, Lookup):
        w = fn.width
        return f"lut T={_hexlist(x | (z << w) for x, z in fn.table)} src={','.join(f'c{b}' for b in fn.src)}"
    return f"prog x={','.join(str(i) for i in fn.xs)} z={','.join(str(i) for i in fn.zs)}"


def _fmt_op(o: Op) -> str:
    qs = " ".join(f"q{q}" for q in o.qubits)
    if o.kind == GATE:
        return f"{o.gate.lower()} {qs}"
    if o.kind == MEAS:
        return f"measz {qs} -> c{o.cbit}"
    if o.kind == CPAULI:
        return f"cpauli {_fmt_fn(o.fn)} tgt={','.join(f'q{q}' for q in o.qubits)}"
    return f"{o.kind} {qs}"


def serialize(c: Circuit) -> str:
    lines = [f"circuit n={c.n} in={','.join(map(str, c.inputs))} out={','.join(map(str, c.outputs))} cbits={c.cbits}"]
    if c.graph:
        lines.append(f"graph {c.graph}")
    p = c.program
    for i, tab in enumerate(p.tables):
        lines.append(f"table {i} {_hexlist(tab)}")
    for i, nd in enumerate(p.nodes):
        if nd[0] == "raw":
            lines.append(f"node {i} raw c{nd[1]}")
        elif nd[0] == "xor":
            lines.append(f"node {i} xor {' '.join(map(str, nd[1]))}")
        else:
            lines.append(f"node {i} lut {nd[1]} bit {nd[3]} src {','.join(map(str, nd[2]))}")
    for t in range(c.depth):
        lines.append(f"layer {t}:")
        for o in c.ops(t):
            lines.append("  " + _fmt_op(o))
    return "\n".join(lines) + "\n"


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x != ""]


def _qs(tokens) -> list[int]:
    out = []
    for tok in tokens:
        if not tok.startswith("q"):
            raise ValueError(f"expected qubit, got {tok!r}")
        out.append(int(tok[1:]))
    return out


def _parse_fn(kind: str, kv: dict[str, str], width: int):
    src = tuple(int(s[1:]) for s in kv.get("src", "").split(",") if s)
    if kind == "lin":
        return Linear(tuple(int(v, 16) for v in kv["A"].split(",") if v),
                      tuple(int(v, 16) for v in kv["B"].split(",") if v), src)
    if kind == "lut":
        ents = [int(v, 16) for v in kv["T"].split(",") if v]
        mask = (1 << width) - 1
        return Lookup(tuple((e & mask, e >> width) for e in ents), src, width)
    if kind == "prog":
        return ProgramRef(tuple(_ints(kv["x"])), tuple(_ints(kv["z"])))
    raise ValueError(f"unknown classical function kind {kind!r}")


def parse(text: str) -> Circuit:
    header = None
    layers: list[list[Op]] = []
    nodes: list[tuple] = []
    tables: list[tuple[int, ...]] = []
    graph = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            head = toks[0].lower()
            if head == "circuit":
                kv = dict(tok.split("=", 1) for tok in toks[1:])
                header = (int(kv["n"]), _ints(kv.get("in", "")), _ints(kv.get("out", "")), int(kv.get("cbits", "0")))
            elif head == "graph":
                graph = toks[1]
            elif head == "table":
                if int(toks[1]) != len(tables):
                    raise ValueError("tables must be numbered consecutively")
                tables.append(tuple(int(v, 16) for v in (toks[2].split(",") if len(toks) > 2 else []) if v))
            elif head == "node":
                if int(toks[1]) != len(nodes):
                    raise ValueError("nodes must be numbered consecutively")
                if toks[2] == "raw":
                    nodes.append(("raw", int(toks[3][1:])))
                elif toks[2] == "xor":
                    nodes.append(("xor", tuple(int(v) for v in toks[3:])))
                elif toks[2] == "lut":
                    nodes.append(("lut", int(toks[3]), tuple(_ints(toks[7]) if len(toks) > 7 else []), int(toks[5])))
                else:
                    raise ValueError(f"unknown node kind {toks[2]}")
            elif head == "layer":
                m = re.fullmatch(r"layer\s+(\d+)\s*:", line)
                if not m or int(m.group(1)) != len(layers):
                    raise ValueError("layers must be numbered consecutively from 0")
                layers.append([])
            else:
                if header is None or not layers:
                    raise ValueError("operation outside a layer")
                if head == "measz":
                    if toks[2] != "->":
                        raise ValueError("expected '->'")
                    layers[-1].append(meas(_qs(toks[1:2])[0], int(toks[3][1:])))
                elif head in (PREP, WAIT, DISCARD):
                    layers[-1].append(Op(head, tuple(_qs(toks[1:]))))
                elif head == "cpauli":
                    kv = dict(tok.split("=", 1) for tok in toks[2:])
                    tgt = [int(s[1:]) for s in kv["tgt"].split(",") if s]
                    layers[-1].append(cpauli(_parse_fn(toks[1], kv, len(tgt)), tgt))
                elif head.upper() in GATE_ARITY:
                    layers[-1].append(gate(head, *_qs(toks[1:])))
                else:
                    raise ValueError(f"unknown operation {toks[0]!r}")
        except ParseError:
            raise
        except (ValueError, KeyError, IndexError) as e:
            raise ParseError(lineno, str(e)) from None
    if header is None:
        raise ParseError(0, "missing circuit header")
    n, ins, outs, cb = header
    prog = ClassicalProgram(nodes, tables)
    c = Circuit(n, tuple(ins), tuple(outs), cb, tuple(tuple(L) for L in layers), prog, graph)
    try:
        c.audit()
    except CircuitError as e:
        raise ParseError(0, str(e)) from None
    return c
