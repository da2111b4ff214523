"""Compiler passes over adaptive Clifford circuits.

Every pass returns a PassResult whose ``fault_map`` sends a fault pattern on
the new circuit to one on the old circuit with the same noisy instrument
(outcomes discarded).  Maps compose right to left along a pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .circuit import (
    CPAULI, DISCARD, GATE, MEAS, PREP, WAIT, Circuit, ClassicalProgram, InteractionGraph,
    Linear, Op, ProgramRef, Rectangle, cpauli, function_to_program, gate, meas, prep,
    validate_locality,
)
from .noise import FaultPattern, InvalidRectangle, _clean
from .pauli import CliffordAction, PauliOperator, conjugate_gate

FaultMap = Callable[[FaultPattern], FaultPattern]


@dataclass
class PassResult:
    circuit: Circuit
    fault_map: FaultMap
    cert: str
    params: dict = field(default_factory=dict)


def identity_map(f: FaultPattern) -> FaultPattern:
    return f


def chain(*maps: FaultMap) -> FaultMap:
    """Compose fault maps listed from the newest circuit to the oldest."""
    def go(f):
        for m in maps:
            f = m(f)
        return f
    return go


class PassError(ValueError):
    pass


# ---------------------------------------------------------------------------
# postponement of adaptive Paulis


def postpone_adaptive_paulis(c: Circuit) -> PassResult:
    """Commute every classically controlled Pauli to the end of the circuit.

    The pending Pauli on each qubit is kept as a pair of program nodes.  A
    measurement of a qubit with a pending X records raw XOR pending bit; the
    old outcome is that XOR, and downstream classical functions read it.
    Preparations and discards drop the pending Pauli.
    """
    n = c.n
    if not c.adaptive_layers():
        return PassResult(c, identity_map, "postponement")
    prog = ClassicalProgram()
    fx = [-1] * n
    fz = [-1] * n
    truebit: dict[int, int] = {}
    node_tr: dict[int, int] = {}
    tab_tr: dict[int, int] = {}

    def tr_node(i: int) -> int:
        if i < 0:
            return -1
        stack = [i]
        nodes = c.program.nodes
        while stack:
            j = stack[-1]
            if j in node_tr:
                stack.pop()
                continue
            nd = nodes[j]
            if nd[0] == "raw":
                node_tr[j] = truebit[nd[1]]
                stack.pop()
                continue
            deps = nd[1] if nd[0] == "xor" else [s for s in nd[2] if s >= 0]
            todo = [d for d in deps if d not in node_tr]
            if todo:
                stack.extend(todo)
                continue
            if nd[0] == "xor":
                node_tr[j] = prog.xor(*(node_tr[d] for d in nd[1]))
            else:
                if nd[1] not in tab_tr:
                    tab_tr[nd[1]] = prog.add_table(c.program.tables[nd[1]])
                node_tr[j] = prog.lut(tab_tr[nd[1]], [node_tr[s] if s >= 0 else -1 for s in nd[2]], nd[3])
            stack.pop()
        return node_tr[i]

    layers: list[list[Op]] = []
    for t, L in enumerate(c.layers):
        new: list[Op] = []
        for o in L:
            if o.kind == GATE:
                new.append(o)
                g, qs = o.gate, o.qubits
                if g == "H":
                    q = qs[0]
                    fx[q], fz[q] = fz[q], fx[q]
                elif g in ("S", "SDG"):
                    q = qs[0]
                    fz[q] = prog.xor(fz[q], fx[q])
                elif g == "CNOT":
                    a, b = qs
                    fx[b] = prog.xor(fx[b], fx[a])
                    fz[a] = prog.xor(fz[a], fz[b])
                elif g == "CZ":
                    a, b = qs
                    fz[a], fz[b] = prog.xor(fz[a], fx[b]), prog.xor(fz[b], fx[a])
                elif g == "SWAP":
                    a, b = qs
                    fx[a], fx[b] = fx[b], fx[a]
                    fz[a], fz[b] = fz[b], fz[a]
            elif o.kind == MEAS:
                q = o.qubits[0]
                truebit[o.cbit] = prog.xor(prog.raw(o.cbit), fx[q])
                new.append(o)
            elif o.kind in (PREP, DISCARD):
                q = o.qubits[0]
                fx[q] = fz[q] = -1
                new.append(o)
            elif o.kind == CPAULI:
                if isinstance(o.fn, ProgramRef):
                    ref = ProgramRef(tuple(tr_node(i) for i in o.fn.xs), tuple(tr_node(i) for i in o.fn.zs))
                else:
                    ref = function_to_program(o.fn, prog, lambda b: truebit[b])
                for i, q in enumerate(o.qubits):
                    fx[q] = prog.xor(fx[q], ref.xs[i])
                    fz[q] = prog.xor(fz[q], ref.zs[i])
        layers.append(new)
    targets = [q for q in c.outputs if fx[q] >= 0 or fz[q] >= 0]
    extra = False
    if targets:
        busy = {q for o in layers[-1] for q in o.qubits}
        if any(q in busy for q in targets):
            layers.append([])
            extra = True
        for q in targets:
            layers[-1].append(cpauli(ProgramRef((fx[q],), (fz[q],)), [q]))
    out = Circuit(n, c.inputs, c.outputs, c.cbits, tuple(tuple(L) for L in layers), prog, c.graph)
    out.audit()
    D = c.depth

    def fmap(f: FaultPattern) -> FaultPattern:
        if not extra:
            return f
        return FaultPattern([((min(t, D - 1), q), p) for (t, q), p in f.items()])

    return PassResult(out, fmap, "postponement", {"appended_layer": extra})


# ---------------------------------------------------------------------------
# inflation


def inflate_layers(c: Circuit, counts: Sequence[int]) -> PassResult:
    """Insert counts[t] wait layers after layer t."""
    if len(counts) != c.depth:
        raise PassError("one inflation count per layer")
    layers: list[tuple[Op, ...]] = []
    back: list[int] = []
    for t, L in enumerate(c.layers):
        layers.append(L)
        back.append(t)
        for _ in range(counts[t]):
            layers.append(())
            back.append(t)
    out = c.replace(layers=tuple(layers))

    def fmap(f: FaultPattern) -> FaultPattern:
        return FaultPattern([((back[t], q), p) for (t, q), p in f.items()])

    return PassResult(out, fmap, "inflation", {"counts": list(counts)})


def inflate(c: Circuit, m: int) -> PassResult:
    if m < 0:
        raise PassError("inflation depth must be non-negative")
    if m == 0:
        return PassResult(c, identity_map, "inflation", {"m": 0})
    r = inflate_layers(c, [m] * c.depth)
    r.params = {"m": m}
    return r


# ---------------------------------------------------------------------------
# unitary substitution


class ActionMismatch(PassError):
    pass


def _rect_action(c: Circuit, r: Rectangle, order: Sequence[int]) -> CliffordAction:
    pos = {q: i for i, q in enumerate(order)}
    gates = []
    for t in r.layers:
        for o in c.layers[t]:
            if o.qubits[0] in r.omega:
                if o.kind != GATE:
                    raise InvalidRectangle(f"layer {t}: {o.kind} inside a unitary rectangle")
                gates.append((o.gate, tuple(pos[q] for q in o.qubits)))
    return CliffordAction.from_gates(len(order), gates)


def circuit_action(c: Circuit) -> CliffordAction:
    if not c.is_unitary():
        raise PassError("circuit is not unitary")
    return CliffordAction.from_gates(c.n, [(o.gate, o.qubits) for L in c.layers for o in L])


def substitute_unitary(c: Circuit, pairs: Sequence[tuple[Rectangle, Circuit]]) -> PassResult:
    """Replace unitary rectangles by replacement circuits with the same action.

    A replacement acts on qubits 0..|omega|-1, identified with sorted(omega),
    and has depth delta.
    """
    rects = [r for r, _ in pairs]
    from .noise import _check_rects
    _check_rects(c, rects)
    layers = [list(L) for L in c.layers]
    for r, rep in pairs:
        order = sorted(r.omega)
        if rep.n != len(order) or rep.depth != r.delta:
            raise PassError("replacement must match the rectangle's qubits and depth")
        if not r.is_unitary(c):
            raise InvalidRectangle("rectangle is not unitary")
        if _rect_action(c, r, order) != circuit_action(rep):
            raise ActionMismatch(f"replacement at t={r.t} has a different unitary action")
        for k, t in enumerate(r.layers):
            layers[t] = [o for o in layers[t] if o.qubits[0] not in r.omega]
            layers[t] += [o.relabel(order) for o in rep.layers[k]]
    out = c.replace(layers=tuple(tuple(L) for L in layers))
    out.audit()

    def fmap(f: FaultPattern) -> FaultPattern:
        return _clean(out, f, rects, allow=("gate",))

    return PassResult(out, fmap, "unitary_cleaning", {"rects": len(rects)})


# ---------------------------------------------------------------------------
# alternating and normal form


def _moves_late(o: Op) -> bool:
    return o.kind in (GATE, CPAULI)


def to_alternating_form(c: Circuit) -> PassResult:
    """Depth 2D: even (0-based) layers hold preparations, measurements and
    discards, odd layers hold the unitaries and controlled Paulis."""
    inf = inflate(c, 1)
    ci = inf.circuit
    layers: list[list[Op]] = []
    rects = []
    for t in range(c.depth):
        L = c.layers[t]
        layers.append([o for o in L if not _moves_late(o)])
        late = [o for o in L if _moves_late(o)]
        layers.append(late)
        om = frozenset(q for o in late for q in o.qubits)
        if om:
            rects.append(Rectangle(om, 2 * t, 1))
    out = ci.replace(layers=tuple(tuple(L) for L in layers))
    out.audit()

    def fmap(f: FaultPattern) -> FaultPattern:
        return inf.fault_map(_clean(out, f, rects, allow=("gate", "cpauli")))

    return PassResult(out, fmap, "alternating_form")


def to_normal_form(c: Circuit, g: InteractionGraph, coloring=None) -> PassResult:
    """One prep/measure layer then one unitary layer per colour class, for
    every layer of ``c``; depth (chi'+1) D."""
    coloring = tuple(coloring if coloring is not None else g.coloring)
    if not coloring or not g.is_proper_coloring(coloring):
        raise PassError("improper edge colouring")
    bad = validate_locality(c, g)
    if bad:
        raise PassError(f"circuit is not local on {g.name}: {bad[:3]}")
    chi = len(coloring)
    colour_of = {e: a for a, cls in enumerate(coloring) for e in cls}
    alt = to_alternating_form(c)
    counts = [0 if t % 2 == 0 else chi - 1 for t in range(alt.circuit.depth)]
    inf = inflate_layers(alt.circuit, counts)
    layers: list[list[Op]] = []
    rects = []
    for t in range(c.depth):
        layers.append(list(alt.circuit.layers[2 * t]))
        cols: list[list[Op]] = [[] for _ in range(chi)]
        for o in alt.circuit.layers[2 * t + 1]:
            if o.kind == GATE and len(o.qubits) == 2:
                e = (min(o.qubits), max(o.qubits))
                cols[colour_of[e]].append(o)
            else:
                cols[0].append(o)
        start = len(layers)
        layers.extend(cols)
        rects.append(Rectangle(frozenset(range(c.n)), start - 1, chi))
    out = c.replace(layers=tuple(tuple(L) for L in layers), graph=g.name)
    out.audit()

    def fmap(f: FaultPattern) -> FaultPattern:
        return alt.fault_map(inf.fault_map(_clean(out, f, rects, allow=("gate", "cpauli"))))

    return PassResult(out, fmap, "alternating_form", {"chi": chi})


# ---------------------------------------------------------------------------
# routing and geometry change


@dataclass
class Routing:
    src: InteractionGraph
    dst: InteractionGraph
    classes: tuple
    swap_layers: tuple  # per colour: tuple of layers, each a tuple of (u, v) dst edges
    delta: int

    def perm(self, alpha: int) -> list[int]:
        """pi_alpha as a list: content of vertex u ends on vertex pi[u]."""
        pos = list(range(self.src.n))
        where = list(range(self.src.n))  # where[u] = current vertex of u's content
        at = list(range(self.src.n))     # at[v] = content on vertex v
        for layer in self.swap_layers[alpha]:
            for u, v in layer:
                cu, cv = at[u], at[v]
                at[u], at[v] = cv, cu
                where[cu], where[cv] = v, u
        del pos
        return where

    def validate(self) -> None:
        if not self.src.is_proper_coloring(self.classes):
            raise PassError("routing colour classes are not a proper colouring of the source graph")
        for a, cls in enumerate(self.classes):
            layers = self.swap_layers[a]
            if len(layers) > self.delta:
                raise PassError(f"colour {a} needs {len(layers)} swap layers > delta={self.delta}")
            for layer in layers:
                seen = set()
                for u, v in layer:
                    if not self.dst.has_edge(u, v) or u in seen or v in seen:
                        raise PassError("swap layer is not a matching of the target graph")
                    seen |= {u, v}
            pi = self.perm(a)
            for u, v in cls:
                if not self.dst.has_edge(pi[u], pi[v]):
                    raise PassError(f"pi_{a + 1} does not bring edge ({u},{v}) together")

    @classmethod
    def identity(cls, src: InteractionGraph, dst: InteractionGraph) -> "Routing":
        r = cls(src, dst, tuple(src.coloring), tuple(() for _ in src.coloring), 0)
        r.validate()
        return r


def path_bilinear_routing(r: int) -> Routing:
    """Path P_2r emulating the bilinear array B_2r with Delta = 1.

    pi_1 = id, pi_2 = prod_{k=0}^{r/2-1} (4k+2 4k+3), pi_3 = prod_{k=1}^{r/2-1} (4k 4k+1),
    1-based; each is one layer of disjoint adjacent transpositions.
    """
    if r % 2 or r < 2:
        raise PassError("path/bilinear routing needs an even r >= 2")
    src = InteractionGraph.bilinear(2 * r)
    dst = InteractionGraph.path(2 * r)
    pi2 = tuple((4 * k + 1, 4 * k + 2) for k in range(r // 2))
    pi3 = tuple((4 * k - 1, 4 * k) for k in range(1, r // 2))
    layers = ((), (pi2,) if pi2 else (), (pi3,) if pi3 else ())
    rt = Routing(src, dst, src.coloring, layers, 1)
    rt.validate()
    return rt


def change_geometry(c: Circuit, routing: Routing) -> PassResult:
    """Make a src-local circuit dst-local; depth (chi'(2 Delta + 1) + 1) D'."""
    routing.validate()
    nf = to_normal_form(c, routing.src, routing.classes)
    chi = len(routing.classes)
    dl = routing.delta
    cn = nf.circuit
    block = chi + 1
    counts = [0 if t % block == 0 else 2 * dl for t in range(cn.depth)]
    inf = inflate_layers(cn, counts)
    layers: list[list[Op]] = []
    rects = []
    for t in range(cn.depth):
        if t % block == 0:
            layers.append(list(cn.layers[t]))
            continue
        a = t % block - 1
        pi = routing.perm(a)
        sw = [[gate("SWAP", u, v) for u, v in L] for L in routing.swap_layers[a]]
        pad = [[] for _ in range(dl - len(sw))]
        mid = [o.relabel(pi) for o in cn.layers[t]]
        start = len(layers)
        layers.extend(sw + pad + [mid] + pad + sw[::-1])
        if any(layers[start:]):
            rects.append(Rectangle(frozenset(range(c.n)), start - 1, 2 * dl + 1))
    out = c.replace(layers=tuple(tuple(L) for L in layers), graph=routing.dst.name)
    out.audit()
    bad = validate_locality(out, routing.dst)
    if bad:
        raise PassError(f"routed circuit is not local: {bad[:3]}")

    def fmap(f: FaultPattern) -> FaultPattern:
        return nf.fault_map(inf.fault_map(_clean(out, f, rects, allow=("gate", "cpauli"))))

    return PassResult(out, fmap, "geometry_change", {"delta": dl, "chi": chi})


# ---------------------------------------------------------------------------
# gate teleportation


TELEPORT_DEPTH = 10


def _correction(gname: str | None, k: int, srcs_x: Sequence[int], srcs_z: Sequence[int],
                order: Sequence[int] | None = None) -> tuple[list[int], list[int]]:
    """Linear correction C X^{mx} Z^{mz} C^dag for the teleported k-qubit gate.

    srcs_x[i] / srcs_z[i]: positions (in the source list) of the bits giving
    the X / Z part of the byproduct on target i.  ``order`` gives the gate's
    operand positions among the targets.
    """
    order = tuple(range(k)) if order is None else tuple(order)
    A = [0] * k
    B = [0] * k
    for i in range(k):
        for which, srcpos in (("X", srcs_x[i]), ("Z", srcs_z[i])):
            p = PauliOperator.single(k, i, which)
            if gname is not None and gname != "I":
                p = conjugate_gate(gname, order, p)
            for j in range(k):
                if (p.x >> j) & 1:
                    A[j] |= 1 << srcpos
                if (p.z >> j) & 1:
                    B[j] |= 1 << srcpos
    return A, B


def teleport_template_1q(gname: str | None, d: int, a: int, b: int, bits: Sequence[int]) -> list[list[Op]]:
    m0, m1 = bits
    A, B = _correction(gname, 1, [1], [0])
    L5 = [gate("CNOT", d, a)]
    if gname not in (None, "I"):
        L5.append(gate(gname, b))
    return [
        [prep(a), prep(b)],
        [gate("H", a)],
        [gate("CNOT", a, b)],
        [],
        L5,
        [gate("H", d)],
        [meas(d, m0), meas(a, m1)],
        [cpauli(Linear(tuple(A), tuple(B), (m0, m1)), [b])],
        [gate("SWAP", a, b)],
        [gate("SWAP", d, a)],
    ]


def teleport_template_2q(gname: str, ops_order: Sequence[int], p: Sequence[int], bits: Sequence[int]) -> list[list[Op]]:
    """Positions p = (d_i, a_i, b_i, d_j, a_j, b_j); ops_order gives for each gate
    operand whether it is qubit i (0) or j (1)."""
    m0, m1, m2, m3 = bits
    # target 0 = p2 (data i), target 1 = p3 (data j); Z/X byproducts from (m0, m1) and (m2, m3)
    A, B = _correction(gname, 2, [1, 3], [0, 2], ops_order)
    outs = (p[2], p[3])
    return [
        [prep(p[1]), prep(p[2]), prep(p[4]), prep(p[5])],
        [gate("H", p[1]), gate("H", p[4])],
        [gate("CNOT", p[1], p[2]), gate("CNOT", p[4], p[5])],
        [gate("SWAP", p[3], p[4])],
        [gate(gname, *(outs[i] for i in ops_order)), gate("CNOT", p[0], p[1]), gate("CNOT", p[4], p[5])],
        [gate("H", p[0]), gate("H", p[4])],
        [meas(p[0], m0), meas(p[1], m1), meas(p[4], m2), meas(p[5], m3)],
        [cpauli(Linear(tuple(A), tuple(B), (m0, m1, m2, m3)), [p[2], p[3]])],
        [gate("SWAP", p[1], p[2])],
        [gate("SWAP", p[0], p[1])],
    ]


def active_qubits(c: Circuit) -> list[set[int]]:
    """Per layer, the qubits holding live data when the layer starts.

    A qubit is live from the start if it is an input or its first non-wait
    operation is not a preparation; it becomes live after a preparation and
    dead after a measurement or discard."""
    first: dict[int, str] = {}
    for L in c.layers:
        for o in L:
            for q in o.qubits:
                first.setdefault(q, o.kind)
    live = {q for q in range(c.n) if q in c.inputs or (q in first and first[q] != PREP)}
    out = []
    for L in c.layers:
        out.append(set(live))
        for o in L:
            q = o.qubits[0]
            if o.kind == PREP:
                live.add(q)
            elif o.kind in (MEAS, DISCARD):
                live.discard(q)
    return out


def teleport_substitute(c: Circuit) -> PassResult:
    """Inflate by 9, then replace every gate (and every wait on a live qubit)
    of the original layers by a depth-10 gate-teleportation circuit.

    Qubit q becomes the triple (3q, 3q+1, 3q+2) of a path of 3n qubits; data
    sits on 3q at every block boundary and the other two are |0> ancillas.
    """
    inf = inflate(c, TELEPORT_DEPTH - 1)
    n = c.n
    live = active_qubits(c)
    layers: list[list[Op]] = [[] for _ in range(TELEPORT_DEPTH * c.depth)]
    cbits = c.cbits
    rects: list[Rectangle] = []
    corr_at: dict[tuple[int, frozenset], Op] = {}

    def newbits(k):
        nonlocal cbits
        cbits += k
        return list(range(cbits - k, cbits))

    def trip(q):
        return 3 * q, 3 * q + 1, 3 * q + 2

    for t in range(c.depth):
        T = TELEPORT_DEPTH * t
        for o in c.ops(t):
            tpl = None
            if o.kind == GATE and len(o.qubits) == 2:
                u, v = o.qubits
                i, j = min(u, v), max(u, v)
                if j - i != 1:
                    raise PassError(f"layer {t}: gate on non-adjacent qubits {o.qubits} has no valid subrectangle")
                p = trip(i) + trip(j)
                order = [0 if q == i else 1 for q in o.qubits]
                tpl = teleport_template_2q(o.gate, order, p, newbits(4))
                om = frozenset(p)
            elif o.kind == GATE or (o.kind == WAIT and o.qubits[0] in live[t]):
                d, a, b = trip(o.qubits[0])
                tpl = teleport_template_1q(o.gate if o.kind == GATE else None, d, a, b, newbits(2))
                om = frozenset((d, a, b))
            if tpl is not None:
                for k, L in enumerate(tpl):
                    layers[T + k].extend(L)
                # starts after the ancilla preps so that wire T-1 stays with the previous block
                rects.append(Rectangle(om, T, TELEPORT_DEPTH - 1, "adaptive"))
                corr_at[(T, om)] = tpl[7][0]
            elif o.kind != WAIT:
                qmap = {q: 3 * q for q in o.qubits}
                layers[T].append(o.relabel(qmap))
    out = Circuit(3 * n, tuple(3 * q for q in c.inputs), tuple(3 * q for q in c.outputs), cbits,
                  tuple(tuple(L) for L in layers), c.program.copy(), "path")
    out.audit()

    def compensate(r, flips):
        op = corr_at[(r.t, r.omega)]
        e = [flips.get(b, 0) for b in op.fn.src]
        xm, zm = op.fn.pauli(e)
        res = {}
        for i, q in enumerate(op.qubits):
            v = ((xm >> i) & 1, (zm >> i) & 1)
            if v != (0, 0):
                res[q] = v
        # the correction acts before the two SWAP layers; move it along
        return _through_swaps(out, r, res)

    def fmap(f: FaultPattern) -> FaultPattern:
        g = f
        for r in rects:
            g = _clean(out, g, [r], allow=("gate", "meas", "prep", "cpauli"), compensate=compensate)
        kept = [((t, q // 3), p) for (t, q), p in g.items() if q % 3 == 0]
        return inf.fault_map(FaultPattern(kept))

    return PassResult(out, fmap, "adaptive_cleaning", {"instances": len(rects)})


def _through_swaps(c: Circuit, r: Rectangle, frame: dict[int, tuple[int, int]]) -> dict[int, tuple[int, int]]:
    from .noise import _push_layer
    for t in (r.t + 8, r.t + 9):
        frame = _push_layer(frame, c, t)
    return frame


# ---------------------------------------------------------------------------
# registry used by the CLI and pipeline configs


PASSES = {
    "postpone": lambda c, **kw: postpone_adaptive_paulis(c),
    "inflate": lambda c, m=1, **kw: inflate(c, m),
    "alternating": lambda c, **kw: to_alternating_form(c),
    "teleport": lambda c, **kw: teleport_substitute(c),
}


def run_pipeline(c: Circuit, steps: Sequence[tuple[str, dict]]) -> tuple[Circuit, list[PassResult]]:
    results = []
    for name, kw in steps:
        if name not in PASSES:
            raise PassError(f"unknown pass {name!r}")
        r = PASSES[name](c, **kw)
        results.append(r)
        c = r.circuit
    return c, results


def pipeline_fault_map(results: Sequence[PassResult]) -> FaultMap:
    return chain(*(r.fault_map for r in reversed(results)))
