"""Compilers between programs, layered circuits and ABPs.

Every pass is a pure function whose output has the same truth table as its
input; the test-suite checks this exhaustively.  Size notes on each pass give
the growth in the program size l (arity and algebra fixed).
"""
from __future__ import annotations

import itertools
from collections import Counter

import numpy as np

from .abp import AbpProcess, BabpGate, _Builder, compose_bounded
from .circuits import AlgebraCircuit, LayeredCircuit, Program
from .congruence import (Congruence, congruence_lattice, quotient_algebra)
from .core_algebra import FiniteAlgebra, TermWitness, eval_term
from .fixtures import nudet_exact, solv_codec, solv_construc
from .local import (TotalOrderWitness, find_incomparable_pair, minimal_sets,
                    totally_ordered_check, typeset)
from .reps import (ActionProductRep, RepError, WitnessKit, find_boolean_kit, find_connector,
                   find_pseudo_malcev, substitute_term, unary_term, verify_boolean_kit)

# documented growth exponents in the program size l (arity fixed)
SIZE_EXPONENTS = {
    "detalg->abp": 2,        # O(l * n) ABP steps, n <= l
    "solvable-step": 2,      # O(l) ABP steps plus O(l) PROG gates of size <= l
    "nilpotent-step": 2,     # O(l) MOD/AND gates plus O(l) PROG gates of size <= l
}


class CompileError(ValueError):
    pass


# ----------------------------------------------------------------- shared helpers

def quotient_circuit(circ: AlgebraCircuit, qalg: FiniteAlgebra, proj) -> AlgebraCircuit:
    """The same circuit read over a quotient; gate indices are preserved."""
    gates = [("const", int(proj[g[1]])) if g[0] == "const" else g for g in circ.gates]
    return AlgebraCircuit(qalg, circ.arity, gates, circ.output)


def emit_term(circ: AlgebraCircuit, term, args) -> int:
    """Inline a term into a circuit; variable i becomes gate args[i]."""
    kind = term[0]
    if kind == "var":
        return args[term[1]]
    if kind == "const":
        return circ.const(term[1])
    return circ.op(term[1], *[emit_term(circ, c, args) for c in term[2]])


BOOL_KINDS = {"input", "const", "and", "or", "not"}


def demorgan(c: LayeredCircuit) -> LayeredCircuit:
    """Push negations to the inputs (negation normal form)."""
    out = LayeredCircuit(c.arity)
    pos: dict[int, int] = {}
    neg: dict[int, int] = {}
    for i in c.ancestors():
        g = c.gates[i]
        if g.kind not in BOOL_KINDS:
            raise CompileError(f"Boolean circuits use and/or/not/const gates, found {g.kind}")
        if g.kind == "input":
            pos[i] = out.input(g.params["index"])
            neg[i] = out.not_(pos[i])
        elif g.kind == "const":
            pos[i] = out.const(g.params["value"])
            neg[i] = out.const(1 - g.params["value"])
        elif g.kind == "not":
            pos[i], neg[i] = neg[g.inputs[0]], pos[g.inputs[0]]
        elif g.kind == "and":
            pos[i] = out.and_([pos[j] for j in g.inputs])
            neg[i] = out.or_([neg[j] for j in g.inputs])
        else:
            pos[i] = out.or_([pos[j] for j in g.inputs])
            neg[i] = out.and_([neg[j] for j in g.inputs])
    out.set_output(pos[c.output])
    return out


def _fold(circ, w: TermWitness, xs, empty):
    if not xs:
        return circ.const(empty)
    acc = xs[0]
    for x in xs[1:]:
        acc = emit_term(circ, w.term, [acc, x])
    return acc


def _check_same_algebra(a: FiniteAlgebra, b: FiniteAlgebra, what: str):
    if a is b:
        return
    if a.size != b.size or a.signature() != b.signature() or any(
            not np.array_equal(a.array(o.name), b.array(o.name)) for o in a.operations):
        raise CompileError(f"{what}: program algebra does not match")


# ----------------------------------------------------------------- transports

def lift_program_subalgebra(p: Program, big: FiniteAlgebra, embedding) -> Program:
    """Program over a subalgebra B read over A; embedding[b] is the image of b."""
    small = p.algebra
    emb = np.asarray(embedding, dtype=np.int64)
    if big.signature() != small.signature():
        raise CompileError("op-name mismatch")
    for op in small.operations:
        r = op.arity
        sub = big.array(op.name)[np.ix_(*([emb] * r))] if r else big.array(op.name)
        if not np.array_equal(np.asarray(sub), emb[small.array(op.name)]):
            raise CompileError(f"{op.name} is not a restriction under the embedding")
    gates = [("const", int(emb[g[1]])) if g[0] == "const" else g for g in p.circuit.gates]
    circ = AlgebraCircuit(big, p.arity, gates, p.circuit.output)
    return Program(circ, tuple(int(emb[v]) for v in p.iota),
                   frozenset(int(emb[s]) for s in p.accepting), p.output)


def lift_program_quotient(p: Program, alg: FiniteAlgebra, theta: Congruence) -> Program:
    """Program over A/theta read over A (block i is represented by its least element)."""
    reps = np.array([blk[0] for blk in theta.blocks()])
    q, _ = quotient_algebra(alg, theta)
    _check_same_algebra(q, p.algebra, "lift_program_quotient")
    gates = [("const", int(reps[g[1]])) if g[0] == "const" else g for g in p.circuit.gates]
    circ = AlgebraCircuit(alg, p.arity, gates, p.circuit.output)
    acc = frozenset(int(a) for a in range(alg.size) if int(theta.ids[a]) in p.accepting)
    return Program(circ, tuple(int(reps[v]) for v in p.iota), acc, p.output)


def combine_product_programs(p1: Program, p2: Program, connective, product: FiniteAlgebra | None = None
                             ) -> Program:
    """Program over A x B accepting connective(b in L1, b in L2).

    A term over A x B acts coordinatewise, so the two circuits must have the
    same shape (same ops and variables at matching places, constants free).
    """
    from .core_algebra import product_algebra
    A, B = p1.algebra, p2.algebra
    if A.signature() != B.signature():
        raise CompileError("signature mismatch")
    if p1.arity != p2.arity:
        raise CompileError("arity mismatch")
    AB = product or product_algebra(A, B)
    nb = B.size
    c1, c2 = p1.circuit, p2.circuit
    circ = AlgebraCircuit(AB, p1.arity)
    memo: dict = {}

    def pair(g1, g2):
        key = (g1, g2)
        if key in memo:
            return memo[key]
        a, b = c1.gates[g1], c2.gates[g2]
        if a[0] == "op" and b[0] == "op" and a[1] == b[1]:
            w = circ.op(a[1], *[pair(x, y) for x, y in zip(a[2], b[2])])
        elif a[0] == "var" and b[0] == "var" and a[1] == b[1]:
            w = circ.var(a[1])
        elif a[0] == "const" and b[0] == "const":
            w = circ.const(a[1] * nb + b[1])
        else:
            raise CompileError("circuits do not share a shape; cannot pair gates")
        memo[key] = w
        return w

    out = pair(p1.output, p2.output)
    circ.output = out
    iota = tuple(p1.iota[b] * nb + p2.iota[b] for b in (0, 1))
    acc = frozenset(a * nb + b for a in range(A.size) for b in range(nb)
                    if connective(a in p1.accepting, b in p2.accepting))
    return Program(circ, iota, acc)


# ----------------------------------------------------------------- P/poly hardness

def compile_bool_to_type3(c: LayeredCircuit, alg: FiniteAlgebra, kit: WitnessKit) -> Program:
    """Gatewise replacement of and/or/not by Boolean polynomials on U = {0_U, 1_U}.

    Size: O(|c|) times the witness term sizes.
    """
    verify_boolean_kit(alg, kit)
    u0, u1 = kit.points["u0"], kit.points["u1"]
    circ = AlgebraCircuit(alg, c.arity)
    val: dict[int, int] = {}
    for i in c.ancestors():
        g = c.gates[i]
        if g.kind not in BOOL_KINDS:
            raise CompileError(f"unsupported gate {g.kind}")
        ins = [val[j] for j in g.inputs]
        if g.kind == "input":
            val[i] = circ.var(g.params["index"])
        elif g.kind == "const":
            val[i] = circ.const(u1 if g.params["value"] else u0)
        elif g.kind == "not":
            val[i] = emit_term(circ, kit["negU"].term, ins)
        elif g.kind == "and":
            val[i] = _fold(circ, kit["meetU"], ins, u1)
        else:
            val[i] = _fold(circ, kit["joinU"], ins, u0)
    circ.output = val[c.output]
    return Program(circ, (u0, u1), {u1})


def _compile_nnf(c: LayeredCircuit, alg: FiniteAlgebra, leaf, neg_leaf, meet, join, zero, one,
                 iota, accepting) -> Program:
    nnf = demorgan(c)
    circ = AlgebraCircuit(alg, c.arity)
    val: dict[int, int] = {}
    for i in nnf.ancestors():
        g = nnf.gates[i]
        if g.kind == "input":
            val[i] = emit_term(circ, leaf, [circ.var(g.params["index"])])
        elif g.kind == "not":
            src = nnf.gates[g.inputs[0]]
            val[i] = emit_term(circ, neg_leaf, [circ.var(src.params["index"])])
        elif g.kind == "const":
            val[i] = circ.const(one if g.params["value"] else zero)
        elif g.kind == "and":
            val[i] = _fold(circ, meet, [val[j] for j in g.inputs], one)
        else:
            val[i] = _fold(circ, join, [val[j] for j in g.inputs], zero)
    circ.output = val[nnf.output]
    return Program(circ, iota, accepting)


def compile_bool_via_incomparable(c: LayeredCircuit, alg: FiniteAlgebra, uo, kit: WitnessKit,
                                  budget: int = 50000) -> Program:
    """Boolean circuit over an incomparable pair a, b of the induced order on U.

    Leaves read e_i (plain) or e_j (negated); and/or become meet_U/join_U.
    Size: O(|c|).
    """
    found = find_incomparable_pair(uo)
    if found is None:
        raise CompileError("no incomparable pair")
    a, b, i, j = found
    verify_boolean_kit(alg, kit, lattice_only=True)
    if (kit.points["u0"], kit.points["u1"]) != (uo.zero_u, uo.one_u):
        raise CompileError("kit points do not match the order's 0_U, 1_U")
    ei = unary_term(alg, uo.maps[i], budget)
    ej = unary_term(alg, uo.maps[j], budget)
    return _compile_nnf(c, alg, ei.term, ej.term, kit["meetU"], kit["joinU"],
                        uo.zero_u, uo.one_u, (a, b), {uo.one_u})


def verify_mixed_kit(alg: FiniteAlgebra, kit: WitnessKit):
    u0, u1, v0, v1 = (kit.points[k] for k in ("u0", "u1", "v0", "v1"))
    f, d = kit["connectorF"], kit["pseudoMalcevD"]
    if eval_term(alg, f.term, (u0,)) != v0 or eval_term(alg, f.term, (u1,)) != v1:
        raise RepError("connector does not map 0_U, 1_U onto 0_V, 1_V")
    for x in (u0, u1):
        for y in (u0, u1):
            if eval_term(alg, d.term, (y, y, x)) != x or eval_term(alg, d.term, (x, y, y)) != x:
                raise RepError("pseudo-Malcev identities fail on U")
    verify_boolean_kit(alg, kit, lattice_only=True, prefix="V")
    return True


def compile_bool_via_mixed_types(c: LayeredCircuit, alg: FiniteAlgebra, kit: WitnessKit) -> Program:
    """Boolean circuit through a type-2 set U connected to a type-4 set V.

    Plain leaf f(x), negated leaf f(d(0_U, x, 1_U)); and/or are meet_V/join_V.
    Size: O(|c|).
    """
    verify_mixed_kit(alg, kit)
    u0, u1, v0, v1 = (kit.points[k] for k in ("u0", "u1", "v0", "v1"))
    f = kit["connectorF"].term
    flip = substitute_term(kit["pseudoMalcevD"].term, [("const", u0), ("var", 0), ("const", u1)])
    neg_leaf = substitute_term(f, [flip])
    return _compile_nnf(c, alg, f, neg_leaf, kit["meetV"], kit["joinV"], v0, v1,
                        (u0, u1), {v1})


def find_incomparable_kit(alg: FiniteAlgebra, budget: int = 20000):
    """(UOrder, kit) for some two-element minimal set with an incomparable pair."""
    from .local import leq_U
    lat = congruence_lattice(alg)
    for (i, j), pq in typeset(alg, lat).items():
        lo, hi = lat.members[i], lat.members[j]
        for ms in minimal_sets(alg, lo, hi):
            if len(ms.members) != 2:
                continue
            for z, o in (ms.members, ms.members[::-1]):
                uo = leq_U(alg, ms, z, o)
                if find_incomparable_pair(uo) is None:
                    continue
                kit = find_boolean_kit(alg, z, o, budget, lattice_only=True)
                if kit is not None:
                    return uo, kit
    return None


def find_mixed_kit(alg: FiniteAlgebra, budget: int = 50000) -> WitnessKit | None:
    """Search U (type 2 cover), V (type 4 cover below it) and the connecting witnesses."""
    lat = congruence_lattice(alg)
    types = typeset(alg, lat)
    for (i2, j2), pq2 in types.items():
        if pq2.type_label != "2":
            continue
        lo2, hi2 = lat.members[i2], lat.members[j2]
        for (i4, j4), pq4 in types.items():
            if pq4.type_label != "4" or not lat.members[j4].leq(lo2):
                continue
            lo4, hi4 = lat.members[i4], lat.members[j4]
            ms2 = minimal_sets(alg, lo2, hi2)[0]
            ms4 = minimal_sets(alg, lo4, hi4)[0]
            tr = ms2.traces[0]
            u0 = tr[0]
            u1 = next(x for x in tr if not lo2.related(u0, x))
            d = find_pseudo_malcev(alg, ms2.members, budget)
            if d is None:
                continue
            flip = TermWitness(substitute_term(d.term, [("const", u0), ("var", 0), ("const", u1)]), 1, ())
            trv = ms4.traces[0]
            for v0, v1 in ((trv[0], trv[1]), (trv[1], trv[0])):
                lk = find_boolean_kit(alg, v0, v1, budget, lattice_only=True, prefix="V")
                if lk is None:
                    continue
                try:
                    f = find_connector(alg, (u0, u1), (v0, v1), ms4.idempotent, budget, flip)
                except Exception:
                    continue
                kit = WitnessKit(dict(lk.witnesses, connectorF=f, pseudoMalcevD=d),
                                 {"u0": u0, "u1": u1, "v0": v0, "v1": v1})
                verify_mixed_kit(alg, kit)
                return kit
    return None


# ----------------------------------------------------------------- totally ordered algebras

def _check_monotone(alg: FiniteAlgebra, w: TotalOrderWitness):
    order = np.asarray(w.order)
    if sorted(order.tolist()) != list(range(alg.size)):
        raise CompileError("order witness is not a permutation of the universe")
    rank = np.asarray(w.rank())
    tables = {}
    for op in alg.operations:
        r = op.arity
        arr = alg.array(op.name)
        F = rank[arr[np.ix_(*([order] * r))]] if r else rank[arr]
        for ax in range(r):
            if np.any(np.diff(F, axis=ax) < 0):
                raise CompileError(f"{op.name} is not monotone for the witness order")
        tables[op.name] = np.asarray(F)
    return rank, tables


class _Thresholds:
    """Monotone {and, or} circuits for the threshold bits of every gate.

    Upper bits [rank >= j] when iota is monotone, lower bits [rank < j] when it
    is reversed (both are monotone in the input bits).
    """

    def __init__(self, lc: LayeredCircuit, circ: AlgebraCircuit, iota, w: TotalOrderWitness):
        self.lc, self.circ = lc, circ
        self.rank, self.F = _check_monotone(circ.algebra, w)
        self.n = circ.algebra.size
        r0, r1 = int(self.rank[iota[0]]), int(self.rank[iota[1]])
        self.lower = r1 < r0
        self.r0, self.r1 = r0, r1
        self.memo: dict = {}
        self.corners: dict = {}

    def _corners(self, name, j):
        key = (name, j)
        if key in self.corners:
            return self.corners[key]
        F = self.F[name]
        n, r = self.n, F.ndim
        if self.lower:
            S = F < j
            ext = np.zeros_like(S)
            for ax in range(r):
                sl_to = [slice(None)] * r
                sl_from = [slice(None)] * r
                sl_to[ax] = slice(0, n - 1)
                sl_from[ax] = slice(1, n)
                up = np.zeros_like(S)
                up[tuple(sl_to)] = S[tuple(sl_from)]
                ext |= up
        else:
            S = F >= j
            ext = np.zeros_like(S)
            for ax in range(r):
                sl_to = [slice(None)] * r
                sl_from = [slice(None)] * r
                sl_to[ax] = slice(1, n)
                sl_from[ax] = slice(0, n - 1)
                down = np.zeros_like(S)
                down[tuple(sl_to)] = S[tuple(sl_from)]
                ext |= down
        out = [tuple(int(v) for v in t) for t in np.argwhere(S & ~ext)]
        self.corners[key] = out
        return out

    def bit(self, G: int, j: int) -> int:
        lc, n = self.lc, self.n
        if self.lower:
            if j <= 0:
                return lc.const(0)
            if j >= n:
                return lc.const(1)
        else:
            if j <= 0:
                return lc.const(1)
            if j >= n:
                return lc.const(0)
        key = (G, j)
        if key in self.memo:
            return self.memo[key]
        g = self.circ.gates[G]
        if g[0] == "var":
            lo, hi = min(self.r0, self.r1), max(self.r0, self.r1)
            if self.lower:       # [rank < j]; b = 1 gives the smaller rank
                w = lc.const(0) if j <= lo else lc.const(1) if j > hi else lc.input(g[1])
            else:
                w = lc.const(1) if j <= lo else lc.const(0) if j > hi else lc.input(g[1])
        elif g[0] == "const":
            rk = int(self.rank[g[1]])
            w = lc.const(rk < j if self.lower else rk >= j)
        else:
            terms = []
            for t in self._corners(g[1], j):
                if self.lower:
                    lits = [self.bit(c, ti + 1) for c, ti in zip(g[2], t) if ti < n - 1]
                else:
                    lits = [self.bit(c, ti) for c, ti in zip(g[2], t) if ti > 0]
                terms.append(self._and(lits))
            w = self._or(terms)
        self.memo[key] = w
        return w

    def _and(self, lits):
        lc = self.lc
        if any(self._is_const(x, 0) for x in lits):
            return lc.const(0)
        lits = sorted({x for x in lits if not self._is_const(x, 1)})
        if not lits:
            return lc.const(1)
        return lits[0] if len(lits) == 1 else lc.and_(lits)

    def _or(self, terms):
        lc = self.lc
        if any(self._is_const(x, 1) for x in terms):
            return lc.const(1)
        terms = sorted({x for x in terms if not self._is_const(x, 0)})
        if not terms:
            return lc.const(0)
        return terms[0] if len(terms) == 1 else lc.or_(terms)

    def _is_const(self, w, v):
        g = self.lc.gates[w]
        return g.kind == "const" and g.params["value"] == v

    def bits(self, G):
        return [self.bit(G, j) for j in range(1, self.n)]

    def rank_of(self, idx_bits: int) -> int:
        ones = bin(idx_bits).count("1")
        return (self.n - 1 - ones) if self.lower else ones

    def indicator_poly(self, G, r: int):
        """[rank(G) = r] as a list of (coeff, wires) over the threshold bits."""
        if self.lower:      # [rank < r+1] - [rank < r]
            pos, neg = self.bit(G, r + 1), self.bit(G, r)
        else:               # [rank >= r] - [rank >= r+1]
            pos, neg = self.bit(G, r), self.bit(G, r + 1)
        return _wire_poly(self.lc, [(1, (pos,)), (-1, (neg,))])


def _wire_poly(lc: LayeredCircuit, monos):
    """Fold constant wires into coefficients."""
    out: dict = {}
    for c, ws in monos:
        keep = []
        for w in ws:
            g = lc.gates[w]
            if g.kind == "const":
                if not g.params["value"]:
                    c = 0
                    break
            else:
                keep.append(w)
        if c:
            key = tuple(sorted(set(keep)))
            out[key] = out.get(key, 0) + c
    return [(c, k) for k, c in out.items() if c]


def extract_multimonotone(p: Program, w: TotalOrderWitness) -> LayeredCircuit:
    """BOUND over monotone {and, or} circuits for a program over a totally ordered algebra.

    Size: every gate gets at most n - 1 threshold bits, each an OR of at most
    n^r ANDs, so O(l).
    """
    lc = LayeredCircuit(p.arity)
    th = _Thresholds(lc, p.circuit, p.iota, w)
    ranks = sorted({int(th.rank[s]) for s in p.accepting})
    n = th.n
    out = p.output
    if not ranks:
        return lc.set_output(lc.const(0))
    if len(ranks) == n:
        return lc.set_output(lc.const(1))
    if th.lower and ranks == list(range(ranks[-1] + 1)):
        return lc.set_output(th.bit(out, ranks[-1] + 1))
    if not th.lower and ranks == list(range(ranks[0], n)):
        return lc.set_output(th.bit(out, ranks[0]))
    bits = th.bits(out)
    table = [th.rank_of(i) in ranks for i in range(1 << (n - 1))]
    return lc.set_output(lc.bound(table, bits))


# ----------------------------------------------------------------- affine and nilpotent

def _essential(F: np.ndarray, r: int):
    """Axes among the first r on which F varies, and F restricted to them."""
    axes = [ax for ax in range(r) if np.any(F != np.take(F, [0], axis=ax))]
    idx = tuple(slice(None) if ax in axes else 0 for ax in range(r))
    return axes, F[idx]


def _expand(F: np.ndarray, r: int, p: int):
    """F: B^r -> Z_p as baseline + sum of (coeff, ((axis, class), ..)) indicator monomials."""
    axes, Fe = _essential(F % p, r)
    if not axes:
        return int(Fe) % p, []
    vals = Fe.reshape(-1)
    base = Counter(vals.tolist()).most_common(1)[0][0]
    terms = []
    for flat in np.nonzero(vals != base)[0]:
        cls = np.unravel_index(int(flat), Fe.shape)
        terms.append(((int(vals[flat]) - base) % p, tuple(zip(axes, (int(c) for c in cls)))))
    return int(base), terms


class _Level:
    """One step of a chain: a rep together with the program read over rep.alg."""

    def __init__(self, rep: ActionProductRep, circ: AlgebraCircuit, iota):
        self.rep = rep
        self.circ = circ
        self.iota = tuple(int(v) for v in iota)
        self._qcirc = None

    @property
    def trivial_quotient(self) -> bool:
        return self.rep.quotient.size == 1

    def quotient_level_inputs(self):
        if self._qcirc is None:
            self._qcirc = quotient_circuit(self.circ, self.rep.quotient, self.rep.proj)
        return self._qcirc, tuple(int(self.rep.proj[v]) for v in self.iota)


def _levels(p: Program, reps) -> list[_Level]:
    levels = []
    circ, iota = p.circuit, p.iota
    for i, rep in enumerate(reps):
        _check_same_algebra(rep.alg, circ.algebra, f"chain step {i}")
        lv = _Level(rep, circ, iota)
        levels.append(lv)
        circ, iota = lv.quotient_level_inputs()
    return levels


def _prog_chi(lc: LayeredCircuit, level: _Level):
    """chi(G, c) as PROG gates over the quotient."""
    qcirc, qiota = level.quotient_level_inputs()
    inputs = [lc.input(j) for j in range(lc.arity)]
    progs: dict = {}

    def chi(G, c):
        key = (G, c)
        if key not in progs:
            prog = Program(qcirc, qiota, {c}, output=G)
            progs[key] = lc.prog(prog, inputs)
        return progs[key]
    return chi


def _nilpotent_into(lc: LayeredCircuit, level: _Level, accepting, out: int, chi) -> int:
    """MOD_p over AND over chi wires (chi(G, c) -> wire, or None on a trivial quotient)."""
    rep, circ = level.rep, level.circ
    if not rep.central:
        raise CompileError("nilpotent step needs a central atom (rep mismatch)")
    p, k = rep.p, rep.k
    anc = circ.ancestors(out)
    L = {G: np.zeros((k, k), dtype=np.int64) for G in anc}
    L[out] = np.eye(k, dtype=np.int64)
    ell = {name: [m.reshape(-1, k, k)[0] for m in mats] for name, mats in rep.ell.items()}
    for G in reversed(anc):
        g = circ.gates[G]
        if g[0] == "op":
            for i, ch in enumerate(g[2]):
                L[ch] = (L[ch] + L[G] @ ell[g[1]][i]) % p
    coeff = [Counter() for _ in range(k)]      # wire -> multiplicity per coordinate
    const = np.zeros(k, dtype=np.int64)
    c0, c1 = rep.coords[level.iota[0]], rep.coords[level.iota[1]]
    for G in anc:
        g = circ.gates[G]
        LG = L[G]
        if not LG.any():
            continue
        if g[0] == "var":
            const += LG @ c0
            wv = LG @ (c1 - c0) % p
            for s in range(k):
                if wv[s]:
                    coeff[s][lc.input(g[1])] += int(wv[s])
        elif g[0] == "const":
            const += LG @ rep.coords[g[1]]
        else:
            r = len(g[2])
            H = (rep.hat[g[1]] @ LG.T) % p if r else (LG @ rep.hat[g[1]]) % p
            if r == 0:
                const += H
                continue
            for s in range(k):
                base, terms = _expand(H[..., s], r, p)
                const[s] += base
                for cf, mono in terms:
                    wires = sorted({chi(g[2][ax], c) for ax, c in mono} - {None})
                    if not wires:
                        const[s] += cf
                        continue
                    w = wires[0] if len(wires) == 1 else lc.and_(wires)
                    coeff[s][w] += cf
    const %= p
    mods = []
    for s in range(k):
        ins = []
        for w, m in sorted(coeff[s].items()):
            ins += [w] * (m % p)
        mods.append(ins)
    clauses = []
    for a in sorted(accepting):
        target = (rep.coords[a] - const) % p
        parts = [lc.mod(p, {int(target[s])}, mods[s]) for s in range(k)]
        q = chi(out, int(rep.proj[a]))
        if q is not None:
            parts.append(q)
        clauses.append(parts[0] if len(parts) == 1 else lc.and_(parts))
    if not clauses:
        return lc.const(0)
    return clauses[0] if len(clauses) == 1 else lc.or_(clauses)


def compile_affine_simple(p: Program, rep: ActionProductRep) -> LayeredCircuit:
    """OR over AND over MOD_p for a program over a module (single-factor rep).

    Gate count O(|S| k), edges O(|S| k l).
    """
    if rep.quotient.size != 1:
        raise CompileError("affine compilation needs a single-factor module rep")
    lv = _levels(p, [rep])[0]
    lc = LayeredCircuit(p.arity)
    return lc.set_output(_nilpotent_into(lc, lv, p.accepting, p.output, lambda G, c: None))


def compile_nilpotent_step(p: Program, rep: ActionProductRep) -> LayeredCircuit:
    """OR/AND over MOD_p over AND over PROG gates of the quotient A/alpha."""
    lv = _levels(p, [rep])[0]
    lc = LayeredCircuit(p.arity)
    chi = (lambda G, c: None) if lv.trivial_quotient else _prog_chi(lc, lv)
    return lc.set_output(_nilpotent_into(lc, lv, p.accepting, p.output, chi))


def _chain_chi(lc, levels, i, into, terminal=None):
    """chi for level i: compile the quotient's indicator program with level i+1."""
    if levels[i].trivial_quotient:
        return lambda G, c: None
    if i + 1 == len(levels):
        if terminal is None:
            raise CompileError("chain does not reach a trivial quotient")
        return terminal
    memo: dict = {}
    nxt = _chain_chi(lc, levels, i + 1, into, terminal)

    def chi(G, c):
        key = (G, c)
        if key not in memo:
            memo[key] = into(lc, levels[i + 1], {c}, G, nxt)
        return memo[key]
    return chi


def compile_nilpotent_full(p: Program, reps) -> LayeredCircuit:
    """Iterated nilpotent steps down a chain; no PROG gates remain."""
    levels = _levels(p, reps)
    if not levels:
        raise CompileError("empty chain")
    lc = LayeredCircuit(p.arity)
    chi = _chain_chi(lc, levels, 0, _nilpotent_into)
    lc.set_output(_nilpotent_into(lc, levels[0], p.accepting, p.output, chi))
    return lc


def _bool_poly(lc: LayeredCircuit, p: int, cap: int):
    """GF(p) polynomial (x^2 = x) of every gate reachable from the output."""
    from .abp import Poly
    one = Poly.const(p, 1)
    polys: dict = {}
    for i in lc.ancestors():
        g = lc.gates[i]
        ins = [polys[j] for j in g.inputs]
        if g.kind == "input":
            P = Poly.var(p, g.params["index"])
        elif g.kind == "const":
            P = Poly.const(p, g.params["value"])
        elif g.kind == "not":
            P = one + ins[0].scale(-1)
        elif g.kind == "and":
            P = one
            for x in ins:
                P = (P * x).boolean()
        elif g.kind == "or":
            Q = one
            for x in ins:
                Q = (Q * (one + x.scale(-1))).boolean()
            P = one + Q.scale(-1)
        elif g.kind == "mod":
            m = g.params["m"]
            if m != p:
                raise CompileError("flattening needs MOD gates of the prime modulus")
            S = Poly(p)
            for x in ins:
                S = S + x
            P = Poly(p)
            for a in g.params["accept"]:
                D = S + Poly.const(p, -a)
                pw = one
                for _ in range(p - 1):
                    pw = (pw * D).boolean()
                P = P + one + pw.scale(-1)
        elif g.kind == "bound":
            P = Poly(p)
            for idx, v in enumerate(g.params["table"]):
                if not v:
                    continue
                T = one
                for b, x in enumerate(ins):
                    T = (T * (x if idx >> b & 1 else one + x.scale(-1))).boolean()
                P = P + T
        else:
            raise CompileError(f"shape violation: {g.kind} gate")
        if len(P.terms) > cap:
            raise CompileError("flattening exceeds the monomial cap")
        polys[i] = P
    return polys[lc.output]


def flatten_and_mod_and(lc: LayeredCircuit, p: int | None = None, cap: int = 200000) -> LayeredCircuit:
    """One MOD_p gate over AND gates computing the same function.

    Every gate is read as a 0/1-valued GF(p) polynomial with x^2 = x; the
    output polynomial's monomials become AND gates feeding a single MOD_p
    gate that accepts {1}.  Degree is at most d * d' * (p - 1).
    """
    if p is None:
        mods = {lc.gates[i].params["m"] for i in lc.ancestors() if lc.gates[i].kind == "mod"}
        if len(mods) != 1:
            raise CompileError("shape violation: need MOD gates of a single prime modulus")
        p = mods.pop()
    P = _bool_poly(lc, p, cap)
    out = LayeredCircuit(lc.arity)
    ins = []
    for mono, c in sorted(P.terms.items()):
        if not mono:
            w = out.const(1)
        elif len(mono) == 1:
            w = out.input(mono[0])
        else:
            w = out.and_([out.input(v) for v in mono])
        ins += [w] * c
    return out.set_output(out.mod(p, {1}, ins))


def compile_cc_to_nilpotent(lc: LayeredCircuit, m: int, h: int, alg: FiniteAlgebra | None = None
                            ) -> Program:
    """A MOD_m circuit of height <= h as a program over example-nilpo(m, h).

    Input bits live in coordinate h; a gate of layer L sums its inputs (moved
    to coordinate h - L + 1) and chi moves the accepted bit one coordinate up.
    Size: O(|lc| h).
    """
    from .fixtures import example_nilpo, nilpo_codec
    A = alg or example_nilpo(m, h)
    codec = nilpo_codec(m, h)
    layer = {}
    for i in lc.ancestors():
        g = lc.gates[i]
        if g.kind in ("input", "const"):
            layer[i] = 0
        elif g.kind == "mod":
            if g.params["m"] != m:
                raise CompileError("MOD modulus differs from the algebra")
            layer[i] = 1 + max((layer[j] for j in g.inputs), default=0)
        else:
            raise CompileError(f"only MOD_m gates allowed, found {g.kind}")
    if layer[lc.output] > h:
        raise CompileError(f"height {layer[lc.output]} exceeds {h}")
    circ = AlgebraCircuit(A, lc.arity)
    zero = codec.encode((0,) * h)
    one_h = codec.encode((0,) * (h - 1) + (1,))
    where: dict = {}           # wire -> (gate, coordinate holding a 0/1 value)
    lift_memo: dict = {}

    def at(i, coord):
        gate, cur = where[i]
        while cur > coord:
            key = (gate, cur)
            if key not in lift_memo:
                lift_memo[key] = circ.op(f"chi{cur}_{1 << 1}", gate)
            gate = lift_memo[key]
            cur -= 1
        return gate

    def mask(acc):
        return sum(1 << a for a in acc)

    for i in lc.ancestors():
        g = lc.gates[i]
        if g.kind == "input":
            where[i] = (circ.var(g.params["index"]), h)
        elif g.kind == "const":
            where[i] = (circ.const(one_h if g.params["value"] else zero), h)
        else:
            coord = h - layer[i] + 1
            xs = [at(j, coord) for j in g.inputs]
            acc = xs[0] if xs else circ.const(zero)
            for x in xs[1:]:
                acc = circ.op("add", acc, x)
            if i == lc.output:
                where[i] = (acc, coord)
                circ.output = acc
                S = {a for a in range(A.size) if codec.decode(a)[coord - 1] in g.params["accept"]}
                return Program(circ, (zero, one_h), S)
            where[i] = (circ.op(f"chi{coord}_{mask(g.params['accept'])}", acc), coord - 1)
    gate, coord = where[lc.output]
    circ.output = gate
    if lc.gates[lc.output].kind == "const":
        return Program(circ, (zero, one_h), {one_h})
    S = {a for a in range(A.size) if codec.decode(a)[coord - 1] == 1}
    return Program(circ, (zero, one_h), S)


# ----------------------------------------------------------------- ABPs and determinism

def compile_abp_to_detalg(g: BabpGate) -> Program:
    """BABP gate as a program over nudet-exact(p); ABP values live in the x coordinate.

    Size: at most (p + max fan-in) gates per step.
    """
    a = g.abp
    p = a.prime
    A = nudet_exact(p)
    circ = AlgebraCircuit(A, a.arity)
    zero = circ.const(0)
    val = []
    for st in a.steps:
        kind = st[0]
        if kind == "one":
            val.append(circ.const(p))                  # (1, 0)
        elif kind == "scale":
            c = st[2] % p
            if c == 0:
                val.append(zero)
                continue
            acc = val[st[1]]
            for _ in range(c - 1):
                acc = circ.op("add", acc, val[st[1]])
            val.append(acc)
        elif kind == "mulvar":
            val.append(circ.op("v", val[st[1]], circ.var(st[2])))
        else:
            refs = [val[r] for r in st[1]]
            acc = refs[0] if refs else zero
            for x in refs[1:]:
                acc = circ.op("add", acc, x)
            val.append(acc)
    circ.output = val[a.output] if a.steps else zero
    return Program(circ, (0, 1), {x * p for x in g.accepting})


def _detect_nudet_prime(alg: FiniteAlgebra) -> int:
    n = alg.size
    p = int(round(n ** 0.5))
    if p * p != n:
        raise CompileError("foreign algebra: not of the form Z_p x Z_p")
    ref = nudet_exact(p)
    try:
        _check_same_algebra(ref, alg, "detalg->abp")
    except CompileError:
        raise CompileError("foreign algebra: tables differ from nudet-exact(p)")
    return p


def compile_detalg_to_abp(prog: Program) -> BabpGate:
    """Program over nudet-exact(p) as one BABP gate.

    Every gate keeps the normal form (a_f(b), A_f(b)) with a_f an ABP step and
    A_f an affine form in the input bits.  Size: O(l * n) steps before the
    final bounded composition, which multiplies by a constant.
    """
    p = _detect_nudet_prime(prog.algebra)
    n = prog.arity
    b = _Builder(p, n)
    one = b.one()
    zero = b.add(("sum", ()))

    def dec(e):
        return divmod(int(e), p)

    x0, y0 = dec(prog.iota[0])
    x1, y1 = dec(prog.iota[1])
    circ = prog.circuit
    a_of: dict = {}
    A_of: dict = {}

    def affine_steps(form):
        coef, c = form
        parts = [b.scale(b.mulvar(one, v), int(coef[v])) for v in range(n) if coef[v] % p]
        if c % p:
            parts.append(b.scale(one, c))
        return b.add(("sum", tuple(parts))) if len(parts) != 1 else parts[0]

    zero_form = (np.zeros(n, dtype=np.int64), 0)
    for G in circ.ancestors(prog.output):
        g = circ.gates[G]
        if g[0] == "var":
            j = g[1]
            parts = []
            if x0:
                parts.append(b.scale(one, x0))
            if (x1 - x0) % p:
                parts.append(b.scale(b.mulvar(one, j), (x1 - x0) % p))
            a_of[G] = b.add(("sum", tuple(parts))) if len(parts) != 1 else parts[0]
            coef = np.zeros(n, dtype=np.int64)
            coef[j] = (y1 - y0) % p
            A_of[G] = (coef, y0 % p)
        elif g[0] == "const":
            x, y = dec(g[1])
            a_of[G] = b.scale(one, x) if x else zero
            A_of[G] = (np.zeros(n, dtype=np.int64), y)
        else:
            name, ch = g[1], g[2]
            if name == "add":
                a_of[G] = b.add(("sum", (a_of[ch[0]], a_of[ch[1]])))
                A_of[G] = ((A_of[ch[0]][0] + A_of[ch[1]][0]) % p, (A_of[ch[0]][1] + A_of[ch[1]][1]) % p)
            elif name == "pi1":
                a_of[G], A_of[G] = a_of[ch[0]], zero_form
            elif name == "pi2":
                a_of[G], A_of[G] = zero, A_of[ch[0]]
            elif name == "u":
                a_of[G], A_of[G] = affine_steps(A_of[ch[0]]), zero_form
            elif name == "v":
                src = a_of[ch[0]]
                coef, c = A_of[ch[1]]
                parts = [b.scale(b.mulvar(src, v), int(coef[v])) for v in range(n) if coef[v] % p]
                if c % p:
                    parts.append(b.scale(src, c))
                a_of[G] = b.add(("sum", tuple(parts))) if len(parts) != 1 else parts[0]
                A_of[G] = zero_form
            else:
                raise CompileError(f"foreign operation {name}")
    out = prog.output
    A_out = affine_steps(A_of[out])
    pa = AbpProcess(p, n, list(b.steps), a_of[out]).trimmed()
    pA = AbpProcess(p, n, list(b.steps), A_out).trimmed()
    S = {dec(s) for s in prog.accepting}
    table = [1 if (x, y) in S else 0 for x in range(p) for y in range(p)]
    return BabpGate(compose_bounded(table, [pa, pA]).trimmed(), {1})


# ----------------------------------------------------------------- solvable steps

def _solvable_into(lc: LayeredCircuit, level: _Level, accepting, out: int, chi) -> int:
    """One BABP_p gate over the inputs and chi wires.

    chi(G, c) returns a polynomial [(coeff, wires)] for [G/alpha = c], or
    None when the quotient is trivial.
    """
    rep, circ = level.rep, level.circ
    p, k = rep.p, rep.k
    b = _Builder(p, 0)
    one = b.one()
    var_of: dict[int, int] = {}
    wires: list[int] = []

    def var(w):
        if w not in var_of:
            var_of[w] = len(wires)
            wires.append(w)
        return var_of[w]

    def times(X, poly):
        """Step for X * poly."""
        parts = []
        for cf, ws in poly:
            s = X
            for w in ws:
                s = b.mulvar(s, var(w))
            parts.append(b.scale(s, cf % p))
        return b.add(("sum", tuple(parts))) if len(parts) != 1 else parts[0]

    def chi_poly(mono, children):
        poly = [(1, ())]
        for ax, c in mono:
            q = chi(children[ax], c)
            if q is None:
                continue
            poly = [(c1 * c2 % p, w1 + w2) for c1, w1 in poly for c2, w2 in q if c1 * c2 % p]
        return poly

    c0, c1 = rep.coords[level.iota[0]], rep.coords[level.iota[1]]
    m: dict = {}
    for G in circ.ancestors(out):
        g = circ.gates[G]
        if g[0] == "var":
            x = None
            vals = []
            for s in range(k):
                parts = []
                if c0[s]:
                    parts.append(b.scale(one, int(c0[s])))
                d = int(c1[s] - c0[s]) % p
                if d:
                    x = x if x is not None else b.mulvar(one, var(lc.input(g[1])))
                    parts.append(b.scale(x, d))
                vals.append(b.add(("sum", tuple(parts))) if len(parts) != 1 else parts[0])
            m[G] = vals
        elif g[0] == "const":
            m[G] = [b.scale(one, int(v)) if v else b.add(("sum", ())) for v in rep.coords[g[1]]]
        else:
            name, ch = g[1], g[2]
            r = len(ch)
            terms = [[] for _ in range(k)]
            sources = [(rep.hat[name][..., s], one, s) for s in range(k)]
            for i in range(r):
                for s in range(k):
                    for u in range(k):
                        sources.append((rep.ell[name][i][..., s, u], m[ch[i]][u], s))
            for F, X, s in sources:
                base, extra = _expand(F, r, p)
                if base:
                    terms[s].append(b.scale(X, base))
                for cf, mono in extra:
                    terms[s].append(b.scale(times(X, chi_poly(mono, ch)), cf))
            m[G] = [b.add(("sum", tuple(t))) if len(t) != 1 else t[0] for t in terms]
    # acceptance: sum over classes c of chi_c(out) * [coords in M_c]
    groups: dict = {}
    for a in accepting:
        groups.setdefault(int(rep.proj[a]), set()).add(tuple(int(v) for v in rep.coords[a]))
    by_table: dict = {}
    for c, vecs in groups.items():
        by_table.setdefault(frozenset(vecs), []).append(c)
    polys = {c: chi(out, c) for c in groups}
    for poly in polys.values():
        for _, ws in poly or []:
            for w in ws:
                var(w)
    b.arity = len(wires)
    parts = [AbpProcess(p, b.arity, list(b.steps), m[out][s]).trimmed() for s in range(k)]
    finals = []
    for vecs, classes in sorted(by_table.items(), key=lambda kv: sorted(kv[1])):
        table = [1 if v in vecs else 0 for v in itertools.product(range(p), repeat=k)]
        D = compose_bounded(table, parts).trimmed()
        d_out = b.splice(D, one)
        if polys[classes[0]] is None:
            finals.append(d_out)
        else:
            for c in classes:
                finals.append(times(d_out, polys[c]))
    b.arity = len(wires)
    top = b.add(("sum", tuple(finals))) if len(finals) != 1 else finals[0]
    abp = b.build(top).trimmed()
    gate = BabpGate(abp, {1})
    return lc.babp(gate, wires)


def _wire_chi(chi_wire):
    def chi(G, c):
        w = chi_wire(G, c)
        return None if w is None else [(1, (w,))]
    return chi


def compile_solvable_step(p: Program, rep: ActionProductRep) -> LayeredCircuit:
    """BABP_p over PROG gates of the quotient A/alpha."""
    lv = _levels(p, [rep])[0]
    lc = LayeredCircuit(p.arity)
    chi = (lambda G, c: None) if lv.trivial_quotient else _wire_chi(_prog_chi(lc, lv))
    return lc.set_output(_solvable_into(lc, lv, p.accepting, p.output, chi))


def _solvable_chain_chi(lc, levels, i, terminal=None):
    if levels[i].trivial_quotient:
        return lambda G, c: None
    if i + 1 == len(levels):
        if terminal is None:
            raise CompileError("chain does not reach a trivial quotient")
        return terminal
    memo: dict = {}
    nxt = _solvable_chain_chi(lc, levels, i + 1, terminal)

    def chi(G, c):
        key = (G, c)
        if key not in memo:
            memo[key] = [(1, (_solvable_into(lc, levels[i + 1], {c}, G, nxt),))]
        return memo[key]
    return chi


def compile_solvable_full(p: Program, reps) -> LayeredCircuit:
    """Stacked BABP layers down a chain with abelian covers; only BABP gates remain."""
    levels = _levels(p, reps)
    if not levels:
        raise CompileError("empty chain")
    lc = LayeredCircuit(p.arity)
    chi = _solvable_chain_chi(lc, levels, 0)
    return lc.set_output(_solvable_into(lc, levels[0], p.accepting, p.output, chi))


def compile_itdet_to_solvable(lc: LayeredCircuit, primes, alg: FiniteAlgebra | None = None) -> Program:
    """Stacked BABP circuit as a program over solv-construc(primes).

    Block h (last) reads the inputs; a BABP gate of layer L runs in block
    h - L + 1 and chi moves its accepted bit to the y coordinate of the next
    block up.
    """
    primes = tuple(primes)
    h = len(primes)
    A = alg or solv_construc(primes)
    codec = solv_codec(primes)

    def element(block_vals: dict):
        digits = [0] * (2 * h)
        for (blk, which), v in block_vals.items():
            digits[2 * (blk - 1) + which] = v
        return codec.encode(digits)

    zero = element({})
    one_in = element({(h, 1): 1})
    block: dict = {}
    for i in lc.ancestors():
        g = lc.gates[i]
        if g.kind in ("input", "const"):
            block[i] = h + 1          # layer 0
        elif g.kind == "babp":
            blk = min(block[j] for j in g.inputs) - 1 if g.inputs else h
            while blk >= 1 and primes[blk - 1] != g.params["gate"].abp.prime:
                blk -= 1
            if blk < 1:
                raise CompileError("prime mismatch or height exceeded")
            block[i] = blk
        else:
            raise CompileError(f"only BABP gates allowed, found {g.kind}")
    if lc.gates[lc.output].kind == "babp" and block[lc.output] < 1:
        raise CompileError("height exceeded")
    circ = AlgebraCircuit(A, lc.arity)
    where: dict = {}        # wire -> (gate, block whose y holds the bit)
    lift_memo: dict = {}

    def at(i, blk):
        gate, cur = where[i]
        while cur > blk:
            key = (gate, cur)
            if key not in lift_memo:
                lift_memo[key] = circ.op(f"chi{cur}_{1 << 1}", circ.op(f"u{cur}", gate))
            gate = lift_memo[key]
            cur -= 1
        return gate

    for i in lc.ancestors():
        g = lc.gates[i]
        if g.kind == "input":
            where[i] = (circ.var(g.params["index"]), h)
            continue
        if g.kind == "const":
            where[i] = (circ.const(one_in if g.params["value"] else zero), h)
            continue
        blk = block[i]
        gate: BabpGate = g.params["gate"]
        a = gate.abp
        ins = [at(j, blk) for j in g.inputs]
        zero_g = circ.const(zero)
        val = []
        for st in a.steps:
            kind = st[0]
            if kind == "one":
                val.append(circ.const(element({(blk, 0): 1})))
            elif kind == "scale":
                c = st[2] % a.prime
                if c == 0:
                    val.append(zero_g)
                    continue
                acc = val[st[1]]
                for _ in range(c - 1):
                    acc = circ.op(f"add{blk}", acc, val[st[1]])
                val.append(acc)
            elif kind == "mulvar":
                val.append(circ.op(f"v{blk}", val[st[1]], ins[st[2]]))
            else:
                refs = [val[r] for r in st[1]]
                acc = refs[0] if refs else zero_g
                for x in refs[1:]:
                    acc = circ.op(f"add{blk}", acc, x)
                val.append(acc)
        res = val[a.output] if a.steps else zero_g
        if i == lc.output:
            circ.output = res
            S = {e for e in range(A.size) if codec.decode(e)[2 * (blk - 1)] in gate.accepting}
            return Program(circ, (zero, one_in), S)
        if blk < 2:
            raise CompileError("height exceeded")
        mask = sum(1 << s for s in gate.accepting)
        where[i] = (circ.op(f"chi{blk}_{mask}", res), blk - 1)
    gate, blk = where[lc.output]
    circ.output = gate
    if lc.gates[lc.output].kind == "const":
        return Program(circ, (zero, one_in), {one_in})
    S = {e for e in range(A.size) if codec.decode(e)[2 * (blk - 1) + 1] == 1}
    return Program(circ, (zero, one_in), S)


# ----------------------------------------------------------------- mixed: solvable over ordered

def ordered_factors(Q: FiniteAlgebra):
    """[(psi, Q/psi, projection, witness)] with Q a subdirect product of the totally ordered Q/psi."""
    if Q.size <= 8:
        w = totally_ordered_check(Q)
        if w is not None:
            return [(Congruence.zero(Q.size), Q, np.arange(Q.size), w)]
    lat = congruence_lattice(Q)
    out = []
    for i in range(len(lat)):
        if i == lat.one or len(lat.upper_covers(i)) != 1:
            continue
        psi = lat.members[i]
        F, proj = quotient_algebra(Q, psi)
        if F.size > 8:
            return None
        w = totally_ordered_check(F)
        if w is None:
            return None
        out.append((psi, F, proj, w))
    return out


def compile_mixed(p: Program, beta: Congruence, reps, factors=None) -> LayeredCircuit:
    """BABP layers down to beta whose lowest layer reads monotone circuits directly.

    The quotient programs over A/beta are split over its totally ordered
    factors; each indicator [G/beta = c] is a product of differences of
    threshold bits, substituted into the lowest BABP layer as a polynomial.
    """
    levels = _levels(p, reps)
    if levels:
        Q = levels[-1].rep.quotient
        qcirc, qiota = levels[-1].quotient_level_inputs()
    else:
        Q, qcirc, qiota = p.algebra, p.circuit, p.iota
    if beta.num_blocks != Q.size:
        raise CompileError("the chain does not end at beta")
    lc = LayeredCircuit(p.arity)
    if Q.size == 1:
        chi = _solvable_chain_chi(lc, levels, 0)
        return lc.set_output(_solvable_into(lc, levels[0], p.accepting, p.output, chi))
    factors = factors if factors is not None else ordered_factors(Q)
    if not factors:
        raise CompileError("A/beta is not a subdirect product of totally ordered algebras")
    ths = []
    for psi, F, proj, w in factors:
        fcirc = quotient_circuit(qcirc, F, proj)
        ths.append((proj, _Thresholds(lc, fcirc, tuple(int(proj[v]) for v in qiota), w)))

    def terminal(G, c):
        poly = [(1, ())]
        for proj, th in ths:
            q = th.indicator_poly(G, int(th.rank[int(proj[c])]))
            poly = [(c1 * c2, tuple(sorted(set(w1 + w2)))) for c1, w1 in poly for c2, w2 in q]
        return _wire_poly(lc, poly)

    if not levels:
        # trivial BABP wrapper over GF(2): sum of the exclusive indicators
        b = _Builder(2, 0)
        one = b.one()
        wires: list[int] = []
        parts = []
        for c in sorted(p.accepting):
            for cf, ws in terminal(p.output, c):
                s = one
                for w in ws:
                    if w not in wires:
                        wires.append(w)
                    s = b.mulvar(s, wires.index(w))
                parts.append(b.scale(s, cf % 2))
        b.arity = len(wires)
        top = b.add(("sum", tuple(parts)))
        gate = BabpGate(b.build(top).trimmed(), {1})
        return lc.set_output(lc.babp(gate, wires))
    chi = _solvable_chain_chi(lc, levels, 0, terminal)
    return lc.set_output(_solvable_into(lc, levels[0], p.accepting, p.output, chi))
