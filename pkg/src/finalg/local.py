"""Minimal sets, traces, the induced order on a two-element minimal set, and
budgeted type labels for prime quotients.

Two routes produce minimal sets:

* clone route: enumerate the whole unary polynomial clone and take the
  inclusion-minimal separating images (small algebras);
* descent route: shrink the universe by separating idempotents built from
  basic translations, then enumerate polynomial restrictions to the image V.
  Every minimal image found this way is a genuine minimal set, but only
  the minimal sets inside V are listed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .congruence import (Congruence, cover_is_abelian, detect_abelian_group,
                         find_tc_failure, image_congruence, quotient_algebra)
from .core_algebra import (AlgebraError, CapExceeded, FiniteAlgebra, poly_closure,
                           projection_tables, unary_poly_clone_array)

CLONE_ROUTE_CAP = 20000
DEFAULT_BUDGET = 200000
TYPES = ("1", "2", "3", "4", "5", "unclassified")


@dataclass
class PrimeQuotient:
    lower: Congruence
    upper: Congruence
    type_label: str = "unclassified"
    characteristic: int | None = None
    evidence: str = ""


@dataclass
class MinimalSet:
    lower: Congruence
    upper: Congruence
    members: tuple
    idempotent: tuple
    traces: list
    tail: tuple
    route: str = "clone"


# ----------------------------------------------------------------- helpers

def idempotent_power(g) -> np.ndarray:
    """The unique idempotent among the powers of g."""
    g = np.asarray(g)
    n = len(g)
    f = g.copy()
    for _ in range(n):            # past the index of g
        f = g[f]
    img = np.unique(f)
    # f permutes its image; raise to the order of that permutation
    order = 1
    seen = set()
    for s in img.tolist():
        if s in seen:
            continue
        length, x = 0, s
        while True:
            seen.add(x)
            x = int(f[x])
            length += 1
            if x == s:
                break
        order = order * length // math.gcd(order, length)
    e = np.arange(n)
    base, k = f, order
    while k:
        if k & 1:
            e = base[e]
        base = base[base]
        k >>= 1
    return e


def _class_pairs(lo: Congruence, hi: Congruence):
    """One pair of lo-class representatives per pair of distinct lo-classes inside an hi-block."""
    reps = [blk[0] for blk in lo.blocks()]
    xs, ys = [], []
    for i, a in enumerate(reps):
        for b in reps[i + 1:]:
            if hi.related(a, b):
                xs.append(a)
                ys.append(b)
    return np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)


def _separates(rows: np.ndarray, lo: Congruence, X, Y) -> np.ndarray:
    if len(X) == 0:
        return np.zeros(len(rows), dtype=bool)
    ids = lo.ids
    return np.any(ids[rows[:, X]] != ids[rows[:, Y]], axis=1)


def _minimal_images(rows: np.ndarray) -> list[frozenset]:
    images = {frozenset(np.unique(r).tolist()) for r in rows}
    ordered = sorted(images, key=lambda s: (len(s), sorted(s)))
    out = []
    for s in ordered:
        if not any(m < s for m in out):
            out.append(s)
    return out


def _traces(members, lo: Congruence, hi: Congruence):
    traces = []
    covered = set()
    for blk in hi.blocks():
        part = [x for x in members if x in set(blk)]
        if len({int(lo.ids[x]) for x in part}) > 1:
            traces.append(tuple(part))
            covered |= set(part)
    tail = tuple(x for x in members if x not in covered)
    return traces, tail


# ----------------------------------------------------------------- minimal sets

def minimal_sets(alg: FiniteAlgebra, lo: Congruence, hi: Congruence,
                 clone_cap: int = CLONE_ROUTE_CAP, cap: int = DEFAULT_BUDGET) -> list[MinimalSet]:
    if not (lo.leq(hi) and lo != hi):
        raise AlgebraError("need lower < upper")
    X, Y = _class_pairs(lo, hi)
    try:
        clone = unary_poly_clone_array(alg, clone_cap)
    except CapExceeded:
        return _minimal_sets_descent(alg, lo, hi, X, Y, cap)
    sep = clone[_separates(clone, lo, X, Y)]
    out = []
    for U in _minimal_images(sep):
        members = np.array(sorted(U))
        fix = np.all(clone[:, members] == members, axis=1)
        img_ok = np.array([set(np.unique(r).tolist()) == U for r in clone])
        cand = np.nonzero(fix & img_ok)[0]
        if len(cand) == 0:
            raise AlgebraError("no idempotent for a minimal image")
        e = clone[cand[0]]
        traces, tail = _traces(members.tolist(), lo, hi)
        out.append(MinimalSet(lo, hi, tuple(members.tolist()), tuple(int(v) for v in e),
                              traces, tail, "clone"))
    if not out:
        raise AlgebraError("no minimal set found (not a cover?)")
    return out


def _minimal_sets_descent(alg, lo, hi, X, Y, cap):
    n = alg.size
    ids = lo.ids

    def sep(h):
        return bool(np.any(ids[h[X]] != ids[h[Y]]))

    h = np.arange(n)
    trans = alg.basic_translations()
    trans = trans[np.argsort([len(np.unique(t)) for t in trans], kind="stable")]
    improved = True
    while improved:
        improved = False
        size = len(np.unique(h))
        for t in trans:
            g = idempotent_power(t[h])
            if len(np.unique(g)) < size and sep(g):
                h = g
                improved = True
                break
    V = np.unique(h)
    pos = {int(v): i for i, v in enumerate(V)}
    P = poly_closure(alg, V[None, :], cap)
    hx, hy = h[X], h[Y]
    keep = ids[hx] != ids[hy]
    pa = np.array([pos[int(v)] for v in hx[keep]], dtype=np.int64)
    pb = np.array([pos[int(v)] for v in hy[keep]], dtype=np.int64)
    sep_rows = P[np.any(ids[P[:, pa]] != ids[P[:, pb]], axis=1)]
    out = []
    hpos = np.array([pos[int(v)] for v in h])
    for U in _minimal_images(sep_rows):
        members = np.array(sorted(U))
        mpos = np.array([pos[int(u)] for u in members])
        fix = np.all(P[:, mpos] == members, axis=1)
        cand = [i for i in np.nonzero(fix)[0] if set(np.unique(P[i]).tolist()) == U]
        if not cand:
            raise AlgebraError("no idempotent for a minimal image")
        e = P[cand[0]][hpos]
        assert np.array_equal(e[e], e) and sep(e)
        traces, tail = _traces(members.tolist(), lo, hi)
        out.append(MinimalSet(lo, hi, tuple(members.tolist()), tuple(int(v) for v in e),
                              traces, tail, "descent"))
    if not out:
        raise AlgebraError("no minimal set found (not a cover?)")
    return out


# ----------------------------------------------------------------- induced order

@dataclass
class UOrder:
    minimal_set: MinimalSet
    zero_u: int
    one_u: int
    maps: np.ndarray          # every unary polynomial with range exactly U, one per row
    relation: np.ndarray      # relation[a, b] is a <=_U b

    def pairs(self):
        return [tuple(map(int, p)) for p in np.argwhere(self.relation)]


def polys_onto(alg: FiniteAlgebra, U, clone_cap: int = CLONE_ROUTE_CAP) -> np.ndarray:
    clone = unary_poly_clone_array(alg, clone_cap)
    target = set(U)
    return np.array([r for r in clone if set(np.unique(r).tolist()) == target])


def leq_U(alg: FiniteAlgebra, ms: MinimalSet, zero_u: int | None = None,
          one_u: int | None = None, clone_cap: int = CLONE_ROUTE_CAP) -> UOrder:
    if len(ms.members) != 2:
        raise AlgebraError("the induced order needs |U| = 2")
    if zero_u is None:
        zero_u, one_u = ms.members
    if {zero_u, one_u} != set(ms.members):
        raise AlgebraError("0_U, 1_U must be the members of U")
    maps = polys_onto(alg, ms.members, clone_cap)
    bit = (maps == one_u).astype(np.int8)           # 0_U -> 0, 1_U -> 1
    below = np.all(bit[:, :, None] <= bit[:, None, :], axis=0)
    beta = ms.upper.ids
    rel = below & (beta[:, None] == beta[None, :])
    return UOrder(ms, zero_u, one_u, maps, rel)


@dataclass
class OrderReport:
    preorder: bool
    coset_order: bool
    preserved: bool
    counterexample: dict | None = None
    violation: dict | None = None

    @property
    def ok(self) -> bool:
        return self.preorder and self.coset_order and self.preserved

    @property
    def witness(self) -> dict | None:
        """First failing pair: the preservation counterexample or a preorder/antisymmetry pair."""
        return self.violation or self.counterexample


def check_order_lemma(alg: FiniteAlgebra, relation: np.ndarray, lo: Congruence,
                      hi: Congruence) -> OrderReport:
    """Preorder, antisymmetry modulo lo, and preservation by basic operations.

    Preservation is checked on translations, which suffices for a reflexive
    transitive relation: change one argument at a time.
    """
    R = np.asarray(relation, dtype=bool)
    n = alg.size
    refl = bool(np.all(np.diag(R)))
    trans_ok = not np.any((R.astype(np.int64) @ R.astype(np.int64) > 0) & ~R)
    ids = lo.ids
    anti_bad = R & R.T & (ids[:, None] != ids[None, :])
    anti = not np.any(anti_bad)
    violation = None
    if not refl:
        a = int(np.nonzero(~np.diag(R))[0][0])
        violation = {"check": "reflexive", "pair": (a, a)}
    elif not trans_ok:
        a, c = (int(v) for v in np.argwhere((R.astype(np.int64) @ R.astype(np.int64) > 0) & ~R)[0])
        violation = {"check": "transitive", "pair": (a, c)}
    elif not anti:
        a, b = (int(v) for v in np.argwhere(anti_bad)[0])
        violation = {"check": "antisymmetric", "pair": (a, b)}
    cex = None
    a_idx, b_idx = np.nonzero(R)
    for op in alg.operations:
        if op.arity == 0 or cex:
            continue
        arr = alg.array(op.name)
        for k in range(op.arity):
            moved = np.moveaxis(arr, k, -1).reshape(-1, n)
            bad = ~R[moved[:, a_idx], moved[:, b_idx]]
            if bad.any():
                row, col = (int(v) for v in np.argwhere(bad)[0])
                consts = np.unravel_index(row, (n,) * (op.arity - 1)) if op.arity > 1 else ()
                cex = {"op": op.name, "position": k, "constants": [int(c) for c in consts],
                       "pair": (int(a_idx[col]), int(b_idx[col])),
                       "image": (int(moved[row, a_idx[col]]), int(moved[row, b_idx[col]]))}
                break
    return OrderReport(refl and trans_ok, anti, cex is None, cex, violation)


def find_incomparable_pair(uo: UOrder):
    """(a, b, i, j) with a, b upper-related and incomparable, e_i(a) < e_i(b), e_j(a) > e_j(b)."""
    R = uo.relation
    beta = uo.minimal_set.upper.ids
    bit = (uo.maps == uo.one_u).astype(np.int8)
    n = R.shape[0]
    for a in range(n):
        for b in range(a + 1, n):
            if beta[a] == beta[b] and not R[a, b] and not R[b, a]:
                i = int(np.nonzero(bit[:, a] < bit[:, b])[0][0])
                j = int(np.nonzero(bit[:, a] > bit[:, b])[0][0])
                return a, b, i, j
    return None


# ----------------------------------------------------------------- types

def _smallest_prime_factor(m: int) -> int:
    for q in range(2, m + 1):
        if m % q == 0:
            return q
    return m


def _post_type(funcs: set[int]) -> str:
    """Type from the binary part of a clone on {0,1} containing both constants.

    A binary function is a 4-bit table over (0,0),(0,1),(1,0),(1,1).
    """
    def monotone(t):
        v = [(t >> i) & 1 for i in range(4)]
        return v[0] <= v[1] <= v[3] and v[0] <= v[2] <= v[3]

    def affine(t):
        v = [(t >> i) & 1 for i in range(4)]
        return v[0] ^ v[1] ^ v[2] ^ v[3] == 0

    AND, OR = 0b1000, 0b1110
    all_mono = all(monotone(t) for t in funcs)
    all_aff = all(affine(t) for t in funcs)
    if not all_mono and not all_aff:
        return "3"
    if all_mono and all_aff:
        return "1"
    if all_mono:
        return "4" if AND in funcs and OR in funcs else "5"
    xor = 0b0110
    return "2" if xor in funcs or (xor ^ 0b1111) in funcs else "1"


def _bits(table) -> int:
    return sum(int(v) << i for i, v in enumerate(table))


def classify_type(alg: FiniteAlgebra, lo: Congruence, hi: Congruence,
                  budget: int = DEFAULT_BUDGET) -> PrimeQuotient:
    """Type of the prime quotient lo < hi, decided in A/lo."""
    if lo.is_zero():
        q, b = alg, hi
    else:
        q, _ = quotient_algebra(alg, lo)
        b = image_congruence(hi, lo)
    zero = Congruence.zero(q.size)
    grp = detect_abelian_group(q)
    if grp is not None:
        return _classify_malcev(alg, q, grp, lo, hi, b, budget)
    try:
        sets = minimal_sets(q, zero, b, cap=budget)
    except CapExceeded as exc:
        return PrimeQuotient(lo, hi, "unclassified", None, f"minimal sets: {exc}")
    ms = sets[0]
    trace = ms.traces[0]
    e = np.array(ms.idempotent)
    if len(trace) == 2:
        return _classify_two(q, ms, trace, e, lo, hi, budget)
    return _classify_large_trace(q, ms, trace, e, lo, hi, budget)


def _classify_malcev(alg, q, grp, lo, hi, b, budget) -> PrimeQuotient:
    zero = Congruence.zero(q.size)
    ideal = int(np.sum(b.ids == b.ids[grp.zero]))
    ev = f"abelian group operation {grp.name}; x - y + z is a Malcev polynomial"
    try:
        ab = cover_is_abelian(q, zero, b, budget)
    except CapExceeded as exc:
        return PrimeQuotient(lo, hi, "unclassified", None, f"{ev}; {exc}")
    if ab:
        p = _smallest_prime_factor(ideal)
        return PrimeQuotient(lo, hi, "2", p, f"{ev}; cover abelian; block size {ideal}")
    wit = find_tc_failure(q, b, b, zero)
    return PrimeQuotient(lo, hi, "3", None, f"{ev}; cover not abelian; witness {wit}")


def _classify_two(q, ms, trace, e, lo, hi, budget) -> PrimeQuotient:
    a, c = trace
    dom = projection_tables(q.size, 2, [a, c])
    try:
        rows = poly_closure(q, dom, budget)
    except CapExceeded as exc:
        return PrimeQuotient(lo, hi, "unclassified", None, f"binary closure on trace: {exc}")
    rows = e[rows]
    inside = np.all(np.isin(rows, trace), axis=1)
    funcs = {_bits((r == c).astype(int)) for r in rows[inside]}
    label = _post_type(funcs)
    ev = (f"minimal set {list(ms.members)} trace {list(trace)}; "
          f"{len(funcs)} induced binary functions (complete closure)")
    return PrimeQuotient(lo, hi, label, 2 if label == "2" else None, ev)


def _classify_large_trace(q, ms, trace, e, lo, hi, budget) -> PrimeQuotient:
    N = np.array(trace)
    m = len(N)
    dom = projection_tables(q.size, 3, N)
    xi, yi, zi = np.indices((m, m, m)).reshape(3, -1)
    mask1 = yi == zi          # d(x, y, y) = x
    mask2 = xi == yi          # d(y, y, x) = x
    ev = f"minimal set {list(ms.members)} trace {list(trace)}"
    try:
        rows = poly_closure(q, dom, budget)
    except CapExceeded as exc:
        return PrimeQuotient(lo, hi, "unclassified", None, f"{ev}; ternary closure: {exc}")
    rows = e[rows]
    ok = (np.all(rows[:, mask1] == N[xi[mask1]], axis=1)
          & np.all(rows[:, mask2] == N[zi[mask2]], axis=1))
    if ok.any():
        p = _smallest_prime_factor(m)
        return PrimeQuotient(lo, hi, "2", p, f"{ev}; Malcev operation on the trace found")
    return PrimeQuotient(lo, hi, "1", None, f"{ev}; complete ternary closure has no Malcev operation")


def typeset(alg: FiniteAlgebra, lat=None, budget: int = DEFAULT_BUDGET) -> dict:
    """{(lower index, upper index): PrimeQuotient} for every cover of the lattice."""
    from .congruence import congruence_lattice
    lat = lat or congruence_lattice(alg)
    return {(i, j): classify_type(alg, lat.members[i], lat.members[j], budget)
            for i, j in lat.covers}


def type_labels(types: dict) -> set[str]:
    return {pq.type_label for pq in types.values()}


# ----------------------------------------------------------------- total orders

MAX_ORDER_SEARCH = 8


@dataclass
class TotalOrderWitness:
    order: tuple               # order[0] < order[1] < ...
    dim: int
    coordinates: dict          # element -> tuple of bits (a >= order[j]) for j = 1..n-1

    def rank(self) -> list[int]:
        r = [0] * len(self.order)
        for i, a in enumerate(self.order):
            r[a] = i
        return r


def order_witness(order) -> TotalOrderWitness:
    order = tuple(int(a) for a in order)
    rank = {a: i for i, a in enumerate(order)}
    n = len(order)
    coords = {a: tuple(1 if rank[a] >= j else 0 for j in range(1, n)) for a in order}
    return TotalOrderWitness(order, n - 1, coords)


def totally_ordered_check(alg: FiniteAlgebra) -> TotalOrderWitness | None:
    n = alg.size
    if n > MAX_ORDER_SEARCH:
        raise AlgebraError(f"order search refused for n = {n} > {MAX_ORDER_SEARCH}")
    trans = alg.basic_translations()
    for order in itertools.permutations(range(n)):
        rank = np.empty(n, dtype=np.int64)
        rank[list(order)] = np.arange(n)
        if trans.size == 0:
            return order_witness(order)
        seq = rank[trans[:, list(order)]]
        if np.all(np.diff(seq, axis=1) >= 0):
            return order_witness(order)
    return None
