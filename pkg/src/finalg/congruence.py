"""Congruences, their lattice, quotients and the term-condition commutator.

Principal congruences are computed as the equivalence generated by a pair and
closed under basic translations x -> f(c_1, .., x, .., c_r); closure under
translations is the same as compatibility with every operation.

Two independent routes decide abelianness and centrality of a cover:

* the matrix route generates M(alpha, beta) inside A^4 and tests the term
  condition directly (works for any algebra that fits the cap);
* the group route applies when some basic binary operation is an abelian
  group operation; then the commutator of ideals is generated by second
  differences of the basic operations, which is cheap to test.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core_algebra import AlgebraError, CapExceeded, FiniteAlgebra, make_algebra, poly_closure

DEFAULT_LATTICE_CAP = 10**5
DEFAULT_MATRIX_CAP = 4 * 10**5


def _normalize(labels) -> np.ndarray:
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv].astype(np.int64)


class Congruence:
    """A partition stored as first-occurrence-ordered block ids."""

    __slots__ = ("ids", "_key")

    def __init__(self, labels):
        ids = _normalize(labels)
        ids.setflags(write=False)
        self.ids = ids
        self._key = ids.tobytes()

    @classmethod
    def zero(cls, n: int) -> "Congruence":
        return cls(np.arange(n))

    @classmethod
    def one(cls, n: int) -> "Congruence":
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def from_blocks(cls, n: int, blocks) -> "Congruence":
        labels = np.arange(n)
        for blk in blocks:
            blk = list(blk)
            for x in blk:
                labels[x] = blk[0]
        return cls(labels)

    def __eq__(self, other):
        return isinstance(other, Congruence) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Congruence({self.blocks()})"

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def num_blocks(self) -> int:
        return int(self.ids.max()) + 1 if self.n else 0

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for x, b in enumerate(self.ids):
            out[b].append(x)
        return out

    def related(self, a: int, b: int) -> bool:
        return self.ids[a] == self.ids[b]

    def is_zero(self) -> bool:
        return self.num_blocks == self.n

    def is_one(self) -> bool:
        return self.num_blocks == 1

    def reps(self) -> np.ndarray:
        """rep[x] = least element of the block of x."""
        first = np.full(self.num_blocks, -1)
        for x in range(self.n - 1, -1, -1):
            first[self.ids[x]] = x
        return first[self.ids]

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All (x, y) with x related to y, as two index arrays."""
        same = self.ids[:, None] == self.ids[None, :]
        return np.nonzero(same)

    def leq(self, other: "Congruence") -> bool:
        combo = self.ids * other.num_blocks + other.ids
        return len(np.unique(combo)) == self.num_blocks

    def meet(self, other: "Congruence") -> "Congruence":
        return Congruence(self.ids * other.num_blocks + other.ids)

    def join(self, other: "Congruence") -> "Congruence":
        n = self.n
        src = np.concatenate([np.arange(n), np.arange(n)])
        dst = np.concatenate([self.reps(), other.reps()])
        return Congruence(_components(n, src, dst))

    def to_list(self) -> list[int]:
        return [int(v) for v in self.ids]


def _components(n, src, dst) -> np.ndarray:
    g = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    return lab


def _close(n: int, trans: np.ndarray, labels) -> Congruence:
    """Least translation-closed equivalence containing the given partition."""
    cur = Congruence(labels)
    while True:
        rep = cur.reps()
        src = np.concatenate([np.arange(n), trans.reshape(-1)])
        dst = np.concatenate([rep, trans[:, rep].reshape(-1)])
        nxt = Congruence(_components(n, src, dst))
        if nxt.num_blocks == cur.num_blocks:
            return nxt
        cur = nxt


def is_compatible(alg: FiniteAlgebra, theta: Congruence) -> bool:
    trans = alg.basic_translations()
    if trans.size == 0:
        return True
    ids = theta.ids
    rep = theta.reps()
    return bool(np.all(ids[trans] == ids[trans[:, rep]]))


def generated_congruence(alg: FiniteAlgebra, pairs, base: Congruence | None = None) -> Congruence:
    """Least congruence containing `pairs` (and `base` if given)."""
    n = alg.size
    pairs = list(pairs)
    src = [x for x, _ in pairs]
    dst = [y for _, y in pairs]
    if base is not None:
        src += list(range(n))
        dst += base.reps().tolist()
    labels = _components(n, np.array(src + list(range(n)), dtype=np.int64),
                         np.array(dst + list(range(n)), dtype=np.int64))
    return _close(n, alg.basic_translations(), labels)


def principal_congruence(alg: FiniteAlgebra, a: int, b: int) -> Congruence:
    n = alg.size
    if not (0 <= a < n and 0 <= b < n):
        raise AlgebraError("element out of range")
    return generated_congruence(alg, [(a, b)])


def _pair_orbit_reps(alg: FiniteAlgebra) -> list[tuple[int, int]]:
    """One unordered pair per orbit of the group generated by bijective translations.

    A polynomial permutation g has a polynomial inverse (a power of g), so
    Cg(g(a), g(b)) = Cg(a, b) and one representative per orbit suffices.
    """
    n = alg.size
    trans = alg.basic_translations()
    perms = [t for t in trans if len(np.unique(t)) == n and not np.array_equal(t, np.arange(n))]
    a, b = np.triu_indices(n, 1)
    if not perms or n <= 6:
        return list(zip(a.tolist(), b.tolist()))
    node = a * n + b
    src, dst = [node], [node]
    budget = 3 * 10**7
    used = 0
    for g in perms:
        if used + len(node) > budget:
            break
        ga, gb = g[a], g[b]
        lo, hi = np.minimum(ga, gb), np.maximum(ga, gb)
        src.append(node)
        dst.append(lo * n + hi)
        used += len(node)
    lab = _components(n * n, np.concatenate(src), np.concatenate(dst))
    seen = set()
    reps = []
    for x, y in zip(a.tolist(), b.tolist()):
        key = lab[x * n + y]
        if key not in seen:
            seen.add(key)
            reps.append((x, y))
    return reps


def all_principal_congruences(alg: FiniteAlgebra) -> list[Congruence]:
    out = []
    seen = set()
    for a, b in _pair_orbit_reps(alg):
        c = principal_congruence(alg, a, b)
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


@dataclass
class CongruenceLattice:
    members: list[Congruence]
    leq: np.ndarray
    covers: list[tuple[int, int]]

    def __len__(self):
        return len(self.members)

    def index(self, c: Congruence) -> int:
        return self.members.index(c)

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return len(self.members) - 1

    def lower_covers(self, i: int) -> list[int]:
        return [a for a, b in self.covers if b == i]

    def upper_covers(self, i: int) -> list[int]:
        return [b for a, b in self.covers if a == i]

    def join(self, i: int, j: int) -> int:
        return self.index(self.members[i].join(self.members[j]))

    def meet(self, i: int, j: int) -> int:
        return self.index(self.members[i].meet(self.members[j]))

    def to_text(self) -> str:
        lines = [f"{i}: {m.to_list()}" for i, m in enumerate(self.members)]
        lines += [f"{a} < {b}" for a, b in self.covers]
        return "\n".join(lines)

    def to_dot(self) -> str:
        lines = ["digraph Con {", "  rankdir=BT;"]
        for i, m in enumerate(self.members):
            lines.append(f'  c{i} [label="{i}: {m.num_blocks} blocks"];')
        for a, b in self.covers:
            lines.append(f"  c{a} -> c{b};")
        lines.append("}")
        return "\n".join(lines)


def _sort_key(c: Congruence):
    return (-c.num_blocks, c.to_list())


def lattice_from_members(members) -> CongruenceLattice:
    members = sorted(set(members), key=_sort_key)
    k = len(members)
    leq = np.zeros((k, k), dtype=bool)
    for i, x in enumerate(members):
        for j, y in enumerate(members):
            leq[i, j] = x.num_blocks >= y.num_blocks and x.leq(y)
    strict = leq & ~np.eye(k, dtype=bool)
    between = (strict.astype(np.int64) @ strict.astype(np.int64)) > 0
    cover = strict & ~between
    covers = [(int(i), int(j)) for i, j in zip(*np.nonzero(cover))]
    return CongruenceLattice(members, leq, covers)


def congruence_lattice(alg: FiniteAlgebra, cap: int = DEFAULT_LATTICE_CAP) -> CongruenceLattice:
    n = alg.size
    principals = all_principal_congruences(alg)
    found = {Congruence.zero(n)} | set(principals)
    frontier = list(found)
    while frontier:
        nxt = []
        for m in frontier:
            for p in principals:
                j = m.join(p)
                if j not in found:
                    found.add(j)
                    nxt.append(j)
                    if len(found) > cap:
                        raise CapExceeded(f"more than {cap} congruences")
        frontier = nxt
    return lattice_from_members(found)


def join_irreducibles(lat: CongruenceLattice) -> list[tuple[int, int]]:
    """(index, index of unique subcover) for every join irreducible member."""
    out = []
    for i in range(len(lat)):
        below = lat.lower_covers(i)
        if len(below) == 1:
            out.append((i, below[0]))
    return out


def tight_chain(lat: CongruenceLattice) -> list[int]:
    """Maximal chain from 0 to 1 taking the least-index upper cover each step."""
    chain = [lat.zero]
    while chain[-1] != lat.one:
        chain.append(min(lat.upper_covers(chain[-1])))
    return chain


# ----------------------------------------------------------------- quotients

def quotient_algebra(alg: FiniteAlgebra, theta: Congruence, name: str | None = None):
    """Returns (A/theta, projection array)."""
    if not is_compatible(alg, theta):
        raise AlgebraError("partition is not a congruence")
    proj = theta.ids
    reps = np.array([blk[0] for blk in theta.blocks()])
    ops = []
    for op in alg.operations:
        arr = alg.array(op.name)
        sub = arr[np.ix_(*([reps] * op.arity))] if op.arity else arr
        ops.append((op.name, op.arity, proj[np.asarray(sub).reshape(-1)].tolist()))
    q = make_algebra(name or f"{alg.name}/theta", theta.num_blocks, ops)
    return q, proj


def image_congruence(theta: Congruence, lower: Congruence) -> Congruence:
    """theta/lower as a congruence of the quotient by lower (lower <= theta)."""
    k = lower.num_blocks
    labels = np.zeros(k, dtype=np.int64)
    labels[lower.ids] = theta.ids
    return Congruence(labels)


# ----------------------------------------------------------------- commutator

def matrix_subuniverse(alg: FiniteAlgebra, alpha: Congruence, beta: Congruence,
                       cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    """M(alpha, beta) as rows (m11, m12, m21, m22).

    Generated by [[a, a], [b, b]] for a alpha b and [[c, d], [c, d]] for c beta d.
    """
    ax, ay = alpha.pairs()
    bx, by = beta.pairs()
    gens = np.concatenate([
        np.stack([ax, ax, ay, ay], axis=1),
        np.stack([bx, by, bx, by], axis=1),
    ])
    return poly_closure(alg, np.unique(gens, axis=0), cap)


def term_condition_holds(M: np.ndarray, delta: Congruence) -> bool:
    ids = delta.ids
    top = ids[M[:, 0]] == ids[M[:, 1]]
    return bool(np.all(ids[M[top, 2]] == ids[M[top, 3]]))


def commutator(alg: FiniteAlgebra, alpha: Congruence, beta: Congruence,
               cap: int = DEFAULT_MATRIX_CAP) -> Congruence:
    """[alpha, beta]: least delta with C(alpha, beta; delta), by the matrix method."""
    n = alg.size
    M = matrix_subuniverse(alg, alpha, beta, cap)
    delta = Congruence.zero(n)
    while True:
        ids = delta.ids
        top = ids[M[:, 0]] == ids[M[:, 1]]
        bad = top & (ids[M[:, 2]] != ids[M[:, 3]])
        if not bad.any():
            return delta
        pairs = np.unique(M[bad][:, 2:4], axis=0)
        delta = generated_congruence(alg, [tuple(p) for p in pairs.tolist()], base=delta)


def derived_series(alg: FiniteAlgebra, cap: int = DEFAULT_MATRIX_CAP) -> list[Congruence]:
    g = Congruence.one(alg.size)
    out = [g]
    while True:
        nxt = commutator(alg, g, g, cap)
        if nxt == g:
            return out
        out.append(nxt)
        g = nxt


def lower_central_series(alg: FiniteAlgebra, cap: int = DEFAULT_MATRIX_CAP) -> list[Congruence]:
    one = Congruence.one(alg.size)
    g = one
    out = [g]
    while True:
        nxt = commutator(alg, one, g, cap)
        if nxt == g:
            return out
        out.append(nxt)
        g = nxt


# ----------------------------------------------------------------- group route

@dataclass
class GroupOp:
    name: str
    zero: int
    neg: np.ndarray


def detect_abelian_group(alg: FiniteAlgebra) -> GroupOp | None:
    """First basic binary operation that is an abelian group operation."""
    n = alg.size
    for op in alg.operations:
        if op.arity != 2:
            continue
        G = alg.array(op.name)
        if not np.array_equal(G, G.T):
            continue
        zeros = [e for e in range(n) if np.array_equal(G[e], np.arange(n))]
        if not zeros:
            continue
        e = zeros[0]
        hits = np.argwhere(G == e)
        if len(hits) != n or len(np.unique(hits[:, 0])) != n:
            continue
        if not np.array_equal(G[G[:, :, None], np.arange(n)[None, None, :]],
                              G[np.arange(n)[:, None, None], G[None, :, :]]):
            continue
        neg = np.empty(n, dtype=np.int64)
        neg[hits[:, 0]] = hits[:, 1]
        return GroupOp(op.name, e, neg)
    return None


def _second_differences_vanish(alg: FiniteAlgebra, grp: GroupOp, U: np.ndarray, V: np.ndarray,
                               cap: int = 5 * 10**7) -> bool:
    """D_{u e_k} D_{v e_l} f = 0 for all basic f, positions k, l, u in U, v in V."""
    n = alg.size
    G = alg.array(grp.name)
    for op in alg.operations:
        r = op.arity
        if r == 0 or op.name == grp.name:
            continue
        F = alg.array(op.name)
        work = n**r * len(U) * len(V) * r * r
        if work > cap:
            raise CapExceeded(f"second-difference check for {op.name} too large")
        for k in range(r):
            for l in range(r):
                # base point x (all r coordinates), shift coordinate k by u, l by v
                base = np.indices((n,) * r).reshape(r, -1)
                xs = base[:, :, None, None]
                u = U[None, None, :, None]
                v = V[None, None, None, :]
                shape = (r, base.shape[1], len(U), len(V))
                xu = np.broadcast_to(xs, shape).copy()
                xv = xu.copy()
                xuv = xu.copy()
                xu[k] = G[xu[k], np.broadcast_to(u[0], shape[1:])]
                xv[l] = G[xv[l], np.broadcast_to(v[0], shape[1:])]
                xuv[k] = G[xuv[k], np.broadcast_to(u[0], shape[1:])]
                xuv[l] = G[xuv[l], np.broadcast_to(v[0], shape[1:])]
                xb = np.broadcast_to(xs, shape)
                f_uv, f_u, f_v, f_0 = (F[tuple(z)] for z in (xuv, xu, xv, xb))
                if not np.array_equal(G[f_uv, f_0], G[f_u, f_v]):
                    return False
    return True


def _ideal(theta: Congruence, zero: int) -> np.ndarray:
    return np.nonzero(theta.ids == theta.ids[zero])[0]


# ----------------------------------------------------------------- cover predicates

def _quotient_pair(alg, lo: Congruence, hi: Congruence):
    if lo.is_zero():
        return alg, hi
    q, _ = quotient_algebra(alg, lo)
    return q, image_congruence(hi, lo)


def find_tc_failure(alg: FiniteAlgebra, rows: Congruence, cols: Congruence,
                    delta: Congruence, limit: int = 2 * 10**7):
    """Look for a term-condition failure among basic operations with two moving places.

    One argument place moves along `rows`, another along `cols`, the rest are
    constants.  Returns the 2x2 matrix or None.  None proves nothing.
    """
    n = alg.size
    ids = delta.ids
    ra, rb = rows.pairs()
    ca, cb = cols.pairs()
    for op in alg.operations:
        r = op.arity
        if r < 2:
            continue
        F = alg.array(op.name)
        for i, j in itertools.permutations(range(r), 2):
            if n ** (r - 2) * len(ra) * len(ca) > limit:
                continue
            moved = np.moveaxis(F, (i, j), (-2, -1)).reshape(-1, n, n)
            m11 = moved[:, ra[:, None], ca[None, :]]
            m12 = moved[:, ra[:, None], cb[None, :]]
            m21 = moved[:, rb[:, None], ca[None, :]]
            m22 = moved[:, rb[:, None], cb[None, :]]
            bad = (ids[m11] == ids[m12]) & (ids[m21] != ids[m22])
            if bad.any():
                c, x, y = (int(v) for v in np.argwhere(bad)[0])
                return [[int(m11[c, x, y]), int(m12[c, x, y])],
                        [int(m21[c, x, y]), int(m22[c, x, y])]]
    return None


def cover_is_abelian(alg: FiniteAlgebra, lo: Congruence, hi: Congruence,
                     cap: int = DEFAULT_MATRIX_CAP) -> bool:
    """[hi, hi] <= lo, decided in A/lo (congruence modularity assumed)."""
    q, b = _quotient_pair(alg, lo, hi)
    zero = Congruence.zero(q.size)
    if find_tc_failure(q, b, b, zero) is not None:
        return False
    grp = detect_abelian_group(q)
    if grp is not None:
        I = _ideal(b, grp.zero)
        return _second_differences_vanish(q, grp, I, I)
    M = matrix_subuniverse(q, b, b, cap)
    return term_condition_holds(M, zero)


def cover_is_central(alg: FiniteAlgebra, lo: Congruence, hi: Congruence,
                     cap: int = DEFAULT_MATRIX_CAP) -> bool:
    """[1, hi] <= lo, decided in A/lo (congruence modularity assumed)."""
    q, b = _quotient_pair(alg, lo, hi)
    zero = Congruence.zero(q.size)
    one = Congruence.one(q.size)
    if find_tc_failure(q, one, b, zero) is not None:
        return False
    grp = detect_abelian_group(q)
    if grp is not None:
        return _second_differences_vanish(q, grp, np.arange(q.size), _ideal(b, grp.zero))
    M = matrix_subuniverse(q, one, b, cap)
    return term_condition_holds(M, zero)


SMALL_DIRECT = 8


def is_solvable(alg: FiniteAlgebra, lat: CongruenceLattice | None = None,
                cap: int = DEFAULT_MATRIX_CAP) -> bool:
    """Derived series reaches 0 (direct for small n, cover-wise otherwise)."""
    if alg.size <= SMALL_DIRECT:
        return derived_series(alg, cap)[-1].is_zero()
    lat = lat or congruence_lattice(alg)
    chain = tight_chain(lat)
    for lo, hi in reversed(list(zip(chain, chain[1:]))):
        if not cover_is_abelian(alg, lat.members[lo], lat.members[hi], cap):
            return False
    return True


def is_nilpotent(alg: FiniteAlgebra, lat: CongruenceLattice | None = None,
                 cap: int = DEFAULT_MATRIX_CAP) -> bool:
    """Lower central series reaches 0 (direct for small n, cover-wise otherwise)."""
    if alg.size <= SMALL_DIRECT:
        return lower_central_series(alg, cap)[-1].is_zero()
    lat = lat or congruence_lattice(alg)
    chain = tight_chain(lat)
    for lo, hi in reversed(list(zip(chain, chain[1:]))):
        if not cover_is_central(alg, lat.members[lo], lat.members[hi], cap):
            return False
    return True
