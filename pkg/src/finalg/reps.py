"""Structural representations used by the compilers.

An ActionProductRep splits an algebra A over an atom alpha (one with
abelian cover 0 < alpha) as Z_p^k x A/alpha.  Each element a is written
as (coords[a], a/alpha) where coords are taken relative to a fixed
representative of its class, and every basic operation acts as

    coords(f(x_1..x_r)) = hat(b) + sum_i ell_i(b) coords(x_i)     (mod p)

with b = (x_1/alpha, .., x_r/alpha).  When the ell_i do not depend on b the
atom is central and the rep has the M x B shape with distortion tables hat.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .congruence import (Congruence, congruence_lattice, detect_abelian_group, quotient_algebra,
                         tight_chain)
from .core_algebra import (AlgebraError, FiniteAlgebra, TermWitness, bounded_term_search,
                           eval_term, unary_poly_clone_array)

VALIDATION_CHUNK = 1 << 20


class RepError(AlgebraError):
    pass


def _prime_power(q: int):
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            while q % p == 0:
                q //= p
                k += 1
            return (p, k) if q == 1 else None
    return None


@dataclass
class ActionProductRep:
    alg: FiniteAlgebra
    alpha: Congruence
    quotient: FiniteAlgebra
    proj: np.ndarray          # element -> class index in quotient
    p: int
    k: int
    reps: np.ndarray          # class -> representative (coords zero)
    coords: np.ndarray        # element -> vector in Z_p^k, shape (n, k)
    elem: np.ndarray          # (class, vector index) -> element
    ell: dict = field(default_factory=dict)   # op -> list of arrays (|B|,)*r + (k, k)
    hat: dict = field(default_factory=dict)   # op -> array (|B|,)*r + (k,)

    @property
    def factors(self):
        return [("module", self.p, self.k), ("quotient", self.quotient)]

    @property
    def central(self) -> bool:
        for mats in self.ell.values():
            for m in mats:
                flat = m.reshape(-1, self.k, self.k)
                if np.any(flat != flat[:1]):
                    return False
        return True

    def vec_index(self, v) -> int:
        idx = 0
        for x in v:
            idx = idx * self.p + int(x) % self.p
        return idx

    def encode(self, a: int):
        return tuple(int(v) for v in self.coords[a]), int(self.proj[a])

    def decode(self, vec, cls: int) -> int:
        return int(self.elem[cls, self.vec_index(vec)])

    def validate(self):
        """Exhaustive check that the tables reconstruct every basic operation."""
        alg, p = self.alg, self.p
        n = alg.size
        for op in alg.operations:
            r = op.arity
            arr = alg.array(op.name)
            if r == 0:
                want = self.coords[int(arr)]
                if not np.array_equal(self.hat[op.name] % p, want):
                    raise RepError(f"constant {op.name} not reconstructed")
                continue
            total = n ** r
            for start in range(0, total, VALIDATION_CHUNK):
                idx = np.arange(start, min(total, start + VALIDATION_CHUNK))
                xs = np.stack(np.unravel_index(idx, (n,) * r))
                got = self.coords[arr[tuple(xs)]]
                bs = tuple(self.proj[xs])
                rhs = self.hat[op.name][bs].copy()
                for i in range(r):
                    M = self.ell[op.name][i][bs]                   # (N, k, k)
                    rhs += np.einsum("nij,nj->ni", M, self.coords[xs[i]])
                if not np.array_equal(rhs % p, got):
                    bad = int(np.nonzero(np.any(rhs % p != got, axis=1))[0][0])
                    raise RepError(f"{op.name} not reconstructed at {xs[:, bad].tolist()}")
        return self


def _derive(alg, alpha, quotient, proj, p, k, reps, coords, elem) -> ActionProductRep:
    nb = quotient.size
    unit = [elem[:, p ** (k - 1 - u)] for u in range(k)]     # class -> element with coords e_u
    ell, hat = {}, {}
    for op in alg.operations:
        r = op.arity
        arr = alg.array(op.name)
        if r == 0:
            hat[op.name] = coords[int(arr)].copy()
            ell[op.name] = []
            continue
        grid = np.indices((nb,) * r).reshape(r, -1)
        base_args = [reps[grid[i]] for i in range(r)]
        base = arr[tuple(base_args)]
        h = coords[base]
        hat[op.name] = h.reshape((nb,) * r + (k,))
        mats = []
        for i in range(r):
            M = np.zeros((grid.shape[1], k, k), dtype=np.int64)
            for u in range(k):
                args = list(base_args)
                args[i] = unit[u][grid[i]]
                M[:, :, u] = (coords[arr[tuple(args)]] - h) % p
            mats.append(M.reshape((nb,) * r + (k, k)))
        ell[op.name] = mats
    return ActionProductRep(alg, alpha, quotient, proj, p, k, reps, coords, elem, ell, hat)


def _elem_table(coords, proj, nb, p, k):
    elem = np.full((nb, p ** k), -1, dtype=np.int64)
    weights = p ** np.arange(k - 1, -1, -1)
    vidx = (coords * weights).sum(axis=1) if k else np.zeros(len(coords), dtype=np.int64)
    elem[proj, vidx] = np.arange(len(coords))
    if len(coords) != nb * p ** k or np.any(elem < 0):
        raise RepError("coordinates are not a bijection on each class")
    return elem


def group_coords(alg: FiniteAlgebra, alpha: Congruence):
    """Coordinates from a basic abelian group operation: a - rep(a) in the ideal of alpha."""
    grp = detect_abelian_group(alg)
    if grp is None:
        raise RepError("no basic abelian group operation; supply coordinates")
    G = alg.array(grp.name)
    ideal = [int(a) for a in np.nonzero(alpha.ids == alpha.ids[grp.zero])[0]]
    pk = _prime_power(len(ideal))
    if pk is None:
        raise RepError("atom ideal is not of prime power order")
    p, k = pk
    # greedy basis of the elementary abelian p-group
    vec = {grp.zero: ()}
    basis = []
    span = {grp.zero: ()}
    for a in ideal:
        if a in span:
            continue
        mult = [grp.zero]
        for _ in range(p - 1):
            mult.append(int(G[mult[-1], a]))
        if int(G[mult[-1], a]) != grp.zero:
            raise RepError("atom ideal is not elementary abelian")
        new = {}
        for s, v in span.items():
            for j, m in enumerate(mult):
                new[int(G[s, m])] = v + (j,)
        span = new
        basis.append(a)
    k = len(basis)
    for a, v in span.items():
        vec[a] = v
    reps_of = alpha.reps()
    coords = np.zeros((alg.size, k), dtype=np.int64)
    for a in range(alg.size):
        d = int(G[a, grp.neg[reps_of[a]]])
        if d not in span:
            raise RepError("class differences leave the ideal")
        coords[a] = span[d]
    return p, coords


def decompose_over_atom(alg: FiniteAlgebra, alpha: Congruence, coords=None, p: int | None = None,
                        validate: bool = True) -> ActionProductRep:
    """Representation of A over the atom alpha; coordinates from a group op unless supplied."""
    if alpha.is_zero():
        raise RepError("alpha must be nonzero")
    if coords is None:
        p, coords = group_coords(alg, alpha)
    else:
        coords = np.asarray(coords, dtype=np.int64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if p is None:
            raise RepError("supplied coordinates need the prime")
        coords = coords % p
    k = coords.shape[1]
    quotient, proj = quotient_algebra(alg, alpha) if not alpha.is_one() else (None, None)
    if alpha.is_one():
        from .core_algebra import make_algebra
        quotient = make_algebra(f"{alg.name}/1", 1, [(op.name, op.arity, [0]) for op in alg.operations])
        proj = np.zeros(alg.size, dtype=np.int64)
    nb = quotient.size
    elem = _elem_table(coords, proj, nb, p, k)
    reps = elem[:, 0]
    rep = _derive(alg, alpha, quotient, proj, p, k, reps, coords, elem)
    return rep.validate() if validate else rep


def module_rep(alg: FiniteAlgebra, coords=None, p: int | None = None) -> ActionProductRep:
    """Single-factor module representation of a simple abelian algebra.

    Without a basic group operation, a prime-size universe is read as Z_p itself.
    """
    if coords is None and detect_abelian_group(alg) is None and _prime_power(alg.size) == (alg.size, 1):
        coords, p = np.arange(alg.size), alg.size
    rep = decompose_over_atom(alg, Congruence.one(alg.size), coords, p)
    if not rep.central:
        raise RepError("operations are not affine over the module")
    return rep


def chain_reps(alg: FiniteAlgebra, chain=None, coords_fns=None, stop=None) -> list[ActionProductRep]:
    """Reps along a chain 0 = theta_0 < theta_1 < .. of congruences.

    Step i represents A/theta_i over the atom theta_{i+1}/theta_i; its quotient is
    the algebra of step i+1.  `stop` ends the chain at that congruence.
    `coords_fns[i]`, if given, maps step i's algebra to (p, coords).
    """
    if chain is None:
        lat = congruence_lattice(alg)
        chain = [lat.members[i] for i in tight_chain(lat)]
    chain = list(chain)
    if stop is not None:
        chain = chain[:next(i for i, c in enumerate(chain) if c == stop) + 1]
    reps = []
    cur = alg
    to_cur = np.arange(alg.size)
    for i in range(len(chain) - 1):
        labels = np.zeros(cur.size, dtype=np.int64)
        labels[to_cur] = chain[i + 1].ids
        atom = Congruence(labels)
        if coords_fns and coords_fns[i] is not None:
            p, coords = coords_fns[i](cur)
            rep = decompose_over_atom(cur, atom, coords, p)
        else:
            rep = decompose_over_atom(cur, atom)
        reps.append(rep)
        to_cur = rep.proj[to_cur]
        cur = rep.quotient
    return reps


# ----------------------------------------------------------------- witness kits

@dataclass
class WitnessKit:
    witnesses: dict = field(default_factory=dict)     # name -> TermWitness
    points: dict = field(default_factory=dict)        # e.g. u0, u1, v0, v1
    provenance: str = "searched"

    def __getitem__(self, name):
        return self.witnesses[name]

    def get(self, name):
        return self.witnesses.get(name)


def _table_on(alg, w: TermWitness, dom, arity):
    return [eval_term(alg, w.term, args) for args in itertools.product(dom, repeat=arity)]


def verify_boolean_kit(alg: FiniteAlgebra, kit: WitnessKit, lattice_only: bool = False,
                       prefix: str = "U"):
    u0, u1 = kit.points[f"{prefix.lower()}0"], kit.points[f"{prefix.lower()}1"]
    dom = (u0, u1)
    checks = [(f"meet{prefix}", 2, [u0, u0, u0, u1]), (f"join{prefix}", 2, [u0, u1, u1, u1])]
    if not lattice_only:
        checks.append((f"neg{prefix}", 1, [u1, u0]))
    for name, r, want in checks:
        w = kit.get(name)
        if w is None or _table_on(alg, w, dom, r) != want:
            raise RepError(f"witness {name} fails its defining property")
    return True


def find_boolean_kit(alg: FiniteAlgebra, u0: int, u1: int, budget: int = 20000,
                     lattice_only: bool = False, prefix: str = "U") -> WitnessKit | None:
    """Polynomials acting on {u0 < u1} as meet, join (and negation)."""
    dom = (u0, u1)
    kit = WitnessKit(points={f"{prefix.lower()}0": u0, f"{prefix.lower()}1": u1})
    want = {f"meet{prefix}": (2, [u0, u0, u0, u1]), f"join{prefix}": (2, [u0, u1, u1, u1])}
    if not lattice_only:
        want[f"neg{prefix}"] = (1, [u1, u0])
    for name, (r, table) in want.items():
        w = bounded_term_search(alg, r, table, budget, domain=dom)
        if w is None:
            return None
        kit.witnesses[name] = w
    verify_boolean_kit(alg, kit, lattice_only, prefix)
    return kit


def unary_term(alg: FiniteAlgebra, table, budget: int = 50000) -> TermWitness:
    w = bounded_term_search(alg, 1, list(table), budget)
    if w is None:
        raise RepError("no term found for the unary polynomial within budget")
    return w


def find_pseudo_malcev(alg: FiniteAlgebra, U, budget: int = 50000) -> TermWitness | None:
    """Ternary polynomial with d(y,y,x) = d(x,y,y) = x on U."""
    U = tuple(U)
    m = len(U)
    grid = np.indices((m,) * 3).reshape(3, -1)
    Ua = np.asarray(U)
    x, z = Ua[grid[0]], Ua[grid[2]]
    left = grid[0] == grid[1]      # d(y, y, x) = x  -> third argument
    right = grid[1] == grid[2]     # d(x, y, y) = x  -> first argument

    def ok(t):
        return bool(np.all(t[left] == z[left]) and np.all(t[right] == x[right]))

    return bounded_term_search(alg, 3, ok, budget, domain=U)


class ConnectorError(AlgebraError):
    pass


def find_connector(alg: FiniteAlgebra, u_pair, v_pair, e_v, budget: int = 50000,
                   flip: TermWitness | None = None) -> TermWitness:
    """Unary polynomial f with f(0_U) = 0_V and f(1_U) = 1_V.

    Edges {e_V(g(0_U)), e_V(g(1_U))} over the unary clone form a graph on V;
    a one-step path from 0_V to 1_V gives the connector.  The reversed
    orientation is repaired by precomposing with `flip` (x -> d(0_U, x, 1_U)).
    """
    from .congruence import principal_congruence
    u0, u1 = u_pair
    v0, v1 = v_pair
    if not principal_congruence(alg, u0, u1).related(v0, v1):
        raise ConnectorError("0_V, 1_V are not related by Cg(0_U, 1_U)")
    e_v = np.asarray(e_v)
    clone = unary_poly_clone_array(alg)
    ends = e_v[clone[:, [u0, u1]]]
    forward = np.nonzero((ends[:, 0] == v0) & (ends[:, 1] == v1))[0]
    backward = np.nonzero((ends[:, 0] == v1) & (ends[:, 1] == v0))[0]
    if len(forward):
        w = bounded_term_search(alg, 1, lambda t: bool(t[u0] == v0 and t[u1] == v1), budget)
        if w is not None:
            return w
    if len(backward) and flip is not None:
        g = bounded_term_search(alg, 1, lambda t: bool(t[u0] == v1 and t[u1] == v0), budget)
        if g is not None:
            term = _substitute(g.term, [flip.term])
            table = tuple(eval_term(alg, term, (a,)) for a in range(alg.size))
            return TermWitness(term, 1, table)
    raise ConnectorError("no unary polynomial connects 0_U, 1_U with 0_V, 1_V")


def _substitute(term, args):
    if term[0] == "var":
        return args[term[1]]
    if term[0] == "const":
        return term
    return ("op", term[1], tuple(_substitute(c, args) for c in term[2]))


def substitute_term(term, args):
    """Replace variable i of `term` by the term args[i]."""
    return _substitute(term, args)
