"""Finite algebras stored as flat operation tables.

Elements are the integers 0..n-1.  A table for an r-ary operation has length
n**r and is row-major with the leftmost argument varying slowest, so the
entry for (a_1, ..., a_r) sits at index sum(a_i * n**(r-i)).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


class AlgebraError(ValueError):
    """Malformed algebra description or misuse of an operation."""


class CapExceeded(RuntimeError):
    """A closure grew past its configured cap.  Never treat this as a proof."""


DEFAULT_CLONE_CAP = 10**6


@dataclass(frozen=True)
class Operation:
    name: str
    arity: int
    table: tuple

    def array(self, n: int) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64).reshape((n,) * self.arity)


class FiniteAlgebra:
    """Universe {0..size-1} with named operations."""

    def __init__(self, name: str, size: int, operations: Iterable[Operation]):
        self.name = name
        self.size = size
        self.operations = tuple(operations)
        self._by_name = {op.name: op for op in self.operations}
        self._arrays: dict[str, np.ndarray] = {}

    def __repr__(self):
        sig = ", ".join(f"{op.name}/{op.arity}" for op in self.operations)
        return f"FiniteAlgebra({self.name!r}, n={self.size}, [{sig}])"

    def __eq__(self, other):
        return (isinstance(other, FiniteAlgebra) and self.size == other.size
                and self.operations == other.operations)

    def __hash__(self):
        return hash((self.size, self.operations))

    @property
    def op_names(self) -> list[str]:
        return [op.name for op in self.operations]

    def op(self, name: str) -> Operation:
        try:
            return self._by_name[name]
        except KeyError:
            raise AlgebraError(f"unknown operation {name!r}") from None

    def array(self, name: str) -> np.ndarray:
        """Operation table as an r-dimensional numpy array (cached)."""
        arr = self._arrays.get(name)
        if arr is None:
            arr = self.op(name).array(self.size)
            arr.setflags(write=False)
            self._arrays[name] = arr
        return arr

    def signature(self) -> tuple:
        return tuple((op.name, op.arity) for op in self.operations)

    def eval_op(self, name: str, args: Sequence[int]) -> int:
        op = self.op(name)
        if len(args) != op.arity:
            raise AlgebraError(f"{name} expects {op.arity} arguments, got {len(args)}")
        idx = 0
        for a in args:
            if not 0 <= a < self.size:
                raise AlgebraError(f"argument {a} out of range")
            idx = idx * self.size + a
        return op.table[idx]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "size": self.size,
            "operations": [
                {"name": op.name, "arity": op.arity, "table": list(op.table)}
                for op in self.operations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FiniteAlgebra":
        return validate_algebra(json.loads(text))

    def basic_translations(self) -> np.ndarray:
        """All maps x -> f(c_1, .., x, .., c_r) for basic f, as rows of a matrix.

        Constant maps from nullary operations are skipped since they carry
        no information for congruence generation.
        """
        n = self.size
        rows = []
        for op in self.operations:
            if op.arity == 0:
                continue
            arr = self.array(op.name)
            for pos in range(op.arity):
                moved = np.moveaxis(arr, pos, -1).reshape(-1, n)
                rows.append(moved)
        if not rows:
            return np.zeros((0, n), dtype=np.int64)
        return np.unique(np.concatenate(rows, axis=0), axis=0)


def make_algebra(name: str, size: int, ops: Sequence[tuple]) -> FiniteAlgebra:
    """Build from (name, arity, table) triples, validating everything."""
    return validate_algebra({
        "name": name,
        "size": size,
        "operations": [{"name": o, "arity": r, "table": list(t)} for o, r, t in ops],
    })


def algebra_from_functions(name: str, size: int,
                           ops: Sequence[tuple[str, int, Callable]]) -> FiniteAlgebra:
    """Tabulate Python callables into an algebra."""
    built = []
    for opname, arity, fn in ops:
        table = [fn(*args) for args in itertools.product(range(size), repeat=arity)]
        built.append((opname, arity, table))
    return make_algebra(name, size, built)


def validate_algebra(raw: dict) -> FiniteAlgebra:
    try:
        name = str(raw["name"])
        n = int(raw["size"])
        raw_ops = raw["operations"]
    except (KeyError, TypeError) as exc:
        raise AlgebraError(f"missing field: {exc}") from None
    if n < 1:
        raise AlgebraError("size must be at least 1")
    ops = []
    seen = set()
    for entry in raw_ops:
        opname = str(entry["name"])
        arity = int(entry["arity"])
        table = entry["table"]
        if opname in seen:
            raise AlgebraError(f"duplicate operation name {opname!r}")
        seen.add(opname)
        if arity < 0:
            raise AlgebraError(f"{opname}: negative arity")
        if len(table) != n**arity:
            raise AlgebraError(
                f"{opname}: table length {len(table)} != {n}^{arity}")
        for v in table:
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or not 0 <= v < n:
                raise AlgebraError(f"{opname}: entry {v!r} out of range for n={n}")
        ops.append(Operation(opname, arity, tuple(int(v) for v in table)))
    return FiniteAlgebra(name, n, ops)


# ---------------------------------------------------------------- terms

# A term is ("var", i) | ("const", a) | ("op", name, (child, ...)).

def term_size(term) -> int:
    if term[0] == "op":
        return 1 + sum(term_size(c) for c in term[2])
    return 1


def term_str(term) -> str:
    if term[0] == "var":
        return f"x{term[1]}"
    if term[0] == "const":
        return str(term[1])
    if not term[2]:
        return term[1]
    return f"{term[1]}({', '.join(term_str(c) for c in term[2])})"


def eval_term(alg: FiniteAlgebra, term, args: Sequence[int]) -> int:
    kind = term[0]
    if kind == "var":
        return args[term[1]]
    if kind == "const":
        return term[1]
    return alg.eval_op(term[1], [eval_term(alg, c, args) for c in term[2]])


@dataclass
class TermWitness:
    term: tuple
    arity: int
    table: tuple
    domain: tuple | None = None   # None means the whole universe

    def __str__(self):
        return term_str(self.term)


def projection_tables(n: int, k: int, domain: Sequence[int] | None = None) -> np.ndarray:
    """Row i is the table of x_i over domain^k (row-major)."""
    dom = np.arange(n) if domain is None else np.asarray(domain)
    m = len(dom)
    if k == 0:
        return np.zeros((0, 1), dtype=np.int64)
    grids = np.indices((m,) * k).reshape(k, -1)
    return dom[grids].astype(np.int64)


def bounded_term_search(alg: FiniteAlgebra, arity: int, target, budget: int = 20000,
                        domain: Sequence[int] | None = None,
                        constants: Sequence[int] | None = None) -> TermWitness | None:
    """Breadth-first search of polynomial functions by term size.

    `target` is a table (over domain**arity) or a predicate on numpy tables.
    Returns the first witness found, or None once `budget` candidate
    evaluations are spent.  None never proves that no term exists.
    """
    n = alg.size
    if arity < 0 or budget <= 0:
        raise AlgebraError("need arity >= 0 and budget > 0")
    if callable(target):
        check = target
    else:
        want = np.asarray(target, dtype=np.int64)
        check = lambda t: np.array_equal(t, want)  # noqa: E731

    width = (n if domain is None else len(domain)) ** arity
    consts = range(n) if constants is None else constants
    seen: dict[bytes, tuple] = {}
    by_size: dict[int, list[tuple[np.ndarray, tuple]]] = {}
    spent = 0

    def offer(table, term, size):
        nonlocal spent
        spent += 1
        key = table.tobytes()
        if key in seen:
            return None
        seen[key] = term
        by_size.setdefault(size, []).append((table, term))
        if check(table):
            return TermWitness(term, arity, tuple(int(v) for v in table),
                               None if domain is None else tuple(domain))
        return None

    proj = projection_tables(n, arity, domain)
    for i in range(arity):
        hit = offer(proj[i], ("var", i), 1)
        if hit:
            return hit
    for c in consts:
        hit = offer(np.full(width, c, dtype=np.int64), ("const", c), 1)
        if hit:
            return hit
    for op in alg.operations:
        if op.arity == 0:
            hit = offer(np.full(width, op.table[0], dtype=np.int64), ("op", op.name, ()), 1)
            if hit:
                return hit

    ops = [op for op in alg.operations if op.arity > 0]
    size = 1
    max_size = 64
    while spent < budget and size < max_size:
        size += 1
        for op in ops:
            arr = alg.array(op.name)
            r = op.arity
            for parts in _compositions(size - 1, r):
                pools = [by_size.get(p, []) for p in parts]
                if any(not pool for pool in pools):
                    continue
                for combo in itertools.product(*pools):
                    table = arr[tuple(c[0] for c in combo)]
                    term = ("op", op.name, tuple(c[1] for c in combo))
                    hit = offer(table, term, size)
                    if hit:
                        return hit
                    if spent >= budget:
                        return None
    return None


def _compositions(total: int, parts: int):
    """Ordered tuples of `parts` positive ints summing to `total`."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ------------------------------------------------------- unary polynomial clone

def unary_poly_clone(alg: FiniteAlgebra, cap: int = DEFAULT_CLONE_CAP) -> set[tuple]:
    """All unary polynomial functions as tuples of length n."""
    return {tuple(int(v) for v in row) for row in unary_poly_clone_array(alg, cap)}


def unary_poly_clone_array(alg: FiniteAlgebra, cap: int = DEFAULT_CLONE_CAP) -> np.ndarray:
    """Same as unary_poly_clone, as a 2-d array (identity first, then constants)."""
    return poly_closure(alg, np.arange(alg.size)[None, :], cap)


def poly_closure(alg: FiniteAlgebra, generators: np.ndarray, cap: int = DEFAULT_CLONE_CAP) -> np.ndarray:
    """Rows closed under the basic operations, starting from generators and constants.

    Each row is a function from some fixed index set into the universe (for
    example a restriction of a polynomial to a subset, or a binary polynomial
    tabulated over a list of argument pairs).  Operations act pointwise.
    Rows come out in discovery order: generators first, then constants.
    Raises CapExceeded when more than `cap` rows appear.
    """
    n = alg.size
    gens = np.asarray(generators, dtype=np.int64)
    width = gens.shape[1]
    keyer = _row_keyer(n, width)
    rows = np.zeros((0, width), dtype=np.int64)
    known = keyer(rows)

    def add(cands: np.ndarray) -> np.ndarray:
        nonlocal rows, known
        if len(cands) == 0:
            return cands
        keys = keyer(cands)
        _, first = np.unique(keys, return_index=True)
        first.sort()
        cands, keys = cands[first], keys[first]
        fresh = ~np.isin(keys, known)
        cands, keys = cands[fresh], keys[fresh]
        if len(cands):
            rows = np.concatenate([rows, cands])
            known = np.concatenate([known, keys])
            if len(rows) > cap:
                raise CapExceeded(f"polynomial closure exceeds cap {cap}")
        return cands

    add(gens)
    add(np.repeat(np.arange(n, dtype=np.int64)[:, None], width, axis=1))
    ops = [(op.arity, alg.array(op.name)) for op in alg.operations if op.arity > 0]
    delta_start = 0
    while delta_start < len(rows):
        old = rows[:delta_start]
        delta = rows[delta_start:]
        everything = rows
        delta_start = len(rows)
        for r, arr in ops:
            for block in _apply_with_delta(arr, r, old, delta, everything):
                add(block)
    return rows


def _row_keyer(n: int, width: int):
    """Injective map from rows to sortable keys."""
    if width * np.log2(max(n, 2)) < 62:
        powers = n ** np.arange(width - 1, -1, -1, dtype=np.int64)
        return lambda a: a.reshape(-1, width) @ powers
    dt = np.dtype((np.void, 8 * width))
    return lambda a: np.ascontiguousarray(a.reshape(-1, width)).view(dt).reshape(-1)


_CHUNK = 1 << 21


def _apply_with_delta(arr, r, old, delta, everything):
    """f(g_1..g_r) over all tuples with at least one argument from delta.

    The first delta argument sits at position j: earlier positions range over
    old members, later ones over everything.  The last two positions are
    vectorised; yields blocks of result rows.
    """
    width = delta.shape[1]
    for j in range(r):
        pools = [old] * j + [delta] + [everything] * (r - j - 1)
        if any(len(p) == 0 for p in pools):
            continue
        if r == 1:
            yield arr[pools[0]]
            continue
        head_pools = pools[:-2]
        second, last = pools[-2], pools[-1]
        step = max(1, _CHUNK // max(1, len(last) * width))
        for head in itertools.product(*[range(len(p)) for p in head_pools]):
            args = [head_pools[i][head[i]][None, None, :] for i in range(r - 2)]
            for s in range(0, len(second), step):
                blk = arr[tuple(args + [second[s:s + step, None, :], last[None, :, :]])]
                yield blk.reshape(-1, width)


# ------------------------------------------------------------ constructions

def subalgebra_generate(alg: FiniteAlgebra, seed: Iterable[int]):
    """Least subuniverse containing seed (and every nullary constant).

    Returns (subalgebra, embedding) where embedding[i] is the element of
    alg that plays the role of i in the subalgebra.
    """
    members = set(int(s) for s in seed)
    if not members:
        raise AlgebraError("seed must be nonempty")
    for op in alg.operations:
        if op.arity == 0:
            members.add(op.table[0])
    changed = True
    while changed:
        changed = False
        cur = np.array(sorted(members))
        for op in alg.operations:
            if op.arity == 0:
                continue
            arr = alg.array(op.name)
            vals = np.unique(arr[np.ix_(*([cur] * op.arity))])
            new = set(int(v) for v in vals) - members
            if new:
                members |= new
                changed = True
    emb = sorted(members)
    return restrict(alg, emb, name=f"{alg.name}_sub"), emb


def restrict(alg: FiniteAlgebra, members: Sequence[int], name: str | None = None) -> FiniteAlgebra:
    """Restrict tables to a closed subset, relabelling elements by position."""
    pos = {a: i for i, a in enumerate(members)}
    idx = np.array(members)
    ops = []
    for op in alg.operations:
        arr = alg.array(op.name)
        sub = arr[np.ix_(*([idx] * op.arity))] if op.arity else arr
        flat = [pos[int(v)] for v in np.asarray(sub).reshape(-1)]
        ops.append((op.name, op.arity, flat))
    return make_algebra(name or alg.name, len(members), ops)


def product_algebra(a: FiniteAlgebra, b: FiniteAlgebra, name: str | None = None) -> FiniteAlgebra:
    """Componentwise product; the pair (x, y) is element x * |B| + y."""
    if a.signature() != b.signature():
        raise AlgebraError("signature mismatch")
    na, nb = a.size, b.size
    ops = []
    for op in a.operations:
        r = op.arity
        ta, tb = a.array(op.name), b.array(op.name)
        shape_a = []
        shape_b = []
        for _ in range(r):
            shape_a += [na, 1]
            shape_b += [1, nb]
        combined = ta.reshape(shape_a) * nb + tb.reshape(shape_b) if r else ta * nb + tb
        ops.append((op.name, r, np.asarray(combined).reshape(-1).tolist()))
    return make_algebra(name or f"{a.name}x{b.name}", na * nb, ops)


def essential_arity(alg: FiniteAlgebra, what) -> int:
    """Number of argument positions the operation (or witness) depends on."""
    n = alg.size
    if isinstance(what, TermWitness):
        m = n if what.domain is None else len(what.domain)
        arr = np.asarray(what.table).reshape((m,) * what.arity)
    else:
        arr = alg.array(what)
    count = 0
    for axis in range(arr.ndim):
        first = np.take(arr, [0], axis=axis)
        if np.any(arr != first):
            count += 1
    return count


def compose(f: Sequence[int], g: Sequence[int]) -> tuple:
    """(f o g)(x) = f(g(x))."""
    return tuple(f[x] for x in g)
