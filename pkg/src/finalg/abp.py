"""Algebraic branching programs over GF(p) as step processes.

A process is a list of steps, each referring only to earlier steps:

    ("one",)                 the constant 1
    ("scale", s, c)          c * value(s)
    ("mulvar", s, v)         x_v * value(s)
    ("sum", (s1, .., sk))    value(s1) + .. + value(sk)   (empty sum is 0)

Every step value is linear in the value of the "one" steps, which is what
lets `multiply` re-root a second process on the output of the first.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np


class AbpError(ValueError):
    pass


DEFAULT_COMPOSE_CAP = 8


@dataclass
class AbpProcess:
    prime: int
    arity: int
    steps: list = field(default_factory=list)
    output: int = -1

    def __post_init__(self):
        if self.output < 0 and self.steps:
            self.output = len(self.steps) - 1
        self.validate()

    def validate(self):
        p = self.prime
        if p < 2 or p >= 2**31:
            raise AbpError("prime out of range")
        for i, st in enumerate(self.steps):
            kind = st[0]
            refs = st[1] if kind == "sum" else ((st[1],) if kind in ("scale", "mulvar") else ())
            if any(not 0 <= r < i for r in refs):
                raise AbpError(f"step {i} refers forward")
            if kind == "mulvar" and not 0 <= st[2] < self.arity:
                raise AbpError(f"step {i}: variable out of range")
            if kind == "scale" and not 0 <= st[2] < p:
                raise AbpError(f"step {i}: constant not reduced")
            if kind not in ("one", "scale", "mulvar", "sum"):
                raise AbpError(f"unknown step kind {kind}")
        if self.steps and not 0 <= self.output < len(self.steps):
            raise AbpError("bad output")

    @property
    def size(self) -> int:
        return len(self.steps)

    def eval(self, point) -> int:
        return int(self.eval_batch(np.asarray(point, dtype=np.int64)[None, :])[0])

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        """Values at every row of `points` (shape (N, arity))."""
        pts = np.asarray(points, dtype=np.int64) % self.prime
        if pts.ndim != 2 or pts.shape[1] != self.arity:
            raise AbpError(f"expected points of width {self.arity}")
        p = self.prime
        N = pts.shape[0]
        if not self.steps:
            return np.zeros(N, dtype=np.int64)
        vals: list[np.ndarray] = []
        ones = np.ones(N, dtype=np.int64)
        for st in self.steps:
            kind = st[0]
            if kind == "one":
                vals.append(ones)
            elif kind == "scale":
                vals.append(vals[st[1]] * st[2] % p)
            elif kind == "mulvar":
                vals.append(vals[st[1]] * pts[:, st[2]] % p)
            else:
                acc = np.zeros(N, dtype=np.int64)
                for r in st[1]:
                    acc += vals[r]
                vals.append(acc % p)
        return vals[self.output]

    def trimmed(self) -> "AbpProcess":
        """Copy keeping only the steps the output depends on."""
        if not self.steps:
            return self
        need = set()
        stack = [self.output]
        while stack:
            i = stack.pop()
            if i in need:
                continue
            need.add(i)
            st = self.steps[i]
            if st[0] == "sum":
                stack.extend(st[1])
            elif st[0] in ("scale", "mulvar"):
                stack.append(st[1])
        order = sorted(need)
        new = {old: j for j, old in enumerate(order)}
        steps = []
        for old in order:
            st = self.steps[old]
            if st[0] == "sum":
                steps.append(("sum", tuple(new[r] for r in st[1])))
            elif st[0] in ("scale", "mulvar"):
                steps.append((st[0], new[st[1]], st[2]))
            else:
                steps.append(st)
        return AbpProcess(self.prime, self.arity, steps, new[self.output])

    def to_dict(self) -> dict:
        return {"prime": self.prime, "arity": self.arity, "output": self.output,
                "steps": [list(st[:1]) + ([list(st[1])] if st[0] == "sum" else list(st[1:]))
                          for st in self.steps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "AbpProcess":
        steps = []
        for st in d["steps"]:
            if st[0] == "sum":
                steps.append(("sum", tuple(st[1])))
            else:
                steps.append(tuple(st))
        return cls(d["prime"], d["arity"], steps, d["output"])

    @classmethod
    def from_json(cls, text: str) -> "AbpProcess":
        return cls.from_dict(json.loads(text))


class _Builder:
    def __init__(self, prime, arity):
        self.prime, self.arity = prime, arity
        self.steps: list = []
        self._one = None

    def add(self, st) -> int:
        self.steps.append(st)
        return len(self.steps) - 1

    def one(self) -> int:
        if self._one is None:
            self._one = self.add(("one",))
        return self._one

    def scale(self, s, c) -> int:
        c %= self.prime
        return s if c == 1 else self.add(("scale", s, c))

    def mulvar(self, s, v) -> int:
        return self.add(("mulvar", s, v))

    def sum(self, refs) -> int:
        refs = tuple(refs)
        return refs[0] if len(refs) == 1 else self.add(("sum", refs))

    def splice(self, a: AbpProcess, root: int | None, var_map=None) -> int:
        """Copy a's steps; its "one" steps become `root` (or a fresh one). Returns a's output."""
        base = {}
        for i, st in enumerate(a.steps):
            kind = st[0]
            if kind == "one":
                base[i] = self.one() if root is None else root
            elif kind == "scale":
                base[i] = self.add(("scale", base[st[1]], st[2]))
            elif kind == "mulvar":
                v = st[2] if var_map is None else var_map[st[2]]
                base[i] = self.add(("mulvar", base[st[1]], v))
            else:
                base[i] = self.add(("sum", tuple(base[r] for r in st[1])))
        if not a.steps:
            return self.add(("sum", ()))
        return base[a.output]

    def build(self, output) -> AbpProcess:
        return AbpProcess(self.prime, self.arity, self.steps, output)


def constant(prime: int, arity: int, c: int) -> AbpProcess:
    b = _Builder(prime, arity)
    c %= prime
    if c == 0:
        return b.build(b.add(("sum", ())))
    return b.build(b.scale(b.one(), c) if c != 1 else b.one())


def variable(prime: int, arity: int, v: int) -> AbpProcess:
    b = _Builder(prime, arity)
    return b.build(b.mulvar(b.one(), v))


def from_sparse_poly(prime: int, arity: int, monomials) -> AbpProcess:
    """Sum of coeff * prod(x_v for v in multiset); steps <= 2 + sum(deg + 1)."""
    b = _Builder(prime, arity)
    terms = []
    for coeff, vars_ in monomials:
        coeff %= prime
        if coeff == 0:
            continue
        s = b.one()
        for v in vars_:
            s = b.mulvar(s, v)
        terms.append(b.add(("scale", s, coeff)) if coeff != 1 else s)
    return b.build(b.add(("sum", tuple(terms))))


def affine_substitute(a: AbpProcess, subs, new_arity: int | None = None,
                      prime: int | None = None) -> AbpProcess:
    """Replace x_v by sum_i coeffs[v][i] x_i + consts[v].

    `subs` is a list (one per old variable) of (coeff dict {new var: c}, constant).
    Each mulvar step becomes at most 2w + 2 steps, w the number of variables in
    its form, so the result has at most (2w_max + 2) * steps(a) steps; with
    single-variable forms that is 4 * steps(a).
    """
    if prime is not None and prime != a.prime:
        raise AbpError("prime mismatch")
    if len(subs) != a.arity:
        raise AbpError("one form per variable required")
    m = new_arity if new_arity is not None else a.arity
    p = a.prime
    b = _Builder(p, m)
    base = {}
    for i, st in enumerate(a.steps):
        kind = st[0]
        if kind == "one":
            base[i] = b.one()
        elif kind == "scale":
            base[i] = b.add(("scale", base[st[1]], st[2]))
        elif kind == "sum":
            base[i] = b.add(("sum", tuple(base[r] for r in st[1])))
        else:
            coeffs, c = subs[st[2]]
            src = base[st[1]]
            parts = []
            for var, alpha in sorted(coeffs.items()):
                alpha %= p
                if alpha == 0:
                    continue
                if not 0 <= var < m:
                    raise AbpError("substituted variable out of range")
                parts.append(b.scale(b.mulvar(src, var), alpha))
            if c % p:
                parts.append(b.scale(src, c))
            base[i] = b.add(("sum", tuple(parts)))
    if not a.steps:
        return constant(p, m, 0)
    return b.build(base[a.output])


def substitute_polys(a: AbpProcess, polys, new_arity: int) -> AbpProcess:
    """Replace x_v by a sparse polynomial (list of (coeff, multiset)) in new variables."""
    if len(polys) != a.arity:
        raise AbpError("one polynomial per variable required")
    p = a.prime
    b = _Builder(p, new_arity)
    base = {}
    for i, st in enumerate(a.steps):
        kind = st[0]
        if kind == "one":
            base[i] = b.one()
        elif kind == "scale":
            base[i] = b.add(("scale", base[st[1]], st[2]))
        elif kind == "sum":
            base[i] = b.add(("sum", tuple(base[r] for r in st[1])))
        else:
            src = base[st[1]]
            parts = []
            for coeff, mono in polys[st[2]]:
                if coeff % p == 0:
                    continue
                s = src
                for v in mono:
                    s = b.mulvar(s, v)
                parts.append(b.scale(s, coeff))
            base[i] = b.add(("sum", tuple(parts)))
    if not a.steps:
        return constant(p, new_arity, 0)
    return b.build(base[a.output])


def multiply(a1: AbpProcess, a2: AbpProcess) -> AbpProcess:
    """Pointwise product with at most steps(a1) + steps(a2) steps."""
    if a1.prime != a2.prime:
        raise AbpError("prime mismatch")
    if a1.arity != a2.arity:
        raise AbpError("arity mismatch")
    b = _Builder(a1.prime, a1.arity)
    out1 = b.splice(a1, None)
    return b.build(b.splice(a2, out1))


def add(parts, coeffs=None) -> AbpProcess:
    """Linear combination of processes."""
    parts = list(parts)
    p, m = parts[0].prime, parts[0].arity
    b = _Builder(p, m)
    outs = []
    for i, a in enumerate(parts):
        o = b.splice(a, None)
        c = 1 if coeffs is None else coeffs[i] % p
        if c:
            outs.append(b.scale(o, c))
    return b.build(b.add(("sum", tuple(outs))))


def indicator_coefficients(p: int) -> np.ndarray:
    """M[j, c] = coefficient of y^j in chi_c(y) = 1 - (y - c)^(p-1) over GF(p)."""
    from math import comb
    M = np.zeros((p, p), dtype=np.int64)
    for c in range(p):
        M[0, c] = 1
        # (y - c)^(p-1) = sum_j C(p-1, j) y^j (-c)^(p-1-j)
        for j in range(p):
            M[j, c] = (M[j, c] - comb(p - 1, j) * pow(-c, p - 1 - j, p)) % p
    return M


def interpolate(p: int, k: int, table) -> np.ndarray:
    """Coefficient tensor (exponents 0..p-1 per variable) of a function GF(p)^k -> GF(p).

    `table` is indexed row-major by the argument tuple.
    """
    D = np.asarray(table, dtype=np.int64).reshape((p,) * k) % p
    M = indicator_coefficients(p)
    C = D
    for axis in range(k):
        C = np.moveaxis(np.tensordot(M, C, axes=([1], [axis])), 0, axis) % p
    return C


def compose_bounded(d, parts, cap: int = DEFAULT_COMPOSE_CAP) -> AbpProcess:
    """d(parts(x)) for d: GF(p)^k -> GF(p) given as a callable or a row-major table.

    Size is at most sum over monomials of (sum_i e_i * steps(part_i) + 2), that is
    at most p^k * (k (p-1) max_i steps(part_i) + 2).
    """
    parts = list(parts)
    k = len(parts)
    if k > cap:
        raise AbpError(f"compose_bounded arity {k} exceeds cap {cap}")
    if k == 0:
        raise AbpError("need at least one part")
    p, m = parts[0].prime, parts[0].arity
    if any(a.prime != p or a.arity != m for a in parts):
        raise AbpError("parts must share prime and arity")
    if callable(d):
        table = [d(*args) % p for args in itertools.product(range(p), repeat=k)]
    else:
        table = d
    C = interpolate(p, k, table)
    b = _Builder(p, m)
    terms = []
    for exps in itertools.product(range(p), repeat=k):
        c = int(C[exps])
        if c == 0:
            continue
        s = b.one()
        for i, e in enumerate(exps):
            for _ in range(e):
                s = b.splice(parts[i], s)
        terms.append(b.scale(s, c))
    return b.build(b.add(("sum", tuple(terms))))


@dataclass
class BabpGate:
    abp: AbpProcess
    accepting: frozenset

    def __post_init__(self):
        self.accepting = frozenset(int(a) for a in self.accepting)
        if any(not 0 <= a < self.abp.prime for a in self.accepting):
            raise AbpError("accepting set outside GF(p)")

    @property
    def arity(self) -> int:
        return self.abp.arity

    def eval_batch(self, bits: np.ndarray) -> np.ndarray:
        vals = self.abp.eval_batch(bits)
        return np.isin(vals, list(self.accepting)) if self.accepting else np.zeros(len(vals), bool)

    def to_dict(self) -> dict:
        return {"abp": self.abp.to_dict(), "accepting": sorted(self.accepting)}

    @classmethod
    def from_dict(cls, d) -> "BabpGate":
        return cls(AbpProcess.from_dict(d["abp"]), frozenset(d["accepting"]))


def babp_eval(g: BabpGate, bits) -> bool:
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) != g.arity:
        raise AbpError("arity mismatch")
    return bool(g.eval_batch(bits[None, :])[0])


# ----------------------------------------------------------------- sparse polynomials

class Poly:
    """Sparse polynomial over GF(p); monomials are sorted tuples of variable indices."""

    __slots__ = ("p", "terms")

    def __init__(self, p: int, terms=None):
        self.p = p
        self.terms: dict[tuple, int] = {}
        if terms:
            for mono, c in terms.items():
                c %= p
                if c:
                    self.terms[tuple(sorted(mono))] = c

    @classmethod
    def const(cls, p, c):
        return cls(p, {(): c})

    @classmethod
    def var(cls, p, v):
        return cls(p, {(v,): 1})

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = (out.get(m, 0) + c) % self.p
        return Poly(self.p, out)

    def scale(self, c):
        return Poly(self.p, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        out: dict[tuple, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(sorted(m1 + m2))
                out[m] = (out.get(m, 0) + c1 * c2) % self.p
        return Poly(self.p, out)

    def boolean(self):
        """Reduce with x^2 = x (valid on 0/1 points)."""
        out: dict[tuple, int] = {}
        for m, c in self.terms.items():
            k = tuple(sorted(set(m)))
            out[k] = (out.get(k, 0) + c) % self.p
        return Poly(self.p, out)

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def monomials(self):
        return [(c, m) for m, c in sorted(self.terms.items())]

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        acc = np.zeros(pts.shape[0], dtype=np.int64)
        for m, c in self.terms.items():
            t = np.full(pts.shape[0], c, dtype=np.int64)
            for v in m:
                t = t * pts[:, v] % self.p
            acc = (acc + t) % self.p
        return acc

    def to_abp(self, arity: int) -> AbpProcess:
        return from_sparse_poly(self.p, arity, self.monomials())
