"""Generators for the named example algebras.

Structured universes are flattened in mixed radix with the first coordinate
most significant:

* nudet-exact(p): (x, y) in Z_p x Z_p is x*p + y.
* example-nilpo(m, h): (x_1..x_h) in Z_m^h, x_1 most significant.
* solv-construc(p_1..p_h): (x_1, y_1, .., x_h, y_h), block i is (x_i, y_i) over Z_{p_i}.
* ex-type5 variants: bottom = 0, 0 = 1, 1 = 2.
* mixed(p) and stacked(p): (m, t) in Z_p x {0,1} is t*p + m.
"""
from __future__ import annotations

import itertools
import re

from .core_algebra import AlgebraError, FiniteAlgebra, make_algebra


class Radix:
    """Mixed-radix codec, first digit most significant."""

    def __init__(self, radices):
        self.radices = tuple(radices)
        self.size = 1
        for r in self.radices:
            self.size *= r

    def encode(self, digits) -> int:
        idx = 0
        for d, r in zip(digits, self.radices):
            idx = idx * r + (d % r)
        return idx

    def decode(self, idx: int) -> tuple:
        out = []
        for r in reversed(self.radices):
            out.append(idx % r)
            idx //= r
        return tuple(reversed(out))

    def all(self):
        return [self.decode(i) for i in range(self.size)]


def _tabulate(codec: Radix, arity: int, fn) -> list[int]:
    elems = codec.all()
    return [codec.encode(fn(*args)) for args in itertools.product(elems, repeat=arity)]


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p**0.5) + 1))


# ----------------------------------------------------------------- families

def ex_lattice() -> FiniteAlgebra:
    return make_algebra("ex-lattice", 2, [("meet", 2, [0, 0, 0, 1]), ("join", 2, [0, 1, 1, 1])])


def boolean2() -> FiniteAlgebra:
    return make_algebra("boolean2", 2, [
        ("meet", 2, [0, 0, 0, 1]), ("join", 2, [0, 1, 1, 1]), ("neg", 1, [1, 0])])


def chain(k: int) -> FiniteAlgebra:
    if k < 1:
        raise AlgebraError("chain needs k >= 1")
    rng = range(k)
    return make_algebra(f"chain({k})", k, [
        ("meet", 2, [min(a, b) for a in rng for b in rng]),
        ("join", 2, [max(a, b) for a in rng for b in rng]),
    ])


def affine(p: int) -> FiniteAlgebra:
    if p < 2:
        raise AlgebraError("affine needs p >= 2")
    rng = range(p)
    return make_algebra(f"affine({p})", p, [
        ("d", 3, [(x - y + z) % p for x in rng for y in rng for z in rng])])


def nudet_exact(p: int) -> FiniteAlgebra:
    if not _is_prime(p):
        raise AlgebraError("nudet-exact needs a prime")
    c = Radix((p, p))
    return make_algebra(f"nudet-exact({p})", p * p, [
        ("add", 2, _tabulate(c, 2, lambda a, b: (a[0] + b[0], a[1] + b[1]))),
        ("pi1", 1, _tabulate(c, 1, lambda a: (a[0], 0))),
        ("pi2", 1, _tabulate(c, 1, lambda a: (0, a[1]))),
        ("u", 1, _tabulate(c, 1, lambda a: (a[1], 0))),
        ("v", 2, _tabulate(c, 2, lambda a, b: (a[0] * b[1], 0))),
    ])


def nudet_codec(p: int) -> Radix:
    return Radix((p, p))


def subset_masks(m: int):
    return range(1 << m)


def mask_members(mask: int, m: int) -> list[int]:
    return [v for v in range(m) if mask >> v & 1]


def example_nilpo(m: int, h: int) -> FiniteAlgebra:
    if m < 2 or h < 1:
        raise AlgebraError("example-nilpo needs m >= 2, h >= 1")
    c = Radix((m,) * h)
    ops = [("add", 2, _tabulate(c, 2, lambda a, b: tuple(x + y for x, y in zip(a, b))))]
    for i in range(1, h + 1):
        ops.append((f"e{i}", 1, _tabulate(
            c, 1, lambda a, i=i: tuple(a[j] if j == i - 1 else 0 for j in range(h)))))
    for i in range(2, h + 1):
        for mask in subset_masks(m):
            ops.append((f"chi{i}_{mask}", 1, _tabulate(
                c, 1, lambda a, i=i, mask=mask: tuple(
                    1 if (j == i - 2 and mask >> a[i - 1] & 1) else 0 for j in range(h)))))
    return make_algebra(f"example-nilpo({m},{h})", c.size, ops)


def nilpo_codec(m: int, h: int) -> Radix:
    return Radix((m,) * h)


def solv_construc(primes) -> FiniteAlgebra:
    primes = tuple(primes)
    if not primes or not all(_is_prime(p) for p in primes):
        raise AlgebraError("solv-construc needs a nonempty list of primes")
    c = solv_codec(primes)
    h = len(primes)
    radices = c.radices
    # global componentwise addition makes the algebra Malcev
    ops = [("add", 2, _tabulate(c, 2, lambda a, b: tuple(
        (x + y) % r for x, y, r in zip(a, b, radices))))]

    def block_op(i, fn, arity):
        p = primes[i]

        def full(*args):
            out = [0] * (2 * h)
            x, y = fn(*[(a[2 * i], a[2 * i + 1]) for a in args])
            out[2 * i], out[2 * i + 1] = x % p, y % p
            return tuple(out)
        return _tabulate(c, arity, full)

    for i in range(h):
        k = i + 1
        ops.append((f"add{k}", 2, block_op(i, lambda a, b: (a[0] + b[0], a[1] + b[1]), 2)))
        ops.append((f"pia{k}", 1, block_op(i, lambda a: (a[0], 0), 1)))
        ops.append((f"pib{k}", 1, block_op(i, lambda a: (0, a[1]), 1)))
        ops.append((f"u{k}", 1, block_op(i, lambda a: (a[1], 0), 1)))
        ops.append((f"v{k}", 2, block_op(i, lambda a, b: (a[0] * b[1], 0), 2)))
    for i in range(1, h):
        k = i + 1
        for mask in subset_masks(primes[i]):
            def chi(a, i=i, mask=mask):
                out = [0] * (2 * h)
                if mask >> a[2 * i] & 1:
                    out[2 * i - 1] = 1
                return tuple(out)
            ops.append((f"chi{k}_{mask}", 1, _tabulate(c, 1, chi)))
    name = "solv-construc(" + ",".join(map(str, primes)) + ")"
    return make_algebra(name, c.size, ops)


def solv_codec(primes) -> Radix:
    rad = []
    for p in primes:
        rad += [p, p]
    return Radix(rad)


# bottom = 0, 0 = 1, 1 = 2
BOT, ZERO, ONE = 0, 1, 2


def _t5_binary(fn):
    table = []
    for a in range(3):
        for b in range(3):
            table.append(BOT if BOT in (a, b) else fn(a - 1, b - 1) + 1)
    return table


def ex_type5(variant: int) -> FiniteAlgebra:
    if variant not in (1, 2, 3, 4):
        raise AlgebraError("ex-type5 variants are A1..A4")
    e1 = [BOT, BOT, ZERO]
    e2 = [BOT, ONE, ONE]
    e3 = [BOT, ZERO, ZERO]
    ops = [("e1", 1, e1), ("e2", 1, e2), ("e3", 1, e3)]
    if variant in (1, 2, 3):
        ops.append(("meet", 2, _t5_binary(min)))
    if variant == 2:
        ops.append(("join", 2, _t5_binary(max)))
    if variant == 3:
        ops.append(("neg", 1, [BOT, ONE, ZERO]))
    if variant == 4:
        ops.append(("plus", 2, _t5_binary(lambda a, b: a ^ b)))
    return make_algebra(f"ex-type5-A{variant}", 3, ops)


def mixed(p: int) -> FiniteAlgebra:
    """Affine atom (m-coordinate) under a 2-element lattice quotient (t-coordinate)."""
    if not _is_prime(p):
        raise AlgebraError("mixed needs a prime")
    c = Radix((2, p))   # (t, m)
    return make_algebra(f"mixed({p})", 2 * p, [
        ("meet", 2, _tabulate(c, 2, lambda a, b: (a[0] & b[0], b[0] * a[1] + b[1]))),
        ("join", 2, _tabulate(c, 2, lambda a, b: (a[0] | b[0], a[1] + b[1]))),
        ("g", 1, _tabulate(c, 1, lambda a: (a[0], a[0]))),
    ])


def stacked(p: int) -> FiniteAlgebra:
    """Lattice atom (t-coordinate) under an affine quotient (m-coordinate)."""
    if not _is_prime(p):
        raise AlgebraError("stacked needs a prime")
    c = Radix((2, p))
    return make_algebra(f"stacked({p})", 2 * p, [
        ("meet", 2, _tabulate(c, 2, lambda a, b: (a[0] & b[0], a[1]))),
        ("join", 2, _tabulate(c, 2, lambda a, b: (a[0] | b[0], a[1]))),
        ("d", 3, _tabulate(c, 3, lambda a, b, e: (a[0], a[1] - b[1] + e[1]))),
        ("s", 1, _tabulate(c, 1, lambda a: (1 if a[1] % p else 0, a[1]))),
    ])


def tm_codec(p: int) -> Radix:
    return Radix((2, p))


# ----------------------------------------------------------------- registry

_ID = re.compile(r"^([a-z0-9\-]+?)(?:\(([\d,\s]*)\))?$")


def parse_fixture_id(fid: str):
    fid = fid.strip()
    m5 = re.fullmatch(r"ex-type5-A([1-4])", fid)
    if m5:
        return "ex-type5", (int(m5.group(1)),)
    m = _ID.match(fid)
    if not m:
        raise AlgebraError(f"bad fixture id {fid!r}")
    fam = m.group(1)
    params = tuple(int(x) for x in m.group(2).split(",")) if m.group(2) else ()
    return fam, params


def fixture(fid: str) -> FiniteAlgebra:
    fam, params = parse_fixture_id(fid)
    try:
        if fam == "ex-lattice" and not params:
            return ex_lattice()
        if fam == "boolean2" and not params:
            return boolean2()
        if fam == "chain" and len(params) == 1:
            return chain(*params)
        if fam == "affine" and len(params) == 1:
            return affine(*params)
        if fam == "nudet-exact" and len(params) == 1:
            return nudet_exact(*params)
        if fam == "example-nilpo" and len(params) == 2:
            return example_nilpo(*params)
        if fam == "solv-construc" and params:
            return solv_construc(params)
        if fam == "ex-type5":
            return ex_type5(*params)
        if fam == "mixed" and len(params) == 1:
            return mixed(*params)
        if fam == "stacked" and len(params) == 1:
            return stacked(*params)
    except TypeError:
        pass
    raise AlgebraError(f"unknown fixture {fid!r}")


FIXTURE_IDS = [
    "ex-lattice", "boolean2", "chain(3)", "affine(2)", "affine(3)",
    "nudet-exact(2)", "nudet-exact(3)", "example-nilpo(2,2)", "example-nilpo(6,3)",
    "solv-construc(2,3)", "ex-type5-A1", "ex-type5-A2", "ex-type5-A3", "ex-type5-A4",
    "mixed(2)", "mixed(3)", "stacked(2)",
]
