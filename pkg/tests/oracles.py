"""Independent brute-force oracles used by the tests."""
import itertools

import numpy as np


def set_partitions(n):
    """All partitions of range(n) as label lists (restricted growth strings)."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield list(prefix)
            return
        for v in range(top + 2):
            yield from rec(prefix + [v], max(top, v))
    if n == 0:
        yield []
        return
    yield from rec([0], 0)


def compatible(alg, labels):
    """Direct check: related arguments give related results, over every tuple pair."""
    n = alg.size
    lab = np.asarray(labels)
    for op in alg.operations:
        r = op.arity
        if r == 0:
            continue
        arr = alg.array(op.name)
        for xs in itertools.product(range(n), repeat=r):
            for ys in itertools.product(*[[b for b in range(n) if lab[b] == lab[a]] for a in xs]):
                if lab[arr[xs]] != lab[arr[ys]]:
                    return False
    return True


def brute_force_congruences(alg):
    return {tuple(p) for p in set_partitions(alg.size) if compatible(alg, p)}


def brute_unary_polys(alg):
    """Unary polynomial functions by naive fixpoint over tuples."""
    n = alg.size
    funcs = {tuple(range(n))} | {(a,) * n for a in range(n)}
    changed = True
    while changed:
        changed = False
        cur = list(funcs)
        for op in alg.operations:
            arr = alg.array(op.name)
            for args in itertools.product(cur, repeat=op.arity):
                f = tuple(int(arr[tuple(g[x] for g in args)]) for x in range(n))
                if f not in funcs:
                    funcs.add(f)
                    changed = True
    return funcs


def expand_process(a):
    """Formal polynomial of an ABP process: {sorted monomial tuple: coeff mod p}."""
    p = a.prime
    vals = []
    for st in a.steps:
        if st[0] == "one":
            vals.append({(): 1})
        elif st[0] == "scale":
            vals.append({m: c * st[2] % p for m, c in vals[st[1]].items()})
        elif st[0] == "mulvar":
            vals.append({tuple(sorted(m + (st[2],))): c for m, c in vals[st[1]].items()})
        else:
            acc = {}
            for r in st[1]:
                for m, c in vals[r].items():
                    acc[m] = (acc.get(m, 0) + c) % p
            vals.append(acc)
    if not a.steps:
        return {}
    return {m: c for m, c in vals[a.output].items() if c}


def eval_poly(poly, p, point):
    total = 0
    for m, c in poly.items():
        t = c
        for v in m:
            t = t * point[v] % p
        total = (total + t) % p
    return total


def all_points(p, n):
    return np.array(list(itertools.product(range(p), repeat=n)), dtype=np.int64).reshape(p ** n, n)
