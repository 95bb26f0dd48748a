"""Named compiler passes with automatic discovery of the structure each one needs."""
from __future__ import annotations

import numpy as np

from .circuits import LayeredCircuit, Program
from .compilers import (CompileError, compile_abp_to_detalg, compile_affine_simple,
                        compile_bool_to_type3, compile_cc_to_nilpotent, compile_detalg_to_abp,
                        compile_itdet_to_solvable, compile_mixed, compile_nilpotent_full,
                        compile_solvable_full, compile_solvable_step, extract_multimonotone)
from .congruence import congruence_lattice
from .core_algebra import FiniteAlgebra
from .fixtures import boolean2, parse_fixture_id
from .local import totally_ordered_check, typeset
from .reps import chain_reps, find_boolean_kit, module_rep

PASS_NAMES = ("bool→type3", "ordered→multimonotone", "affine→mod", "nilpotent→cc", "cc→nilpotent",
              "abp→detalg", "detalg→abp", "solvable-step", "solvable→itdet", "itdet→solvable",
              "mixed→itdet∘monotone")

ASCII_ALIASES = {n.replace("→", "->").replace("∘", "+"): n for n in PASS_NAMES}


def canonical_pass(name: str) -> str:
    name = ASCII_ALIASES.get(name, name)
    if name not in PASS_NAMES:
        raise CompileError(f"unknown pass {name!r}; choose from {', '.join(PASS_NAMES)}")
    return name


def bundled_coords(alg: FiniteAlgebra):
    """Per-step coordinate functions for fixtures without a basic group operation."""
    try:
        fam, params = parse_fixture_id(alg.name)
    except Exception:
        return None
    if fam == "mixed":
        p = params[0]
        return [lambda Q, p=p: (p, np.arange(Q.size) % p)]
    return None


def type_chain(alg: FiniteAlgebra, label: str = "2"):
    """Largest beta reachable from 0 by covers of the given type, with the chain."""
    lat = congruence_lattice(alg)
    types = typeset(alg, lat)
    best = [0]
    stack = [[0]]
    while stack:
        path = stack.pop()
        if len(path) > len(best):
            best = path
        for j in lat.upper_covers(path[-1]):
            if types[(path[-1], j)].type_label == label:
                stack.append(path + [j])
    return [lat.members[i] for i in best]


def _layers(lc: LayeredCircuit, kind: str):
    depth = {}
    for i in lc.ancestors():
        g = lc.gates[i]
        if g.kind in ("input", "const"):
            depth[i] = 0
        elif g.kind == kind:
            depth[i] = 1 + max((depth[j] for j in g.inputs), default=0)
        else:
            raise CompileError(f"only {kind} gates allowed, found {g.kind}")
    return depth


def infer_primes(lc: LayeredCircuit):
    """Primes per block (output block first) from the depth of each BABP gate."""
    depth = _layers(lc, "babp")
    h = depth[lc.output]
    primes: dict = {}
    for i, d in depth.items():
        if d:
            p = lc.gates[i].params["gate"].abp.prime
            if primes.setdefault(h - d, p) != p:
                raise CompileError("gates of one depth use different primes; pass --primes")
    return tuple(primes[b] for b in range(h))


def infer_modulus(lc: LayeredCircuit):
    depth = _layers(lc, "mod")
    mods = {lc.gates[i].params["m"] for i in depth if lc.gates[i].kind == "mod"}
    if len(mods) > 1:
        raise CompileError("MOD gates of several moduli")
    return (mods.pop() if mods else 2), max(depth[lc.output], 1)


def run_pass(name: str, src, algebra: FiniteAlgebra | None = None, primes=None, m=None, h=None):
    """Compile `src` with the named pass; structure is discovered or taken from fixtures."""
    name = canonical_pass(name)
    if name == "bool→type3":
        alg = algebra or boolean2()
        lat = congruence_lattice(alg)
        for (i, j), pq in typeset(alg, lat).items():
            if pq.type_label != "3":
                continue
            from .local import minimal_sets
            for ms in minimal_sets(alg, lat.members[i], lat.members[j]):
                for tr in ms.traces:
                    if len(tr) == 2:
                        for u0, u1 in (tr, tr[::-1]):
                            kit = find_boolean_kit(alg, u0, u1)
                            if kit is not None:
                                return compile_bool_to_type3(src, alg, kit)
        raise CompileError("no Boolean trace found")
    if name == "abp→detalg":
        return compile_abp_to_detalg(src)
    if name == "detalg→abp":
        return compile_detalg_to_abp(src)
    if name == "cc→nilpotent":
        mm, hh = infer_modulus(src)
        return compile_cc_to_nilpotent(src, m or mm, h or hh)
    if name == "itdet→solvable":
        return compile_itdet_to_solvable(src, tuple(primes) if primes else infer_primes(src))
    prog: Program = src
    alg = prog.algebra
    if name == "ordered→multimonotone":
        w = totally_ordered_check(alg)
        if w is None:
            raise CompileError("algebra is not totally ordered")
        return extract_multimonotone(prog, w)
    if name == "affine→mod":
        return compile_affine_simple(prog, module_rep(alg))
    coords = bundled_coords(alg)
    if name == "nilpotent→cc":
        return compile_nilpotent_full(prog, chain_reps(alg, coords_fns=coords))
    if name == "solvable-step":
        return compile_solvable_step(prog, chain_reps(alg, coords_fns=coords)[0])
    if name == "solvable→itdet":
        return compile_solvable_full(prog, chain_reps(alg, coords_fns=coords))
    # mixed: type-2 chain up to beta, ordered factors above it
    chain = type_chain(alg, "2")
    beta = chain[-1]
    reps = chain_reps(alg, chain, coords_fns=coords) if len(chain) > 1 else []
    return compile_mixed(prog, beta, reps)


def source_kind(name: str) -> str:
    name = canonical_pass(name)
    if name in ("bool→type3", "cc→nilpotent", "itdet→solvable"):
        return "layered"
    if name == "abp→detalg":
        return "babp"
    return "program"
