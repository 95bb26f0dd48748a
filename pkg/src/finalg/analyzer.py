"""Classification of algebras by the circuit class of their programs, and the equivalence oracle."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuits import all_inputs, max_arity
from .compilers import ordered_factors
from .congruence import (CongruenceLattice, congruence_lattice, is_nilpotent, quotient_algebra)
from .core_algebra import AlgebraError, FiniteAlgebra, essential_arity
from .local import minimal_sets, totally_ordered_check, typeset
from .reps import find_boolean_kit

PPOLY = "P/poly"
CC0 = "⊆CC0"
NC2 = "⊆NC2/nuItDet"
MULTI = "MULTIMONOTONE"
SUB_MULTI = "⊆MULTIMONOTONE"
MULTI_BRACKET = "MONOTONE⊆·⊆MULTIMONOTONE"
NC2_MONO = "⊆NC2∘MONOTONE"
BOUND = "BOUND_c"
BOUND_MOD = "BOUND_c∘MOD_p"
UNKNOWN = "UNKNOWN"


@dataclass
class ClassLabel:
    kind: str
    params: dict = field(default_factory=dict)
    evidence: list = field(default_factory=list)
    reason: str = ""

    @property
    def text(self) -> str:
        if self.kind == BOUND_MOD:
            return f"BOUND∘MOD_{self.params['p']}"
        if self.kind == UNKNOWN:
            return f"UNKNOWN({self.reason})"
        return self.kind

    def __str__(self):
        return self.text

    def to_dict(self):
        return {"label": self.text, "kind": self.kind, "params": self.params,
                "evidence": self.evidence, "reason": self.reason}


def _types(alg, lat, budget):
    ts = typeset(alg, lat, budget)
    return ts, {pq.type_label for pq in ts.values()}


def _cover_type(ts, lat: CongruenceLattice, i: int):
    low = lat.lower_covers(i)
    return ts[(low[0], i)].type_label if len(low) == 1 else None


def _boolean_witness(alg, lat, ts, budget):
    for (i, j), pq in ts.items():
        if pq.type_label != "3":
            continue
        for ms in minimal_sets(alg, lat.members[i], lat.members[j]):
            for tr in ms.traces:
                if len(tr) != 2:
                    continue
                for u0, u1 in (tr, tr[::-1]):
                    kit = find_boolean_kit(alg, u0, u1, budget)
                    if kit is not None:
                        return (i, j), kit
    return None


def _has_lattice_pair(alg: FiniteAlgebra) -> bool:
    from .core_algebra import bounded_term_search
    for a in range(alg.size):
        for b in range(alg.size):
            if a == b:
                continue
            if (bounded_term_search(alg, 2, [a, a, a, b], 2000, domain=(a, b)) is not None
                    and bounded_term_search(alg, 2, [a, b, b, b], 2000, domain=(a, b))
                    is not None):
                return True
    return False


def classify_cm(alg: FiniteAlgebra, budget: int = 200000) -> ClassLabel:
    """Decision tree for an algebra assumed to lie in a congruence modular variety."""
    lat = congruence_lattice(alg)
    ts, labels = _types(alg, lat, budget)
    ev = [f"typeset = {sorted(labels)}"]
    if "unclassified" in labels:
        bad = [k for k, v in ts.items() if v.type_label == "unclassified"]
        return ClassLabel(UNKNOWN, evidence=ev + [f"unclassified covers {bad}"],
                          reason="unclassified prime quotient within budget")
    if "5" in labels or "1" in labels:
        t = "5" if "5" in labels else "1"
        return ClassLabel(UNKNOWN, evidence=ev + [f"type {t} cannot occur in a congruence modular variety"],
                          reason=f"type {t}")
    if "3" in labels:
        found = _boolean_witness(alg, lat, ts, budget)
        if found is None:
            return ClassLabel(UNKNOWN, evidence=ev, reason="type 3 cover without a verified Boolean kit")
        cover, kit = found
        return ClassLabel(PPOLY, {"cover": cover}, ev + [
            f"Boolean trace {{{kit.points['u0']}, {kit.points['u1']}}} on cover {cover}",
            *(f"{k} = {w}" for k, w in kit.witnesses.items())])
    if labels <= {"2"}:
        if is_nilpotent(alg, lat):
            return ClassLabel(CC0, evidence=ev + ["lower central series reaches 0"])
        return ClassLabel(NC2, evidence=ev + ["every prime quotient is affine (solvable)"])
    if labels <= {"4"}:
        factors = ordered_factors(alg)
        if factors:
            ev2 = ev + [f"ordered factor sizes {[F.size for _, F, _, _ in factors]}"]
            if _has_lattice_pair(alg):
                return ClassLabel(MULTI, evidence=ev2 + ["2-element lattice pair found (monotone lower bound)"])
            return ClassLabel(SUB_MULTI, evidence=ev2)
    # item 5: a subdirectly irreducible quotient of type {4} that is not totally ordered
    for i, theta in enumerate(lat.members):
        if i == lat.one:
            continue
        Q, _ = quotient_algebra(alg, theta)
        upper = [j for j in range(len(lat)) if lat.leq[i, j]]
        qlabels = {ts[(a, b)].type_label for (a, b) in ts if a in upper and b in upper}
        if qlabels != {"4"}:
            continue
        si = len([j for j in lat.upper_covers(i)]) == 1
        if si and Q.size <= 8 and totally_ordered_check(Q) is None:
            return ClassLabel(PPOLY, {"alpha": theta.to_list()},
                              ev + [f"quotient by {theta.to_list()} is type 4, subdirectly irreducible, not ordered"])
    # item 6: join irreducibles beta < alpha with types 4 (below) and 2 (above)
    jis = [i for i in range(len(lat)) if len(lat.lower_covers(i)) == 1]
    for a in jis:
        for b in jis:
            if a != b and lat.leq[b, a] and _cover_type(ts, lat, b) == "4" and _cover_type(ts, lat, a) == "2":
                return ClassLabel(PPOLY, {"type4": lat.members[b].to_list(), "type2": lat.members[a].to_list()},
                                  ev + ["join irreducible type 4 below join irreducible type 2"])
    if labels <= {"2", "4"}:
        from .passes import type_chain
        chain = type_chain(alg, "2")
        beta = chain[-1]
        Q, _ = quotient_algebra(alg, beta)
        if ordered_factors(Q):
            return ClassLabel(NC2_MONO, {"beta": beta.to_list()},
                              ev + [f"type 2 chain up to {beta.to_list()}, ordered quotient of size {Q.size}"])
    return ClassLabel(UNKNOWN, evidence=ev, reason="no branch of the decision tree applies")


def is_simple(alg: FiniteAlgebra) -> bool:
    return len(congruence_lattice(alg)) == 2


def classify_simple(alg: FiniteAlgebra, budget: int = 200000) -> ClassLabel:
    lat = congruence_lattice(alg)
    if len(lat) != 2:
        raise AlgebraError("classify_simple needs a simple algebra (congruences {0, 1})")
    ts = typeset(alg, lat, budget)
    pq = ts[(0, 1)]
    t = pq.type_label
    ev = [f"type {t}", pq.evidence] if pq.evidence else [f"type {t}"]
    if t == "1":
        c = max((essential_arity(alg, o.name) for o in alg.operations), default=0)
        return ClassLabel(BOUND, {"max_basic_essential_arity": c}, ev)
    if t == "2":
        return ClassLabel(BOUND_MOD, {"p": pq.characteristic}, ev)
    if t == "3":
        return ClassLabel(PPOLY, {}, ev)
    if t == "4":
        if alg.size <= 8 and totally_ordered_check(alg) is not None:
            kind = MULTI if _has_lattice_pair(alg) else MULTI_BRACKET
            return ClassLabel(kind, {}, ev + ["totally ordered"])
        return ClassLabel(PPOLY, {}, ev + ["not totally ordered"])
    if t == "5":
        return ClassLabel(UNKNOWN, {}, ev, reason="type 5")
    return ClassLabel(UNKNOWN, {}, ev, reason="unclassified type within budget")


# ----------------------------------------------------------------- equivalence oracle

@dataclass
class Verdict:
    equal: bool
    arity: int
    counterexample: int | None = None

    @property
    def bits(self):
        if self.counterexample is None:
            return None
        return "".join(str(self.counterexample >> j & 1) for j in range(self.arity))

    def __str__(self):
        return "equal" if self.equal else f"differs at input {self.bits}"


def exhaustive_equiv(x, y, arity: int | None = None, block: int = 1 << 14) -> Verdict:
    """Compare truth tables over all 2^n inputs, in blocks; reports the first difference."""
    n = x.arity if arity is None else arity
    if x.arity != n or y.arity != n:
        raise AlgebraError("arity mismatch")
    if n > max_arity():
        raise AlgebraError(f"arity {n} exceeds the sweep cap {max_arity()}")
    bits = all_inputs(n)
    for start in range(0, len(bits), block):
        chunk = bits[start:start + block]
        a = np.asarray(x.eval_batch(chunk), dtype=bool)
        b = np.asarray(y.eval_batch(chunk), dtype=bool)
        diff = np.nonzero(a != b)[0]
        if len(diff):
            return Verdict(False, n, start + int(diff[0]))
    return Verdict(True, n)


# ----------------------------------------------------------------- reports

def report(run: dict) -> tuple[str, str]:
    """(text, line-delimited JSON) for a run with optional classification and checks."""
    lines, records = [], []
    cls = run.get("classification")
    if cls is not None:
        lines.append(f"classification: {cls.text}")
        lines += [f"  evidence: {e}" for e in cls.evidence]
        records.append({"kind": "classification", **cls.to_dict()})
    sizes = run.get("sizes", [])
    if sizes:
        lines.append("sizes:")
        for name, rep in sizes:
            lines.append(f"  {name}: edges={rep.edges} gates={rep.gate_size_sum} total={rep.total}")
            records.append({"kind": "size", "name": name, **rep.as_dict()})
    checks = run.get("checks", [])
    if checks:
        lines.append("checks:")
    for name, verdict in checks:
        lines.append(f"  {name}: {verdict}")
        records.append({"kind": "check", "name": name, "equal": verdict.equal, "counterexample": verdict.bits})
    return "\n".join(lines), "\n".join(json.dumps(r, ensure_ascii=False) for r in records)
