"""Circuits over algebras, programs, and layered Boolean circuits.

Truth tables index inputs little-endian: entry i is the value on the input
with b_j = (i >> j) & 1.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .abp import AbpProcess, BabpGate
from .core_algebra import FiniteAlgebra, validate_algebra

DEFAULT_MAX_ARITY = 20


def max_arity() -> int:
    return int(os.environ.get("FINALG_MAX_ARITY", DEFAULT_MAX_ARITY))


class CircuitError(ValueError):
    pass


def all_inputs(n: int) -> np.ndarray:
    """Rows are all Boolean inputs of length n in truth-table order."""
    if n > max_arity():
        raise CircuitError(f"arity {n} exceeds cap {max_arity()}")
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int64)


def table_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    value = 0
    for i, b in enumerate(bits):
        value |= int(b) << i
    width = max(1, (len(bits) + 3) // 4)
    return format(value, f"0{width}x")


@dataclass
class SizeReport:
    edges: int
    gate_size_sum: int

    @property
    def total(self) -> int:
        return self.edges + self.gate_size_sum

    def as_dict(self):
        return {"edges": self.edges, "gate_size_sum": self.gate_size_sum, "total": self.total}


# ----------------------------------------------------------------- algebra circuits

class AlgebraCircuit:
    """Gates: ("var", i) | ("const", a) | ("op", name, (ids..)); ids refer to earlier gates."""

    def __init__(self, algebra: FiniteAlgebra, arity: int, gates=None, output: int | None = None):
        self.algebra = algebra
        self.arity = arity
        self.gates: list = []
        self._index: dict = {}
        for g in gates or []:
            self._append(g)
        self.output = output if output is not None else len(self.gates) - 1

    def _append(self, g) -> int:
        g = (g[0], g[1], tuple(g[2])) if g[0] == "op" else tuple(g)
        i = len(self.gates)
        kind = g[0]
        if kind == "var":
            if not 0 <= g[1] < self.arity:
                raise CircuitError("variable out of range")
        elif kind == "const":
            if not 0 <= g[1] < self.algebra.size:
                raise CircuitError("constant out of range")
        elif kind == "op":
            op = self.algebra.op(g[1])
            if len(g[2]) != op.arity:
                raise CircuitError(f"{g[1]} expects {op.arity} inputs")
            if any(not 0 <= j < i for j in g[2]):
                raise CircuitError("gate inputs must be earlier gates")
        else:
            raise CircuitError(f"unknown gate kind {kind}")
        self.gates.append(g)
        return i

    # hash-consing builders keep shared subterms shared
    def node(self, g) -> int:
        g = (g[0], g[1], tuple(g[2])) if g[0] == "op" else tuple(g)
        hit = self._index.get(g)
        if hit is not None:
            return hit
        i = self._append(g)
        self._index[g] = i
        return i

    def var(self, i):
        return self.node(("var", i))

    def const(self, a):
        return self.node(("const", a))

    def op(self, name, *ins):
        return self.node(("op", name, tuple(ins)))

    def __len__(self):
        return len(self.gates)

    def ancestors(self, out: int | None = None) -> list[int]:
        out = self.output if out is None else out
        seen = set()
        stack = [out]
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            if self.gates[g][0] == "op":
                stack.extend(self.gates[g][2])
        return sorted(seen)

    def eval_all(self, inputs: np.ndarray, upto: int | None = None) -> list:
        """Values of every gate (up to `upto`) on each row of inputs (elements)."""
        inputs = np.asarray(inputs, dtype=np.int64)
        N = inputs.shape[0]
        last = len(self.gates) - 1 if upto is None else upto
        vals: list = []
        for g in self.gates[:last + 1]:
            kind = g[0]
            if kind == "var":
                vals.append(inputs[:, g[1]])
            elif kind == "const":
                vals.append(np.full(N, g[1], dtype=np.int64))
            else:
                arr = self.algebra.array(g[1])
                if not g[2]:
                    vals.append(np.full(N, int(arr), dtype=np.int64))
                else:
                    vals.append(arr[tuple(vals[j] for j in g[2])])
        return vals

    def eval_batch(self, inputs: np.ndarray, out: int | None = None) -> np.ndarray:
        out = self.output if out is None else out
        inputs = np.asarray(inputs, dtype=np.int64)
        if inputs.ndim != 2 or inputs.shape[1] != self.arity:
            raise CircuitError(f"expected inputs of width {self.arity}")
        return self.eval_all(inputs, out)[out]

    def eval(self, args) -> int:
        if len(args) != self.arity:
            raise CircuitError("arity mismatch")
        for a in args:
            if not 0 <= a < self.algebra.size:
                raise CircuitError("argument out of range")
        return int(self.eval_batch(np.asarray(args)[None, :])[0])

    def size(self, out: int | None = None) -> SizeReport:
        anc = self.ancestors(out)
        edges = sum(len(self.gates[g][2]) for g in anc if self.gates[g][0] == "op")
        return SizeReport(edges, len(anc))

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            if g[0] == "op":
                gates.append({"kind": "op", "params": {"name": g[1]}, "inputs": list(g[2])})
            elif g[0] == "var":
                gates.append({"kind": "var", "params": {"index": g[1]}, "inputs": []})
            else:
                gates.append({"kind": "const", "params": {"value": g[1]}, "inputs": []})
        return {"arity": self.arity, "output": self.output, "gates": gates}

    @classmethod
    def from_dict(cls, alg: FiniteAlgebra, d: dict) -> "AlgebraCircuit":
        gates = []
        for g in d["gates"]:
            if g["kind"] == "op":
                gates.append(("op", g["params"]["name"], tuple(g["inputs"])))
            elif g["kind"] == "var":
                gates.append(("var", g["params"]["index"]))
            else:
                gates.append(("const", g["params"]["value"]))
        return cls(alg, d["arity"], gates, d["output"])


def eval_circuit(c: AlgebraCircuit, args) -> int:
    return c.eval(args)


@dataclass
class Program:
    """(circuit, iota, accepting); `output` selects a subcircuit without copying."""

    circuit: AlgebraCircuit
    iota: tuple
    accepting: frozenset
    output: int | None = None

    def __post_init__(self):
        self.iota = tuple(int(v) for v in self.iota)
        self.accepting = frozenset(int(a) for a in self.accepting)
        n = self.circuit.algebra.size
        if len(self.iota) != 2 or any(not 0 <= v < n for v in self.iota):
            raise CircuitError("iota must map {0,1} into the universe")
        if any(not 0 <= a < n for a in self.accepting):
            raise CircuitError("accepting set outside the universe")
        if self.output is None:
            self.output = self.circuit.output

    @property
    def arity(self) -> int:
        return self.circuit.arity

    @property
    def algebra(self) -> FiniteAlgebra:
        return self.circuit.algebra

    def values(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        iota = np.asarray(self.iota)
        return self.circuit.eval_batch(iota[bits], self.output)

    def eval_batch(self, bits: np.ndarray) -> np.ndarray:
        vals = self.values(bits)
        if not self.accepting:
            return np.zeros(len(vals), dtype=bool)
        return np.isin(vals, sorted(self.accepting))

    def size(self) -> SizeReport:
        return self.circuit.size(self.output)

    def to_dict(self) -> dict:
        return {"algebra": self.algebra.to_dict(), "circuit": self.circuit.to_dict(),
                "iota": list(self.iota), "accepting": sorted(self.accepting),
                "output": self.output}

    @classmethod
    def from_dict(cls, d: dict) -> "Program":
        alg = validate_algebra(d["algebra"])
        return cls(AlgebraCircuit.from_dict(alg, d["circuit"]), tuple(d["iota"]),
                   frozenset(d["accepting"]), d.get("output"))


def eval_program(p: Program, bits) -> bool:
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) != p.arity:
        raise CircuitError("arity mismatch")
    return bool(p.eval_batch(bits[None, :])[0])


# ----------------------------------------------------------------- layered circuits

GATE_KINDS = ("input", "const", "mod", "and", "or", "not", "bound", "babp", "prog")


@dataclass
class Gate:
    kind: str
    params: dict
    inputs: tuple


class LayeredCircuit:
    """DAG of Boolean gates.

    input(index) | const(value) | mod(m, accept) | and | or | not |
    bound(table over 2^k inputs, little-endian) | babp(BabpGate) | prog(Program)
    """

    def __init__(self, arity: int):
        self.arity = arity
        self.gates: list[Gate] = []
        self.output = -1
        self._index: dict = {}
        self._inputs = [self._add(Gate("input", {"index": i}, ())) for i in range(arity)]

    def _add(self, g: Gate) -> int:
        if g.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {g.kind}")
        i = len(self.gates)
        if any(not 0 <= j < i for j in g.inputs):
            raise CircuitError("gate inputs must be earlier gates")
        if g.kind == "not" and len(g.inputs) != 1:
            raise CircuitError("not gate takes one input")
        if g.kind == "bound" and len(g.params["table"]) != 1 << len(g.inputs):
            raise CircuitError("bound table size mismatch")
        if g.kind == "babp" and g.params["gate"].arity != len(g.inputs):
            raise CircuitError("babp arity mismatch")
        if g.kind == "prog" and g.params["program"].arity != len(g.inputs):
            raise CircuitError("prog arity mismatch")
        self.gates.append(g)
        self.output = i
        return i

    def _key(self, kind, params, inputs):
        if kind in ("babp", "prog"):
            return (kind, id(params.get("gate", params.get("program"))), inputs)
        return (kind, tuple(sorted((k, v if not isinstance(v, (set, frozenset, list)) else tuple(sorted(v)))
                                   for k, v in params.items())), inputs)

    def add(self, kind: str, inputs=(), **params) -> int:
        inputs = tuple(inputs)
        if kind in ("and", "or", "mod"):
            inputs = tuple(sorted(inputs))     # symmetric gates
        key = self._key(kind, params, inputs)
        hit = self._index.get(key)
        if hit is not None:
            return hit
        i = self._add(Gate(kind, params, inputs))
        self._index[key] = i
        return i

    def input(self, i) -> int:
        return self._inputs[i]

    def const(self, v) -> int:
        return self.add("const", (), value=int(bool(v)))

    def mod(self, m, accept, inputs) -> int:
        return self.add("mod", inputs, m=int(m), accept=frozenset(int(a) % m for a in accept))

    def and_(self, inputs) -> int:
        return self.add("and", inputs)

    def or_(self, inputs) -> int:
        return self.add("or", inputs)

    def not_(self, x) -> int:
        return self.add("not", (x,))

    def bound(self, table, inputs) -> int:
        return self.add("bound", inputs, table=tuple(int(bool(t)) for t in table))

    def babp(self, gate: BabpGate, inputs) -> int:
        return self.add("babp", inputs, gate=gate)

    def prog(self, program: Program, inputs) -> int:
        return self.add("prog", inputs, program=program)

    def set_output(self, g: int):
        self.output = g
        return self

    # ------------------------------------------------------------- evaluation
    def eval_batch(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        if bits.ndim != 2 or bits.shape[1] != self.arity:
            raise CircuitError(f"expected inputs of width {self.arity}")
        N = bits.shape[0]
        need = self.ancestors()
        vals: dict[int, np.ndarray] = {}
        prog_cache: dict = {}
        for i in need:
            g = self.gates[i]
            ins = [vals[j] for j in g.inputs]
            k = g.kind
            if k == "input":
                v = bits[:, g.params["index"]].astype(bool)
            elif k == "const":
                v = np.full(N, bool(g.params["value"]))
            elif k == "mod":
                s = np.zeros(N, dtype=np.int64)
                for x in ins:
                    s += x
                v = np.isin(s % g.params["m"], sorted(g.params["accept"])) if g.params["accept"] \
                    else np.zeros(N, bool)
            elif k == "and":
                v = np.ones(N, bool)
                for x in ins:
                    v = v & x
            elif k == "or":
                v = np.zeros(N, bool)
                for x in ins:
                    v = v | x
            elif k == "not":
                v = ~ins[0]
            elif k == "bound":
                idx = np.zeros(N, dtype=np.int64)
                for j, x in enumerate(ins):
                    idx |= x.astype(np.int64) << j
                v = np.asarray(g.params["table"], dtype=bool)[idx]
            elif k == "babp":
                mat = np.stack(ins, axis=1).astype(np.int64) if ins else np.zeros((N, 0), np.int64)
                v = g.params["gate"].eval_batch(mat)
            else:
                prog: Program = g.params["program"]
                key = (id(prog.circuit), g.inputs, prog.iota)
                allv = prog_cache.get(key)
                mat = np.stack(ins, axis=1).astype(np.int64) if ins else np.zeros((N, 0), np.int64)
                if allv is None:
                    iota = np.asarray(prog.iota)
                    allv = prog.circuit.eval_all(iota[mat])
                    prog_cache[key] = allv
                out = allv[prog.output]
                v = np.isin(out, sorted(prog.accepting)) if prog.accepting else np.zeros(N, bool)
            vals[i] = np.asarray(v, dtype=bool)
        return vals[self.output]

    def ancestors(self) -> list[int]:
        seen = set()
        stack = [self.output]
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            stack.extend(self.gates[g].inputs)
        return sorted(seen)

    def size(self) -> SizeReport:
        edges = 0
        gsum = 0
        for i in self.ancestors():
            g = self.gates[i]
            edges += len(g.inputs)
            if g.kind == "input":
                continue
            if g.kind == "babp":
                gsum += g.params["gate"].abp.size
            elif g.kind == "prog":
                gsum += len(g.params["program"].circuit.ancestors(g.params["program"].output))
            else:
                gsum += 1
        return SizeReport(edges, gsum)

    def kinds(self) -> set[str]:
        return {self.gates[i].kind for i in self.ancestors()} - {"input"}

    def max_fanin(self, kind: str) -> int:
        return max((len(self.gates[i].inputs) for i in self.ancestors()
                    if self.gates[i].kind == kind), default=0)

    def depth(self) -> int:
        d = {}
        for i in self.ancestors():
            g = self.gates[i]
            d[i] = 0 if g.kind in ("input", "const") else 1 + max((d[j] for j in g.inputs), default=0)
        return d[self.output]

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            params = {}
            for k, v in g.params.items():
                if isinstance(v, frozenset):
                    params[k] = sorted(v)
                elif isinstance(v, BabpGate):
                    params[k] = v.to_dict()
                elif isinstance(v, Program):
                    params[k] = v.to_dict()
                else:
                    params[k] = list(v) if isinstance(v, tuple) else v
            gates.append({"kind": g.kind, "params": params, "inputs": list(g.inputs)})
        return {"type": "layered", "arity": self.arity, "output": self.output, "gates": gates}

    @classmethod
    def from_dict(cls, d: dict) -> "LayeredCircuit":
        lc = cls(d["arity"])
        for g in d["gates"][d["arity"]:]:
            kind, p, ins = g["kind"], g["params"], tuple(g["inputs"])
            if kind == "const":
                lc._add(Gate(kind, {"value": p["value"]}, ins))
            elif kind == "mod":
                lc._add(Gate(kind, {"m": p["m"], "accept": frozenset(p["accept"])}, ins))
            elif kind == "bound":
                lc._add(Gate(kind, {"table": tuple(p["table"])}, ins))
            elif kind == "babp":
                lc._add(Gate(kind, {"gate": BabpGate.from_dict(p["gate"])}, ins))
            elif kind == "prog":
                lc._add(Gate(kind, {"program": Program.from_dict(p["program"])}, ins))
            else:
                lc._add(Gate(kind, {}, ins))
        lc.output = d["output"]
        return lc


def eval_layered(lc: LayeredCircuit, bits) -> bool:
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) != lc.arity:
        raise CircuitError("arity mismatch")
    return bool(lc.eval_batch(bits[None, :])[0])


def truth_table(x) -> np.ndarray:
    """Boolean vector of length 2^arity for a Program, LayeredCircuit, BabpGate or callable."""
    n = x.arity
    return np.asarray(x.eval_batch(all_inputs(n)), dtype=bool)


def size_of(x) -> SizeReport:
    if isinstance(x, BabpGate):
        return SizeReport(x.arity, x.abp.size)
    if isinstance(x, AbpProcess):
        return SizeReport(0, x.size)
    return x.size()


def load_evaluable(d: dict):
    """Program, LayeredCircuit or BabpGate from its JSON dict."""
    if d.get("type") == "layered":
        return LayeredCircuit.from_dict(d)
    if "abp" in d:
        return BabpGate.from_dict(d)
    return Program.from_dict(d)


def dump_evaluable(x) -> str:
    return json.dumps(x.to_dict())
