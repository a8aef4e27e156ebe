"""Circuit IR: gates, circuits, the dependency DAG and an OpenQASM 2.0 subset.

Qubit indices are logical until routing; the same types carry physical indices
afterwards.
"""
from __future__ import annotations

import ast
import heapq
import math
import operator
import re
from dataclasses import dataclass, field, replace
from enum import Enum


class GateKind(Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CX = "cx"
    CZ = "cz"
    SWAP = "swap"
    MEASURE = "measure"
    BARRIER = "barrier"

    @property
    def is_rotation(self) -> bool:
        return self in _ROTATIONS

    @property
    def is_two_qubit(self) -> bool:
        return self in _TWO_QUBIT

    @property
    def is_directive(self) -> bool:
        """MEASURE and BARRIER: carried through routing, never routed."""
        return self in (GateKind.MEASURE, GateKind.BARRIER)


_ROTATIONS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})
_TWO_QUBIT = frozenset({GateKind.CX, GateKind.CZ, GateKind.SWAP})


class QasmError(ValueError):
    """Raised for unparsable or unsupported OpenQASM input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind.name} has repeated qubits {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if self.kind is GateKind.BARRIER:
            arity_ok = len(self.qubits) >= 1
        else:
            arity_ok = len(self.qubits) == (2 if self.kind.is_two_qubit else 1)
        if not arity_ok:
            raise ValueError(f"{self.kind.name} cannot act on {len(self.qubits)} qubits")
        if len(self.params) != (1 if self.kind.is_rotation else 0):
            raise ValueError(f"{self.kind.name} takes {int(self.kind.is_rotation)} angle(s)")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind.is_two_qubit

    def on(self, *qubits: int) -> "Gate":
        """Same gate acting on different qubits (e.g. logical -> physical)."""
        return replace(self, qubits=tuple(qubits))

    def __str__(self) -> str:
        args = f"({', '.join(f'{p:g}' for p in self.params)})" if self.params else ""
        return f"{self.kind.value}{args} {','.join(map(str, self.qubits))}"


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    name: str = "circuit"

    def __post_init__(self):
        gates = tuple(
            g if g.index == i else replace(g, index=i) for i, g in enumerate(self.gates)
        )
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if max(g.qubits) >= self.num_qubits:
                raise ValueError(
                    f"gate {g} uses qubit {max(g.qubits)} but circuit has {self.num_qubits}"
                )

    def __len__(self) -> int:
        return len(self.gates)

    def two_qubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.is_two_qubit]

    def count_two_qubit(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    def count_ops(self, include_directives: bool = False) -> int:
        return sum(1 for g in self.gates if include_directives or not g.kind.is_directive)

    def active_qubits(self) -> list[int]:
        return sorted({q for g in self.gates for q in g.qubits})


@dataclass
class CircuitDag:
    """Gate dependency DAG: an edge joins consecutive gates on a shared qubit."""

    nodes: tuple[Gate, ...]
    preds: list[list[int]] = field(default_factory=list)
    succs: list[list[int]] = field(default_factory=list)
    num_qubits: int = 0

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, vs in enumerate(self.succs) for v in vs]

    @property
    def in_degree(self) -> list[int]:
        return [len(p) for p in self.preds]

    def __len__(self) -> int:
        return len(self.nodes)

    def topological_order(self) -> list[int]:
        """Kahn's algorithm; ties go to the lowest program index."""
        indeg = self.in_degree
        heap = [i for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            u = heapq.heappop(heap)
            order.append(u)
            for v in self.succs[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(heap, v)
        if len(order) != len(self.nodes):
            raise ValueError("dependency graph has a cycle")
        return order


def build_dag(circuit: Circuit) -> CircuitDag:
    preds: list[list[int]] = [[] for _ in circuit.gates]
    succs: list[list[int]] = [[] for _ in circuit.gates]
    last: dict[int, int] = {}
    for g in circuit.gates:
        for p in sorted({last[q] for q in g.qubits if q in last}):
            preds[g.index].append(p)
            succs[p].append(g.index)
        for q in g.qubits:
            last[q] = g.index
    return CircuitDag(circuit.gates, preds, succs, circuit.num_qubits)


def depth(circuit: Circuit, include_directives: bool = False) -> int:
    """Longest dependency chain, counted in gates.

    MEASURE and BARRIER are skipped unless ``include_directives`` is set.
    """
    level = [0] * circuit.num_qubits
    for g in circuit.gates:
        if g.kind.is_directive and not include_directives:
            continue
        top = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = top
    return max(level, default=0)


def reverse_two_qubit_order(dag: CircuitDag) -> list[Gate]:
    """Two-qubit gates in reverse topological order (last executed first)."""
    order = dag.topological_order()
    return [dag.nodes[i] for i in reversed(order) if dag.nodes[i].is_two_qubit]


def decompose_swap(gate: Gate) -> list[Gate]:
    if gate.kind is not GateKind.SWAP:
        raise ValueError(f"expected SWAP, got {gate.kind.name}")
    a, b = gate.qubits
    return [Gate(GateKind.CX, (a, b)), Gate(GateKind.CX, (b, a)), Gate(GateKind.CX, (a, b))]


# --- OpenQASM 2.0 subset -------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _eval_angle(text: str, line: int) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise QasmError(f"unsupported angle expression {text!r}", line)

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError:
        raise QasmError(f"bad angle expression {text!r}", line) from None
    except ZeroDivisionError:
        raise QasmError(f"division by zero in {text!r}", line) from None


_REG_RE = re.compile(r"^(qreg|creg)\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_STMT_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*(.*)$", re.S)
_ARG_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\[\s*(\d+)\s*\])?$")


def _statements(source: str):
    """Yield (statement, line) pairs; comments stripped, split on ';'."""
    buf, start = [], None
    for lineno, raw in enumerate(source.splitlines(), 1):
        text = raw.split("//", 1)[0]
        while text:
            head, sep, text = text.partition(";")
            if head.strip() and start is None:
                start = lineno
            buf.append(head)
            if sep:
                stmt = " ".join(buf).strip()
                if stmt:
                    yield stmt, start if start is not None else lineno
                buf, start = [], None
            else:
                break
    leftover = " ".join(buf).strip()
    if leftover:
        raise QasmError("missing ';'", start)


def parse_qasm(source: str, name: str = "circuit") -> Circuit:
    qreg: tuple[str, int] | None = None
    cregs: dict[str, int] = {}
    gates: list[Gate] = []

    def qubit_args(text: str, line: int) -> list[list[int]]:
        out = []
        for arg in (a.strip() for a in text.split(",")):
            m = _ARG_RE.match(arg)
            if not m:
                raise QasmError(f"bad qubit argument {arg!r}", line)
            if qreg is None:
                raise QasmError("gate before qreg declaration", line)
            reg, idx = m.group(1), m.group(2)
            if reg != qreg[0]:
                raise QasmError(f"unknown quantum register {reg!r}", line)
            if idx is None:
                out.append(list(range(qreg[1])))
            else:
                if int(idx) >= qreg[1]:
                    raise QasmError(
                        f"qubit index {idx} out of range for {reg}[{qreg[1]}]", line
                    )
                out.append([int(idx)])
        return out

    for stmt, line in _statements(source):
        low = stmt.lower()
        if low.startswith("openqasm"):
            if stmt.split()[1:] != ["2.0"]:
                raise QasmError(f"unsupported version in {stmt!r}", line)
            continue
        if low.startswith("include"):
            continue
        m = _REG_RE.match(stmt)
        if m:
            kind, reg, size = m.group(1), m.group(2), int(m.group(3))
            if kind == "qreg":
                if qreg is not None:
                    raise QasmError("only one qreg is supported", line)
                qreg = (reg, size)
            else:
                cregs[reg] = size
            continue
        if low.startswith("measure"):
            body = stmt[len("measure"):]
            if "->" not in body:
                raise QasmError("measure needs '->' target", line)
            src, dst = body.split("->", 1)
            dm = _ARG_RE.match(dst.strip())
            if not dm or dm.group(1) not in cregs:
                raise QasmError(f"unknown classical register in {stmt!r}", line)
            (qs,) = qubit_args(src, line)
            for q in qs:
                gates.append(Gate(GateKind.MEASURE, (q,)))
            continue
        m = _STMT_RE.match(stmt)
        if not m:
            raise QasmError(f"syntax error in {stmt!r}", line)
        op, params, args = m.group(1).lower(), m.group(2), m.group(3)
        try:
            kind = GateKind(op)
        except ValueError:
            raise QasmError(f"unsupported gate {op!r}", line) from None
        if kind is GateKind.MEASURE:
            raise QasmError("measure syntax error", line)
        angles = [] if params is None else [_eval_angle(p, line) for p in params.split(",")]
        if len(angles) != (1 if kind.is_rotation else 0):
            raise QasmError(f"{op} expects {int(kind.is_rotation)} parameter(s)", line)
        if not args.strip():
            raise QasmError(f"{op} has no qubit arguments", line)
        regs = qubit_args(args, line)
        if kind is GateKind.BARRIER:
            qs = sorted({q for r in regs for q in r})
            gates.append(Gate(kind, tuple(qs)))
            continue
        arity = 2 if kind.is_two_qubit else 1
        if len(regs) != arity:
            raise QasmError(f"{op} expects {arity} qubit argument(s)", line)
        width = max(len(r) for r in regs)
        if any(len(r) not in (1, width) for r in regs):
            raise QasmError("register size mismatch in broadcast", line)
        for i in range(width):
            qs = tuple(r[i] if len(r) > 1 else r[0] for r in regs)
            if len(set(qs)) != len(qs):
                raise QasmError(f"{op} applied to the same qubit twice", line)
            gates.append(Gate(kind, qs, tuple(angles)))

    if qreg is None:
        raise QasmError("no qreg declared")
    return Circuit(qreg[1], tuple(gates), name)


def to_qasm(circuit: Circuit) -> str:
    """Serialize to the same subset ``parse_qasm`` accepts; round-trips exactly."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    if any(g.kind is GateKind.MEASURE for g in circuit.gates):
        lines.append(f"creg c[{circuit.num_qubits}];")
    for g in circuit.gates:
        if g.kind is GateKind.MEASURE:
            lines.append(f"measure q[{g.qubits[0]}] -> c[{g.qubits[0]}];")
            continue
        head = g.kind.value
        if g.params:
            head += "(" + ",".join(repr(p) for p in g.params) + ")"
        lines.append(head + " " + ",".join(f"q[{q}]" for q in g.qubits) + ";")
    return "\n".join(lines) + "\n"


def load_qasm(path) -> Circuit:
    from pathlib import Path

    p = Path(path)
    return parse_qasm(p.read_text(), name=p.stem)
