"""OpenQASM 2.0 subset: one register, u1/u2/u3/cx only."""

from __future__ import annotations

import ast
import math
import operator
import re

from .circuit import Circuit, Gate, InvalidCircuitError

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'

_DENOMS = (1, 2, 3, 4, 6, 8, 16)


def format_angle(x: float) -> str:
    if x == 0.0:
        return "0"
    for d in _DENOMS:
        k = x * d / math.pi
        kr = round(k)
        if kr != 0 and abs(k - kr) < 1e-12:
            num = "pi" if abs(kr) == 1 else f"{abs(kr)}*pi"
            sign = "-" if kr < 0 else ""
            return f"{sign}{num}" if d == 1 else f"{sign}{num}/{d}"
    return repr(float(x))


def export_qasm(circuit: Circuit, register: str = "q") -> str:
    if not circuit.is_lowered():
        bad = sorted({g.name for g in circuit.gates if not g.is_primitive})
        raise InvalidCircuitError(f"circuit has unlowered macro gates: {bad}")
    lines = [HEADER + f"qreg {register}[{circuit.n_qubits}];"]
    for g in circuit.gates:
        args = ",".join(f"{register}[{q}]" for q in g.qubits)
        if g.params:
            lines.append(f"{g.name}({','.join(format_angle(p) for p in g.params)}) {args};")
        else:
            lines.append(f"{g.name} {args};")
    return "\n".join(lines) + "\n"


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def eval_angle(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported angle expression {text!r}")

    return ev(ast.parse(text.strip(), mode="eval"))


_STMT = re.compile(r"^(?P<name>[a-z0-9]+)\s*(\((?P<params>[^)]*)\))?\s+(?P<args>.+)$")
_QARG = re.compile(r"^(?P<reg>\w+)\[(?P<idx>\d+)\]$")


def parse_qasm(text: str) -> Circuit:
    """Parse the subset written by :func:`export_qasm`."""
    circuit = None
    reg = None
    for raw in text.split(";"):
        stmt = raw.split("//")[0].strip()
        if not stmt or stmt.startswith("OPENQASM") or stmt.startswith("include"):
            continue
        if stmt.startswith("qreg"):
            m = re.match(r"qreg\s+(\w+)\[(\d+)\]", stmt)
            if not m or circuit is not None:
                raise ValueError(f"bad register declaration {stmt!r}")
            reg, circuit = m.group(1), Circuit(int(m.group(2)))
            continue
        if stmt.startswith(("creg", "barrier", "measure")):
            continue
        m = _STMT.match(stmt)
        if not m or circuit is None:
            raise ValueError(f"cannot parse statement {stmt!r}")
        qubits = []
        for a in m.group("args").split(","):
            qm = _QARG.match(a.strip())
            if not qm or qm.group("reg") != reg:
                raise ValueError(f"bad qubit argument {a!r}")
            qubits.append(int(qm.group("idx")))
        params = ()
        if m.group("params") is not None and m.group("params").strip():
            params = tuple(eval_angle(p) for p in m.group("params").split(","))
        circuit.append(Gate(m.group("name"), tuple(qubits), params))
    if circuit is None:
        raise ValueError("no qreg declaration found")
    return circuit
