"""Interchange formats, circuit metrics and random problem generation.

UMAT binary layout (little endian throughout):

    bytes 0..3   magic "UMAT"
    byte  4      format version, 0x01
    byte  5      n_qubits
    then         4^n float64 pairs (re, im), matrix entries in
                 column-major order

A 1-qubit file is therefore 4 + 1 + 1 + 4*16 = 70 bytes.

QASM: circuits export as OPENQASM 2.0 over {u3, cx} with angles printed to
17 significant digits and the global phase recorded in a comment; import
additionally accepts u, cz, h, x, ry, rz, s and sdg, with numeric angle
expressions over ``pi``, ``+ - * /`` and parentheses.
"""

from __future__ import annotations

import ast
import math
import re as _re
import struct
from dataclasses import dataclass

import numpy as np

from .gates import Circuit, Gate, GateKind
from .simulator import CostReport, Unitary

UMAT_MAGIC = b"UMAT"
UMAT_VERSION = 1


class UnitaryFormatError(ValueError):
    """Base class for UMAT reading problems."""


class BadMagicError(UnitaryFormatError):
    pass


class TruncatedFileError(UnitaryFormatError):
    pass


class NotUnitaryError(UnitaryFormatError):
    pass


def write_unitary(u: Unitary, path) -> None:
    """Serialize a unitary to a UMAT file."""
    with open(path, "wb") as fh:
        fh.write(UMAT_MAGIC)
        fh.write(struct.pack("<BB", UMAT_VERSION, u.n_qubits))
        entries = np.asfortranarray(u.data).ravel(order="F")
        buf = np.empty(2 * entries.size, dtype="<f8")
        buf[0::2] = entries.real
        buf[1::2] = entries.imag
        fh.write(buf.tobytes())


def read_unitary(path) -> Unitary:
    """Read and validate a UMAT file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != UMAT_MAGIC:
        raise BadMagicError(f"{path}: not a UMAT file (bad magic)")
    if len(blob) < 6:
        raise TruncatedFileError(f"{path}: header truncated")
    version, n = struct.unpack("<BB", blob[4:6])
    if version != UMAT_VERSION:
        raise UnitaryFormatError(f"{path}: unsupported version {version}")
    if n < 1:
        raise UnitaryFormatError(f"{path}: bad qubit count {n}")
    d = 1 << n
    want = 6 + d * d * 16
    if len(blob) != want:
        raise TruncatedFileError(
            f"{path}: expected {want} bytes for n={n}, found {len(blob)}"
        )
    raw = np.frombuffer(blob, dtype="<f8", offset=6)
    data = (raw[0::2] + 1j * raw[1::2]).reshape((d, d), order="F")
    try:
        return Unitary(data)
    except ValueError as exc:
        raise NotUnitaryError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# metrics


def cx_count(circuit: Circuit) -> int:
    return sum(1 for g in circuit.gates if g.kind is GateKind.CX)


def depth(circuit: Circuit) -> int:
    """Wire-parallel depth: each gate lands at 1 + max depth of its wires."""
    front = [0] * circuit.n_qubits
    for g in circuit.gates:
        level = 1 + max(front[w] for w in g.wires)
        for w in g.wires:
            front[w] = level
    return max(front, default=0)


@dataclass
class MetricsReport:
    n_qubits: int
    gate_total: int
    cx_count: int
    depth: int
    f: float
    c_hst: float
    f_avg: float
    f_frob: float

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "gate_total": self.gate_total,
            "cx_count": self.cx_count,
            "depth": self.depth,
            "f": self.f,
            "c_hst": self.c_hst,
            "f_avg": self.f_avg,
            "f_frob": self.f_frob,
        }


def metrics_report(circuit: Circuit, cost: CostReport) -> MetricsReport:
    """Combine circuit-shape metrics with an evaluated cost."""
    return MetricsReport(
        n_qubits=circuit.n_qubits,
        gate_total=len(circuit.gates),
        cx_count=cx_count(circuit),
        depth=depth(circuit),
        f=cost.f,
        c_hst=cost.c_hst,
        f_avg=cost.f_avg,
        f_frob=cost.f_frob,
    )


# ---------------------------------------------------------------------------
# random problems


def haar_random_unitary(n_qubits: int, seed) -> Unitary:
    """Haar-distributed random unitary (QR of a complex Ginibre matrix).

    The QR phase ambiguity is fixed by making R's diagonal real positive,
    which makes the distribution exactly Haar and the output a pure
    function of the seed.
    """
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    rng = np.random.default_rng(seed)
    d = 1 << n_qubits
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return Unitary(q, validate=False)


# ---------------------------------------------------------------------------
# OPENQASM 2.0 subset


class QasmError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _format_angle(x: float) -> str:
    # +0.0 so that -0.0 prints as "0" and the text round-trips byte-stably
    return f"{x + 0.0:.17g}"


def export_qasm(circuit: Circuit, params, path=None) -> str:
    """Write a finalized {U3, CX} circuit as OPENQASM 2.0; returns the text."""
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"// global_phase: {_format_angle(circuit.global_phase)}",
        f"qreg q[{circuit.n_qubits}];",
    ]
    for g in circuit.gates:
        if g.kind is GateKind.U3:
            t, p, l = (params[s] for s in g.param_slots)
            lines.append(
                f"u3({_format_angle(t)},{_format_angle(p)},{_format_angle(l)}) "
                f"q[{g.target}];"
            )
        elif g.kind is GateKind.CX:
            lines.append(f"cx q[{g.control}],q[{g.target}];")
        else:
            raise ValueError(
                f"export expects a finalized {{u3, cx}} circuit, found {g.kind.value}"
            )
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


_ALLOWED_AST = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.USub, ast.UAdd,
)


def _eval_angle(text: str, line: int) -> float:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise QasmError(f"bad angle expression {text!r}", line) from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_AST):
            raise QasmError(f"unsupported angle syntax {text!r}", line)
        if isinstance(node, ast.Name) and node.id != "pi":
            raise QasmError(f"unknown symbol {node.id!r} in angle", line)
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise QasmError(f"bad literal in angle {text!r}", line)
    try:
        return float(eval(compile(tree, "<angle>", "eval"), {"pi": math.pi}))
    except ZeroDivisionError:
        raise QasmError(f"division by zero in angle {text!r}", line) from None


# args capture is greedy so parenthesized sub-expressions survive
_GATE_RE = _re.compile(
    r"^(?P<name>[a-z][a-z0-9]*)\s*(?:\((?P<args>.*)\))?\s*(?P<operands>[^;]+);$"
)
_OPERAND_RE = _re.compile(r"^q\[(\d+)\]$")
_PHASE_RE = _re.compile(r"^//\s*global_phase:\s*(?P<value>\S+)\s*$")

#: importable gate names -> (kind, n_angles, n_operands)
_IMPORTS = {
    "u3": (GateKind.U3, 3, 1),
    "u": (GateKind.U3, 3, 1),
    "cx": (GateKind.CX, 0, 2),
    "cz": (GateKind.CZ, 0, 2),
    "h": (GateKind.H, 0, 1),
    "x": (None, 0, 1),  # becomes u3(pi, 0, pi)
    "ry": (GateKind.RY, 1, 1),
    "rz": (None, 1, 1),  # becomes phase(a) with global phase -a/2
    "s": (None, 0, 1),  # phase(pi/2)
    "sdg": (None, 0, 1),  # phase(-pi/2)
}


def import_qasm(path_or_text) -> tuple[Circuit, np.ndarray]:
    """Parse the supported OPENQASM 2.0 subset into a circuit and parameters.

    Accepts a path or raw text (text is detected by an OPENQASM header).
    """
    text = str(path_or_text)
    if not text.lstrip().startswith(("OPENQASM", "//")):
        with open(path_or_text) as fh:
            text = fh.read()

    n_qubits = None
    global_phase = 0.0
    gates: list[Gate] = []
    values: list[float] = []
    saw_header = False

    def add_gate(kind, target, control, angles):
        first = len(values)
        values.extend(angles)
        slots = tuple(range(first, first + len(angles)))
        gates.append(Gate(kind, target, control=control, param_slots=slots))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _PHASE_RE.match(line)
        if m:
            global_phase = _eval_angle(m.group("value"), lineno)
            continue
        if line.startswith("//"):
            continue
        if line.startswith("OPENQASM"):
            saw_header = True
            continue
        if line.startswith("include"):
            continue
        m = _re.match(r"^qreg\s+q\[(\d+)\]\s*;$", line)
        if m:
            if n_qubits is not None:
                raise QasmError("multiple qreg declarations", lineno)
            n_qubits = int(m.group(1))
            if n_qubits < 1:
                raise QasmError("empty register", lineno)
            continue
        if line.startswith(("creg", "barrier")):
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise QasmError(f"cannot parse {line!r}", lineno)
        name = m.group("name")
        if name not in _IMPORTS:
            raise QasmError(f"unsupported gate {name!r}", lineno)
        if n_qubits is None:
            raise QasmError("gate before qreg declaration", lineno)
        kind, n_angles, n_operands = _IMPORTS[name]
        args = m.group("args")
        angles = []
        if args is not None:
            angles = [_eval_angle(a, lineno) for a in args.split(",") if a.strip()]
        if len(angles) != n_angles:
            raise QasmError(
                f"{name} takes {n_angles} angle(s), got {len(angles)}", lineno
            )
        operands = []
        for op in m.group("operands").split(","):
            om = _OPERAND_RE.match(op.strip())
            if not om:
                raise QasmError(f"bad operand {op.strip()!r}", lineno)
            idx = int(om.group(1))
            if idx >= n_qubits:
                raise QasmError(f"qubit q[{idx}] outside qreg of size {n_qubits}", lineno)
            operands.append(idx)
        if len(operands) != n_operands or len(set(operands)) != len(operands):
            raise QasmError(f"{name} takes {n_operands} distinct operand(s)", lineno)

        if name == "x":
            add_gate(GateKind.U3, operands[0], None, [math.pi, 0.0, math.pi])
        elif name == "rz":
            global_phase -= 0.5 * angles[0]
            add_gate(GateKind.PHASE, operands[0], None, [angles[0]])
        elif name == "s":
            add_gate(GateKind.PHASE, operands[0], None, [0.5 * math.pi])
        elif name == "sdg":
            add_gate(GateKind.PHASE, operands[0], None, [-0.5 * math.pi])
        elif n_operands == 2:
            add_gate(kind, operands[1], operands[0], angles)
        else:
            add_gate(kind, operands[0], None, angles)

    if not saw_header:
        raise QasmError("missing OPENQASM header")
    if n_qubits is None:
        raise QasmError("missing qreg declaration")
    circuit = Circuit(n_qubits, gates, len(values), global_phase)
    circuit.validate()
    return circuit, np.asarray(values, dtype=np.float64)
