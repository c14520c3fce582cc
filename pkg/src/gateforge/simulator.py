"""Double-precision reference backend.

Cost model: for a target unitary U and circuit unitary V (d = 2^n),

    f = (1/2) * ||V - U||_F^2 = d - Re Tr(V U†)

which the backend evaluates by streaming the circuit's gates column-wise
over U† and taking the trace of the result W = V U†.  Derived figures:

    c_hst  = 1 - |Tr(W)|^2 / d^2          (Hilbert-Schmidt test cost)
    f_avg  = 1 - d / (d+1) * c_hst        (average gate fidelity)
    f_frob = 1 - d/(d+1) + (d-f)^2 / (d (d+1))   (lower bound, <= f_avg)

Gradient: component i is -Re Tr(dV/dx_i U†), where dV/dx_i replaces the
gate owning slot i with its derivative kernel.  ``gradient`` evaluates all
components in one forward/backward sweep (prefix products stored, suffix
accumulated in transposed form); it equals the per-component definition via
``apply_circuit(deriv_index=i)`` to floating-point rounding.  Components
are independent and could be evaluated concurrently; this implementation
is single-threaded.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gates import Circuit, Gate, deriv_kernel_for, kernel_for

#: max allowed deviation of U† U from identity on ingestion
UNITARITY_ATOL = 1e-10


class Unitary:
    """A validated n-qubit unitary matrix (d = 2^n, n inferred from shape)."""

    __slots__ = ("n_qubits", "data")

    def __init__(self, data, validate: bool = True):
        m = np.array(data, dtype=np.complex128, order="F")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        d = m.shape[0]
        n = d.bit_length() - 1
        if d < 2 or 2**n != d:
            raise ValueError(f"dimension {d} is not a power of two >= 2")
        if validate:
            err = np.max(np.abs(m.conj().T @ m - np.eye(d)))
            if err > UNITARITY_ATOL:
                raise ValueError(
                    f"matrix is not unitary: max |U†U - I| = {err:.3e} "
                    f"(tolerance {UNITARITY_ATOL:.0e})"
                )
        self.n_qubits = n
        self.data = m

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def identity(cls, n_qubits: int) -> "Unitary":
        return cls(np.eye(2**n_qubits), validate=False)


@dataclass
class CostReport:
    """Frobenius cost and the fidelity figures derived from one trace."""

    f: float
    trace_re: float
    c_hst: float
    f_avg: float
    f_frob: float

    def to_dict(self) -> dict:
        return {
            "f": self.f,
            "trace_re": self.trace_re,
            "c_hst": self.c_hst,
            "f_avg": self.f_avg,
            "f_frob": self.f_frob,
        }


def report_from_trace(trace: complex, dim: int) -> CostReport:
    """Build a CostReport from the complex trace of W = V U†."""
    f = max(dim - trace.real, 0.0)
    c_hst = 1.0 - (trace.real * trace.real + trace.imag * trace.imag) / dim**2
    c_hst = min(max(c_hst, 0.0), 1.0)
    ratio = dim / (dim + 1.0)
    f_avg = 1.0 - ratio * c_hst
    f_frob = 1.0 - ratio + (dim - f) ** 2 / (dim * (dim + 1.0))
    return CostReport(f=f, trace_re=trace.real, c_hst=c_hst, f_avg=f_avg, f_frob=f_frob)


def _as_c_matrix(mat) -> np.ndarray:
    out = np.array(mat, dtype=np.complex128, order="C")
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {out.shape}")
    return out


def _apply(mat, gate: Gate, kernel, deriv: bool) -> None:
    kernels.apply_kernel_inplace(
        mat,
        gate.target,
        -1 if gate.control is None else gate.control,
        complex(kernel[0, 0]),
        complex(kernel[0, 1]),
        complex(kernel[1, 0]),
        complex(kernel[1, 1]),
        deriv,
    )


def apply_gate_columnwise(mat, gate: Gate, kernel, deriv: bool = False) -> np.ndarray:
    """Apply one 2x2 kernel to every column of ``mat``; returns a new matrix.

    In derivative mode a controlled gate zeroes the control-0 amplitudes
    instead of passing them through: that subspace does not depend on the
    gate's angle, so its contribution to the derivative is zero.
    """
    out = _as_c_matrix(mat)
    d = out.shape[0]
    if d & (d - 1) or d < (1 << (max(gate.wires) + 1)):
        raise ValueError(f"gate wires {gate.wires} do not fit dimension {d}")
    _apply(out, gate, np.asarray(kernel, dtype=np.complex128), deriv)
    return out


def apply_circuit(mat, circuit: Circuit, params, deriv_index: int | None = None) -> np.ndarray:
    """Stream every gate of ``circuit`` over ``mat`` column-wise.

    With ``deriv_index`` set, the unique gate owning that parameter slot
    uses its derivative kernel (and derivative control semantics) instead.
    The result includes the ``exp(1j*global_phase)`` scaling; the phase is
    parameter-independent, so this holds in derivative mode as well.
    """
    out = _as_c_matrix(mat)
    if out.shape[0] != 2**circuit.n_qubits:
        raise ValueError(
            f"matrix dimension {out.shape[0]} does not match n={circuit.n_qubits}"
        )
    dgate = dpos = None
    if deriv_index is not None:
        if not 0 <= deriv_index < circuit.param_count:
            raise ValueError(f"deriv_index {deriv_index} out of range")
        dgate, dpos = circuit.slot_owners()[deriv_index]
    for gi, g in enumerate(circuit.gates):
        if gi == dgate:
            _apply(out, g, deriv_kernel_for(g, params, dpos), deriv=True)
        else:
            _apply(out, g, kernel_for(g, params), deriv=False)
    if circuit.global_phase != 0.0:
        out *= cmath.exp(1j * circuit.global_phase)
    return out


def _check_shapes(u: Unitary, circuit: Circuit, params) -> np.ndarray:
    if u.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"unitary acts on {u.n_qubits} qubits, circuit on {circuit.n_qubits}"
        )
    p = np.asarray(params, dtype=np.float64)
    if p.shape != (circuit.param_count,):
        raise ValueError(
            f"expected {circuit.param_count} parameters, got shape {p.shape}"
        )
    return p


def _forward(u: Unitary, circuit: Circuit, params, keep_prefixes: bool):
    """Stream the circuit over U†; optionally keep every prefix product."""
    w = np.ascontiguousarray(u.data.conj().T)
    prefixes = []
    for g in circuit.gates:
        if keep_prefixes:
            prefixes.append(w)
            w = w.copy()
        _apply(w, g, kernel_for(g, params), deriv=False)
    return w, prefixes


def cost(u: Unitary, circuit: Circuit, params) -> CostReport:
    """Frobenius cost of the circuit against the target unitary."""
    p = _check_shapes(u, circuit, params)
    w, _ = _forward(u, circuit, p, keep_prefixes=False)
    trace = kernels.trace_compensated(w) * cmath.exp(1j * circuit.global_phase)
    return report_from_trace(trace, u.dim)


def _transposed_kernel_gate(g: Gate, params):
    k = kernel_for(g, params)
    return np.ascontiguousarray(k.T)


def cost_and_gradient(u: Unitary, circuit: Circuit, params):
    """Cost plus the full gradient in one forward/backward sweep.

    Backward pass: with prefix F_{k-1} and suffix T_k = G_M ... G_{k+1},
    component i owned by gate k is -Re Tr(T_k dG_k F_{k-1}).  The suffix is
    carried as A_k = T_k^T (updated by applying transposed kernels), so each
    trace is an elementwise dot.  Identical arithmetic to :func:`cost` on
    the forward side, so the returned report matches ``cost`` exactly.
    """
    p = _check_shapes(u, circuit, params)
    w, prefixes = _forward(u, circuit, p, keep_prefixes=True)
    phase = cmath.exp(1j * circuit.global_phase)
    report = report_from_trace(kernels.trace_compensated(w) * phase, u.dim)

    grad = np.zeros(circuit.param_count, dtype=np.float64)
    suffix_t = np.eye(u.dim, dtype=np.complex128)  # A_M = T_M^T = I
    for gi in range(len(circuit.gates) - 1, -1, -1):
        g = circuit.gates[gi]
        if g.param_slots:
            for pos, slot in enumerate(g.param_slots):
                x = prefixes[gi].copy()
                _apply(x, g, deriv_kernel_for(g, p, pos), deriv=True)
                grad[slot] = -(kernels.dot_trace(suffix_t, x) * phase).real
        if gi > 0:
            _apply(suffix_t, g, _transposed_kernel_gate(g, p), deriv=False)
    return report, grad


def gradient(u: Unitary, circuit: Circuit, params) -> np.ndarray:
    """Gradient of the Frobenius cost with respect to every parameter."""
    _, grad = cost_and_gradient(u, circuit, params)
    return grad
