"""Gate model: kinds, 2x2 kernels, analytic derivative kernels, CRY rewrites.

Conventions used throughout the package:

* qubit 0 is the least significant bit of a basis-state index;
* gates listed first act first, so the matrix of a circuit ``[g1, g2, ..., gM]``
  is ``G_M ... G_2 G_1``;
* a circuit carries a real ``global_phase`` register and its unitary is
  ``exp(1j * global_phase)`` times the plain gate product;
* a controlled gate leaves amplitudes whose control bit is 0 untouched and
  applies its 2x2 kernel inside the control-1 subspace.

Parameter storage is split: a :class:`Gate` holds *slot indices* into a flat
parameter vector owned by the caller, never angle values.  ``param_slots``
has length 3 for U3, 1 for RY/CRY/PHASE and 0 otherwise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi


class GateKind(Enum):
    U3 = "u3"
    RY = "ry"
    CRY = "cry"
    CX = "cx"
    CZ = "cz"
    H = "h"
    PHASE = "phase"


#: number of parameter slots per kind
SLOT_COUNTS = {
    GateKind.U3: 3,
    GateKind.RY: 1,
    GateKind.CRY: 1,
    GateKind.PHASE: 1,
    GateKind.CX: 0,
    GateKind.CZ: 0,
    GateKind.H: 0,
}

#: kinds that require a control wire
CONTROLLED_KINDS = frozenset({GateKind.CRY, GateKind.CX, GateKind.CZ})


@dataclass(frozen=True)
class Gate:
    """A placed gate: kind, wires and the parameter slots it owns."""

    kind: GateKind
    target: int
    control: int | None = None
    param_slots: tuple[int, ...] = ()

    def __post_init__(self):
        want = SLOT_COUNTS[self.kind]
        if len(self.param_slots) != want:
            raise ValueError(
                f"{self.kind.value} takes {want} parameter slot(s), "
                f"got {len(self.param_slots)}"
            )
        if self.kind in CONTROLLED_KINDS:
            if self.control is None:
                raise ValueError(f"{self.kind.value} requires a control wire")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind.value} takes no control wire")

    def validate(self, n_qubits: int) -> None:
        if not 0 <= self.target < n_qubits:
            raise ValueError(f"target {self.target} out of range for n={n_qubits}")
        if self.control is not None and not 0 <= self.control < n_qubits:
            raise ValueError(f"control {self.control} out of range for n={n_qubits}")

    @property
    def wires(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)


@dataclass
class Circuit:
    """An ordered gate list over ``n_qubits`` wires plus a phase register.

    ``param_count`` is the length of the external parameter vector; every
    slot index below it is referenced by exactly one gate.
    """

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    param_count: int = 0
    global_phase: float = 0.0

    @classmethod
    def from_gates(cls, n_qubits, gates, global_phase=0.0) -> "Circuit":
        """Build a circuit, inferring ``param_count`` from the gates."""
        n_slots = sum(len(g.param_slots) for g in gates)
        circ = cls(n_qubits, list(gates), n_slots, global_phase)
        circ.validate()
        return circ

    def validate(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        seen = set()
        for g in self.gates:
            g.validate(self.n_qubits)
            for s in g.param_slots:
                if not 0 <= s < self.param_count:
                    raise ValueError(f"slot {s} outside param_count={self.param_count}")
                if s in seen:
                    raise ValueError(f"slot {s} referenced twice")
                seen.add(s)
        if len(seen) != self.param_count:
            raise ValueError("every parameter slot must be referenced by a gate")

    def slot_owners(self) -> list[tuple[int, int]]:
        """Map slot index -> (gate index, position within the gate)."""
        owners: list[tuple[int, int]] = [(-1, -1)] * self.param_count
        for gi, g in enumerate(self.gates):
            for pos, s in enumerate(g.param_slots):
                owners[s] = (gi, pos)
        return owners

    def without_gate(self, index: int) -> tuple["Circuit", np.ndarray]:
        """Drop one gate; renumber the surviving slots order-preservingly.

        Returns the new circuit and the indices (into the old parameter
        vector) that survive, so ``params[keep]`` is the new vector.
        """
        dropped = set(self.gates[index].param_slots)
        keep = np.array(
            [s for s in range(self.param_count) if s not in dropped], dtype=np.intp
        )
        remap = {old: new for new, old in enumerate(keep)}
        gates = [
            replace(g, param_slots=tuple(remap[s] for s in g.param_slots))
            for gi, g in enumerate(self.gates)
            if gi != index
        ]
        circ = Circuit(self.n_qubits, gates, len(keep), self.global_phase)
        circ.validate()
        return circ, keep


# ---------------------------------------------------------------------------
# 2x2 kernels


def _check_finite(*angles):
    for a in angles:
        if not math.isfinite(a):
            raise ValueError(f"non-finite gate parameter: {a!r}")


def u3_kernel(theta: float, phi: float, lam: float) -> np.ndarray:
    """General single-qubit rotation.

    ``[[cos(t/2), -e^{i lam} sin(t/2)], [e^{i phi} sin(t/2), e^{i(lam+phi)} cos(t/2)]]``
    """
    _check_finite(theta, phi, lam)
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    return np.array(
        [
            [c, -cmath.exp(1j * lam) * s],
            [cmath.exp(1j * phi) * s, cmath.exp(1j * (lam + phi)) * c],
        ],
        dtype=np.complex128,
    )


def u3_deriv_kernel(theta: float, phi: float, lam: float, which: str) -> np.ndarray:
    """Entry-wise partial derivative of :func:`u3_kernel`.

    Obtained by shifting the differentiated angle (theta by pi with a 1/2
    prefactor, phi or lam by pi/2) and zeroing the entries that do not
    depend on it.  The result is generally not unitary.
    """
    if which == "theta":
        return 0.5 * u3_kernel(theta + math.pi, phi, lam)
    if which == "phi":
        k = u3_kernel(theta, phi + 0.5 * math.pi, lam)
        k[0, 0] = 0.0
        k[0, 1] = 0.0
        return k
    if which == "lam":
        k = u3_kernel(theta, phi, lam + 0.5 * math.pi)
        k[0, 0] = 0.0
        k[1, 0] = 0.0
        return k
    raise ValueError(f"unknown u3 parameter {which!r}")


def cry_kernel(theta: float) -> np.ndarray:
    """Real rotation kernel ``[[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]``.

    Used by both RY and (inside the control-1 subspace) CRY.
    """
    _check_finite(theta)
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def cry_deriv_kernel(theta: float) -> np.ndarray:
    return 0.5 * cry_kernel(theta + math.pi)


def phase_kernel(theta: float) -> np.ndarray:
    _check_finite(theta)
    return np.array([[1.0, 0.0], [0.0, cmath.exp(1j * theta)]], dtype=np.complex128)


def phase_deriv_kernel(theta: float) -> np.ndarray:
    _check_finite(theta)
    return np.array([[0.0, 0.0], [0.0, 1j * cmath.exp(1j * theta)]], dtype=np.complex128)


_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)
_I2 = np.eye(2, dtype=np.complex128)
_P0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
_P1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128)


def _gate_angles(gate: Gate, params) -> tuple[float, ...]:
    return tuple(float(params[s]) for s in gate.param_slots)


def kernel_for(gate: Gate, params) -> np.ndarray:
    """The gate's 2x2 kernel at the angles taken from ``params``."""
    k = gate.kind
    if k is GateKind.U3:
        return u3_kernel(*_gate_angles(gate, params))
    if k in (GateKind.RY, GateKind.CRY):
        return cry_kernel(*_gate_angles(gate, params))
    if k is GateKind.PHASE:
        return phase_kernel(*_gate_angles(gate, params))
    if k is GateKind.CX:
        return _X.copy()
    if k is GateKind.CZ:
        return _Z.copy()
    if k is GateKind.H:
        return _H.copy()
    raise ValueError(f"unknown gate kind {k!r}")


_U3_WHICH = ("theta", "phi", "lam")


def deriv_kernel_for(gate: Gate, params, position: int) -> np.ndarray:
    """Derivative kernel with respect to the gate's slot at ``position``."""
    k = gate.kind
    if k is GateKind.U3:
        t, p, l = _gate_angles(gate, params)
        return u3_deriv_kernel(t, p, l, _U3_WHICH[position])
    if position != 0:
        raise ValueError(f"{k.value} has a single parameter")
    if k in (GateKind.RY, GateKind.CRY):
        return cry_deriv_kernel(*_gate_angles(gate, params))
    if k is GateKind.PHASE:
        return phase_deriv_kernel(*_gate_angles(gate, params))
    raise ValueError(f"{k.value} is not parameterized")


# ---------------------------------------------------------------------------
# Dense matrices (projector/Kronecker construction; the test oracle path,
# deliberately independent of the column-wise kernels)


def _place(ops: dict[int, np.ndarray], n_qubits: int) -> np.ndarray:
    """Kronecker product with the given 2x2 factors at their wires.

    Qubit 0 is the least significant bit, so it is the rightmost factor.
    """
    m = np.array([[1.0]], dtype=np.complex128)
    for q in range(n_qubits - 1, -1, -1):
        m = np.kron(m, ops.get(q, _I2))
    return m


def gate_matrix(gate: Gate, params, n_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of one gate."""
    gate.validate(n_qubits)
    k = kernel_for(gate, params)
    if gate.control is None:
        return _place({gate.target: k}, n_qubits)
    return _place({gate.control: _P0}, n_qubits) + _place(
        {gate.control: _P1, gate.target: k}, n_qubits
    )


def circuit_matrix(circuit: Circuit, params) -> np.ndarray:
    """Full matrix of a circuit, including the global phase.

    Plain left-multiplication product; used as a reference path and for
    small-fragment checks, not in the optimization hot loop.
    """
    m = np.eye(2**circuit.n_qubits, dtype=np.complex128)
    for g in circuit.gates:
        m = gate_matrix(g, params, circuit.n_qubits) @ m
    return cmath.exp(1j * circuit.global_phase) * m


# ---------------------------------------------------------------------------
# CRY rewrites


def reduce_angle(theta: float) -> float:
    """Reduce an angle mod 2*pi into (-pi, pi]."""
    r = math.remainder(theta, TWO_PI)
    # math.remainder returns in [-pi, pi]; fold the open edge
    if r == -math.pi:
        r = math.pi
    return r


def expand_cry(
    gate: Gate, theta: float, snap_epsilon: float = 1e-2
) -> tuple[list[Gate], list[float], float]:
    """Rewrite one CRY as a fragment over {RY, U3, H, CX, CZ, PHASE}.

    Returns ``(gates, fragment_params, phase_delta)``; the fragment's slot
    indices are local to ``fragment_params``.  The product of the fragment
    times ``exp(1j * phase_delta)`` equals the CRY at the *snapped* angle:

    * reduced angle within ``snap_epsilon`` of 0 -> empty fragment,
    * within ``snap_epsilon`` of +-pi -> a single-CZ form: basis changes on
      the target and one phase gate on the control,
    * otherwise -> ``[RY(theta/2) t, CX, RY(-theta/2) t, CX]``, exact at the
      unreduced angle.

    A CRY advances by a control-Z factor for every full 2*pi winding of its
    angle; when the winding count of a snapped angle is odd, the fragment
    includes an extra PHASE(pi) on the control so the rewrite stays exact.
    """
    if gate.kind is not GateKind.CRY:
        raise ValueError("expand_cry takes a CRY gate")
    _check_finite(theta)
    if snap_epsilon < 0:
        raise ValueError("snap_epsilon must be non-negative")
    c, t = gate.control, gate.target
    red = reduce_angle(theta)
    winding_odd = (round((theta - red) / TWO_PI) % 2) == 1

    near_zero = abs(red) < snap_epsilon
    sign = 1 if abs(red - math.pi) < snap_epsilon else (
        -1 if abs(red + math.pi) < snap_epsilon else 0
    )

    gates: list[Gate]
    vals: list[float]
    if near_zero:
        gates, vals = [], []
    elif sign != 0:
        # CRY(+-pi) = Phase_c(-+pi/2) . (S H)_t . CZ . (H Sdg)_t  with
        # S H = u3(pi/2, pi/2, pi) and H Sdg = u3(pi/2, 0, pi/2).
        gates = [
            Gate(GateKind.U3, t, param_slots=(0, 1, 2)),
            Gate(GateKind.CZ, t, control=c),
            Gate(GateKind.U3, t, param_slots=(3, 4, 5)),
            Gate(GateKind.PHASE, c, param_slots=(6,)),
        ]
        vals = [
            0.5 * math.pi, 0.0, 0.5 * math.pi,
            0.5 * math.pi, 0.5 * math.pi, math.pi,
            -sign * 0.5 * math.pi,
        ]
    else:
        gates = [
            Gate(GateKind.RY, t, param_slots=(0,)),
            Gate(GateKind.CX, t, control=c),
            Gate(GateKind.RY, t, param_slots=(1,)),
            Gate(GateKind.CX, t, control=c),
        ]
        vals = [0.5 * theta, -0.5 * theta]
        winding_odd = False  # the generic form is exact at the raw angle

    if winding_odd:
        gates.append(Gate(GateKind.PHASE, c, param_slots=(len(vals),)))
        vals.append(math.pi)
    return gates, vals, 0.0
