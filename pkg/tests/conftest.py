"""Shared helpers: random circuit generation and independent oracles.

The oracles here deliberately avoid the streaming code paths under test:
dense unitaries come from projector/Kronecker construction (`gate_matrix`)
and gradients from central finite differences.
"""

import numpy as np
import pytest

from gateforge.gates import Circuit, Gate, GateKind, gate_matrix
from gateforge.simulator import Unitary, cost


def random_gate(rng, n_qubits: int, first_slot: int) -> tuple[Gate, int]:
    """One random gate of any kind; returns (gate, next free slot)."""
    kind = rng.choice(
        [
            GateKind.U3,
            GateKind.RY,
            GateKind.CRY,
            GateKind.CX,
            GateKind.CZ,
            GateKind.H,
            GateKind.PHASE,
        ]
    )
    target = int(rng.integers(n_qubits))
    control = None
    if kind in (GateKind.CRY, GateKind.CX, GateKind.CZ):
        if n_qubits < 2:
            kind = GateKind.U3
        else:
            control = int(rng.integers(n_qubits - 1))
            if control >= target:
                control += 1
    n_slots = {GateKind.U3: 3, GateKind.RY: 1, GateKind.CRY: 1, GateKind.PHASE: 1}.get(
        kind, 0
    )
    slots = tuple(range(first_slot, first_slot + n_slots))
    return Gate(kind, target, control=control, param_slots=slots), first_slot + n_slots


def random_circuit(rng, n_qubits: int, n_gates: int, phase: bool = True):
    """Random circuit over all gate kinds plus matching random parameters."""
    gates = []
    slot = 0
    for _ in range(n_gates):
        g, slot = random_gate(rng, n_qubits, slot)
        gates.append(g)
    gp = float(rng.uniform(-np.pi, np.pi)) if phase else 0.0
    circuit = Circuit.from_gates(n_qubits, gates, global_phase=gp)
    params = rng.uniform(-np.pi, np.pi, circuit.param_count)
    return circuit, params


def circuit_unitary(circuit: Circuit, params) -> np.ndarray:
    """Dense circuit unitary by plain matrix products (oracle path)."""
    d = 1 << circuit.n_qubits
    m = np.eye(d, dtype=np.complex128)
    for g in circuit.gates:
        m = gate_matrix(g, params, circuit.n_qubits) @ m
    return np.exp(1j * circuit.global_phase) * m


def fd_gradient(u: Unitary, circuit: Circuit, params, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the cost."""
    out = np.zeros(circuit.param_count)
    for i in range(circuit.param_count):
        hi = np.array(params, dtype=float)
        lo = hi.copy()
        hi[i] += h
        lo[i] -= h
        out[i] = (cost(u, circuit, hi).f - cost(u, circuit, lo).f) / (2 * h)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
