"""Adaptive compression: minimize two-qubit gate count at fixed accuracy.

The ansatz is layered: each layer, for a scheduled ordered pair (a, b),
applies U3 on a, U3 on b, then CRY(control=a, target=b); a trailing U3 on
every qubit closes the circuit.  All parameters start at zero, so the
initial circuit is the identity.  The default pair schedule cycles through
all ordered pairs, ascending pairs first, then their mirrors.

Compression alternates two kinds of moves, each followed by
re-optimization and accepted only when the cost stays within tolerance:

* removal rounds delete the CRY whose reduced angle is nearest 0;
* snap rounds pin the CRY whose reduced angle is nearest +-pi to exactly
  +-pi, where it is worth a single CX after rewriting (a generic angle
  costs two).

Pinned angles are frozen in every later optimization, so they stay exact
and :func:`finalize` can rewrite them through the one-CZ form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .gates import (
    Circuit,
    Gate,
    GateKind,
    expand_cry,
    kernel_for,
    reduce_angle,
)
from .optimizer import OptimizeTrace, OptimizerConfig, optimize
from .simulator import Unitary


class FailedToConverge(RuntimeError):
    """The optimizer could not reach the requested tolerance."""


def default_pair_schedule(n_qubits: int) -> list[tuple[int, int]]:
    """All ordered qubit pairs: ascending pairs in lex order, then mirrored."""
    asc = [(a, b) for a in range(n_qubits) for b in range(a + 1, n_qubits)]
    return asc + [(b, a) for a, b in asc]


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    layers: int
    pair_schedule: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.layers < 0:
            raise ValueError("layers must be >= 0")
        if self.pair_schedule is not None:
            for a, b in self.pair_schedule:
                if a == b or not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                    raise ValueError(f"bad pair ({a}, {b})")

    def schedule(self) -> list[tuple[int, int]]:
        if self.pair_schedule is not None:
            return list(self.pair_schedule)
        return default_pair_schedule(self.n_qubits)


def layer_gates(pair: tuple[int, int], first_slot: int) -> tuple[list[Gate], int]:
    """Gates of one ansatz layer; returns them and the next free slot."""
    a, b = pair
    gates = [
        Gate(GateKind.U3, a, param_slots=(first_slot, first_slot + 1, first_slot + 2)),
        Gate(GateKind.U3, b, param_slots=(first_slot + 3, first_slot + 4, first_slot + 5)),
        Gate(GateKind.CRY, b, control=a, param_slots=(first_slot + 6,)),
    ]
    return gates, first_slot + 7


def build_ansatz(spec: AnsatzSpec) -> tuple[Circuit, np.ndarray]:
    """Layered ansatz with zero-initialized parameters (identity circuit)."""
    schedule = spec.schedule()
    gates: list[Gate] = []
    slot = 0
    if spec.layers > 0 and not schedule:
        raise ValueError("layers > 0 requires a non-empty pair schedule")
    for i in range(spec.layers):
        lg, slot = layer_gates(schedule[i % len(schedule)], slot)
        gates.extend(lg)
    for q in range(spec.n_qubits):
        gates.append(Gate(GateKind.U3, q, param_slots=(slot, slot + 1, slot + 2)))
        slot += 3
    circuit = Circuit(spec.n_qubits, gates, slot)
    circuit.validate()
    return circuit, np.zeros(slot, dtype=np.float64)


class CryClass(NamedTuple):
    """CRY angle class: 'identity', 'czlike' (with sign) or 'generic'."""

    label: str
    sign: int = 0


def classify_cry(theta: float, snap_epsilon: float = 1e-2) -> CryClass:
    """Classify a CRY angle after reduction mod 2*pi into (-pi, pi]."""
    if snap_epsilon < 0:
        raise ValueError("snap_epsilon must be non-negative")
    red = reduce_angle(theta)
    if abs(red) < snap_epsilon:
        return CryClass("identity")
    if abs(red - math.pi) < snap_epsilon:
        return CryClass("czlike", 1)
    if abs(red + math.pi) < snap_epsilon:
        return CryClass("czlike", -1)
    return CryClass("generic")


@dataclass(frozen=True)
class CompressionConfig:
    snap_epsilon: float = 1e-2
    tolerance: float = 1e-4
    max_rounds: int = 64
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    #: extra ansatz layers allowed when the initial depth misses tolerance
    max_expansions: int = 2

    def __post_init__(self):
        # wider windows would let the identity and cz-like classes overlap
        if not 0.0 <= self.snap_epsilon < math.pi / 4:
            raise ValueError("snap_epsilon must lie in [0, pi/4)")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_rounds < 0 or self.max_expansions < 0:
            raise ValueError("round and expansion budgets must be >= 0")


@dataclass
class RoundOutcome:
    """Result of one compression move; on failure the inputs are returned."""

    removed: bool
    gate_index: int | None
    circuit: Circuit
    params: np.ndarray
    trace: OptimizeTrace | None


def _cry_candidates(circuit, params, exclude, key):
    out = []
    for gi, g in enumerate(circuit.gates):
        if g.kind is GateKind.CRY and gi not in exclude:
            out.append((key(reduce_angle(float(params[g.param_slots[0]]))), gi))
    out.sort()
    return [gi for _, gi in out]


def _round_config(config: CompressionConfig) -> OptimizerConfig:
    # a re-optimization may stop as soon as the move is proven acceptable
    target = min(config.optimizer.target_cost, config.tolerance)
    return replace(config.optimizer, target_cost=target)


def compress_round(
    u: Unitary,
    circuit: Circuit,
    params,
    config: CompressionConfig | None = None,
    backend: str = "reference",
    exclude=frozenset(),
    fixed_mask=None,
) -> RoundOutcome:
    """Try to delete the CRY whose reduced angle is nearest 0.

    The gate is removed (its single-qubit neighbors stay), the remaining
    parameters are re-optimized from their current values, and the move is
    kept only if the final cost is within ``config.tolerance``; otherwise
    the original circuit and parameters are handed back.  ``exclude`` lists
    gate indices a driver has already tried, so it can walk the next-nearest
    candidates after a failure.
    """
    if config is None:
        config = CompressionConfig()
    params = np.asarray(params, dtype=np.float64)
    candidates = _cry_candidates(circuit, params, exclude, abs)
    if not candidates:
        return RoundOutcome(False, None, circuit, params, None)
    gi = candidates[0]
    trial, keep = circuit.without_gate(gi)
    mask = None if fixed_mask is None else np.asarray(fixed_mask, bool)[keep]
    new_params, trace = optimize(
        u, trial, params[keep], _round_config(config), backend, fixed_mask=mask
    )
    if trace.final_cost <= config.tolerance:
        return RoundOutcome(True, gi, trial, new_params, trace)
    return RoundOutcome(False, gi, circuit, params, None)


def _snap_round(u, circuit, params, config, backend, exclude, fixed_mask):
    """Try to pin the CRY nearest +-pi to exactly +-pi (mirror of a removal)."""
    candidates = _cry_candidates(
        circuit, params, exclude, lambda red: math.pi - abs(red)
    )
    if not candidates:
        return RoundOutcome(False, None, circuit, params, None)
    gi = candidates[0]
    slot = circuit.gates[gi].param_slots[0]
    red = reduce_angle(float(params[slot]))
    trial = np.array(params, dtype=np.float64)
    trial[slot] = math.copysign(math.pi, red) if red != 0.0 else math.pi
    mask = np.array(fixed_mask, dtype=bool)
    mask[slot] = True
    new_params, trace = optimize(
        u, circuit, trial, _round_config(config), backend, fixed_mask=mask
    )
    if trace.final_cost <= config.tolerance:
        return RoundOutcome(True, gi, circuit, new_params, trace)
    return RoundOutcome(False, gi, circuit, params, None)


def adaptive_compress(
    u: Unitary,
    spec: AnsatzSpec,
    config: CompressionConfig | None = None,
    backend: str = "reference",
):
    """Optimize an ansatz to tolerance, then compress it.

    Flow: optimize (expanding by one layer at a time while the tolerance is
    unmet and the expansion budget allows, raising :class:`FailedToConverge`
    past the budget); loop removal rounds until every candidate fails or
    ``max_rounds`` is hit; loop snap rounds the same way; classify the
    surviving CRYs, dropping identity-class ones and pinning CZ-like ones
    to exact +-pi; re-optimize once more with the pins frozen.

    Returns ``(circuit, params, trace)`` with the circuit still in
    {U3, CRY} form (CRY angles snapped or generic); the trace concatenates
    the accepted optimization runs, so ``trace.final_cost`` is the cost of
    the returned parameters.
    """
    from .optimizer import expand_layers  # local to avoid import cycle

    if config is None:
        config = CompressionConfig()
    circuit, params = build_ansatz(spec)
    opt_config = _round_config(config)

    params, total = optimize(u, circuit, params, opt_config, backend)
    expansions = 0
    while total.final_cost > config.tolerance and expansions < config.max_expansions:
        circuit, params = expand_layers(circuit, params, 1, spec.schedule())
        params, trace = optimize(u, circuit, params, opt_config, backend)
        trace.expansions = 1
        total.merge(trace)
        expansions += 1
    if total.final_cost > config.tolerance:
        raise FailedToConverge(
            f"cost {total.final_cost:.3e} above tolerance {config.tolerance:.0e} "
            f"after {expansions} expansion(s)"
        )

    # removal rounds
    rounds = 0
    tried: set[int] = set()
    while rounds < config.max_rounds:
        outcome = compress_round(u, circuit, params, config, backend, exclude=tried)
        if outcome.gate_index is None:
            break
        if outcome.removed:
            circuit, params = outcome.circuit, outcome.params
            total.merge(outcome.trace)
            rounds += 1
            tried.clear()
        else:
            tried.add(outcome.gate_index)

    # snap rounds: a pinned +-pi angle costs one CX instead of two
    pinned = np.zeros(circuit.param_count, dtype=bool)
    tried.clear()
    pinned_gates: set[int] = set()
    while rounds < config.max_rounds:
        outcome = _snap_round(
            u, circuit, params, config, backend, tried | pinned_gates, pinned
        )
        if outcome.gate_index is None:
            break
        if outcome.removed:
            params = outcome.params
            pinned[circuit.gates[outcome.gate_index].param_slots[0]] = True
            pinned_gates.add(outcome.gate_index)
            total.merge(outcome.trace)
            rounds += 1
        else:
            tried.add(outcome.gate_index)

    # final classification: drop identity-class CRYs, pin CZ-like ones
    changed = False
    for gi in reversed(range(len(circuit.gates))):
        g = circuit.gates[gi]
        if g.kind is not GateKind.CRY or gi in pinned_gates:
            continue
        slot = g.param_slots[0]
        cls = classify_cry(float(params[slot]), config.snap_epsilon)
        if cls.label == "identity":
            circuit, keep = circuit.without_gate(gi)
            params = params[keep]
            pinned = pinned[keep]
            pinned_gates = {
                i - (1 if i > gi else 0) for i in pinned_gates
            }
            changed = True
        elif cls.label == "czlike":
            params = np.array(params, dtype=np.float64)
            params[slot] = cls.sign * math.pi
            pinned[slot] = True
            changed = True
    if changed or pinned.any():
        params, trace = optimize(
            u, circuit, params, opt_config, backend, fixed_mask=pinned
        )
        total.merge(trace)

    if total.final_cost > config.tolerance:
        raise FailedToConverge(
            f"compression left cost {total.final_cost:.3e} above tolerance"
        )
    return circuit, params, total


# ---------------------------------------------------------------------------
# finalization to {U3, CX}


def _u3_angles(m) -> tuple[float, float, float, float]:
    """Decompose a 2x2 unitary as exp(1j*alpha) * u3(theta, phi, lam).

    The factoring makes m00/exp(1j*alpha) real and non-negative; the
    degenerate cases theta in {0, pi} put the whole residual phase in lam.
    """
    a = abs(m[0, 0])
    b = abs(m[1, 0])
    theta = 2.0 * math.atan2(b, a)
    if b < 1e-12:  # theta ~ 0
        alpha = math.atan2(m[0, 0].imag, m[0, 0].real)
        lam = math.atan2(m[1, 1].imag, m[1, 1].real) - alpha
        return theta, 0.0, lam, alpha
    if a < 1e-12:  # theta ~ pi
        alpha = math.atan2(m[1, 0].imag, m[1, 0].real)
        z = -m[0, 1]
        lam = math.atan2(z.imag, z.real) - alpha
        return theta, 0.0, lam, alpha
    alpha = math.atan2(m[0, 0].imag, m[0, 0].real)
    phi = math.atan2(m[1, 0].imag, m[1, 0].real) - alpha
    z = -m[0, 1]
    lam = math.atan2(z.imag, z.real) - alpha
    return theta, phi, lam, alpha


_SINGLE_KINDS = (GateKind.U3, GateKind.RY, GateKind.PHASE, GateKind.H)


def finalize(
    circuit: Circuit, params, snap_epsilon: float = 1e-9
) -> tuple[Circuit, np.ndarray]:
    """Rewrite a circuit to {U3, CX} form with numeric angles baked in.

    CRY gates are expanded per their class at ``snap_epsilon`` (identity
    dropped, +-pi through the one-CZ form, generic through two CX); CZ is
    rewritten as (H t) CX (H t); maximal runs of adjacent single-qubit
    gates on one wire merge into a single U3, with residual phases folded
    into the circuit's global phase.  The result equals the input unitary
    up to that tolerance-free bookkeeping, provided CRY angles are already
    snapped (a mid-epsilon angle is moved to the special value).
    """
    params = np.asarray(params, dtype=np.float64)
    # pass 1: concrete (gate, angles) pairs over {U3, RY, PHASE, H, CX}
    concrete: list[tuple[Gate, tuple[float, ...]]] = []
    phase = circuit.global_phase

    def push(gate: Gate, vals) -> None:
        nonlocal phase
        if gate.kind is GateKind.CZ:
            concrete.append((Gate(GateKind.H, gate.target), ()))
            concrete.append(
                (Gate(GateKind.CX, gate.target, control=gate.control), ())
            )
            concrete.append((Gate(GateKind.H, gate.target), ()))
        else:
            concrete.append((gate, tuple(vals)))

    for g in circuit.gates:
        vals = tuple(float(params[s]) for s in g.param_slots)
        if g.kind is GateKind.CRY:
            if not all(math.isfinite(v) for v in vals):
                raise ValueError("cannot classify a non-finite CRY angle")
            frag, frag_vals, delta = expand_cry(g, vals[0], snap_epsilon)
            phase += delta
            for fg in frag:
                push(fg, tuple(frag_vals[s] for s in fg.param_slots))
        else:
            push(g, vals)

    # pass 2: merge single-qubit runs into one U3 per wire
    pending: dict[int, np.ndarray] = {}
    out_gates: list[Gate] = []
    out_params: list[float] = []

    def local_kernel(gate: Gate, vals) -> np.ndarray:
        shim = Gate(gate.kind, 0, param_slots=tuple(range(len(vals))))
        return kernel_for(shim, list(vals))

    def flush(wire: int) -> None:
        nonlocal phase
        m = pending.pop(wire, None)
        if m is None:
            return
        theta, phi, lam, alpha = _u3_angles(m)
        if abs(theta) < 1e-14 and abs((phi + lam + math.pi) % (2 * math.pi) - math.pi) < 1e-14:
            phase += alpha  # bare (phased) identity: nothing to emit
            return
        slot = len(out_params)
        out_gates.append(Gate(GateKind.U3, wire, param_slots=(slot, slot + 1, slot + 2)))
        out_params.extend((theta, phi, lam))
        phase += alpha

    for g, vals in concrete:
        if g.kind in _SINGLE_KINDS:
            k = local_kernel(g, vals)
            prev = pending.get(g.target)
            pending[g.target] = k if prev is None else k @ prev
        elif g.kind is GateKind.CX:
            flush(g.control)
            flush(g.target)
            out_gates.append(g)
        else:  # pragma: no cover - push() leaves no other kinds
            raise ValueError(f"unexpected kind {g.kind}")
    for wire in sorted(pending):
        flush(wire)

    final = Circuit(circuit.n_qubits, out_gates, len(out_params), phase)
    final.validate()
    return final, np.asarray(out_params, dtype=np.float64)
