"""ADAM-based minimization of the Frobenius cost, with plateau escapes.

The landscape is periodic and non-convex; ADAM with a modest learning rate
is robust across problem sizes.  When the best cost seen improves by less
than ``plateau_rel_delta`` (relative) over ``plateau_window`` iterations, a
random subset of parameters is shifted by bounded uniform noise and the
moment estimates restart; the window baseline resets after each escape.
All randomness flows through one seeded PCG64 generator created per
:func:`optimize` call, consumed only by the escapes, in order -- identical
seeds and configs reproduce identical runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import dfe as dfe_mod
from . import simulator
from .gates import Circuit, GateKind
from .simulator import Unitary

BACKENDS = ("reference", "dfe")


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iters: int = 10000
    #: stop once the cost reaches this absolute level
    target_cost: float = 1e-4
    plateau_window: int = 200
    plateau_rel_delta: float = 1e-4
    shift_fraction: float = 0.3
    shift_magnitude: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise ValueError("betas must lie in [0, 1)")
        if self.learning_rate <= 0 or self.eps <= 0:
            raise ValueError("learning_rate and eps must be positive")
        if not 0 <= self.shift_fraction <= 1:
            raise ValueError("shift_fraction must lie in [0, 1]")
        if self.plateau_window < 1 or self.max_iters < 0:
            raise ValueError("plateau_window >= 1 and max_iters >= 0 required")


class AdamState(NamedTuple):
    m: np.ndarray
    v: np.ndarray
    t: int


def adam_init(n_params: int) -> AdamState:
    return AdamState(
        np.zeros(n_params, dtype=np.float64),
        np.zeros(n_params, dtype=np.float64),
        0,
    )


def adam_step(params, grad, state: AdamState, config: OptimizerConfig):
    """One bias-corrected ADAM update; returns (new params, new state)."""
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * g
    v = config.beta2 * state.v + (1.0 - config.beta2) * g * g
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    step = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return p - step, AdamState(m, v, t)


def plateau_escape(params, config: OptimizerConfig, rng: np.random.Generator):
    """Shift a random subset of parameters by bounded uniform noise.

    ``floor(shift_fraction * P)`` distinct indices are drawn uniformly
    without replacement and perturbed by U(-shift_magnitude, +shift_magnitude).
    """
    p = np.array(params, dtype=np.float64)
    count = math.floor(config.shift_fraction * p.size)
    if count < 1:
        return p
    idx = rng.choice(p.size, size=count, replace=False)
    p[idx] += rng.uniform(-config.shift_magnitude, config.shift_magnitude, size=count)
    return p


def expand_layers(circuit: Circuit, params, extra_layers: int, pair_schedule=None):
    """Append identity-initialized ansatz layers after the existing gates.

    The new layers continue the pair schedule from the circuit's current
    CRY count (one CRY per layer) and their parameters are zeros, so the
    circuit's unitary -- and therefore its cost -- is unchanged at the
    extended parameter vector.
    """
    from . import compressor  # deferred: compressor imports this module

    if extra_layers < 0:
        raise ValueError("extra_layers must be >= 0")
    if pair_schedule is None:
        pair_schedule = compressor.default_pair_schedule(circuit.n_qubits)
    if extra_layers > 0 and not pair_schedule:
        raise ValueError("cannot expand without a pair schedule")
    start = sum(1 for g in circuit.gates if g.kind is GateKind.CRY)
    gates = list(circuit.gates)
    slot = circuit.param_count
    for j in range(extra_layers):
        lg, slot = compressor.layer_gates(
            tuple(pair_schedule[(start + j) % len(pair_schedule)]), slot
        )
        gates.extend(lg)
    out = Circuit(circuit.n_qubits, gates, slot, circuit.global_phase)
    out.validate()
    new_params = np.concatenate(
        [np.asarray(params, dtype=np.float64), np.zeros(slot - circuit.param_count)]
    )
    return out, new_params


@dataclass
class OptimizeTrace:
    """What happened during one optimization run.

    ``cost_history`` holds (iteration, cost) pairs; its last entry is the
    cost of the returned parameters, so ``final_cost == cost_history[-1][1]``.
    ``wall_seconds`` is observational and excluded from reproducibility
    comparisons.
    """

    iterations: int = 0
    cost_history: list = field(default_factory=list)
    escapes: int = 0
    expansions: int = 0
    final_cost: float = math.inf
    wall_seconds: float = 0.0

    def merge(self, other: "OptimizeTrace") -> None:
        """Fold a follow-up run into this trace (histories concatenated)."""
        offset = self.iterations
        self.cost_history.extend(
            (offset + it, c) for it, c in other.cost_history
        )
        self.iterations += other.iterations
        self.escapes += other.escapes
        self.expansions += other.expansions
        self.final_cost = other.final_cost
        self.wall_seconds += other.wall_seconds


def _make_evaluator(u, circuit, backend, dfe_config, cycle_sink):
    if backend == "reference":
        def evaluate(params):
            report, grad = simulator.cost_and_gradient(u, circuit, params)
            return report.f, grad
    elif backend == "dfe":
        def evaluate(params):
            report, grad, cycles = dfe_mod.run_chain(
                u, circuit, params, dfe_config, want_gradient=True
            )
            if cycle_sink is not None:
                cycle_sink.append(cycles)
            return report.f, grad
    else:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return evaluate


def optimize(
    u: Unitary,
    circuit: Circuit,
    init_params,
    config: OptimizerConfig | None = None,
    backend: str = "reference",
    dfe_config=None,
    fixed_mask=None,
    cycle_sink: list | None = None,
):
    """Minimize the Frobenius cost from ``init_params``.

    Runs until the cost reaches ``config.target_cost`` or ``max_iters``
    evaluations are spent, tracking the best parameters seen; those are
    returned together with an :class:`OptimizeTrace`.  ``fixed_mask`` (bool,
    per slot) freezes chosen parameters: their gradient is zeroed before
    each update, so they never move.  ``cycle_sink`` collects the
    per-evaluation :class:`CycleReport` objects when the dfe backend runs.
    """
    if config is None:
        config = OptimizerConfig()
    params = np.array(init_params, dtype=np.float64)
    if params.shape != (circuit.param_count,):
        raise ValueError(
            f"expected {circuit.param_count} initial parameters, got {params.shape}"
        )
    mask = None
    if fixed_mask is not None:
        mask = np.asarray(fixed_mask, dtype=bool)
        if mask.shape != params.shape:
            raise ValueError("fixed_mask must match the parameter vector")

    evaluate = _make_evaluator(u, circuit, backend, dfe_config, cycle_sink)
    rng = np.random.default_rng(config.rng_seed)
    t0 = time.perf_counter()

    trace = OptimizeTrace()
    state = adam_init(params.size)
    best_params = params.copy()
    best_cost = math.inf
    window_base = math.inf
    window_left = config.plateau_window

    it = 0
    while True:
        f, grad = evaluate(params)
        trace.cost_history.append((it, f))
        if f < best_cost:
            best_cost = f
            best_params = params.copy()
        if f <= config.target_cost or it >= config.max_iters:
            break

        window_left -= 1
        if window_left <= 0:
            # improvement over the last window, relative to its baseline
            if best_cost > (1.0 - config.plateau_rel_delta) * window_base:
                params = plateau_escape(best_params, config, rng)
                if mask is not None:
                    params[mask] = best_params[mask]  # pins survive the shake
                state = adam_init(params.size)
                trace.escapes += 1
                window_base = math.inf  # free pass for the post-escape window
            else:
                window_base = best_cost
            window_left = config.plateau_window

        if mask is not None:
            grad = np.where(mask, 0.0, grad)
        params, state = adam_step(params, grad, state, config)
        it += 1

    trace.iterations = it
    # the returned parameters are the best seen; close the history with them
    if best_cost < trace.cost_history[-1][1]:
        trace.cost_history.append((it, best_cost))
    trace.final_cost = trace.cost_history[-1][1]
    trace.wall_seconds = time.perf_counter() - t0
    return best_params, trace
