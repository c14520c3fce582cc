"""Functional emulator of the fixed-point dataflow engine backend.

Number format (Fixed32): two's-complement int32 raw value interpreted as
``raw / 2^30`` -- one sign bit, one integer bit, 30 fractional bits, so the
representable range is [-2, 2 - 2^-30].  Encoding rounds to nearest (ties
to even) and saturates.  Complex values are a (re, im) pair of Fixed32.

Arithmetic: a complex multiply uses Knuth's 3-multiply/5-add form

    t1 = ra*rb,  t2 = ia*ib,  t3 = (ra+ia)*(rb+ib)
    re = t1 - t2,  im = t3 - t1 - t2

with exact 64-bit intermediates.  Because intermediates are exact integers
this equals the 4-multiply schoolbook form; each output component is
rounded back to Fixed32 once, after its final summation.  For the
unitary-stream payloads the engine processes (|value| <= 1 + 2^-30) no
intermediate can overflow 64 bits.

Chain model: the engine holds a chain of ``chain_length`` gate blocks per
pass, replicated over ``lanes`` lanes.  A cost evaluation streams the
quantized U† in column-major order through the chain once per pass
(``ceil(n_gates / chain_length)`` passes); a gradient evaluation adds one
staggered stream per free parameter, substituting the derivative kernel at
the owning gate.  The trace is accumulated from the rounded diagonal
elements during the final gate of the last pass; the accumulator is a
64-bit exact integer sum, so results do not depend on lane assignment.

Predicted wall time follows

    T = 4^n (N_p + 1) / (lanes * f_clock) * ceil(N_G / chain_length) + t_0

evaluated through the same integer cycle count reported in
:class:`CycleReport` (exact whenever ``lanes`` divides the element count,
which holds for every power-of-two lane count).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .gates import Circuit, Gate, deriv_kernel_for, kernel_for
from .simulator import CostReport, Unitary, report_from_trace

FRAC_BITS = 30
SCALE = 1 << FRAC_BITS
RAW_MIN = -(1 << 31)
RAW_MAX = (1 << 31) - 1
#: value resolution
EPS = 1.0 / SCALE


class FixedComplex(NamedTuple):
    """A complex number as two Fixed32 raw integers."""

    re: int
    im: int


def fx_encode(x: float) -> int:
    """Encode a float to a Fixed32 raw value (round to nearest even, saturate)."""
    if not math.isfinite(x):
        raise ValueError(f"cannot encode non-finite value {x!r}")
    raw = int(np.rint(x * SCALE))
    return min(max(raw, RAW_MIN), RAW_MAX)


def fx_decode(raw: int) -> float:
    """Exact float value of a Fixed32 raw integer."""
    if not RAW_MIN <= raw <= RAW_MAX:
        raise ValueError(f"raw value {raw} outside int32 range")
    return raw / SCALE


def fx_encode_complex(z: complex) -> FixedComplex:
    return FixedComplex(fx_encode(z.real), fx_encode(z.imag))


def fx_decode_complex(z: FixedComplex) -> complex:
    return complex(fx_decode(z.re), fx_decode(z.im))


def _round_even_30(v: int) -> int:
    f = v >> FRAC_BITS
    r = v & (SCALE - 1)
    half = SCALE >> 1
    if r > half:
        return f + 1
    if r == half:
        return f + (f & 1)
    return f


def cmul_knuth(a: FixedComplex, b: FixedComplex) -> tuple[FixedComplex, bool]:
    """Fixed-point complex multiply; returns the product and a saturation flag.

    Exact in Python integers, so valid for the full Fixed32 range; matches
    the array pipeline bit for bit on in-range inputs.
    """
    t1 = a.re * b.re
    t2 = a.im * b.im
    t3 = (a.re + a.im) * (b.re + b.im)
    re = _round_even_30(t1 - t2)
    im = _round_even_30(t3 - t1 - t2)
    saturated = not (RAW_MIN <= re <= RAW_MAX and RAW_MIN <= im <= RAW_MAX)
    re = min(max(re, RAW_MIN), RAW_MAX)
    im = min(max(im, RAW_MIN), RAW_MAX)
    return FixedComplex(re, im), saturated


def partner_offset(i: int, target: int, n_qubits: int) -> int:
    """Signed offset from basis index ``i`` to its gate partner ``i ^ 2^t``.

    ``+2^t`` when bit ``target`` of ``i`` is 0, else ``-2^t``.
    """
    if not 0 <= target < n_qubits:
        raise ValueError(f"target {target} out of range for n={n_qubits}")
    if not 0 <= i < (1 << n_qubits):
        raise ValueError(f"index {i} out of range for n={n_qubits}")
    step = 1 << target
    return -step if i & step else step


def quantize_kernel(kernel) -> np.ndarray:
    """Quantize a 2x2 complex kernel to raw parts [r00,i00,r01,i01,r10,i10,r11,i11]."""
    k = np.asarray(kernel, dtype=np.complex128)
    out = np.empty(8, dtype=np.int64)
    for idx, z in enumerate((k[0, 0], k[0, 1], k[1, 0], k[1, 1])):
        out[2 * idx] = fx_encode(z.real)
        out[2 * idx + 1] = fx_encode(z.imag)
    return out


def quantize_matrix(mat) -> tuple[np.ndarray, np.ndarray]:
    """Quantize a complex matrix to int64 raw arrays (re, im)."""
    m = np.asarray(mat, dtype=np.complex128)
    re = np.rint(m.real * SCALE).astype(np.int64)
    im = np.rint(m.imag * SCALE).astype(np.int64)
    if (
        re.min() < RAW_MIN or re.max() > RAW_MAX
        or im.min() < RAW_MIN or im.max() > RAW_MAX
    ):
        raise ValueError("matrix entries outside the Fixed32 range")
    return re, im


@dataclass(frozen=True)
class DfeConfig:
    """Engine geometry and clock; defaults model the reference hardware."""

    chain_length: int = 108
    lanes: int = 4
    clock_hz: float = 3.5e8
    overhead_seconds: float = 1e-3

    def __post_init__(self):
        if self.chain_length < 1 or self.lanes < 1:
            raise ValueError("chain_length and lanes must be >= 1")
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")


@dataclass
class CycleReport:
    """Streaming cost accounting for one :func:`run_chain` call."""

    passes: int
    elements_streamed: int
    cycles: int
    predicted_seconds: float
    #: the model is calibrated for n >= 5; smaller problems underfill the pipeline
    approximate: bool = False
    saturated: bool = False


def _cycle_report(n_qubits, n_streams, n_gates, config, include_overhead=False):
    d2 = 4**n_qubits
    passes = max(1, math.ceil(n_gates / config.chain_length))
    per_lane = -(-d2 * n_streams // config.lanes)  # ceil division
    cycles = per_lane * passes
    seconds = cycles / config.clock_hz
    if include_overhead:
        seconds += config.overhead_seconds
    return CycleReport(
        passes=passes,
        elements_streamed=d2 * n_streams * passes,
        cycles=cycles,
        predicted_seconds=seconds,
        approximate=n_qubits < 5,
    )


def predict_time(n_qubits: int, n_params: int, n_gates: int, config: DfeConfig | None = None) -> float:
    """Predicted wall time in seconds for one cost+gradient evaluation."""
    if config is None:
        config = DfeConfig()
    if n_qubits < 1 or n_params < 0 or n_gates < 0:
        raise ValueError("need n_qubits >= 1, n_params >= 0, n_gates >= 0")
    rep = _cycle_report(n_qubits, n_params + 1, n_gates, config, include_overhead=True)
    return rep.predicted_seconds


def stream_gate(
    column, gate: Gate, kernel, deriv: bool = False
) -> tuple[list[FixedComplex], bool]:
    """Emulate one gate block on a single streamed column.

    ``column`` is a sequence of :class:`FixedComplex` of length 2^n;
    ``kernel`` is a quantized kernel from :func:`quantize_kernel`.  Returns
    the transformed column and a saturation flag.  Payloads are expected to
    be unitary-stream values (|value| <= 1 + 2^-30); far outside that range
    64-bit intermediates could overflow in the array pipeline, so use
    :func:`cmul_knuth` for arbitrary scalars.
    """
    d = len(column)
    if d & (d - 1) or d < (1 << (max(gate.wires) + 1)):
        raise ValueError(f"column length {d} does not fit gate wires {gate.wires}")
    re = np.fromiter((z.re for z in column), dtype=np.int64, count=d).reshape(d, 1)
    im = np.fromiter((z.im for z in column), dtype=np.int64, count=d).reshape(d, 1)
    kraw = np.asarray(kernel, dtype=np.int64)
    if kraw.shape != (8,):
        raise ValueError("kernel must be 8 raw parts from quantize_kernel")
    saturated = bool(
        kernels.fx_apply_kernel_inplace(
            re, im, gate.target,
            -1 if gate.control is None else gate.control,
            kraw, deriv,
        )
    )
    out = [FixedComplex(int(r), int(i)) for r, i in zip(re[:, 0], im[:, 0])]
    return out, saturated


def run_chain(
    u: Unitary,
    circuit: Circuit,
    params,
    config: DfeConfig | None = None,
    want_gradient: bool = True,
):
    """Evaluate cost (and optionally the gradient) in emulated fixed point.

    Returns ``(CostReport, gradient, CycleReport)``; ``gradient`` is an
    empty array when ``want_gradient`` is false.  Results are bit-exact for
    a given circuit and parameter vector: every stream applies the same
    quantized kernels pass by pass, and the trace is an exact integer sum,
    so the report is invariant under the lane count.
    """
    if config is None:
        config = DfeConfig()
    if u.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"unitary acts on {u.n_qubits} qubits, circuit on {circuit.n_qubits}"
        )
    p = np.asarray(params, dtype=np.float64)
    if p.shape != (circuit.param_count,):
        raise ValueError(f"expected {circuit.param_count} parameters, got {p.shape}")

    n_gates = len(circuit.gates)
    owners = circuit.slot_owners()
    n_streams = 1 + (circuit.param_count if want_gradient else 0)

    # quantize the uploaded U-dagger once, in column-major stream order
    ud = np.asfortranarray(u.data.conj().T)
    re0, im0 = quantize_matrix(ud)
    re0 = np.ascontiguousarray(re0)
    im0 = np.ascontiguousarray(im0)

    # quantize every kernel once: the plain chain and, per parameter slot,
    # the derivative kernel substituted at the owning gate
    plain = [quantize_kernel(kernel_for(g, p)) for g in circuit.gates]
    derivs = [
        quantize_kernel(deriv_kernel_for(circuit.gates[gi], p, pos))
        for gi, pos in owners
    ]

    streams = [(re0.copy(), im0.copy()) for _ in range(n_streams)]
    saturated = False

    passes = max(1, math.ceil(n_gates / config.chain_length))
    for pass_idx in range(passes):
        lo = pass_idx * config.chain_length
        hi = min(lo + config.chain_length, n_gates)
        # staggered schedule: every stream finishes the pass before any
        # stream starts the next one (streams are buffered in between)
        for s, (re, im) in enumerate(streams):
            dgate = -1 if s == 0 else owners[s - 1][0]
            for gi in range(lo, hi):
                g = circuit.gates[gi]
                is_deriv = gi == dgate
                sat = kernels.fx_apply_kernel_inplace(
                    re, im, g.target,
                    -1 if g.control is None else g.control,
                    derivs[s - 1] if is_deriv else plain[gi],
                    is_deriv,
                )
                saturated = saturated or bool(sat)

    phase = cmath.exp(1j * circuit.global_phase)
    tr_re, tr_im = kernels.fx_trace(*streams[0])
    trace = complex(tr_re / SCALE, tr_im / SCALE) * phase
    report = report_from_trace(trace, u.dim)

    grad = np.zeros(circuit.param_count if want_gradient else 0, dtype=np.float64)
    for s in range(1, n_streams):
        gr, gi_ = kernels.fx_trace(*streams[s])
        grad[s - 1] = -(complex(gr / SCALE, gi_ / SCALE) * phase).real

    cycles = _cycle_report(u.n_qubits, n_streams, n_gates, config)
    cycles.saturated = saturated
    return report, grad, cycles
