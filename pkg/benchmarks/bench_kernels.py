#!/usr/bin/env python3
"""Timing comparison of the compiled kernel core against the numpy fallback.

Feeds identical inputs through both implementations of each hot inner loop,
verifies they agree (bit-for-bit where the contract promises it), and prints
per-call timings with the speedup.  Run from the repository root:

    python3 benchmarks/bench_kernels.py [--qubits 6] [--repeats 200]
"""

import argparse
import math
import time

import numpy as np

from gateforge.dfe import quantize_kernel, quantize_matrix
from gateforge.kernels import _fallback

try:
    from gateforge.kernels import _core
except ImportError:
    _core = None


def random_kernels(rng, n_qubits, count):
    """Random single-qubit unitaries on random wires, half of them controlled."""
    out = []
    for _ in range(count):
        a, b, c = rng.uniform(-math.pi, math.pi, size=3)
        cos, sin = math.cos(a / 2), math.sin(a / 2)
        k = np.array(
            [
                [cos, -np.exp(1j * c) * sin],
                [np.exp(1j * b) * sin, np.exp(1j * (b + c)) * cos],
            ]
        )
        target = int(rng.integers(n_qubits))
        control = -1
        if n_qubits > 1 and rng.random() < 0.5:
            control = int(rng.integers(n_qubits - 1))
            if control >= target:
                control += 1
        out.append((target, control, k))
    return out


def time_call(fn, repeats):
    """Best per-call seconds over three timed passes."""
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def run_float(impl, mat, gates):
    for target, control, k in gates:
        impl.apply_kernel_inplace(
            mat, target, control,
            complex(k[0, 0]), complex(k[0, 1]),
            complex(k[1, 0]), complex(k[1, 1]),
            False,
        )


def run_fixed(impl, re, im, gates_raw):
    for target, control, kraw in gates_raw:
        impl.fx_apply_kernel_inplace(re, im, target, control, kraw, False)


def report(name, t_fb, t_core):
    if t_core is None:
        print(f"  {name:<28} fallback {t_fb * 1e6:9.1f} us   (compiled core absent)")
    else:
        print(
            f"  {name:<28} compiled {t_core * 1e6:9.1f} us"
            f"   fallback {t_fb * 1e6:9.1f} us   x{t_fb / t_core:.1f}"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=6)
    ap.add_argument("--repeats", type=int, default=200)
    args = ap.parse_args()

    n = args.qubits
    d = 1 << n
    rng = np.random.default_rng(7)
    gates = random_kernels(rng, n, 16)
    gates_raw = [(t, c, quantize_kernel(k)) for t, c, k in gates]

    base = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    base = np.ascontiguousarray(base)
    re0, im0 = quantize_matrix(base)

    print(f"kernel benchmark: n={n} ({d}x{d}), {len(gates)} gates per call, "
          f"repeats={args.repeats}")
    backends = [("fallback", _fallback)] + ([("compiled", _core)] if _core else [])

    # agreement on one full gate sequence before timing anything
    results = {}
    for name, impl in backends:
        m = base.copy()
        run_float(impl, m, gates)
        re, im = re0.copy(), im0.copy()
        run_fixed(impl, re, im, gates_raw)
        results[name] = (m, re, im, impl.trace_compensated(m),
                         impl.dot_trace(base, m), impl.fx_trace(re, im))
    if _core:
        fb, co = results["fallback"], results["compiled"]
        float_same = fb[0].tobytes() == co[0].tobytes()
        fixed_same = (fb[1].tobytes(), fb[2].tobytes()) == (co[1].tobytes(), co[2].tobytes())
        scalar_same = fb[3:] == co[3:]
        print(f"agreement: float bit-identical={float_same}, "
              f"fixed-point bit-identical={fixed_same}, traces equal={scalar_same}")
        if not (float_same and fixed_same and scalar_same):
            raise SystemExit("backends disagree; timings would be meaningless")

    timings = {}
    for name, impl in backends:
        m = base.copy()
        re, im = re0.copy(), im0.copy()
        timings[name] = {
            "apply_kernel_inplace x16": time_call(
                lambda: run_float(impl, m, gates), args.repeats
            ),
            "fx_apply_kernel_inplace x16": time_call(
                lambda: run_fixed(impl, re, im, gates_raw), args.repeats
            ),
            "trace_compensated": time_call(
                lambda: impl.trace_compensated(base), args.repeats
            ),
            "dot_trace": time_call(
                lambda: impl.dot_trace(base, m), args.repeats
            ),
            "fx_trace": time_call(
                lambda: impl.fx_trace(re0, im0), args.repeats
            ),
        }

    core_t = timings.get("compiled")
    for key in timings["fallback"]:
        report(key, timings["fallback"][key], core_t and core_t[key])


if __name__ == "__main__":
    main()
