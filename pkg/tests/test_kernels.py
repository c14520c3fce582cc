"""Parity between the compiled kernel core and the pure-NumPy fallback.

Float paths must agree to machine precision (the extension is built with
FP contraction off); fixed-point paths must agree bit for bit.
"""

import math

import numpy as np
import pytest

from gateforge.kernels import _fallback

_core = pytest.importorskip(
    "gateforge.kernels._core", reason="compiled kernel core not built"
)

FRAC = 30
SCALE = 1 << FRAC


def random_state(rng, n, cols=None):
    d = 1 << n
    m = rng.normal(size=(d, cols or d)) + 1j * rng.normal(size=(d, cols or d))
    return np.ascontiguousarray(m / np.max(np.abs(m)) * 0.9, dtype=np.complex128)


def random_kernel(rng):
    t, p, l = rng.uniform(-math.pi, math.pi, 3)
    ct, st = math.cos(t / 2), math.sin(t / 2)
    return np.array(
        [
            [ct, -np.exp(1j * l) * st],
            [np.exp(1j * p) * st, np.exp(1j * (l + p)) * ct],
        ],
        dtype=np.complex128,
    )


class TestFloatParity:
    def test_apply_kernel_matches(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 5))
            target = int(rng.integers(n))
            control = -1
            if n > 1 and rng.uniform() < 0.5:
                control = int(rng.integers(n - 1))
                if control >= target:
                    control += 1
            k = random_kernel(rng)
            deriv = bool(rng.uniform() < 0.3)
            a = random_state(rng, n)
            b = a.copy()
            _core.apply_kernel_inplace(
                a, target, control, k[0, 0], k[0, 1], k[1, 0], k[1, 1], deriv
            )
            _fallback.apply_kernel_inplace(
                b, target, control, k[0, 0], k[0, 1], k[1, 0], k[1, 1], deriv
            )
            assert np.array_equal(a, b)

    def test_trace_matches(self, rng):
        for _ in range(20):
            m = random_state(rng, int(rng.integers(1, 6)))
            a = _core.trace_compensated(m)
            b = _fallback.trace_compensated(m)
            assert a == b

    def test_trace_against_fsum(self, rng):
        m = random_state(rng, 6)
        t = _core.trace_compensated(m)
        d = np.diag(m)
        expect = complex(math.fsum(d.real), math.fsum(d.imag))
        assert abs(t - expect) < 1e-15

    def test_dot_trace_matches(self, rng):
        for _ in range(20):
            a = random_state(rng, 3)
            x = random_state(rng, 3)
            assert abs(_core.dot_trace(a, x) - _fallback.dot_trace(a, x)) < 1e-13


def quantize(rng, n, cols=None):
    m = random_state(rng, n, cols)
    re = np.rint(m.real * SCALE).astype(np.int64)
    im = np.rint(m.imag * SCALE).astype(np.int64)
    return re, im


def quantized_kernel(rng):
    k = random_kernel(rng)
    raw = np.empty(8, dtype=np.int64)
    raw[0::2] = np.rint(k.real.ravel() * SCALE)
    raw[1::2] = np.rint(k.imag.ravel() * SCALE)
    return raw


class TestFixedParity:
    def test_apply_bit_exact(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 6))
            target = int(rng.integers(n))
            control = -1
            if n > 1 and rng.uniform() < 0.5:
                control = int(rng.integers(n - 1))
                if control >= target:
                    control += 1
            kraw = quantized_kernel(rng)
            deriv = bool(rng.uniform() < 0.3)
            re_a, im_a = quantize(rng, n)
            re_b, im_b = re_a.copy(), im_a.copy()
            sat_a = _core.fx_apply_kernel_inplace(re_a, im_a, target, control, kraw, deriv)
            sat_b = _fallback.fx_apply_kernel_inplace(re_b, im_b, target, control, kraw, deriv)
            assert sat_a == sat_b
            assert np.array_equal(re_a, re_b)
            assert np.array_equal(im_a, im_b)

    def test_trace_bit_exact(self, rng):
        for _ in range(20):
            re, im = quantize(rng, int(rng.integers(1, 6)))
            assert _core.fx_trace(re, im) == _fallback.fx_trace(re, im)
            tr, ti = _core.fx_trace(re, im)
            assert tr == int(np.trace(re)) and ti == int(np.trace(im))

    @pytest.mark.parametrize(
        "k00,expect",
        [
            (3, 2),  # 3 * 2^29 / 2^30 = 1.5, odd floor -> up to even 2
            (1, 0),  # 1 * 2^29 / 2^30 = 0.5, even floor -> down to 0
            (5, 2),  # 2.5 -> 2
            (-3, -2),  # -1.5 -> -2 (even), floor semantics on negatives
            (-1, 0),  # -0.5 -> 0
        ],
    )
    def test_round_to_even_on_ties(self, k00, expect):
        re = np.array([[1 << 29], [0]], dtype=np.int64)
        im = np.zeros((2, 1), dtype=np.int64)
        kraw = np.array([k00, 0, 0, 0, 0, 0, 1 << 30, 0], dtype=np.int64)
        for mod in (_core, _fallback):
            r, i = re.copy(), im.copy()
            mod.fx_apply_kernel_inplace(r, i, 0, -1, kraw, False)
            assert r[0, 0] == expect and i[0, 0] == 0

    def test_saturation_flag_and_clamp(self):
        big = (1 << 31) - 1
        kraw = np.array([SCALE, 0, 0, 0, 0, 0, SCALE, 0], dtype=np.int64) * 2
        re = np.array([[big], [0]], dtype=np.int64)
        im = np.zeros((2, 1), dtype=np.int64)
        for mod in (_core, _fallback):
            r, i = re.copy(), im.copy()
            sat = mod.fx_apply_kernel_inplace(r, i, 0, -1, kraw, False)
            assert sat
            assert r[0, 0] == (1 << 31) - 1  # clamped at the format maximum

    def test_deriv_zeroes_control_off_rows(self, rng):
        re, im = quantize(rng, 2)
        kraw = quantized_kernel(rng)
        for mod in (_core, _fallback):
            r, i = re.copy(), im.copy()
            mod.fx_apply_kernel_inplace(r, i, 1, 0, kraw, True)
            # control qubit 0 = bit 0; rows with even index are zeroed
            assert np.all(r[0] == 0) and np.all(r[2] == 0)
            assert np.all(i[0] == 0) and np.all(i[2] == 0)

    def test_control_bypass_preserves_rows(self, rng):
        re, im = quantize(rng, 2)
        kraw = quantized_kernel(rng)
        for mod in (_core, _fallback):
            r, i = re.copy(), im.copy()
            mod.fx_apply_kernel_inplace(r, i, 1, 0, kraw, False)
            assert np.array_equal(r[0], re[0]) and np.array_equal(r[2], re[2])
            assert np.array_equal(i[0], im[0]) and np.array_equal(i[2], im[2])


class TestBackendSelection:
    def test_default_prefers_compiled(self):
        import gateforge.kernels as kernels

        assert kernels.BACKEND in ("compiled", "fallback")

    def test_env_override(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c",
             "import gateforge.kernels as k; print(k.BACKEND)"],
            env={"GATEFORGE_KERNELS": "fallback", "PATH": "/usr/bin:/bin"},
            capture_output=True, text=True,
        )
        assert out.stdout.strip() == "fallback"
