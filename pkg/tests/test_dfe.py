"""Fixed-point arithmetic, stream emulation and the cycle/time model."""

import math

import numpy as np
import pytest

from conftest import random_circuit

from gateforge.dfe import (
    EPS,
    RAW_MAX,
    RAW_MIN,
    SCALE,
    CycleReport,
    DfeConfig,
    FixedComplex,
    cmul_knuth,
    fx_decode,
    fx_decode_complex,
    fx_encode,
    fx_encode_complex,
    partner_offset,
    predict_time,
    quantize_kernel,
    quantize_matrix,
    run_chain,
    stream_gate,
)
from gateforge.gates import Gate, GateKind, kernel_for, u3_kernel
from gateforge.simulator import Unitary, apply_gate_columnwise, cost, cost_and_gradient
from gateforge.toolkit import haar_random_unitary


class TestEncoding:
    def test_values(self):
        assert fx_encode(0.0) == 0
        assert fx_encode(1.0) == 1 << 30
        assert fx_encode(-0.5) == -(1 << 29)
        assert fx_encode(-2.0) == RAW_MIN
        assert fx_decode(1 << 30) == 1.0
        assert fx_decode(RAW_MIN) == -2.0
        assert fx_decode(RAW_MAX) == 2.0 - EPS

    def test_saturating_encode(self):
        assert fx_encode(3.5) == RAW_MAX
        assert fx_encode(-100.0) == RAW_MIN

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            fx_encode(math.nan)

    def test_decode_range_checked(self):
        with pytest.raises(ValueError):
            fx_decode(RAW_MAX + 1)

    def test_round_trip_error_bound(self, rng):
        for x in rng.uniform(-1.99, 1.99, 1000):
            assert abs(fx_decode(fx_encode(x)) - x) <= EPS / 2

    def test_complex_helpers(self):
        z = fx_encode_complex(0.25 - 0.75j)
        assert z == FixedComplex(1 << 28, -(3 << 28))
        assert fx_decode_complex(z) == 0.25 - 0.75j


class TestCmulKnuth:
    def test_identity(self, rng):
        one = FixedComplex(1 << 30, 0)
        for _ in range(100):
            b = FixedComplex(int(rng.integers(RAW_MIN, RAW_MAX // 2)),
                             int(rng.integers(RAW_MIN, RAW_MAX // 2)))
            out, sat = cmul_knuth(one, b)
            assert out == b and not sat

    def test_matches_schoolbook_rounding(self, rng):
        def schoolbook(a, b):
            re = a.re * b.re - a.im * b.im
            im = a.re * b.im + a.im * b.re
            def rnd(v):
                f, r = v >> 30, v & ((1 << 30) - 1)
                if r > (1 << 29) or (r == (1 << 29) and f & 1):
                    return f + 1
                return f
            return rnd(re), rnd(im)

        a = fx_encode_complex((1 + 2j) / 4)
        b = fx_encode_complex((3 + 4j) / 8)
        out, _ = cmul_knuth(a, b)
        assert (out.re, out.im) == schoolbook(a, b)
        for _ in range(2000):
            a = FixedComplex(int(rng.integers(-SCALE, SCALE)), int(rng.integers(-SCALE, SCALE)))
            b = FixedComplex(int(rng.integers(-SCALE, SCALE)), int(rng.integers(-SCALE, SCALE)))
            out, _ = cmul_knuth(a, b)
            assert (out.re, out.im) == schoolbook(a, b)

    def test_against_double_product(self, rng):
        for _ in range(10000):
            za = complex(rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99))
            zb = complex(rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99))
            a, b = fx_encode_complex(za), fx_encode_complex(zb)
            out, sat = cmul_knuth(a, b)
            z = fx_decode_complex(a) * fx_decode_complex(b)
            assert not sat
            assert abs(fx_decode(out.re) - z.real) < 2 * EPS
            assert abs(fx_decode(out.im) - z.imag) < 2 * EPS

    def test_saturation_flag(self):
        big = FixedComplex(RAW_MAX, 0)
        out, sat = cmul_knuth(big, big)
        assert sat and out.re == RAW_MAX


class TestPartnerOffset:
    def test_examples(self):
        assert partner_offset(89, 3, 9) == -8
        assert 89 + partner_offset(89, 3, 9) == 81
        assert partner_offset(0, 0, 1) == 1
        assert partner_offset(5, 2, 3) == -4

    def test_involution(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 10))
            i = int(rng.integers(1 << n))
            t = int(rng.integers(n))
            j = i + partner_offset(i, t, n)
            assert j == i ^ (1 << t)
            assert j + partner_offset(j, t, n) == i

    def test_range_checks(self):
        with pytest.raises(ValueError):
            partner_offset(0, 3, 2)
        with pytest.raises(ValueError):
            partner_offset(8, 0, 3)


class TestQuantize:
    def test_kernel_layout(self):
        k = quantize_kernel(np.array([[1, 0], [0, 1j]]))
        assert list(k) == [1 << 30, 0, 0, 0, 0, 0, 0, 1 << 30]

    def test_matrix_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            quantize_matrix(np.full((2, 2), 3.0))

    def test_matrix_round_trip(self, rng):
        m = rng.uniform(-1, 1, (4, 4)) + 1j * rng.uniform(-1, 1, (4, 4))
        re, im = quantize_matrix(m)
        back = re / SCALE + 1j * im / SCALE
        assert np.max(np.abs(back - m)) <= EPS


class TestCycleModel:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            DfeConfig(chain_length=0)
        with pytest.raises(ValueError):
            DfeConfig(lanes=0)
        with pytest.raises(ValueError):
            DfeConfig(clock_hz=0.0)

    def test_n5_example(self):
        # 4^5 * (3+1) / 4 lanes * 1 pass = 1024 cycles = 2.926e-6 s
        cfg = DfeConfig(overhead_seconds=0.0)
        t = predict_time(5, 3, 50, cfg)
        assert t == 1024 / 3.5e8

    def test_n9_example(self):
        cfg = DfeConfig(overhead_seconds=0.0)
        t = predict_time(9, 0, 432, cfg)
        assert t == (4**9 // 4) * 4 / 3.5e8
        assert abs(t - 7.49e-4) < 1e-6

    def test_overhead_is_additive(self):
        base = predict_time(5, 3, 50, DfeConfig(overhead_seconds=0.0))
        assert predict_time(5, 3, 50, DfeConfig(overhead_seconds=1e-3)) == base + 1e-3

    def test_pass_count(self):
        cfg = DfeConfig(overhead_seconds=0.0, chain_length=10)
        # 25 gates -> 3 passes
        assert predict_time(5, 0, 25, cfg) == 3 * (4**5 // 4) / 3.5e8

    def test_zero_gates_still_one_pass(self):
        cfg = DfeConfig(overhead_seconds=0.0)
        assert predict_time(3, 0, 0, cfg) == (4**3 // 4) / 3.5e8

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            predict_time(0, 1, 1)
        with pytest.raises(ValueError):
            predict_time(2, -1, 1)


def encode_column(col):
    return [FixedComplex(int(np.rint(z.real * SCALE)), int(np.rint(z.imag * SCALE))) for z in col]


class TestStreamGate:
    def test_identity_kernel_noop(self, rng):
        col = encode_column(rng.uniform(-0.7, 0.7, 8) + 1j * rng.uniform(-0.7, 0.7, 8))
        out, sat = stream_gate(col, Gate(GateKind.H, 1), quantize_kernel(np.eye(2)))
        assert out == col and not sat

    def test_matches_reference_column(self, rng):
        u = haar_random_unitary(5, seed=77)
        for trial in range(20):
            j = int(rng.integers(32))
            t, p, l = rng.uniform(-math.pi, math.pi, 3)
            gate = Gate(GateKind.U3, int(rng.integers(5)), param_slots=(0, 1, 2))
            kernel = u3_kernel(t, p, l)
            col = u.data[:, j]
            fixed, sat = stream_gate(encode_column(col), gate, quantize_kernel(kernel))
            assert not sat
            ref = apply_gate_columnwise(np.array(u.data), gate, kernel)[:, j]
            for z, r in zip(fixed, ref):
                assert abs(fx_decode(z.re) - r.real) < 4 * EPS
                assert abs(fx_decode(z.im) - r.imag) < 4 * EPS

    def test_control_bypass_on_basis_column(self):
        col = encode_column(np.eye(8)[:, 0])  # |000>, control bit of any wire is 0
        gate = Gate(GateKind.CX, 0, control=2)
        out, sat = stream_gate(col, gate, quantize_kernel(np.array([[0, 1], [1, 0]])))
        assert out == col and not sat

    def test_length_validation(self):
        with pytest.raises(ValueError):
            stream_gate([FixedComplex(0, 0)] * 3, Gate(GateKind.H, 0), quantize_kernel(np.eye(2)))
        with pytest.raises(ValueError):
            stream_gate([FixedComplex(0, 0)] * 2, Gate(GateKind.H, 1), quantize_kernel(np.eye(2)))


class TestRunChain:
    def test_single_pass_when_chain_fits(self, rng):
        circuit, params = random_circuit(rng, 2, 10, phase=False)
        u = haar_random_unitary(2, seed=5)
        _, _, cyc = run_chain(u, circuit, params)
        assert cyc.passes == 1
        assert not cyc.saturated

    def test_multi_pass_accounting(self, rng):
        circuit, params = random_circuit(rng, 2, 25, phase=False)
        u = haar_random_unitary(2, seed=6)
        cfg = DfeConfig(chain_length=10)
        rep, grad, cyc = run_chain(u, circuit, params, cfg)
        assert cyc.passes == 3
        n_streams = 1 + circuit.param_count
        assert cyc.elements_streamed == 16 * n_streams * 3
        # multi-pass must not change the math
        rep1, grad1, _ = run_chain(u, circuit, params, DfeConfig())
        assert rep.f == rep1.f and np.array_equal(grad, grad1)

    def test_cycle_report_equals_predict_time(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 5))
            circuit, params = random_circuit(rng, n, int(rng.integers(1, 30)), phase=False)
            u = haar_random_unitary(n, seed=int(rng.integers(1 << 30)))
            for lanes in (1, 2, 4):
                cfg = DfeConfig(lanes=lanes, overhead_seconds=0.0)
                _, _, cyc = run_chain(u, circuit, params, cfg)
                assert cyc.predicted_seconds == predict_time(
                    n, circuit.param_count, len(circuit.gates), cfg
                )

    def test_approximate_flag(self, rng):
        c2, p2 = random_circuit(rng, 2, 4, phase=False)
        _, _, cyc = run_chain(haar_random_unitary(2, seed=1), c2, p2)
        assert cyc.approximate
        c5, p5 = random_circuit(rng, 5, 4, phase=False)
        _, _, cyc5 = run_chain(haar_random_unitary(5, seed=1), c5, p5)
        assert not cyc5.approximate

    def test_lane_invariance_bitwise(self, rng):
        circuit, params = random_circuit(rng, 3, 12)
        u = haar_random_unitary(3, seed=9)
        results = []
        for lanes in (1, 2, 4):
            rep, grad, _ = run_chain(u, circuit, params, DfeConfig(lanes=lanes))
            results.append((rep.f, rep.trace_re, grad.tobytes()))
        assert results[0] == results[1] == results[2]

    def test_deterministic_repeat(self, rng):
        circuit, params = random_circuit(rng, 3, 12)
        u = haar_random_unitary(3, seed=10)
        rep1, grad1, _ = run_chain(u, circuit, params)
        rep2, grad2, _ = run_chain(u, circuit, params)
        assert rep1.f == rep2.f and np.array_equal(grad1, grad2)

    def test_cost_close_to_reference(self, rng):
        # six-significant-digit claim, checked at n=5 on random circuits
        for trial in range(20):
            circuit, params = random_circuit(rng, 5, int(rng.integers(5, 25)))
            u = haar_random_unitary(5, seed=int(rng.integers(1 << 30)))
            ref = cost(u, circuit, params).f
            if ref <= 1e-3:
                continue
            rep, _, _ = run_chain(u, circuit, params, want_gradient=False)
            assert abs(rep.f - ref) / ref < 5e-6

    def test_gradient_close_to_reference(self, rng):
        circuit, params = random_circuit(rng, 3, 14)
        u = haar_random_unitary(3, seed=11)
        _, gref = cost_and_gradient(u, circuit, params)
        _, gfix, _ = run_chain(u, circuit, params)
        assert np.max(np.abs(gref - gfix)) < 1e-6

    def test_want_gradient_false(self, rng):
        circuit, params = random_circuit(rng, 2, 6)
        u = haar_random_unitary(2, seed=12)
        rep, grad, cyc = run_chain(u, circuit, params, want_gradient=False)
        assert grad.shape == (0,)
        assert cyc.elements_streamed == 16  # single stream, single pass
        full = run_chain(u, circuit, params)[0]
        assert rep.f == full.f  # cost stream unaffected by gradient streams

    def test_shape_validation(self, rng):
        circuit, params = random_circuit(rng, 2, 4)
        with pytest.raises(ValueError):
            run_chain(haar_random_unitary(3, seed=1), circuit, params)
        with pytest.raises(ValueError):
            run_chain(haar_random_unitary(2, seed=1), circuit, params[:-1])
