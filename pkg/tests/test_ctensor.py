"""Complex linear-algebra primitives: examples and algebraic invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from holoformer import ctensor
from holoformer.errors import ConfigurationError, DimensionError


def cvec(min_size=1, max_size=8):
    return hnp.arrays(
        np.complex128, st.integers(min_size, max_size),
        elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False,
                                    allow_infinity=False),
    )


class TestCdot:
    def test_identity_case(self):
        assert ctensor.cdot([1 + 0j], [1 + 0j]) == 1 + 0j

    def test_unit_rotation(self):
        assert ctensor.cdot([1j], [1 + 0j]) == 1j

    def test_hand_computed(self):
        # (1+i)*conj(1) + 2*conj(1-i) = (1+i) + 2(1+i) = 3+3i
        assert ctensor.cdot([1 + 1j, 2 + 0j], [1 + 0j, 1 - 1j]) == 3 + 3j

    def test_conjugates_second_argument(self):
        a, b = [2 + 1j], [1 + 3j]
        assert ctensor.cdot(a, b) == (2 + 1j) * np.conj(1 + 3j)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            ctensor.cdot([1 + 0j], [1 + 0j, 2 + 0j])
        with pytest.raises(DimensionError):
            ctensor.cdot([], [])

    @settings(max_examples=250, deadline=None)
    @given(cvec())
    def test_self_product_real_nonnegative(self, a):
        z = ctensor.cdot(a, a)
        assert z.imag == 0.0
        assert z.real >= 0.0

    @settings(max_examples=250, deadline=None)
    @given(cvec(), st.floats(-np.pi, np.pi))
    def test_global_rotation_invariance(self, a, theta):
        # relative to the product scale: the result itself may cancel to 0
        b = a[::-1].copy()
        base = ctensor.cdot(a, b)
        rot = ctensor.cdot(a * np.exp(1j * theta), b * np.exp(1j * theta))
        scale = max(1.0, float(np.sum(np.abs(a) * np.abs(b))))
        assert abs(rot - base) / scale < 1e-12

    def test_rotation_invariance_random_sweep(self, rng):
        for _ in range(1000):
            n = rng.integers(1, 9)
            a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            theta = rng.uniform(-np.pi, np.pi)
            base = ctensor.cdot(a, b)
            rot = ctensor.cdot(a * np.exp(1j * theta), b * np.exp(1j * theta))
            scale = max(1.0, float(np.sum(np.abs(a) * np.abs(b))))
            assert abs(rot - base) <= 1e-12 * scale


class TestAngle:
    def test_examples(self):
        assert ctensor.angle(1 + 0j) == 0.0
        assert ctensor.angle(1j) == pytest.approx(np.pi / 2, abs=0)
        assert ctensor.angle(-1 + 0j) == np.pi  # pi, not -pi

    def test_zero_is_zero(self):
        assert ctensor.angle(0j) == 0.0
        assert ctensor.angle(complex(-0.0, -0.0)) == 0.0

    def test_negative_imaginary_zero_branch(self):
        assert ctensor.angle(complex(-1.0, -0.0)) == np.pi

    @settings(max_examples=300, deadline=None)
    @given(st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e6,
                              allow_nan=False, allow_infinity=False))
    def test_range_and_reconstruction(self, z):
        a = ctensor.angle(z)
        assert -np.pi < a <= np.pi
        rebuilt = abs(z) * np.exp(1j * a)
        assert abs(rebuilt - z) <= 1e-12 * abs(z)

    def test_matrix_input(self, rng):
        z = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
        a = ctensor.angle(z)
        assert a.shape == z.shape
        assert np.all(a > -np.pi) and np.all(a <= np.pi)


class TestWrapPhase:
    def test_principal_interval(self):
        assert ctensor.wrap_phase(np.pi) == np.pi
        assert ctensor.wrap_phase(-np.pi) == np.pi
        assert ctensor.wrap_phase(0.0) == 0.0
        assert ctensor.wrap_phase(3 * np.pi / 2) == pytest.approx(-np.pi / 2)

    def test_array(self):
        x = np.array([0.2, 2 * np.pi + 0.2, -2 * np.pi + 0.2])
        np.testing.assert_allclose(ctensor.wrap_phase(x), 0.2, atol=1e-12)


class TestRowSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(ctensor.row_softmax([[0.0, 0.0]]),
                                   [[0.5, 0.5]], atol=0)

    def test_log_weights_identity(self):
        # softmax(log w) = w / sum(w)
        out = ctensor.row_softmax([[np.log(2.0), 0.0]])
        np.testing.assert_allclose(out, [[2 / 3, 1 / 3]], atol=1e-15)

    def test_no_overflow(self):
        out = ctensor.row_softmax([[1000.0, 0.0]])
        assert np.all(np.isfinite(out))
        assert out[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert out[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_rows_sum_to_one_and_shift_invariance(self, rng):
        for _ in range(200):
            w = rng.standard_normal((rng.integers(1, 6), rng.integers(1, 8))) * 10
            s = ctensor.row_softmax(w)
            assert np.all(s >= 0)
            np.testing.assert_allclose(s.sum(axis=-1), 1.0, atol=1e-12)
            shifted = ctensor.row_softmax(w + rng.uniform(-7, 7))
            np.testing.assert_allclose(shifted, s, atol=1e-12)


class TestComplexLayerNorm:
    def test_constant_row_collapses_to_zero(self):
        z = np.full((1, 4), 2.5 + 1.5j)
        out = ctensor.complex_layer_norm(z, np.ones(4), np.zeros(4), eps=1e-12)
        np.testing.assert_allclose(out, 0.0, atol=1e-6)

    def test_symmetric_pair_is_fixed_point(self):
        # mu = 0 and sigma -> 1 as eps -> 0
        z = np.array([[1 + 0j, -1 + 0j]])
        out = ctensor.complex_layer_norm(z, np.ones(2), np.zeros(2), eps=1e-30)
        np.testing.assert_allclose(out, z, atol=1e-12)

    def test_zero_gain_broadcasts_bias(self, rng):
        z = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        bias = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        out = ctensor.complex_layer_norm(z, np.zeros(5), bias, eps=1e-8)
        np.testing.assert_allclose(out, np.broadcast_to(bias, z.shape), atol=0)

    def test_normalizes_mean_and_scale(self, rng):
        z = rng.standard_normal((6, 16)) * 5 + 1j * rng.standard_normal((6, 16))
        out = ctensor.complex_layer_norm(z, np.ones(16), np.zeros(16), eps=1e-12)
        np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(np.mean(np.abs(out) ** 2, axis=-1), 1.0,
                                   rtol=1e-9)

    def test_eps_must_be_positive(self):
        z = np.ones((1, 2), dtype=complex)
        with pytest.raises(ConfigurationError):
            ctensor.complex_layer_norm(z, np.ones(2), np.zeros(2), eps=0.0)

    def test_gain_length_mismatch(self):
        z = np.ones((1, 3), dtype=complex)
        with pytest.raises(DimensionError):
            ctensor.complex_layer_norm(z, np.ones(2), np.zeros(3), eps=1e-8)


class TestFiniteness:
    def test_operations_keep_finite_inputs_finite(self, rng):
        for _ in range(100):
            z = rng.standard_normal((4, 6)) * 100 + 1j * rng.standard_normal((4, 6))
            assert np.all(np.isfinite(ctensor.angle(z)))
            assert np.all(np.isfinite(ctensor.row_softmax(z.real * 50)))
            out = ctensor.complex_layer_norm(z, np.ones(6), np.zeros(6), 1e-8)
            assert np.all(np.isfinite(out.view(np.float64)))
