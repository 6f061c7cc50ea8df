"""Generators and noise channels: determinism, moments, exactness."""

import numpy as np
import pytest

from holoformer import synthdata as sd
from holoformer.errors import ConfigurationError, DataError


class TestDataset:
    def test_count_mismatch_rejected(self, rng):
        with pytest.raises(DataError):
            sd.Dataset(np.zeros((3, 2, 2), complex), np.zeros(2), "classification")

    def test_nonfinite_rejected(self):
        x = np.zeros((2, 2, 1), complex)
        x[0, 0, 0] = np.nan
        with pytest.raises(DataError):
            sd.Dataset(x, np.zeros(2), "classification")

    def test_batch_and_subset(self, rng):
        x = rng.standard_normal((5, 2, 2)) + 0j
        ds = sd.Dataset(x, np.arange(5), "classification")
        bx, by = ds.batch(np.array([1, 3]))
        assert np.array_equal(bx, x[[1, 3]]) and np.array_equal(by, [1, 3])
        sub = ds.subset(np.array([0, 4]))
        assert len(sub) == 2


class TestPhaseClassification:
    def test_same_seed_bitwise_identical(self):
        a = sd.gen_phase_classification(20, 8, 3, 4, seed=7)
        b = sd.gen_phase_classification(20, 8, 3, 4, seed=7)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.targets, b.targets)

    def test_different_seed_differs(self):
        a = sd.gen_phase_classification(10, 8, 3, 4, seed=1)
        b = sd.gen_phase_classification(10, 8, 3, 4, seed=2)
        assert not np.array_equal(a.inputs, b.inputs)

    def test_balanced_labels(self):
        ds = sd.gen_phase_classification(40, 8, 3, 4, seed=0)
        counts = np.bincount(ds.targets, minlength=4)
        assert np.all(counts == 10)

    def test_magnitudes_constant_over_time_without_corruption(self):
        # |x[t, c]| = A_c: the magnitude carries no temporal structure at all
        ds = sd.gen_phase_classification(30, 12, 4, 4, seed=3, corrupt_prob=0.0)
        mags = np.abs(ds.inputs)
        drift = np.max(mags.max(axis=1) - mags.min(axis=1))
        assert drift < 1e-12

    def test_corruption_scales_amplitude_by_boost(self):
        ds = sd.gen_phase_classification(30, 12, 4, 4, seed=3,
                                         corrupt_prob=0.3, corrupt_boost=2.0)
        mags = np.abs(ds.inputs)
        base = mags.min(axis=1)  # A_c (uncorrupted entries exist w.h.p.)
        ratio = mags / base[:, None, :]
        # every entry is either A_c or 2 A_c
        near_one = np.abs(ratio - 1.0) < 1e-9
        near_two = np.abs(ratio - 2.0) < 1e-9
        assert np.all(near_one | near_two)
        assert near_two.mean() == pytest.approx(0.3, abs=0.05)

    def test_class_conditional_magnitudes_match(self):
        # mean |x| per class within 2% of each other (law is identical)
        ds = sd.gen_phase_classification(4000, 8, 4, 4, seed=11)
        mags = np.abs(ds.inputs).mean(axis=(1, 2))
        per_class = np.array([mags[ds.targets == k].mean() for k in range(4)])
        assert per_class.max() / per_class.min() < 1.02

    def test_amplitude_only_classifier_is_at_chance(self):
        # logistic regression on magnitude features: the Bayes-optimal
        # magnitude-only rule is chance by construction
        ds = sd.gen_phase_classification(5000, 8, 4, 2, seed=23)
        feats = np.abs(ds.inputs).reshape(len(ds), -1)
        feats = (feats - feats.mean(0)) / (feats.std(0) + 1e-9)
        y = np.where(ds.targets == 1, 1.0, -1.0)
        ntr = 4000
        w = np.zeros(feats.shape[1])
        for _ in range(300):
            margin = feats[:ntr] @ w
            grad = -(y[:ntr] / (1 + np.exp(y[:ntr] * margin))) @ feats[:ntr] / ntr
            w -= 0.5 * grad
        acc = np.mean(np.sign(feats[ntr:] @ w) == y[ntr:])
        assert 0.45 <= acc <= 0.55

    def test_invalid_params(self):
        with pytest.raises(ConfigurationError):
            sd.gen_phase_classification(10, 8, 3, 1, seed=0)
        with pytest.raises(ConfigurationError):
            sd.gen_phase_classification(10, 8, 3, 4, seed=0, corrupt_prob=1.0)


class TestPhasorPrediction:
    def test_zero_frequency_constant_sequence(self):
        ds = sd.gen_phasor_prediction(5, t_in=6, t_out=4, d=2, n_phasors=1,
                                      doppler_range=(0.0, 0.0), seed=4)
        for i in range(5):
            assert np.max(np.abs(ds.inputs[i] - ds.inputs[i, :1])) < 1e-12
            assert np.max(np.abs(ds.targets[i] - ds.inputs[i, :1])) < 1e-12

    def test_single_phasor_analytic_continuation(self):
        ds = sd.gen_phasor_prediction(20, t_in=12, t_out=12, d=2, n_phasors=1,
                                      doppler_range=(0.1, 1.0), seed=9)
        pred = sd.phasor_extrapolate(ds.inputs, 12)
        np.testing.assert_allclose(pred, ds.targets, atol=1e-9)

    def test_energy_matches_incoherent_sum(self):
        # E|x|^2 = E[sum_m A_m^2]; amplitudes are U(a,b)/sqrt(M)
        a, b, M = 0.5, 1.5, 3
        ds = sd.gen_phasor_prediction(2000, t_in=8, t_out=1, d=1, n_phasors=M,
                                      doppler_range=(0.1, 1.0), seed=13,
                                      amp_range=(a, b))
        measured = np.mean(np.abs(ds.inputs) ** 2)
        expected = (a * a + a * b + b * b) / 3.0  # M * E[U^2] / M
        assert abs(measured / expected - 1) < 0.03

    def test_speed_scale_stretches_frequencies(self):
        slow = sd.gen_phasor_prediction(50, 12, 12, 1, 1, (0.2, 0.4), seed=1,
                                        speed_scale=1.0)
        fast = sd.gen_phasor_prediction(50, 12, 12, 1, 1, (0.2, 0.4), seed=1,
                                        speed_scale=2.0)

        def mean_step(ds):
            r = ds.inputs[:, 1:, 0] / ds.inputs[:, :-1, 0]
            return np.mean(np.abs(np.angle(r)))

        assert mean_step(fast) > 1.8 * mean_step(slow)

    def test_determinism(self):
        a = sd.gen_phasor_prediction(10, 6, 6, 2, 2, (0.1, 0.5), seed=3)
        b = sd.gen_phasor_prediction(10, 6, 6, 2, 2, (0.1, 0.5), seed=3)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.targets, b.targets)


class TestPhaseJitter:
    def test_zero_sigma_bitwise_copy(self, rng):
        x = rng.standard_normal((20, 5)) + 1j * rng.standard_normal((20, 5))
        out = sd.apply_phase_jitter(x, 0.0, seed=1)
        assert np.array_equal(out, x)
        assert out is not x

    def test_magnitudes_bit_identical(self, rng):
        for sigma in (0.05, 0.1, 0.2, 0.4, 1.0):
            x = (rng.standard_normal((300, 40)) + 1j * rng.standard_normal((300, 40))) \
                * rng.lognormal(0, 1.5, (300, 40))
            out = sd.apply_phase_jitter(x, sigma, seed=5)
            assert np.array_equal(np.abs(out), np.abs(x)), sigma

    def test_zero_entries_stay_zero(self):
        x = np.zeros((4, 4), complex)
        out = sd.apply_phase_jitter(x, 0.3, seed=2)
        assert np.array_equal(out, x)

    def test_jitter_std_matches_sigma(self, rng):
        x = rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)
        out = sd.apply_phase_jitter(x, 0.4, seed=77)
        applied = np.angle(out / x)
        assert 0.39 <= np.std(applied) <= 0.41

    def test_same_seed_same_jitter(self, rng):
        x = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        a = sd.apply_phase_jitter(x, 0.3, seed=9)
        b = sd.apply_phase_jitter(x, 0.3, seed=9)
        assert np.array_equal(a, b)

    def test_commutes_with_global_rotation(self, rng):
        # exact in exact arithmetic (same draws); float rounding only
        x = rng.standard_normal((16, 4)) + 1j * rng.standard_normal((16, 4))
        rot = np.exp(1j * 1.1)
        a = sd.apply_phase_jitter(x * rot, 0.3, seed=4)
        b = rot * sd.apply_phase_jitter(x, 0.3, seed=4)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ConfigurationError):
            sd.apply_phase_jitter(np.ones(3, complex), -0.1)

    def test_per_token_mode_shares_angle_across_channels(self, rng):
        x = rng.standard_normal((10, 6, 4)) + 1j * rng.standard_normal((10, 6, 4))
        out = sd.apply_phase_jitter(x, 0.3, seed=5, per_token=True)
        applied = np.angle(out / x)
        spread = applied.max(axis=-1) - applied.min(axis=-1)
        assert np.max(spread) < 1e-7  # one angle per (sample, t)
        assert np.array_equal(np.abs(out), np.abs(x))


class TestAmplitudeNoise:
    def test_zero_tau_bitwise_copy(self, rng):
        x = rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
        out = sd.apply_amplitude_noise(x, 0.0, seed=1)
        assert np.array_equal(out, x)

    def test_phase_preserved_where_factor_positive(self, rng):
        x = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
        out = sd.apply_amplitude_noise(x, 0.10, seed=3)
        ratio = out / x
        positive = ratio.real > 0
        assert positive.mean() > 0.99
        np.testing.assert_allclose(np.angle(out[positive]) ,
                                   np.angle(x[positive]), atol=1e-12)

    def test_second_moment_inflation(self, rng):
        x = rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)
        out = sd.apply_amplitude_noise(x, 0.10, seed=8)
        ratio = np.mean(np.abs(out) ** 2) / np.mean(np.abs(x) ** 2)
        assert abs(ratio - 1.01) < 0.003

    def test_negative_tau_rejected(self):
        with pytest.raises(ConfigurationError):
            sd.apply_amplitude_noise(np.ones(3, complex), -0.1)


class TestNoiseSpec:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            sd.NoiseSpec(sigma=-1.0)

    def test_apply_combined(self, rng):
        x = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
        spec = sd.NoiseSpec(sigma=0.1, tau=0.05, seed=3)
        out = sd.apply_noise(x, spec)
        assert out.shape == x.shape
        assert not np.array_equal(out, x)
        assert np.array_equal(sd.apply_noise(x, spec), out)  # deterministic
