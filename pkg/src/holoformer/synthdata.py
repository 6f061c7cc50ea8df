"""Seeded synthetic tasks and the noise channels used by robustness sweeps.

Two generators:

* phase-offset classification: the class is written entirely in the
  relative phases between channels, while every channel's magnitude is
  drawn from one class-independent law, so the magnitude sequence carries
  no label information at all;
* phasor-sum forecasting: superpositions of complex exponentials with
  random amplitudes, frequencies and phases; the target is the analytic
  continuation of the same phasors.

All generators derive one child seed per sample by mixing the dataset seed
with the sample index, so generation order (or parallel generation) cannot
change the data.

The phase-jitter channel guarantees *bit-identical* magnitudes between the
clean and jittered arrays.  A complex multiply by a unit phasor does not do
that in IEEE arithmetic (about half the entries move by an ulp), so the
rotated entry is reconstructed in polar form with the component pair chosen
so that ``abs()`` lands exactly on the original magnitude; the phase applied
differs from the drawn jitter by at most ~1e-8 radians on adversarial
near-axis entries and by ulps elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError, DimensionError


def sample_rng(seed: int, index: int, tag: int = 0) -> np.random.Generator:
    """Deterministic per-sample generator: seed mixed with the sample index."""
    return np.random.default_rng(np.random.SeedSequence((seed, index, tag)))


@dataclass(frozen=True)
class NoiseSpec:
    """One robustness perturbation: phase jitter sigma and/or amplitude tau."""

    sigma: float = 0.0
    tau: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0 or self.tau < 0:
            raise ConfigurationError("noise levels must be >= 0")


@dataclass
class Dataset:
    """Inputs (n, T, d) complex, targets (labels or complex continuations)."""

    inputs: np.ndarray
    targets: np.ndarray
    task_kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.complex128)
        if len(self.inputs) != len(self.targets):
            raise DataError(
                f"{len(self.inputs)} inputs vs {len(self.targets)} targets"
            )
        if not np.all(np.isfinite(self.inputs.view(np.float64))):
            raise DataError("non-finite entries in inputs")

    def __len__(self) -> int:
        return len(self.inputs)

    def batch(self, idx):
        return self.inputs[idx], self.targets[idx]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx].copy(), self.targets[idx].copy(),
                       self.task_kind, dict(self.meta))

    def with_inputs(self, new_inputs) -> "Dataset":
        return Dataset(new_inputs, self.targets, self.task_kind, dict(self.meta))


# ----------------------------------------------------------------------
# generators
# ----------------------------------------------------------------------

def gen_phase_classification(n: int, seq_len: int = 16, d: int = 4,
                             num_classes: int = 4, seed: int = 0,
                             phase_noise: float = 0.35,
                             freq_range: tuple = (0.05, 0.5),
                             amp_sigma: float = 0.3,
                             sep_scale: float = 2.0,
                             corrupt_prob: float = 0.2,
                             corrupt_boost: float = 2.0) -> Dataset:
    """Classification task where only relative phases are informative.

    Sample i of class k: channel c carries one phasor

        x[t, c] = A_c * exp(j * ((omega + k * dw * c) * t + phi_c + eps[t, c]))

    with dw = 2*pi*sep_scale / (K * T).  The class is a per-channel frequency
    ladder: across the window, channel c accrues a relative phase offset of
    sep_scale * 2*pi*k*c/K against channel 0.  Every per-channel phase phi_c
    is independently uniform, so a single time step carries no class
    information; decoding requires comparing phases across time.  Amplitudes
    A_c are lognormal with one law for all classes and |x[t, c]| == A_c
    exactly, so the magnitude sequence is class-blind by construction.
    ``corrupt_prob`` of the entries are distractors: their phase is replaced
    by uniform junk and their amplitude scaled by ``corrupt_boost``.  The
    corruption law is class-independent, so magnitudes stay uninformative,
    but loud junk rewards attention that discounts phase-mismatched pairs.
    """
    if num_classes < 2:
        raise ConfigurationError(f"need >= 2 classes, got {num_classes}")
    if n < 1 or seq_len < 1 or d < 1:
        raise ConfigurationError("n, seq_len, d must be >= 1")
    if not 0.0 <= corrupt_prob < 1.0:
        raise ConfigurationError("corrupt_prob must be in [0, 1)")
    inputs = np.empty((n, seq_len, d), dtype=np.complex128)
    labels = np.empty(n, dtype=np.int64)
    t = np.arange(seq_len)[:, None]
    chan = np.arange(d)[None, :]
    dw = 2.0 * np.pi * sep_scale / (num_classes * seq_len)
    for i in range(n):
        rng = sample_rng(seed, i)
        k = i % num_classes
        amp = rng.lognormal(mean=0.0, sigma=amp_sigma, size=d)
        phi = rng.uniform(-np.pi, np.pi, size=d)
        omega = rng.uniform(*freq_range)
        eps = rng.normal(0.0, phase_noise, size=(seq_len, d)) if phase_noise > 0 \
            else 0.0
        phase = (omega + k * dw * chan) * t + phi[None, :] + eps
        amp_grid = np.broadcast_to(amp[None, :], (seq_len, d))
        if corrupt_prob > 0:
            junk = rng.uniform(-np.pi, np.pi, size=(seq_len, d))
            mask = rng.random((seq_len, d)) < corrupt_prob
            phase = np.where(mask, junk, phase)
            amp_grid = np.where(mask, corrupt_boost * amp_grid, amp_grid)
        inputs[i] = amp_grid * np.exp(1j * phase)
        labels[i] = k
    meta = {
        "generator": "phase_classification", "n": n, "seq_len": seq_len,
        "d": d, "num_classes": num_classes, "seed": seed,
        "phase_noise": phase_noise, "freq_range": list(freq_range),
        "amp_sigma": amp_sigma, "sep_scale": sep_scale,
        "corrupt_prob": corrupt_prob, "corrupt_boost": corrupt_boost,
    }
    return Dataset(inputs, labels, "classification", meta)


def gen_phasor_prediction(n: int, t_in: int = 12, t_out: int = 12, d: int = 1,
                          n_phasors: int = 3, doppler_range: tuple = (0.1, 1.0),
                          seed: int = 0, speed_scale: float = 1.0,
                          amp_range: tuple = (0.5, 1.5)) -> Dataset:
    """Forecasting task: continue a sum of complex exponentials.

    Each channel holds n_phasors tones A_m * exp(j*(omega_m*t + phi_m)) with
    per-sample draws; inputs are t < t_in, targets the next t_out steps.
    ``speed_scale`` stretches the frequency band to emulate faster dynamics.
    """
    if t_in < 1 or t_out < 1 or n < 1 or d < 1 or n_phasors < 1:
        raise ConfigurationError("n, t_in, t_out, d, n_phasors must be >= 1")
    total = t_in + t_out
    inputs = np.empty((n, t_in, d), dtype=np.complex128)
    targets = np.empty((n, t_out, d), dtype=np.complex128)
    t = np.arange(total)[:, None, None]
    for i in range(n):
        rng = sample_rng(seed, i)
        amp = rng.uniform(*amp_range, size=(n_phasors, d)) / np.sqrt(n_phasors)
        omega = rng.uniform(*doppler_range, size=(n_phasors, d)) * speed_scale
        omega *= rng.choice((-1.0, 1.0), size=(n_phasors, d))
        phi = rng.uniform(-np.pi, np.pi, size=(n_phasors, d))
        series = np.sum(amp * np.exp(1j * (omega * t + phi)), axis=1)
        inputs[i] = series[:t_in]
        targets[i] = series[t_in:]
    meta = {
        "generator": "phasor_prediction", "n": n, "t_in": t_in, "t_out": t_out,
        "d": d, "n_phasors": n_phasors, "doppler_range": list(doppler_range),
        "seed": seed, "speed_scale": speed_scale, "amp_range": list(amp_range),
    }
    return Dataset(inputs, targets, "regression", meta)


def phasor_extrapolate(inputs: np.ndarray, t_out: int) -> np.ndarray:
    """Analytic continuation of single-phasor sequences (the oracle bound).

    Estimates each channel's tone from consecutive-sample ratios and extends
    from the last observation; exact (to rounding) when the channel really
    contains one noiseless phasor.
    """
    x = np.asarray(inputs, dtype=np.complex128)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1] < 2:
        raise DimensionError("need at least 2 time steps to estimate a tone")
    ratios = x[:, 1:, :] / np.where(x[:, :-1, :] == 0, 1.0, x[:, :-1, :])
    omega = np.angle(np.mean(ratios, axis=1))  # (n, d)
    steps = np.arange(1, t_out + 1)[None, :, None]
    last = x[:, -1:, :]
    out = last * np.exp(1j * omega[:, None, :] * steps)
    return out[0] if single else out


# ----------------------------------------------------------------------
# noise channels
# ----------------------------------------------------------------------

def _ulp_walk(y, m, on_real, iters=8):
    """Nudge the chosen component by ulps until abs(y) == m (or give up)."""
    for _ in range(iters):
        cur = np.abs(y)
        bad = cur != m
        if not bad.any():
            break
        step = np.where(cur > m, -np.inf, np.inf)
        nre = np.where(on_real & bad, np.nextafter(y.real, step), y.real)
        nim = np.where(~on_real & bad, np.nextafter(y.imag, step), y.imag)
        y = nre + 1j * nim
    return y


def _np_cabs(re: float, im: float) -> float:
    """numpy's complex modulus (the arbiter the bit-level checks use)."""
    return float(np.abs(np.complex128(complex(re, im))))


def _fix_entry_scalar(m: float, c: float, s: float):
    """Exact-magnitude rotation for one stubborn entry (anchor big, solve small)."""
    re_big = abs(c) >= abs(s)
    big = math.copysign(m * max(abs(c), abs(s)), c if re_big else s)
    small_sign = 1.0 if (s if re_big else c) >= 0 else -1.0
    b = math.sqrt(max((m - abs(big)) * (m + abs(big)), 0.0))
    for _ in range(300):
        re, im = (big, small_sign * b) if re_big else (small_sign * b, big)
        err = m - _np_cabs(re, im)
        if err == 0.0:
            return complex(re, im)
        if err < 0 and b == 0.0:
            big = math.nextafter(big, 0.0)  # the big component alone overshoots
            continue
        if b > math.sqrt(m * abs(err)):
            nb = b + err * m / b  # Newton step on hypot
        else:
            nb = math.sqrt(max(2.0 * m * err + b * b, 0.0))
        if nb < 0.0:
            nb = 0.0
        if nb == b:
            nb = math.nextafter(b, math.inf if err > 0 else 0.0)
        b = nb
    return None


def rotate_preserving_magnitude(x: np.ndarray, eta) -> np.ndarray:
    """Multiply x entrywise by exp(j*eta) while keeping abs(x) bit-identical.

    The rotated entry is rebuilt in polar form: the smaller cartesian
    component is anchored at m*trig and the larger solved from the magnitude,
    then ulp-adjusted until ``abs`` reproduces m exactly.  Entries that dodge
    the vectorized search (a handful per million) get an exact scalar solve;
    anything still unresolved keeps its original bits.
    """
    x = np.asarray(x, dtype=np.complex128)
    eta = np.broadcast_to(np.asarray(eta, dtype=np.float64), x.shape)
    out = x.reshape(-1).copy()
    xf = out.copy()
    ef = eta.reshape(-1)
    m = np.abs(xf)
    nz = np.flatnonzero(m > 0)
    if nz.size == 0:
        return out.reshape(x.shape)
    mm = m[nz]
    ph = np.angle(xf[nz]) + ef[nz]
    c, s = np.cos(ph), np.sin(ph)
    re_big = np.abs(c) >= np.abs(s)
    small0 = np.where(re_big, mm * s, mm * c)
    big_sign = np.where(re_big, c, s)

    # near-axis: the small component shifts the magnitude by < 1/2 ulp
    tiny = np.abs(small0) <= mm * 2.0**-27
    if tiny.any():
        big = np.copysign(mm, big_sign)
        y = np.where(re_big, big, small0) + 1j * np.where(re_big, small0, big)
        t = np.flatnonzero(tiny)
        out[nz[t]] = y[t]
    idx = np.flatnonzero(~tiny)

    # vectorized: sqrt-solve the big component, walk ulps, retry with the
    # anchor nudged on a scale that actually moves the solved component
    nudge = np.spacing(mm) * np.maximum(1.0, mm / (2.0 * np.maximum(np.abs(small0), 1e-300)))
    for k in range(24):
        if idx.size == 0:
            break
        mi = mm[idx]
        dk = (k + 1) // 2 * (1 if k % 2 == 1 else -1)
        anc = np.clip(small0[idx] + dk * nudge[idx], -mi, mi)
        big = np.copysign(
            np.sqrt(np.maximum((mi - np.abs(anc)) * (mi + np.abs(anc)), 0.0)),
            big_sign[idx])
        rb = re_big[idx]
        y = np.where(rb, big, anc) + 1j * np.where(rb, anc, big)
        y = _ulp_walk(y, mi, rb)
        ok = np.abs(y) == mi
        out[nz[idx[ok]]] = y[ok]
        idx = idx[~ok]

    # scalar fallback for the stragglers
    for j in idx:
        fixed = _fix_entry_scalar(float(mm[j]), float(c[j]), float(s[j]))
        if fixed is not None and abs(fixed) == mm[j]:
            out[nz[j]] = fixed
    return out.reshape(x.shape)


def apply_phase_jitter(x: np.ndarray, sigma: float, seed: int = 0,
                       per_token: bool = False) -> np.ndarray:
    """Rotate entries by independent N(0, sigma^2) phases.

    Jitter is drawn per entry by default; ``per_token`` draws one angle per
    time step instead (shared across that step's channels).  Magnitudes are
    preserved bit-exactly; sigma == 0 returns an identical copy.
    """
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    x = np.asarray(x, dtype=np.complex128)
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x7173)))
    if per_token:
        if x.ndim < 2:
            raise DimensionError("per-token jitter needs (..., T, d) input")
        eta = np.repeat(rng.normal(0.0, sigma, size=x.shape[:-1])[..., None],
                        x.shape[-1], axis=-1)
    else:
        eta = rng.normal(0.0, sigma, size=x.shape)
    return rotate_preserving_magnitude(x, eta)


def apply_amplitude_noise(x: np.ndarray, tau: float, seed: int = 0) -> np.ndarray:
    """Scale every entry by (1 + eps), eps ~ N(0, tau^2) real.

    Phases are preserved wherever 1 + eps > 0; tau == 0 returns an identical
    copy.
    """
    if tau < 0:
        raise ConfigurationError(f"tau must be >= 0, got {tau}")
    x = np.asarray(x, dtype=np.complex128)
    if tau == 0:
        return x.copy()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xA120)))
    eps = rng.normal(0.0, tau, size=x.shape)
    return x * (1.0 + eps)


def apply_noise(x: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Phase jitter then amplitude noise, each with its own derived seed."""
    out = apply_phase_jitter(x, spec.sigma, seed=spec.seed)
    return apply_amplitude_noise(out, spec.tau, seed=spec.seed)
