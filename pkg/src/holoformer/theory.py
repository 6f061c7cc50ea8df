"""Executable verification of the attention mechanism's guarantees.

Eight independent checks, each a deterministic randomized experiment that
returns a :class:`CheckReport` with the worst observed violation:

1. zero phase-difference reduction to cosine attention + Gram PSD;
2. global phase equivariance (weights invariant, output covariant);
3. energy bounds, constructive equality, destructive cancellation;
4. strict monotone decrease of scores in phase mismatch;
5/6. aggregation as a precision-weighted mean: softmax/log-precision
   calibration identity, the weighted-mean MLE identity, large-T
   concentration at the 1/sqrt(T) rate, and single-key dominance;
7. Lipschitz stability of the output under phase perturbations, against
   the explicit constant B * (1 + alpha*S/sqrt(d_k) * T/4);
8. the phase-blind reconstruction error floor E[A^2].

Ablation flags run the same suite as negative controls: dropping the phase
gate breaks check 4, dropping coherent superposition breaks check 3 (its
interference equalities), and the suite records those as expected failures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ctensor
from .attention import (AttentionConfig, AttentionTrace, coherent_superpose,
                        correlate, holographic_attention, score, similarity,
                        standard_cosine_attention)

DEFAULT_SEED = 20240201


@dataclass
class CheckReport:
    """Outcome of one property check."""

    property_id: str
    trials: int
    max_violation: float
    bound_used: float
    passed: bool
    seed: int
    expected_fail: bool = False
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property": self.property_id, "trials": int(self.trials),
            "max_violation": float(self.max_violation),
            "bound_used": float(self.bound_used),
            "pass": bool(self.passed), "seed": int(self.seed),
            "expected_fail": bool(self.expected_fail),
            "extras": {k: float(v) for k, v in self.extras.items()},
        }

    def line(self) -> str:
        status = "PASS" if self.passed else (
            "EXPECTED-FAIL" if self.expected_fail else "FAIL")
        return (f"{self.property_id}: {status}  max_violation="
                f"{self.max_violation:.3e}  bound={self.bound_used:.3e}  "
                f"trials={self.trials}")


def _trial_rng(seed: int, prop: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, prop, trial)))


def _random_qkv(rng, T, d, positive=False, scale=1.0):
    if positive:
        mats = [rng.uniform(0.1, 1.0, (T, d)).astype(complex) for _ in range(3)]
    else:
        mats = [(rng.standard_normal((T, d)) + 1j * rng.standard_normal((T, d)))
                * scale for _ in range(3)]
    return mats


def verify_p1(trials: int = 200, tol: float = 1e-12,
              seed: int = DEFAULT_SEED, cfg_flags: dict | None = None) -> CheckReport:
    """Zero phase difference: full mechanism == cosine attention; Gram PSD."""
    flags = cfg_flags or {}
    worst = 0.0
    for k in range(trials):
        rng = _trial_rng(seed, 1, k)
        T = int(rng.integers(1, 9))
        d = int(rng.integers(1, 5))
        q, kk, v = _random_qkv(rng, T, d, positive=True)
        cfg = AttentionConfig(d_k=d, alpha=float(rng.uniform(0.2, 2.0)), **flags)
        h = holographic_attention(q, kk, v, cfg).output
        h_std = standard_cosine_attention(q, kk, v, cfg.eps)
        worst = max(worst, float(np.max(np.abs(h - h_std))))

        # positive semidefiniteness of the real correlation kernel at Q = K
        qq = (rng.standard_normal((T, d)) + 1j * rng.standard_normal((T, d)))
        gram = correlate(qq, qq).real
        eigmin = float(np.linalg.eigvalsh((gram + gram.T) / 2.0).min())
        worst = max(worst, max(0.0, -eigmin))
        for _ in range(4):
            c = rng.standard_normal(T)
            quad = float(c @ gram @ c)
            worst = max(worst, max(0.0, -quad))
    return CheckReport("P1", trials, worst, tol, worst <= tol, seed)


def verify_p2(trials: int = 500, tol: float = 1e-10,
              seed: int = DEFAULT_SEED, cfg_flags: dict | None = None) -> CheckReport:
    """Global rotation: weights invariant, output covariant."""
    flags = cfg_flags or {}
    worst = 0.0
    for k in range(trials):
        rng = _trial_rng(seed, 2, k)
        T = int(rng.integers(1, 9))
        d = int(rng.integers(1, 5))
        q, kk, v = _random_qkv(rng, T, d)
        theta = float(rng.uniform(-np.pi, np.pi))
        cfg = AttentionConfig(d_k=d, alpha=float(rng.uniform(0.2, 2.0)), **flags)
        base = holographic_attention(q, kk, v, cfg)
        rot = holographic_attention(q * np.exp(1j * theta), kk * np.exp(1j * theta),
                                    v * np.exp(1j * theta), cfg)
        worst = max(worst, float(np.max(np.abs(rot.weights - base.weights))))
        h_scale = max(1.0, float(np.max(np.abs(base.output))))
        drift = np.max(np.abs(rot.output - np.exp(1j * theta) * base.output))
        worst = max(worst, float(drift) / h_scale)
    return CheckReport("P2", trials, worst, tol, worst <= tol, seed)


def verify_p3(trials: int = 1000, tol: float = 1e-10,
              seed: int = DEFAULT_SEED, cfg_flags: dict | None = None) -> CheckReport:
    """Energy bounds; aligned values reach equality; anti-phase pairs cancel."""
    flags = cfg_flags or {}
    worst = 0.0
    for k in range(trials):
        rng = _trial_rng(seed, 3, k)
        T = int(rng.integers(2, 9))
        d = int(rng.integers(1, 5))
        q, kk, v = _random_qkv(rng, T, d)
        cfg = AttentionConfig(d_k=d, alpha=float(rng.uniform(0.2, 2.0)), **flags)
        tr = holographic_attention(q, kk, v, cfg)
        vnorms = np.sqrt(np.sum(np.abs(v) ** 2, axis=1))
        hnorms = np.sqrt(np.sum(np.abs(tr.output) ** 2, axis=1))
        convex = tr.weights @ vnorms
        worst = max(worst, float(np.max(hnorms - convex)))        # ||H|| <= sum a||V||
        worst = max(worst, float(np.max(convex - vnorms.max())))  # <= max ||V||

        # constructive interference: align every rotated value for query 0
        u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        u /= np.sqrt(np.sum(np.abs(u) ** 2))
        r = rng.uniform(0.3, 2.0, T)
        v_aligned = r[:, None] * np.exp(-1j * tr.phase_diff[0])[:, None] * u[None, :]
        tr2 = holographic_attention(q, kk, v_aligned, cfg)
        h0 = np.sqrt(np.sum(np.abs(tr2.output[0]) ** 2))
        bound0 = float(tr2.weights[0] @ r)
        worst = max(worst, abs(h0 - bound0))

        # destructive: equal magnitude, opposite phase, uniform weights
        ones = np.ones((2, 1), dtype=complex)
        v2 = np.vstack([u, -u])
        tr3 = holographic_attention(ones, ones, v2, cfg)
        worst = max(worst, float(np.max(np.abs(tr3.output))))
    return CheckReport("P3", trials, worst, tol, worst <= tol, seed)


def verify_p4(grid_size: int = 1000, seed: int = DEFAULT_SEED,
              cfg_flags: dict | None = None) -> CheckReport:
    """Scores strictly decrease in |phase mismatch| (for positive similarity).

    max_violation is the largest consecutive difference along the grid; a
    passing run has every difference strictly negative.  Also exercises the
    additive gate for negative similarities.
    """
    flags = cfg_flags or {}
    bound = -1e-15
    worst = -np.inf
    phi = np.linspace(0.0, np.pi, grid_size)
    n_checked = 0
    for sim_val in (0.1, 0.5, 1.0):
        for alpha in (0.5, 1.0, 2.0):
            for d_k in (1, 4):
                cfg = AttentionConfig(d_k=d_k, alpha=alpha, **flags)
                w = score(np.full((1, grid_size), sim_val),
                          phi[None, :], cfg)[0]
                worst = max(worst, float(np.max(np.diff(w))))
                n_checked += 1
    for sim_val in (-0.5, -0.1):
        cfg = AttentionConfig(d_k=2, alpha=1.0, additive_gate=True, gamma=0.1,
                              **flags)
        w = score(np.full((1, grid_size), sim_val), phi[None, :], cfg)[0]
        worst = max(worst, float(np.max(np.diff(w))))
        n_checked += 1
    return CheckReport("P4", n_checked * (grid_size - 1), worst, bound,
                       worst <= bound, seed)


def verify_p5(trials: int = 200, tol: float = 1e-12,
              seed: int = DEFAULT_SEED) -> CheckReport:
    """Aggregation with precision weights is the weighted-mean MLE.

    Checks the exact weighted-least-squares identity, single-key dominance
    in the near-infinite-precision limit, and the 1/sqrt(T) concentration of
    the aggregate around the shared mean (rate within a factor of 3).
    """
    worst = 0.0
    extras = {}
    for k in range(trials):
        rng = _trial_rng(seed, 56, k)
        T = int(rng.integers(2, 17))
        d = int(rng.integers(1, 5))
        # softmax-path aggregation equals the precision-weighted mean
        mu = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        sig2 = rng.lognormal(0.0, 0.7, T)
        c = float(rng.uniform(-5.0, 5.0))
        noise = (rng.standard_normal((T, d)) + 1j * rng.standard_normal((T, d))) \
            * np.sqrt(sig2 / 2.0)[:, None]
        u = mu[None, :] + noise
        weights = ctensor.row_softmax(np.log(1.0 / sig2)[None, :] + c)[0]
        h = weights @ u
        wls = (1.0 / sig2) @ u / np.sum(1.0 / sig2)
        worst = max(worst, float(np.max(np.abs(h - wls))))

    # dominance: one near-infinite precision pins the mean to its key
    rng = _trial_rng(seed, 56, trials + 1)
    d = 3
    u = rng.standard_normal((8, d)) + 1j * rng.standard_normal((8, d))
    w = np.ones(8)
    w[5] = 1e9
    h = (w / w.sum()) @ u
    dom_err = float(np.max(np.abs(h - u[5])))
    extras["dominance_err"] = dom_err
    worst_dom = max(0.0, dom_err - 1e-6)

    # concentration: error shrinks ~ 1/sqrt(T) from T=16 to T=1024
    errs = {}
    for T in (16, 1024):
        acc = []
        for rep in range(64):
            rng = _trial_rng(seed, 57, T * 1000 + rep)
            mu = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            sig2 = rng.lognormal(0.0, 0.5, T)
            noise = (rng.standard_normal((T, 2)) + 1j * rng.standard_normal((T, 2))) \
                * np.sqrt(sig2 / 2.0)[:, None]
            u = mu[None, :] + noise
            prec = 1.0 / sig2
            h = prec @ u / prec.sum()
            acc.append(np.sqrt(np.sum(np.abs(h - mu) ** 2)))
        errs[T] = float(np.mean(acc))
    expected_ratio = np.sqrt(1024.0 / 16.0)
    measured_ratio = errs[16] / max(errs[1024], 1e-300)
    extras.update(err_T16=errs[16], err_T1024=errs[1024],
                  rate_ratio=measured_ratio, expected_ratio=expected_ratio)
    rate_ok = expected_ratio / 3.0 <= measured_ratio <= expected_ratio * 3.0
    rate_violation = 0.0 if rate_ok else abs(measured_ratio - expected_ratio)

    violation = max(worst, worst_dom, rate_violation)
    return CheckReport("P5", trials, violation, tol,
                       bool(worst <= tol and worst_dom == 0.0 and rate_ok),
                       seed, extras=extras)


def verify_p6(trials: int = 200, tol: float = 1e-12,
              seed: int = DEFAULT_SEED) -> CheckReport:
    """Score calibration: softmax(log w + c) recovers normalized precisions."""
    worst = 0.0
    for k in range(trials):
        rng = _trial_rng(seed, 58, k)
        T = int(rng.integers(2, 17))
        w = rng.uniform(0.1, 10.0, T)
        c = float(rng.uniform(-5.0, 5.0))
        sm = ctensor.row_softmax(np.log(w)[None, :] + c)[0]
        worst = max(worst, float(np.max(np.abs(sm - w / w.sum()))))
    return CheckReport("P6", trials, worst, tol, worst <= tol, seed)


def verify_p5_p6(trials: int = 200, tol: float = 1e-12,
                 seed: int = DEFAULT_SEED) -> CheckReport:
    """Combined MLE + calibration check (the merged form of P5 and P6)."""
    p5 = verify_p5(trials, tol, seed)
    p6 = verify_p6(trials, tol, seed)
    return CheckReport("P5P6", trials, max(p5.max_violation, p6.max_violation),
                       tol, p5.passed and p6.passed, seed,
                       extras={**p5.extras, "p6_violation": p6.max_violation})


def perturbed_output(trace: AttentionTrace, v: np.ndarray, eta: np.ndarray,
                     cfg: AttentionConfig) -> np.ndarray:
    """Recompute the output with the phase-difference set shifted by eta."""
    phases = trace.phase_diff + eta
    w = score(trace.similarity, phases, cfg)
    weights = ctensor.row_softmax(w)
    return coherent_superpose(weights, phases, v,
                              not cfg.ablate_coherent_sum)


def verify_p7(trials: int = 1000, seed: int = DEFAULT_SEED,
              cfg_flags: dict | None = None) -> CheckReport:
    """Phase-perturbation stability against the explicit Lipschitz constant."""
    flags = cfg_flags or {}
    tol = 1e-9
    worst = -np.inf
    tightest = 0.0
    for k in range(trials):
        rng = _trial_rng(seed, 7, k)
        T = int(rng.integers(2, 9))
        d = int(rng.integers(1, 5))
        q, kk, v = _random_qkv(rng, T, d)
        cfg = AttentionConfig(d_k=d, alpha=float(rng.uniform(0.2, 2.0)), **flags)
        tr = holographic_attention(q, kk, v, cfg)
        B = float(np.max(np.sqrt(np.sum(np.abs(v) ** 2, axis=1))))
        S = float(np.max(np.abs(tr.similarity)))
        L = B * (1.0 + cfg.alpha * S / np.sqrt(d) * T / 4.0)
        delta = float(rng.choice((0.01, 0.05, 0.2)))
        eta = rng.uniform(-1.0, 1.0, (T, T))
        eta *= delta / max(np.max(np.abs(eta)), 1e-300)
        h2 = perturbed_output(tr, v, eta, cfg)
        diff = np.sqrt(np.sum(np.abs(h2 - tr.output) ** 2, axis=1))
        worst = max(worst, float(np.max(diff) - L * delta))
        tightest = max(tightest, float(np.max(diff) / delta / max(B, 1e-300)))
    return CheckReport("P7", trials, worst, tol, worst <= tol, seed,
                       extras={"max_ratio_over_B": tightest})


def verify_p8(n_samples: int = 100_000, seed: int = DEFAULT_SEED) -> CheckReport:
    """Phase-blind estimation floor: MSE >= E[A^2]; phase access removes it."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 8)))
    a = rng.rayleigh(scale=1.0, size=n_samples)
    phi = rng.uniform(-np.pi, np.pi, n_samples)
    x = a * np.exp(1j * phi)
    ea2 = float(np.mean(a**2))  # Monte Carlo E[A^2]; exact value 2

    # (a) the zero estimator attains the floor exactly
    zero_mse = float(np.mean(np.abs(x) ** 2))
    ratio = zero_mse / ea2  # identical by algebra; kept as an explicit check
    violation = abs(ratio - 1.0)
    # Monte Carlo convergence of the floor to its closed form
    closed_form_err = abs(ea2 / 2.0 - 1.0)
    violation = max(violation, max(0.0, closed_form_err - 0.02))

    # (b) best amplitude-only estimator: per-quantile-bin conditional means
    order = np.argsort(a, kind="stable")
    bins = np.array_split(order, 32)
    g = np.zeros_like(x)
    for idx in bins:
        g[idx] = x[idx].mean()
    blind_mse = float(np.mean(np.abs(g - x) ** 2))
    violation = max(violation, max(0.0, 0.98 * ea2 - blind_mse) / ea2)

    # (c) a phase-aware linear estimator is unobstructed by the floor
    coef = np.vdot(x, x) / np.vdot(x, x)
    aware_mse = float(np.mean(np.abs(coef * x - x) ** 2))
    violation = max(violation, max(0.0, aware_mse - 0.02 * ea2) / ea2)

    extras = {"E_A2": ea2, "zero_mse": zero_mse, "blind_mse": blind_mse,
              "aware_mse": aware_mse}
    return CheckReport("P8", n_samples, violation, 0.02, violation <= 0.02,
                       seed, extras=extras)


EXPECTED_FAIL = {"phase_decay": ("P4",), "coherent_sum": ("P3",)}


def run_all(seed: int = DEFAULT_SEED, trials_scale: float = 1.0,
            ablate: tuple = ()) -> list:
    """Run the whole suite; ablated runs mark the broken checks expected-fail."""
    flags = {}
    expected = set()
    for name in ablate:
        flags[f"ablate_{name}"] = True
        expected.update(EXPECTED_FAIL.get(name, ()))

    def n(base):
        return max(2, int(base * trials_scale))

    reports = [
        verify_p1(n(200), seed=seed, cfg_flags=flags),
        verify_p2(n(500), seed=seed, cfg_flags=flags),
        verify_p3(n(1000), seed=seed, cfg_flags=flags),
        verify_p4(max(16, int(1000 * trials_scale)), seed=seed, cfg_flags=flags),
        verify_p5(n(200), seed=seed),
        verify_p6(n(200), seed=seed),
        verify_p7(n(1000), seed=seed, cfg_flags=flags),
        verify_p8(max(1000, int(100_000 * trials_scale)), seed=seed),
    ]
    for rep in reports:
        if rep.property_id in expected and not rep.passed:
            rep.expected_fail = True
    return reports


def suite_passed(reports) -> bool:
    """True when every check passed or failed exactly as its ablation predicts."""
    return all(r.passed or r.expected_fail for r in reports)
