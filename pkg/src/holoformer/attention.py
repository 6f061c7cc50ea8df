"""Phase-aware self-attention.

The mechanism extends cosine attention in two places: pre-softmax scores are
damped by the magnitude of the query-key phase difference, and each value is
rotated into the query's phase frame before the weighted sum, so in-phase
contributions reinforce and anti-phase ones cancel.  Either piece can be
switched off independently for ablation studies.

The full forward pass runs through :mod:`holoformer.kernels` (compiled or
numpy); the stage-by-stage functions here expose the intermediate quantities
the verification suite reasons about.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ctensor, kernels
from .errors import ConfigurationError, DimensionError


@dataclass(frozen=True)
class AttentionConfig:
    """Hyperparameters of one attention instance.

    ``alpha`` is the phase-decay coefficient (fixed, not learned), ``eps``
    guards the similarity denominator against zero-norm rows.  The additive
    gate variant ``sim/sqrt(d_k) - gamma*|dphi|`` keeps the score monotone in
    phase mismatch even for negative similarities; it is off by default.
    """

    d_k: int
    alpha: float = 1.0
    eps: float = 1e-8
    heads: int = 1
    ablate_phase_decay: bool = False
    ablate_coherent_sum: bool = False
    additive_gate: bool = False
    gamma: float = 0.1

    def __post_init__(self):
        if self.d_k < 1:
            raise ConfigurationError(f"d_k must be >= 1, got {self.d_k}")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if self.eps <= 0:
            raise ConfigurationError(f"eps must be > 0, got {self.eps}")
        if self.heads < 1:
            raise ConfigurationError(f"heads must be >= 1, got {self.heads}")

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.d_k)


@dataclass
class AttentionTrace:
    """Every intermediate of one attention evaluation, for inspection.

    correlation[i, j] is the sesquilinear query-key product, phase_diff its
    principal argument, similarity the normalized real part, scores the
    pre-softmax gate output, weights the softmax rows and output the
    coherently superposed values.
    """

    correlation: np.ndarray
    phase_diff: np.ndarray
    similarity: np.ndarray
    scores: np.ndarray
    weights: np.ndarray
    output: np.ndarray


def correlate(q, k) -> np.ndarray:
    """Pairwise sesquilinear products: entry (i, j) = cdot(q_i, k_j)."""
    q = ctensor.as_complex_matrix(q, "Q")
    k = ctensor.as_complex_matrix(k, "K")
    if q.shape[1] != k.shape[1]:
        raise DimensionError(
            f"correlate: feature dims differ, {q.shape[1]} vs {k.shape[1]}"
        )
    return q @ k.conj().T


def similarity(corr, q, k, eps: float) -> np.ndarray:
    """Real cosine-style similarity: Re(corr) over the product of row norms."""
    q = np.asarray(q, dtype=np.complex128)
    k = np.asarray(k, dtype=np.complex128)
    qn = np.sqrt(np.sum(q.real**2 + q.imag**2, axis=1))
    kn = np.sqrt(np.sum(k.real**2 + k.imag**2, axis=1))
    return np.asarray(corr).real / (np.outer(qn, kn) + eps)


def score(sim, phase_diff, cfg: AttentionConfig) -> np.ndarray:
    """Pre-softmax scores: scaled similarity gated by phase mismatch.

    Multiplicative gate by default, additive when cfg.additive_gate is set;
    with ablate_phase_decay the gate disappears entirely.
    """
    sim = np.asarray(sim, dtype=np.float64)
    phase_diff = np.asarray(phase_diff, dtype=np.float64)
    if sim.shape != phase_diff.shape:
        raise DimensionError(
            f"score: shapes {sim.shape} and {phase_diff.shape} differ"
        )
    base = sim * cfg.scale
    if cfg.ablate_phase_decay:
        return base
    if cfg.additive_gate:
        return base - cfg.gamma * np.abs(phase_diff)
    return base * np.exp(-cfg.alpha * np.abs(phase_diff))


def coherent_superpose(weights, phase_diff, v, coherent_sum: bool = True) -> np.ndarray:
    """Weighted sum of values, each rotated by its phase offset.

    With coherent_sum False the rotation is dropped and this is a plain
    convex combination of the rows of ``v``.
    """
    weights = np.asarray(weights, dtype=np.float64)
    phase_diff = np.asarray(phase_diff, dtype=np.float64)
    v = np.asarray(v, dtype=np.complex128)
    if weights.shape != phase_diff.shape or weights.shape[1] != v.shape[0]:
        raise DimensionError(
            f"coherent_superpose: weights {weights.shape}, phases "
            f"{phase_diff.shape}, values {v.shape} are inconsistent"
        )
    if coherent_sum:
        mix = weights * np.exp(1j * phase_diff)
    else:
        mix = weights.astype(np.complex128)
    return mix @ v


def holographic_attention(q, k, v, cfg: AttentionConfig,
                          backend: str | None = None) -> AttentionTrace:
    """Full fused forward pass; returns the complete trace.

    The default multiplicative gate runs on the selected kernel backend; the
    additive-gate variant always composes the numpy stages.
    """
    q = ctensor.as_complex_matrix(q, "Q")
    k = ctensor.as_complex_matrix(k, "K")
    v = ctensor.as_complex_matrix(v, "V")
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise DimensionError(
            f"attention: Q {q.shape}, K {k.shape}, V {v.shape} are inconsistent"
        )
    if cfg.additive_gate:
        corr = correlate(q, k)
        dphi = ctensor.angle(corr)
        sim = similarity(corr, q, k, cfg.eps)
        w = score(sim, dphi, cfg)
        weights = ctensor.row_softmax(w)
        out = coherent_superpose(weights, dphi, v, not cfg.ablate_coherent_sum)
        return AttentionTrace(corr, dphi, sim, w, weights, out)
    parts = kernels.attention_forward(
        q, k, v, cfg.alpha, cfg.eps, cfg.scale,
        not cfg.ablate_phase_decay, not cfg.ablate_coherent_sum,
        backend=backend,
    )
    return AttentionTrace(*parts)


def attention_output(q, k, v, cfg: AttentionConfig,
                     backend: str | None = None) -> np.ndarray:
    """Output-only fused forward pass (the inference hot path).

    Identical arithmetic to :func:`holographic_attention` without building
    the trace; use this when only the attended values matter.
    """
    q = ctensor.as_complex_matrix(q, "Q")
    k = ctensor.as_complex_matrix(k, "K")
    v = ctensor.as_complex_matrix(v, "V")
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise DimensionError(
            f"attention: Q {q.shape}, K {k.shape}, V {v.shape} are inconsistent"
        )
    if cfg.additive_gate:
        return holographic_attention(q, k, v, cfg).output
    return kernels.attention_output(
        q, k, v, cfg.alpha, cfg.eps, cfg.scale,
        not cfg.ablate_phase_decay, not cfg.ablate_coherent_sum,
        backend=backend,
    )


def standard_cosine_attention(q, k, v, eps: float = 1e-8) -> np.ndarray:
    """Baseline: softmax over scaled cosine similarity, no gate, no rotation."""
    q = ctensor.as_complex_matrix(q, "Q")
    k = ctensor.as_complex_matrix(k, "K")
    v = ctensor.as_complex_matrix(v, "V")
    corr = correlate(q, k)
    sim = similarity(corr, q, k, eps)
    weights = ctensor.row_softmax(sim / np.sqrt(q.shape[1]))
    return weights.astype(np.complex128) @ v


@dataclass
class MultiHeadParams:
    """Per-head complex projections plus the output projection.

    w_q/w_k/w_v are lists of d_model x d_k matrices (one per head); w_o is
    d_model x d_model applied to the concatenated head outputs.
    """

    w_q: list = field(default_factory=list)
    w_k: list = field(default_factory=list)
    w_v: list = field(default_factory=list)
    w_o: np.ndarray | None = None

    @classmethod
    def random(cls, rng: np.random.Generator, d_model: int, heads: int):
        if d_model % heads != 0:
            raise ConfigurationError(
                f"d_model={d_model} not divisible by heads={heads}"
            )
        d_k = d_model // heads
        s = 1.0 / np.sqrt(2.0 * d_model)

        def mat(rows, cols):
            return (rng.standard_normal((rows, cols))
                    + 1j * rng.standard_normal((rows, cols))) * s

        return cls(
            w_q=[mat(d_model, d_k) for _ in range(heads)],
            w_k=[mat(d_model, d_k) for _ in range(heads)],
            w_v=[mat(d_model, d_k) for _ in range(heads)],
            w_o=mat(d_model, d_model),
        )

    @classmethod
    def identity(cls, d_model: int):
        eye = np.eye(d_model, dtype=np.complex128)
        return cls(w_q=[eye], w_k=[eye], w_v=[eye], w_o=eye.copy())


def multi_head(x, params: MultiHeadParams, cfg: AttentionConfig,
               backend: str | None = None):
    """Multi-head attention over a T x d_model sequence.

    Each head projects x to queries/keys/values, runs the fused forward, and
    the concatenated head outputs are mixed by the output projection.
    Returns (T x d_model output, list of per-head traces).
    """
    x = ctensor.as_complex_matrix(x, "X")
    d_model = x.shape[1]
    if d_model % cfg.heads != 0:
        raise ConfigurationError(
            f"d_model={d_model} not divisible by heads={cfg.heads}"
        )
    if len(params.w_q) != cfg.heads:
        raise DimensionError(
            f"expected {cfg.heads} head projections, got {len(params.w_q)}"
        )
    traces = []
    outs = []
    for h in range(cfg.heads):
        trace = holographic_attention(
            x @ params.w_q[h], x @ params.w_k[h], x @ params.w_v[h],
            cfg, backend=backend,
        )
        traces.append(trace)
        outs.append(trace.output)
    concat = np.concatenate(outs, axis=1)
    return concat @ params.w_o, traces
