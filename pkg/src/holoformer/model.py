"""Complex encoder with dual-headed decoding and the training objective.

The network embeds a complex sequence, applies stacked phase-aware attention
layers (each: multi-head attention and a split-ReLU complex feed-forward
block, both with residuals and complex layer normalization), then decodes
twice: one head reconstructs the input sequence, the other emits the task
output (class logits or a complex forecast).  The objective is

    total = lambda_recon * L_recon + lambda_task * L_task + lambda_phase * R_phase

with the reconstruction term forced to weight zero under the
``ablate_reconstruction`` flag.  All forward code builds an autodiff graph;
call sites that only need values wrap themselves in ``autodiff.no_grad()``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field, replace

import numpy as np

from . import autodiff as ad
from . import ctensor
from .autodiff import Tensor
from .errors import ConfigurationError, DataError, DimensionError
from .optim import ParamStore

TASK_KINDS = ("classification", "regression")


@dataclass(frozen=True)
class ModelConfig:
    """All hyperparameters and ablation switches of one model."""

    seq_len: int
    d_in: int
    d_model: int = 32
    heads: int = 2
    layers: int = 2
    d_ff: int = 64
    alpha: float = 1.0
    eps: float = 1e-8
    ln_eps: float = 1e-5
    lambda_recon: float = 1.0
    lambda_task: float = 1.0
    lambda_phase: float = 0.01
    task_kind: str = "classification"
    num_classes: int = 4
    d_out: int = 1
    horizon: int = 12
    dropout: float = 0.1
    ablate_phase_decay: bool = False
    ablate_coherent_sum: bool = False
    ablate_reconstruction: bool = False
    magnitude_only: bool = False
    use_positional: bool = True

    def __post_init__(self):
        if min(self.seq_len, self.d_in, self.d_model, self.heads,
               self.layers + 1, self.d_ff) < 1:
            raise ConfigurationError("model dimensions must be positive")
        if self.d_model % self.heads != 0:
            raise ConfigurationError(
                f"d_model={self.d_model} not divisible by heads={self.heads}"
            )
        if self.alpha < 0 or self.eps <= 0 or self.ln_eps <= 0:
            raise ConfigurationError("alpha must be >= 0 and eps/ln_eps > 0")
        if min(self.lambda_recon, self.lambda_task, self.lambda_phase) < 0:
            raise ConfigurationError("loss weights must be >= 0")
        if self.lambda_recon + self.lambda_task <= 0:
            raise ConfigurationError("lambda_recon + lambda_task must be > 0")
        if self.task_kind not in TASK_KINDS:
            raise ConfigurationError(f"unknown task_kind {self.task_kind!r}")
        if self.task_kind == "classification" and self.num_classes < 1:
            raise ConfigurationError("num_classes must be >= 1")
        if self.task_kind == "regression" and min(self.d_out, self.horizon) < 1:
            raise ConfigurationError("d_out and horizon must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must be in [0, 1)")

    @property
    def d_k(self) -> int:
        return self.d_model // self.heads

    @property
    def effective_lambda_recon(self) -> float:
        return 0.0 if self.ablate_reconstruction else self.lambda_recon

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

    def with_ablations(self, names) -> "ModelConfig":
        flags = {}
        for name in names:
            key = f"ablate_{name}"
            if key not in self.__dataclass_fields__:
                raise ConfigurationError(f"unknown ablation {name!r}")
            flags[key] = True
        return replace(self, **flags)


@dataclass
class LossBreakdown:
    """One batch's loss terms; total is the lambda-weighted sum."""

    recon: float
    task: float
    phase_reg: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------------
# building blocks (graph ops; accept Tensors or arrays)
# ----------------------------------------------------------------------

def positional_encoding(seq_len: int, d_model: int) -> np.ndarray:
    """Unit-modulus phasor grid PE[t, k] = exp(j * t * 10000^(-k/d_model))."""
    if seq_len < 1 or d_model < 1:
        raise ConfigurationError("positional encoding dims must be >= 1")
    t = np.arange(seq_len)[:, None]
    omega = 10000.0 ** (-np.arange(d_model)[None, :] / d_model)
    return np.exp(1j * t * omega)


def embed(x, w_e, pe=None) -> Tensor:
    """Project the input sequence into the model width and add positions."""
    x = ad.as_tensor(x)
    w_e = ad.as_tensor(w_e)
    if x.shape[-1] != w_e.shape[0]:
        raise DimensionError(
            f"embed: input dim {x.shape[-1]} != embedding rows {w_e.shape[0]}"
        )
    z = ad.matmul(x, w_e)
    if pe is not None:
        z = ad.add(z, np.asarray(pe, dtype=np.complex128))
    return z


def complex_layer_norm_t(z, gain, bias, eps: float) -> Tensor:
    """Graph version of ctensor.complex_layer_norm (same formula)."""
    z = ad.as_tensor(z)
    mu = ad.tmean(z, axis=-1, keepdims=True)
    centered = ad.sub(z, mu)
    var = ad.tmean(ad.abs2(centered), axis=-1, keepdims=True)
    sigma = ad.sqrt(ad.add(var, eps))
    return ad.add(ad.mul(ad.div(centered, sigma), gain), bias)


def split_relu(z) -> Tensor:
    """ReLU applied independently to real and imaginary parts."""
    z = ad.as_tensor(z)
    return ad.add(ad.relu(ad.real(z)), ad.mul(ad.relu(ad.imag(z)), 1j))


def complex_ffn(z, w1, b1, w2, b2, dropout_p: float = 0.0, rng=None) -> Tensor:
    """Two complex affine maps with a split-ReLU activation between them."""
    z = ad.as_tensor(z)
    h = ad.add(ad.matmul(z, w1), b1)
    a = ad.dropout(split_relu(h), dropout_p, rng)
    return ad.add(ad.matmul(a, w2), b2)


def graph_attention(z, w_q, w_k, w_v, w_o, cfg: ModelConfig,
                    dropout_p: float = 0.0, rng=None, sink: list | None = None) -> Tensor:
    """Multi-head phase-aware attention as a differentiable graph.

    ``z`` is (..., T, d_model); head h lives in columns [h*d_k, (h+1)*d_k) of
    the combined projections.  Mirrors the fused kernels stage for stage so
    the two paths can be cross-checked to machine precision.
    """
    z = ad.as_tensor(z)
    lead = z.shape[:-2]
    T = z.shape[-2]
    H, d_k = cfg.heads, cfg.d_k

    def heads_view(y):
        y = ad.reshape(y, lead + (T, H, d_k))
        return ad.swapaxes(y, -3, -2)  # (..., H, T, d_k)

    q = heads_view(ad.matmul(z, w_q))
    k = heads_view(ad.matmul(z, w_k))
    v = heads_view(ad.matmul(z, w_v))

    corr = ad.matmul(q, ad.conj(ad.swapaxes(k, -1, -2)))
    dphi = ad.angle(corr)
    qn = ad.sqrt(ad.tsum(ad.abs2(q), axis=-1, keepdims=True))
    kn = ad.sqrt(ad.tsum(ad.abs2(k), axis=-1, keepdims=True))
    denom = ad.add(ad.matmul(qn, ad.swapaxes(kn, -1, -2)), cfg.eps)
    sim = ad.div(ad.real(corr), denom)

    scores = ad.mul(sim, 1.0 / np.sqrt(d_k))
    if not cfg.ablate_phase_decay:
        scores = ad.mul(scores, ad.exp(ad.mul(ad.absolute(dphi), -cfg.alpha)))
    weights = ad.dropout(ad.softmax_lastaxis(scores), dropout_p, rng)
    if sink is not None:
        sink.append({"phase_diff": dphi.value, "weights": weights.value})

    if cfg.ablate_coherent_sum:
        mix = weights
    else:
        mix = ad.mul(weights, ad.cis(dphi))
    h = ad.matmul(mix, v)  # (..., H, T, d_k)
    merged = ad.reshape(ad.swapaxes(h, -3, -2), lead + (T, H * d_k))
    return ad.matmul(merged, w_o)


def recon_head(z, w_r, b_r=None) -> Tensor:
    """Complex linear map from the encoded sequence back to the input shape."""
    z = ad.as_tensor(z)
    w_r = ad.as_tensor(w_r)
    if z.shape[-1] != w_r.shape[0]:
        raise DimensionError(
            f"recon head: feature dim {z.shape[-1]} != weight rows {w_r.shape[0]}"
        )
    out = ad.matmul(z, w_r)
    return out if b_r is None else ad.add(out, b_r)


def pool_mean(z) -> Tensor:
    """Mean over the time axis of a (..., T, d) tensor."""
    return ad.tmean(z, axis=-2)


def task_head(z, cfg: ModelConfig, w_t, b_t=None) -> Tensor:
    """Task branch on mean-pooled features.

    Classification: real/imaginary parts concatenated into a real feature
    vector, one real affine map to logits.  Regression: complex affine map,
    reshaped to (..., horizon, d_out).
    """
    pooled = pool_mean(z)
    if cfg.task_kind == "classification":
        feat = ad.concat([ad.real(pooled), ad.imag(pooled)], axis=-1)
        logits = ad.matmul(feat, w_t)
        return logits if b_t is None else ad.add(logits, b_t)
    pred = ad.matmul(pooled, w_t)
    if b_t is not None:
        pred = ad.add(pred, b_t)
    return ad.reshape(pred, pred.shape[:-1] + (cfg.horizon, cfg.d_out))


def recon_loss(x_hat, x) -> Tensor:
    """Mean squared complex error: mean over entries of |x_hat - x|^2."""
    x_hat, x = ad.as_tensor(x_hat), ad.as_tensor(x)
    if x_hat.shape != x.shape:
        raise DimensionError(
            f"recon loss: shapes {x_hat.shape} and {x.shape} differ"
        )
    return ad.tmean(ad.abs2(ad.sub(x_hat, x)))


def task_loss(pred, target, cfg: ModelConfig) -> Tensor:
    """Cross-entropy (natural log, batch mean) or mean squared complex error."""
    pred = ad.as_tensor(pred)
    if cfg.task_kind == "classification":
        labels = np.asarray(target)
        if labels.ndim != 1 or pred.shape[:-1] != labels.shape:
            raise DimensionError(
                f"task loss: logits {pred.shape} vs labels {labels.shape}"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= cfg.num_classes):
            raise DataError(
                f"label out of range [0, {cfg.num_classes}): "
                f"{int(labels.min())}..{int(labels.max())}"
            )
        return ad.neg(ad.tmean(ad.take_rows(ad.log_softmax_lastaxis(pred), labels)))
    target = ad.as_tensor(target)
    if pred.shape != target.shape:
        raise DimensionError(
            f"task loss: prediction {pred.shape} vs target {target.shape}"
        )
    return ad.tmean(ad.abs2(ad.sub(pred, target)))


def phase_reg(z) -> Tensor:
    """Mean L1 of wrapped step-to-step phase differences along time.

    Phases come from the principal angle (zero entries contribute phase 0);
    consecutive differences are wrapped into (-pi, pi] before the L1 so the
    2*pi representation jump is not penalized.  Zero for T == 1.
    """
    z = ad.as_tensor(z)
    T = z.shape[-2]
    if T < 2:
        return Tensor(np.zeros(()))
    phi = ad.angle(z)
    diff_op = (np.eye(T, k=1) - np.eye(T))[:-1]  # (T-1, T) forward differences
    steps = ad.matmul(diff_op, phi)
    return ad.tmean(ad.absolute(ad.wrap_phase(steps)))


def total_loss(recon_val, task_val, phase_val, cfg: ModelConfig):
    """Weighted total as a graph node plus the reported breakdown."""
    lam_r = cfg.effective_lambda_recon
    total = ad.add(
        ad.add(ad.mul(recon_val, lam_r), ad.mul(task_val, cfg.lambda_task)),
        ad.mul(phase_val, cfg.lambda_phase),
    )
    breakdown = LossBreakdown(
        recon=float(recon_val.value), task=float(task_val.value),
        phase_reg=float(phase_val.value),
        total=float(total.value),
    )
    return total, breakdown


# ----------------------------------------------------------------------
# the model
# ----------------------------------------------------------------------

def _cmat(rng: np.random.Generator, rows: int, cols: int, scale: float) -> np.ndarray:
    return (rng.standard_normal((rows, cols))
            + 1j * rng.standard_normal((rows, cols))) * scale


def init_params(cfg: ModelConfig, seed: int) -> ParamStore:
    """Seeded parameter initialization; complex weights have E|w|^2 = 1/fan_in."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xC0DE)))
    store = ParamStore()
    d, dm, dff = cfg.d_in, cfg.d_model, cfg.d_ff

    store.add("embed.w", _cmat(rng, d, dm, np.sqrt(0.5 / d)))
    for i in range(cfg.layers):
        p = f"layers.{i}"
        s = np.sqrt(0.5 / dm)
        store.add(f"{p}.attn.w_q", _cmat(rng, dm, dm, s))
        store.add(f"{p}.attn.w_k", _cmat(rng, dm, dm, s))
        store.add(f"{p}.attn.w_v", _cmat(rng, dm, dm, s))
        store.add(f"{p}.attn.w_o", _cmat(rng, dm, dm, s))
        store.add(f"{p}.ln1.gain", np.ones(dm, dtype=np.complex128))
        store.add(f"{p}.ln1.bias", np.zeros(dm, dtype=np.complex128))
        store.add(f"{p}.ffn.w1", _cmat(rng, dm, dff, np.sqrt(0.5 / dm)))
        store.add(f"{p}.ffn.b1", np.zeros(dff, dtype=np.complex128))
        store.add(f"{p}.ffn.w2", _cmat(rng, dff, dm, np.sqrt(0.5 / dff)))
        store.add(f"{p}.ffn.b2", np.zeros(dm, dtype=np.complex128))
        store.add(f"{p}.ln2.gain", np.ones(dm, dtype=np.complex128))
        store.add(f"{p}.ln2.bias", np.zeros(dm, dtype=np.complex128))
    store.add("recon.w", _cmat(rng, dm, d, np.sqrt(0.5 / dm)))
    store.add("recon.b", np.zeros(d, dtype=np.complex128))
    if cfg.task_kind == "classification":
        store.add("task.w", rng.standard_normal((2 * dm, cfg.num_classes))
                  * np.sqrt(1.0 / (2 * dm)))
        store.add("task.b", np.zeros(cfg.num_classes))
    else:
        out = cfg.horizon * cfg.d_out
        store.add("task.w", _cmat(rng, dm, out, np.sqrt(0.5 / dm)))
        store.add("task.b", np.zeros(out, dtype=np.complex128))
    return store


class HoloModel:
    """Encoder plus dual heads bound to a ParamStore."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        self.params = init_params(cfg, seed)
        self.pe = positional_encoding(cfg.seq_len, cfg.d_model) \
            if cfg.use_positional else None

    # -- forward ------------------------------------------------------
    def ingest(self, x) -> np.ndarray:
        """Apply the ingestion pipeline (optionally discarding phase)."""
        x = np.asarray(x, dtype=np.complex128)
        if self.cfg.magnitude_only:
            x = np.abs(x).astype(np.complex128)
        return x

    def encode(self, x, rng=None, training: bool = False, sink: list | None = None):
        """Embed and run the layer stack; returns the encoded sequence node.

        ``sink``, when given, collects per-layer attention phase differences
        and weights (interpretability logging and locus checks).
        """
        cfg = self.cfg
        p = self.params
        drop = cfg.dropout if training else 0.0
        x = self.ingest(x)
        if x.shape[-2] != cfg.seq_len or x.shape[-1] != cfg.d_in:
            raise DimensionError(
                f"encode: expected (..., {cfg.seq_len}, {cfg.d_in}), got {x.shape}"
            )
        z = embed(x, p["embed.w"], self.pe)
        for i in range(cfg.layers):
            pre = f"layers.{i}"
            attn = graph_attention(
                z, p[f"{pre}.attn.w_q"], p[f"{pre}.attn.w_k"],
                p[f"{pre}.attn.w_v"], p[f"{pre}.attn.w_o"], cfg,
                dropout_p=drop, rng=rng, sink=sink,
            )
            z = complex_layer_norm_t(ad.add(z, attn),
                                     p[f"{pre}.ln1.gain"], p[f"{pre}.ln1.bias"],
                                     cfg.ln_eps)
            ff = complex_ffn(z, p[f"{pre}.ffn.w1"], p[f"{pre}.ffn.b1"],
                             p[f"{pre}.ffn.w2"], p[f"{pre}.ffn.b2"],
                             dropout_p=drop, rng=rng)
            z = complex_layer_norm_t(ad.add(z, ff),
                                     p[f"{pre}.ln2.gain"], p[f"{pre}.ln2.bias"],
                                     cfg.ln_eps)
        return z

    def forward(self, x, rng=None, training: bool = False, sink: list | None = None):
        """Returns (encoded, reconstruction, task output) graph nodes."""
        z = self.encode(x, rng=rng, training=training, sink=sink)
        recon = recon_head(z, self.params["recon.w"], self.params["recon.b"])
        pred = task_head(z, self.cfg, self.params["task.w"], self.params["task.b"])
        return z, recon, pred

    def loss_on_batch(self, x, y, rng=None, training: bool = True):
        """Weighted objective on one batch; also returns the breakdown.

        The reconstruction target is the raw complex input, not the ingested
        view: a magnitude-only model must still try (and provably fail) to
        reproduce the phase it discarded.
        """
        x = np.asarray(x, dtype=np.complex128)
        z, recon, pred = self.forward(x, rng=rng, training=training)
        r = recon_loss(recon, x)
        t = task_loss(pred, y, self.cfg)
        ph = phase_reg(z)
        return total_loss(r, t, ph, self.cfg)

    # -- inference ----------------------------------------------------
    def predict(self, x):
        """Task output values with no graph recording."""
        with ad.no_grad():
            _, _, pred = self.forward(x, training=False)
        return pred.value

    def predict_classes(self, x) -> np.ndarray:
        logits = self.predict(x)
        return np.argmax(logits, axis=-1)

    def reconstruct(self, x):
        with ad.no_grad():
            _, recon, _ = self.forward(x, training=False)
        return recon.value

    def attention_log(self, x) -> list:
        """Per-layer {phase_diff, weights} arrays for one forward pass."""
        sink: list = []
        with ad.no_grad():
            self.forward(x, training=False, sink=sink)
        return sink


# ----------------------------------------------------------------------
# gradient checking and checkpoints
# ----------------------------------------------------------------------

PHASE_LOCUS_MARGIN = 1e-4


def near_phase_locus(model: HoloModel, x, margin: float = PHASE_LOCUS_MARGIN) -> bool:
    """True when any attention phase difference sits within ``margin`` of the
    non-differentiable loci (zero and the +/-pi branch cut)."""
    for layer in model.attention_log(x):
        a = np.abs(layer["phase_diff"])
        if np.any(a < margin) or np.any(np.abs(a - np.pi) < margin):
            return True
    return False


def grad_check_model(model: HoloModel, x, y, tol: float = 1e-5, h: float = 1e-5,
                     resample_fn=None, max_resample: int = 25):
    """Analytic vs central-difference gradients of the full objective.

    Points too close to the phase-difference branch loci are rejected and
    resampled via ``resample_fn(attempt) -> (x, y)``; dropout is disabled
    (the checked function must be deterministic).
    """
    attempt = 0
    while near_phase_locus(model, x) and resample_fn is not None:
        if attempt >= max_resample:
            raise ConfigurationError(
                "could not sample a batch clear of the phase-difference loci")
        x, y = resample_fn(attempt)
        attempt += 1

    arrays = {name: t.value.copy() for name, t in model.params.items()}

    def loss_fn(leaves):
        prev = model.params.bind(leaves)
        try:
            loss, _ = model.loss_on_batch(x, y, rng=None, training=False)
        finally:
            model.params.restore(prev)
        return loss

    return ad.grad_check(loss_fn, arrays, tol=tol, h=h)


def save_model(path, model: HoloModel):
    """Write config + parameters in the binary checkpoint container."""
    from .serialize import save_checkpoint

    header = {"model": model.cfg.to_dict(), "seed": model.seed}
    save_checkpoint(path, header, model.params.arrays())


def load_model(path) -> HoloModel:
    from .serialize import load_checkpoint

    header, tensors = load_checkpoint(path)
    cfg = ModelConfig.from_dict(header["model"])
    m = HoloModel(cfg, seed=int(header.get("seed", 0)))
    m.params.load_arrays(tensors)
    return m
