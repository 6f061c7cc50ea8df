"""Parameter store, Adam, learning-rate schedules and the training loop.

Complex parameters are optimized per real component: Adam's moment buffers
live on the interleaved float64 view of each tensor, so a complex matrix is
simply twice as many real coordinates.  Everything is seeded and runs
single-threaded; two runs with the same (seed, config, dataset) produce
bitwise-identical parameters and histories.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, parameter
from .errors import ConfigurationError, TrainingDiverged


class ParamStore:
    """Named parameter tensors plus matching Adam moment buffers."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        t = parameter(value, name=name)
        self._params[name] = t
        flat = t.value.view(np.float64)
        self._m[name] = np.zeros_like(flat)
        self._v[name] = np.zeros_like(flat)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self) -> dict[str, Tensor]:
        return dict(self._params)

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.value for k, t in self._params.items()}

    def n_real_components(self) -> int:
        return sum(t.value.view(np.float64).size for t in self._params.values())

    def zero_grad(self):
        for t in self._params.values():
            t.grad = None

    def bind(self, tensors: dict) -> dict:
        """Swap in replacement leaf tensors (gradient checking); returns the
        previous mapping so the caller can restore it."""
        prev = self._params
        missing = set(prev) - set(tensors)
        if missing:
            raise ConfigurationError(f"bind missing parameters: {sorted(missing)}")
        self._params = {name: tensors[name] for name in prev}
        return prev

    def restore(self, tensors: dict):
        self._params = tensors

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        for name, t in self._params.items():
            src = np.asarray(arrays[name])
            if src.shape != t.value.shape:
                raise ConfigurationError(
                    f"parameter {name!r}: shape {src.shape} != {t.value.shape}"
                )
            t.value = src.astype(t.value.dtype)
            flat = t.value.view(np.float64)
            self._m[name] = np.zeros_like(flat)
            self._v[name] = np.zeros_like(flat)
        self.step_count = 0


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps_opt: float = 1e-8,
              weight_decay: float = 0.0) -> None:
    """One Adam update with bias correction over every real component.

    Parameters with no gradient this step are left untouched (their moments
    do not advance either).  weight_decay is classic L2-into-gradient.
    """
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in store.items():
        if p.grad is None:
            continue
        g = np.ascontiguousarray(p.grad).view(np.float64).reshape(-1)
        theta = p.value.view(np.float64).reshape(-1)
        if weight_decay != 0.0:
            g = g + weight_decay * theta
        m = store._m[name].reshape(-1)
        v = store._v[name].reshape(-1)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        theta -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps_opt)


# ----------------------------------------------------------------------
# learning-rate schedules
# ----------------------------------------------------------------------

class ConstantLR:
    def __init__(self, lr0: float):
        self.lr0 = lr0

    def epoch_lr(self, epoch: int, last_total: float | None) -> float:
        return self.lr0


class StepDecay:
    """lr0 * gamma ** (epoch // step_size)."""

    def __init__(self, lr0: float, step_size: int = 5, gamma: float = 0.8):
        if step_size < 1:
            raise ConfigurationError("step_size must be >= 1")
        self.lr0 = lr0
        self.step_size = step_size
        self.gamma = gamma

    def epoch_lr(self, epoch: int, last_total: float | None) -> float:
        return self.lr0 * self.gamma ** (epoch // self.step_size)


class PlateauDecay:
    """Multiply lr by ``factor`` when the loss stops improving.

    The monitored quantity is the previous epoch's mean total loss; a plateau
    is ``patience`` consecutive epochs without improving on the best seen.
    """

    def __init__(self, lr0: float, patience: int = 5, factor: float = 0.5,
                 min_lr: float = 1e-6):
        self.lr = lr0
        self.patience = patience
        self.factor = factor
        self.min_lr = min_lr
        self.best = np.inf
        self.stale = 0

    def epoch_lr(self, epoch: int, last_total: float | None) -> float:
        if last_total is not None:
            if last_total < self.best - 1e-12:
                self.best = last_total
                self.stale = 0
            else:
                self.stale += 1
                if self.stale > self.patience:
                    self.lr = max(self.lr * self.factor, self.min_lr)
                    self.stale = 0
        return self.lr


def make_schedule(kind: str, lr0: float, step_size: int = 5, gamma: float = 0.8,
                  patience: int = 5, factor: float = 0.5):
    if kind == "none":
        return ConstantLR(lr0)
    if kind == "step":
        return StepDecay(lr0, step_size=step_size, gamma=gamma)
    if kind == "plateau":
        return PlateauDecay(lr0, patience=patience, factor=factor)
    raise ConfigurationError(f"unknown schedule {kind!r}")


# ----------------------------------------------------------------------
# training loop
# ----------------------------------------------------------------------

@dataclass
class TrainSettings:
    epochs: int = 30
    batch_size: int = 16
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    weight_decay: float = 1e-5
    schedule: str = "step"
    step_size: int = 5
    gamma: float = 0.8
    patience: int = 5
    factor: float = 0.5
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class EpochRecord:
    epoch: int
    recon: float
    task: float
    phase_reg: float
    total: float
    lr: float
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch, "recon": self.recon, "task": self.task,
            "phase_reg": self.phase_reg, "total": self.total, "lr": self.lr,
            "wall_time": self.wall_time,
        }


def _first_nonfinite(model, breakdown) -> str:
    for label, val in (("loss.recon", breakdown.recon),
                       ("loss.task", breakdown.task),
                       ("loss.phase_reg", breakdown.phase_reg),
                       ("loss.total", breakdown.total)):
        if not np.isfinite(val):
            return label
    for name, t in model.params.items():
        if not np.all(np.isfinite(t.value.view(np.float64))):
            return name
        if t.grad is not None and not np.all(np.isfinite(
                np.ascontiguousarray(t.grad).view(np.float64))):
            return f"grad({name})"
    return "loss.total"


def train(model, dataset, settings: TrainSettings):
    """Minimize the model's weighted objective over the dataset.

    Returns the list of per-epoch :class:`EpochRecord`; the model is updated
    in place.  Aborts with :class:`TrainingDiverged` naming the first
    non-finite tensor if the loss leaves the reals.
    """
    n = len(dataset)
    if n == 0:
        raise ConfigurationError("dataset is empty")
    sched = make_schedule(settings.schedule, settings.lr,
                          step_size=settings.step_size, gamma=settings.gamma,
                          patience=settings.patience, factor=settings.factor)
    history: list[EpochRecord] = []
    last_total = None
    for epoch in range(settings.epochs):
        t0 = time.perf_counter()
        lr = sched.epoch_lr(epoch, last_total)
        rng = np.random.default_rng(np.random.SeedSequence((settings.seed, epoch)))
        order = rng.permutation(n) if settings.shuffle else np.arange(n)
        sums = np.zeros(4)
        for start in range(0, n, settings.batch_size):
            idx = order[start:start + settings.batch_size]
            x, y = dataset.batch(idx)
            model.params.zero_grad()
            loss, breakdown = model.loss_on_batch(x, y, rng=rng, training=True)
            if not np.isfinite(breakdown.total):
                raise TrainingDiverged(_first_nonfinite(model, breakdown),
                                       epoch, start // settings.batch_size)
            loss.backward()
            adam_step(model.params, lr, settings.beta1, settings.beta2,
                      settings.eps_opt, settings.weight_decay)
            w = len(idx)
            sums += w * np.array([breakdown.recon, breakdown.task,
                                  breakdown.phase_reg, breakdown.total])
        means = sums / n
        last_total = float(means[3])
        history.append(EpochRecord(
            epoch=epoch, recon=float(means[0]), task=float(means[1]),
            phase_reg=float(means[2]), total=last_total, lr=float(lr),
            wall_time=time.perf_counter() - t0,
        ))
    return history
