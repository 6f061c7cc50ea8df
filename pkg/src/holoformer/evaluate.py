"""Classification/regression metrics and robustness sweeps.

Robustness convention: for accuracy-like metrics the per-level summary is
Relative Degradation RD = 100 * (clean - noisy) / clean (positive = worse);
for error-like metrics it is Relative Increase RI = 100 * (noisy - clean) /
clean (positive = worse).  The area-under-curve summary RAUC integrates the
normalized metric (noisy/clean for accuracy, clean/noisy for errors) over
the noise grid with the trapezoid rule and divides by the grid span, so a
perfectly flat profile scores exactly 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError, DataError
from .synthdata import Dataset, NoiseSpec, apply_noise


# ----------------------------------------------------------------------
# classification metrics
# ----------------------------------------------------------------------

def confusion_matrix(y_true, y_pred, num_classes: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise DataError(f"labels {y_true.shape} vs predictions {y_pred.shape}")
    if y_true.size and (min(y_true.min(), y_pred.min()) < 0
                        or max(y_true.max(), y_pred.max()) >= num_classes):
        raise DataError("class index out of range")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def f1_scores(cm: np.ndarray) -> dict:
    """Accuracy plus macro/micro F1 from a confusion matrix.

    Per-class F1 treats empty denominators as 0; micro-F1 uses the global
    true/false positive counts (for single-label tasks it equals accuracy).
    """
    cm = np.asarray(cm, dtype=np.float64)
    n = cm.sum()
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    per_class = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    micro_denom = 2 * tp.sum() + fp.sum() + fn.sum()
    return {
        "accuracy": float(tp.sum() / n) if n else 0.0,
        "macro_f1": float(per_class.mean()) if cm.size else 0.0,
        "micro_f1": float(2 * tp.sum() / micro_denom) if micro_denom else 0.0,
        "per_class_f1": [float(v) for v in per_class],
    }


def classification_metrics(y_true, y_pred, num_classes: int) -> dict:
    return f1_scores(confusion_matrix(y_true, y_pred, num_classes))


def regression_metrics(pred, target) -> dict:
    """MAE and RMSE over the complex error modulus |pred - target|."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise DataError(f"predictions {pred.shape} vs targets {target.shape}")
    err = np.abs(pred - target)
    return {"mae": float(np.mean(err)), "rmse": float(np.sqrt(np.mean(err**2)))}


# ----------------------------------------------------------------------
# model evaluation
# ----------------------------------------------------------------------

def evaluate_model(model, ds: Dataset, batch_size: int = 256) -> dict:
    """Task metrics of a model over a dataset (no graph recording)."""
    n = len(ds)
    preds = []
    with ad.no_grad():
        for start in range(0, n, batch_size):
            x, _ = ds.batch(np.arange(start, min(start + batch_size, n)))
            preds.append(model.predict(x))
    pred = np.concatenate(preds, axis=0)
    if ds.task_kind == "classification":
        out = classification_metrics(ds.targets, np.argmax(pred, axis=-1),
                                     model.cfg.num_classes)
        out["metric"] = out["accuracy"]
        out["metric_name"] = "accuracy"
        out["higher_is_better"] = True
    else:
        out = regression_metrics(pred, ds.targets)
        out["metric"] = out["mae"]
        out["metric_name"] = "mae"
        out["higher_is_better"] = False
    out["n"] = n
    return out


# ----------------------------------------------------------------------
# robustness sweeps
# ----------------------------------------------------------------------

AXES = ("sigma", "tau")


@dataclass
class RobustnessReport:
    """Metric profile over one noise axis plus RD/RI and RAUC summaries."""

    task_kind: str
    axis: str
    grid: list
    metric_name: str
    metrics: list
    clean_metric: float
    rd_or_ri: list
    rauc: float
    seed: int
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "task_kind": self.task_kind, "axis": self.axis, "grid": self.grid,
            "metric_name": self.metric_name, "metrics": self.metrics,
            "clean_metric": self.clean_metric, "rd_or_ri": self.rd_or_ri,
            "rauc": self.rauc, "seed": self.seed, "details": self.details,
        }


def _ratio(metric: float, clean: float, higher_is_better: bool) -> float:
    if higher_is_better:
        return metric / clean if clean != 0 else 1.0
    if metric == 0:
        return 1.0 if clean == 0 else np.inf
    return clean / metric


def rauc_from_profile(grid, metrics, clean: float, higher_is_better: bool) -> float:
    """Span-normalized trapezoidal area of the normalized metric profile."""
    grid = np.asarray(grid, dtype=np.float64)
    ratios = np.array([_ratio(m, clean, higher_is_better) for m in metrics])
    if grid.size == 1:
        return float(ratios[0])
    span = grid[-1] - grid[0]
    return float(np.trapezoid(ratios, grid) / span)


def relative_change(metric: float, clean: float, higher_is_better: bool) -> float:
    """RD for accuracy-like metrics, RI for error-like, in percent."""
    if clean == 0:
        return 0.0
    if higher_is_better:
        return 100.0 * (clean - metric) / clean
    return 100.0 * (metric - clean) / clean


def robustness_sweep(model, ds: Dataset, axis: str, grid, seed: int = 0,
                     batch_size: int = 256) -> RobustnessReport:
    """Evaluate the model on progressively noisier copies of the dataset.

    The grid must start at 0; each level perturbs the same clean inputs with
    a perturbation seed derived from (seed, axis, level index), so reruns
    are reproducible and the level-0 row is the clean evaluation itself.
    """
    if axis not in AXES:
        raise ConfigurationError(f"noise axis must be one of {AXES}")
    grid = [float(g) for g in grid]
    if not grid or grid[0] != 0.0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError(
            "noise grid must start at 0 and increase strictly")
    axis_id = AXES.index(axis)
    metrics = []
    details = []
    clean = None
    hib = None
    name = None
    for i, level in enumerate(grid):
        spec = NoiseSpec(sigma=level if axis == "sigma" else 0.0,
                         tau=level if axis == "tau" else 0.0,
                         seed=int(np.random.SeedSequence(
                             (seed, axis_id, i)).generate_state(1)[0]))
        noisy = ds.with_inputs(apply_noise(ds.inputs, spec))
        res = evaluate_model(model, noisy, batch_size=batch_size)
        if clean is None:
            clean, hib, name = res["metric"], res["higher_is_better"], res["metric_name"]
        metrics.append(res["metric"])
        details.append({k: res[k] for k in res
                        if isinstance(res[k], (int, float, str, bool))})
    rd = [relative_change(m, clean, hib) for m in metrics]
    rauc = rauc_from_profile(grid, metrics, clean, hib)
    return RobustnessReport(ds.task_kind, axis, grid, name, metrics, clean,
                            rd, rauc, seed, details)
