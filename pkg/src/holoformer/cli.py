"""Command-line experiment harness.

Subcommands: verify | gradcheck | train | eval | robustness | report |
benchmark.  Every command is deterministic given (config, seed); metric
artifacts are JSON with sorted keys, so reruns emit byte-identical files.
Exit codes: 0 success, 1 check/metric failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, evaluate, kernels, theory
from .config import RunConfig
from .errors import ConfigurationError, DataError, HoloformerError, TrainingDiverged
from .model import HoloModel, grad_check_model, load_model, save_model
from .optim import train
from .serialize import (dump_json, dump_jsonl, export_dataset_csv,
                        load_dataset, save_dataset)

USAGE_EXIT = 2
FAIL_EXIT = 1


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON run config (defaults apply if absent)")
    parser.add_argument("--seed", type=int, default=None, help="run seed override")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--ablate", action="append", default=None,
                        choices=["phase_decay", "coherent_sum", "reconstruction"],
                        help="disable one mechanism (repeatable)")


def _load_config(args, **extra) -> RunConfig:
    overrides = {"seed": args.seed, "out_dir": args.out,
                 "ablate": args.ablate}
    overrides.update(extra)
    return RunConfig.load(args.config, overrides)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    reports = theory.run_all(seed=cfg.verify.get("seed", theory.DEFAULT_SEED),
                             trials_scale=float(cfg.verify["trials_scale"]),
                             ablate=cfg.ablate)
    for rep in reports:
        print(rep.line())
        dump_json(out / f"{rep.property_id.lower()}.json", rep.to_dict())
    ok = theory.suite_passed(reports)
    dump_json(out / "verify_summary.json", {
        "pass": ok, "ablate": list(cfg.ablate),
        "properties": {r.property_id: r.passed or r.expected_fail
                       for r in reports},
    })
    if not ok:
        worst = max((r for r in reports if not r.passed),
                    key=lambda r: r.max_violation)
        print(f"FAILED: {worst.property_id} max_violation={worst.max_violation:.3e}")
    return 0 if ok else FAIL_EXIT


def cmd_gradcheck(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    gc = cfg.gradcheck
    tol, h = float(gc["tol"]), float(gc["h"])
    results = []
    ok = True
    for task_kind in ("classification", "regression"):
        for s in range(int(gc["n_seeds"])):
            seed = cfg.seed + s
            rep = _gradcheck_once(task_kind, seed, tol, h)
            results.append({"task": task_kind, "seed": seed,
                            "max_rel_err": rep.max_rel_err, "pass": rep.passed,
                            "per_tensor": rep.per_tensor})
            ok &= rep.passed
            print(f"gradcheck {task_kind} seed={seed}: "
                  f"{'PASS' if rep.passed else 'FAIL'} "
                  f"max_rel_err={rep.max_rel_err:.3e} (tol {tol:g})")
    dump_json(out / "gradcheck.json", {"pass": ok, "tol": tol, "results": results})
    return 0 if ok else FAIL_EXIT


def _gradcheck_once(task_kind: str, seed: int, tol: float, h: float):
    from .model import ModelConfig
    from . import synthdata

    if task_kind == "classification":
        mcfg = ModelConfig(seq_len=4, d_in=2, d_model=8, heads=2, layers=1,
                           d_ff=8, num_classes=3, dropout=0.0,
                           task_kind="classification")
    else:
        mcfg = ModelConfig(seq_len=4, d_in=2, d_model=8, heads=2, layers=1,
                           d_ff=8, dropout=0.0, task_kind="regression",
                           d_out=2, horizon=3)
    model = HoloModel(mcfg, seed=seed)

    def make_batch(k):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0xBA7C, k)))
        x = rng.standard_normal((2, 4, 2)) + 1j * rng.standard_normal((2, 4, 2))
        if task_kind == "classification":
            y = rng.integers(0, 3, size=2)
        else:
            y = rng.standard_normal((2, 3, 2)) + 1j * rng.standard_normal((2, 3, 2))
        return x, y

    x, y = make_batch(0)
    return grad_check_model(model, x, y, tol=tol, h=h,
                            resample_fn=lambda k: make_batch(k + 1))


def _train_once(cfg: RunConfig, quiet: bool = False):
    model = HoloModel(cfg.model_config(), seed=cfg.seed)
    train_ds = cfg.make_dataset("train")
    history = train(model, train_ds, cfg.train_settings())
    if not quiet:
        for rec in history:
            if rec.epoch % 5 == 0 or rec.epoch == len(history) - 1:
                print(f"epoch {rec.epoch:3d}  total {rec.total:.4f}  "
                      f"recon {rec.recon:.4f}  task {rec.task:.4f}  lr {rec.lr:.2e}")
    test_ds = cfg.make_dataset("test")
    metrics = evaluate.evaluate_model(model, test_ds)
    return model, history, test_ds, metrics


def cmd_train(args) -> int:
    cfg = _load_config(args, task=args.task)
    out = _outdir(cfg)
    model, history, test_ds, metrics = _train_once(cfg)
    save_model(out / "checkpoint.ckpt", model)
    dump_jsonl(out / "history.jsonl", [r.to_dict() for r in history])
    dump_json(out / "metrics.json", {
        "task": cfg.task, "seed": cfg.seed, "ablate": list(cfg.ablate),
        "test": metrics, "final_train_loss": history[-1].total if history else None,
    })
    dump_json(out / "config.json", cfg.to_dict())
    if args.export_data:
        save_dataset(out / "test.ds", test_ds)
        export_dataset_csv(out / "test.csv", test_ds)
    print(f"test {metrics['metric_name']}: {metrics['metric']:.4f}")
    print(f"artifacts in {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    model = load_model(args.ckpt)
    if args.data:
        ds = load_dataset(args.data)
    else:
        ds = cfg.make_dataset("test")
    metrics = evaluate.evaluate_model(model, ds)
    dump_json(out / "eval.json", {"ckpt": str(args.ckpt), "metrics": metrics})
    for key in sorted(metrics):
        if isinstance(metrics[key], float):
            print(f"{key}: {metrics[key]:.6f}")
    return 0


def cmd_robustness(args) -> int:
    cfg = _load_config(args)
    if args.noise:
        cfg.robustness["noise"] = args.noise
    if args.grid:
        cfg.robustness["grid"] = [float(v) for v in args.grid.split(",")]
    out = _outdir(cfg)
    model = load_model(args.ckpt)
    ds = load_dataset(args.data) if args.data else cfg.make_dataset("test")
    axis, grid = cfg.robustness_grid()
    rep = evaluate.robustness_sweep(model, ds, axis, grid, seed=cfg.seed)
    dump_json(out / f"robustness_{axis}.json", rep.to_dict())
    print(f"axis={axis} clean {rep.metric_name}={rep.clean_metric:.4f}")
    for lvl, m, rd in zip(rep.grid, rep.metrics, rep.rd_or_ri):
        print(f"  {axis}={lvl:<5g} {rep.metric_name}={m:.4f}  rd/ri={rd:+.2f}%")
    print(f"RAUC={rep.rauc:.4f}")
    return 0


def cmd_report(args) -> int:
    runs_dir = Path(args.runs)
    if not runs_dir.is_dir():
        raise ConfigurationError(f"--runs {runs_dir} is not a directory")
    out = Path(args.out or runs_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    robustness_rows = []
    plot_rows = []
    missing = []
    for run in sorted(p for p in runs_dir.iterdir() if p.is_dir()):
        mfile = run / "metrics.json"
        if not mfile.exists():
            missing.append(run.name)
            continue
        rec = json.loads(mfile.read_text())
        test = rec.get("test", {})
        rows.append({
            "run": run.name, "task": rec.get("task", "?"),
            "seed": rec.get("seed", ""),
            "ablate": "+".join(rec.get("ablate", [])) or "full",
            **{k: test[k] for k in ("accuracy", "macro_f1", "micro_f1",
                                    "mae", "rmse") if k in test},
        })
        for rfile in sorted(run.glob("robustness_*.json")):
            rob = json.loads(rfile.read_text())
            for lvl, metric, rd in zip(rob["grid"], rob["metrics"],
                                       rob["rd_or_ri"]):
                robustness_rows.append({
                    "run": run.name, "axis": rob["axis"], "level": lvl,
                    "metric": metric, "rd_or_ri": rd, "rauc": rob["rauc"],
                })
                plot_rows.append({"x": lvl, "y": metric,
                                  "series": f"{run.name}/{rob['axis']}"})
    if not rows:
        raise DataError(f"no completed runs under {runs_dir}")
    if missing:
        print(f"warning: runs without metrics: {', '.join(missing)}")
    _write_csv(out / "report.csv", rows)
    _write_csv(out / "robustness.csv", robustness_rows)
    _write_csv(out / "plot_data.csv", plot_rows)
    dump_json(out / "tables.json", {"results": rows,
                                    "robustness": robustness_rows})
    print(f"report over {len(rows)} runs written to {out}")
    return 0


def _write_csv(path: Path, rows: list) -> None:
    cols: list = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(c, "")) for c in cols) + "\n")


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    b = cfg.benchmark
    grid = [int(v) for v in (args.grid.split(",") if args.grid else b["t_grid"])]
    result = bench.compare_backends(t_grid=grid, d_k=int(b["d_k"]),
                                    repeats=int(b["repeats"]), seed=cfg.seed)
    result["active_backend"] = kernels.active_backend()
    dump_json(out / "benchmark.json", result)
    for name, rep in result["backends"].items():
        times = " ".join(f"{s*1e3:.3f}ms" for s in rep["seconds"])
        print(f"{name:9s} T={rep['t_grid']} -> {times}  exponent={rep['exponent']:.3f}")
    if "speedup_compiled_over_numpy" in result:
        ratios = " ".join(f"{r:.2f}x" for r in result["speedup_compiled_over_numpy"])
        print(f"compiled speedup over numpy: {ratios}")
    return 0


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holoformer",
        description="Phase-aware attention: training, verification and robustness harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the eight-property verification suite")
    _common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    _common(p)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("train", help="train on a synthetic task")
    _common(p)
    p.add_argument("--task", choices=["classification", "prediction"], default=None)
    p.add_argument("--export-data", action="store_true",
                   help="also write the test dataset container and CSV")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    _common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", help="dataset container (defaults to the config's test set)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("robustness", help="noise sweep with RD/RI and RAUC")
    _common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", help="dataset container (defaults to the config's test set)")
    p.add_argument("--noise", choices=["sigma", "tau"], default=None)
    p.add_argument("--grid", help="comma-separated noise levels starting at 0")
    p.set_defaults(fn=cmd_robustness)

    p = sub.add_parser("report", help="consolidate run directories into tables")
    p.add_argument("--runs", required=True, help="directory of run subdirectories")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("benchmark", help="kernel backend timing and scaling fit")
    _common(p)
    p.add_argument("--grid", help="comma-separated sequence lengths")
    p.set_defaults(fn=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return FAIL_EXIT
    except HoloformerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAIL_EXIT


if __name__ == "__main__":
    sys.exit(main())
