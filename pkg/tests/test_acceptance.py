"""Acceptance suite: the nine exit criteria, one test per criterion.

Each test prints a single [ACn] PASS/FAIL line (run pytest -s to stream
them).  Training-based criteria share one session-scoped cache of trained
models, so the classification grid (4 variants x 3 seeds) is trained once
and reused by the separation, ablation-ordering and robustness criteria.
"""

import json
import time

import numpy as np
import pytest

from holoformer import bench, evaluate, kernels, theory
from holoformer.attention import AttentionConfig, holographic_attention
from holoformer.cli import main
from holoformer.config import RunConfig
from holoformer.kernels import reference
from holoformer.model import HoloModel, grad_check_model
from holoformer.optim import train
from holoformer.synthdata import phasor_extrapolate

EPOCHS = 30
SEEDS = (0, 1, 2)


def report(tag: str, ok: bool, detail: str):
    print(f"\n[{tag}] {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    assert ok, f"{tag}: {detail}"


def classification_config(seed: int, ablate=(), magnitude_only=False) -> RunConfig:
    raw = {"task": "classification", "seed": seed, "ablate": list(ablate)}
    if magnitude_only:
        raw["model"] = {"magnitude_only": True}
    return RunConfig.from_dict(raw)


@pytest.fixture(scope="session")
def trained():
    """(variant, seed) -> dict with model, test set and accuracy."""
    cache = {}

    def get(variant: str, seed: int):
        key = (variant, seed)
        if key not in cache:
            ablate = () if variant in ("full", "magnitude_only") else (variant,)
            cfg = classification_config(
                seed, ablate, magnitude_only=(variant == "magnitude_only"))
            cfg = RunConfig.from_dict({**cfg.to_dict(),
                                       "optim": {**cfg.optim, "epochs": EPOCHS}})
            model = HoloModel(cfg.model_config(), seed=seed)
            t0 = time.perf_counter()
            train(model, cfg.make_dataset("train"), cfg.train_settings())
            wall = time.perf_counter() - t0
            test = cfg.make_dataset("test")
            acc = evaluate.evaluate_model(model, test)["accuracy"]
            cache[key] = {"model": model, "test": test, "accuracy": acc,
                          "wall": wall}
            print(f"\n  [cache] {variant} seed={seed}: acc={acc:.4f} "
                  f"({wall:.0f}s)", flush=True)
        return cache[key]

    return get


def test_ac1_property_suite():
    t0 = time.perf_counter()
    reports = theory.run_all()
    wall = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and wall <= 60.0
    detail = ("; ".join(f"{r.property_id}={r.max_violation:.2e}"
                        for r in reports) + f"; runtime={wall:.1f}s (<=60)")
    report("AC1", ok, detail)


def test_ac2_gradient_correctness():
    t0 = time.perf_counter()
    worst = 0.0
    for task_kind in ("classification", "regression"):
        for seed in range(5):
            if task_kind == "classification":
                from holoformer.model import ModelConfig
                mcfg = ModelConfig(seq_len=4, d_in=2, d_model=8, heads=2,
                                   layers=1, d_ff=8, num_classes=3,
                                   dropout=0.0)
            else:
                from holoformer.model import ModelConfig
                mcfg = ModelConfig(seq_len=4, d_in=2, d_model=8, heads=2,
                                   layers=1, d_ff=8, dropout=0.0,
                                   task_kind="regression", d_out=2, horizon=3)
            model = HoloModel(mcfg, seed=seed)

            def batch(k, s=seed, kind=task_kind):
                rng = np.random.default_rng(
                    np.random.SeedSequence((s, 0xACCE, k)))
                x = rng.standard_normal((2, 4, 2)) \
                    + 1j * rng.standard_normal((2, 4, 2))
                if kind == "classification":
                    y = rng.integers(0, 3, size=2)
                else:
                    y = rng.standard_normal((2, 3, 2)) \
                        + 1j * rng.standard_normal((2, 3, 2))
                return x, y

            x, y = batch(0)
            rep = grad_check_model(model, x, y, tol=1e-5,
                                   resample_fn=lambda k: batch(k + 1))
            worst = max(worst, rep.max_rel_err)
            assert rep.passed, f"{task_kind} seed {seed}: {rep.summary()}"
    wall = time.perf_counter() - t0
    ok = worst <= 1e-5 and wall <= 120.0
    report("AC2", ok,
           f"max rel err {worst:.2e} (<=1e-5) over 2 tasks x 5 seeds; "
           f"runtime={wall:.1f}s (<=120)")


def test_ac3_oracle_equivalence():
    rng = np.random.default_rng(31415)
    worst = 0.0
    for _ in range(500):
        T = int(rng.integers(1, 9))
        d = int(rng.integers(1, 5))
        q, k, v = [(rng.standard_normal((T, d)) + 1j * rng.standard_normal((T, d)))
                   for _ in range(3)]
        cfg = AttentionConfig(d_k=d, alpha=float(rng.uniform(0.0, 2.0)))
        tr = holographic_attention(q, k, v, cfg)
        ref = reference.attention_loops(q, k, v, cfg.alpha, cfg.eps, cfg.scale,
                                        True, True)
        worst = max(worst, float(np.max(np.abs(tr.output - np.array(ref[5])))))
        worst = max(worst, float(np.max(np.abs(tr.weights - np.array(ref[4])))))
    ok = worst <= 1e-12
    report("AC3", ok, f"max |vectorized - naive loops| = {worst:.2e} (<=1e-12) "
                      f"over 500 instances, backend={kernels.active_backend()}")


def test_ac4_phase_task_separation(trained):
    full = trained("full", 0)
    blind = trained("magnitude_only", 0)
    ok = (full["accuracy"] >= 0.90 and blind["accuracy"] <= 0.30
          and full["wall"] <= 600.0)
    report("AC4", ok,
           f"full acc={full['accuracy']:.4f} (>=0.90, {EPOCHS} epochs, "
           f"{full['wall']:.0f}s<=600s); magnitude-only acc="
           f"{blind['accuracy']:.4f} (<=0.30)")


def test_ac5_ablation_ordering(trained):
    means = {}
    for variant in ("full", "reconstruction", "phase_decay", "coherent_sum"):
        means[variant] = float(np.mean([trained(variant, s)["accuracy"]
                                        for s in SEEDS]))
    ok = (means["full"] > means["reconstruction"]
          > max(means["phase_decay"], means["coherent_sum"])
          and means["full"] - means["coherent_sum"] >= 0.10)
    report("AC5", ok,
           "mean acc over 3 seeds: full={full:.4f} > w/o-recon="
           "{reconstruction:.4f} > max(w/o-decay={phase_decay:.4f}, "
           "w/o-coherent={coherent_sum:.4f}); full - w/o-coherent = "
           "{gap:.3f} (>=0.10)".format(gap=means["full"] - means["coherent_sum"],
                                       **means))


def test_ac6_robustness_direction(trained):
    rds = {"full": [], "phase_decay": []}
    for variant in rds:
        for seed in SEEDS:
            entry = trained(variant, seed)
            rep = evaluate.robustness_sweep(entry["model"], entry["test"],
                                            "sigma", [0.0, 0.1, 0.2, 0.4],
                                            seed=seed)
            rds[variant].append(rep.rd_or_ri[-1])
    mean_full = float(np.mean(rds["full"]))
    mean_ablated = float(np.mean(rds["phase_decay"]))

    # bit-level magnitude preservation of the jitter channel
    ds = trained("full", 0)["test"]
    from holoformer.synthdata import apply_phase_jitter
    jittered = apply_phase_jitter(ds.inputs, 0.4, seed=123)
    bits = bool(np.array_equal(np.abs(jittered), np.abs(ds.inputs)))

    ok = mean_full <= mean_ablated and bits
    report("AC6", ok,
           f"RD@sigma=0.4 mean over 3 seeds: full={mean_full:+.2f}% <= "
           f"w/o-decay={mean_ablated:+.2f}%; |x| bit-preserved={bits}")


def test_ac7_prediction_sanity():
    cfg = RunConfig.from_dict({"task": "prediction", "seed": 0})
    model = HoloModel(cfg.model_config(), seed=0)
    train(model, cfg.make_dataset("train"), cfg.train_settings())
    test = cfg.make_dataset("test")
    metrics = evaluate.evaluate_model(model, test)
    rms = float(np.sqrt(np.mean(np.abs(test.targets) ** 2)))
    oracle_mae = float(np.mean(np.abs(
        phasor_extrapolate(test.inputs, cfg.data["t_out"]) - test.targets)))
    ok = metrics["mae"] <= 0.1 * rms and oracle_mae <= 1e-8
    report("AC7", ok,
           f"model MAE={metrics['mae']:.4f} <= 0.1*RMS={0.1 * rms:.4f}; "
           f"analytic-oracle MAE={oracle_mae:.2e} (~0 lower bound)")


def test_ac8_complexity_scaling():
    rep = bench.scaling_report(t_grid=(64, 128, 256), d_k=64, repeats=7,
                               seed=0)
    p = rep["exponent"]
    ok = 1.7 <= p <= 2.3
    times = " ".join(f"{s*1e3:.2f}ms" for s in rep["seconds"])
    report("AC8", ok, f"forward wall-time fit t = c*T^p: p={p:.3f} in "
                      f"[1.7, 2.3]; T=(64,128,256) -> {times}; "
                      f"backend={rep['backend']}")


def test_ac9_determinism(tmp_path):
    cfg = {
        "task": "classification", "seed": 3,
        "data": {"n": 96, "test_n": 48, "seq_len": 8, "d": 3, "num_classes": 2},
        "model": {"d_model": 8, "heads": 2, "layers": 1, "d_ff": 8,
                  "dropout": 0.1},
        "optim": {"epochs": 2, "batch_size": 16},
        "verify": {"trials_scale": 0.02},
        "gradcheck": {"n_seeds": 1},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "run"

    def run_everything():
        artifacts = {}
        assert main(["train", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert main(["eval", "--ckpt", str(out / "checkpoint.ckpt"),
                     "--config", str(cfg_path), "--out", str(out)]) == 0
        assert main(["robustness", "--ckpt", str(out / "checkpoint.ckpt"),
                     "--config", str(cfg_path), "--out", str(out),
                     "--grid", "0,0.2"]) == 0
        assert main(["verify", "--config", str(cfg_path), "--out",
                     str(out / "verify")]) == 0
        assert main(["gradcheck", "--config", str(cfg_path), "--out",
                     str(out / "gc")]) == 0
        assert main(["report", "--runs", str(tmp_path), "--out",
                     str(out / "rep")]) == 0
        for f in ("checkpoint.ckpt", "metrics.json", "eval.json",
                  "robustness_sigma.json", "verify/verify_summary.json",
                  "verify/p1.json", "gc/gradcheck.json", "rep/report.csv",
                  "rep/plot_data.csv", "rep/tables.json"):
            artifacts[f] = (out / f).read_bytes()
        # history modulo wall-time (a timing, not a metric)
        recs = [json.loads(l) for l in
                (out / "history.jsonl").read_text().strip().splitlines()]
        for r in recs:
            r.pop("wall_time")
        artifacts["history"] = json.dumps(recs).encode()
        return artifacts

    first = run_everything()
    second = run_everything()
    diffs = [k for k in first if first[k] != second[k]]
    ok = not diffs
    report("AC9", ok, "rerun byte-identical over train/eval/robustness/"
                      "verify/gradcheck/report artifacts"
           + ("" if ok else f"; differing: {diffs}"))
