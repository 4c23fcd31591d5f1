"""End-to-end pieces shared by the CLI: the synthetic demo and report assembly."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from dropcal import __version__
from dropcal.binned_metrics import DEFAULT_BINS, Records, reliability_table
from dropcal.formats import dumps, report_table_to_dict, save_dump_array
from dropcal.prob_core import mc_integrate_batch, nll_array
from dropcal.toy_model import SyntheticDataset, ToyNet, TrainConfig, mc_logits, save_checkpoint, train


@dataclass(frozen=True)
class DemoConfig:
    seed: int = 0
    n_classes: int = 3
    sigma: float = 0.9
    train_size: int = 200
    val_size: int = 1000
    test_size: int = 5000
    hidden: int = 16
    dropout_p: float = 0.5
    epochs: int = 600
    batch_size: int = 32
    learning_rate: float = 0.1
    beta: float = 0.0
    passes: int = 25


@dataclass
class DemoResult:
    net: ToyNet
    val_logits: np.ndarray
    val_labels: np.ndarray
    test_logits: np.ndarray
    test_labels: np.ndarray


def run_demo(cfg: DemoConfig) -> DemoResult:
    """Train a toy MC-dropout net on blobs and sample validation/test logits.

    Data, initialization, training and MC sampling each draw from their own
    child of ``SeedSequence(cfg.seed)``.
    """
    seeds = np.random.SeedSequence(cfg.seed).generate_state(6)
    blobs = dict(n_classes=cfg.n_classes, sigma=cfg.sigma)
    train_set = SyntheticDataset.blobs(cfg.train_size, seed=int(seeds[0]), **blobs)
    val_set = SyntheticDataset.blobs(cfg.val_size, seed=int(seeds[1]), **blobs)
    test_set = SyntheticDataset.blobs(cfg.test_size, seed=int(seeds[2]), **blobs)
    net = ToyNet.init(2, cfg.hidden, cfg.n_classes, cfg.dropout_p, seed=int(seeds[3]))
    net = train(net, train_set, TrainConfig(
        epochs=cfg.epochs, batch_size=cfg.batch_size, learning_rate=cfg.learning_rate,
        cp_beta=cfg.beta, seed=int(seeds[4]),
    ))
    val_logits = mc_logits(net, val_set.inputs, cfg.passes, seed=int(seeds[5]))
    test_logits = mc_logits(net, test_set.inputs, cfg.passes, seed=int(seeds[5]) + 1)
    return DemoResult(net, val_logits, val_set.labels, test_logits, test_set.labels)


def write_demo(result: DemoResult, out_dir, cfg: DemoConfig) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "model": out / "model.json",
        "validation": out / "val.jsonl",
        "test": out / "test.jsonl",
        "config": out / "demo_config.json",
    }
    paths["config"].write_text(dumps({"format_version": 1, **asdict(cfg)}), encoding="utf-8")
    save_checkpoint(result.net, paths["model"])
    save_dump_array(paths["validation"], result.val_logits, result.val_labels, prefix="val")
    save_dump_array(paths["test"], result.test_logits, result.test_labels, prefix="test")
    return {k: str(v) for k, v in paths.items()}


def records_at(logits, labels, t: float) -> Records:
    return Records.from_probs(mc_integrate_batch(logits, t), labels)


def build_report(logits, labels, t: float, m_bins: int = DEFAULT_BINS, config=None) -> dict:
    """Uncalibrated (T = 1) versus calibrated (T = t) metrics and tables."""
    raw = records_at(logits, labels, 1.0)
    cal = records_at(logits, labels, t)
    tables = {}
    for name, recs in (("uncalibrated", raw), ("calibrated", cal)):
        tables[name] = {
            axis: report_table_to_dict(reliability_table(recs, m_bins, axis))
            for axis in ("confidence", "uncertainty")
        }
    raw_conf = tables["uncalibrated"]["confidence"]
    cal_conf = tables["calibrated"]["confidence"]
    return {
        "format_version": 1,
        "tool_version": __version__,
        "temperature": float(t),
        "n": int(logits.shape[0]),
        "n_passes": int(logits.shape[1]),
        "n_classes": int(logits.shape[2]),
        "m_bins": int(m_bins),
        "ece_uncalibrated": raw_conf["ece"],
        "ece_calibrated": cal_conf["ece"],
        "uce_uncalibrated": raw_conf["uce"],
        "uce_calibrated": cal_conf["uce"],
        "nll_uncalibrated": nll_array(logits, labels, 1.0),
        "nll_calibrated": nll_array(logits, labels, t),
        "accuracy_uncalibrated": float(raw.correct.mean()),
        "accuracy_calibrated": float(cal.correct.mean()),
        "argmax_changes": int(np.count_nonzero(raw.predicted != cal.predicted)),
        "reliability": tables,
        "config": dict(config or {}),
    }

