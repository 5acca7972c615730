"""Experiment orchestration: config, worker scheduling over sample-index
ranges, checkpoint/resume, report assembly and CSV export.

Workers own private histograms over disjoint contiguous index ranges and
results are merged with commutative sums, so no result depends on worker
count or scheduling order.  Checkpoints are JSON (config hash, next sample
index, all histogram counts) with an embedded checksum.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .invariants import record_batch
from .random_states import MeasureSpec, state_batch
from .stats import (Axis, HistogramPair, JointHistogram, InsufficientData,
                    fit_scale, flatness_test, ratio_with_ci)

# samples per vectorized sub-batch inside a worker
SUB_BATCH = 8192

# record_batch key for each axis label
AXIS_KEYS = {"r_A": "r_a", "R_B": "r_b", "c2_A": "c2_a", "c2_B": "c2_b",
             "c3_A": "c3_a", "c3_B": "c3_b", "C002": "c002"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ConfigHashMismatch(RuntimeError):
    """Checkpoint was written by a different configuration."""


class CorruptCheckpoint(RuntimeError):
    """Checkpoint file failed its checksum."""


@dataclass
class ExperimentConfig:
    dim_a: int
    dim_b: int
    measure: str = "hs"          # "hs" or "induced"
    k: int | None = None         # ancilla dimension; defaults to dim_a*dim_b for hs
    samples: int = 1_000_000
    seed: int = 0
    bins: int = 100
    workers: int = 1
    checkpoint_every: int = 2_000_000
    out_dir: str = "results"
    symmetrize: bool = False

    def __post_init__(self):
        n = self.dim_a * self.dim_b
        if self.dim_a < 1 or self.dim_b < 1 or n < 2:
            raise ConfigError(f"invalid shape {self.dim_a}x{self.dim_b}")
        if self.measure not in ("hs", "induced"):
            raise ConfigError(f"measure must be 'hs' or 'induced', got {self.measure!r}")
        if self.measure == "hs":
            if self.k is None:
                self.k = n
            elif self.k != n:
                raise ConfigError("hs measure fixes k = dim_a*dim_b")
        elif self.k is None or self.k < 1:
            raise ConfigError("induced measure needs an ancilla dimension k >= 1")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")
        if self.symmetrize and self.dim_a != self.dim_b:
            raise ConfigError("symmetrize requires dim_a == dim_b")

    @property
    def n(self) -> int:
        return self.dim_a * self.dim_b

    def measure_spec(self) -> MeasureSpec:
        return MeasureSpec(n=self.n, k=self.k, label=self.measure)

    def axis_labels(self) -> list[str]:
        labels = ["r_A", "R_B", "c2_A", "c2_B"]
        if self.dim_a == 3:
            labels.append("c3_A")
        if self.dim_b == 3:
            labels.append("c3_B")
        if (self.dim_a, self.dim_b) == (2, 2):
            labels.append("C002")
        return labels

    def axes(self) -> dict[str, Axis]:
        return {lb: Axis.default(lb, self.bins) for lb in self.axis_labels()}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "ExperimentConfig":
        merged = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**merged)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), **overrides)

    def config_hash(self) -> str:
        ident = {"dim_a": self.dim_a, "dim_b": self.dim_b, "measure": self.measure,
                 "k": self.k, "samples": self.samples, "seed": self.seed,
                 "bins": self.bins, "symmetrize": self.symmetrize}
        blob = json.dumps(ident, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RunState:
    """Merged accumulation state; next_index is the resume point."""
    next_index: int
    n_total: int
    n_ppt: int
    elapsed: float
    hists: dict[str, HistogramPair]
    joint: JointHistogram

    @classmethod
    def fresh(cls, cfg: ExperimentConfig) -> "RunState":
        axes = cfg.axes()
        return cls(next_index=0, n_total=0, n_ppt=0, elapsed=0.0,
                   hists={lb: HistogramPair(axis=ax) for lb, ax in axes.items()},
                   joint=JointHistogram(axis_x=axes["r_A"], axis_y=axes["R_B"]))


def _range_stats(cfg_dict: dict, start: int, count: int):
    """Histograms for one contiguous sample-index range (runs in a worker)."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    measure = cfg.measure_spec()
    dims = (cfg.dim_a, cfg.dim_b)
    axes = cfg.axes()
    hists = {lb: HistogramPair(axis=ax) for lb, ax in axes.items()}
    joint = JointHistogram(axis_x=axes["r_A"], axis_y=axes["R_B"])
    n_ppt = 0
    pos = start
    end = start + count
    while pos < end:
        take = min(SUB_BATCH, end - pos)
        rhos = state_batch(measure, cfg.seed, pos, take)
        rec = record_batch(rhos, dims)
        ppt = rec["ppt"]
        n_ppt += int(ppt.sum())
        for lb, h in hists.items():
            h.accumulate_many(rec[AXIS_KEYS[lb]], ppt)
        joint.accumulate_many(rec["r_a"], rec["r_b"], ppt)
        pos += take
    return count, n_ppt, hists, joint


def _merge_results(state: RunState, results) -> None:
    for count, n_ppt, hists, joint in results:
        state.n_total += count
        state.n_ppt += n_ppt
        for lb in state.hists:
            state.hists[lb] = state.hists[lb].merge(hists[lb])
        state.joint = state.joint.merge(joint)


def _split_range(start: int, count: int, parts: int) -> list[tuple[int, int]]:
    base, rem = divmod(count, parts)
    out = []
    pos = start
    for i in range(parts):
        c = base + (1 if i < rem else 0)
        if c:
            out.append((pos, c))
        pos += c
    return out


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    n_total: int
    n_ppt: int
    overall: dict
    flatness: dict
    fits: dict
    wall_time: float
    samples_per_sec: float
    hists: dict[str, HistogramPair] = field(repr=False, default=None)
    joint: JointHistogram = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(),
                "config_hash": self.config.config_hash(),
                "n_total": self.n_total, "n_ppt": self.n_ppt,
                "overall": self.overall, "flatness": self.flatness,
                "fits": self.fits, "wall_time": self.wall_time,
                "samples_per_sec": self.samples_per_sec}


def _report_fits(cfg: ExperimentConfig, hists: dict) -> dict:
    """Radial-density model fits where a model is known for the shape."""
    fits = {}
    if cfg.dim_a == 2:
        a, b = 2, 2 * (cfg.dim_b ** 2 - 1)
        try:
            scale, resid = fit_scale(hists["r_A"], a, b)
            fits["r_A"] = {"a": a, "b": b, "range": [0.0, 1.0],
                           "scale": scale, "max_rel_residual": resid}
        except InsufficientData:
            pass
    if cfg.dim_b == 3 and cfg.measure == "hs":
        try:
            scale, resid = fit_scale(hists["R_B"], 7, 32, fit_range=(0.0, 0.5))
            fits["R_B"] = {"a": 7, "b": 32, "range": [0.0, 0.5],
                           "scale": scale, "max_rel_residual": resid}
        except InsufficientData:
            pass
    return fits


def assemble_report(cfg: ExperimentConfig, state: RunState,
                    flatness_min_total: int = 1000) -> ExperimentReport:
    overall = {}
    if state.n_total:
        for level, method in ((0.95, "wilson"), (0.999, "wald")):
            est = ratio_with_ci(state.n_ppt, state.n_total, level, method)
            overall[f"{method}_{level}"] = {"p_hat": est.p_hat, "ci_lo": est.ci_lo,
                                            "ci_hi": est.ci_hi}
    flatness = {}
    for lb, h in state.hists.items():
        try:
            chi2, dof, p = flatness_test(h, min_total=flatness_min_total)
            flatness[lb] = {"chi2": chi2, "dof": dof, "p_value": p}
        except InsufficientData:
            flatness[lb] = None
    rate = state.n_total / state.elapsed if state.elapsed > 0 else 0.0
    return ExperimentReport(config=cfg, n_total=state.n_total, n_ppt=state.n_ppt,
                            overall=overall, flatness=flatness,
                            fits=_report_fits(cfg, state.hists),
                            wall_time=state.elapsed, samples_per_sec=rate,
                            hists=state.hists, joint=state.joint)


def checkpoint_path(out_dir) -> Path:
    return Path(out_dir) / "checkpoint.json"


def save_checkpoint(cfg: ExperimentConfig, state: RunState, path=None) -> Path:
    path = Path(path) if path else checkpoint_path(cfg.out_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"config": cfg.to_dict(), "config_hash": cfg.config_hash(),
               "next_index": state.next_index, "n_total": state.n_total,
               "n_ppt": state.n_ppt, "elapsed": state.elapsed,
               "histograms": {lb: h.to_dict() for lb, h in state.hists.items()},
               "joint": state.joint.to_dict()}
    payload["checksum"] = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload))
    tmp.replace(path)
    return path


def load_checkpoint(path, cfg: ExperimentConfig | None = None
                    ) -> tuple[ExperimentConfig, RunState]:
    """Load a checkpoint; verify checksum and, if cfg is given, its hash."""
    try:
        payload = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, OSError) as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint {path}: {exc}") from exc
    stored = payload.pop("checksum", None)
    actual = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    if stored != actual:
        raise CorruptCheckpoint(f"checksum mismatch in {path}")
    ck_cfg = ExperimentConfig.from_dict(payload["config"])
    if payload["config_hash"] != ck_cfg.config_hash():
        raise CorruptCheckpoint(f"config hash mismatch in {path}")
    if cfg is not None and cfg.config_hash() != payload["config_hash"]:
        raise ConfigHashMismatch(
            "checkpoint was written by a different configuration")
    state = RunState(
        next_index=payload["next_index"], n_total=payload["n_total"],
        n_ppt=payload["n_ppt"], elapsed=payload["elapsed"],
        hists={lb: HistogramPair.from_dict(d)
               for lb, d in payload["histograms"].items()},
        joint=JointHistogram.from_dict(payload["joint"]))
    return ck_cfg, state


def run_experiment(cfg: ExperimentConfig, state: RunState | None = None,
                   stop_after: int | None = None,
                   progress: bool = False) -> ExperimentReport:
    """Run (or continue) the sampling experiment described by cfg.

    stop_after bounds the number of samples processed in this call (used
    for interruption tests); the checkpoint left behind is resumable.
    """
    if state is None:
        state = RunState.fresh(cfg)
    limit = cfg.samples if stop_after is None else min(
        cfg.samples, state.next_index + stop_after)
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    cfg_dict = cfg.to_dict()
    try:
        while state.next_index < limit:
            block = min(cfg.checkpoint_every, limit - state.next_index)
            parts = _split_range(state.next_index, block, cfg.workers)
            t0 = time.perf_counter()
            if pool is None:
                results = [_range_stats(cfg_dict, s, c) for s, c in parts]
            else:
                futures = [pool.submit(_range_stats, cfg_dict, s, c)
                           for s, c in parts]
                results = [f.result() for f in futures]
            _merge_results(state, results)
            state.next_index += block
            state.elapsed += time.perf_counter() - t0
            save_checkpoint(cfg, state)
            if progress:
                rate = state.n_total / max(state.elapsed, 1e-9)
                print(f"  {state.next_index}/{cfg.samples} samples, "
                      f"{state.n_ppt} PPT, {rate:,.0f} samples/s", flush=True)
    finally:
        if pool is not None:
            pool.shutdown()
    return assemble_report(cfg, state)


def export(report: ExperimentReport, out_dir=None) -> list[Path]:
    """Write report.json, per-axis CSVs, the joint CSV and a MANIFEST."""
    out = Path(out_dir if out_dir is not None else report.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _write(name, writer):
        p = out / name
        writer(p)
        written.append(p)

    _write("report.json",
           lambda p: p.write_text(json.dumps(report.to_dict(), indent=2)))
    for lb, h in report.hists.items():
        _write(f"{lb}.csv", h.to_csv)
    joint = report.joint
    if report.config.symmetrize:
        joint = joint.symmetrize()
        _write("R_sym.csv", joint.marginal("x").to_csv)
    _write("joint_r_R.csv", joint.to_csv)
    lines = []
    for p in written:
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        lines.append(f"{digest}  {p.name}")
    manifest = out / "MANIFEST"
    manifest.write_text("\n".join(lines) + "\n")
    written.append(manifest)
    return written
