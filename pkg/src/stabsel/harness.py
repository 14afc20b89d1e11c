"""Experiment orchestration and aggregate metrics.

A run expands ``configs × replicates × regimes`` into jobs. Each job generates
one dataset, runs the requested regimes and writes one JSON record per grid
point of each regime's free parameter into ``<out>/cells``. File names are
content hashes of the cell key, which makes runs resumable: a regime whose
files all exist is skipped. Metrics are computed from the store afterwards.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import solvers
from .control import (
    Candidate,
    ObjectiveSpec,
    calibrate_lambda,
    calibration_target,
    choose,
    nfp_bound,
    pi_for_bound,
)
from .core import DatasetBundle
from .datagen import DataConfig, generate, scale_config
from .meta import (
    CVConfig,
    SacConfig,
    StabilityConfig,
    SubAlgorithm,
    cross_validate,
    screen_and_clean,
    stability_path,
)
from .solvers import PenaltyConfig

log = logging.getLogger(__name__)

REGIMES = ("baseline", "stability", "stability-joint", "screen-and-clean", "cross-validation")
TARGETS = ("sqrt(0.8K)", "sqrt(0.8Kt)")

DEFAULT_PI_GRID = (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0)
DEFAULT_PI_SAC_GRID = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)


class ExperimentError(RuntimeError):
    """Every cell of a run failed."""


@dataclass(frozen=True)
class ExperimentSpec:
    configs: Tuple[DataConfig, ...]
    replicates: int = 20
    regimes: Tuple[str, ...] = ("baseline", "stability", "cross-validation")
    pi_grid: Tuple[float, ...] = DEFAULT_PI_GRID
    pi_sac_grid: Tuple[float, ...] = DEFAULT_PI_SAC_GRID
    target: str = "sqrt(0.8K)"
    scale: float = 0.2
    master_seed: int = 0
    out_dir: str = "results"
    iterations: int = 50
    subsample_fraction: float = 0.5
    folds: int = 10
    splits: int = 10
    decay: float = 0.98
    baseline_grid: int = 100
    calibration_grid: int = 400
    joint_lambdas: int = 30
    cv_max_grid: int = 400
    l1_weights: Tuple[float, ...] = (0.5, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        for name in ("regimes", "pi_grid", "pi_sac_grid", "l1_weights"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.configs:
            raise ValueError("at least one configuration is required")
        bad = [r for r in self.regimes if r not in REGIMES]
        if bad:
            raise ValueError(f"unknown regimes {bad}; expected a subset of {REGIMES}")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if any(r in self.regimes for r in ("stability", "stability-joint")) and not self.pi_grid:
            raise ValueError("pi grid must be non-empty for stability regimes")
        if any(not (0.5 < p <= 1.0) for p in self.pi_grid):
            raise ValueError("pi grid values must lie in (0.5, 1]")
        if "screen-and-clean" in self.regimes and not self.pi_sac_grid:
            raise ValueError("pi_SaC grid must be non-empty for screen-and-clean")
        if self.baseline_grid < 1 or self.calibration_grid < 1 or self.joint_lambdas < 1:
            raise ValueError("grid lengths must be >= 1")
        if not self.l1_weights:
            raise ValueError("l1_weights must be non-empty")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["configs"] = [c.to_dict() for c in self.configs]
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "ExperimentSpec":
        obj = dict(obj)
        obj["configs"] = tuple(DataConfig.from_dict(c) for c in obj.get("configs", ()))
        known = cls.__dataclass_fields__
        unknown = sorted(set(obj) - set(known))
        if unknown:
            raise ValueError(f"unknown spec fields: {unknown}")
        return cls(**obj)

    def fingerprint(self) -> dict:
        """Settings that affect cell contents (configs, replicates, regimes and out_dir excluded)."""
        d = self.to_dict()
        for k in ("configs", "replicates", "regimes", "out_dir"):
            d.pop(k)
        return d


@dataclass(frozen=True)
class PowerMetricConfig:
    gamma: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")


# ---------------------------------------------------------------------------
# hashing and seeds


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()


def config_id(cfg: DataConfig) -> str:
    d = cfg.to_dict()
    d.pop("seed")
    return _sha(d)[:16]


def job_seeds(master_seed: int, cfg: DataConfig, replicate: int) -> Dict[str, int]:
    """Independent child seeds for one (config, replicate), derived from the master seed only."""
    ss = np.random.SeedSequence([int(master_seed), int(config_id(cfg), 16) & 0xFFFFFFFF, int(replicate)])
    state = ss.generate_state(4)
    return {name: int(v) for name, v in zip(("data", "stability", "sac", "cv"), state)}


def _weights(spec: ExperimentSpec, cfg: DataConfig) -> Tuple[float, ...]:
    return spec.l1_weights if cfg.algorithm == "siol" else (1.0,)


def _grid_size(spec: ExperimentSpec, regime: str) -> int:
    return {
        "baseline": spec.baseline_grid,
        "stability": len(spec.pi_grid),
        "stability-joint": spec.joint_lambdas * len(spec.pi_grid),
        "screen-and-clean": len(spec.pi_sac_grid),
        "cross-validation": 1,
    }[regime]


def cell_key(spec: ExperimentSpec, cfg: DataConfig, replicate: int, regime: str, w: float, point: int) -> dict:
    return {"spec": spec.fingerprint(), "config": config_id(cfg), "replicate": replicate,
            "regime": regime, "l1_weight": w, "point": point}


def cell_path(store: Path, key: dict) -> Path:
    return store / "cells" / f"{key['regime']}-{_sha(key)[:24]}.json"


def _write_atomic(path: Path, record: dict) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        json.dump(record, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# regimes → per-point records


def _pairs(mask: np.ndarray) -> list:
    rows, cols = np.nonzero(mask)
    return [[int(i) + 1, int(j) + 1] for i, j in zip(rows, cols)]


def _tv(mask: np.ndarray, truth: np.ndarray) -> Tuple[int, int]:
    t = int(np.count_nonzero(mask & truth))
    return t, int(np.count_nonzero(mask)) - t


def _point(mask: np.ndarray, truth: np.ndarray, params: dict, **extra) -> dict:
    T, V = _tv(mask, truth)
    rec = {"params": params, "selection": _pairs(mask), "size": T + V, "T": T, "V": V}
    rec.update(extra)
    return rec


def _run_baseline(spec, data, alg, w, truth, seeds):
    lmax = solvers.lambda_max(data, alg, w)
    grid = solvers.lambda_grid(lmax, spec.decay, spec.baseline_grid)
    out = []
    for idx, rep in enumerate(solvers.fit_path(alg, data, grid, w)):
        out.append(_point(rep.coefficients.support_mask(), truth, {"lambda": grid[idx]},
                          converged=bool(rep.converged)))
    return out, len(grid)


def _target(spec: ExperimentSpec, data: DatasetBundle) -> float:
    sh = data.shape
    return calibration_target(sh.n_elements, sh.n_outputs, per_output=spec.target == "sqrt(0.8Kt)")


def _stable_counts(prof, truth) -> list:
    # every element that some pi in (0.5, 1] could select
    rows, cols = np.nonzero(prof.counts * 2 > prof.iterations)
    return [[int(i) + 1, int(j) + 1, int(prof.counts[i, j]), bool(truth[i, j])] for i, j in zip(rows, cols)]


def _run_stability(spec, data, alg, w, truth, seeds):
    cfg = StabilityConfig(spec.subsample_fraction, spec.iterations, 1.0, seeds["stability"])
    lmax = solvers.lambda_max(data, alg, w)
    grid = solvers.lambda_grid(lmax, spec.decay, spec.calibration_grid)
    target = _target(spec, data)
    cal = calibrate_lambda(data, alg, target, grid, cfg, w)
    prof = cal.profile
    K = data.shape.n_elements
    common = {
        "q_hat": prof.q_hat, "iterations": prof.iterations, "failures": prof.failures,
        "target": target, "reached": cal.reached, "calibration_path": [list(p) for p in cal.path],
        "stable_counts": _stable_counts(prof, truth),
    }
    out = []
    for pi in spec.pi_grid:
        out.append(_point(prof.select_mask(pi), truth, {"pi": pi, "lambda": cal.lam},
                          bound=nfp_bound(prof.q_hat, K, pi), **common))
    return out, spec.iterations * len(cal.path)


def _run_joint(spec, data, alg, w, truth, seeds):
    cfg = StabilityConfig(spec.subsample_fraction, spec.iterations, 1.0, seeds["stability"])
    lmax = solvers.lambda_max(data, alg, w)
    grid = solvers.lambda_grid(lmax, spec.decay, spec.joint_lambdas)
    K = data.shape.n_elements
    out = []
    for lam, prof in stability_path(data, alg, grid, cfg, w):
        for pi in spec.pi_grid:
            out.append(_point(prof.select_mask(pi), truth, {"pi": pi, "lambda": lam},
                              bound=nfp_bound(prof.q_hat, K, pi), q_hat=prof.q_hat))
    return out, spec.iterations * len(grid)


def _run_sac(spec, data, alg, w, truth, seeds):
    cfg = SacConfig(spec.splits, spec.folds, 1.0, seeds["sac"], spec.decay, spec.cv_max_grid)
    res = screen_and_clean(data, SubAlgorithm(alg, PenaltyConfig(0.0, w)), cfg)
    full = float(data.shape.n_elements)
    rows, cols = np.nonzero(res.pvalues < full)
    pv = [[int(i) + 1, int(j) + 1, float(res.pvalues[i, j]), bool(truth[i, j])] for i, j in zip(rows, cols)]
    out = []
    for pi in spec.pi_sac_grid:
        out.append(_point(res.select_mask(pi), truth, {"pi_sac": pi}, pvalues=pv,
                          screen_lambdas=list(res.screen_lambdas), warnings=list(res.warnings)))
    return out, res.invocations


def _run_cv(spec, data, alg, w, truth, seeds):
    cv = cross_validate(data, alg, CVConfig(spec.folds, spec.decay, seeds["cv"], spec.cv_max_grid), w)
    rec = _point(cv.selection.to_mask(), truth, {"lambda": cv.lam}, stopped_by=cv.stopped_by,
                 warning=cv.warning, grid_length=len(cv.lambdas))
    return [rec], cv.invocations


_RUNNERS = {
    "baseline": _run_baseline,
    "stability": _run_stability,
    "stability-joint": _run_joint,
    "screen-and-clean": _run_sac,
    "cross-validation": _run_cv,
}


@dataclass
class JobSummary:
    written: int = 0
    skipped: int = 0
    failed: List[str] = field(default_factory=list)
    invocations: int = 0


def run_job(spec: ExperimentSpec, cfg: DataConfig, replicate: int) -> JobSummary:
    """Generate one dataset and run every pending regime on it."""
    store = Path(spec.out_dir)
    (store / "cells").mkdir(parents=True, exist_ok=True)
    summary = JobSummary()
    seeds = job_seeds(spec.master_seed, cfg, replicate)
    todo = []
    for regime in spec.regimes:
        for w in _weights(spec, cfg):
            paths = [cell_path(store, cell_key(spec, cfg, replicate, regime, w, p))
                     for p in range(_grid_size(spec, regime))]
            if all(p.exists() for p in paths):
                summary.skipped += len(paths)
            else:
                todo.append((regime, w, paths))
    if not todo:
        return summary
    try:
        data = generate(cfg, seed=seeds["data"])
    except Exception as exc:  # noqa: BLE001 - a cell failure must not stop the run
        log.error("data generation failed for %s replicate %d: %s", cfg.name(), replicate, exc)
        summary.failed.extend(f"{r}@w={w}: {exc}" for r, w, _ in todo)
        return summary
    truth = data.truth_mask
    cid = config_id(cfg)
    for regime, w, paths in todo:
        try:
            records, calls = _RUNNERS[regime](spec, data, cfg.algorithm, w, truth, seeds)
        except Exception as exc:  # noqa: BLE001
            log.error("%s failed on %s replicate %d (w=%g): %s", regime, cfg.name(), replicate, w, exc)
            summary.failed.append(f"{regime}@w={w}: {exc}")
            continue
        if len(records) != len(paths):
            raise AssertionError(f"{regime} produced {len(records)} points, expected {len(paths)}")
        summary.invocations += calls
        for point, (rec, path) in enumerate(zip(records, paths)):
            rec.update({
                "regime": regime, "algorithm": cfg.algorithm, "config": cfg.to_dict(), "config_id": cid,
                "matrix_type": cfg.matrix_type, "replicate": replicate, "l1_weight": w, "point": point,
                "n_true": int(truth.sum()), "K": int(truth.size), "seeds": seeds,
                "invocations": calls,
            })
            _write_atomic(path, rec)
            summary.written += 1
    return summary


def _job(args):
    spec, ci, rep = args
    return run_job(spec, spec.configs[ci], rep)


@dataclass
class RunSummary:
    written: int
    skipped: int
    failed: List[str]
    invocations: int
    cells: int

    @property
    def status(self) -> str:
        if not self.failed:
            return "ok"
        return "failed" if self.written + self.skipped == 0 else "partial"


def expected_cells(spec: ExperimentSpec) -> int:
    total = 0
    for cfg in spec.configs:
        per = sum(_grid_size(spec, r) for r in spec.regimes) * len(_weights(spec, cfg))
        total += per * spec.replicates
    return total


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> RunSummary:
    """Run (or resume) an experiment; returns counts of written, skipped and failed cells.

    ``spec.scale`` is applied to every configuration before generation.
    Raises :class:`ExperimentError` when every job fails.
    """
    scaled = replace(spec, configs=tuple(scale_config(c, spec.scale) for c in spec.configs), scale=1.0)
    store = Path(spec.out_dir)
    store.mkdir(parents=True, exist_ok=True)
    jobs = [(scaled, ci, rep) for ci in range(len(scaled.configs)) for rep in range(spec.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    failed = [f"{scaled.configs[ci].name()} r{rep}: {msg}" for (_, ci, rep), res in zip(jobs, results)
              for msg in res.failed]
    summary = RunSummary(sum(r.written for r in results), sum(r.skipped for r in results), failed,
                         sum(r.invocations for r in results), expected_cells(scaled))
    manifest = {
        "spec": spec.to_dict(),
        "configs": [{"config_id": config_id(c), "config": c.to_dict()} for c in scaled.configs],
        "expected_cells": summary.cells,
        "failed": failed,
    }
    _write_atomic(store / "manifest.json", manifest)
    if failed and summary.written + summary.skipped == 0:
        raise ExperimentError(f"all cells failed; first error: {failed[0]}")
    return summary


# ---------------------------------------------------------------------------
# loading


def load_store(store) -> List[dict]:
    """All cell records, sorted by (config, regime, l1_weight, replicate, point)."""
    cells = Path(store) / "cells"
    if not cells.is_dir():
        raise FileNotFoundError(f"no result store at {store}")
    recs = []
    for p in sorted(cells.glob("*.json")):
        with open(p) as fh:
            recs.append(json.load(fh))
    recs.sort(key=lambda r: (r["config_id"], r["regime"], r["l1_weight"], r["replicate"], r["point"]))
    return recs


def group_records(records: Iterable[dict]) -> Dict[Tuple[str, str, float], Dict[int, List[dict]]]:
    """Index records as ``{(config_id, regime, l1_weight): {replicate: [records by point]}}``."""
    out: Dict[Tuple[str, str, float], Dict[int, List[dict]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        out[(r["config_id"], r["regime"], r["l1_weight"])][r["replicate"]].append(r)
    for reps in out.values():
        for lst in reps.values():
            lst.sort(key=lambda r: r["point"])
    return {k: dict(v) for k, v in out.items()}


# ---------------------------------------------------------------------------
# metrics


def stability_points(rec: dict) -> List[Tuple[int, int]]:
    """(V, T) for every threshold pi in (0.5, 1], from a stability record's stable counts."""
    counts = rec["stable_counts"]
    pts = [(0, 0)]
    for c in sorted({row[2] for row in counts}, reverse=True):
        T = sum(1 for row in counts if row[2] >= c and row[3])
        V = sum(1 for row in counts if row[2] >= c and not row[3])
        pts.append((V, T))
    return pts


def sac_points(rec: dict) -> List[Tuple[int, int]]:
    """(V, T) for every distinct pseudo-p-value threshold."""
    pv = rec["pvalues"]
    pts = [(0, 0)]
    for p in sorted({row[2] for row in pv}):
        T = sum(1 for row in pv if row[2] <= p and row[3])
        V = sum(1 for row in pv if row[2] <= p and not row[3])
        pts.append((V, T))
    return pts


def replicate_points(records: List[dict]) -> List[Tuple[int, int]]:
    """All (V, T) points one replicate's regime can reach by varying its free parameter."""
    regime = records[0]["regime"]
    if regime == "stability":
        return stability_points(records[0])
    if regime == "screen-and-clean":
        return sac_points(records[0])
    return [(0, 0)] + [(r["V"], r["T"]) for r in records]


def max_ntp_curve(points: Sequence[Tuple[int, int]], max_v: int) -> np.ndarray:
    """NTP(V) = best T among points with at most V false positives, V = 0..max_v."""
    best = np.zeros(max_v + 1)
    for v, t in points:
        if v <= max_v:
            best[v] = max(best[v], t)
    return np.maximum.accumulate(best)


@dataclass(frozen=True)
class RocPoint:
    v: int
    ntp: float
    ntp_baseline: float
    ratio: float
    degenerate: bool


def roc_curve(regime_points: Sequence[Sequence[Tuple[int, int]]],
              baseline_points: Optional[Sequence[Sequence[Tuple[int, int]]]], max_v: int = 20) -> List[RocPoint]:
    """Mean NTP-vs-V curve of a regime, relative to the mean of it and the baseline.

    Each argument holds one point list per replicate. Where both curves are
    zero the ratio is defined as 1.0 and the point is flagged; with no
    baseline the ratio is NaN.
    """
    mine = np.mean([max_ntp_curve(p, max_v) for p in regime_points], axis=0)
    if not baseline_points:
        return [RocPoint(v, float(mine[v]), math.nan, math.nan, False) for v in range(max_v + 1)]
    base = np.mean([max_ntp_curve(p, max_v) for p in baseline_points], axis=0)
    out = []
    for v in range(max_v + 1):
        denom = 0.5 * (mine[v] + base[v])
        if denom == 0.0:
            out.append(RocPoint(v, 0.0, 0.0, 1.0, True))
        else:
            out.append(RocPoint(v, float(mine[v]), float(base[v]), float(mine[v] / denom), False))
    return out


def stability_v_at_bound(rec: dict, target: float) -> Tuple[int, int, float, bool]:
    """(T, V, actual B-hat, clamped) for a stability record thresholded at the pi giving ``target``."""
    K, I, q = rec["K"], rec["iterations"], rec["q_hat"]
    pi, clamped = pi_for_bound(q, K, target)
    need = pi * I - 1e-9
    T = sum(1 for row in rec["stable_counts"] if row[2] >= need and row[3])
    V = sum(1 for row in rec["stable_counts"] if row[2] >= need and not row[3])
    return T, V, nfp_bound(q, K, pi), clamped


def sac_v_at(rec: dict, pi_sac: float) -> Tuple[int, int]:
    T = sum(1 for row in rec["pvalues"] if row[2] <= pi_sac and row[3])
    V = sum(1 for row in rec["pvalues"] if row[2] <= pi_sac and not row[3])
    return T, V


@dataclass(frozen=True)
class ErrorControlRow:
    regime: str
    algorithm: str
    target: float
    matrix_type: str
    l1_weight: Any  # a weight, or "mean" for rows pooled over weights
    mean_v: float
    p_v_within_bound: float
    replicates: int
    clamped: int


def _ec_row(key, w, vals) -> ErrorControlRow:
    vs = np.array([v for v, _, _ in vals], dtype=float)
    within = np.mean([v <= b + 1e-12 for v, b, _ in vals])
    return ErrorControlRow(*key, w, float(vs.mean()), float(within), len(vals), int(sum(c for _, _, c in vals)))


def error_control_table(records: Iterable[dict], targets: Sequence[float] = (1.0, 10.0)) -> List[ErrorControlRow]:
    """Mean V and empirical P[V <= B-hat] per (regime, algorithm, target, matrix type, weight).

    Stability selection uses the pi that makes B-hat equal the target;
    screen-and-clean thresholds its pseudo-p-values at the target. When a
    cell has several SIOL weights a pooled row (``l1_weight="mean"``) follows.
    """
    acc: Dict[tuple, Dict[float, list]] = defaultdict(lambda: defaultdict(list))
    for rec in records:
        if rec["point"] != 0 or rec["regime"] not in ("stability", "screen-and-clean"):
            continue
        for tgt in targets:
            if rec["regime"] == "stability":
                _, V, bound, clamped = stability_v_at_bound(rec, tgt)
            else:
                _, V = sac_v_at(rec, tgt)
                bound, clamped = tgt, False
            key = (rec["regime"], rec["algorithm"], float(tgt), rec["matrix_type"])
            acc[key][rec["l1_weight"]].append((V, bound, clamped))
    rows = []
    for key in sorted(acc):
        by_w = acc[key]
        for w in sorted(by_w):
            rows.append(_ec_row(key, w, by_w[w]))
        if len(by_w) > 1:
            rows.append(_ec_row(key, "mean", [x for w in sorted(by_w) for x in by_w[w]]))
    return rows


def gamma_power(per_replicate_points: Sequence[Sequence[Tuple[int, int]]], n_true: Sequence[int],
                cfg: PowerMetricConfig) -> float:
    """Fraction of replicates where some parameter value reaches T >= ceil(gamma*s) with V = 0."""
    hits = 0
    for pts, s in zip(per_replicate_points, n_true):
        need = math.ceil(cfg.gamma * s - 1e-9)
        if any(v == 0 and t >= need for v, t in pts):
            hits += 1
    return hits / len(per_replicate_points) if per_replicate_points else math.nan


@dataclass(frozen=True)
class ChoiceRow:
    regime: str
    algorithm: str
    l1_weight: float
    mean_t_proxy: float
    mean_v_proxy: float
    mean_t_oracle: float
    mean_v_oracle: float
    replicates: int


def _oracle(points: Sequence[Tuple[int, int, int]], objective: ObjectiveSpec) -> Tuple[int, int]:
    """Best (T, V) by the true objective; ties go to the smaller selection."""
    best = min(points, key=lambda p: (-objective(p[0], p[1]), p[0] + p[1], p[2]))
    return best[0], best[1]


def _proxied(records: List[dict], objective: ObjectiveSpec) -> Tuple[int, int]:
    regime = records[0]["regime"]
    if regime == "screen-and-clean":
        cands = [Candidate(r["params"], r["size"], r["params"]["pi_sac"], r) for r in records]
    else:
        # largest pi first, matching control.stability_candidates
        order = sorted(records, key=lambda r: (-r["params"]["lambda"], -r["params"]["pi"]))
        cands = [Candidate(r["params"], r["size"], r["bound"], r) for r in order]
    rec = choose(cands, objective).selection
    return rec["T"], rec["V"]


def model_choice_table(records: Iterable[dict], objective: ObjectiveSpec = ObjectiveSpec()) -> List[ChoiceRow]:
    """Mean (T, V) at the proxied optimum and at the true optimum over each regime's grid.

    The cross-validation row reports CV's own selection and, as its oracle,
    the best baseline lambda.
    """
    grouped = group_records(records)
    acc: Dict[tuple, List[Tuple[int, int, int, int]]] = defaultdict(list)
    for (cid, regime, w), reps in grouped.items():
        if regime not in ("stability", "stability-joint", "screen-and-clean", "cross-validation"):
            continue
        base = grouped.get((cid, "baseline", w), {})
        for rep, recs in reps.items():
            alg = recs[0]["algorithm"]
            if regime == "cross-validation":
                if rep not in base:
                    continue
                tp, vp = recs[0]["T"], recs[0]["V"]
                to, vo = _oracle([(r["T"], r["V"], i) for i, r in enumerate(base[rep])], objective)
            else:
                tp, vp = _proxied(recs, objective)
                to, vo = _oracle([(r["T"], r["V"], i) for i, r in enumerate(recs)], objective)
            acc[(regime, alg, w)].append((tp, vp, to, vo))
    rows = []
    for key in sorted(acc):
        a = np.array(acc[key], dtype=float)
        m = a.mean(axis=0)
        rows.append(ChoiceRow(*key, *map(float, m), len(a)))
    return rows


def cv_overselection(records: Iterable[dict], target: float = 1.0) -> Dict[str, float]:
    """How often CV selects more than stability selection at B-hat = target.

    Returns the fraction of replicates with ``|S_CV| > |S_SS|`` and the
    fraction of configurations where CV's mean V exceeds its mean T.
    """
    grouped = group_records(records)
    bigger, total = 0, 0
    cfg_more_neg, n_cfg = 0, 0
    for (cid, regime, w), reps in grouped.items():
        if regime != "cross-validation":
            continue
        ts = [recs[0]["T"] for recs in reps.values()]
        vs = [recs[0]["V"] for recs in reps.values()]
        n_cfg += 1
        cfg_more_neg += int(np.mean(vs) > np.mean(ts))
        ss = grouped.get((cid, "stability", w), {})
        for rep, recs in reps.items():
            if rep not in ss:
                continue
            T, V, _, _ = stability_v_at_bound(ss[rep][0], target)
            total += 1
            bigger += int(recs[0]["size"] > T + V)
    return {
        "replicates": total,
        "fraction_cv_larger": bigger / total if total else math.nan,
        "configs": n_cfg,
        "fraction_configs_more_negatives": cfg_more_neg / n_cfg if n_cfg else math.nan,
    }


# ---------------------------------------------------------------------------
# report tables


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def roc_rows(records: Sequence[dict], max_v: int = 20) -> List[tuple]:
    grouped = group_records(records)
    rows = []
    for (cid, regime, w), reps in sorted(grouped.items()):
        if regime in ("baseline", "stability-joint"):
            continue
        mine = [replicate_points(reps[r]) for r in sorted(reps)]
        base_reps = grouped.get((cid, "baseline", w))
        base = [replicate_points(base_reps[r]) for r in sorted(base_reps)] if base_reps else None
        first = next(iter(reps.values()))[0]
        for p in roc_curve(mine, base, max_v):
            rows.append((cid, first["algorithm"], first["matrix_type"], regime, w, p.v, p.ntp,
                         p.ntp_baseline, p.ratio, p.degenerate, base is None))
    return rows


ROC_HEADER = ("config_id", "algorithm", "matrix_type", "regime", "l1_weight", "V", "ntp", "ntp_baseline",
              "ratio", "both_zero", "no_baseline")


def gamma_rows(records: Sequence[dict], gammas: Sequence[float] = (0.2, 0.4, 0.6, 0.8, 1.0)) -> List[tuple]:
    grouped = group_records(records)
    rows = []
    for (cid, regime, w), reps in sorted(grouped.items()):
        if regime == "stability-joint":
            continue
        pts = [replicate_points(reps[r]) for r in sorted(reps)]
        s = [reps[r][0]["n_true"] for r in sorted(reps)]
        first = next(iter(reps.values()))[0]
        for g in gammas:
            rows.append((cid, first["algorithm"], first["matrix_type"], regime, w, g,
                         gamma_power(pts, s, PowerMetricConfig(g)), len(pts)))
    return rows


GAMMA_HEADER = ("config_id", "algorithm", "matrix_type", "regime", "l1_weight", "gamma", "probability", "replicates")


def write_report(store, table: str, out) -> int:
    """Write one aggregate table as CSV; returns the number of data rows."""
    records = load_store(store)
    if table == "roc":
        rows = roc_rows(records)
        write_csv(out, ROC_HEADER, rows)
    elif table == "error-control":
        ec = error_control_table(records)
        rows = [astuple_row(r) for r in ec]
        write_csv(out, [f for f in ErrorControlRow.__dataclass_fields__], rows)
    elif table == "model-choice":
        mc = model_choice_table(records)
        rows = [astuple_row(r) for r in mc]
        write_csv(out, [f for f in ChoiceRow.__dataclass_fields__], rows)
    elif table == "gamma-power":
        rows = gamma_rows(records)
        write_csv(out, GAMMA_HEADER, rows)
    else:
        raise ValueError(f"unknown table {table!r}")
    return len(rows)


def astuple_row(obj) -> tuple:
    return tuple(getattr(obj, f) for f in obj.__dataclass_fields__)
