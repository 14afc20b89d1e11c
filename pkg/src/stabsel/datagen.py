"""Synthetic benchmark data: design types A-E, group recipes, ground truth and responses.

Design types
    A  i.i.d. standard normal inputs
    B  10 equal blocks, within-block correlation 0.5
    C  Toeplitz correlation 0.99^|i-j| (sampled as an AR(1) recurrence)
    D  2-factor model  x = a f1 + b f2 + e
    E  10-factor model
    external  a design matrix read from disk
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from .core import (
    DataError,
    DatasetBundle,
    GroundTruth,
    GroupStructure,
    ProblemShape,
    Selection,
    _read_matrix,
    standardize_columns,
)

MATRIX_TYPES = ("A", "B", "C", "D", "E", "external")
TARGETS = ("lasso", "group-lasso", "siol")
SIOL_OUTPUTS = 5
GROUP_SIZE = 4
_FACTORS = {"D": 2, "E": 10}


@dataclass(frozen=True)
class DataConfig:
    """One data configuration.

    ``s`` counts true inputs for lasso and true groups (s_g) for group lasso
    and SIOL.
    """

    matrix_type: str
    d: int
    N: int
    s: int
    snr: float
    algorithm: str = "lasso"
    seed: int = 0
    external_path: Optional[str] = None

    def __post_init__(self):
        if self.matrix_type not in MATRIX_TYPES:
            raise ValueError(f"unknown matrix type {self.matrix_type!r}")
        if self.algorithm not in TARGETS:
            raise ValueError(f"unknown algorithm target {self.algorithm!r}")
        if self.d < 1 or self.N < 2 or self.s < 1:
            raise ValueError(f"need d >= 1, N >= 2, s >= 1 (got d={self.d}, N={self.N}, s={self.s})")
        if not (self.snr > 0 and math.isfinite(self.snr)):
            raise ValueError("snr must be positive and finite")
        if self.algorithm == "group-lasso" and self.d % GROUP_SIZE:
            raise ValueError(f"group lasso needs d divisible by {GROUP_SIZE}, got {self.d}")
        if self.matrix_type == "B" and self.d % 10:
            raise ValueError(f"type B needs d divisible by 10, got {self.d}")

    @property
    def n_outputs(self) -> int:
        return SIOL_OUTPUTS if self.algorithm == "siol" else 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj) -> "DataConfig":
        return cls(**{k: obj[k] for k in obj if k in cls.__dataclass_fields__})

    def name(self) -> str:
        return f"{self.algorithm}-{self.matrix_type}-N{self.N}-d{self.d}-s{self.s}-snr{self.snr:g}"


# ---------------------------------------------------------------------------
# designs


def load_external(path) -> np.ndarray:
    """Read ``X.csv`` from a directory whose ``meta.json`` declares the shape."""
    src = Path(path)
    try:
        with open(src / "meta.json") as fh:
            shape = json.load(fh)["shape"]
        N, d = int(shape["n_samples"]), int(shape["n_inputs"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"cannot read shape declaration in {src}: {exc}") from exc
    return _read_matrix(src / "X.csv", N, d)


def gen_design(cfg: DataConfig, rng: np.random.Generator) -> np.ndarray:
    N, d = cfg.N, cfg.d
    kind = cfg.matrix_type
    if kind == "A":
        return rng.standard_normal((N, d))
    if kind == "B":
        blocks = 10
        size = d // blocks
        shared = rng.standard_normal((N, blocks))
        own = rng.standard_normal((N, d))
        return math.sqrt(0.5) * np.repeat(shared, size, axis=1) + math.sqrt(0.5) * own
    if kind == "C":
        rho = 0.99
        xi = rng.standard_normal((N, d))
        X = np.empty((N, d))
        X[:, 0] = xi[:, 0]
        c = math.sqrt(1.0 - rho * rho)
        for j in range(1, d):
            X[:, j] = rho * X[:, j - 1] + c * xi[:, j]
        return X
    if kind in _FACTORS:
        m = _FACTORS[kind]
        factors = rng.standard_normal((N, m))
        loadings = rng.standard_normal((m, d))
        return factors @ loadings + rng.standard_normal((N, d))
    if cfg.external_path is None:
        raise DataError("external design needs external_path")
    X = load_external(cfg.external_path)
    if X.shape != (N, d):
        raise DataError(f"external design is {X.shape[0]}x{X.shape[1]}, config says {N}x{d}")
    return X


# ---------------------------------------------------------------------------
# groups


def gen_groups(cfg: DataConfig) -> GroupStructure:
    d = cfg.d
    if cfg.algorithm == "lasso":
        return GroupStructure()
    if cfg.algorithm == "group-lasso":
        groups = [list(range(k, k + GROUP_SIZE)) for k in range(0, d, GROUP_SIZE)]
        return GroupStructure(groups, (), [1.0] * len(groups), ())
    # 1-based inclusive ranges max(5(i-1), 1) .. min(5i+1, d), i = 1..ceil(d/5)
    groups = []
    for i in range(1, math.ceil(d / 5) + 1):
        lo, hi = max(5 * (i - 1), 1), min(5 * i + 1, d)
        groups.append(list(range(lo - 1, hi)))
    t = SIOL_OUTPUTS
    return GroupStructure(groups, [list(range(t))],
                          [math.sqrt(len(g)) for g in groups], [math.sqrt(t)])


# ---------------------------------------------------------------------------
# truth and response


def noise_variance(signal: np.ndarray, snr: float) -> float:
    """``sigma^2 = ||X beta||^2 / (t N snr)`` for an N×t signal matrix."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim == 1:
        signal = signal[:, None]
    N, t = signal.shape
    return float(np.sum(signal * signal)) / (t * N * snr)


def _true_mask(cfg: DataConfig, groups: GroupStructure, rng: np.random.Generator) -> np.ndarray:
    d, t = cfg.d, cfg.n_outputs
    mask = np.zeros((d, t), dtype=bool)
    if cfg.algorithm == "lasso":
        if cfg.s > d:
            raise ValueError(f"s = {cfg.s} exceeds d = {d}")
        mask[rng.choice(d, size=cfg.s, replace=False), 0] = True
        return mask
    n_groups = len(groups.input_groups)
    if cfg.s > n_groups:
        raise ValueError(f"s_g = {cfg.s} exceeds the number of groups ({n_groups})")
    for g in rng.choice(n_groups, size=cfg.s, replace=False):
        mask[list(groups.input_groups[g]), :] = True
    return mask


def gen_truth_and_response(design: np.ndarray, groups: GroupStructure, cfg: DataConfig,
                           rng: np.random.Generator) -> DatasetBundle:
    """Draw S*, beta* ~ U[0,1] on S*, Gaussian noise at the target snr; standardize responses.

    ``design`` must already be standardized.
    """
    N, d = design.shape
    t = cfg.n_outputs
    mask = _true_mask(cfg, groups, rng)
    beta = np.zeros((d, t))
    beta[mask] = rng.uniform(0.0, 1.0, size=int(mask.sum()))
    # U[0,1] can return exactly 0; keep beta* != 0 <=> (i, j) in S*
    beta[mask & (beta == 0.0)] = np.nextafter(0.0, 1.0)
    signal = design @ beta
    sigma2 = noise_variance(signal, cfg.snr)
    Y = signal + math.sqrt(sigma2) * rng.standard_normal((N, t))
    Y = standardize_columns(Y, "response column")
    truth = GroundTruth(Selection.from_mask(ProblemShape(d, t, N), mask))
    meta = {"config": cfg.to_dict(), "seed": cfg.seed, "snr": cfg.snr, "matrix_type": cfg.matrix_type,
            "sigma2": sigma2}
    return DatasetBundle(design, Y, groups, truth, meta, beta)


def generate(cfg: DataConfig, seed: Optional[int] = None) -> DatasetBundle:
    """Full pipeline: design, standardization, groups, truth and response."""
    seed = cfg.seed if seed is None else int(seed)
    cfg = replace(cfg, seed=seed)
    rng = np.random.default_rng(seed)
    X = standardize_columns(gen_design(cfg, rng), "design column")
    return gen_truth_and_response(X, gen_groups(cfg), cfg, rng)


# ---------------------------------------------------------------------------
# configuration tables

# (type, N, d, s values); each row is emitted for snr 0.5 and 2
_LASSO = [
    ("A", 100, 1000, (4, 10)), ("A", 1000, 1000, (20, 50)),
    ("B", 200, 1000, (4, 10)), ("B", 1000, 1000, (20, 50)),
    ("C", 200, 1000, (4, 10)), ("C", 1000, 1000, (20, 50)),
    ("D", 200, 100, (10, 30)), ("D", 200, 1000, (4, 10)), ("D", 1000, 1000, (20, 50)),
    ("E", 200, 200, (10, 30)), ("E", 200, 1000, (4, 10)), ("E", 1000, 1000, (20, 50)),
    ("F", 1000, 5000, (20, 50)), ("G", 114, 1260, (4, 10)),
]
_GROUP = [
    ("A", 100, 1000, (4,)), ("A", 200, 1000, (10,)), ("A", 1000, 1000, (10, 25)),
    ("B", 200, 1000, (4, 10)), ("B", 1000, 1000, (10, 25)),
    ("C", 200, 1000, (4, 10)), ("C", 1000, 1000, (10, 25)),
    ("D", 200, 100, (5, 15)), ("D", 200, 1000, (4, 10)), ("D", 1000, 1000, (10, 25)),
    ("E", 200, 200, (5, 15)), ("E", 200, 1000, (4, 10)), ("E", 1000, 1000, (10, 25)),
    ("F", 1000, 5000, (10, 25)), ("G", 114, 1260, (2, 5)),
]
_SIOL = [(k, 500, 500, (5, 10)) for k in "ABCDE"] + [("F", 1000, 5000, (5, 20)), ("G", 114, 1260, (2,))]
_TABLES = {"lasso": _LASSO, "group-lasso": _GROUP, "siol": _SIOL}
SNRS = (0.5, 2.0)


def _round_to(x: float, multiple: int) -> int:
    return max(multiple, int(round(x / multiple)) * multiple)


def scale_config(cfg: DataConfig, scale: float) -> DataConfig:
    """Divide N, d and s proportionally, keeping the divisibility each recipe needs."""
    if scale == 1.0 or cfg.matrix_type == "external":
        return cfg
    if not scale > 0:
        raise ValueError("scale must be positive")
    step = 1
    if cfg.algorithm == "group-lasso":
        step = GROUP_SIZE
    if cfg.matrix_type == "B":
        step = math.lcm(step, 10)
    d = _round_to(cfg.d * scale, step)
    N = max(4, int(round(cfg.N * scale)))
    s = max(1, int(round(cfg.s * scale)))
    return replace(cfg, d=d, N=N, s=s)


def config_table(algorithm: str, scale: float = 1.0, include_external: bool = True) -> List[DataConfig]:
    """Benchmark configurations for one algorithm; genome rows (F, G) become external placeholders."""
    if algorithm not in _TABLES:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    out = []
    for kind, N, d, svals in _TABLES[algorithm]:
        external = kind in ("F", "G")
        if external and not include_external:
            continue
        for s in svals:
            for snr in SNRS:
                if external:
                    # shape is intrinsic to the file; the real path replaces the placeholder
                    out.append(DataConfig("external", d, N, s, snr, algorithm, external_path=f"<{kind}>"))
                else:
                    out.append(scale_config(DataConfig(kind, d, N, s, snr, algorithm), scale))
    return out

