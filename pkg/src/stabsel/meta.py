"""Meta-algorithms wrapping a sparse sub-algorithm.

* stability selection: fixed-lambda subsampling, stability tau_k, threshold pi
* cross-validation: k-fold choice of lambda along a geometric grid
* screen-and-clean: CV screen on one shard, OLS clean on the other,
  pseudo-p-values combined across splits

A sub-algorithm is anything callable as ``f(data) -> Selection`` (or a boolean
d×t mask). :class:`SubAlgorithm` is the concrete solver-backed version.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import solvers
from .core import DatasetBundle, ProblemShape, Selection
from .solvers import FitReport, PenaltyConfig
from .stats import RankDeficientError, bh_fdr, independent_columns, ols_tstats

# ---------------------------------------------------------------------------
# sub-algorithms


@dataclass(frozen=True)
class SubAlgorithm:
    """A solver id with a fixed penalty; selects the support of the fitted coefficients."""

    algorithm: str
    penalty: PenaltyConfig

    def __post_init__(self):
        if self.algorithm not in solvers.ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {solvers.ALGORITHMS}")

    def fit(self, data: DatasetBundle, warm_start=None) -> FitReport:
        return solvers.fit(self.algorithm, data, self.penalty, warm_start=warm_start)

    def __call__(self, data: DatasetBundle) -> Selection:
        report = self.fit(data)
        if not report.converged:
            raise solvers.ConvergenceError(f"{self.algorithm} did not converge at lambda={self.penalty.lam:g}")
        return report.coefficients.support()

    def with_lambda(self, lam: float) -> "SubAlgorithm":
        return replace(self, penalty=replace(self.penalty, lam=float(lam)))


def _as_mask(result, shape: ProblemShape) -> np.ndarray:
    if isinstance(result, Selection):
        return result.to_mask()
    mask = np.asarray(result, dtype=bool)
    return mask.reshape(shape.n_inputs, shape.n_outputs)


class _Counter:
    """Wraps a sub-algorithm and counts invocations."""

    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, data):
        self.calls += 1
        return self.f(data)


# ---------------------------------------------------------------------------
# stability selection


@dataclass(frozen=True)
class StabilityConfig:
    subsample_fraction: float = 0.5
    iterations: int = 100
    threshold: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.subsample_fraction < 1.0):
            raise ValueError("subsample_fraction must lie in (0, 1)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0.5 < self.threshold <= 1.0):
            raise ValueError("threshold must lie in (0.5, 1]")

    def subsample_size(self, n_samples: int) -> int:
        m = int(math.floor(self.subsample_fraction * n_samples))
        if m < 2:
            raise ValueError(f"floor(p*N) = {m} < 2 for N = {n_samples}")
        return m


def subsample_indices(n_samples: int, size: int, seed: int, iteration: int) -> np.ndarray:
    """Sorted row indices for one subsample, derived from (seed, iteration) only."""
    rng = np.random.default_rng([int(seed), int(iteration)])
    return np.sort(rng.choice(n_samples, size=size, replace=False))


@dataclass(frozen=True)
class StabilityProfile:
    """Per-element selection counts over I subsample runs."""

    counts: np.ndarray
    sizes: Tuple[int, ...]
    iterations: int
    failures: int = 0

    @property
    def tau(self) -> np.ndarray:
        return self.counts / self.iterations

    @property
    def q_hat(self) -> float:
        return sum(self.sizes) / self.iterations

    @property
    def shape(self) -> Tuple[int, int]:
        return self.counts.shape

    def select_mask(self, pi: float) -> np.ndarray:
        # tau >= pi  <=>  count >= pi * I, evaluated on integers to avoid rounding at the boundary
        return self.counts >= pi * self.iterations - 1e-9

    def select(self, shape: ProblemShape, pi: float) -> Selection:
        return Selection.from_mask(shape, self.select_mask(pi))

    def to_dict(self) -> dict:
        return {
            "tau": self.tau.tolist(),
            "q_hat": self.q_hat,
            "sizes": list(self.sizes),
            "iterations": self.iterations,
            "failures": self.failures,
        }


def _profile(masks: Sequence[Optional[np.ndarray]], d: int, t: int) -> StabilityProfile:
    counts = np.zeros((d, t), dtype=np.int64)
    sizes, failures = [], 0
    for m in masks:
        if m is None:
            failures += 1
            sizes.append(0)
            continue
        counts += m
        sizes.append(int(np.count_nonzero(m)))
    return StabilityProfile(counts, tuple(sizes), len(masks), failures)


def stability_select(data: DatasetBundle, sub: Callable, cfg: StabilityConfig,
                     n_jobs: int = 1) -> Tuple[StabilityProfile, Selection]:
    """Fixed-lambda stability selection.

    Each of the I iterations fits ``sub`` on a subsample of ``floor(p*N)`` rows
    drawn without replacement. A failing iteration (exception or
    non-convergence) contributes an empty selection and is counted in
    ``profile.failures``.
    """
    shape = data.shape
    m = cfg.subsample_size(shape.n_samples)

    def one(it: int):
        rows = subsample_indices(shape.n_samples, m, cfg.seed, it)
        try:
            return _as_mask(sub(data.subset(rows)), shape)
        except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError):
            return None

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            masks = list(pool.map(one, range(cfg.iterations)))
    else:
        masks = [one(it) for it in range(cfg.iterations)]
    prof = _profile(masks, shape.n_inputs, shape.n_outputs)
    if prof.failures:
        warnings.warn(f"{prof.failures} of {cfg.iterations} stability iterations failed and count as empty")
    return prof, prof.select(shape, cfg.threshold)


def stability_path(data: DatasetBundle, algorithm: str, lambdas: Sequence[float],
                   cfg: StabilityConfig, l1_weight: float = 1.0) -> Iterator[Tuple[float, StabilityProfile]]:
    """Stability profiles along a descending lambda grid.

    The same I subsample index sets are used at every grid point, and each
    subsample's fit is warm-started from its fit at the previous lambda.
    Yields lazily so callers can stop early.
    """
    shape = data.shape
    m = cfg.subsample_size(shape.n_samples)
    subsets = [data.subset(subsample_indices(shape.n_samples, m, cfg.seed, it)) for it in range(cfg.iterations)]
    warm: List[Optional[FitReport]] = [None] * cfg.iterations
    for lam in lambdas:
        pen = PenaltyConfig(float(lam), l1_weight)
        masks = []
        for it, sub in enumerate(subsets):
            try:
                rep = solvers.fit(algorithm, sub, pen, warm_start=warm[it])
            except (ArithmeticError, ValueError, RuntimeError):
                masks.append(None)
                continue
            warm[it] = rep
            masks.append(rep.coefficients.support_mask() if rep.converged else None)
        yield float(lam), _profile(masks, shape.n_inputs, shape.n_outputs)


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class CVConfig:
    folds: int = 10
    decay: float = 0.98
    seed: int = 0
    max_grid: int = 400

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not (0.0 < self.decay < 1.0):
            raise ValueError("decay must lie in (0, 1)")
        if self.max_grid < 1:
            raise ValueError("max_grid must be >= 1")


@dataclass(frozen=True)
class CVResult:
    lam: float
    selection: Selection
    coefficients: np.ndarray
    lambdas: Tuple[float, ...]
    errors: np.ndarray  # mean validation error per lambda
    fold_errors: np.ndarray  # lambda × fold
    invocations: int
    stopped_by: str  # "cutoff" or "max_grid"
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "selection": self.selection.to_pairs(),
            "lambdas": list(self.lambdas),
            "errors": self.errors.tolist(),
            "invocations": self.invocations,
            "stopped_by": self.stopped_by,
            "warning": self.warning,
        }


def fold_indices(n_samples: int, folds: int, seed: int) -> List[np.ndarray]:
    """Shuffle rows, split contiguously; leading folds take one extra row each."""
    if not (2 <= folds <= n_samples):
        raise ValueError(f"need 2 <= folds <= N, got folds={folds}, N={n_samples}")
    perm = np.random.default_rng(int(seed)).permutation(n_samples)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def _validation_error(train: DatasetBundle, valid: Tuple[np.ndarray, np.ndarray], mask: np.ndarray,
                      coef: Optional[np.ndarray] = None) -> float:
    """Mean squared error on ``valid = (X, Y)`` of per-output OLS (with intercept) fitted on ``train``.

    Only inputs in the support of each output are used; an empty support
    predicts zero.
    """
    n_train = train.shape.n_samples
    Xv, Yv = valid
    sq = 0.0
    for j in range(mask.shape[1]):
        yv = Yv[:, j]
        cols = np.flatnonzero(mask[:, j])
        if cols.size == 0:
            sq += float(yv @ yv)
            continue
        if cols.size > n_train - 2:
            # keep the largest training coefficients when the support cannot be fitted
            keep = max(n_train - 2, 0)
            order = np.argsort(-np.abs(coef[cols, j]), kind="stable") if coef is not None else np.arange(cols.size)
            cols = np.sort(cols[order[:keep]])
        A = np.column_stack([np.ones(n_train), train.design[:, cols]])
        b, *_ = np.linalg.lstsq(A, train.response[:, j], rcond=None)
        pred = b[0] + Xv[:, cols] @ b[1:]
        r = yv - pred
        sq += float(r @ r)
    return sq / (Yv.shape[0] * mask.shape[1])


def cross_validate(data: DatasetBundle, algorithm: str, cfg: CVConfig,
                   l1_weight: float = 1.0) -> CVResult:
    """k-fold cross-validation over a geometric lambda grid.

    The grid starts where every training set's selection is empty and stops
    at the first lambda for which some output of some training fit selects
    more than half the training rows (that lambda is excluded), or after
    ``cfg.max_grid`` points.
    """
    shape = data.shape
    folds = fold_indices(shape.n_samples, cfg.folds, cfg.seed)
    all_rows = np.arange(shape.n_samples)
    trains, valids = [], []
    for f in folds:
        trains.append(data.subset(np.setdiff1d(all_rows, f)))
        valids.append((data.design[f], data.response[f]))  # a fold may hold a single row
    lam0 = max(solvers.lambda_max(tr, algorithm, l1_weight) for tr in trains)
    if not math.isfinite(lam0):
        raise ValueError("lambda_max is infinite: some inputs carry no penalty")
    lam0 = max(lam0, 1e-12)

    invocations = 0
    warm: List[Optional[FitReport]] = [None] * cfg.folds
    lambdas, fold_errs = [], []
    stopped_by = "max_grid"
    lam = lam0
    for _ in range(cfg.max_grid):
        errs, over = [], False
        for k in range(cfg.folds):
            rep = solvers.fit(algorithm, trains[k], PenaltyConfig(lam, l1_weight), warm_start=warm[k])
            invocations += 1
            warm[k] = rep
            mask = rep.coefficients.support_mask()
            if np.any(mask.sum(axis=0) > trains[k].shape.n_samples / 2.0):
                over = True
                break
            errs.append(_validation_error(trains[k], valids[k], mask, rep.beta))
        if over:
            stopped_by = "cutoff"
            break
        lambdas.append(lam)
        fold_errs.append(errs)
        lam *= cfg.decay

    warning = None
    if not lambdas:
        # even the first grid point overshoots the cutoff
        lambdas, fold_errs = [lam0], [[math.nan] * cfg.folds]
        warning = "cutoff reached at the first grid point"
    fold_errs = np.array(fold_errs, dtype=float)
    errors = fold_errs.mean(axis=1)
    best = 0 if not np.any(np.isfinite(errors)) else int(np.nanargmin(errors))
    chosen = lambdas[best]
    rep = solvers.fit(algorithm, data, PenaltyConfig(chosen, l1_weight))
    invocations += 1
    sel = rep.coefficients.support()
    if len(sel) == 0 and warning is None:
        warning = "empty selection at the chosen lambda"
    return CVResult(chosen, sel, rep.beta.copy(), tuple(lambdas), errors, fold_errs,
                    invocations, stopped_by, warning)


# ---------------------------------------------------------------------------
# screen and clean


@dataclass(frozen=True)
class SacConfig:
    splits: int = 10
    folds: int = 10
    threshold: float = 1.0
    seed: int = 0
    decay: float = 0.98
    max_grid: int = 400

    def __post_init__(self):
        if self.splits < 1:
            raise ValueError("splits must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise ValueError("threshold must be positive and finite")


@dataclass(frozen=True)
class SacResult:
    pvalues: np.ndarray  # d × t combined pseudo-p-values
    selection: Selection
    streams: np.ndarray  # splits × d × t per-split pseudo-p-values
    screen_lambdas: Tuple[float, ...]
    invocations: int
    warnings: Tuple[str, ...] = ()

    def select_mask(self, pi: float) -> np.ndarray:
        return self.pvalues <= pi

    def to_dict(self) -> dict:
        return {
            "pvalues": self.pvalues.tolist(),
            "selection": self.selection.to_pairs(),
            "screen_lambdas": list(self.screen_lambdas),
            "invocations": self.invocations,
            "warnings": list(self.warnings),
        }


def combine_streams(streams: np.ndarray) -> np.ndarray:
    """Combine each pair's per-split pseudo-p-values: BH-adjust the stream, take its minimum."""
    streams = np.asarray(streams, dtype=float)
    I = streams.shape[0]
    flat = streams.reshape(I, -1)
    out = np.empty(flat.shape[1])
    for k in range(flat.shape[1]):
        out[k] = bh_fdr(flat[:, k]).min()
    return out.reshape(streams.shape[1:])


def clean_phase(shard: DatasetBundle, screened: np.ndarray) -> np.ndarray:
    """Per-output OLS on ``shard`` restricted to the screened inputs; returns d×t pseudo-p-values.

    Screened pair: raw p × |S(j)| × t. Unscreened pair, or a predictor dropped
    for collinearity: d·t.
    """
    d, t = screened.shape
    n = shard.shape.n_samples
    out = np.full((d, t), float(d * t))
    for j in range(t):
        cols = np.flatnonzero(screened[:, j])
        if cols.size == 0:
            continue
        A = np.column_stack([np.ones(n), shard.design[:, cols]])
        keep = independent_columns(A)
        keep = keep[keep > 0] - 1  # drop the intercept, map to predictor positions
        use = cols[keep]
        if use.size == 0:
            continue
        try:
            res = ols_tstats(shard.design[:, use], shard.response[:, j])
        except (RankDeficientError, ValueError):
            continue
        out[use, j] = res.pvalues * cols.size * t
    return out


def _truncate(mask: np.ndarray, scores: np.ndarray, cap: int) -> np.ndarray:
    """Keep at most ``cap`` inputs per output, by largest |score|."""
    mask = mask.copy()
    for j in range(mask.shape[1]):
        cols = np.flatnonzero(mask[:, j])
        if cols.size > cap:
            order = np.argsort(-np.abs(scores[cols, j]), kind="stable")
            mask[cols[order[cap:]], j] = False
    return mask


def screen_and_clean(data: DatasetBundle, sub, cfg: SacConfig) -> SacResult:
    """Screen-and-clean with pseudo-p-values.

    ``sub`` is a :class:`SubAlgorithm` (its lambda is ignored; the screen phase
    sets lambda by k-fold CV on the first shard and refits there) or a callable
    ``shard -> mask`` / ``shard -> (mask, scores)`` that performs the whole
    screen step.
    """
    shape = data.shape
    N, d, t = shape.n_samples, shape.n_inputs, shape.n_outputs
    if N < 4:
        raise ValueError("screen-and-clean needs N >= 4")
    half = N // 2
    streams = np.empty((cfg.splits, d, t))
    lams, notes = [], []
    invocations = 0
    for s in range(cfg.splits):
        perm = np.random.default_rng([int(cfg.seed), s]).permutation(N)
        shard1 = data.subset(np.sort(perm[:half]))
        shard2 = data.subset(np.sort(perm[half:]))
        if isinstance(sub, SubAlgorithm):
            cv = cross_validate(shard1, sub.algorithm,
                                CVConfig(cfg.folds, cfg.decay, seed=int(cfg.seed) * 1_000_003 + s,
                                         max_grid=cfg.max_grid),
                                l1_weight=sub.penalty.l1_weight)
            invocations += cv.invocations
            lams.append(cv.lam)
            mask, scores = cv.selection.to_mask(), cv.coefficients
            if cv.warning:
                notes.append(f"split {s}: {cv.warning}")
        else:
            out = sub(shard1)
            invocations += 1
            if isinstance(out, tuple):
                mask, scores = _as_mask(out[0], shape), np.asarray(out[1], dtype=float).reshape(d, t)
            else:
                mask = _as_mask(out, shape)
                scores = mask.astype(float)
            lams.append(math.nan)
        cap = shard2.shape.n_samples // 2
        if np.any(mask.sum(axis=0) > cap):
            notes.append(f"split {s}: screened set truncated to {cap} inputs per output")
            mask = _truncate(mask, scores, cap)
        streams[s] = clean_phase(shard2, mask)
    pvals = combine_streams(streams)
    sel = Selection.from_mask(shape, pvals <= cfg.threshold)
    return SacResult(pvals, sel, streams, tuple(lams), invocations, tuple(notes))
