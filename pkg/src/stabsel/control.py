"""Error-control algebra: the NFP bound, lambda calibration and model choice."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import DatasetBundle, Selection
from .meta import (
    SacConfig,
    StabilityConfig,
    StabilityProfile,
    SubAlgorithm,
    screen_and_clean,
    stability_path,
    stability_select,
)
from .solvers import PenaltyConfig


def nfp_bound(q_hat: float, k_size: int, pi: float) -> float:
    """Estimated bound on expected false positives, ``q^2 / (|K| (2 pi - 1))``."""
    if not (0.5 < pi <= 1.0):
        raise ValueError(f"pi must lie in (0.5, 1], got {pi}")
    if q_hat < 0:
        raise ValueError("q_hat must be non-negative")
    if k_size < 1:
        raise ValueError("|K| must be >= 1")
    return q_hat * q_hat / (k_size * (2.0 * pi - 1.0))


@dataclass(frozen=True)
class BoundEstimate:
    q_hat: float
    k_size: int
    pi: float

    @property
    def value(self) -> float:
        return nfp_bound(self.q_hat, self.k_size, self.pi)


def pi_for_bound(q_hat: float, k_size: int, target: float) -> Tuple[float, bool]:
    """Threshold pi with ``nfp_bound(q_hat, k_size, pi) == target``, clamped to (0.5, 1].

    Returns ``(pi, clamped)``.
    """
    if target <= 0:
        raise ValueError("target bound must be positive")
    pi = 0.5 * (q_hat * q_hat / (k_size * target) + 1.0)
    if pi > 1.0:
        return 1.0, True
    if pi <= 0.5:
        return math.nextafter(0.5, 1.0), True
    return pi, False


def calibration_target(k_size: int, n_outputs: int = 1, per_output: bool = False) -> float:
    """The q-hat target ``sqrt(0.8 |K|)``, or ``sqrt(0.8 |K| t)`` when ``per_output``."""
    return math.sqrt(0.8 * k_size * (n_outputs if per_output else 1))


@dataclass(frozen=True)
class Calibration:
    lam: float
    index: int
    profile: StabilityProfile
    reached: bool
    path: Tuple[Tuple[float, float], ...]  # (lambda, q_hat) for every grid point visited
    profiles: Tuple[StabilityProfile, ...] = field(default=(), repr=False, compare=False)

    @property
    def warning(self) -> Optional[str]:
        return None if self.reached else "no grid lambda reached the q_hat target"


def calibrate_lambda(data: DatasetBundle, algorithm, target: float, grid: Sequence[float],
                     cfg: StabilityConfig, l1_weight: float = 1.0) -> Calibration:
    """Walk the grid from the largest lambda; stop at the first with ``q_hat > target``.

    ``algorithm`` is a solver id, or a factory ``lam -> sub-algorithm callable``
    (used for stubs). The same subsample index sets serve every grid point.
    If no grid point reaches the target the last one is returned with
    ``reached=False``.
    """
    if target < 0:
        raise ValueError("target must be >= 0")
    if len(grid) == 0:
        raise ValueError("empty lambda grid")
    if isinstance(algorithm, str):
        steps = stability_path(data, algorithm, grid, cfg, l1_weight)
    else:
        steps = ((float(lam), stability_select(data, algorithm(lam), cfg)[0]) for lam in grid)
    path, profiles = [], []
    lam, prof = None, None
    for idx, (lam, prof) in enumerate(steps):
        path.append((lam, prof.q_hat))
        profiles.append(prof)
        if prof.q_hat > target:
            return Calibration(lam, idx, prof, True, tuple(path), tuple(profiles))
    return Calibration(lam, len(path) - 1, prof, False, tuple(path), tuple(profiles))


# ---------------------------------------------------------------------------
# model choice


def default_objective(t_hat: float, v_hat: float) -> float:
    return t_hat - v_hat


@dataclass(frozen=True)
class ObjectiveSpec:
    """Objective v(T, V) to maximise; the default is T - V."""

    evaluator: Callable[[float, float], float] = default_objective

    def __call__(self, t_hat: float, v_hat: float) -> float:
        return float(self.evaluator(t_hat, v_hat))


@dataclass(frozen=True)
class Candidate:
    params: Mapping[str, Any]
    size: int
    v_proxy: float  # B-hat or pi_SaC
    selection: Any = None


@dataclass(frozen=True)
class ModelChoice:
    params: Mapping[str, Any]
    selection: Any
    t_hat: float
    v_hat: float
    score: float
    index: int


def choose(candidates: Sequence[Candidate], objective: ObjectiveSpec = ObjectiveSpec()) -> ModelChoice:
    """Maximise ``v(|S| - V, V)`` with ``V = min(proxy, |S|)``.

    Ties go to the smaller selection, then the smaller raw proxy, then the
    earlier candidate.
    """
    if not candidates:
        raise ValueError("no candidates to choose from")
    best, best_key = None, None
    for idx, c in enumerate(candidates):
        v = min(float(c.v_proxy), float(c.size))
        score = objective(c.size - v, v)
        key = (-score, c.size, float(c.v_proxy), idx)
        if best_key is None or key < best_key:
            best, best_key = (idx, c, v, score), key
    idx, c, v, score = best
    return ModelChoice(dict(c.params), c.selection, c.size - v, v, score, idx)


def stability_candidates(profile: StabilityProfile, pi_grid: Sequence[float], k_size: int,
                         extra: Optional[Mapping[str, Any]] = None) -> List[Candidate]:
    # largest pi first, so exact ties resolve to the most conservative threshold
    out = []
    for pi in sorted(pi_grid, reverse=True):
        mask = profile.select_mask(pi)
        params = dict(extra or {})
        params["pi"] = float(pi)
        out.append(Candidate(params, int(mask.sum()), nfp_bound(profile.q_hat, k_size, pi), mask))
    return out


def sac_candidates(pvalues: np.ndarray, pi_grid: Sequence[float]) -> List[Candidate]:
    out = []
    for pi in pi_grid:
        mask = pvalues <= pi
        out.append(Candidate({"pi_sac": float(pi)}, int(mask.sum()), float(pi), mask))
    return out


REGIMES = ("stability-fixed-lambda", "stability-joint", "screen-and-clean")


def model_choice(data: DatasetBundle, algorithm: str, regime: str, objective: ObjectiveSpec = ObjectiveSpec(),
                 *, pi_grid: Sequence[float], lambdas: Sequence[float] = (),
                 stability: StabilityConfig = StabilityConfig(), sac: SacConfig = SacConfig(),
                 target: Optional[float] = None, l1_weight: float = 1.0) -> ModelChoice:
    """Run a regime over its parameter grid and return the proxied-objective maximiser.

    ``stability-fixed-lambda`` calibrates lambda on ``lambdas`` first and then
    sweeps ``pi_grid``; ``stability-joint`` sweeps every (lambda, pi) pair;
    ``screen-and-clean`` sweeps ``pi_grid`` as pi_SaC. The returned selection
    is a :class:`Selection`.
    """
    shape = data.shape
    K = shape.n_elements
    if not pi_grid:
        raise ValueError("pi grid must be non-empty")
    if regime == "stability-fixed-lambda":
        if not lambdas:
            raise ValueError("lambda grid must be non-empty")
        tgt = calibration_target(K) if target is None else target
        cal = calibrate_lambda(data, algorithm, tgt, lambdas, stability, l1_weight)
        cands = stability_candidates(cal.profile, pi_grid, K, {"lambda": cal.lam})
    elif regime == "stability-joint":
        if not lambdas:
            raise ValueError("lambda grid must be non-empty")
        cands = []
        for lam, prof in stability_path(data, algorithm, lambdas, stability, l1_weight):
            cands.extend(stability_candidates(prof, pi_grid, K, {"lambda": lam}))
    elif regime == "screen-and-clean":
        res = screen_and_clean(data, SubAlgorithm(algorithm, PenaltyConfig(0.0, l1_weight)), sac)
        cands = sac_candidates(res.pvalues, pi_grid)
    else:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    choice = choose(cands, objective)
    sel = Selection.from_mask(shape, choice.selection)
    return ModelChoice(choice.params, sel, choice.t_hat, choice.v_hat, choice.score, choice.index)
