"""Convex sub-algorithms: lasso, group lasso and structured input-output lasso.

All objectives share the squared-loss term ``(1/2N) ||Y - X B||_F^2``:

* lasso          ``+ lam * ||b||_1``                                   (t = 1)
* group lasso    ``+ lam * sum_g theta_g ||b_g||_2``  (disjoint cover, t = 1)
* SIOL           ``+ lam * (w ||B||_1 + sum_g sum_j theta_g ||B_gj||_2
                              + sum_i sum_h phi_h ||B_ih||_2)``

Lasso and group lasso use cyclic (block) coordinate descent with residual
updates. SIOL uses monotone accelerated proximal gradient; the proximal
operator of the overlapping penalty is evaluated by block-coordinate ascent on
its dual, which yields exact zeros in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Optional, Sequence

import numpy as np
from numba import njit

from .core import DataError, DatasetBundle, GroupStructure, ProblemShape, Selection

ALGORITHMS = ("lasso", "group-lasso", "siol")

ZERO_THRESHOLD = 1e-8
CD_CHANGE_TOL = 1e-7
KKT_TOL = 1e-6
MAX_SWEEPS = 10_000
MAX_PROX_STEPS = 50_000


class ConvergenceError(RuntimeError):
    """A fit hit its iteration cap before meeting the tolerances."""


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float
    l1_weight: float = 1.0

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not (self.l1_weight >= 0 and math.isfinite(self.l1_weight)):
            raise ValueError(f"l1_weight must be finite and >= 0, got {self.l1_weight}")


@dataclass(frozen=True)
class CoefficientMatrix:
    values: np.ndarray
    shape: ProblemShape

    def support_mask(self) -> np.ndarray:
        return self.values != 0.0

    def support(self) -> Selection:
        return Selection.from_mask(self.shape, self.support_mask())


@dataclass(frozen=True)
class FitReport:
    coefficients: CoefficientMatrix
    objective_value: float
    kkt_residual: float
    iterations: int
    converged: bool
    trace: Optional[np.ndarray] = field(default=None, repr=False)
    state: Any = field(default=None, repr=False, compare=False)

    @property
    def beta(self) -> np.ndarray:
        return self.coefficients.values

    def to_dict(self) -> dict:
        return {
            "coefficients": self.beta.tolist(),
            "support": self.coefficients.support().to_pairs(),
            "objective_value": self.objective_value,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True, nogil=True)
def _soft(z, a):
    if z > a:
        return z - a
    if z < -a:
        return z + a
    return 0.0


@njit(cache=True, nogil=True)
def _lasso_kkt(Xf, r, beta, lam):
    N, d = Xf.shape
    worst = 0.0
    for j in range(d):
        g = np.dot(Xf[:, j], r) / N
        if beta[j] == 0.0:
            v = abs(g) - lam
        elif beta[j] > 0.0:
            v = abs(g - lam)
        else:
            v = abs(g + lam)
        if v > worst:
            worst = v
    return worst


@njit(cache=True, nogil=True)
def _lasso_pass(Xf, r, beta, col_sq, lam, active_only):
    N, d = Xf.shape
    max_change = 0.0
    for j in range(d):
        if col_sq[j] == 0.0 or (active_only and beta[j] == 0.0):
            continue
        bj = beta[j]
        rho = np.dot(Xf[:, j], r) / N + col_sq[j] * bj
        new = _soft(rho, lam) / col_sq[j]
        if new != bj:
            delta = new - bj
            for n in range(N):
                r[n] -= delta * Xf[n, j]
            beta[j] = new
            if abs(delta) > max_change:
                max_change = abs(delta)
    return max_change


@njit(cache=True, nogil=True)
def _lasso_cd(Xf, y, beta, lam, max_sweeps, tol_change, tol_kkt):
    # Full sweeps alternate with passes over the nonzero coordinates only;
    # convergence is only declared after a full sweep.
    N, d = Xf.shape
    col_sq = np.empty(d)
    for j in range(d):
        col_sq[j] = np.dot(Xf[:, j], Xf[:, j]) / N
    r = y - Xf @ beta
    trace = np.empty(max_sweeps)
    kkt = np.inf
    sweep = 0
    active_only = False
    while sweep < max_sweeps:
        max_change = _lasso_pass(Xf, r, beta, col_sq, lam, active_only)
        trace[sweep] = 0.5 * np.dot(r, r) / N + lam * np.sum(np.abs(beta))
        sweep += 1
        if max_change < tol_change:
            if active_only:
                active_only = False
                continue
            r = y - Xf @ beta
            kkt = _lasso_kkt(Xf, r, beta, lam)
            if kkt < tol_kkt:
                return sweep, kkt, True, trace[:sweep]
        else:
            active_only = True
    r = y - Xf @ beta
    kkt = _lasso_kkt(Xf, r, beta, lam)
    return max_sweeps, kkt, False, trace


@njit(cache=True, nogil=True)
def _block_solve(ct, ev, a):
    """Minimise 0.5 b'Ab - c'b + a||b|| in the eigenbasis of A (c not at zero)."""
    m = ct.shape[0]
    eta = 0.0
    for _ in range(200):
        h = -1.0
        dh = 0.0
        for k in range(m):
            den = ev[k] * eta + a
            h += ct[k] * ct[k] / (den * den)
            dh -= 2.0 * ct[k] * ct[k] * ev[k] / (den * den * den)
        if dh >= 0.0:
            break
        step = -h / dh
        eta += step
        if abs(step) <= 1e-15 * max(eta, 1e-300):
            break
    out = np.empty(m)
    for k in range(m):
        out[k] = ct[k] * eta / (ev[k] * eta + a)
    return out


@njit(cache=True, nogil=True)
def _group_kkt(Xf, r, beta, lam, gidx, gptr, theta):
    N = Xf.shape[0]
    worst = 0.0
    for g in range(gptr.shape[0] - 1):
        lo, hi = gptr[g], gptr[g + 1]
        a = lam * theta[g]
        bnorm = 0.0
        for p in range(lo, hi):
            bnorm += beta[gidx[p]] ** 2
        bnorm = math.sqrt(bnorm)
        acc = 0.0
        gnorm = 0.0
        for p in range(lo, hi):
            gj = np.dot(Xf[:, gidx[p]], r) / N
            gnorm += gj * gj
            if bnorm > 0.0:
                acc += (gj - a * beta[gidx[p]] / bnorm) ** 2
        if bnorm == 0.0:
            v = math.sqrt(gnorm) - a
        else:
            v = math.sqrt(acc)
        if v > worst:
            worst = v
    return worst


@njit(cache=True, nogil=True)
def _group_bcd(Xf, y, beta, lam, gidx, gptr, theta, Qflat, qptr, evflat, max_sweeps, tol_change, tol_kkt):
    N, d = Xf.shape
    ng = gptr.shape[0] - 1
    r = y - Xf @ beta
    trace = np.empty(max_sweeps)
    kkt = np.inf
    for sweep in range(max_sweeps):
        max_change = 0.0
        for g in range(ng):
            lo, hi = gptr[g], gptr[g + 1]
            m = hi - lo
            Q = Qflat[qptr[g]: qptr[g] + m * m].reshape((m, m))
            ev = evflat[lo:hi]
            # c = X_g' r / N + A_g beta_g, formed through the eigenbasis
            bt = np.zeros(m)
            for k in range(m):
                for p in range(m):
                    bt[k] += Q[p, k] * beta[gidx[lo + p]]
            c = np.empty(m)
            for p in range(m):
                c[p] = np.dot(Xf[:, gidx[lo + p]], r) / N
            ct = np.zeros(m)
            for k in range(m):
                for p in range(m):
                    ct[k] += Q[p, k] * c[p]
                ct[k] += ev[k] * bt[k]
            a = lam * theta[g]
            cn = 0.0
            for k in range(m):
                cn += ct[k] * ct[k]
            if math.sqrt(cn) <= a:
                newt = np.zeros(m)
            elif a == 0.0:
                newt = np.zeros(m)
                for k in range(m):
                    if ev[k] > 0.0:
                        newt[k] = ct[k] / ev[k]
            else:
                newt = _block_solve(ct, ev, a)
            for p in range(m):
                nv = 0.0
                for k in range(m):
                    nv += Q[p, k] * newt[k]
                j = gidx[lo + p]
                delta = nv - beta[j]
                if delta != 0.0:
                    for n in range(N):
                        r[n] -= delta * Xf[n, j]
                    beta[j] = nv
                    if abs(delta) > max_change:
                        max_change = abs(delta)
        pen = 0.0
        for g in range(ng):
            s = 0.0
            for p in range(gptr[g], gptr[g + 1]):
                s += beta[gidx[p]] ** 2
            pen += theta[g] * math.sqrt(s)
        trace[sweep] = 0.5 * np.dot(r, r) / N + lam * pen
        if max_change < tol_change:
            r = y - Xf @ beta
            kkt = _group_kkt(Xf, r, beta, lam, gidx, gptr, theta)
            if kkt < tol_kkt:
                return sweep + 1, kkt, True, trace[: sweep + 1]
    r = y - Xf @ beta
    kkt = _group_kkt(Xf, r, beta, lam, gidx, gptr, theta)
    return max_sweeps, kkt, False, trace


@njit(cache=True, nogil=True)
def _prox_dual(v, s_l1, bidx, bptr, brad, U, tol, max_sweeps):
    """Prox of s_l1*||.||_1 + sum_b brad_b ||x_b|| at v.

    The L1 part is applied first (soft-thresholding commutes into the group
    prox). Blocks whose remaining input norm is within their radius are zero
    at the optimum and are screened out; the rest is solved by block ascent on
    the dual. U (aligned with bidx) holds the block duals and is updated in
    place for warm starts. Returns (primal point, sweeps).
    """
    n = v.shape[0]
    r = np.empty(n)
    for k in range(n):
        r[k] = _soft(v[k], s_l1)
    nb = bptr.shape[0] - 1
    live = np.ones(nb, dtype=np.bool_)
    changed = True
    while changed:
        changed = False
        for b in range(nb):
            if not live[b]:
                continue
            zn = 0.0
            for p in range(bptr[b], bptr[b + 1]):
                zn += r[bidx[p]] * r[bidx[p]]
            if math.sqrt(zn) <= brad[b]:
                live[b] = False
                changed = True
                for p in range(bptr[b], bptr[b + 1]):
                    r[bidx[p]] = 0.0
    active = np.empty(n, dtype=np.bool_)
    for k in range(n):
        active[k] = r[k] != 0.0
    for b in range(nb):
        for p in range(bptr[b], bptr[b + 1]):
            if live[b] and active[bidx[p]]:
                r[bidx[p]] -= U[p]
            else:
                U[p] = 0.0
    for sweep in range(max_sweeps):
        worst = 0.0
        for b in range(nb):
            if not live[b]:
                continue
            lo, hi = bptr[b], bptr[b + 1]
            zn = 0.0
            for p in range(lo, hi):
                if active[bidx[p]]:
                    z = U[p] + r[bidx[p]]
                    zn += z * z
            zn = math.sqrt(zn)
            scale = 1.0
            if zn > brad[b]:
                scale = brad[b] / zn
            for p in range(lo, hi):
                if active[bidx[p]]:
                    u = (U[p] + r[bidx[p]]) * scale
                    delta = u - U[p]
                    if delta != 0.0:
                        r[bidx[p]] -= delta
                        U[p] = u
                        if abs(delta) > worst:
                            worst = abs(delta)
        if worst <= tol:
            return r, sweep + 1
    return r, max_sweeps


# ---------------------------------------------------------------------------
# validation helpers


def _check_finite(data: DatasetBundle):
    if not (np.all(np.isfinite(data.design)) and np.all(np.isfinite(data.response))):
        raise DataError("design and response must be finite")


def _finish(beta: np.ndarray, shape: ProblemShape) -> CoefficientMatrix:
    beta = np.where(np.abs(beta) < ZERO_THRESHOLD, 0.0, beta)
    return CoefficientMatrix(beta, shape)


def _initial(warm_start, d: int, t: int) -> np.ndarray:
    if warm_start is None:
        return np.zeros((d, t))
    if isinstance(warm_start, FitReport):
        warm_start = warm_start.beta
    return np.array(warm_start, dtype=float).reshape(d, t).copy()


def _group_arrays(groups: Sequence[Sequence[int]]):
    gidx = np.array([i for g in groups for i in g], dtype=np.int64)
    gptr = np.zeros(len(groups) + 1, dtype=np.int64)
    gptr[1:] = np.cumsum([len(g) for g in groups])
    return gidx, gptr


# ---------------------------------------------------------------------------
# lasso


def fit_lasso(data: DatasetBundle, penalty: PenaltyConfig, warm_start=None,
              tol: float = KKT_TOL, max_sweeps: int = MAX_SWEEPS) -> FitReport:
    """Minimise ``(1/2N)||y - Xb||^2 + lam ||b||_1`` by cyclic coordinate descent.

    Converged means the largest coefficient change in a full sweep fell below
    1e-7 and the KKT residual is below ``tol``.
    """
    shape = data.shape
    if shape.n_outputs != 1:
        raise ValueError(f"lasso needs a single output, got t={shape.n_outputs}")
    _check_finite(data)
    Xf = np.asfortranarray(data.design)
    y = np.ascontiguousarray(data.response[:, 0])
    beta = _initial(warm_start, shape.n_inputs, 1)[:, 0].copy()
    sweeps, kkt, ok, trace = _lasso_cd(Xf, y, beta, float(penalty.lam), max_sweeps, CD_CHANGE_TOL, tol)
    coef = _finish(beta[:, None], shape)
    r = y - Xf @ coef.values[:, 0]
    obj = 0.5 * float(r @ r) / shape.n_samples + penalty.lam * float(np.abs(coef.values).sum())
    return FitReport(coef, obj, float(kkt), int(sweeps), bool(ok), np.array(trace))


# ---------------------------------------------------------------------------
# group lasso


def fit_group_lasso(data: DatasetBundle, penalty: PenaltyConfig, warm_start=None,
                    tol: float = KKT_TOL, max_sweeps: int = MAX_SWEEPS) -> FitReport:
    """Minimise ``(1/2N)||y - Xb||^2 + lam sum_g theta_g ||b_g||`` by exact block coordinate descent.

    Each block subproblem is solved exactly: in the eigenbasis of
    ``X_g'X_g/N`` the optimal norm solves a monotone scalar equation.
    """
    shape = data.shape
    if shape.n_outputs != 1:
        raise ValueError(f"group lasso needs a single output, got t={shape.n_outputs}")
    groups = data.groups
    if not groups.input_groups or not groups.is_partition(shape.n_inputs):
        raise ValueError("group lasso needs disjoint input groups covering every input; use SIOL for overlapping groups")
    _check_finite(data)
    theta, _ = groups.weights("unit")
    N = shape.n_samples
    Xf = np.asfortranarray(data.design)
    y = np.ascontiguousarray(data.response[:, 0])
    gidx, gptr = _group_arrays(groups.input_groups)
    qs, evs = [], []
    for g in groups.input_groups:
        Xg = data.design[:, list(g)]
        ev, Q = np.linalg.eigh(Xg.T @ Xg / N)
        qs.append(Q.ravel())
        evs.append(np.maximum(ev, 0.0))
    Qflat = np.concatenate(qs)
    qptr = np.zeros(len(qs) + 1, dtype=np.int64)
    qptr[1:] = np.cumsum([q.size for q in qs])
    evflat = np.concatenate(evs)
    beta = _initial(warm_start, shape.n_inputs, 1)[:, 0].copy()
    sweeps, kkt, ok, trace = _group_bcd(Xf, y, beta, float(penalty.lam), gidx, gptr, theta,
                                        Qflat, qptr, evflat, max_sweeps, CD_CHANGE_TOL, tol)
    # zero whole groups only: a group is either entirely in or out
    for g in groups.input_groups:
        if np.all(np.abs(beta[list(g)]) < ZERO_THRESHOLD):
            beta[list(g)] = 0.0
    coef = CoefficientMatrix(beta[:, None].copy(), shape)
    r = y - Xf @ beta
    pen = sum(th * np.linalg.norm(beta[list(g)]) for th, g in zip(theta, groups.input_groups))
    obj = 0.5 * float(r @ r) / N + penalty.lam * float(pen)
    return FitReport(coef, obj, float(kkt), int(sweeps), bool(ok), np.array(trace))


# ---------------------------------------------------------------------------
# structured input-output lasso


class _SiolPenalty:
    """Flattened block layout of the SIOL penalty for a d×t coefficient matrix (C order)."""

    def __init__(self, groups: GroupStructure, d: int, t: int, l1_weight: float):
        theta, phi = groups.weights("sqrt")
        blocks, weights = [], []
        for g, th in zip(groups.input_groups, theta):
            for j in range(t):
                blocks.append([i * t + j for i in g])
                weights.append(th)
        for h, ph in zip(groups.output_groups, phi):
            for i in range(d):
                blocks.append([i * t + j for j in h])
                weights.append(ph)
        self.bidx, self.bptr = _group_arrays(blocks)
        self.bw = np.array(weights, dtype=float)
        self.w = float(l1_weight)
        self.size = d * t
        self.last_exact = True

    def value(self, B: np.ndarray) -> float:
        flat = B.ravel()
        total = self.w * float(np.abs(flat).sum())
        if self.bw.size:
            sq = np.add.reduceat(flat[self.bidx] ** 2, self.bptr[:-1])
            total += float(self.bw @ np.sqrt(sq))
        return total

    def new_dual(self):
        return np.zeros(self.bidx.size)

    def prox(self, v: np.ndarray, scale: float, U: np.ndarray, tol: float, max_sweeps: int = 2_000):
        # radii change with scale: keep warm duals feasible
        if self.bw.size:
            sq = np.sqrt(np.add.reduceat(U**2, self.bptr[:-1]))
            rad = scale * self.bw
            over = sq > rad
            if np.any(over):
                fac = np.ones_like(sq)
                fac[over] = rad[over] / sq[over]
                U *= np.repeat(fac, np.diff(self.bptr))
        x, sweeps = _prox_dual(v.ravel(), scale * self.w, self.bidx, self.bptr, scale * self.bw, U, tol, max_sweeps)
        self.last_exact = sweeps < max_sweeps
        return x

    def unpenalized_mask(self) -> np.ndarray:
        covered = np.zeros(self.size, dtype=bool)
        if self.w > 0:
            covered[:] = True
        covered[self.bidx] = True
        return ~covered


def _siol_smooth(X, Y, N):
    d = X.shape[1]
    if d <= N:
        G = X.T @ X / N
        C = X.T @ Y / N
        grad = lambda B: G @ B - C  # noqa: E731
        L = float(np.linalg.eigvalsh(G)[-1]) if d else 0.0
    else:
        C = X.T @ Y / N
        grad = lambda B: X.T @ (X @ B) / N - C  # noqa: E731
        L = float(np.linalg.norm(X, 2) ** 2 / N)
    return grad, max(L, 1e-12), C


def fit_siol(data: DatasetBundle, penalty: PenaltyConfig, warm_start=None,
             tol: float = KKT_TOL, max_steps: int = MAX_PROX_STEPS) -> FitReport:
    """Structured input-output lasso by monotone accelerated proximal gradient.

    Groups may overlap and need not cover all inputs; weights default to the
    square root of each group's size. The reported ``kkt_residual`` is the
    sup-norm of an explicit subgradient of the objective at the returned point.
    """
    shape = data.shape
    _check_finite(data)
    d, t, N = shape.n_inputs, shape.n_outputs, shape.n_samples
    X, Y = data.design, data.response
    pen = _SiolPenalty(data.groups, d, t, penalty.l1_weight)
    lam = float(penalty.lam)
    grad, L, _ = _siol_smooth(X, Y, N)

    def objective(B):
        R = Y - X @ B
        return 0.5 * float(np.sum(R * R)) / N + lam * pen.value(B)

    B = _initial(warm_start, d, t)
    state = getattr(warm_start, "state", None) if isinstance(warm_start, FitReport) else None
    if state is not None and state.shape == (pen.bidx.size,):
        dual = state.copy()
    else:
        dual = pen.new_dual()
    # inner accuracy is tied to the outer tolerance so the prox error never dominates
    inner_tol = 1e-3 * tol / L

    F = objective(B)
    trace = [F]
    Z, tk = B.copy(), 1.0
    kkt, converged, steps = np.inf, False, 0
    for steps in range(1, max_steps + 1):
        gZ = grad(Z)
        Bn = pen.prox(Z - gZ / L, lam / L, dual, inner_tol).reshape(d, t)
        Fn = objective(Bn)
        diff = Z - Bn
        if pen.last_exact and np.max(np.abs(diff)) * 2.0 * L <= tol:
            sub = L * diff - (gZ - grad(Bn))
            kkt = float(np.max(np.abs(sub)))
            if kkt <= tol and Fn <= F + 1e-15 * max(1.0, abs(F)):
                B, F = Bn, Fn
                trace.append(F)
                converged = True
                break
        if Fn > F:
            # restart momentum; retry from the last accepted point
            if tk == 1.0:
                # even a plain proximal step failed to descend: accept to stay on the prox path
                B, F = Bn, Fn
                trace.append(F)
            Z, tk = B.copy(), 1.0
            continue
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        Z = Bn + ((tk - 1.0) / tn) * (Bn - B)
        B, F, tk = Bn, Fn, tn
        trace.append(F)
    if not converged:
        gB = grad(B)
        Bn = pen.prox(B - gB / L, lam / L, dual, inner_tol).reshape(d, t)
        kkt = float(np.max(np.abs(L * (B - Bn) - (gB - grad(Bn)))))
    coef = _finish(B, shape)
    return FitReport(coef, objective(coef.values), kkt, steps, converged, np.array(trace),
                     state=dual.copy())


def siol_objective(data: DatasetBundle, penalty: PenaltyConfig, B) -> float:
    """Objective value of an arbitrary coefficient matrix (used by tests and oracles)."""
    B = np.asarray(B, dtype=float).reshape(data.shape.n_inputs, data.shape.n_outputs)
    pen = _SiolPenalty(data.groups, B.shape[0], B.shape[1], penalty.l1_weight)
    R = data.response - data.design @ B
    return 0.5 * float(np.sum(R * R)) / data.shape.n_samples + penalty.lam * pen.value(B)


# ---------------------------------------------------------------------------
# regularization path helpers


def _siol_lambda_max(data: DatasetBundle, l1_weight: float) -> float:
    d, t, N = data.shape.n_inputs, data.shape.n_outputs, data.shape.n_samples
    pen = _SiolPenalty(data.groups, d, t, l1_weight)
    C = (data.design.T @ data.response / N).ravel()
    if not np.any(C):
        return 0.0
    if np.any(C[pen.unpenalized_mask()] != 0.0):
        return math.inf
    # feasible split: share each entry equally among the blocks covering it
    cover = np.zeros(d * t)
    if pen.w > 0:
        cover += 1.0
    np.add.at(cover, pen.bidx, 1.0)
    share = C / np.where(cover > 0, cover, 1.0)
    hi = 0.0
    if pen.w > 0:
        hi = float(np.max(np.abs(share))) / pen.w
    if pen.bw.size:
        norms = np.sqrt(np.add.reduceat(share[pen.bidx] ** 2, pen.bptr[:-1]))
        hi = max(hi, float(np.max(norms / pen.bw)))
    cscale = float(np.max(np.abs(C)))

    def is_zero(lam):
        x = pen.prox(C, lam, pen.new_dual(), 1e-14 * cscale, max_sweeps=5000)
        return pen.last_exact and float(np.max(np.abs(x))) <= 1e-10 * cscale

    lo = 0.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if is_zero(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10 * hi:
            break
    return hi * (1.0 + 1e-6)


def lambda_max(data: DatasetBundle, algorithm: str, l1_weight: float = 1.0) -> float:
    """Smallest penalty (up to a conservative envelope for SIOL) giving an empty support."""
    N = data.shape.n_samples
    C = data.design.T @ data.response / N
    if algorithm == "lasso":
        return float(np.max(np.abs(C[:, 0])))
    if algorithm == "group-lasso":
        theta, _ = data.groups.weights("unit")
        return float(max(np.linalg.norm(C[list(g), 0]) / th for g, th in zip(data.groups.input_groups, theta)))
    if algorithm == "siol":
        return _siol_lambda_max(data, l1_weight)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def lambda_grid(lambda_max: float, decay: float = 0.98, length: int = 100) -> list:
    """Geometric sequence ``lambda_max * decay**l`` for ``l = 0..length-1``."""
    if not (0.0 < decay < 1.0):
        raise ValueError(f"decay must lie in (0, 1), got {decay}")
    if length < 1:
        raise ValueError("grid length must be >= 1")
    grid = [float(lambda_max)]
    for _ in range(length - 1):
        grid.append(grid[-1] * decay)
    return grid


_FITTERS = {"lasso": fit_lasso, "group-lasso": fit_group_lasso, "siol": fit_siol}


def fit(algorithm: str, data: DatasetBundle, penalty: PenaltyConfig, warm_start=None) -> FitReport:
    try:
        fitter = _FITTERS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}") from None
    return fitter(data, penalty, warm_start=warm_start)


def fit_path(algorithm: str, data: DatasetBundle, lambdas: Iterable[float],
             l1_weight: float = 1.0) -> Iterator[FitReport]:
    """Warm-started fits along a sequence of penalties."""
    prev = None
    for lam in lambdas:
        prev = fit(algorithm, data, PenaltyConfig(float(lam), l1_weight), warm_start=prev)
        yield prev
