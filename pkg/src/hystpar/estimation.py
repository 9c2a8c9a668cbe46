"""Profile maximum likelihood.

Coefficients are optimized by constrained derivative-based search (SLSQP with
the analytic score) inside an exhaustive sweep over integer threshold
candidates; the reported fit is the best profile cell.  Multistart guards
against local optima of the nonconvex profile likelihood.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .errors import EstimationError, SingularInformationError
from .likelihood import InformationMatrix, information_matrix
from .models import (
    MIN_FIT_LENGTH,
    CoefficientVector,
    CountSeries,
    InitPolicy,
    ModelKind,
    ModelSpec,
    Thresholds,
    regime_path,
)

__all__ = [
    "OptimizerConfig",
    "ThresholdGrid",
    "ProfileCell",
    "FitResult",
    "default_grid",
    "fit_coefficients",
    "fit",
    "standard_errors",
]

COEF_FLOOR = 1e-6
BETA_CEIL = 1.0 - 1e-6
ALPHA_CEIL = 10.0
STATIONARY_CEIL = 1.0 - 1e-6
IDENTIFICATION_TOL = 1e-6  # per scored observation


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the coefficient optimizer."""

    max_iter: int = 2000
    tol: float = 1e-8
    multistart: int = 5
    seed: int = 0


@dataclass(frozen=True)
class ThresholdGrid:
    """Candidate threshold tuples for the profile sweep."""

    cells: tuple[Thresholds, ...]

    def __post_init__(self) -> None:
        if len(self.cells) == 0:
            raise EstimationError("threshold grid is empty")
        for cell in self.cells:
            if cell.r is not None and cell.s is not None and cell.r >= cell.s:
                raise ValueError("grid cells must satisfy r < s")
        object.__setattr__(self, "cells", tuple(self.cells))

    def __len__(self) -> int:
        return len(self.cells)


def _two_sided_values(x: np.ndarray, min_frac: float, strict_below: bool) -> np.ndarray:
    """Distinct values of ``x`` between its 10th and 90th percentiles leaving at
    least ``min_frac`` of the observations on each side."""
    lo, hi = np.quantile(x, [0.10, 0.90])
    vals = np.unique(x)
    vals = vals[(vals >= lo) & (vals <= hi)]
    keep = []
    n = x.size
    for v in vals:
        left = np.count_nonzero(x < v) if strict_below else np.count_nonzero(x <= v)
        if min_frac * n <= left <= (1.0 - min_frac) * n:
            keep.append(v)
    return np.asarray(keep)


def _thin(values: np.ndarray, cap: int) -> np.ndarray:
    if values.size <= cap:
        return values
    idx = np.unique(np.round(np.linspace(0, values.size - 1, cap)).astype(int))
    return values[idx]


def default_grid(
    series: CountSeries,
    kind: ModelKind,
    r_values=None,
    s_values=None,
    c_values=None,
    min_regime_frac: float = 0.10,
    max_c_candidates: int = 15,
) -> ThresholdGrid:
    """Data-driven candidate grid.

    ``r`` and ``s`` range over observed counts between the 10th and 90th
    percentiles (each side keeping at least ``min_regime_frac`` of the data);
    ``c`` over observed first differences in the same percentile band, thinned
    to at most ``max_c_candidates``.  Explicit value lists override the
    data-driven choices unchecked.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.PAR:
        return ThresholdGrid((Thresholds.none(),))
    y = series.values.astype(np.int64)
    rs = (
        np.asarray(sorted(set(int(v) for v in r_values)))
        if r_values is not None
        else _two_sided_values(y, min_regime_frac, strict_below=False).astype(np.int64)
    )
    if kind is ModelKind.SETPAR:
        if rs.size == 0:
            raise EstimationError("no admissible threshold candidates for r")
        return ThresholdGrid(tuple(Thresholds.setpar(int(r)) for r in rs))
    ss = (
        np.asarray(sorted(set(int(v) for v in s_values)))
        if s_values is not None
        else _two_sided_values(y, min_regime_frac, strict_below=False).astype(np.int64)
    )
    pairs = [(int(r), int(s)) for r in rs for s in ss if r < s]
    if not pairs:
        raise EstimationError("no admissible (r, s) pairs with r < s")
    if kind is ModelKind.BPART:
        return ThresholdGrid(tuple(Thresholds.bpart(r, s) for r, s in pairs))
    dy = series.diffs()
    if c_values is not None:
        cs = np.asarray(sorted(set(int(v) for v in c_values)))
    else:
        cs = _thin(_two_sided_values(dy, min_regime_frac, strict_below=True), max_c_candidates)
    if cs.size == 0:
        raise EstimationError("no admissible threshold candidates for c")
    return ThresholdGrid(
        tuple(Thresholds.hpart(r, s, int(c)) for r, s in pairs for c in cs)
    )


def _bounds_and_constraint(kind: ModelKind, mean_y: float):
    omega_cap = max(100.0, 20.0 * mean_y)
    triple = [(COEF_FLOOR, omega_cap), (COEF_FLOOR, ALPHA_CEIL), (COEF_FLOOR, BETA_CEIL)]
    if kind is ModelKind.PAR:
        bounds = triple
        sum_idx = (1, 2)
    else:
        bounds = triple * 2
        sum_idx = (4, 5)
    jac = np.zeros(len(bounds))
    jac[list(sum_idx)] = -1.0
    constraint = {
        "type": "ineq",
        "fun": lambda x: STATIONARY_CEIL - x[sum_idx[0]] - x[sum_idx[1]],
        "jac": lambda x: jac,
    }
    return bounds, constraint, sum_idx


def _starts(kind: ModelKind, mean_y: float, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    base = np.array([max(0.4 * mean_y, 2 * COEF_FLOOR), 0.3, 0.3])
    dim3 = kind is ModelKind.PAR
    starts = [base.copy() if dim3 else np.concatenate([base, base])]
    for _ in range(max(k - 1, 0)):
        def triple():
            a = rng.uniform(0.02, 0.75)
            b = rng.uniform(0.02, min(0.9, 0.97 - a))
            w = max(mean_y * rng.uniform(0.05, 1.2), 2 * COEF_FLOOR)
            return [w, a, b]
        starts.append(np.asarray(triple() if dim3 else triple() + triple()))
    return starts


def _expand(kind: ModelKind, x: np.ndarray) -> np.ndarray:
    return np.concatenate([x, x]) if kind is ModelKind.PAR else x


def fit_coefficients(
    series: CountSeries,
    kind: ModelKind,
    thresholds: Thresholds,
    cfg: OptimizerConfig | None = None,
    init: InitPolicy | None = None,
    rng: np.random.Generator | None = None,
    extra_starts: list[CoefficientVector] | None = None,
) -> tuple[CoefficientVector, float, dict]:
    """Maximize the conditional log-likelihood at fixed thresholds.

    Returns the best coefficient vector over ``cfg.multistart`` starts (one at
    method-of-moments-style values, the rest jittered, plus any
    ``extra_starts``), the maximized log-likelihood, and optimizer
    diagnostics.
    """
    cfg = cfg or OptimizerConfig()
    init = init or InitPolicy()
    kind = ModelKind(kind)
    if len(series) < MIN_FIT_LENGTH:
        raise EstimationError(f"fitting needs at least {MIN_FIT_LENGTH} observations")
    if not thresholds.matches(kind):
        raise EstimationError(f"threshold fields do not match model kind {kind.value!r}")
    if kind in (ModelKind.BPART, ModelKind.HPART) and thresholds.r >= thresholds.s:
        raise EstimationError("fitting a buffered/hysteretic model needs r < s")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    mean_y = series.mean()
    bounds, constraint, _ = _bounds_and_constraint(kind, mean_y)
    starts = _starts(kind, mean_y, cfg.multistart, rng)
    for extra in extra_starts or []:
        arr = extra.as_array()
        starts.append(arr[:3] if kind is ModelKind.PAR else arr)

    y = series.as_float()
    probe = ModelSpec(kind, CoefficientVector.from_array(_expand(kind, starts[0])), thresholds, init)
    regimes = regime_path(series, probe)
    lam0 = init.resolve_lambda0(series, probe.coefficients)

    def objective(x):
        ll, score = _kernels.loglik_and_score(y, regimes, _expand(kind, x), lam0)
        g = score[:3] if kind is ModelKind.PAR else score
        return -ll, -g

    best_x = None
    best_f = np.inf
    best_status = "unknown"
    failed = 0
    for x0 in starts:
        f0, _ = objective(x0)
        if np.isfinite(f0) and f0 < best_f:
            # the argmax must dominate every evaluated point, starts included
            best_x, best_f, best_status = x0, f0, "start"
        try:
            with warnings.catch_warnings():
                # SLSQP clips trial points to the bounds and warns; expected here.
                warnings.simplefilter("ignore", RuntimeWarning)
                res = minimize(
                    objective,
                    x0,
                    jac=True,
                    method="SLSQP",
                    bounds=bounds,
                    constraints=[constraint],
                    options={"maxiter": cfg.max_iter, "ftol": cfg.tol},
                )
        except (ValueError, np.linalg.LinAlgError):
            failed += 1
            continue
        if not np.isfinite(res.fun):
            failed += 1
            continue
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
            best_status = "converged" if res.success else str(res.message)
    if best_x is None:
        raise EstimationError("optimizer failed from every start")

    x = np.clip(best_x, [b[0] for b in bounds], [b[1] for b in bounds])
    ll, _ = _kernels.loglik_and_score(y, regimes, _expand(kind, x), lam0)
    at_bound = [
        i for i, (lo, hi) in enumerate(bounds)
        if x[i] - lo < 1e-5 * (1 + abs(lo)) or hi - x[i] < 1e-5 * (1 + abs(hi))
    ]
    diagnostics = {
        "multistart": len(starts),
        "failed_starts": failed,
        "status": best_status,
        "boundary_params": at_bound,
    }
    return CoefficientVector.from_array(_expand(kind, x)), float(ll), diagnostics


@dataclass(frozen=True)
class ProfileCell:
    """One entry of the threshold-profile table."""

    thresholds: Thresholds
    loglik: float
    error: str | None = None


@dataclass(frozen=True)
class FitResult:
    """Outcome of a profile-likelihood fit."""

    spec_hat: ModelSpec
    loglik: float
    info: InformationMatrix
    std_errors: np.ndarray
    profile: tuple[ProfileCell, ...]
    diagnostics: dict
    n_obs: int
    n_scored: int

    @property
    def kind(self) -> ModelKind:
        return self.spec_hat.kind

    @property
    def coefficients(self) -> CoefficientVector:
        return self.spec_hat.coefficients

    @property
    def thresholds(self) -> Thresholds:
        return self.spec_hat.thresholds


def _cell_sort_key(cell: Thresholds, ll: float):
    r = cell.r if cell.r is not None else 0
    s = cell.s if cell.s is not None else 0
    c = cell.c if cell.c is not None else 0
    return (-ll, r, s, abs(c), c)


def _fit_cell_worker(args):
    series, kind, cell, cfg, init, seed_seq = args
    try:
        coefs, ll, diag = fit_coefficients(
            series, kind, cell, cfg=cfg, init=init, rng=np.random.default_rng(seed_seq)
        )
        return cell, coefs, ll, diag, None
    except EstimationError as exc:
        return cell, None, float("nan"), {}, str(exc)


def fit(
    series: CountSeries,
    kind: ModelKind,
    grid: ThresholdGrid | None = None,
    cfg: OptimizerConfig | None = None,
    init: InitPolicy | None = None,
    threads: int = 1,
) -> FitResult:
    """Joint maximization over coefficients and integer thresholds.

    Runs :func:`fit_coefficients` for every grid cell (concurrently when
    ``threads > 1``; the reduction order is the grid order, so results do not
    depend on the thread count) and returns the best cell.  Ties break toward
    the smallest ``(r, s, |c|, c)``.
    """
    cfg = cfg or OptimizerConfig()
    init = init or InitPolicy()
    kind = ModelKind(kind)
    if grid is None:
        grid = default_grid(series, kind)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(grid.cells))
    jobs = [(series, kind, cell, cfg, init, ss) for cell, ss in zip(grid.cells, seeds)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_fit_cell_worker, jobs, chunksize=8))
    else:
        results = [_fit_cell_worker(job) for job in jobs]

    profile = []
    best = None
    for cell, coefs, ll, diag, err in results:
        profile.append(ProfileCell(cell, ll, err))
        if err is not None:
            continue
        key = _cell_sort_key(cell, ll)
        if best is None or key < best[0]:
            best = (key, cell, coefs, ll, diag)
    if best is None:
        raise EstimationError("every grid cell failed to fit")

    _, cell, coefs, ll, diag = best
    spec_hat = ModelSpec(kind, coefs, cell, init)
    n_scored = len(series) - 1
    lls = sorted((p.loglik for p in profile if np.isfinite(p.loglik)), reverse=True)
    suspect = len(lls) >= 2 and (lls[0] - lls[1]) < IDENTIFICATION_TOL * n_scored
    info = information_matrix(series, spec_hat)
    try:
        se = info.standard_errors()
        singular = None
    except SingularInformationError as exc:
        se = np.full(6, np.nan)
        singular = str(exc)
    diagnostics = dict(diag)
    diagnostics.update(
        {
            "cells": len(grid.cells),
            "failed_cells": sum(p.error is not None for p in profile),
            "identification_suspect": bool(suspect),
            "singular_information": singular,
        }
    )
    return FitResult(
        spec_hat=spec_hat,
        loglik=float(ll),
        info=info,
        std_errors=se,
        profile=tuple(profile),
        diagnostics=diagnostics,
        n_obs=len(series),
        n_scored=n_scored,
    )


def standard_errors(fit_result: FitResult) -> np.ndarray:
    """Asymptotic standard errors from the fitted information matrix.

    Raises :class:`SingularInformationError` when the information matrix does
    not support them.
    """
    return fit_result.info.standard_errors()
