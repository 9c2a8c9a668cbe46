"""Separate-family score tests between the buffered and the hysteretic model.

Both tests embed the two models in a compound intensity
``lam = (1 - delta) * lam_b + delta * lam_h`` and score the mixing weight at
the null value (``delta = 0`` for the buffered null, ``delta = 1`` for the
hysteretic null), with both intensity legs evaluated at the null model's
fitted parameters.

* Buffered null: the per-candidate statistic is the squared delta-score over
  the negated delta-curvature; the test takes the max over a finite set of
  hysteresis offsets ``c`` and simulates its non-pivotal limit from plug-in
  covariance estimates.
* Hysteretic null: the analogous single statistic, scaled by the plug-in
  variance ratio, is referred to a chi-square(1) tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .errors import DegenerateTestError, SingularInformationError
from .estimation import FitResult
from .likelihood import intensity_gradient
from .models import (
    CoefficientVector,
    CountSeries,
    InitPolicy,
    IntensityPath,
    ModelKind,
    ModelSpec,
    Thresholds,
    intensity_filter,
)

__all__ = [
    "CompoundWeight",
    "SigmaEstimates",
    "TestOutcome",
    "DEFAULT_LEVELS",
    "compound_intensity",
    "default_c_candidates",
    "score_stat_bpart",
    "estimate_sigma_bvh",
    "test_bpart_vs_hpart",
    "test_hpart_vs_bpart",
]

DEFAULT_LEVELS = (0.10, 0.05, 0.01)
DEFAULT_NULL_SIMS = 20000
_PATH_TOL = 1e-12


@dataclass(frozen=True)
class CompoundWeight:
    """Mixing weight of the hysteretic leg inside the compound intensity."""

    delta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class SigmaEstimates:
    """Plug-in variance quantities behind the test critical values.

    The buffered-null test fills the two ``k x k`` matrices; the
    hysteretic-null test fills the two scalars.
    """

    sigma1: np.ndarray | None = None
    sigma2: np.ndarray | None = None
    sigma1_prime: float | None = None
    sigma2_prime: float | None = None
    clipped: bool = False


@dataclass(frozen=True)
class TestOutcome:
    """A test statistic with its null calibration and per-level decisions."""

    statistic: float
    p_value: float
    critical_values: dict[float, float]
    decisions: dict[float, str]
    sigma: SigmaEstimates
    null_sims: int
    per_c_stats: np.ndarray | None = None
    candidates: tuple[int, ...] | None = None
    warnings: tuple[str, ...] = ()


def _decisions(p_value: float, levels) -> dict[float, float]:
    return {float(lv): ("reject" if p_value < lv else "not-reject") for lv in levels}


def compound_intensity(
    series: CountSeries,
    coefs: CoefficientVector,
    r: int,
    s: int,
    c: int,
    delta: CompoundWeight | float,
    init: InitPolicy | None = None,
) -> IntensityPath:
    """Convex combination of the buffered and hysteretic intensity paths that
    share coefficients and ``(r, s)``.

    The regime indicators reported are those of the leg carrying the larger
    weight (the buffered leg on ties).
    """
    if not isinstance(delta, CompoundWeight):
        delta = CompoundWeight(float(delta))
    init = init or InitPolicy()
    spec_b = ModelSpec(ModelKind.BPART, coefs, Thresholds.bpart(r, s), init)
    spec_h = ModelSpec(ModelKind.HPART, coefs, Thresholds.hpart(r, s, c), init)
    path_b = intensity_filter(series, spec_b)
    path_h = intensity_filter(series, spec_h)
    lam = (1.0 - delta.delta) * path_b.lambdas + delta.delta * path_h.lambdas
    regimes = path_h.regimes if delta.delta > 0.5 else path_b.regimes
    return IntensityPath(lam, regimes)


def default_c_candidates(series: CountSeries, max_candidates: int = 9) -> tuple[int, ...]:
    """Distinct observed first differences between their 10th and 90th
    percentiles, thinned to at most ``max_candidates``."""
    dy = series.diffs()
    lo, hi = np.quantile(dy, [0.10, 0.90])
    vals = np.unique(dy)
    vals = vals[(vals >= lo) & (vals <= hi)]
    if vals.size > max_candidates:
        idx = np.unique(np.round(np.linspace(0, vals.size - 1, max_candidates)).astype(int))
        vals = vals[idx]
    return tuple(int(v) for v in vals)


def _hpart_leg(series: CountSeries, fit_b: FitResult, c: int) -> np.ndarray:
    spec_h = ModelSpec(
        ModelKind.HPART,
        fit_b.coefficients,
        Thresholds.hpart(fit_b.thresholds.r, fit_b.thresholds.s, c),
        fit_b.spec_hat.init,
    )
    return intensity_filter(series, spec_h).lambdas


def _stat_from_paths(y_obs, lam_null, d) -> float:
    """Squared delta-score over negated delta-curvature; 0 on a zero score."""
    score = float(np.sum((y_obs / lam_null - 1.0) * d))
    curv = float(np.sum(y_obs * d * d / (lam_null * lam_null)))
    if curv <= 0.0:
        if score == 0.0:
            return 0.0
        raise DegenerateTestError("delta-curvature vanishes but the score does not")
    return score * score / curv


def _check_identical(d: np.ndarray, scale: float) -> bool:
    return bool(np.max(np.abs(d)) <= _PATH_TOL * (1.0 + scale))


def score_stat_bpart(series: CountSeries, fit_b: FitResult, c: int) -> float:
    """Per-candidate score statistic of the buffered-null test."""
    if fit_b.kind is not ModelKind.BPART:
        raise ValueError("needs a BPART fit")
    lam_b = intensity_filter(series, fit_b.spec_hat).lambdas
    lam_h = _hpart_leg(series, fit_b, c)
    y_obs = series.as_float()[1:]
    lb, d = lam_b[:-1], (lam_h - lam_b)[:-1]
    if _check_identical(d, float(np.max(lam_b))):
        raise DegenerateTestError(f"paths-identical at c={c}")
    return _stat_from_paths(y_obs, lb, d)


def estimate_sigma_bvh(
    series: CountSeries, fit_b: FitResult, c_candidates
) -> SigmaEstimates:
    """Plug-in covariance estimates for the buffered-null limit.

    Every expectation in the population displays is replaced by the sample
    average along the fitted paths; a non-PSD second matrix is repaired by
    clipping negative eigenvalues at zero (flagged).
    """
    if fit_b.kind is not ModelKind.BPART:
        raise ValueError("needs a BPART fit")
    cand = [int(c) for c in c_candidates]
    if not cand:
        raise ValueError("needs at least one candidate")
    lam_b = intensity_filter(series, fit_b.spec_hat).lambdas
    grad_b = intensity_gradient(series, fit_b.spec_hat).dlambda
    lb = lam_b[:-1]
    gb = grad_b[:-1]
    m = lb.size
    D = np.stack([(_hpart_leg(series, fit_b, c) - lam_b)[:-1] for c in cand])
    sigma1 = (D / lb) @ D.T / m
    A = (D / lb) @ gb / m
    info = fit_b.info.matrix
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularInformationError("information matrix at the BPART fit is singular")
    sigma2 = sigma1 - A @ np.linalg.solve(info, A.T)
    sigma2 = (sigma2 + sigma2.T) / 2.0
    w, V = np.linalg.eigh(sigma2)
    clipped = bool(w.min() < 0)
    if clipped:
        sigma2 = (V * np.clip(w, 0.0, None)) @ V.T
    return SigmaEstimates(sigma1=sigma1, sigma2=sigma2, clipped=clipped)


def test_bpart_vs_hpart(
    series: CountSeries,
    fit_b: FitResult,
    c_candidates=None,
    n_null_sims: int = DEFAULT_NULL_SIMS,
    levels=DEFAULT_LEVELS,
    seed: int = 0,
) -> TestOutcome:
    """Score test of the buffered null against the hysteretic alternative.

    Takes the max of the per-candidate statistics over the offset set, then
    calibrates it against ``n_null_sims`` draws of the simulated limit: a
    mean-zero multivariate normal with the plug-in covariance, each draw
    reduced to the max of squared components over the plug-in normalizers.
    """
    if fit_b.kind is not ModelKind.BPART:
        raise ValueError("needs a BPART fit")
    cand = list(c_candidates) if c_candidates is not None else list(default_c_candidates(series))
    if not cand:
        raise DegenerateTestError("no candidate offsets supplied")

    lam_b = intensity_filter(series, fit_b.spec_hat).lambdas
    y_obs = series.as_float()[1:]
    lb = lam_b[:-1]
    scale = float(np.max(lam_b))
    kept, stats, warnings = [], [], []
    for c in cand:
        d = (_hpart_leg(series, fit_b, int(c)) - lam_b)[:-1]
        if _check_identical(d, scale):
            warnings.append(f"dropped degenerate candidate c={int(c)} (paths identical)")
            continue
        kept.append(int(c))
        stats.append(_stat_from_paths(y_obs, lb, d))
    if not kept:
        raise DegenerateTestError("every candidate offset produced identical paths")

    per_c = np.asarray(stats)
    statistic = float(per_c.max())
    sigma = estimate_sigma_bvh(series, fit_b, kept)
    if sigma.clipped:
        warnings.append("sigma2 repaired by clipping negative eigenvalues at zero")

    diag1 = np.diag(sigma.sigma1)
    w, V = np.linalg.eigh(sigma.sigma2)
    root = V * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((int(n_null_sims), len(kept))) @ root.T
    M = np.max(Z * Z / diag1, axis=1)
    p_value = float(np.mean(M >= statistic))
    crits = {float(lv): float(np.quantile(M, 1.0 - lv)) for lv in levels}
    return TestOutcome(
        statistic=statistic,
        p_value=p_value,
        critical_values=crits,
        decisions=_decisions(p_value, levels),
        sigma=sigma,
        null_sims=int(n_null_sims),
        per_c_stats=per_c,
        candidates=tuple(kept),
        warnings=tuple(warnings),
    )


def test_hpart_vs_bpart(
    series: CountSeries,
    fit_h: FitResult,
    levels=DEFAULT_LEVELS,
) -> TestOutcome:
    """Score test of the hysteretic null against the buffered alternative.

    The statistic scaled by the plug-in variance ratio is referred to a
    chi-square(1) upper tail.
    """
    if fit_h.kind is not ModelKind.HPART:
        raise ValueError("needs an HPART fit")
    th = fit_h.thresholds
    spec_b = ModelSpec(
        ModelKind.BPART, fit_h.coefficients, Thresholds.bpart(th.r, th.s), fit_h.spec_hat.init
    )
    lam_h = intensity_filter(series, fit_h.spec_hat).lambdas
    lam_b = intensity_filter(series, spec_b).lambdas
    grad_h = intensity_gradient(series, fit_h.spec_hat).dlambda

    y_obs = series.as_float()[1:]
    lh = lam_h[:-1]
    d = (lam_h - lam_b)[:-1]
    if _check_identical(d, float(np.max(lam_h))):
        raise DegenerateTestError("paths-identical: buffered and hysteretic legs coincide")
    t_stat = _stat_from_paths(y_obs, lh, d)

    m = lh.size
    gh = grad_h[:-1]
    sigma1p = float(np.sum(d * d / lh) / m)
    b = (d / lh) @ gh / m
    info = fit_h.info.matrix
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularInformationError("information matrix at the HPART fit is singular")
    sigma2p = float(sigma1p - b @ np.linalg.solve(info, b))
    warnings = []
    clipped = False
    if sigma2p <= 0.0:
        sigma2p = 1e-12 * max(sigma1p, 1.0)
        clipped = True
        warnings.append("sigma2' was nonpositive; clipped to a small floor")

    statistic = t_stat * sigma1p / sigma2p
    p_value = float(chi2.sf(statistic, df=1))
    crits = {float(lv): float(chi2.ppf(1.0 - lv, df=1)) for lv in levels}
    sigma = SigmaEstimates(sigma1_prime=sigma1p, sigma2_prime=sigma2p, clipped=clipped)
    return TestOutcome(
        statistic=float(statistic),
        p_value=p_value,
        critical_values=crits,
        decisions=_decisions(p_value, levels),
        sigma=sigma,
        null_sims=0,
        warnings=tuple(warnings),
    )
