"""One-step-ahead conditional-mean forecasts and rolling holdout evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import FitResult, OptimizerConfig, ThresholdGrid, fit
from .models import CountSeries, InitPolicy, ModelKind, ModelSpec, intensity_filter

__all__ = ["ForecastReport", "one_step_mean", "rolling_forecast"]


@dataclass(frozen=True)
class ForecastReport:
    """Holdout predictions with their squared/absolute error summaries."""

    predictions: np.ndarray
    actuals: np.ndarray
    mse: float
    mae: float
    refit_policy: str
    train_fit: FitResult

    def __post_init__(self) -> None:
        if self.predictions.shape != self.actuals.shape:
            raise ValueError("predictions and actuals must align")


def one_step_mean(prefix: CountSeries, spec: ModelSpec) -> float:
    """Conditional mean of the next count given everything observed so far.

    Under a conditional Poisson model this is the filtered intensity extended
    one step past the last observation.
    """
    return float(intensity_filter(prefix, spec).lambdas[-1])


def _frozen_spec(train: CountSeries, fitted: FitResult) -> ModelSpec:
    """Pin the fitted model's start-up to values resolved on the training
    window, so later prefix filters reuse the exact training initialization."""
    init = fitted.spec_hat.init
    lam0 = init.resolve_lambda0(train, fitted.coefficients)
    r0 = init.r0
    if fitted.kind is ModelKind.BPART and r0 is None:
        r0 = init.resolve_r0(int(train.values[0]), fitted.thresholds.r)
    return fitted.spec_hat.with_init(InitPolicy(lambda0=lam0, r0=r0, delta_y0=init.delta_y0))


def rolling_forecast(
    series: CountSeries,
    holdout: int,
    kind: ModelKind,
    grid: ThresholdGrid | None = None,
    cfg: OptimizerConfig | None = None,
    init: InitPolicy | None = None,
    refit_policy: str = "fixed",
    threads: int = 1,
) -> ForecastReport:
    """Fit on the training prefix and score one-step predictions over the tail.

    ``refit_policy="fixed"`` keeps the training-window parameters and filters
    forward; ``"expanding"`` refits on every enlarged prefix.
    """
    if refit_policy not in ("fixed", "expanding"):
        raise ValueError("refit_policy must be 'fixed' or 'expanding'")
    n = len(series)
    if not 0 < holdout < n / 2:
        raise ValueError("holdout must be positive and below half the series length")
    split = n - holdout
    train = CountSeries(series.values[:split])
    fitted = fit(train, kind, grid=grid, cfg=cfg, init=init, threads=threads)
    frozen = _frozen_spec(train, fitted)

    preds = np.empty(holdout)
    for j, t in enumerate(range(split, n)):
        prefix = CountSeries(series.values[:t])
        if refit_policy == "expanding" and t > split:
            step_fit = fit(prefix, kind, grid=grid, cfg=cfg, init=init, threads=threads)
            preds[j] = one_step_mean(prefix, _frozen_spec(prefix, step_fit))
        else:
            preds[j] = one_step_mean(prefix, frozen)
    actuals = series.values[split:].astype(np.float64)
    err = preds - actuals
    return ForecastReport(
        predictions=preds,
        actuals=actuals,
        mse=float(np.mean(err**2)),
        mae=float(np.mean(np.abs(err))),
        refit_policy=refit_policy,
        train_fit=fitted,
    )
