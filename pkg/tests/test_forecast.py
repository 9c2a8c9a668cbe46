"""One-step conditional-mean forecasts and rolling holdout evaluation."""

import numpy as np
import pytest

from conftest import SET1, SET2
from hystpar import (
    CountSeries,
    InitPolicy,
    ModelKind,
    ModelSpec,
    OptimizerConfig,
    default_grid,
    one_step_mean,
    rolling_forecast,
    simulate,
)


def naive_hpart_next(values, coefs, r, s, c, lam0, dy0=0):
    """Straight-line reimplementation of the recursion, used as an oracle."""
    lam = lam0
    prev = None
    for t, v in enumerate(values):
        dy = dy0 if t == 0 else v - prev
        if dy >= c:
            low = v <= s
        else:
            low = v <= r
        if low:
            lam = coefs.omega1 + coefs.alpha1 * v + coefs.beta1 * lam
        else:
            lam = coefs.omega2 + coefs.alpha2 * v + coefs.beta2 * lam
        prev = v
    return lam


class TestOneStepMean:
    def test_constant_model_forecasts_its_level(self):
        spec = ModelSpec.par(2.0, 0.0, 0.0)
        for prefix in ([0], [9, 9, 9], list(range(12))):
            assert one_step_mean(CountSeries(np.array(prefix)), spec) == 2.0

    def test_hand_recursion_values(self):
        spec = ModelSpec.hpart(SET1, 3, 6, 0, init=InitPolicy(lambda0=1.0))
        assert one_step_mean(CountSeries(np.array([2, 5, 7, 4])), spec) == pytest.approx(4.385)
        assert one_step_mean(CountSeries(np.array([2, 5, 7])), spec) == pytest.approx(5.17)

    def test_matches_naive_reimplementation(self, rng):
        spec = ModelSpec.hpart(SET2, 4, 7, -1, init=InitPolicy(lambda0=2.5))
        values = rng.integers(0, 12, size=40)
        got = one_step_mean(CountSeries(values), spec)
        want = naive_hpart_next(values, SET2, 4, 7, -1, 2.5)
        assert got == pytest.approx(want, rel=1e-14)

    def test_equals_mean_of_simulated_continuations(self, rng):
        # conditional-mean oracle: draw the next count many times from the
        # independently recomputed intensity and compare the empirical mean
        spec = ModelSpec.hpart(SET1, 3, 6, 0, init=InitPolicy(lambda0=2.0))
        values = rng.integers(0, 9, size=25)
        lam = naive_hpart_next(values, SET1, 3, 6, 0, 2.0)
        draws = rng.poisson(lam, size=100000)
        se = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(one_step_mean(CountSeries(values), spec) - draws.mean()) < 3 * se


class TestRollingForecast:
    def test_constant_series_is_predicted_exactly(self):
        ser = CountSeries(np.full(80, 3, dtype=np.int64))
        report = rolling_forecast(ser, holdout=10, kind=ModelKind.PAR)
        np.testing.assert_allclose(report.predictions, 3.0, atol=1e-4)
        assert report.mse < 1e-6
        assert report.refit_policy == "fixed"

    def test_fixed_policy_matches_incremental_filter(self):
        ser, _ = simulate(ModelSpec.bpart(SET1, 3, 6), 160, seed=21)
        report = rolling_forecast(
            ser, holdout=12, kind=ModelKind.BPART, cfg=OptimizerConfig(multistart=2)
        )
        spec = report.train_fit.spec_hat
        init = spec.init
        train = CountSeries(ser.values[: len(ser) - 12])
        lam0 = init.resolve_lambda0(train, spec.coefficients)
        th = spec.thresholds
        # incremental filter over the full series carrying state forward
        lam = lam0
        reg_prev = init.resolve_r0(int(ser.values[0]), th.r)
        c = spec.coefficients
        incremental = []
        for t, v in enumerate(ser.values):
            if v <= th.r:
                e = 1
            elif v > th.s:
                e = 0
            else:
                e = reg_prev
            reg_prev = e
            lam = (
                c.omega1 + c.alpha1 * v + c.beta1 * lam
                if e == 1
                else c.omega2 + c.alpha2 * v + c.beta2 * lam
            )
            incremental.append(lam)
        start = len(ser) - 12
        np.testing.assert_array_equal(
            report.predictions, np.asarray(incremental)[start - 1 : -1]
        )

    def test_error_metric_bounds(self):
        ser, _ = simulate(ModelSpec.bpart(SET1, 3, 6), 140, seed=22)
        report = rolling_forecast(
            ser, holdout=10, kind=ModelKind.BPART, cfg=OptimizerConfig(multistart=2)
        )
        err = np.abs(report.predictions - report.actuals)
        assert report.mse >= 0
        assert report.mae <= err.max() + 1e-12
        assert report.mse <= err.max() ** 2 + 1e-12
        assert (report.predictions > 0).all()

    def test_expanding_policy_refits(self):
        ser, _ = simulate(ModelSpec.par(2.0, 0.2, 0.3), 90, seed=23)
        fixed = rolling_forecast(ser, 8, ModelKind.PAR, refit_policy="fixed")
        expanding = rolling_forecast(ser, 8, ModelKind.PAR, refit_policy="expanding")
        assert expanding.refit_policy == "expanding"
        assert fixed.predictions.shape == expanding.predictions.shape

    def test_holdout_bounds_validated(self):
        ser, _ = simulate(ModelSpec.par(2.0, 0.2, 0.3), 80, seed=24)
        with pytest.raises(ValueError):
            rolling_forecast(ser, 40, ModelKind.PAR)
        with pytest.raises(ValueError):
            rolling_forecast(ser, 0, ModelKind.PAR)

    @pytest.mark.slow
    def test_correct_model_beats_misspecified_par_on_average(self):
        # paired comparison on hysteretic data with known thresholds
        diffs = []
        grid_kwargs = dict(r_values=[4], s_values=[7], c_values=[-1])
        for seed in range(25):
            ser, _ = simulate(ModelSpec.hpart(SET2, 4, 7, -1), 320, seed=300 + seed)
            grid = default_grid(ser, ModelKind.HPART, **grid_kwargs)
            rep_h = rolling_forecast(
                ser, 20, ModelKind.HPART, grid=grid, cfg=OptimizerConfig(multistart=2)
            )
            rep_p = rolling_forecast(
                ser, 20, ModelKind.PAR, cfg=OptimizerConfig(multistart=2)
            )
            diffs.append(rep_p.mse - rep_h.mse)
        assert np.mean(diffs) > 0
