"""Command-line frontend.

One subcommand per workflow: simulate, fit, test-bvh, test-hvb, forecast,
mc-estimate, mc-test, diagnose-ids.  Every randomized command takes --seed
(default 0) and is reproducible from its flags plus the input file.

Exit codes: 0 success, 2 usage error, 3 parse error, 4 fit/study failure,
5 degenerate test.
"""

from __future__ import annotations

import csv
import functools
import sys

import click

from . import diagnostics as diag
from . import io as hio
from .errors import CsvParseError, DegenerateTestError, EstimationError, StudyError
from .estimation import OptimizerConfig, ThresholdGrid, default_grid, fit
from .forecast import rolling_forecast
from .models import (
    CoefficientVector,
    CountSeries,
    InitPolicy,
    ModelKind,
    ModelSpec,
    Thresholds,
    simulate,
)
from .montecarlo import run_estimation_study, run_test_study
from .septests import test_bpart_vs_hpart, test_hpart_vs_bpart

EXIT_PARSE = 3
EXIT_FIT = 4
EXIT_DEGENERATE = 5


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CsvParseError as exc:
            click.echo(f"parse error: {exc}", err=True)
            sys.exit(EXIT_PARSE)
        except DegenerateTestError as exc:
            click.echo(f"degenerate test: {exc}", err=True)
            sys.exit(EXIT_DEGENERATE)
        except (EstimationError, StudyError) as exc:
            click.echo(f"fit failure: {exc}", err=True)
            sys.exit(EXIT_FIT)

    return wrapper


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _parse_spec(model: str, coef: str, r, s, c, lambda0=None, delta_y0=0) -> ModelSpec:
    kind = ModelKind(model)
    values = _floats(coef)
    if kind is ModelKind.PAR:
        if len(values) != 3:
            raise click.UsageError("PAR needs --coef with 3 values: omega,alpha,beta")
        coefs = CoefficientVector(*values, *values)
    else:
        if len(values) != 6:
            raise click.UsageError("--coef needs 6 values: w1,a1,b1,w2,a2,b2")
        coefs = CoefficientVector(*values)
    wanted = {
        ModelKind.PAR: (),
        ModelKind.SETPAR: ("--r",),
        ModelKind.BPART: ("--r", "--s"),
        ModelKind.HPART: ("--r", "--s", "--c"),
    }[kind]
    flags = dict(zip(("--r", "--s", "--c"), (r, s, c)))
    missing = [name for name in wanted if flags[name] is None]
    stray = [name for name, v in flags.items() if v is not None and name not in wanted]
    if missing or stray:
        raise click.UsageError(
            f"model {model} takes thresholds {list(wanted)}; "
            f"missing {missing}, unexpected {stray}"
        )
    if kind is ModelKind.SETPAR:
        th = Thresholds.setpar(r)
    elif kind is ModelKind.BPART:
        th = Thresholds.bpart(r, s)
    elif kind is ModelKind.HPART:
        th = Thresholds.hpart(r, s, c)
    else:
        th = Thresholds.none()
    init = InitPolicy(lambda0=lambda0 if lambda0 is not None else "sample-mean", delta_y0=delta_y0)
    return ModelSpec(kind, coefs, th, init)


def _build_grid(series, kind, r_grid, s_grid, c_grid, min_regime_frac) -> ThresholdGrid:
    if c_grid and kind is not ModelKind.HPART:
        raise click.UsageError("--c-grid only applies to hpart fitting")
    if s_grid and kind in (ModelKind.PAR, ModelKind.SETPAR):
        raise click.UsageError("--s-grid only applies to bpart/hpart fitting")
    if r_grid and kind is ModelKind.PAR:
        raise click.UsageError("--r-grid does not apply to a PAR fit")
    return default_grid(
        series,
        kind,
        r_values=_ints(r_grid) if r_grid else None,
        s_values=_ints(s_grid) if s_grid else None,
        c_values=_ints(c_grid) if c_grid else None,
        min_regime_frac=min_regime_frac,
    )


_fit_options = [
    click.option("--r-grid", default=None, help="comma list of r candidates"),
    click.option("--s-grid", default=None, help="comma list of s candidates"),
    click.option("--c-grid", default=None, help="comma list of c candidates"),
    click.option("--min-regime-frac", default=0.10, show_default=True),
    click.option("--multistart", default=5, show_default=True),
    click.option("--max-iter", default=2000, show_default=True),
    click.option("--tol", default=1e-8, show_default=True),
    click.option("--lambda0", type=float, default=None, help="fixed initial intensity"),
    click.option("--delta-y0", default=0, show_default=True),
    click.option("--seed", default=0, show_default=True),
    click.option("--threads", default=1, show_default=True),
]


def _with_options(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


def _fit_from_flags(series, kind, flags) -> tuple:
    cfg = OptimizerConfig(
        max_iter=flags["max_iter"],
        tol=flags["tol"],
        multistart=flags["multistart"],
        seed=flags["seed"],
    )
    init = InitPolicy(
        lambda0=flags["lambda0"] if flags["lambda0"] is not None else "sample-mean",
        delta_y0=flags["delta_y0"],
    )
    grid = None
    if kind is ModelKind.PAR:
        if any(flags.get(k) for k in ("r_grid", "s_grid", "c_grid")):
            raise click.UsageError("threshold grids do not apply to a PAR fit")
    else:
        grid = _build_grid(
            series, kind, flags["r_grid"], flags["s_grid"], flags["c_grid"],
            flags["min_regime_frac"],
        )
    return fit(series, kind, grid=grid, cfg=cfg, init=init, threads=flags["threads"]), cfg, init


@click.group()
def main() -> None:
    """Hysteretic and buffered Poisson autoregressive count models."""


@main.command("simulate")
@click.option("--model", type=click.Choice([k.value for k in ModelKind]), required=True)
@click.option("--coef", required=True, help="comma list of coefficients (3 for PAR, else 6)")
@click.option("--r", type=int, default=None)
@click.option("--s", type=int, default=None)
@click.option("--c", type=int, default=None)
@click.option("--n", type=int, required=True)
@click.option("--burn-in", default=500, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, help="output prefix")
@_guarded
def simulate_cmd(model, coef, r, s, c, n, burn_in, seed, out):
    """Draw a trajectory from a fully specified model and write it as CSV."""
    spec = _parse_spec(model, coef, r, s, c)
    series, path = simulate(spec, n, burn_in=burn_in, seed=seed)
    hio.write_series_csv(series, f"{out}.csv")
    with open(f"{out}_path.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y", "lambda", "regime"])
        for t in range(len(series)):
            writer.writerow(
                [t, int(series.values[t]), repr(float(path.lambdas[t])), int(path.regimes[t])]
            )
    click.echo(f"wrote {n} observations to {out}.csv")


@main.command("fit")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--model", type=click.Choice([k.value for k in ModelKind]), required=True)
@_with_options(_fit_options)
@click.option("--out", required=True)
@_guarded
def fit_cmd(input_path, model, out, **flags):
    """Profile-MLE fit of one model to a CSV count series."""
    series = hio.ingest_csv(input_path)
    kind = ModelKind(model)
    result, _, _ = _fit_from_flags(series, kind, flags)
    hio.write_json(hio.report_fit(result), f"{out}.json")
    hio.write_plot_data(series, result.spec_hat, f"{out}_plotdata.csv")
    if kind is ModelKind.HPART:
        hio.write_regime_schematic(result.spec_hat, f"{out}_schematic.csv")
    th = result.thresholds.astuple()
    click.echo(f"loglik {result.loglik:.4f} thresholds {th} -> {out}.json")


@main.command("test-bvh")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@_with_options(_fit_options)
@click.option("--c-candidates", default=None, help="comma list of candidate offsets")
@click.option("--null-sims", default=20000, show_default=True)
@click.option("--levels", default="0.10,0.05,0.01", show_default=True)
@click.option("--out", required=True)
@_guarded
def test_bvh_cmd(input_path, c_candidates, null_sims, levels, out, **flags):
    """Score test of a fitted BPART null against the HPART direction."""
    series = hio.ingest_csv(input_path)
    result, _, _ = _fit_from_flags(series, ModelKind.BPART, flags)
    outcome = test_bpart_vs_hpart(
        series,
        result,
        c_candidates=_ints(c_candidates) if c_candidates else None,
        n_null_sims=null_sims,
        levels=_floats(levels),
        seed=flags["seed"],
    )
    payload = hio.report_test(outcome, "test-bvh")
    payload["null_fit"] = hio.report_fit(result)
    hio.write_json(payload, f"{out}.json")
    click.echo(f"S_n {outcome.statistic:.4f} p {outcome.p_value:.4f} -> {out}.json")


@main.command("test-hvb")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@_with_options(_fit_options)
@click.option("--levels", default="0.10,0.05,0.01", show_default=True)
@click.option("--out", required=True)
@_guarded
def test_hvb_cmd(input_path, levels, out, **flags):
    """Score test of a fitted HPART null against the BPART direction."""
    series = hio.ingest_csv(input_path)
    result, _, _ = _fit_from_flags(series, ModelKind.HPART, flags)
    outcome = test_hpart_vs_bpart(series, result, levels=_floats(levels))
    payload = hio.report_test(outcome, "test-hvb")
    payload["null_fit"] = hio.report_fit(result)
    hio.write_json(payload, f"{out}.json")
    click.echo(f"scaled T_n {outcome.statistic:.4f} p {outcome.p_value:.4f} -> {out}.json")


@main.command("forecast")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--model", type=click.Choice([k.value for k in ModelKind]), required=True)
@click.option("--holdout", type=int, required=True)
@click.option("--refit", type=click.Choice(["fixed", "expanding"]), default="fixed", show_default=True)
@_with_options(_fit_options)
@click.option("--out", required=True)
@_guarded
def forecast_cmd(input_path, model, holdout, refit, out, **flags):
    """Rolling one-step-ahead holdout evaluation with MSE/MAE."""
    series = hio.ingest_csv(input_path)
    kind = ModelKind(model)
    cfg = OptimizerConfig(
        max_iter=flags["max_iter"], tol=flags["tol"],
        multistart=flags["multistart"], seed=flags["seed"],
    )
    init = InitPolicy(
        lambda0=flags["lambda0"] if flags["lambda0"] is not None else "sample-mean",
        delta_y0=flags["delta_y0"],
    )
    train = CountSeries(series.values[: len(series) - holdout])
    grid = None
    if kind is ModelKind.PAR:
        if any(flags.get(k) for k in ("r_grid", "s_grid", "c_grid")):
            raise click.UsageError("threshold grids do not apply to a PAR fit")
    else:
        grid = _build_grid(
            train, kind, flags["r_grid"], flags["s_grid"], flags["c_grid"],
            flags["min_regime_frac"],
        )
    report = rolling_forecast(
        series, holdout, kind, grid=grid, cfg=cfg, init=init,
        refit_policy=refit, threads=flags["threads"],
    )
    hio.write_json(hio.report_forecast(report), f"{out}.json")
    with open(f"{out}_steps.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "prediction", "actual"])
        for i, (p, a) in enumerate(zip(report.predictions, report.actuals)):
            writer.writerow([i, repr(float(p)), int(a)])
    click.echo(f"MSE {report.mse:.4f} MAE {report.mae:.4f} -> {out}.json")


@main.command("mc-estimate")
@click.option("--model", type=click.Choice([k.value for k in ModelKind]), required=True)
@click.option("--coef", required=True)
@click.option("--r", type=int, default=None)
@click.option("--s", type=int, default=None)
@click.option("--c", type=int, default=None)
@click.option("--n", type=int, required=True)
@click.option("--reps", default=200, show_default=True)
@click.option("--burn-in", default=500, show_default=True)
@click.option("--multistart", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--threads", default=1, show_default=True)
@click.option("--out", required=True)
@_guarded
def mc_estimate_cmd(model, coef, r, s, c, n, reps, burn_in, multistart, seed, threads, out):
    """Replicated simulate-and-fit study (EM/EV/SG/V-M summaries)."""
    spec = _parse_spec(model, coef, r, s, c)
    cfg = OptimizerConfig(multistart=multistart, seed=seed)
    summary = run_estimation_study(
        spec, n, reps, seed=seed, cfg=cfg, burn_in=burn_in, threads=threads
    )
    hio.write_json(hio.report_mc_summary(summary), f"{out}.json")
    with open(f"{out}_table.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["description", *summary.param_names])
        for label, row in (("EM", summary.em), ("EV", summary.ev), ("SG", summary.sg), ("V/M", summary.vm)):
            writer.writerow([label] + [row[p] if row[p] is not None else "/" for p in summary.param_names])
    click.echo(f"{reps} replicates ({summary.failures} failed) -> {out}.json")


@main.command("mc-test")
@click.option("--which", type=click.Choice(["h0", "h0-tilde"]), required=True)
@click.option("--model", type=click.Choice([k.value for k in ModelKind]), required=True,
              help="data-generating model")
@click.option("--coef", required=True)
@click.option("--r", type=int, default=None)
@click.option("--s", type=int, default=None)
@click.option("--c", type=int, default=None)
@click.option("--n", type=int, required=True)
@click.option("--reps", default=200, show_default=True)
@click.option("--levels", default="0.10,0.05,0.01", show_default=True)
@click.option("--null-sims", default=20000, show_default=True)
@click.option("--burn-in", default=500, show_default=True)
@click.option("--multistart", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--threads", default=1, show_default=True)
@click.option("--out", required=True)
@_guarded
def mc_test_cmd(which, model, coef, r, s, c, n, reps, levels, null_sims, burn_in,
                multistart, seed, threads, out):
    """Replicated size/power study for one of the two separate-family tests."""
    spec = _parse_spec(model, coef, r, s, c)
    cfg = OptimizerConfig(multistart=multistart, seed=seed)
    table = run_test_study(
        spec, which, n, reps, levels=_floats(levels), seed=seed, cfg=cfg,
        burn_in=burn_in, n_null_sims=null_sims, threads=threads,
    )
    hio.write_json(hio.report_size_power(table), f"{out}.json")
    with open(f"{out}_table.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "rejection_rate"])
        for lv in table.levels:
            writer.writerow([lv, table.rejection[lv]])
    click.echo(f"rejections {table.rejection} -> {out}.json")


@main.command("diagnose-ids")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@_with_options(_fit_options)
@click.option("--max-order", default=3, show_default=True)
@click.option("--out", required=True)
@_guarded
def diagnose_ids_cmd(input_path, max_order, out, **flags):
    """Fit BPART and HPART, compare their regime ID cards."""
    series = hio.ingest_csv(input_path)
    fit_b, _, _ = _fit_from_flags(series, ModelKind.BPART, flags)
    fit_h, _, _ = _fit_from_flags(series, ModelKind.HPART, flags)
    ids_h = diag.id_card_sequence(series, fit_h)
    ids_b = diag.id_card_sequence(series, fit_b)
    table = diag.contingency(ids_h, ids_b)
    order_h = diag.markov_order_bic(ids_h, max_order)
    order_b = diag.markov_order_bic(ids_b, max_order)
    lr = diag.lr_same_chain(ids_h, ids_b, max(order_h, order_b))
    binom_p = (
        diag.exact_binomial_discordant(table) if sum(table.discordant) >= 1 else None
    )
    payload = hio.report_diagnostics(
        ids_h, ids_b, table, order_h, order_b, lr, binom_p
    )
    payload["fit_hpart"] = hio.report_fit(fit_h)
    payload["fit_bpart"] = hio.report_fit(fit_b)
    hio.write_json(payload, f"{out}.json")
    with open(f"{out}_ids.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y", "id_hpart", "id_bpart"])
        for t in range(len(series)):
            writer.writerow([t, int(series.values[t]), int(ids_h.labels[t]), int(ids_b.labels[t])])
    click.echo(
        f"contingency ({table.n11},{table.n10},{table.n01},{table.n00}) "
        f"orders ({order_h},{order_b}) -> {out}.json"
    )


if __name__ == "__main__":
    main()
