"""CSV ingestion and JSON/CSV report emission for the command-line frontend."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .diagnostics import ContingencyTable2x2, IdSequence
from .errors import CsvParseError
from .estimation import FitResult
from .forecast import ForecastReport
from .models import (
    CoefficientVector,
    CountSeries,
    InitPolicy,
    IntensityPath,
    ModelKind,
    ModelSpec,
    Thresholds,
    intensity_filter,
    regime_path_hpart,
)
from .montecarlo import McSummary, SizePowerTable
from .septests import TestOutcome

__all__ = [
    "ingest_csv",
    "write_series_csv",
    "report_fit",
    "report_test",
    "report_forecast",
    "report_mc_summary",
    "report_size_power",
    "spec_from_report",
    "write_json",
    "write_plot_data",
    "write_regime_schematic",
]


def ingest_csv(source) -> CountSeries:
    """Read a count series from a CSV file.

    Accepts one count per line or several comma-separated columns with the
    count in the last column.  The first line is skipped as a header when its
    last field is not numeric.  Blank lines are ignored.  Negative or
    non-integer counts raise :class:`CsvParseError` with the line number.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    values: list[int] = []
    first_data_line = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        field = line.split(",")[-1].strip()
        try:
            value = float(field)
        except ValueError:
            if first_data_line:
                first_data_line = False
                continue
            raise CsvParseError(f"could not parse count {field!r}", line=lineno) from None
        first_data_line = False
        if not math.isfinite(value) or value != int(value):
            raise CsvParseError(f"count {field!r} is not an integer", line=lineno)
        if value < 0:
            raise CsvParseError(f"count {field!r} is negative", line=lineno)
        values.append(int(value))
    if not values:
        raise CsvParseError("no data rows found")
    return CountSeries(np.asarray(values, dtype=np.int64))


def write_series_csv(series: CountSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "count"])
        for t, v in enumerate(series.values):
            writer.writerow([t, int(v)])


def _thresholds_dict(th: Thresholds) -> dict:
    return {k: v for k, v in (("r", th.r), ("s", th.s), ("c", th.c)) if v is not None}


def _init_dict(init: InitPolicy) -> dict:
    return {"lambda0": init.lambda0, "r0": init.r0, "delta_y0": init.delta_y0}


def _spec_dict(spec: ModelSpec) -> dict:
    c = spec.coefficients
    return {
        "model": spec.kind.value,
        "coefficients": {
            "omega1": c.omega1,
            "alpha1": c.alpha1,
            "beta1": c.beta1,
            "omega2": c.omega2,
            "alpha2": c.alpha2,
            "beta2": c.beta2,
        },
        "thresholds": _thresholds_dict(spec.thresholds),
        "init": _init_dict(spec.init),
    }


def spec_from_report(d: dict) -> ModelSpec:
    """Rebuild a model spec from an emitted report (inverse of the fit report's
    ``model``/``coefficients``/``thresholds``/``init`` fields)."""
    coefs = CoefficientVector(**d["coefficients"])
    th = Thresholds(**{k: int(v) for k, v in d.get("thresholds", {}).items()})
    init_d = d.get("init", {})
    init = InitPolicy(
        lambda0=init_d.get("lambda0", "sample-mean"),
        r0=init_d.get("r0"),
        delta_y0=int(init_d.get("delta_y0", 0)),
    )
    return ModelSpec(ModelKind(d["model"]), coefs, th, init)


def report_fit(fit_result: FitResult) -> dict:
    se = fit_result.std_errors
    return {
        "type": "fit",
        **_spec_dict(fit_result.spec_hat),
        "loglik": fit_result.loglik,
        "n_obs": fit_result.n_obs,
        "n_scored": fit_result.n_scored,
        "std_errors": {
            name: (None if not np.isfinite(v) else float(v))
            for name, v in zip(
                ("omega1", "alpha1", "beta1", "omega2", "alpha2", "beta2"), se
            )
        },
        "info_matrix": fit_result.info.matrix.tolist(),
        "profile": [
            {
                **_thresholds_dict(cell.thresholds),
                "loglik": None if not np.isfinite(cell.loglik) else cell.loglik,
                "error": cell.error,
            }
            for cell in fit_result.profile
        ],
        "diagnostics": fit_result.diagnostics,
    }


def _sigma_dict(sigma) -> dict:
    return {
        "sigma1": sigma.sigma1.tolist() if sigma.sigma1 is not None else None,
        "sigma2": sigma.sigma2.tolist() if sigma.sigma2 is not None else None,
        "sigma1_prime": sigma.sigma1_prime,
        "sigma2_prime": sigma.sigma2_prime,
        "clipped": sigma.clipped,
    }


def report_test(outcome: TestOutcome, name: str) -> dict:
    return {
        "type": name,
        "statistic": outcome.statistic,
        "p_value": outcome.p_value,
        "critical_values": {str(k): v for k, v in outcome.critical_values.items()},
        "decisions": {str(k): v for k, v in outcome.decisions.items()},
        "per_c_stats": outcome.per_c_stats.tolist() if outcome.per_c_stats is not None else None,
        "candidates": list(outcome.candidates) if outcome.candidates is not None else None,
        "sigma": _sigma_dict(outcome.sigma),
        "null_sims": outcome.null_sims,
        "warnings": list(outcome.warnings),
    }


def report_forecast(report: ForecastReport) -> dict:
    return {
        "type": "forecast",
        "refit_policy": report.refit_policy,
        "mse": report.mse,
        "mae": report.mae,
        "predictions": report.predictions.tolist(),
        "actuals": report.actuals.tolist(),
        "train_fit": report_fit(report.train_fit),
    }


def report_mc_summary(summary: McSummary) -> dict:
    return {
        "type": "mc-estimate",
        "model": summary.kind.value,
        "params": list(summary.param_names),
        "em": summary.em,
        "ev": summary.ev,
        "sg": summary.sg,
        "vm": summary.vm,
        "reps": summary.reps,
        "failures": summary.failures,
        "threshold_exact_frac": summary.threshold_exact_frac,
    }


def report_size_power(table: SizePowerTable) -> dict:
    return {
        "type": "mc-test",
        "which": table.which,
        "data_model": table.gen_kind.value,
        "c0": table.c0,
        "n": table.n,
        "reps": table.reps,
        "failures": table.failures,
        "rejection": {str(k): v for k, v in table.rejection.items()},
    }


def report_diagnostics(
    ids_a: IdSequence,
    ids_b: IdSequence,
    table: ContingencyTable2x2,
    order_a: int,
    order_b: int,
    lr: tuple[float, int, float],
    binom_p: float,
) -> dict:
    return {
        "type": "diagnose-ids",
        "ids_hpart": ids_a.labels.tolist(),
        "ids_bpart": ids_b.labels.tolist(),
        "contingency": {
            "n11": table.n11,
            "n10": table.n10,
            "n01": table.n01,
            "n00": table.n00,
            "total": table.total,
        },
        "markov_order": {"hpart": order_a, "bpart": order_b},
        "lr_same_chain": {"stat": lr[0], "df": lr[1], "p_value": lr[2]},
        "exact_binomial_p": binom_p,
    }


def write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_plot_data(series: CountSeries, spec: ModelSpec, path) -> None:
    """Per-step plot sidecar: observation, its fitted one-step mean, and the
    datum's regime indicator (1 = lower/first triple)."""
    path_obj: IntensityPath = intensity_filter(series, spec)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y", "lambda", "regime"])
        for t in range(len(series)):
            lam = "" if t == 0 else repr(float(path_obj.lambdas[t - 1]))
            writer.writerow([t, int(series.values[t]), lam, int(path_obj.regimes[t])])


def write_regime_schematic(spec: ModelSpec, path, y_max: int | None = None) -> None:
    """Partition of the (previous-but-one, previous) count plane by the
    hysteretic regime indicator, for external plotting."""
    if spec.kind is not ModelKind.HPART:
        raise ValueError("regime schematic is defined for HPART models")
    th = spec.thresholds
    if y_max is None:
        y_max = int(2 * th.s + 5)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y_prev2", "y_prev1", "upper_regime"])
        for y2 in range(y_max + 1):
            for y1 in range(y_max + 1):
                pair = CountSeries(np.asarray([y2, y1], dtype=np.int64))
                reg = regime_path_hpart(pair, th.r, th.s, th.c, delta_y0=0)[-1]
                writer.writerow([y2, y1, int(1 - reg)])
