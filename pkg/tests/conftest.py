"""Shared helpers for the test suite."""

import numpy as np
import pytest

from hystpar import (
    CoefficientVector,
    CountSeries,
    FitResult,
    InitPolicy,
    ModelSpec,
    information_matrix,
    log_likelihood,
)

SET1 = CoefficientVector(0.5, 0.6, 0.4, 0.2, 0.4, 0.5)
SET2 = CoefficientVector(0.6, 0.8, 0.7, 0.4, 0.2, 0.2)


def make_fit(series: CountSeries, spec: ModelSpec) -> FitResult:
    """Package an arbitrary spec as a FitResult (for unit tests that exercise
    operations downstream of fitting without running the optimizer)."""
    ll, _ = log_likelihood(series, spec)
    info = information_matrix(series, spec)
    try:
        se = info.standard_errors()
    except Exception:
        se = np.full(6, np.nan)
    return FitResult(
        spec_hat=spec,
        loglik=ll,
        info=info,
        std_errors=se,
        profile=(),
        diagnostics={},
        n_obs=len(series),
        n_scored=len(series) - 1,
    )


def random_valid_spec(rng: np.random.Generator, kind: str = "bpart") -> ModelSpec:
    """A coefficient/threshold draw safely inside the valid parameter box."""
    def triple():
        a = rng.uniform(0.05, 0.7)
        b = rng.uniform(0.05, min(0.85, 0.9 - a))
        w = rng.uniform(0.2, 2.0)
        return w, a, b

    w1, a1, b1 = triple()
    w2, a2, b2 = triple()
    coefs = CoefficientVector(w1, a1, b1, w2, a2, b2)
    r = int(rng.integers(1, 5))
    s = r + int(rng.integers(1, 4))
    init = InitPolicy(lambda0=float(rng.uniform(0.5, 3.0)))
    if kind == "par":
        return ModelSpec.par(w1, a1, b1, init=init)
    if kind == "setpar":
        return ModelSpec.setpar(coefs, r, init=init)
    if kind == "bpart":
        return ModelSpec.bpart(coefs, r, s, init=init)
    return ModelSpec.hpart(coefs, r, s, int(rng.integers(-2, 3)), init=init)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
