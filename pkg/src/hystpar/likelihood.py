"""Conditional Poisson log-likelihood, intensity gradients, and the plug-in
information matrix.

The likelihood conditions on the first stored observation: term ``t`` pairs
``y_t`` with the intensity computed from ``y_{t-1}`` and the previous state,
so a series of length ``n`` contributes ``n - 1`` scored terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SingularInformationError
from .models import CountSeries, IntensityPath, ModelKind, ModelSpec, regime_path

__all__ = [
    "GradientPath",
    "InformationMatrix",
    "log_likelihood",
    "intensity_gradient",
    "score_vector",
    "information_matrix",
    "active_params",
]

CONDITION_LIMIT = 1e12


def active_params(kind: ModelKind) -> tuple[int, ...]:
    """Coefficient slots a model kind identifies (PAR uses one triple only)."""
    return (0, 1, 2) if kind is ModelKind.PAR else (0, 1, 2, 3, 4, 5)


@dataclass(frozen=True)
class GradientPath:
    """Per-step derivatives of the filtered intensity in the six coefficients,
    aligned with :class:`IntensityPath`."""

    dlambda: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.dlambda, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 6:
            raise ValueError("gradient path must have shape (n, 6)")
        arr.setflags(write=False)
        object.__setattr__(self, "dlambda", arr)

    def __len__(self) -> int:
        return int(self.dlambda.shape[0])


@dataclass(frozen=True)
class InformationMatrix:
    """Plug-in average ``mean_t[ grad_t grad_t' / lam_t ]`` over scored steps."""

    matrix: np.ndarray
    active: tuple[int, ...]
    n_scored: int

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (6, 6):
            raise ValueError("information matrix must be 6x6")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def covariance(self) -> np.ndarray:
        """Asymptotic covariance estimate ``inv(G)/n`` on the active block.

        Inversion goes through a Cholesky factorization with a condition
        guard.  Inactive rows/columns are NaN.  Raises
        :class:`SingularInformationError` when a regime was never visited or
        the active block's condition estimate exceeds ``1e12``.
        """
        idx = np.asarray(self.active)
        block = self.matrix[np.ix_(idx, idx)]
        diag = np.diag(block)
        if np.any(diag <= 0):
            dead = [int(idx[i]) for i in np.flatnonzero(diag <= 0)]
            raise SingularInformationError(
                f"information matrix singular: parameter slots {dead} carry no "
                "curvature (regime never visited?)"
            )
        cond = np.linalg.cond(block)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularInformationError(
                f"information matrix ill-conditioned (condition estimate {cond:.3g})"
            )
        try:
            chol = np.linalg.cholesky(block)
        except np.linalg.LinAlgError as exc:
            raise SingularInformationError(
                "information matrix is not positive definite"
            ) from exc
        inv_chol = np.linalg.solve(chol, np.eye(len(idx)))
        inv = inv_chol.T @ inv_chol
        cov = np.full((6, 6), np.nan)
        cov[np.ix_(idx, idx)] = inv / self.n_scored
        return cov

    def standard_errors(self) -> np.ndarray:
        """Square roots of the covariance diagonal (NaN on inactive slots)."""
        return np.sqrt(np.diag(self.covariance()))


def _filter_arrays(series: CountSeries, spec: ModelSpec):
    y = series.as_float()
    regimes = regime_path(series, spec)
    lam0 = spec.init.resolve_lambda0(series, spec.coefficients)
    return y, regimes, spec.coefficients.as_array(), lam0


def log_likelihood(series: CountSeries, spec: ModelSpec) -> tuple[float, IntensityPath]:
    """Conditional Poisson log-likelihood and the filtered path behind it."""
    y, regimes, coefs, lam0 = _filter_arrays(series, spec)
    lam = _kernels.intensity_from_regimes(y, regimes, coefs, lam0)
    ll = _kernels.loglik_from_path(y, lam)
    return float(ll), IntensityPath(lam, regimes)


def intensity_gradient(series: CountSeries, spec: ModelSpec) -> GradientPath:
    """Derivatives of each filtered intensity with respect to the coefficients
    (thresholds held fixed, so regime indicators are constants)."""
    y, regimes, coefs, lam0 = _filter_arrays(series, spec)
    _, grad = _kernels.filter_with_gradient(y, regimes, coefs, lam0)
    return GradientPath(grad)


def score_vector(series: CountSeries, spec: ModelSpec) -> np.ndarray:
    """Analytic gradient of the log-likelihood in the six coefficients."""
    y, regimes, coefs, lam0 = _filter_arrays(series, spec)
    _, score = _kernels.loglik_and_score(y, regimes, coefs, lam0)
    return score


def information_matrix(series: CountSeries, spec: ModelSpec) -> InformationMatrix:
    """Plug-in information estimate at ``spec`` (typically a fitted model)."""
    y, regimes, coefs, lam0 = _filter_arrays(series, spec)
    lam, grad = _kernels.filter_with_gradient(y, regimes, coefs, lam0)
    G = _kernels.info_matrix_from_path(y, lam, grad)
    return InformationMatrix(G, active_params(spec.kind), max(len(series) - 1, 1))
