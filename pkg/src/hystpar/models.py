"""Model definitions, regime indicators, intensity filtering, and simulation.

Four conditionally Poisson models share one piecewise-linear intensity
recursion: the plain Poisson autoregression (PAR), its self-excited threshold
variant (SETPAR), the buffered variant (BPART, regime carried over inside the
band ``(r, s]``) and the hysteretic variant (HPART, regime inside the band
decided by the sign of the last increment relative to ``c``).

Index convention used throughout the package: the stored count sequence is
``v_0 .. v_{n-1}``; position 0 acts as the fixed starting observation.  The
regime/intensity path entry ``t`` is the value implied after observing
``v_t``, i.e. the conditional mean and regime of the *next* step.  The last
path entry is therefore the one-step-ahead forecast.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels

__all__ = [
    "ModelKind",
    "CountSeries",
    "CoefficientVector",
    "Thresholds",
    "InitPolicy",
    "ModelSpec",
    "IntensityPath",
    "regime_path_bpart",
    "regime_path_hpart",
    "regime_path_setpar",
    "regime_path",
    "intensity_filter",
    "simulate",
]

MIN_FIT_LENGTH = 30
DEFAULT_BURN_IN = 500


class ModelKind(str, Enum):
    PAR = "par"
    SETPAR = "setpar"
    BPART = "bpart"
    HPART = "hpart"

    @property
    def n_thresholds(self) -> int:
        return {"par": 0, "setpar": 1, "bpart": 2, "hpart": 3}[self.value]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CountSeries:
    """An observed sequence of nonnegative integer counts.

    The first stored value doubles as the fixed starting observation of the
    intensity recursion; likelihood evaluation conditions on it.  The extra
    lag an HPART filter needs before the first step enters through
    :class:`InitPolicy.delta_y0`.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("count series must be a nonempty 1-d sequence")
        if not np.issubdtype(arr.dtype, np.integer):
            as_int = np.asarray(arr, dtype=np.int64)
            if not np.array_equal(as_int, arr):
                raise ValueError("count series must contain integers only")
            arr = as_int
        else:
            arr = arr.astype(np.int64)
        if (arr < 0).any():
            raise ValueError("count series must be nonnegative")
        object.__setattr__(self, "values", _readonly(arr))

    def __len__(self) -> int:
        return int(self.values.size)

    def as_float(self) -> np.ndarray:
        return self.values.astype(np.float64)

    def mean(self) -> float:
        return float(self.values.mean())

    def diffs(self) -> np.ndarray:
        """First differences ``v_t - v_{t-1}`` (length ``n - 1``)."""
        return np.diff(self.values)


@dataclass(frozen=True)
class CoefficientVector:
    """The six intensity coefficients ``(w1, a1, b1, w2, a2, b2)``.

    Intercepts must be positive, slopes nonnegative, feedback weights in
    ``[0, 1)``, and the second (upper-regime) pair must satisfy
    ``a2 + b2 < 1``.
    """

    omega1: float
    alpha1: float
    beta1: float
    omega2: float
    alpha2: float
    beta2: float

    def __post_init__(self) -> None:
        for name in ("omega1", "omega2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("alpha1", "alpha2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not (0 <= b < 1):
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.alpha2 + self.beta2 >= 1:
            raise ValueError("alpha2 + beta2 must be below 1")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.omega1, self.alpha1, self.beta1, self.omega2, self.alpha2, self.beta2]
        )

    @classmethod
    def from_array(cls, arr) -> "CoefficientVector":
        w1, a1, b1, w2, a2, b2 = (float(x) for x in arr)
        return cls(w1, a1, b1, w2, a2, b2)

    @property
    def upper_mean(self) -> float:
        """Fixed point ``w2 / (1 - a2 - b2)`` of the upper-regime recursion."""
        return self.omega2 / (1.0 - self.alpha2 - self.beta2)


PARAM_NAMES = ("omega1", "alpha1", "beta1", "omega2", "alpha2", "beta2")


@dataclass(frozen=True)
class Thresholds:
    """Integer threshold tuple; which fields are set depends on the model kind.

    ``r <= s`` always; fitting additionally demands ``r < s`` for the
    two-threshold models.
    """

    r: int | None = None
    s: int | None = None
    c: int | None = None

    def __post_init__(self) -> None:
        for name in ("r", "s"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 0):
                raise ValueError(f"threshold {name} must be a nonnegative integer")
        if self.c is not None and int(self.c) != self.c:
            raise ValueError("threshold c must be an integer")
        if self.r is not None and self.s is not None and self.r > self.s:
            raise ValueError("thresholds must satisfy r <= s")

    @classmethod
    def none(cls) -> "Thresholds":
        return cls()

    @classmethod
    def setpar(cls, r: int) -> "Thresholds":
        return cls(r=int(r))

    @classmethod
    def bpart(cls, r: int, s: int) -> "Thresholds":
        return cls(r=int(r), s=int(s))

    @classmethod
    def hpart(cls, r: int, s: int, c: int) -> "Thresholds":
        return cls(r=int(r), s=int(s), c=int(c))

    def astuple(self) -> tuple:
        return tuple(v for v in (self.r, self.s, self.c) if v is not None)

    def matches(self, kind: ModelKind) -> bool:
        want = kind.n_thresholds
        have = sum(v is not None for v in (self.r, self.s, self.c))
        if want != have:
            return False
        if kind is ModelKind.SETPAR:
            return self.r is not None
        if kind is ModelKind.BPART:
            return self.r is not None and self.s is not None
        if kind is ModelKind.HPART:
            return None not in (self.r, self.s, self.c)
        return True


@dataclass(frozen=True)
class InitPolicy:
    """Starting state of the intensity recursion.

    ``lambda0`` is a positive number or one of the rules ``"sample-mean"``
    (mean of the observed series) and ``"unconditional-mean"`` (upper-regime
    fixed point; also what simulation falls back to, having no sample yet).
    ``r0`` seeds the buffered regime when the starting observation falls in
    the band; ``None`` applies the rule ``1{v_0 <= r}``.  ``delta_y0`` is the
    increment assumed before the first observation (HPART only).
    """

    lambda0: float | str = "sample-mean"
    r0: int | None = None
    delta_y0: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.lambda0, str):
            if self.lambda0 not in ("sample-mean", "unconditional-mean"):
                raise ValueError("lambda0 rule must be 'sample-mean' or 'unconditional-mean'")
        elif not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if self.r0 not in (None, 0, 1):
            raise ValueError("r0 must be 0, 1, or None")

    def resolve_lambda0(self, series: CountSeries | None, coefs: CoefficientVector) -> float:
        if isinstance(self.lambda0, str):
            if self.lambda0 == "sample-mean" and series is not None:
                lam0 = max(series.mean(), 1e-6)
            else:
                lam0 = coefs.upper_mean
        else:
            lam0 = float(self.lambda0)
        if not lam0 > 0:
            raise ValueError("resolved lambda0 must be positive")
        return lam0

    def resolve_r0(self, first_value: int, r: int) -> int:
        if self.r0 is not None:
            return int(self.r0)
        return 1 if first_value <= r else 0


@dataclass(frozen=True)
class ModelSpec:
    """A model kind together with its coefficients, thresholds, and start-up."""

    kind: ModelKind
    coefficients: CoefficientVector
    thresholds: Thresholds = field(default_factory=Thresholds)
    init: InitPolicy = field(default_factory=InitPolicy)

    def __post_init__(self) -> None:
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not self.thresholds.matches(kind):
            raise ValueError(f"threshold fields do not match model kind {kind.value!r}")

    @classmethod
    def par(cls, omega: float, alpha: float, beta: float, init: InitPolicy | None = None) -> "ModelSpec":
        coefs = CoefficientVector(omega, alpha, beta, omega, alpha, beta)
        return cls(ModelKind.PAR, coefs, Thresholds.none(), init or InitPolicy())

    @classmethod
    def setpar(cls, coefs: CoefficientVector, r: int, init: InitPolicy | None = None) -> "ModelSpec":
        return cls(ModelKind.SETPAR, coefs, Thresholds.setpar(r), init or InitPolicy())

    @classmethod
    def bpart(cls, coefs: CoefficientVector, r: int, s: int, init: InitPolicy | None = None) -> "ModelSpec":
        return cls(ModelKind.BPART, coefs, Thresholds.bpart(r, s), init or InitPolicy())

    @classmethod
    def hpart(cls, coefs: CoefficientVector, r: int, s: int, c: int, init: InitPolicy | None = None) -> "ModelSpec":
        return cls(ModelKind.HPART, coefs, Thresholds.hpart(r, s, c), init or InitPolicy())

    def with_init(self, init: InitPolicy) -> "ModelSpec":
        return replace(self, init=init)


@dataclass(frozen=True)
class IntensityPath:
    """Filtered intensities with the regime indicator that produced each one.

    ``lambdas[t]`` is the conditional mean implied after observing the series
    value at ``t`` (so it predicts step ``t + 1``); ``regimes[t]`` is 1 when
    the first coefficient triple was active.
    """

    lambdas: np.ndarray
    regimes: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.lambdas, dtype=np.float64)
        reg = np.asarray(self.regimes, dtype=np.int8)
        if lam.shape != reg.shape or lam.ndim != 1:
            raise ValueError("lambdas and regimes must be 1-d arrays of equal length")
        if not (lam > 0).all():
            raise ValueError("intensities must be positive")
        object.__setattr__(self, "lambdas", _readonly(lam))
        object.__setattr__(self, "regimes", _readonly(reg))

    def __len__(self) -> int:
        return int(self.lambdas.size)


def regime_path_bpart(series: CountSeries, r: int, s: int, r0: int = 0) -> np.ndarray:
    """Buffered regime indicators: switch at ``r`` going down, ``s`` going up,
    carry the previous state inside the band ``(r, s]``."""
    if r > s:
        raise ValueError("requires r <= s")
    return _kernels.bpart_regimes(series.as_float(), float(r), float(s), np.int8(r0))


def regime_path_hpart(series: CountSeries, r: int, s: int, c: int, delta_y0: int = 0) -> np.ndarray:
    """Hysteretic regime indicators.

    ``1{dy >= c} 1{v <= s} + 1{dy < c} 1{v <= r}`` with ``dy`` the increment
    into the lagged value (``delta_y0`` before the first observation).

    Direction of the hysteresis loop, spelled out because the sign
    convention is easy to flip: inside the band ``(r, s]`` an
    increment at or above ``c`` (rising) keeps the lower regime until the
    value clears ``s``; an increment below ``c`` (falling) already switches
    to the upper regime at ``r``.  Equivalently the indicator equals
    ``1{v <= r} + 1{r < v <= s} 1{dy >= c}``.
    """
    if r > s:
        raise ValueError("requires r <= s")
    return _kernels.hpart_regimes(
        series.as_float(), float(r), float(s), float(c), float(delta_y0)
    )


def regime_path_setpar(series: CountSeries, r: int) -> np.ndarray:
    return _kernels.setpar_regimes(series.as_float(), float(r))


def regime_path(series: CountSeries, spec: ModelSpec) -> np.ndarray:
    """Regime indicators for any model kind (all ones for PAR)."""
    th = spec.thresholds
    if spec.kind is ModelKind.PAR:
        return np.ones(len(series), dtype=np.int8)
    if spec.kind is ModelKind.SETPAR:
        return regime_path_setpar(series, th.r)
    if spec.kind is ModelKind.BPART:
        r0 = spec.init.resolve_r0(int(series.values[0]), th.r)
        return regime_path_bpart(series, th.r, th.s, r0)
    return regime_path_hpart(series, th.r, th.s, th.c, spec.init.delta_y0)


def intensity_filter(series: CountSeries, spec: ModelSpec) -> IntensityPath:
    """Run the piecewise-linear intensity recursion over a series."""
    lam0 = spec.init.resolve_lambda0(series, spec.coefficients)
    regimes = regime_path(series, spec)
    lam = _kernels.intensity_from_regimes(
        series.as_float(), regimes, spec.coefficients.as_array(), lam0
    )
    return IntensityPath(lam, regimes)


def simulate(
    spec: ModelSpec,
    n: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int | np.random.SeedSequence = 0,
) -> tuple[CountSeries, IntensityPath]:
    """Draw a trajectory of length ``n`` from a model.

    Each step draws ``y_t ~ Poisson(lam_t)`` with ``lam_t`` from the model
    recursion; the first ``burn_in`` steps are discarded.  The returned path
    holds the intensity and regime that generated each kept count.
    Deterministic for a fixed ``(spec, n, burn_in, seed)``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    coefs = spec.coefficients
    th = spec.thresholds
    w1, a1, b1 = coefs.omega1, coefs.alpha1, coefs.beta1
    w2, a2, b2 = coefs.omega2, coefs.alpha2, coefs.beta2
    init = spec.init
    lam_prev = coefs.upper_mean if init.lambda0 == "sample-mean" else init.resolve_lambda0(None, coefs)

    rng = np.random.default_rng(seed)
    y_prev = int(rng.poisson(lam_prev))
    y_prev2 = y_prev  # makes the first increment equal delta_y0's default of 0
    if spec.kind is ModelKind.BPART:
        reg_prev = init.resolve_r0(y_prev, th.r)
    else:
        reg_prev = 1

    total = burn_in + n
    ys = np.empty(total, dtype=np.int64)
    lams = np.empty(total, dtype=np.float64)
    regs = np.empty(total, dtype=np.int8)
    for t in range(total):
        if spec.kind is ModelKind.PAR:
            e = 1
        elif spec.kind is ModelKind.SETPAR:
            e = 1 if y_prev <= th.r else 0
        elif spec.kind is ModelKind.BPART:
            if y_prev <= th.r:
                e = 1
            elif y_prev > th.s:
                e = 0
            else:
                e = reg_prev
            reg_prev = e
        else:
            dy = y_prev - y_prev2
            if dy >= th.c:
                e = 1 if y_prev <= th.s else 0
            else:
                e = 1 if y_prev <= th.r else 0
        lam = (w1 + a1 * y_prev + b1 * lam_prev) if e == 1 else (w2 + a2 * y_prev + b2 * lam_prev)
        y = int(rng.poisson(lam))
        ys[t] = y
        lams[t] = lam
        regs[t] = e
        y_prev2 = y_prev
        y_prev = y
        lam_prev = lam
    kept = slice(burn_in, total)
    return CountSeries(ys[kept]), IntensityPath(lams[kept], regs[kept])
