"""Regime "ID card" diagnostics for comparing two fitted two-regime models.

Each datum gets a binary card (1 = upper regime).  The tools here compare the
card sequences of two fits: a 2x2 contingency table, Markov order selection by
BIC, a likelihood-ratio test that both sequences follow one transition law,
and an exact binomial test on the discordant cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log

import numpy as np
from scipy.stats import binom, chi2

from .estimation import FitResult
from .models import CountSeries, ModelKind, intensity_filter

__all__ = [
    "IdSequence",
    "ContingencyTable2x2",
    "id_card_sequence",
    "contingency",
    "markov_order_bic",
    "lr_same_chain",
    "exact_binomial_discordant",
]


@dataclass(frozen=True)
class IdSequence:
    """Per-datum upper-regime indicators (1 = upper regime)."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels, dtype=np.int8)
        if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
            raise ValueError("ID sequence must be a 1-d array of 0/1 labels")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    def __len__(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Joint counts of two binary label sequences (first sequence on rows)."""

    n11: int
    n10: int
    n01: int
    n00: int

    def __post_init__(self) -> None:
        if min(self.n11, self.n10, self.n01, self.n00) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.n11 + self.n10 + self.n01 + self.n00

    @property
    def row_margins(self) -> tuple[int, int]:
        return (self.n11 + self.n10, self.n01 + self.n00)

    @property
    def col_margins(self) -> tuple[int, int]:
        return (self.n11 + self.n01, self.n10 + self.n00)

    @property
    def discordant(self) -> tuple[int, int]:
        return (self.n10, self.n01)


def id_card_sequence(series: CountSeries, fitted: FitResult) -> IdSequence:
    """Upper-regime cards from a fitted two-regime model.

    Regime paths label the first coefficient triple (the lower regime) with 1,
    so cards are the complement of the regime indicators.
    """
    if fitted.kind not in (ModelKind.BPART, ModelKind.HPART):
        raise ValueError("ID cards need a BPART or HPART fit")
    regimes = intensity_filter(series, fitted.spec_hat).regimes
    return IdSequence(1 - regimes)


def contingency(a: IdSequence, b: IdSequence) -> ContingencyTable2x2:
    """Joint 0/1 counts of two equal-length ID sequences (``a`` on rows)."""
    if len(a) != len(b):
        raise ValueError("sequences must have equal length")
    x, y = a.labels, b.labels
    return ContingencyTable2x2(
        n11=int(np.sum((x == 1) & (y == 1))),
        n10=int(np.sum((x == 1) & (y == 0))),
        n01=int(np.sum((x == 0) & (y == 1))),
        n00=int(np.sum((x == 0) & (y == 0))),
    )


def _transition_counts(bits: np.ndarray, order: int) -> np.ndarray:
    """Counts[context, symbol] over the 2**order binary contexts."""
    counts = np.zeros((2**order if order > 0 else 1, 2), dtype=np.int64)
    ctx = 0
    mask = (1 << order) - 1
    for i in range(order):
        ctx = (ctx << 1) | int(bits[i])
    for t in range(order, bits.size):
        counts[ctx & mask if order > 0 else 0, bits[t]] += 1
        if order > 0:
            ctx = ((ctx << 1) | int(bits[t])) & mask
    return counts


def _chain_loglik(counts: np.ndarray) -> float:
    """Maximized conditional log-likelihood of a finite binary chain."""
    ll = 0.0
    for row in counts:
        tot = row.sum()
        if tot == 0:
            continue
        for k in row:
            if k > 0:
                ll += k * log(k / tot)
    return ll


def markov_order_bic(seq: IdSequence, max_order: int = 3) -> int:
    """Markov order (0..max_order) of a binary sequence minimizing the BIC
    ``-2 loglik + 2**order * log(n - order)``."""
    if not 0 <= max_order <= 3:
        raise ValueError("max_order must be between 0 and 3")
    n = len(seq)
    if n <= 4 * 2**max_order:
        raise ValueError(f"sequence too short for order selection up to {max_order}")
    bits = seq.labels
    best_order, best_bic = 0, np.inf
    for order in range(max_order + 1):
        ll = _chain_loglik(_transition_counts(bits, order))
        bic = -2.0 * ll + (2**order) * log(n - order)
        if bic < best_bic:
            best_order, best_bic = order, bic
    return best_order


def lr_same_chain(a: IdSequence, b: IdSequence, order: int) -> tuple[float, int, float]:
    """Likelihood-ratio test that two binary sequences share one transition law.

    Returns ``(statistic, df, p_value)`` with ``df = 2**order`` free transition
    parameters and a chi-square reference distribution.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    for seq in (a, b):
        if len(seq) <= max(order, 1):
            raise ValueError("sequences too short for the requested order")
    ca = _transition_counts(a.labels, order)
    cb = _transition_counts(b.labels, order)
    stat = 2.0 * (_chain_loglik(ca) + _chain_loglik(cb) - _chain_loglik(ca + cb))
    stat = max(stat, 0.0)
    df = 2**order
    return stat, df, float(chi2.sf(stat, df))


def exact_binomial_discordant(table: ContingencyTable2x2) -> float:
    """Two-sided exact binomial p-value that discordant cells split 50/50
    (doubled smaller tail, capped at 1)."""
    k, m = table.discordant
    n = k + m
    if n < 1:
        raise ValueError("needs at least one discordant observation")
    tail = float(binom.cdf(min(k, m), n, 0.5))
    return min(1.0, 2.0 * tail)
