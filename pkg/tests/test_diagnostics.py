"""Regime ID cards: contingency, Markov order, same-chain LR, exact binomial."""

import numpy as np
import pytest
from scipy.stats import chi2

from conftest import SET1, make_fit
from hystpar import (
    ContingencyTable2x2,
    CountSeries,
    IdSequence,
    InitPolicy,
    ModelSpec,
    contingency,
    exact_binomial_discordant,
    id_card_sequence,
    lr_same_chain,
    markov_order_bic,
)


def ids(bits):
    return IdSequence(np.asarray(bits, dtype=np.int8))


def simulate_chain(p_stay, length, rng, start=0):
    out = np.empty(length, dtype=np.int8)
    state = start
    for t in range(length):
        out[t] = state
        if rng.random() > p_stay:
            state = 1 - state
    return out


class TestIdCards:
    def test_all_low_data_gives_all_zero_cards(self, rng):
        low = CountSeries(rng.integers(0, 3, size=60))
        fit_b = make_fit(low, ModelSpec.bpart(SET1, 3, 6))
        assert id_card_sequence(low, fit_b).labels.tolist() == [0] * 60

    def test_cards_complement_regimes(self):
        ser = CountSeries(np.array([2, 5, 7, 4]))
        fit_h = make_fit(ser, ModelSpec.hpart(SET1, 3, 6, 0, init=InitPolicy(lambda0=1.0)))
        assert id_card_sequence(ser, fit_h).labels.tolist() == [0, 0, 1, 1]

    def test_par_fit_rejected(self, rng):
        ser = CountSeries(rng.integers(0, 5, size=60))
        fit_p = make_fit(ser, ModelSpec.par(2.0, 0.1, 0.1))
        with pytest.raises(ValueError):
            id_card_sequence(ser, fit_p)


class TestContingency:
    def test_identical_sequences_have_zero_off_diagonal(self, rng):
        a = ids(rng.integers(0, 2, size=100))
        table = contingency(a, a)
        assert table.n10 == table.n01 == 0
        assert table.total == 100

    def test_reproduces_escape_custody_cells(self):
        a = ids([1] * 72 + [1] * 14 + [0] * 0 + [0] * 94)
        b = ids([1] * 72 + [0] * 14 + [1] * 0 + [0] * 94)
        table = contingency(a, b)
        assert (table.n11, table.n10, table.n01, table.n00) == (72, 14, 0, 94)
        assert table.row_margins == (86, 94)
        assert table.col_margins == (72, 108)
        assert table.total == 180

    def test_margins_sum_to_total(self, rng):
        a = ids(rng.integers(0, 2, size=57))
        b = ids(rng.integers(0, 2, size=57))
        t = contingency(a, b)
        assert sum(t.row_margins) == sum(t.col_margins) == t.total == 57

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            contingency(ids([0, 1]), ids([0, 1, 1]))


class TestMarkovOrderBic:
    def test_iid_sequence_selects_order_zero(self):
        hits = 0
        for seed in range(30):
            rng = np.random.default_rng(1000 + seed)
            seq = ids(rng.integers(0, 2, size=500))
            hits += markov_order_bic(seq, max_order=3) == 0
        assert hits >= 27

    def test_persistent_chain_selects_order_one(self):
        for seed in range(10):
            rng = np.random.default_rng(2000 + seed)
            seq = ids(simulate_chain(0.95, 500, rng))
            assert markov_order_bic(seq, max_order=3) == 1

    def test_insufficient_data_rejected(self):
        with pytest.raises(ValueError):
            markov_order_bic(ids([0, 1] * 10), max_order=3)

    def test_invariant_under_joint_relabeling(self, rng):
        seq = simulate_chain(0.9, 400, rng)
        assert markov_order_bic(ids(seq)) == markov_order_bic(ids(1 - seq))


class TestLrSameChain:
    def test_identical_sequences_give_zero(self, rng):
        a = ids(simulate_chain(0.8, 300, rng))
        stat, df, p = lr_same_chain(a, a, order=1)
        assert stat == 0.0
        assert df == 2
        assert p == 1.0

    def test_paper_scale_consistency(self):
        # a statistic of 2.46 on 2 degrees of freedom has tail mass 0.29
        assert float(chi2.sf(2.46, 2)) == pytest.approx(0.2922926, abs=1e-6)

    def test_size_near_nominal_for_same_chain_pairs(self):
        rng = np.random.default_rng(3)
        rejections = 0
        n_pairs = 1000
        for _ in range(n_pairs):
            a = ids(simulate_chain(0.8, 250, rng))
            b = ids(simulate_chain(0.8, 250, rng))
            _, _, p = lr_same_chain(a, b, order=1)
            rejections += p < 0.05
        assert abs(rejections / n_pairs - 0.05) < 0.02

    def test_detects_different_chains(self, rng):
        a = ids(simulate_chain(0.95, 400, rng))
        b = ids(simulate_chain(0.55, 400, rng))
        stat, df, p = lr_same_chain(a, b, order=1)
        assert p < 0.01


class TestExactBinomial:
    def test_six_zero_split(self):
        table = ContingencyTable2x2(n11=45, n10=6, n01=0, n00=53)
        assert exact_binomial_discordant(table) == pytest.approx(0.03125, abs=1e-15)

    def test_balanced_split_is_one(self):
        table = ContingencyTable2x2(n11=0, n10=3, n01=3, n00=0)
        assert exact_binomial_discordant(table) == 1.0

    def test_fourteen_zero_split(self):
        table = ContingencyTable2x2(n11=72, n10=14, n01=0, n00=94)
        assert exact_binomial_discordant(table) == pytest.approx(2 * 0.5**14, abs=1e-15)

    def test_swap_invariance(self, rng):
        for _ in range(20):
            k, m = int(rng.integers(0, 12)), int(rng.integers(0, 12))
            if k + m == 0:
                continue
            t1 = ContingencyTable2x2(0, k, m, 0)
            t2 = ContingencyTable2x2(0, m, k, 0)
            assert exact_binomial_discordant(t1) == exact_binomial_discordant(t2)

    def test_no_discordance_rejected(self):
        with pytest.raises(ValueError):
            exact_binomial_discordant(ContingencyTable2x2(10, 0, 0, 5))
