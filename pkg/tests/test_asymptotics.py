import math

import pytest

from gatedcusum import (
    make_prediction,
    predict_delay_deficit,
    predict_delay_surplus,
    predict_fa_deficit,
    predict_fa_surplus,
)
from gatedcusum.renewal import RenewalConstants


def _consts(gated=False, **overrides):
    base = dict(
        ladder_height_mean=0.41,
        ladder_height_second=0.265,
        running_min_mean=0.74,
        overshoot_laplace=0.747,
        neg_ladder_exp_mean=0.69,
        neg_ladder_epoch_mean=3.27,
        excursion_tail_const=0.228,
        gated_descent_mean=-0.41 if gated else None,
        gated=gated,
        stderr={},
    )
    base.update(overrides)
    return RenewalConstants(**base)


class TestDelayPredictors:
    def test_linear_in_threshold(self, stats, ungated_consts):
        p10 = predict_delay_surplus(stats, ungated_consts, 10.0)
        p20 = predict_delay_surplus(stats, ungated_consts, 20.0)
        assert p20 - p10 == pytest.approx(10.0 / stats.i_kl, rel=1e-12)

    def test_first_order_ratio_tends_to_one(self, stats, ungated_consts):
        h = 1e6
        assert predict_delay_surplus(stats, ungated_consts, h) / (h / stats.i_kl) == pytest.approx(
            1.0, abs=1e-5
        )

    def test_deficit_reduces_exactly_to_surplus_at_full_occupancy(self, stats, ungated_consts):
        h = 10.0
        assert predict_delay_deficit(stats, ungated_consts, 1.0, h) == predict_delay_surplus(
            stats, ungated_consts, h
        )

    def test_deficit_scales_inversely_with_occupancy(self, stats, gated_consts, ungated_consts):
        surplus = predict_delay_surplus(stats, ungated_consts, 10.0)
        for hbar, pi1 in ((0.4, 0.8), (0.3, 0.6), (0.2, 0.4)):
            deficit = predict_delay_deficit(stats, gated_consts[hbar], pi1, 10.0)
            assert deficit * pi1 / surplus == pytest.approx(1.0, abs=0.01)

    def test_wrong_regime_constants_rejected(self, stats):
        with pytest.raises(ValueError):
            predict_delay_surplus(stats, _consts(gated=True), 10.0)

    def test_occupancy_out_of_range_rejected(self, stats):
        with pytest.raises(ValueError):
            predict_delay_deficit(stats, _consts(gated=True), 0.0, 10.0)
        with pytest.raises(ValueError):
            predict_delay_deficit(stats, _consts(gated=True), 1.2, 10.0)


class TestFaPredictors:
    def test_arl_identity(self, stats, ungated_consts):
        beta, arl = predict_fa_surplus(stats, ungated_consts, 7.0)
        assert arl == pytest.approx(math.exp(7.0) / beta, rel=1e-12)

    def test_laplace_upper_bound_case(self, stats):
        beta, _ = predict_fa_surplus(stats, _consts(overshoot_laplace=1.0), 5.0)
        assert beta == pytest.approx(stats.i_kl, rel=1e-12)

    def test_deficit_exponent_positive_and_finite(self, stats, gated_consts, chains):
        for hbar, chain in chains.items():
            beta, arl = predict_fa_deficit(stats, gated_consts[hbar], chain.pi1, 10.0)
            assert 0 < beta < 1
            assert math.isfinite(arl) and arl > 0

    def test_deficit_exponent_monotone_in_occupancy(self, stats, gated_consts, chains):
        betas = [
            predict_fa_deficit(stats, gated_consts[hbar], chains[hbar].pi1, 10.0)[0]
            for hbar in (0.2, 0.3, 0.4)
        ]
        assert betas[0] < betas[1] < betas[2]

    def test_sign_convention_violation_rejected(self, stats):
        bad = _consts(gated=True, gated_descent_mean=0.1)
        with pytest.raises(ValueError):
            predict_fa_deficit(stats, bad, 0.8, 10.0)

    def test_missing_descent_constant_rejected(self, stats):
        with pytest.raises(ValueError):
            predict_fa_deficit(stats, _consts(gated=False), 0.8, 10.0)

    def test_full_occupancy_exponent_couples_to_surplus(self, model, stats, ungated_consts):
        # with a never-leaving chain the gated descent is the plain descent,
        # so the deficit exponent at pi1=1 must match the surplus one
        from gatedcusum import GateChain, estimate_neg_ladder, estimate_s_k1

        chain = GateChain.from_rates(alpha=0.5, beta=1.0 - 1e-15)
        descent = estimate_s_k1(model, chain, 300_000, seed=881)
        neg = estimate_neg_ladder(model, 300_000, seed=882)
        consts = _consts(
            gated=True,
            gated_descent_mean=descent.value,
            excursion_tail_const=neg.c_inf,
        )
        beta_full, _ = predict_fa_deficit(stats, consts, 1.0, 10.0)
        beta_surplus, _ = predict_fa_surplus(stats, ungated_consts, 10.0)
        assert beta_full == pytest.approx(beta_surplus, rel=0.10)


class TestBundle:
    def test_surplus_bundle(self, stats, ungated_consts):
        p = make_prediction(stats, ungated_consts, 10.0)
        assert p.regime == "surplus"
        assert p.arl2fa == pytest.approx(math.exp(10.0) / p.fa_exponent, rel=1e-12)
        assert p.expected_delay > 10.0 / stats.i_kl - 10

    def test_deficit_bundle(self, stats, gated_consts, chains):
        p = make_prediction(stats, gated_consts[0.4], 10.0, pi1=chains[0.4].pi1)
        assert p.regime == "deficit"
        assert p.expected_delay > 0
