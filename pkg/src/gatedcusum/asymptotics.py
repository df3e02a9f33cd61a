"""Closed-form asymptotic predictions assembled from the estimated constants.

Delay predictions are first-order expansions of the expected first-passage
time in the threshold h: the leading term h over the mean statistic drift
(i_kl, scaled by the sensing occupancy pi1 when gated), plus the constant
correction combining the limiting threshold overshoot with the walk's
expected dip below its start.  Via the renewal identity

    E[-min walk] = E[Z^2]/(2 E[Z]) - overshoot_limit

the correction reduces to ladder_second/ladder_mean - E[Z^2]/(2 i_kl), which
is the form implemented for both regimes; the gated case divides by pi1*i_kl
and uses ladder moments estimated on the gated walk (they coincide with the
ungated ones in distribution, since skipped slots do not move the walk).

False-alarm tail exponents: the surplus exponent is i_kl times the squared
overshoot Laplace limit; the deficit exponent divides the excursion-maximum
tail constant by the mean slot length of a descent cycle of the gated walk,
written as -pi1 * i0 * c_inf / E[gated walk at first descent].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .change_model import LlrStats
from .renewal import RenewalConstants


@dataclass(frozen=True)
class Prediction:
    """One configuration's predicted operating characteristics."""

    regime: str               # "surplus" | "deficit"
    expected_delay: float
    fa_exponent: float
    arl2fa: float
    threshold: float


def predict_delay_surplus(stats: LlrStats, consts: RenewalConstants, h: float) -> float:
    """Expected detection delay when the sensor samples every slot."""
    _require(consts, gated=False)
    bracket = h + consts.ladder_height_second / consts.ladder_height_mean \
        - stats.z_second_moment_post / (2.0 * stats.i_kl)
    return bracket / stats.i_kl


def predict_delay_deficit(
    stats: LlrStats, consts: RenewalConstants, pi1: float, h: float
) -> float:
    """Expected detection delay (in slots) at sensing occupancy pi1.

    Reduces exactly to the surplus predictor at pi1 = 1 with ungated
    constants.
    """
    if not (0.0 < pi1 <= 1.0):
        raise ValueError("pi1 must lie in (0, 1]")
    bracket = h + consts.ladder_height_second / consts.ladder_height_mean \
        - stats.z_second_moment_post / (2.0 * stats.i_kl)
    return bracket / (pi1 * stats.i_kl)


def predict_fa_surplus(
    stats: LlrStats, consts: RenewalConstants, h: float
) -> tuple[float, float]:
    """(tail exponent, mean run length to false alarm) for the ungated test."""
    beta_bar = stats.i_kl * consts.overshoot_laplace**2
    return beta_bar, math.exp(h) / beta_bar


def predict_fa_deficit(
    stats: LlrStats, consts: RenewalConstants, pi1: float, h: float
) -> tuple[float, float]:
    """(tail exponent, mean run length to false alarm) for the gated test."""
    if not (0.0 < pi1 <= 1.0):
        raise ValueError("pi1 must lie in (0, 1]")
    if consts.gated_descent_mean is None:
        raise ValueError("deficit prediction needs the gated descent constant")
    if consts.gated_descent_mean >= 0:
        raise ValueError("gated descent mean must be negative")
    beta_mrw = -pi1 * stats.i0 * consts.excursion_tail_const / consts.gated_descent_mean
    return beta_mrw, math.exp(h) / beta_mrw


def make_prediction(
    stats: LlrStats,
    consts: RenewalConstants,
    h: float,
    pi1: float | None = None,
) -> Prediction:
    """Bundle delay and false-alarm predictions for one configuration."""
    if pi1 is None:
        delay = predict_delay_surplus(stats, consts, h)
        beta, arl = predict_fa_surplus(stats, consts, h)
        regime = "surplus"
    else:
        delay = predict_delay_deficit(stats, consts, pi1, h)
        beta, arl = predict_fa_deficit(stats, consts, pi1, h)
        regime = "deficit"
    return Prediction(
        regime=regime, expected_delay=delay, fa_exponent=beta, arl2fa=arl, threshold=h
    )


def _require(consts: RenewalConstants, gated: bool) -> None:
    if consts.gated != gated:
        kind = "gated" if gated else "ungated"
        raise ValueError(f"predictor needs {kind} renewal constants")
