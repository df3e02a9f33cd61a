"""Monte Carlo estimation of the renewal constants behind the asymptotics.

Everything here is a functional of the LLR random walk (optionally gated by
the two-state availability chain): first-ascent ladder heights, the running
minimum of the drifted walk, the Laplace functional of the deep-threshold
overshoot, first-descent quantities under the pre-change law, and the mean
value of the gated walk at its first descent.  All are estimated by
replication with explicit standard errors; none has a usable closed form for
the Gaussian family.

Replications are grouped into fixed-size batches, each batch owning its own
counter-based stream, so results are reproducible and independent of any
execution partitioning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .change_model import ChangeModel, llr_stats
from .errors import ConvergenceError
from .stationary import GateChain
from .streams import substream

# Stream purposes: one observation / environment pair per estimator family.
_P_OBS = 0x10
_P_ENV = 0x20
_TAG_POS = 0
_TAG_NEG = 1
_TAG_DELTA = 2
_TAG_MIN = 3
_TAG_DESCENT = 4

_BATCH_REPS = 65536
_CHUNK = 8192


@dataclass(frozen=True)
class LadderEstimate:
    mean: float
    second: float
    se_mean: float
    se_second: float
    epoch_mean: float
    n_reps: int

    @property
    def overshoot_limit(self) -> float:
        """Limiting mean overshoot: second moment over twice the mean."""
        return self.second / (2.0 * self.mean)

    @property
    def se_overshoot_limit(self) -> float:
        g1 = -self.second / (2.0 * self.mean**2)
        g2 = 1.0 / (2.0 * self.mean)
        return math.sqrt(
            (g1 * self.se_mean) ** 2
            + (g2 * self.se_second) ** 2
            + 2.0 * g1 * g2 * self._cov_mean_second
        )

    _cov_mean_second: float = 0.0


@dataclass(frozen=True)
class MinWalkEstimate:
    value: float
    se: float
    half_value: float
    horizon: int


@dataclass(frozen=True)
class DeltaEstimate:
    value: float
    se: float
    probe: float


@dataclass(frozen=True)
class DescentEstimate:
    exp_mean: float
    epoch_mean: float
    c_inf: float
    se_exp: float
    se_epoch: float
    se_c_inf: float
    n_reps: int

    @property
    def fa_exponent(self) -> float:
        """Tail exponent via the descent route: c_inf over the mean epoch."""
        return self.c_inf / self.epoch_mean


@dataclass(frozen=True)
class GatedDescentEstimate:
    value: float
    se: float


def _walk_params(model: ChangeModel, hypothesis: str) -> tuple[float, float]:
    stats = llr_stats(model)
    sd = math.sqrt(stats.z_variance_post)
    return (stats.i_kl if hypothesis == "post" else -stats.i0), sd


def _run_ladder(
    mu: float,
    sd: float,
    direction: int,
    thr: float,
    n_reps: int,
    seed: int,
    tag: int,
    cap: int,
    chain: GateChain | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    heights = np.empty(n_reps)
    epochs = np.empty(n_reps, dtype=np.int64)
    done = 0
    batch_idx = 0
    while done < n_reps:
        take = min(_BATCH_REPS, n_reps - done)
        obs = substream(seed, _P_OBS | tag, batch_idx)
        env = substream(seed, _P_ENV | tag, batch_idx) if chain is not None else None
        h_local = heights[done : done + take]
        e_local = epochs[done : done + take]
        i_rep = 0
        s = 0.0
        steps = 0
        xi = 1
        while i_rep < take:
            z = mu + sd * obs.standard_normal(_CHUNK)
            if chain is None:
                i_rep, s, steps, _, cap_hit = _kernel.impl.ladder_walk(
                    z, direction, thr, h_local, e_local, i_rep, s, steps, take, cap
                )
            else:
                u = env.random(_CHUNK)
                i_rep, xi, s, steps, _, cap_hit = _kernel.impl.ladder_walk_chain(
                    z, u, chain.alpha, chain.beta, direction, thr,
                    h_local, e_local, i_rep, xi, s, steps, take, cap,
                )
            if cap_hit:
                raise ConvergenceError(
                    f"ladder replication exceeded {cap} steps; check the walk drift"
                )
        done += take
        batch_idx += 1
    return heights, epochs


def estimate_pos_ladder(
    model: ChangeModel,
    n_reps: int = 1_000_000,
    *,
    seed: int = 0,
    chain: GateChain | None = None,
    cap: int = 1_000_000,
) -> LadderEstimate:
    """First and second moments of the first-ascent ladder height.

    The walk runs under the post-change law (positive drift, so the ascent
    epoch is almost surely finite).  With `chain` given, the walk is gated by
    the availability chain started in the available state; the ladder height
    distribution is unchanged by gating (skipped slots do not move the walk)
    but the estimate is produced with gating anyway so the deficit pipeline
    carries no ungated shortcuts.
    """
    mu, sd = _walk_params(model, "post")
    heights, epochs = _run_ladder(mu, sd, 1, 0.0, n_reps, seed, _TAG_POS, cap, chain)
    sq = heights**2
    cov = float(np.cov(heights, sq)[0, 1]) / n_reps
    return LadderEstimate(
        mean=float(heights.mean()),
        second=float(sq.mean()),
        se_mean=float(heights.std(ddof=1) / math.sqrt(n_reps)),
        se_second=float(sq.std(ddof=1) / math.sqrt(n_reps)),
        epoch_mean=float(epochs.mean()),
        n_reps=n_reps,
        _cov_mean_second=cov,
    )


def estimate_zeta_eta_bar(
    model: ChangeModel,
    gated: bool = False,
    chain: GateChain | None = None,
    n_reps: int = 50_000,
    horizon: int | None = None,
    *,
    seed: int = 0,
    require_converged: bool = True,
) -> MinWalkEstimate:
    """Limiting mean of minus the running minimum of the post-change walk.

    The positive drift pins the minimum early, so a finite horizon suffices;
    the estimate at horizon/2 is returned as a convergence diagnostic and, by
    default, an increment beyond 3 standard errors raises.
    """
    if gated and chain is None:
        raise ValueError("gated running-minimum estimation requires a chain")
    mu, sd = _walk_params(model, "post")
    if horizon is None:
        pi1 = chain.pi1 if gated else 1.0
        horizon = int(math.ceil(800.0 / pi1))
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    out_half = np.empty(n_reps)
    out_full = np.empty(n_reps)
    reps_per_block = max(1, 4_000_000 // horizon)
    done = 0
    batch_idx = 0
    while done < n_reps:
        take = min(reps_per_block, n_reps - done)
        obs = substream(seed, _P_OBS | _TAG_MIN, batch_idx)
        z = mu + sd * obs.standard_normal(take * horizon)
        if gated:
            env = substream(seed, _P_ENV | _TAG_MIN, batch_idx)
            u = env.random(take * horizon)
            _kernel.impl.running_min_chain_block(
                z, u, chain.alpha, chain.beta, horizon, out_half, out_full, done, take
            )
        else:
            _kernel.impl.running_min_block(z, horizon, out_half, out_full, done, take)
        done += take
        batch_idx += 1
    value = float(out_full.mean())
    se = float(out_full.std(ddof=1) / math.sqrt(n_reps))
    half_value = float(out_half.mean())
    if require_converged and (value - half_value) > 3.0 * se:
        raise ConvergenceError(
            f"running-minimum estimate still moving ({value - half_value:.3e} over "
            f"the last half horizon vs se {se:.3e}); increase the horizon"
        )
    return MinWalkEstimate(value=value, se=se, half_value=half_value, horizon=horizon)


def estimate_delta_bar(
    model: ChangeModel,
    h_probe: float | None = None,
    n_reps: int = 100_000,
    *,
    seed: int = 0,
    cap: int = 1_000_000,
) -> DeltaEstimate:
    """Mean of exp(-overshoot) of the post-change walk over a deep threshold.

    The threshold must sit well above the per-step drift so the overshoot
    distribution has reached its renewal limit; the default probe is 25 drift
    units, and probe-doubling stability is part of the test suite.
    """
    stats = llr_stats(model)
    if h_probe is None:
        h_probe = 25.0 * stats.i_kl
    if h_probe < 10.0 * stats.i_kl:
        raise ValueError("probe threshold too shallow: need h_probe >= 10 * i_kl")
    mu, sd = _walk_params(model, "post")
    heights, _ = _run_ladder(mu, sd, 1, h_probe, n_reps, seed, _TAG_DELTA, cap)
    vals = np.exp(-(heights - h_probe))
    return DeltaEstimate(
        value=float(vals.mean()),
        se=float(vals.std(ddof=1) / math.sqrt(n_reps)),
        probe=float(h_probe),
    )


def estimate_neg_ladder(
    model: ChangeModel,
    n_reps: int = 1_000_000,
    *,
    seed: int = 0,
    cap: int = 1_000_000,
) -> DescentEstimate:
    """First-descent quantities of the pre-change walk and the tail constant.

    Estimates E[exp(S at first descent)] and the mean descent epoch, then
    assembles the excursion-maximum tail constant
    c_inf = (1 - E[exp S])^2 / (i_kl * E[epoch]).  Standard errors propagate
    through the ratio with the empirical covariance of the two inputs.
    """
    stats = llr_stats(model)
    mu, sd = _walk_params(model, "pre")
    heights, epochs = _run_ladder(mu, sd, -1, 0.0, n_reps, seed, _TAG_NEG, cap)
    a = np.exp(heights)
    b = epochs.astype(float)
    a_mean = float(a.mean())
    b_mean = float(b.mean())
    c_inf = (1.0 - a_mean) ** 2 / (stats.i_kl * b_mean)
    se_a = float(a.std(ddof=1) / math.sqrt(n_reps))
    se_b = float(b.std(ddof=1) / math.sqrt(n_reps))
    cov_ab = float(np.cov(a, b)[0, 1]) / n_reps
    ga = -2.0 * (1.0 - a_mean) / (stats.i_kl * b_mean)
    gb = -((1.0 - a_mean) ** 2) / (stats.i_kl * b_mean**2)
    var_c = (ga * se_a) ** 2 + (gb * se_b) ** 2 + 2.0 * ga * gb * cov_ab
    return DescentEstimate(
        exp_mean=a_mean,
        epoch_mean=b_mean,
        c_inf=float(c_inf),
        se_exp=se_a,
        se_epoch=se_b,
        se_c_inf=float(math.sqrt(max(var_c, 0.0))),
        n_reps=n_reps,
    )


def estimate_s_k1(
    model: ChangeModel,
    chain: GateChain,
    n_reps: int = 1_000_000,
    *,
    seed: int = 0,
    cap: int = 1_000_000,
) -> GatedDescentEstimate:
    """Mean value of the gated pre-change walk at its first strict descent.

    The chain starts in the available state; skipped slots leave the walk at
    its running value and therefore never trigger the descent.  The result is
    strictly negative (negative drift walk sampled at its first new minimum).
    """
    mu, sd = _walk_params(model, "pre")
    heights, _ = _run_ladder(mu, sd, -1, 0.0, n_reps, seed, _TAG_DESCENT, cap, chain)
    if not (heights < 0).all():
        raise ConvergenceError("gated descent produced a nonnegative value")
    return GatedDescentEstimate(
        value=float(heights.mean()),
        se=float(heights.std(ddof=1) / math.sqrt(n_reps)),
    )


@dataclass(frozen=True)
class EstimatorSizes:
    ladder_reps: int = 1_000_000
    delta_reps: int = 100_000
    minwalk_reps: int = 50_000
    minwalk_horizon: int | None = None
    descent_reps: int = 1_000_000
    step_cap: int = 1_000_000


@dataclass(frozen=True)
class RenewalConstants:
    """Every estimated constant the asymptotic predictors consume.

    For a deficit configuration (gated=True) the ladder moments and the
    running-minimum mean are estimated on the gated walk and
    gated_descent_mean is present; the descent-route constants are laws of
    the ungated pre-change walk in either regime.
    """

    ladder_height_mean: float
    ladder_height_second: float
    running_min_mean: float
    overshoot_laplace: float
    neg_ladder_exp_mean: float
    neg_ladder_epoch_mean: float
    excursion_tail_const: float
    gated_descent_mean: float | None
    gated: bool
    stderr: dict[str, float]

    @property
    def overshoot_limit(self) -> float:
        return self.ladder_height_second / (2.0 * self.ladder_height_mean)


def estimate_constants(
    model: ChangeModel,
    *,
    chain: GateChain | None = None,
    seed: int = 0,
    sizes: EstimatorSizes = EstimatorSizes(),
) -> RenewalConstants:
    """Run every estimator for one configuration (gated iff chain given)."""
    pos = estimate_pos_ladder(
        model, sizes.ladder_reps, seed=seed, chain=chain, cap=sizes.step_cap
    )
    minwalk = estimate_zeta_eta_bar(
        model,
        gated=chain is not None,
        chain=chain,
        n_reps=sizes.minwalk_reps,
        horizon=sizes.minwalk_horizon,
        seed=seed,
    )
    delta = estimate_delta_bar(model, n_reps=sizes.delta_reps, seed=seed, cap=sizes.step_cap)
    neg = estimate_neg_ladder(model, sizes.descent_reps, seed=seed, cap=sizes.step_cap)
    descent = (
        estimate_s_k1(model, chain, sizes.descent_reps, seed=seed, cap=sizes.step_cap)
        if chain is not None
        else None
    )
    stderr = {
        "ladder_height_mean": pos.se_mean,
        "ladder_height_second": pos.se_second,
        "overshoot_limit": pos.se_overshoot_limit,
        "running_min_mean": minwalk.se,
        "overshoot_laplace": delta.se,
        "neg_ladder_exp_mean": neg.se_exp,
        "neg_ladder_epoch_mean": neg.se_epoch,
        "excursion_tail_const": neg.se_c_inf,
    }
    if descent is not None:
        stderr["gated_descent_mean"] = descent.se
    return RenewalConstants(
        ladder_height_mean=pos.mean,
        ladder_height_second=pos.second,
        running_min_mean=minwalk.value,
        overshoot_laplace=delta.value,
        neg_ladder_exp_mean=neg.exp_mean,
        neg_ladder_epoch_mean=neg.epoch_mean,
        excursion_tail_const=neg.c_inf,
        gated_descent_mean=descent.value if descent is not None else None,
        gated=chain is not None,
        stderr=stderr,
    )
