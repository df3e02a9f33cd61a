import math

import numpy as np
import pytest

from gatedcusum import (
    ExperimentConfig,
    GateChain,
    HarvestModel,
    delay_distribution_check,
    fit_tail_exponent,
    run_delay_experiment,
    run_fa_experiment,
)
from gatedcusum.errors import ConfigError

E_S = 0.5


def _delay_cfg(model, **kw):
    base = dict(model=model, harvest=None, e_s=E_S, h=5.0, n_runs=2000, master_seed=404)
    base.update(kw)
    return ExperimentConfig(**base)


class TestDeterminism:
    def test_worker_count_invariance(self, model):
        cfg = _delay_cfg(model, n_runs=3000)
        a = run_delay_experiment(cfg, workers=1)
        b = run_delay_experiment(cfg, workers=4)
        assert np.array_equal(a.stop_times, b.stop_times)
        assert np.array_equal(a.overshoots, b.overshoots)
        assert a.mean_stop == b.mean_stop and a.stderr == b.stderr

    def test_seed_changes_results(self, model):
        a = run_delay_experiment(_delay_cfg(model, n_runs=500))
        b = run_delay_experiment(_delay_cfg(model, n_runs=500, master_seed=405))
        assert not np.array_equal(a.stop_times, b.stop_times)

    def test_subset_reproducible_in_isolation(self, model):
        # the first k runs of a larger experiment are the whole of a smaller one
        big = run_delay_experiment(_delay_cfg(model, n_runs=800))
        small = run_delay_experiment(_delay_cfg(model, n_runs=300))
        assert np.array_equal(big.stop_times[:300], small.stop_times)


class TestGateModes:
    def test_always_on_couples_to_never_leaving_chain(self, model):
        # same observation streams, so a chain that never leaves the
        # available state reproduces the ungated paths exactly
        plain = run_delay_experiment(_delay_cfg(model, n_runs=1500))
        chain = GateChain.from_rates(alpha=0.5, beta=1.0 - 1e-15)
        gated = run_delay_experiment(
            _delay_cfg(model, n_runs=1500, gate_mode="stationary-chain", chain=chain)
        )
        assert np.array_equal(plain.stop_times, gated.stop_times)
        assert np.array_equal(plain.overshoots, gated.overshoots)

    def test_chain_and_battery_modes_agree(self, model, chains, densities):
        harvest = HarvestModel(family="exponential", mean=0.4)
        kw = dict(h=10.0, n_runs=10_000, master_seed=406)
        chain_res = run_delay_experiment(
            _delay_cfg(model, gate_mode="stationary-chain", chain=chains[0.4], **kw),
            workers=4,
        )
        batt_res = run_delay_experiment(
            _delay_cfg(
                model, gate_mode="full-battery", harvest=harvest,
                chain=chains[0.4], density=densities[0.4], **kw
            ),
            workers=4,
        )
        se = math.hypot(chain_res.stderr, batt_res.stderr)
        assert abs(chain_res.mean_stop - batt_res.mean_stop) < 4 * se

    def test_full_battery_requires_harvest(self, model):
        with pytest.raises(ConfigError):
            _delay_cfg(model, gate_mode="full-battery")

    def test_chain_mode_requires_chain(self, model):
        with pytest.raises(ConfigError):
            _delay_cfg(model, gate_mode="stationary-chain")


class TestProtocols:
    def test_delay_needs_finite_change_point(self, model):
        with pytest.raises(ConfigError):
            run_delay_experiment(_delay_cfg(model, change_point=None))

    def test_fa_needs_no_change_point(self, model):
        with pytest.raises(ConfigError):
            run_fa_experiment(_delay_cfg(model, change_point=1))

    def test_censoring_counted_and_flagged(self, model):
        res = run_delay_experiment(_delay_cfg(model, n_runs=200, h=30.0, max_steps=50))
        assert res.censored_count == 200
        assert res.censoring_flagged
        assert math.isnan(res.mean_stop)

    def test_late_change_point_delays_detection(self, model):
        immediate = run_delay_experiment(_delay_cfg(model, n_runs=1500, change_point=1))
        delayed = run_delay_experiment(_delay_cfg(model, n_runs=1500, change_point=60))
        assert delayed.mean_stop > immediate.mean_stop + 40

    def test_overshoots_nonnegative_for_stopped_runs(self, model):
        res = run_delay_experiment(_delay_cfg(model, n_runs=1000))
        assert (res.overshoots[~res.censored] >= 0).all()


class TestTailFit:
    def test_recovers_synthetic_exponential_rate(self):
        # exact-exponential oracle at the deficit exponent scale
        rng = np.random.default_rng(77)
        h, beta = 10.0, 0.0558
        taus = math.exp(h) * rng.exponential(1.0 / beta, 20_000)
        expn, r2 = fit_tail_exponent(taus, h)
        assert expn == pytest.approx(beta, rel=0.03)
        assert r2 > 0.99

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_tail_exponent(np.arange(400.0), 5.0)

    def test_degenerate_sample_rejected(self):
        with pytest.raises(ValueError):
            fit_tail_exponent(np.full(600, 123.0), 5.0)

    def test_tiny_threshold_fa_skips_fit(self, model):
        cfg = ExperimentConfig(
            model=model, harvest=None, e_s=E_S, h=0.5, n_runs=400,
            master_seed=408, change_point=None,
        )
        res = run_fa_experiment(cfg)
        assert res.fitted_exponent is None
        assert res.mean_stop < 50

    def test_fa_experiment_fits_exponent(self, model):
        cfg = ExperimentConfig(
            model=model, harvest=None, e_s=E_S, h=4.0, n_runs=2000,
            master_seed=409, change_point=None,
        )
        res = run_fa_experiment(cfg, workers=4)
        assert res.fitted_exponent is not None
        assert res.fit_r2 > 0.98
        assert res.fitted_exponent == pytest.approx(0.0699, rel=0.25)

    def test_ungated_arl_matches_exponent_formula(self, model, stats, ungated_consts):
        cfg = ExperimentConfig(
            model=model, harvest=None, e_s=E_S, h=5.0, n_runs=2000,
            master_seed=413, change_point=None,
        )
        res = run_fa_experiment(cfg, workers=4)
        beta_bar = stats.i_kl * ungated_consts.overshoot_laplace**2
        assert res.mean_stop == pytest.approx(math.exp(5.0) / beta_bar, rel=0.15)

    def test_gated_arl_matches_exponent_formula(self, model, stats, chains, gated_consts):
        from gatedcusum import predict_fa_deficit

        cfg = ExperimentConfig(
            model=model, harvest=None, e_s=E_S, h=5.0, n_runs=2000,
            master_seed=414, change_point=None,
            gate_mode="stationary-chain", chain=chains[0.4],
        )
        res = run_fa_experiment(cfg, workers=4)
        beta_mrw, _ = predict_fa_deficit(stats, gated_consts[0.4], chains[0.4].pi1, 5.0)
        assert res.mean_stop == pytest.approx(math.exp(5.0) / beta_mrw, rel=0.15)

    def test_arl_grows_exponentially_in_threshold(self, model):
        means = []
        hs = [3.0, 4.0, 5.0, 6.0]
        for h in hs:
            cfg = ExperimentConfig(
                model=model, harvest=None, e_s=E_S, h=h, n_runs=2000,
                master_seed=410, change_point=None,
            )
            means.append(run_fa_experiment(cfg, workers=4).mean_stop)
        slope = np.polyfit(hs, np.log(means), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.1)


class TestDelayDistribution:
    def test_ks_shrinks_as_threshold_grows(self, model, stats):
        ks = {}
        for h in (1.0, 10.0):
            cfg = _delay_cfg(model, h=h, n_runs=10_000, master_seed=411)
            res = run_delay_experiment(cfg, workers=4)
            ks[h] = delay_distribution_check(res, stats, h).ks_stat
        assert ks[10.0] < ks[1.0]

    def test_overshoot_asymptotically_independent(self, model, stats):
        cfg = _delay_cfg(model, h=10.0, n_runs=20_000, master_seed=412)
        res = run_delay_experiment(cfg, workers=4)
        chk = delay_distribution_check(res, stats, 10.0)
        assert abs(chk.tau_kappa_corr) < 0.02
