import numpy as np
import pytest

from gatedcusum import (
    BatteryState,
    DensityGrid,
    GateChain,
    HarvestModel,
    solve_stationary_density,
    spectral_check,
    transition_probs,
)
from gatedcusum.errors import ConvergenceError, RegimeError
from gatedcusum.harvest import battery_occupancy
from gatedcusum.stationary import _build_operator, _trapz, llr_mgf_null
from gatedcusum.streams import substream

E_S = 0.5


class TestSolver:
    @pytest.mark.parametrize("hbar,pi1", [(0.4, 0.8), (0.2, 0.4)])
    def test_flow_balance_mass_split(self, densities, hbar, pi1):
        assert densities[hbar].mass_above(E_S) == pytest.approx(pi1, abs=0.01)

    def test_boundary_mean_rejected(self):
        with pytest.raises(RegimeError, match="surplus regime"):
            solve_stationary_density(HarvestModel(family="exponential", mean=0.5), E_S)

    def test_density_nonnegative_unit_mass(self, densities):
        for d in densities.values():
            assert (d.values >= 0).all()
            assert _trapz(d.values, d.step) == pytest.approx(1.0, abs=1e-8)
            assert d.residual < 1e-8

    def test_node_exactly_at_sense_cost(self, densities):
        for d in densities.values():
            i = round(E_S / d.step)
            assert i * d.step == pytest.approx(E_S, abs=1e-12)

    def test_one_step_update_is_fixed_point(self):
        # re-apply the discretized operator to a fresh small solve
        harvest = HarvestModel(family="exponential", mean=0.3)
        d = solve_stationary_density(harvest, E_S, n_points=513)
        K, _, step, _ = _build_operator(harvest, E_S, 513, d.grid_max)
        g = K @ d.values
        g /= _trapz(g, step)
        assert np.abs(g - d.values).max() < 1e-8

    def test_uniform_family_flow_balance(self):
        harvest = HarvestModel(family="uniform", mean=0.3)
        d = solve_stationary_density(harvest, E_S, n_points=1025)
        assert d.mass_above(E_S) == pytest.approx(0.6, abs=0.01)

    def test_truncated_gaussian_family_full_pipeline(self):
        harvest = HarvestModel(family="truncated-gaussian", mean=0.3, scale=0.4)
        d = solve_stationary_density(harvest, E_S, n_points=1025)
        chain = transition_probs(d, harvest, E_S)
        assert d.mass_above(E_S) == pytest.approx(0.6, abs=0.01)
        assert chain.pi1 == pytest.approx(0.6, abs=0.01)

    def test_nonconvergence_raises(self):
        with pytest.raises(ConvergenceError):
            solve_stationary_density(
                HarvestModel(family="exponential", mean=0.4), E_S, max_iter=2
            )

    def test_grid_shorter_than_two_es_rejected(self):
        with pytest.raises(ValueError):
            solve_stationary_density(
                HarvestModel(family="exponential", mean=0.2), E_S, grid_max=0.8
            )

    def test_solution_matches_simulated_occupancy(self, densities):
        # quick Kolmogorov-Smirnov check; the full 1e7-step version is
        # acceptance criterion 3
        d = densities[0.4]
        occ = battery_occupancy(
            HarvestModel(family="exponential", mean=0.4),
            BatteryState(level=E_S, sense_cost=E_S),
            2 * 10**6,
            d.step,
            d.n_points,
            substream(61, 1, 0),
            burn_in=10**4,
        )
        ks = np.abs(d.cdf_at_nodes() - occ.empirical_cdf()).max()
        assert ks < 0.015


class TestTransitionProbs:
    def test_rates_inside_unit_interval(self, chains):
        for ch in chains.values():
            assert 0 < ch.alpha < 1
            assert 0 < ch.beta < 1
            assert ch.pi0 + ch.pi1 == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("hbar,pi1", [(0.4, 0.8), (0.3, 0.6), (0.2, 0.4)])
    def test_pi1_flow_balance(self, chains, hbar, pi1):
        assert chains[hbar].pi1 == pytest.approx(pi1, abs=0.01)

    def test_rates_match_counted_transitions(self, densities, chains):
        d = densities[0.2]
        occ = battery_occupancy(
            HarvestModel(family="exponential", mean=0.2),
            BatteryState(level=E_S, sense_cost=E_S),
            2 * 10**6,
            d.step,
            d.n_points,
            substream(62, 1, 0),
            burn_in=10**4,
        )
        t = occ.transitions
        alpha_emp = t[0, 0] / t[0].sum()
        beta_emp = t[1, 1] / t[1].sum()
        assert chains[0.2].alpha == pytest.approx(alpha_emp, abs=0.01)
        assert chains[0.2].beta == pytest.approx(beta_emp, abs=0.01)

    def test_degenerate_mass_rejected(self):
        # all mass below the threshold: conditioning region above is empty
        values = np.zeros(101)
        values[:40] = 1.0
        fake = DensityGrid(
            grid_max=1.0, n_points=101, values=values / _trapz(values, 0.01),
            step=0.01, residual=0.0, iterations=1,
        )
        with pytest.raises(RegimeError):
            transition_probs(fake, HarvestModel(family="exponential", mean=0.2), 0.5)


class TestSpectral:
    def test_perron_root_one_at_tilt_one(self, chains, model):
        for ch in chains.values():
            assert abs(spectral_check(ch, model, 1.0) - 1.0) < 1e-12

    def test_perron_root_one_at_tilt_zero(self, chains, model):
        for ch in chains.values():
            assert abs(spectral_check(ch, model, 0.0) - 1.0) < 1e-12

    def test_root_dips_below_one_inside(self, chains, model):
        assert spectral_check(chains[0.4], model, 0.5) < 1.0

    def test_log_convex_profile_on_grid(self, chains, model):
        gammas = np.linspace(0.0, 1.0, 101)
        for ch in chains.values():
            rho = np.array([spectral_check(ch, model, g) for g in gammas])
            assert (rho <= 1.0 + 1e-9).all()
            assert (rho[1:-1] < 1.0).all()

    def test_null_mgf_closed_form(self, model):
        # direct Monte Carlo check of E_pre[exp(gamma Z)]
        rng = np.random.default_rng(63)
        x = model.m0 + model.sigma * rng.standard_normal(10**6)
        z = model.llr_slope * (x - model.llr_midpoint)
        for gamma in (0.3, 0.7, 1.0):
            mc = np.exp(gamma * z).mean()
            assert llr_mgf_null(model, gamma) == pytest.approx(mc, rel=0.01)

    def test_chain_validation(self):
        with pytest.raises(ValueError):
            GateChain.from_rates(0.0, 0.5)
