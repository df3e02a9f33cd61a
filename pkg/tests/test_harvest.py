import numpy as np
import pytest

from gatedcusum import (
    BatteryState,
    HarvestModel,
    battery_step,
    sample_harvest,
    simulate_battery_path,
)
from gatedcusum.streams import substream


class TestBatteryStep:
    def test_sensing_slot(self):
        nxt, gate = battery_step(BatteryState(level=0.7, sense_cost=0.5), 0.1)
        assert gate == 1
        assert nxt.level == pytest.approx(0.3, abs=1e-15)

    def test_idle_slot(self):
        nxt, gate = battery_step(BatteryState(level=0.3, sense_cost=0.5), 0.2)
        assert gate == 0
        assert nxt.level == pytest.approx(0.5, abs=1e-15)

    def test_threshold_level_senses(self):
        # closed-threshold convention: level == sense cost gates on
        _, gate = battery_step(BatteryState(level=0.5, sense_cost=0.5), 0.0)
        assert gate == 1

    def test_zero_harvest_is_absorbing_at_zero(self):
        state = BatteryState(level=0.0, sense_cost=0.5)
        for _ in range(50):
            state, gate = battery_step(state, 0.0)
            assert gate == 0
            assert state.level == 0.0

    def test_negative_harvest_rejected(self):
        with pytest.raises(ValueError):
            battery_step(BatteryState(level=1.0, sense_cost=0.5), -0.1)

    def test_level_stays_nonnegative_on_random_paths(self):
        rng = np.random.default_rng(5)
        state = BatteryState(level=0.0, sense_cost=0.5)
        model = HarvestModel(family="exponential", mean=0.3)
        for _ in range(2000):
            h = float(sample_harvest(model, rng)) if rng.random() > 0.3 else 0.0
            state, _ = battery_step(state, h)
            assert state.level >= 0.0


class TestHarvestFamilies:
    def test_exponential_moment(self):
        model = HarvestModel(family="exponential", mean=0.4)
        rng = np.random.default_rng(11)
        draws = sample_harvest(model, rng, size=10**6)
        assert draws.mean() == pytest.approx(0.4, rel=0.01)

    def test_uniform_support_and_moment(self):
        model = HarvestModel(family="uniform", mean=0.3)
        rng = np.random.default_rng(12)
        draws = sample_harvest(model, rng, size=10**5)
        assert draws.min() >= 0.0
        assert draws.max() <= 0.6
        assert draws.mean() == pytest.approx(0.3, rel=0.02)

    def test_truncated_gaussian_mean_is_exact_target(self):
        model = HarvestModel(family="truncated-gaussian", mean=0.4, scale=0.5)
        rng = np.random.default_rng(13)
        draws = sample_harvest(model, rng, size=10**6)
        assert draws.min() >= 0.0
        assert draws.mean() == pytest.approx(0.4, rel=0.01)

    @pytest.mark.parametrize("family,kw", [
        ("exponential", {}),
        ("uniform", {}),
        ("truncated-gaussian", {"scale": 0.3}),
    ])
    def test_no_negative_draws(self, family, kw):
        model = HarvestModel(family=family, mean=0.25, **kw)
        rng = np.random.default_rng(14)
        assert (sample_harvest(model, rng, size=10**4) >= 0).all()

    def test_cdf_pdf_consistency(self):
        model = HarvestModel(family="truncated-gaussian", mean=0.4, scale=0.5)
        xs = np.linspace(0, 3, 3001)
        pdf = model.pdf(xs)
        cdf_num = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(xs))])
        assert np.abs(cdf_num - (model.cdf(xs) - model.cdf(0.0))).max() < 1e-4

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            HarvestModel(family="gamma", mean=0.4)
        with pytest.raises(ValueError):
            HarvestModel(family="truncated-gaussian", mean=0.4)  # missing scale


class TestBatteryPath:
    def test_surplus_gates_lock_on(self):
        model = HarvestModel(family="exponential", mean=0.7)
        path = simulate_battery_path(
            model, BatteryState(level=0.5, sense_cost=0.5), 10**5, substream(21, 1, 0)
        )
        assert path.gates[50_000:].all()

    @pytest.mark.parametrize("hbar", [0.6, 0.8])
    def test_surplus_no_dropouts_in_second_half(self, hbar):
        model = HarvestModel(family="exponential", mean=hbar)
        path = simulate_battery_path(
            model, BatteryState(level=0.5, sense_cost=0.5), 10**5, substream(22, 1, 0)
        )
        assert (path.gates[50_000:] == 1).all()

    def test_deficit_gate_fraction_flow_balance(self):
        # long-run sensing fraction equals mean harvest over sensing cost
        model = HarvestModel(family="exponential", mean=0.4)
        path = simulate_battery_path(
            model, BatteryState(level=0.5, sense_cost=0.5), 10**7, substream(23, 1, 0)
        )
        assert abs(path.gate_fraction - 0.8) < 0.005

    def test_zero_steps_rejected(self):
        model = HarvestModel(family="exponential", mean=0.4)
        with pytest.raises(ValueError):
            simulate_battery_path(
                model, BatteryState(level=0.5, sense_cost=0.5), 0, substream(24, 1, 0)
            )

    def test_final_state_matches_recursion(self):
        model = HarvestModel(family="exponential", mean=0.4)
        rng = substream(25, 1, 0)
        hv = sample_harvest(model, rng, size=500)
        state = BatteryState(level=0.5, sense_cost=0.5)
        gates = []
        for h in hv:
            state, g = battery_step(state, float(h))
            gates.append(g)
        path = simulate_battery_path(
            model, BatteryState(level=0.5, sense_cost=0.5), 500, substream(25, 1, 0)
        )
        assert path.final_state.level == pytest.approx(state.level, rel=1e-12)
        assert np.array_equal(path.gates, np.array(gates, dtype=np.uint8))
