"""Harvested-energy model and the battery recursion that gates the detector.

The battery evolves as B_{k+1} = B_k + H_k - gate_k * E_s where the gate is
1 iff B_k >= E_s (energy harvested in slot k becomes available in slot k+1).
The closed threshold is a deliberate convention: for continuous harvest the
event B_k == E_s has probability zero, so either convention is analytically
equivalent, but a fixed one keeps simulations deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr
from scipy.stats import truncnorm

from . import _kernel
from .errors import ConvergenceError

FAMILIES = ("exponential", "uniform", "truncated-gaussian")


@dataclass(frozen=True)
class HarvestModel:
    """I.i.d. nonnegative harvest with the configured mean.

    family:
      - "exponential": Exp with mean `mean`
      - "uniform": Uniform on [0, 2*mean]
      - "truncated-gaussian": normal truncated to [0, inf); `scale` is the
        pre-truncation standard deviation and the location is solved so the
        truncated mean equals `mean` exactly.
    """

    family: str
    mean: float
    scale: float | None = None
    _loc: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown harvest family {self.family!r}")
        if not (self.mean > 0 and np.isfinite(self.mean)):
            raise ValueError("harvest mean must be positive and finite")
        if self.family == "truncated-gaussian":
            if self.scale is None or not (self.scale > 0):
                raise ValueError("truncated-gaussian requires scale > 0")
            object.__setattr__(self, "_loc", _solve_truncnorm_loc(self.mean, self.scale))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "exponential":
            lam = 1.0 / self.mean
            out = np.where(x >= 0, lam * np.exp(-lam * np.maximum(x, 0.0)), 0.0)
        elif self.family == "uniform":
            hi = 2.0 * self.mean
            out = np.where((x >= 0) & (x <= hi), 1.0 / hi, 0.0)
        else:
            a = -self._loc / self.scale
            out = truncnorm.pdf(x, a, np.inf, loc=self._loc, scale=self.scale)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "exponential":
            lam = 1.0 / self.mean
            out = np.where(x >= 0, 1.0 - np.exp(-lam * np.maximum(x, 0.0)), 0.0)
        elif self.family == "uniform":
            hi = 2.0 * self.mean
            out = np.clip(x / hi, 0.0, 1.0)
        else:
            a = -self._loc / self.scale
            out = truncnorm.cdf(x, a, np.inf, loc=self._loc, scale=self.scale)
        return float(out) if out.ndim == 0 else out

    def mgf(self, t: float) -> float:
        """E[exp(t*H)]; used to locate the stationary-density tail rate."""
        if self.family == "exponential":
            if t >= 1.0 / self.mean:
                return np.inf
            return 1.0 / (1.0 - t * self.mean)
        if self.family == "uniform":
            hi = 2.0 * self.mean
            if t == 0.0:
                return 1.0
            return float(np.expm1(t * hi) / (t * hi))
        loc, s = self._loc, self.scale
        a = -loc / s
        return float(np.exp(loc * t + 0.5 * (s * t) ** 2) * ndtr(-(a - s * t)) / ndtr(-a))

    def sample(self, rng: np.random.Generator, size=None):
        if self.family == "exponential":
            return rng.exponential(self.mean, size)
        if self.family == "uniform":
            return rng.uniform(0.0, 2.0 * self.mean, size)
        a = -self._loc / self.scale
        return truncnorm.rvs(a, np.inf, loc=self._loc, scale=self.scale, size=size, random_state=rng)


def _solve_truncnorm_loc(target_mean: float, scale: float) -> float:
    def trunc_mean(loc: float) -> float:
        a = -loc / scale
        # Mills-ratio form of the [0, inf)-truncated normal mean.
        phi = np.exp(-0.5 * a * a) / np.sqrt(2 * np.pi)
        return loc + scale * phi / ndtr(-a)

    lo = target_mean
    while trunc_mean(lo) > target_mean:
        lo -= 4 * scale
        if lo < target_mean - 200 * scale:
            raise ConvergenceError("could not bracket truncated-gaussian location")
    return brentq(lambda l: trunc_mean(l) - target_mean, lo, target_mean + scale)


@dataclass(frozen=True)
class BatteryState:
    """Battery level (mJ) and the per-sample sensing cost E_s (mJ)."""

    level: float
    sense_cost: float

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("battery level must be nonnegative")
        if not (self.sense_cost > 0):
            raise ValueError("sense cost must be positive")


def battery_step(state: BatteryState, harvested: float) -> tuple[BatteryState, int]:
    """One slot of the battery recursion; returns (next state, gate)."""
    if harvested < 0 or not np.isfinite(harvested):
        raise ValueError("harvested energy must be nonnegative and finite")
    gate = 1 if state.level >= state.sense_cost else 0
    nxt = state.level + harvested - gate * state.sense_cost
    return BatteryState(level=nxt, sense_cost=state.sense_cost), gate


def sample_harvest(model: HarvestModel, rng: np.random.Generator, size=None):
    """Draw harvested energy; nonnegative by construction of the families."""
    return model.sample(rng, size)


@dataclass
class BatteryPath:
    gates: np.ndarray
    final_state: BatteryState
    gate_fraction: float


def simulate_battery_path(
    model: HarvestModel,
    initial: BatteryState,
    steps: int,
    rng: np.random.Generator,
) -> BatteryPath:
    """Simulate `steps` slots of the battery; returns the gate sequence.

    gate_fraction is the empirical occupancy of the sensing state, the
    quantity that flow balance pins at min(1, mean/E_s) in the long run.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    gates = np.empty(steps, dtype=np.uint8)
    b = initial.level
    done = 0
    chunk = 1_000_000
    while done < steps:
        n = min(chunk, steps - done)
        hv = np.asarray(model.sample(rng, n), dtype=float)
        b = _kernel.impl.battery_gates(hv, initial.sense_cost, b, gates[done : done + n])
        done += n
    return BatteryPath(
        gates=gates,
        final_state=BatteryState(level=b, sense_cost=initial.sense_cost),
        gate_fraction=float(gates.mean()),
    )


@dataclass
class BatteryOccupancy:
    """Binned occupancy of the battery level plus gate-transition counts."""

    edges: np.ndarray          # bin j covers [edges[j], edges[j+1]); last bin is overflow
    counts: np.ndarray         # int64, len(edges) bins
    transitions: np.ndarray    # 2x2 int64, [from_gate, to_gate]
    steps: int

    def empirical_cdf(self) -> np.ndarray:
        """P(B < edges[j]) for each j, exact at the bin edges."""
        c = np.concatenate([[0], np.cumsum(self.counts[:-1])])
        return c / self.counts.sum()

    def gate_fraction(self) -> float:
        t = self.transitions
        return float((t[1].sum() + 0.0) / t.sum()) if t.sum() else float("nan")


def battery_occupancy(
    model: HarvestModel,
    initial: BatteryState,
    steps: int,
    step_width: float,
    n_bins: int,
    rng: np.random.Generator,
    burn_in: int = 0,
) -> BatteryOccupancy:
    """Histogram the battery level over a long simulated path.

    Levels are recorded at slot starts on the uniform bins j*step_width;
    anything at or beyond the last edge lands in the overflow bin, so the
    counts integrate to `steps` exactly.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    counts = np.zeros(n_bins, dtype=np.int64)
    trans = np.zeros((2, 2), dtype=np.int64)
    b = initial.level
    prev = -1
    if burn_in > 0:
        done = 0
        while done < burn_in:
            n = min(1_000_000, burn_in - done)
            hv = np.asarray(model.sample(rng, n), dtype=float)
            gates = np.empty(n, dtype=np.uint8)
            b = _kernel.impl.battery_gates(hv, initial.sense_cost, b, gates)
            done += n
    done = 0
    while done < steps:
        n = min(1_000_000, steps - done)
        hv = np.asarray(model.sample(rng, n), dtype=float)
        b, prev = _kernel.impl.battery_hist(
            hv, initial.sense_cost, b, counts, 1.0 / step_width, trans, prev
        )
        done += n
    edges = step_width * np.arange(n_bins)
    return BatteryOccupancy(edges=edges, counts=counts, transitions=trans, steps=steps)
