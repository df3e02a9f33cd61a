"""CUSUM recursion, its energy-gated variant, and first-passage execution.

The reflected statistic is tracked through the walk decomposition
W_n = S_n - min(0, min_k S_k): the kernels carry (walk, running min) and the
statistic is their difference, which keeps the per-step arithmetic identical
across backends and exposes the path minimum for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernel
from .change_model import ChangeModel, llr_stats
from .harvest import BatteryState, HarvestModel
from .streams import chunk_schedule


@dataclass(frozen=True)
class CusumState:
    """Detector statistic plus walk diagnostics.

    statistic is the reflected value (always >= 0), path_min the running
    minimum of the unreflected walk of applied increments (always <= 0);
    statistic == walk - path_min where walk = statistic + path_min.
    """

    statistic: float = 0.0
    steps_elapsed: int = 0
    path_min: float = 0.0


@dataclass(frozen=True)
class StoppingRecord:
    """Outcome of a first-passage run; stopped=False means censored."""

    stop_time: int
    overshoot: float
    stopped: bool


def cusum_step(state: CusumState, z: float) -> CusumState:
    """One ungated update: W' = max(0, W + z)."""
    if not math.isfinite(z):
        raise ValueError("non-finite increment passed to cusum_step")
    walk = state.statistic + state.path_min + z
    return CusumState(
        statistic=max(0.0, state.statistic + z),
        steps_elapsed=state.steps_elapsed + 1,
        path_min=min(state.path_min, walk),
    )


def gated_cusum_step(state: CusumState, z: float, gate: int) -> CusumState:
    """Gated update: a gate-0 slot leaves the statistic untouched."""
    if gate not in (0, 1):
        raise ValueError("gate must be 0 or 1")
    if gate == 0:
        if not math.isfinite(z):
            raise ValueError("non-finite increment passed to gated_cusum_step")
        return CusumState(
            statistic=state.statistic,
            steps_elapsed=state.steps_elapsed + 1,
            path_min=state.path_min,
        )
    return cusum_step(state, z)


@dataclass
class BatteryGate:
    """Full battery recursion driving the gate sequence."""

    e_s: float
    level: float
    draw_harvest: Callable[[int], np.ndarray]


@dataclass
class ChainGate:
    """Two-state availability chain driving the gate sequence.

    alpha = P(stay unavailable), beta = P(stay available); the first slot
    senses (chain starts in the available state).
    """

    alpha: float
    beta: float
    draw_uniform: Callable[[int], np.ndarray]
    xi: int = 1


def drive_first_passage(
    h: float,
    max_steps: int,
    draw_llr: Callable[[int], np.ndarray],
    gate: BatteryGate | ChainGate | None = None,
) -> StoppingRecord:
    """Run one (gated) CUSUM from W=0 until W > h or max_steps elapse."""
    if not (h > 0):
        raise ValueError("threshold h must be positive")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    s = 0.0
    m = 0.0
    done = 0
    for n in chunk_schedule(max_steps):
        z = np.ascontiguousarray(draw_llr(n), dtype=np.float64)
        if gate is None:
            hit, s, m = _kernel.impl.fp_ungated(z, s, m, h)
        elif isinstance(gate, BatteryGate):
            hv = np.ascontiguousarray(gate.draw_harvest(n), dtype=np.float64)
            hit, gate.level, s, m = _kernel.impl.fp_battery(
                z, hv, gate.e_s, gate.level, s, m, h
            )
        else:
            u = np.ascontiguousarray(gate.draw_uniform(n), dtype=np.float64)
            hit, gate.xi, s, m = _kernel.impl.fp_chain(
                z, u, gate.alpha, gate.beta, gate.xi, s, m, h
            )
        if hit >= 0:
            return StoppingRecord(stop_time=done + hit + 1, overshoot=(s - m) - h, stopped=True)
        done += n
    return StoppingRecord(stop_time=max_steps, overshoot=float("nan"), stopped=False)


def llr_source(
    model: ChangeModel,
    hypothesis: str,
    change_point: int,
    rng: np.random.Generator,
) -> Callable[[int], np.ndarray]:
    """Chunked LLR increments: slot k draws f1 iff post-change and k >= change_point."""
    if hypothesis not in ("pre", "post"):
        raise ValueError(f"hypothesis must be 'pre' or 'post', got {hypothesis!r}")
    slope = model.llr_slope
    mid = model.llr_midpoint
    state = {"pos": 0}

    def draw(n: int) -> np.ndarray:
        pos = state["pos"]
        x = model.sigma * rng.standard_normal(n)
        if hypothesis == "pre":
            x += model.m0
        elif change_point <= pos + 1:
            x += model.m1
        else:
            slots = np.arange(pos + 1, pos + n + 1)
            x += np.where(slots >= change_point, model.m1, model.m0)
        state["pos"] = pos + n
        return slope * (x - mid)

    return draw


def run_until_threshold(
    model: ChangeModel,
    harvest: HarvestModel | None,
    h: float,
    *,
    hypothesis: str = "post",
    change_point: int = 1,
    max_steps: int,
    rng: np.random.Generator,
    battery: BatteryState | None = None,
) -> StoppingRecord:
    """Single first-passage run of the (gated) detector.

    harvest=None runs the ungated detector (the energy-surplus ideal);
    otherwise `battery` supplies the sensing cost and the initial level.
    Censoring at max_steps is reported via stopped=False, not an error.
    """
    llr_stats(model)  # reject degenerate models up front
    draw = llr_source(model, hypothesis, change_point, rng)
    if harvest is None:
        return drive_first_passage(h, max_steps, draw, None)
    if battery is None:
        raise ValueError("battery state is required when a harvest model is given")
    gate = BatteryGate(
        e_s=battery.sense_cost,
        level=battery.level,
        draw_harvest=lambda n: np.asarray(harvest.sample(rng, n), dtype=float),
    )
    return drive_first_passage(h, max_steps, draw, gate)
