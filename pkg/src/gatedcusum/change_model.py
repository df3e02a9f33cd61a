"""Gaussian mean-shift observation model and its log-likelihood-ratio statistics.

The detector observes X_k ~ N(m0, sigma^2) before the change and
N(m1, sigma^2) after it.  For this family the per-sample log-likelihood ratio
is the exact linear form

    Z = ((m1 - m0) / sigma^2) * (x - (m0 + m1) / 2),

which every other module consumes: its mean under the post-change law is the
KL divergence I = (m1 - m0)^2 / (2 sigma^2), its mean under the pre-change law
is -I, and its variance is (m1 - m0)^2 / sigma^2 under either law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChangeModel:
    """Pre/post-change Gaussian observation distributions."""

    m0: float
    m1: float
    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")
        for name in ("m0", "m1", "sigma"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def llr_slope(self) -> float:
        """Coefficient of x in the log-likelihood ratio."""
        return (self.m1 - self.m0) / self.sigma**2

    @property
    def llr_midpoint(self) -> float:
        return 0.5 * (self.m0 + self.m1)


@dataclass(frozen=True)
class LlrStats:
    """Moments of the log-likelihood ratio increment.

    i_kl is the KL divergence (post-change drift), i0 the magnitude of the
    negative pre-change drift (equal to i_kl for the Gaussian family),
    z_second_moment_post = E_post[Z^2] and z_variance_post = Var_post(Z).
    """

    i_kl: float
    i0: float
    z_second_moment_post: float
    z_variance_post: float


def loglik_ratio(model: ChangeModel, x):
    """Log-likelihood ratio of post vs pre density at observation(s) x.

    Accepts a scalar or an ndarray; evaluation is elementwise.  Non-finite
    observations are rejected (a corrupted sample must not silently steer the
    detector).
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite observation passed to loglik_ratio")
    z = model.llr_slope * (x - model.llr_midpoint)
    return float(z) if z.ndim == 0 else z


def llr_stats(model: ChangeModel) -> LlrStats:
    """Closed-form LLR moments; requires a non-degenerate mean gap."""
    gap = model.m1 - model.m0
    if gap == 0:
        raise ValueError("degenerate model: m1 == m0 gives zero KL divergence")
    i_kl = gap**2 / (2 * model.sigma**2)
    z_var = gap**2 / model.sigma**2
    return LlrStats(
        i_kl=i_kl,
        i0=i_kl,
        z_second_moment_post=z_var + i_kl**2,
        z_variance_post=z_var,
    )


def sample(model: ChangeModel, hypothesis: str, rng: np.random.Generator, size=None):
    """Draw observation(s) from the pre- or post-change distribution."""
    mean = _hypothesis_mean(model, hypothesis)
    if size is None:
        return mean + model.sigma * rng.standard_normal()
    return mean + model.sigma * rng.standard_normal(size)


def _hypothesis_mean(model: ChangeModel, hypothesis: str) -> float:
    if hypothesis == "pre":
        return model.m0
    if hypothesis == "post":
        return model.m1
    raise ValueError(f"hypothesis must be 'pre' or 'post', got {hypothesis!r}")
