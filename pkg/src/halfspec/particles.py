"""Seeded Monte-Carlo particle advection on flat tori.

Particles follow the characteristics x' = X(x); their empirical measure
approximates the pushforward density solving the continuity equation.  All
randomness comes from a counter-based Philox generator keyed by the ensemble
seed, so every run is bitwise reproducible; parallel sampling, if ever
needed, should split streams with Generator.jumped rather than reseeding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis import GridField
from .operators import VectorFieldSpec

__all__ = [
    "ParticleEnsemble",
    "sample_wrapped_gaussian",
    "advect_particles",
    "histogram_marginal",
]


@dataclass(frozen=True)
class ParticleEnsemble:
    """Particle positions in [0, L_i) with the seed they were drawn from."""

    periods: tuple[float, ...]
    positions: np.ndarray  # (count, dim)
    seed: int

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != len(periods):
            raise ValueError("positions must be (count, dim)")
        if pos.shape[0] < 1:
            raise ValueError("ensemble must contain at least one particle")
        for i, p in enumerate(periods):
            if np.any(pos[:, i] < 0) or np.any(pos[:, i] >= p):
                raise ValueError(f"positions along axis {i} outside [0, {p})")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return self.positions.shape[0]


def sample_wrapped_gaussian(
    mean: Sequence[float],
    sigma: Sequence[float],
    count: int,
    seed: int,
    periods: Sequence[float],
) -> ParticleEnsemble:
    """Draw componentwise Gaussian samples and wrap them modulo the periods."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    periods = tuple(float(p) for p in periods)
    if np.any(sigma <= 0):
        raise ValueError("sigma components must be positive")
    if mean.shape != sigma.shape or mean.size != len(periods):
        raise ValueError("mean/sigma/periods sizes disagree")
    rng = np.random.Generator(np.random.Philox(seed))
    raw = rng.normal(loc=mean, scale=sigma, size=(int(count), mean.size))
    wrapped = np.mod(raw, np.asarray(periods))
    return ParticleEnsemble(periods, wrapped, int(seed))


def advect_particles(
    ens: ParticleEnsemble,
    vf: VectorFieldSpec | Callable[[np.ndarray], np.ndarray],
    t: float,
    dt: float,
) -> ParticleEnsemble:
    """Integrate every particle with fixed-step RK4 and wrap back onto the torus."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    field = vf.evaluate if isinstance(vf, VectorFieldSpec) else vf
    periods = np.asarray(ens.periods)
    steps = max(1, math.ceil(abs(t) / dt - 1e-12))
    h = t / steps
    x = ens.positions.copy()
    for _ in range(steps):
        k1 = field(x)
        k2 = field(x + (h / 2.0) * k1)
        k3 = field(x + (h / 2.0) * k2)
        k4 = field(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise ValueError("vector field produced non-finite particle positions")
        x = np.mod(x, periods)
    return ParticleEnsemble(ens.periods, x, ens.seed)


def histogram_marginal(
    ens: ParticleEnsemble, axes: Sequence[int], bins: int
) -> GridField:
    """Normalized histogram of the marginal over the chosen axes.

    The result is a probability density on the sub-torus: summing the bin
    values times the bin measure gives exactly 1.  Bin centers sit at
    (j + 1/2) L / bins, carried by the GridField shift.
    """
    axes = tuple(int(a) for a in axes)
    if len(axes) == 0:
        raise ValueError("axes subset must not be empty")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    periods = tuple(ens.periods[a] for a in axes)
    pts = ens.positions[:, axes]
    edges = [np.linspace(0.0, p, bins + 1) for p in periods]
    counts, _ = np.histogramdd(pts, bins=edges)
    cell = float(np.prod([p / bins for p in periods]))
    density = counts / (ens.count * cell)
    return GridField(periods, density, shift=0.5)
