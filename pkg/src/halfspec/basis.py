"""Fourier basis on flat tori: truncations, transforms, quadrature, Sobolev norms.

The torus T^n = prod_i R/(L_i Z) carries the orthonormal basis

    e_k(x) = prod_i L_i^{-1/2} exp(2 pi i k_i x_i / L_i),   k_i in Z,

so that a field psi = sum_k c_k e_k has ||psi||_2^2 = sum_k |c_k|^2 exactly.
A symmetric truncation keeps |k_i| <= K_i; the coefficient tensor is stored
with axis i index j corresponding to k_i = j - K_i, and the canonical flat
order is C order, i.e. lexicographic in (k_1, ..., k_n) from -K to +K.  That
order is fixed: serialized results depend on it.

Half-densities are fields psi = f * sqrt(mu) with mu the Lebesgue density;
on a flat torus sqrt(mu) is a global trivialization, so half-densities and
functions share the same coefficient machinery and everything here applies
to both.

Multi-indices are plain integer tuples throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "TruncationSpec",
    "SpectralField",
    "GridField",
    "index_set",
    "analyze",
    "synthesize",
    "sobolev_norm",
    "default_grid_sizes",
    "sample_on_grid",
]


@dataclass(frozen=True)
class TruncationSpec:
    """Symmetric Fourier truncation of T^n.

    Parameters
    ----------
    dim : int
        Spatial dimension n >= 1.
    cutoff : tuple of int
        Per-dimension cutoff K_i >= 0; the band keeps |k_i| <= K_i, giving
        2*K_i + 1 modes along axis i.
    periods : tuple of float
        Torus periods L_i > 0.
    """

    dim: int
    cutoff: tuple[int, ...]
    periods: tuple[float, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        cutoff = tuple(int(k) for k in self.cutoff)
        periods = tuple(float(p) for p in self.periods)
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "periods", periods)
        if len(cutoff) != self.dim or len(periods) != self.dim:
            raise ValueError("cutoff/periods length must equal dim")
        if any(k < 0 for k in cutoff):
            raise ValueError("cutoffs must be >= 0")
        if any(p <= 0 for p in periods):
            raise ValueError("periods must be strictly positive")

    @classmethod
    def isotropic(cls, dim: int, k: int, period: float) -> "TruncationSpec":
        """Same cutoff and period along every axis."""
        return cls(dim, (k,) * dim, (period,) * dim)

    @property
    def shape(self) -> tuple[int, ...]:
        """Modes per dimension, 2*K_i + 1."""
        return tuple(2 * k + 1 for k in self.cutoff)

    @property
    def size(self) -> int:
        """Total basis size N = prod_i (2*K_i + 1)."""
        return int(np.prod(self.shape))

    @property
    def omegas(self) -> tuple[float, ...]:
        """Fundamental angular frequencies 2*pi/L_i."""
        return tuple(2.0 * np.pi / p for p in self.periods)

    def mode_axes(self) -> list[np.ndarray]:
        """Per-axis integer mode values, -K_i ... +K_i."""
        return [np.arange(-k, k + 1) for k in self.cutoff]

    def root_volume(self) -> float:
        """prod_i sqrt(L_i), the normalization of the constant mode."""
        return float(np.prod([np.sqrt(p) for p in self.periods]))


def index_set(trunc: TruncationSpec) -> list[tuple[int, ...]]:
    """All multi-indices with |k_i| <= K_i in canonical (C, lexicographic) order."""
    return list(itertools.product(*(range(-k, k + 1) for k in trunc.cutoff)))


@dataclass(frozen=True)
class SpectralField:
    """Truncated Fourier coefficients of a field on T^n.

    ``coeffs`` has shape ``trunc.shape``; axis i index j holds the
    coefficient of mode k_i = j - K_i.  ``coeffs.ravel()`` is the canonical
    flat order used everywhere (matrices, serialization).
    """

    trunc: TruncationSpec
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != self.trunc.shape:
            raise ValueError(
                f"coefficient shape {arr.shape} does not match truncation {self.trunc.shape}"
            )
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls, trunc: TruncationSpec) -> "SpectralField":
        return cls(trunc, np.zeros(trunc.shape, dtype=complex))

    @classmethod
    def from_flat(cls, trunc: TruncationSpec, flat: np.ndarray) -> "SpectralField":
        return cls(trunc, np.asarray(flat, dtype=complex).reshape(trunc.shape))

    def flat(self) -> np.ndarray:
        """Coefficients in canonical flat order (copy-free view)."""
        return self.coeffs.reshape(-1)

    def norm2(self) -> float:
        """L2 norm; equals the Euclidean coefficient norm by orthonormality."""
        return float(np.linalg.norm(self.coeffs))

    def reality_defect(self) -> float:
        """max |c_{-k} - conj(c_k)|; zero iff the field is real-valued."""
        flipped = self.coeffs[tuple(slice(None, None, -1) for _ in range(self.trunc.dim))]
        return float(np.max(np.abs(flipped - np.conj(self.coeffs))))

    def is_real(self, tol: float = 1e-13) -> bool:
        return self.reality_defect() <= tol


@dataclass(frozen=True)
class GridField:
    """Samples of a field on a uniform periodic grid.

    Node coordinates along axis i are x_j = (j + shift) * L_i / M_i.  All
    quadrature grids use shift = 0 (the grid contains the origin); histogram
    marginals reuse this container with shift = 0.5 for bin centers.
    """

    periods: tuple[float, ...]
    samples: np.ndarray
    shift: float = 0.0

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods)
        object.__setattr__(self, "periods", periods)
        arr = np.asarray(self.samples)
        if arr.ndim != len(periods):
            raise ValueError("samples rank must match number of periods")
        object.__setattr__(self, "samples", arr)

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.samples.shape

    def nodes(self, axis: int) -> np.ndarray:
        m = self.samples.shape[axis]
        return (np.arange(m) + self.shift) * self.periods[axis] / m

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.nodes(i) for i in range(len(self.periods))), indexing="ij")

    def cell_measure(self) -> float:
        """Volume of one grid cell, prod_i L_i / M_i."""
        return float(
            np.prod([p / m for p, m in zip(self.periods, self.samples.shape)])
        )


def default_grid_sizes(trunc: TruncationSpec) -> tuple[int, ...]:
    """Default quadrature grid, M_i = 4*(K_i + 1).

    Satisfies M_i >= 4*K_i + 2, so products of two in-band fields are
    integrated exactly and squaring a half-density commutes with quadrature.
    """
    return tuple(4 * (k + 1) for k in trunc.cutoff)


def _band_fft_indices(trunc: TruncationSpec, sizes: Sequence[int]) -> list[np.ndarray]:
    # position of mode k in an FFT array of length M is k mod M
    return [
        np.arange(-k, k + 1) % m for k, m in zip(trunc.cutoff, sizes)
    ]


def _check_grid(trunc: TruncationSpec, sizes: Sequence[int]) -> None:
    if len(sizes) != trunc.dim:
        raise ValueError("grid rank does not match truncation dimension")
    for k, m in zip(trunc.cutoff, sizes):
        if m < 2 * k + 1:
            raise ValueError(
                f"grid too coarse for truncation: M={m} < 2K+1={2 * k + 1}"
            )


def analyze(field: GridField, trunc: TruncationSpec) -> SpectralField:
    """Project grid samples onto the truncated basis by exact quadrature.

    c_k = (prod_i L_i / M_i) * sum_j conj(e_k(x_j)) psi(x_j), evaluated via
    the FFT.  Exact for trigonometric polynomials of bandwidth <= K when
    M_i >= 2*K_i + 1.

    Raises
    ------
    ValueError
        If the grid is too coarse for the requested truncation, has the
        wrong rank or periods, or is not origin-anchored (shift != 0).
    """
    if field.shift != 0.0:
        raise ValueError("analyze requires an origin-anchored grid (shift == 0)")
    if tuple(field.periods) != trunc.periods:
        raise ValueError("grid periods do not match truncation periods")
    sizes = field.samples.shape
    _check_grid(trunc, sizes)
    f = np.fft.fftn(np.asarray(field.samples, dtype=complex))
    picked = f[np.ix_(*_band_fft_indices(trunc, sizes))]
    scale = trunc.root_volume() / np.prod(sizes)
    return SpectralField(trunc, picked * scale)


def synthesize(spec: SpectralField, sizes: Sequence[int] | None = None) -> GridField:
    """Evaluate the truncated series on a uniform grid (inverse of analyze).

    With the default ``sizes`` (see ``default_grid_sizes``) the result is
    dealiased for pointwise products of two in-band fields.
    """
    trunc = spec.trunc
    if sizes is None:
        sizes = default_grid_sizes(trunc)
    sizes = tuple(int(m) for m in sizes)
    _check_grid(trunc, sizes)
    f = np.zeros(sizes, dtype=complex)
    f[np.ix_(*_band_fft_indices(trunc, sizes))] = spec.coeffs
    samples = np.fft.ifftn(f) * (np.prod(sizes) / trunc.root_volume())
    return GridField(trunc.periods, samples)


def sobolev_norm(spec: SpectralField, s: float) -> float:
    """Sobolev H^s norm ( sum_k (1 + lambda_k)^s |c_k|^2 )^{1/2}.

    lambda_k = sum_i (2 pi k_i / L_i)^2 are the flat-torus Laplacian
    eigenvalues; s = 0 reduces to the plain 2-norm.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    trunc = spec.trunc
    lam = np.zeros(trunc.shape)
    for i, (k, w) in enumerate(zip(trunc.cutoff, trunc.omegas)):
        ax = (np.arange(-k, k + 1) * w) ** 2
        lam = lam + ax.reshape([-1 if j == i else 1 for j in range(trunc.dim)])
    weights = (1.0 + lam) ** s
    return float(np.sqrt(np.sum(weights * np.abs(spec.coeffs) ** 2)))


def sample_on_grid(
    periods: Sequence[float],
    sizes: Sequence[int],
    fn: Callable[..., np.ndarray],
) -> GridField:
    """Sample a callable fn(x_1, ..., x_n) on the uniform origin-anchored grid."""
    periods = tuple(float(p) for p in periods)
    field = GridField(periods, np.zeros(tuple(int(m) for m in sizes)))
    mesh = field.meshgrid()
    return GridField(periods, np.asarray(fn(*mesh)))
