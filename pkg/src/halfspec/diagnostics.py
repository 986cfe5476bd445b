"""Conservation, accuracy, and convergence measurements.

Every function here is pure: repeated calls on the same inputs agree bitwise.
Conservation is asserted on the spectral mass surrogate sum |c_k|^2 (exact
under unitary steps); the grid L1 norm is reported alongside because for a
real half-density the two agree to quadrature exactness on dealiased grids.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .basis import (
    GridField,
    SpectralField,
    TruncationSpec,
    analyze,
    default_grid_sizes,
    synthesize,
)
from .operators import (
    ObservableMatrix,
    VectorFieldSpec,
    assemble_half_density_generator,
    assemble_multiplication_operator,
    assemble_transport_generator,
)
from .propagation import SchemeSpec, conjugate_observable, dense_propagator, evolve_state

__all__ = [
    "l1_norm_grid",
    "nuclear_mass",
    "negativity",
    "operator_norm",
    "pairing",
    "product_discrepancy",
    "fit_convergence",
]


def l1_norm_grid(rho: GridField) -> float:
    """Quadrature of |rho| over the torus.

    On a uniform periodic grid the trapezoid weights are all equal, so this
    is the cell measure times the sum of absolute samples.
    """
    return float(np.sum(np.abs(rho.samples)) * rho.cell_measure())


def nuclear_mass(psi: SpectralField) -> float:
    """sum |c_k|^2 = integral of |psi|^2; conserved exactly by unitary steps."""
    return float(np.sum(np.abs(psi.coeffs) ** 2))


def negativity(rho: GridField) -> float:
    """Quadrature of max(-rho, 0), the total negative mass on the grid.

    Complex samples are accepted (squared half-densities carry roundoff-size
    imaginary parts); only the real component is measured.
    """
    neg = np.maximum(-np.asarray(rho.samples).real, 0.0)
    return float(np.sum(neg) * rho.cell_measure())


def operator_norm(h: ObservableMatrix) -> float:
    """Largest |eigenvalue| of a Hermitian observable."""
    return float(np.max(np.abs(h.eigenvalues())))


def pairing(h: ObservableMatrix, psi: SpectralField) -> complex:
    """<psi | H | psi>, the duality pairing of an observable with a state."""
    if h.trunc.shape != psi.trunc.shape or h.trunc.periods != psi.trunc.periods:
        raise ValueError("observable and state truncation mismatch")
    z = psi.flat()
    return complex(np.vdot(z, h.mat @ z))


def _function_product(f: SpectralField, g: SpectralField, trunc: TruncationSpec) -> SpectralField:
    """Coefficients of the pointwise product f*g, exact on the dealiased grid."""
    sizes = default_grid_sizes(trunc)
    ff = synthesize(f, sizes)
    gg = synthesize(g, sizes)
    return analyze(GridField(trunc.periods, ff.samples * gg.samples), trunc)


def product_discrepancy(
    f: SpectralField,
    g: SpectralField,
    vf: VectorFieldSpec,
    t: float,
    trunc: TruncationSpec,
    spec: SchemeSpec | None = None,
    method: str = "halfdens",
) -> float:
    """How far evolution fails to commute with taking products.

    method="halfdens": evolve the operator product H_f H_g by unitary
    conjugation and compare with the product of the separately evolved
    factors, in the entrywise max norm.  Conjugation distributes over
    products, so this vanishes identically (and is returned as exactly 0.0
    at t = 0).

    method="standard": evolve the coefficients of f, g, and f*g with the
    transport Galerkin generator and return the sup over the dealiased grid
    of |f(t)*g(t) - (fg)(t)|.  This does not vanish: truncated transport is
    not an algebra homomorphism.

    Requires K_f + K_g <= K per axis so that f*g is exactly representable.
    """
    for kf, kg, k in zip(f.trunc.cutoff, g.trunc.cutoff, trunc.cutoff):
        if kf + kg > k:
            raise ValueError("product bandwidth exceeds truncation")
    if f.trunc.periods != trunc.periods or g.trunc.periods != trunc.periods:
        raise ValueError("period mismatch")
    if method not in ("halfdens", "standard"):
        raise ValueError(f"unknown method {method!r}")
    if t == 0:
        return 0.0
    if method == "halfdens":
        hf = assemble_multiplication_operator(f, trunc).mat
        hg = assemble_multiplication_operator(g, trunc).mat
        u = dense_propagator(assemble_half_density_generator(vf, trunc), t).mat
        ud = u.conj().T
        evolved_product = u @ (hf @ hg) @ ud
        product_of_evolved = (u @ hf @ ud) @ (u @ hg @ ud)
        return float(np.max(np.abs(evolved_product - product_of_evolved)))
    gen = assemble_transport_generator(vf, trunc)
    fg = _function_product(f, g, trunc)

    def evolve_to_grid(field: SpectralField) -> np.ndarray:
        pad = SpectralField.from_flat(
            trunc, evolve_state(gen, _embed(field, trunc).flat(), t, spec)
        )
        return synthesize(pad, default_grid_sizes(trunc)).samples

    ft = evolve_to_grid(f)
    gt = evolve_to_grid(g)
    fgt = evolve_to_grid(fg)
    return float(np.max(np.abs(ft * gt - fgt)))


def _embed(field: SpectralField, trunc: TruncationSpec) -> SpectralField:
    """Zero-pad a field into a larger truncation (same periods)."""
    if field.trunc.cutoff == trunc.cutoff:
        return field
    out = np.zeros(trunc.shape, dtype=complex)
    slices = tuple(
        slice(k - kf, k + kf + 1) for kf, k in zip(field.trunc.cutoff, trunc.cutoff)
    )
    out[slices] = field.coeffs
    return SpectralField(trunc, out)


def fit_convergence(pairs: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(N).

    Expects (N, error) pairs with N the basis size actually used; at least
    three pairs, all errors strictly positive.
    """
    if len(pairs) < 3:
        raise ValueError("need at least three (N, error) pairs")
    ns = np.asarray([p[0] for p in pairs], dtype=float)
    errs = np.asarray([p[1] for p in pairs], dtype=float)
    if np.any(errs <= 0):
        raise ValueError("errors must be strictly positive")
    if np.any(ns <= 0):
        raise ValueError("N values must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(errs), 1)
    return float(slope)
