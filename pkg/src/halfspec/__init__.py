"""Structure-preserving spectral solvers for advection on flat tori.

Densities are evolved through their square roots: the generator of the
half-density flow is anti-Hermitian in the truncated Fourier basis, so the
semidiscrete flow is exactly unitary and mass, positivity, products, and
spectra survive truncation. A matching non-preserving Galerkin baseline and
a seeded Monte-Carlo particle route are included for comparison.
"""

__version__ = "0.1.0"

from .basis import (
    GridField,
    SpectralField,
    TruncationSpec,
    analyze,
    default_grid_sizes,
    index_set,
    sample_on_grid,
    sobolev_norm,
    synthesize,
)
from .diagnostics import (
    fit_convergence,
    l1_norm_grid,
    negativity,
    nuclear_mass,
    operator_norm,
    pairing,
    product_discrepancy,
)
from .operators import (
    ObservableMatrix,
    SparseBandedOperator,
    VectorFieldSpec,
    antihermitian_defect,
    assemble_density_generator,
    assemble_half_density_generator,
    assemble_multiplication_operator,
    assemble_transport_generator,
)
from .particles import (
    ParticleEnsemble,
    advect_particles,
    histogram_marginal,
    sample_wrapped_gaussian,
)
from .propagation import (
    SchemeSpec,
    UnitaryPropagator,
    conjugate_observable,
    dense_propagator,
    evolve_series,
    evolve_state,
    unitarity_defect,
)
from .scenarios import (
    Scenario,
    abc_field,
    abc_scenario,
    benchmark_scenario,
    exact_s1_density,
    exact_s1_flow,
    exact_s1_functions,
    harmonic_field,
    run_abc,
    run_benchmark_s1,
    run_convergence,
    run_solve,
    s1_benchmark_field,
    wrapped_gaussian,
)
from .solvers import (
    DensityResult,
    solve_density,
    solve_density_standard,
    solve_half_density,
    solve_observable,
    sqrt_split,
)

__all__ = [
    "__version__",
    "TruncationSpec",
    "SpectralField",
    "GridField",
    "index_set",
    "analyze",
    "synthesize",
    "sample_on_grid",
    "default_grid_sizes",
    "sobolev_norm",
    "VectorFieldSpec",
    "SparseBandedOperator",
    "ObservableMatrix",
    "assemble_half_density_generator",
    "assemble_density_generator",
    "assemble_transport_generator",
    "assemble_multiplication_operator",
    "antihermitian_defect",
    "SchemeSpec",
    "UnitaryPropagator",
    "evolve_state",
    "evolve_series",
    "dense_propagator",
    "conjugate_observable",
    "unitarity_defect",
    "DensityResult",
    "solve_half_density",
    "solve_density",
    "solve_density_standard",
    "solve_observable",
    "sqrt_split",
    "ParticleEnsemble",
    "sample_wrapped_gaussian",
    "advect_particles",
    "histogram_marginal",
    "nuclear_mass",
    "l1_norm_grid",
    "negativity",
    "operator_norm",
    "pairing",
    "product_discrepancy",
    "fit_convergence",
    "Scenario",
    "benchmark_scenario",
    "abc_scenario",
    "run_benchmark_s1",
    "run_abc",
    "run_solve",
    "run_convergence",
    "exact_s1_density",
    "exact_s1_flow",
    "exact_s1_functions",
    "s1_benchmark_field",
    "abc_field",
    "harmonic_field",
    "wrapped_gaussian",
]
