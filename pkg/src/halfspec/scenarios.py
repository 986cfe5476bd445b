"""Closed-form oracles, named presets, scenario configuration, and drivers.

The two shipped experiments:

* ``run_benchmark_s1``: the circle benchmark x' = -sin(2x) on [0, 2*pi),
  starting from the uniform density.  The flow contracts mass onto the two
  sinks x = 0 and x = pi; everything has a closed form, so the driver emits
  density snapshots against the exact solution, conservation time series
  for the half-density route and the standard Galerkin baseline, a
  convergence table, and product/norm preservation series.
* ``run_abc``: a three-torus flow in the Arnold-Beltrami-Childress family
  with a compressibility knob D (volume-preserving at D = 0), compared
  against a seeded Monte-Carlo particle run through the z-marginal.

Every driver writes delimited tables, rendered figures, and a manifest that
pins config hash, seeds, versions, and tolerances; reruns with the same
config are bitwise identical (manifests carry no timestamps).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .basis import (
    GridField,
    SpectralField,
    TruncationSpec,
    analyze,
    default_grid_sizes,
    sample_on_grid,
    synthesize,
)
from .diagnostics import (
    fit_convergence,
    l1_norm_grid,
    negativity,
    nuclear_mass,
    operator_norm,
    product_discrepancy,
)
from .figures import fig_convergence, fig_curves, fig_marginal
from .operators import (
    VectorFieldSpec,
    assemble_density_generator,
    assemble_half_density_generator,
    assemble_multiplication_operator,
    assemble_transport_generator,
)
from .particles import advect_particles, histogram_marginal, sample_wrapped_gaussian
from .propagation import SchemeSpec, conjugate_observable, dense_propagator, evolve_series
from .reporting import write_manifest, write_table
from .solvers import solve_density, solve_density_standard, sqrt_split

__all__ = [
    "exact_s1_density",
    "exact_s1_flow",
    "exact_s1_functions",
    "s1_benchmark_field",
    "abc_field",
    "harmonic_field",
    "wrapped_gaussian",
    "Scenario",
    "StageError",
    "benchmark_scenario",
    "abc_scenario",
    "run_benchmark_s1",
    "run_abc",
    "run_solve",
    "run_convergence",
]

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# closed-form oracles for the circle benchmark


def exact_s1_density(x, t: float):
    """Pushforward of the uniform density under the benchmark flow.

    rho(x, t) = (e^{2t} sin^2 x + e^{-2t} cos^2 x)^{-1}; at x = 0 this is
    e^{2t}, at x = pi/2 it is e^{-2t}, and t = 0 gives 1 everywhere.
    """
    x = np.asarray(x, dtype=float)
    out = 1.0 / (np.exp(2.0 * t) * np.sin(x) ** 2 + np.exp(-2.0 * t) * np.cos(x) ** 2)
    return out if out.ndim else float(out)


def exact_s1_flow(x, t: float):
    """Branch-corrected evaluation of the arctan flow map, wrapped to [0, 2*pi).

    Evaluates atan(e^{2t} tan x) in the same quarter-period as x; the points
    {0, pi/2, pi, 3pi/2} are fixed for all t.  Positive t drives points
    toward the odd multiples of pi/2, i.e. this map is the reverse of the
    particle flow of x' = -sin(2x); endpoints of forward particle paths at
    time t match this map evaluated at -t.
    """
    x = np.asarray(x, dtype=float)
    k = np.round(x / np.pi)
    r = x - k * np.pi  # r in [-pi/2, pi/2]
    fixed = np.abs(np.abs(r) - np.pi / 2) < 1e-12
    safe_r = np.where(fixed, 0.0, r)
    out = k * np.pi + np.arctan(np.exp(2.0 * t) * np.tan(safe_r))
    out = np.where(fixed, x, out)
    out = np.mod(out, TWO_PI)
    return out if out.ndim else float(out)


def exact_s1_functions(which: str, x, t: float):
    """Transported observables on the benchmark: f, g, and their product h.

    f(x,t) = sin x (sin^2 x + e^{-4t} cos^2 x)^{-1/2},
    g(x,t) = cos x (e^{4t} sin^2 x + cos^2 x)^{-1/2},
    h := f * g pointwise (the product identity holds exactly, and both sup
    norms are 1 for all t).
    """
    x = np.asarray(x, dtype=float)
    s2, c2 = np.sin(x) ** 2, np.cos(x) ** 2
    f = np.sin(x) / np.sqrt(s2 + np.exp(-4.0 * t) * c2)
    g = np.cos(x) / np.sqrt(np.exp(4.0 * t) * s2 + c2)
    if which == "f":
        out = f
    elif which == "g":
        out = g
    elif which == "h":
        out = f * g
    else:
        raise ValueError("which must be one of 'f', 'g', 'h'")
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# vector field and initial condition presets


def _sin_mode(dim: int, axis: int, amp: float) -> dict:
    """amp * sin(omega x_axis) as plain-exponential coefficients."""
    plus = tuple(1 if i == axis else 0 for i in range(dim))
    minus = tuple(-q for q in plus)
    return {plus: -0.5j * amp, minus: 0.5j * amp}


def _cos_mode(dim: int, axis: int, amp: float) -> dict:
    plus = tuple(1 if i == axis else 0 for i in range(dim))
    minus = tuple(-q for q in plus)
    return {plus: 0.5 * amp, minus: 0.5 * amp}


def _merge(*dicts: dict) -> dict:
    out: dict = {}
    for d in dicts:
        for p, c in d.items():
            out[p] = out.get(p, 0.0) + c
    return {p: c for p, c in out.items() if c != 0}


def s1_benchmark_field() -> VectorFieldSpec:
    """X = -sin(2x) on the circle of period 2*pi."""
    return VectorFieldSpec(
        dim=1, periods=(TWO_PI,), components=({(2,): 0.5j, (-2,): -0.5j},)
    )


def abc_field(
    a: float, b: float, c: float, d: float, printed: bool = False
) -> VectorFieldSpec:
    """Three-torus ABC-family field with compressibility knob d, period 1.

    Default (corrected) form, divergence-free at d = 0:

        x' = a sin(2 pi z) + c cos(2 pi y) + d cos(2 pi x)
        y' = b sin(2 pi x) + a cos(2 pi z) + d cos(2 pi y)
        z' = c sin(2 pi y) + b cos(2 pi x) + d cos(2 pi z)

    ``printed=True`` selects an alternate variant whose y'/z' lines reuse the
    z-sine and y-cosine terms; that variant is NOT divergence-free at d = 0
    and is kept only as a config-selectable comparison.
    """
    n = 3
    if printed:
        comp_x = _merge(_sin_mode(n, 2, a), _cos_mode(n, 1, c), _cos_mode(n, 0, d))
        comp_y = _merge(_sin_mode(n, 2, b), _cos_mode(n, 1, a), _cos_mode(n, 1, d))
        comp_z = _merge(_sin_mode(n, 2, a), _cos_mode(n, 1, b), _cos_mode(n, 2, d))
    else:
        comp_x = _merge(_sin_mode(n, 2, a), _cos_mode(n, 1, c), _cos_mode(n, 0, d))
        comp_y = _merge(_sin_mode(n, 0, b), _cos_mode(n, 2, a), _cos_mode(n, 1, d))
        comp_z = _merge(_sin_mode(n, 1, c), _cos_mode(n, 0, b), _cos_mode(n, 2, d))
    return VectorFieldSpec(dim=3, periods=(1.0, 1.0, 1.0), components=(comp_x, comp_y, comp_z))


def harmonic_field(
    trunc: TruncationSpec, plain_coeffs: dict[tuple[int, ...], complex]
) -> SpectralField:
    """SpectralField from plain-exponential coefficients (e.g. sin x, cos x)."""
    out = np.zeros(trunc.shape, dtype=complex)
    for p, c in plain_coeffs.items():
        idx = tuple(q + k for q, k in zip(p, trunc.cutoff))
        out[idx] = c * trunc.root_volume()
    return SpectralField(trunc, out)


def wrapped_gaussian(
    periods: Sequence[float], mean: Sequence[float], sigma: Sequence[float], nwrap: int = 10
) -> Callable[..., np.ndarray]:
    """Probability density of a componentwise Gaussian wrapped onto the torus."""
    periods = np.asarray(periods, dtype=float)
    mean = np.asarray(mean, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma components must be positive")

    def density(*mesh):
        out = np.ones_like(np.asarray(mesh[0], dtype=float))
        for i, x in enumerate(mesh):
            acc = np.zeros_like(np.asarray(x, dtype=float))
            for w in range(-nwrap, nwrap + 1):
                u = (np.asarray(x) - mean[i] - w * periods[i]) / sigma[i]
                acc += np.exp(-0.5 * u * u)
            out = out * acc / (sigma[i] * np.sqrt(TWO_PI))
        return out

    return density


# ---------------------------------------------------------------------------
# scenario configuration


class StageError(RuntimeError):
    """A driver stage failed; the message names the stage."""


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(f"{name}: {exc}") from exc


_SOLVER_NAMES = ("alg2", "standard", "particles", "alg3")
_FIELD_PRESETS = ("s1_benchmark", "abc_modified", "abc_printed")
_INITIAL_PRESETS = ("uniform", "wrapped_gaussian")


@dataclass
class Scenario:
    """A fully pinned experiment: field, initial data, truncation, schedule, outputs."""

    name: str
    dim: int
    periods: tuple[float, ...]
    field: dict
    initial: dict
    modes: tuple[int, ...]
    t_final: float
    snapshots: int = 30
    scheme: SchemeSpec = dc_field(default_factory=SchemeSpec)
    solvers: tuple[str, ...] = ("alg2", "standard")
    particle_count: int = 20000
    particle_seed: int = 2024
    particle_dt: float = 5e-3
    bins: int = 25
    convergence_modes: tuple[int, ...] = (4, 8, 12, 16)
    convergence_t: float = 1.0
    out_dir: str = "runs/out"
    out_format: str = "csv"

    def __post_init__(self):
        self.periods = tuple(float(p) for p in self.periods)
        self.modes = tuple(int(k) for k in self.modes)
        self.solvers = tuple(self.solvers)
        self.convergence_modes = tuple(int(k) for k in self.convergence_modes)
        if len(self.modes) == 1 and self.dim > 1:
            self.modes = self.modes * self.dim
        if any(k < 1 for k in self.modes):
            raise ValueError("modes (K) must be >= 1")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.snapshots < 2:
            raise ValueError("snapshots must be >= 2")
        for s in self.solvers:
            if s not in _SOLVER_NAMES:
                raise ValueError(f"unknown solver {s!r}")
        if self.out_format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        self.vector_field()  # resolve eagerly so bad presets fail at load time

    # -- resolution ---------------------------------------------------------

    def truncation(self) -> TruncationSpec:
        return TruncationSpec(self.dim, self.modes, self.periods)

    def vector_field(self) -> VectorFieldSpec:
        f = self.field
        preset = f.get("preset")
        if preset == "s1_benchmark":
            return s1_benchmark_field()
        if preset in ("abc_modified", "abc_printed"):
            return abc_field(
                float(f.get("A", 1.0)),
                float(f.get("B", 0.5)),
                float(f.get("C", 0.2)),
                float(f.get("D", 0.5)),
                printed=(preset == "abc_printed"),
            )
        if preset is not None:
            raise ValueError(f"unknown field preset {preset!r}; known: {_FIELD_PRESETS}")
        comps = f.get("components")
        if comps is None:
            raise ValueError("field needs a preset or explicit components")
        parsed = tuple(
            {tuple(entry["mode"]): complex(entry["coeff"][0], entry["coeff"][1]) for entry in comp}
            for comp in comps
        )
        return VectorFieldSpec(self.dim, self.periods, parsed)

    def initial_density(self, trunc: TruncationSpec) -> GridField:
        init = self.initial
        sizes = default_grid_sizes(trunc)
        preset = init.get("preset")
        if preset == "uniform":
            return sample_on_grid(self.periods, sizes, lambda *m: np.ones_like(m[0]))
        if preset == "wrapped_gaussian":
            fn = wrapped_gaussian(self.periods, init["mean"], init["sigma"])
            return sample_on_grid(self.periods, sizes, fn)
        if preset is not None:
            raise ValueError(f"unknown initial preset {preset!r}; known: {_INITIAL_PRESETS}")
        path = init.get("samples_file")
        if path is None:
            raise ValueError("initial needs a preset or a samples_file")
        samples = np.load(path)
        return GridField(self.periods, samples)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.snapshots)

    # -- (de)serialization ---------------------------------------------------

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "periods": list(self.periods),
            "field": self.field,
            "initial": self.initial,
            "modes": list(self.modes),
            "t_final": self.t_final,
            "snapshots": self.snapshots,
            "scheme": {
                "name": self.scheme.scheme,
                "dt": self.scheme.dt,
                "tol": self.scheme.tol,
                "krylov_dim": self.scheme.krylov_dim,
            },
            "solvers": list(self.solvers),
            "particles": {
                "count": self.particle_count,
                "seed": self.particle_seed,
                "dt": self.particle_dt,
            },
            "bins": self.bins,
            "convergence": {"modes": list(self.convergence_modes), "t": self.convergence_t},
            "output": {"dir": self.out_dir, "format": self.out_format},
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "Scenario":
        scheme_cfg = cfg.get("scheme", {})
        scheme = SchemeSpec(
            scheme=scheme_cfg.get("name", "dense_expm"),
            dt=scheme_cfg.get("dt"),
            tol=scheme_cfg.get("tol", 1e-8),
            krylov_dim=scheme_cfg.get("krylov_dim", 30),
        )
        part = cfg.get("particles", {})
        conv = cfg.get("convergence", {})
        out = cfg.get("output", {})
        return cls(
            name=cfg["name"],
            dim=int(cfg["dim"]),
            periods=tuple(cfg["periods"]),
            field=cfg["field"],
            initial=cfg.get("initial", {"preset": "uniform"}),
            modes=tuple(np.atleast_1d(cfg["modes"]).tolist()),
            t_final=float(cfg["t_final"]),
            snapshots=int(cfg.get("snapshots", 30)),
            scheme=scheme,
            solvers=tuple(cfg.get("solvers", ["alg2", "standard"])),
            particle_count=int(part.get("count", 20000)),
            particle_seed=int(part.get("seed", 2024)),
            particle_dt=float(part.get("dt", 5e-3)),
            bins=int(cfg.get("bins", 25)),
            convergence_modes=tuple(conv.get("modes", [4, 8, 12, 16])),
            convergence_t=float(conv.get("t", 1.0)),
            out_dir=out.get("dir", "runs/out"),
            out_format=out.get("format", "csv"),
        )

    @classmethod
    def from_json_file(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_config(json.load(fh))


def benchmark_scenario(**overrides) -> Scenario:
    """Default circle benchmark: K=16, t_final=1.5, 30 snapshots, exact exponential."""
    base = dict(
        name="bench-s1",
        dim=1,
        periods=(TWO_PI,),
        field={"preset": "s1_benchmark"},
        initial={"preset": "uniform"},
        modes=(16,),
        t_final=1.5,
        snapshots=30,
        scheme=SchemeSpec("dense_expm"),
        solvers=("alg2", "standard", "alg3"),
        out_dir="runs/bench_s1",
    )
    base.update(overrides)
    return Scenario(**base)


def abc_scenario(**overrides) -> Scenario:
    """Default three-torus run: corrected ABC+D field, K=8, Krylov propagation."""
    base = dict(
        name="abc",
        dim=3,
        periods=(1.0, 1.0, 1.0),
        field={"preset": "abc_modified", "A": 1.0, "B": 0.5, "C": 0.2, "D": 0.5},
        initial={"preset": "wrapped_gaussian", "mean": [0.0, 0.0, 0.0], "sigma": [0.2, 0.3, 0.3]},
        modes=(8, 8, 8),
        t_final=0.5,
        snapshots=6,
        scheme=SchemeSpec("krylov_expm", tol=1e-8),
        solvers=("alg2", "particles"),
        out_dir="runs/abc",
    )
    base.update(overrides)
    return Scenario(**base)


# ---------------------------------------------------------------------------
# experiment drivers


def _eval_series_1d(values: np.ndarray, period: float, cutoff: int, points: np.ndarray) -> np.ndarray:
    """Evaluate the bandlimited interpolant of uniform-grid samples at points."""
    m = values.size
    coeffs = np.fft.fft(values) / m
    ks = np.arange(-cutoff, cutoff + 1)
    table = coeffs[ks % m]
    phases = np.exp(2j * np.pi * np.outer(points, ks) / period)
    return (phases @ table).real


def _convergence_rows(scenario: Scenario, vf: VectorFieldSpec):
    """L1 errors vs the exact density at convergence_t, on a shared fine grid."""
    t = scenario.convergence_t
    fine = (max(256, 4 * (max(scenario.convergence_modes) + 1)),)
    rows, ns, errs2, errss = [], [], [], []
    for k in scenario.convergence_modes:
        tk = TruncationSpec(1, (int(k),), scenario.periods)
        rho0 = scenario.initial_density(tk)
        psi0 = analyze(sqrt_split(rho0), tk)
        zt = evolve_series(
            assemble_half_density_generator(vf, tk), psi0.flat(), np.array([t]), scenario.scheme
        )[0]
        grid2 = synthesize(SpectralField.from_flat(tk, zt), fine)
        rho2 = (grid2.samples**2).real
        zs = evolve_series(
            assemble_density_generator(vf, tk),
            analyze(rho0, tk).flat(),
            np.array([t]),
            scenario.scheme,
        )[0]
        rhos = synthesize(SpectralField.from_flat(tk, zs), fine).samples.real
        exact = exact_s1_density(grid2.nodes(0), t)
        e2 = l1_norm_grid(GridField(scenario.periods, rho2 - exact))
        es = l1_norm_grid(GridField(scenario.periods, rhos - exact))
        n = 2 * int(k) + 1
        rows.append([int(k), n, e2, es])
        ns.append(n)
        errs2.append(e2)
        errss.append(es)
    return rows, ns, errs2, errss


def _tolerances() -> dict:
    return {
        "mass_rel": 1e-10,
        "negativity": 1e-12,
        "antihermitian_defect": 1e-13,
        "unitarity_defect": 1e-10,
        "pairing_drift": 1e-9,
        "eigenvalue_drift": 1e-9,
        "time_tol_default": 1e-8,
    }


def run_benchmark_s1(scenario: Scenario) -> dict:
    """Full circle-benchmark report; returns {artifact name: path}."""
    if scenario.dim != 1 or scenario.field.get("preset") != "s1_benchmark":
        raise StageError("setup: run_benchmark_s1 requires the dim-1 s1_benchmark preset")
    out_dir = Path(scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = scenario.out_format
    trunc = scenario.truncation()
    vf = scenario.vector_field()
    ts = scenario.times()
    results: dict = {}
    paths: dict[str, Path] = {}

    def setup():
        rho0 = scenario.initial_density(trunc)
        psi0 = analyze(sqrt_split(rho0), trunc)
        rho_hat0 = analyze(rho0, trunc)
        return rho0, psi0, rho_hat0

    rho0, psi0, rho_hat0 = _stage("setup", setup)
    gen_half = assemble_half_density_generator(vf, trunc)
    gen_dens = assemble_density_generator(vf, trunc)
    sizes = default_grid_sizes(trunc)

    def evolve_alg2():
        states = evolve_series(gen_half, psi0.flat(), ts, scenario.scheme)
        mass, l1, neg = [], [], []
        for row in states:
            f = SpectralField.from_flat(trunc, row)
            grid = synthesize(f, sizes)
            rho = GridField(trunc.periods, grid.samples**2)
            mass.append(nuclear_mass(f))
            l1.append(l1_norm_grid(rho))
            neg.append(negativity(rho))
        return states, np.array(mass), np.array(l1), np.array(neg)

    states_alg2, mass_alg2, l1_alg2, neg_alg2 = _stage("alg2-evolution", evolve_alg2)

    def evolve_standard():
        states = evolve_series(gen_dens, rho_hat0.flat(), ts, scenario.scheme)
        l1, neg = [], []
        for row in states:
            grid = synthesize(SpectralField.from_flat(trunc, row), sizes)
            g = GridField(trunc.periods, grid.samples.real)
            l1.append(l1_norm_grid(g))
            neg.append(negativity(g))
        return states, np.array(l1), np.array(neg)

    states_std, l1_std, neg_std = _stage("standard-evolution", evolve_standard)

    results["mass_rel_drift_alg2"] = float(
        np.max(np.abs(mass_alg2 - mass_alg2[0])) / mass_alg2[0]
    )
    results["l1_drift_standard_final"] = float(abs(l1_std[-1] - l1_std[0]))
    results["negativity_alg2_max"] = float(np.max(neg_alg2))
    results["negativity_standard_final"] = float(neg_std[-1])

    def snapshot():
        grid_half = synthesize(SpectralField.from_flat(trunc, states_alg2[-1]), sizes)
        rho_alg2 = (grid_half.samples**2).real
        rho_std = synthesize(SpectralField.from_flat(trunc, states_std[-1]), sizes).samples.real
        x = grid_half.nodes(0)
        rho_ex = exact_s1_density(x, scenario.t_final)
        m = x.size
        results["pointwise_rel_err_x0"] = float(
            abs(rho_alg2[0] - rho_ex[0]) / abs(rho_ex[0])
        )
        results["pointwise_rel_err_xpi2"] = float(
            abs(rho_alg2[m // 4] - rho_ex[m // 4]) / abs(rho_ex[m // 4])
        )
        paths["density_snapshot"] = write_table(
            out_dir / "density_snapshot",
            fmt,
            ["x", "rho_alg2", "rho_standard", "rho_exact"],
            zip(x, rho_alg2, rho_std, rho_ex),
        )
        paths["fig_density"] = fig_curves(
            x,
            {"alg2": rho_alg2, "standard": rho_std, "exact": rho_ex},
            out_dir / "fig_density.png",
            "x",
            "density",
            title=f"t = {scenario.t_final:g}, K = {trunc.cutoff[0]}",
        )

    _stage("snapshot", snapshot)

    def conservation_report():
        paths["mass_series"] = write_table(
            out_dir / "mass_series",
            fmt,
            ["t", "mass_nuclear_alg2", "l1_alg2", "negativity_alg2", "l1_standard", "negativity_standard"],
            zip(ts, mass_alg2, l1_alg2, neg_alg2, l1_std, neg_std),
        )
        paths["fig_mass"] = fig_curves(
            ts,
            {
                "nuclear mass (alg2)": mass_alg2,
                "L1 (alg2)": l1_alg2,
                "L1 (standard)": l1_std,
            },
            out_dir / "fig_mass.png",
            "t",
            "mass",
        )

    _stage("conservation-report", conservation_report)

    def convergence():
        rows, ns, errs_alg2, errs_std = _convergence_rows(scenario, vf)
        slope2 = fit_convergence(list(zip(ns, errs_alg2)))
        slope_std = fit_convergence(list(zip(ns, errs_std)))
        results["convergence_slope_alg2"] = slope2
        results["convergence_slope_standard"] = slope_std
        results["convergence_t"] = scenario.convergence_t
        paths["convergence"] = write_table(
            out_dir / "convergence",
            fmt,
            ["K", "N", "l1_error_alg2", "l1_error_standard"],
            rows,
        )
        paths["fig_convergence"] = fig_convergence(
            ns, {"alg2": errs_alg2, "standard": errs_std}, slope2, out_dir / "fig_convergence.png"
        )

    _stage("convergence", convergence)

    def discrepancy_and_norms():
        tf = TruncationSpec(1, (1,), trunc.periods)
        f = harmonic_field(tf, {(1,): -0.5j, (-1,): 0.5j})  # sin x
        g = harmonic_field(tf, {(1,): 0.5, (-1,): 0.5})  # cos x
        disc_h, disc_s = [], []
        for t in ts:
            disc_h.append(product_discrepancy(f, g, vf, float(t), trunc, scenario.scheme, "halfdens"))
            disc_s.append(product_discrepancy(f, g, vf, float(t), trunc, scenario.scheme, "standard"))
        results["discrepancy_halfdens_final"] = disc_h[-1]
        results["discrepancy_standard_final"] = disc_s[-1]
        paths["discrepancy_series"] = write_table(
            out_dir / "discrepancy_series",
            fmt,
            ["t", "halfdens", "standard"],
            zip(ts, disc_h, disc_s),
        )
        paths["fig_discrepancy"] = fig_curves(
            ts,
            {"halfdens": disc_h, "standard": disc_s},
            out_dir / "fig_discrepancy.png",
            "t",
            "product discrepancy",
            logy=True,
        )
        # operator norm stays fixed under conjugation; the transported
        # coefficients of f under the plain Galerkin baseline do not
        h0 = assemble_multiplication_operator(f, trunc)
        gen_t = assemble_transport_generator(vf, trunc)
        f_states = evolve_series(gen_t, _embed_coeffs(f, trunc), ts, scenario.scheme)
        op_norms, sup_std = [], []
        for t, row in zip(ts, f_states):
            u = dense_propagator(gen_half, float(t))
            op_norms.append(operator_norm(conjugate_observable(u, h0)))
            grid = synthesize(SpectralField.from_flat(trunc, row), sizes)
            sup_std.append(float(np.max(np.abs(grid.samples.real))))
        results["operator_norm_drift_alg3"] = float(np.max(np.abs(np.array(op_norms) - op_norms[0])))
        results["sup_norm_standard_final"] = sup_std[-1]
        paths["norms_series"] = write_table(
            out_dir / "norms_series",
            fmt,
            ["t", "operator_norm_alg3", "sup_norm_standard"],
            zip(ts, op_norms, sup_std),
        )
        paths["fig_norms"] = fig_curves(
            ts,
            {"operator norm (alg3)": op_norms, "sup norm (standard)": sup_std},
            out_dir / "fig_norms.png",
            "t",
            "norm",
        )

    _stage("discrepancy-norms", discrepancy_and_norms)

    def manifest():
        paths["manifest"] = write_manifest(
            out_dir,
            scenario.to_config(),
            results,
            [p.name for p in paths.values()],
            _tolerances(),
        )

    _stage("manifest", manifest)
    return {k: str(v) for k, v in paths.items()}


def _embed_coeffs(f: SpectralField, trunc: TruncationSpec) -> np.ndarray:
    out = np.zeros(trunc.shape, dtype=complex)
    slices = tuple(
        slice(k - kf, k + kf + 1) for kf, k in zip(f.trunc.cutoff, trunc.cutoff)
    )
    out[slices] = f.coeffs
    return out.reshape(-1)


def run_abc(scenario: Scenario) -> dict:
    """Three-torus driver: spectral vs particle z-marginals plus conservation series."""
    if scenario.dim != 3 or scenario.field.get("preset") not in ("abc_modified", "abc_printed"):
        raise StageError("setup: run_abc requires a dim-3 abc preset")
    out_dir = Path(scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = scenario.out_format
    trunc = scenario.truncation()
    vf = scenario.vector_field()
    ts = scenario.times()
    results: dict = {}
    paths: dict[str, Path] = {}
    d_value = float(scenario.field.get("D", 0.5))

    def generator_check():
        half = assemble_half_density_generator(vf, trunc)
        dens = assemble_density_generator(vf, trunc)
        diff = 0.0
        for p in set(half.offsets) | set(dens.offsets):
            a = half.bands.get(p, 0.0)
            b = dens.bands.get(p, 0.0)
            a = a if isinstance(a, np.ndarray) else np.zeros(trunc.shape, complex)
            b = b if isinstance(b, np.ndarray) else np.zeros(trunc.shape, complex)
            diff = max(diff, float(np.max(np.abs(a + b))))
        results["generator_max_diff_half_plus_density"] = diff
        if d_value == 0.0 and diff > 1e-12:
            raise StageError(
                f"generator-check: divergence-free field but |X_half + G_density| = {diff:.3e}"
            )
        return half

    gen_half = _stage("generator-check", generator_check)
    sizes = default_grid_sizes(trunc)

    def spectral_run():
        rho0 = scenario.initial_density(trunc)
        psi0 = analyze(sqrt_split(rho0), trunc)
        states = evolve_series(gen_half, psi0.flat(), ts, scenario.scheme)
        mass, neg = [], []
        for row in states:
            f = SpectralField.from_flat(trunc, row)
            grid = synthesize(f, sizes)
            mass.append(nuclear_mass(f))
            neg.append(negativity(GridField(trunc.periods, grid.samples**2)))
        return states, np.array(mass), np.array(neg)

    states, mass, neg = _stage("alg2-evolution", spectral_run)
    results["mass_rel_drift_alg2"] = float(np.max(np.abs(mass - mass[0])) / mass[0])
    results["negativity_alg2_max"] = float(np.max(neg))

    def marginal_stage():
        grid = synthesize(SpectralField.from_flat(trunc, states[-1]), sizes)
        rho = (grid.samples**2).real
        # z-marginal: integrate out x and y, then normalize to a probability density
        mz = rho.mean(axis=(0, 1)) * scenario.periods[0] * scenario.periods[1]
        mz_mass = float(np.sum(mz) * scenario.periods[2] / mz.size)
        centers = (np.arange(scenario.bins) + 0.5) * scenario.periods[2] / scenario.bins
        spectral = _eval_series_1d(mz / mz_mass, scenario.periods[2], trunc.cutoff[2], centers)

        mean = scenario.initial["mean"]
        sigma = scenario.initial["sigma"]
        ens0 = sample_wrapped_gaussian(
            mean, sigma, scenario.particle_count, scenario.particle_seed, scenario.periods
        )
        ens = advect_particles(ens0, vf, scenario.t_final, scenario.particle_dt)
        hist = histogram_marginal(ens, (2,), scenario.bins)
        particle = hist.samples

        dz = scenario.periods[2] / scenario.bins
        results["marginal_l1_distance"] = float(np.sum(np.abs(spectral - particle)) * dz)
        paths["marginal_z"] = write_table(
            out_dir / "marginal_z",
            fmt,
            ["z_center", "spectral", "particle"],
            zip(centers, spectral, particle),
        )
        paths["fig_marginal"] = fig_marginal(
            centers, spectral, particle, out_dir / "fig_marginal.png"
        )

    if "particles" in scenario.solvers:
        _stage("marginal", marginal_stage)

    def conservation_report():
        paths["mass_series"] = write_table(
            out_dir / "mass_series",
            fmt,
            ["t", "mass_nuclear_alg2", "negativity_alg2"],
            zip(ts, mass, neg),
        )
        paths["fig_mass"] = fig_curves(
            ts,
            {"nuclear mass (alg2)": mass, "negativity (alg2)": neg},
            out_dir / "fig_mass.png",
            "t",
            "value",
        )

    _stage("conservation-report", conservation_report)

    def manifest():
        paths["manifest"] = write_manifest(
            out_dir,
            scenario.to_config(),
            results,
            [p.name for p in paths.values()],
            _tolerances(),
        )

    _stage("manifest", manifest)
    return {k: str(v) for k, v in paths.items()}


def run_solve(scenario: Scenario) -> dict:
    """Single end-time solve of the configured scenario (any dimension)."""
    out_dir = Path(scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = scenario.out_format
    trunc = scenario.truncation()
    vf = scenario.vector_field()
    results: dict = {}
    paths: dict[str, Path] = {}

    def solve():
        rho0 = scenario.initial_density(trunc)
        res = solve_density(rho0, vf, scenario.t_final, trunc, scenario.scheme)
        results["mass_spectral"] = res.mass_spectral
        results["negativity"] = negativity(res.rho)
        rows_header, rows = _density_rows(res.rho)
        columns = list(rows_header)
        table_rows = [list(r) for r in rows]
        if "standard" in scenario.solvers:
            std = solve_density_standard(rho0, vf, scenario.t_final, trunc, scenario.scheme)
            results["l1_standard"] = l1_norm_grid(std)
            columns.append("rho_standard")
            flat_std = np.asarray(std.samples).reshape(-1)
            for r, v in zip(table_rows, flat_std):
                r.append(float(v))
        paths["density"] = write_table(out_dir / "density", fmt, columns, table_rows)
        if scenario.dim == 1:
            x = res.rho.nodes(0)
            curves = {"alg2": res.rho.samples.real}
            if "standard" in scenario.solvers:
                curves["standard"] = std.samples.real
            paths["fig_density"] = fig_curves(
                x, curves, out_dir / "fig_density.png", "x", "density"
            )
        else:
            axis = scenario.dim - 1
            other = tuple(i for i in range(scenario.dim) if i != axis)
            scale = np.prod([scenario.periods[i] for i in other])
            marg = res.rho.samples.real.mean(axis=other) * scale
            z = res.rho.nodes(axis)
            paths["fig_density"] = fig_curves(
                z,
                {"alg2 marginal": marg},
                out_dir / "fig_density.png",
                f"x_{axis + 1}",
                "marginal density",
            )

    _stage("solve", solve)

    def manifest():
        paths["manifest"] = write_manifest(
            out_dir, scenario.to_config(), results, [p.name for p in paths.values()], _tolerances()
        )

    _stage("manifest", manifest)
    return {k: str(v) for k, v in paths.items()}


def _density_rows(rho: GridField):
    from .reporting import grid_field_rows

    return grid_field_rows(rho, "rho_alg2")


def run_convergence(scenario: Scenario) -> dict:
    """K-sweep error study against the circle benchmark's exact solution."""
    if scenario.dim != 1 or scenario.field.get("preset") != "s1_benchmark":
        raise StageError("setup: convergence study requires the dim-1 s1_benchmark preset")
    out_dir = Path(scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = scenario.out_format
    vf = scenario.vector_field()
    results: dict = {}
    paths: dict[str, Path] = {}

    def sweep():
        rows, ns, errs2, errss = _convergence_rows(scenario, vf)
        slope = fit_convergence(list(zip(ns, errs2)))
        results["convergence_slope_alg2"] = slope
        results["convergence_slope_standard"] = fit_convergence(list(zip(ns, errss)))
        results["convergence_t"] = scenario.convergence_t
        paths["convergence"] = write_table(
            out_dir / "convergence", fmt, ["K", "N", "l1_error_alg2", "l1_error_standard"], rows
        )
        paths["fig_convergence"] = fig_convergence(
            ns, {"alg2": errs2, "standard": errss}, slope, out_dir / "fig_convergence.png"
        )

    _stage("sweep", sweep)

    def manifest():
        paths["manifest"] = write_manifest(
            out_dir, scenario.to_config(), results, [p.name for p in paths.values()], _tolerances()
        )

    _stage("manifest", manifest)
    return {k: str(v) for k, v in paths.items()}
