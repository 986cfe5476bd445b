import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from halfspec import (
    SchemeSpec,
    TruncationSpec,
    abc_field,
    abc_scenario,
    analyze,
    benchmark_scenario,
    exact_s1_density,
    exact_s1_flow,
    exact_s1_functions,
    harmonic_field,
    s1_benchmark_field,
    sample_on_grid,
    synthesize,
    wrapped_gaussian,
)
from halfspec.scenarios import Scenario, StageError, run_abc, run_benchmark_s1, run_convergence

import oracles

TWO_PI = 2.0 * np.pi


# -- closed-form oracle self-consistency --------------------------------------


def test_exact_density_frozen_values():
    assert exact_s1_density(0.0, 0.0) == pytest.approx(1.0)
    assert exact_s1_density(1.2345, 0.0) == pytest.approx(1.0)
    for t in (0.5, 1.0, 1.5):
        assert exact_s1_density(0.0, t) == pytest.approx(np.exp(2 * t), rel=1e-14)
        assert exact_s1_density(np.pi / 2, t) == pytest.approx(np.exp(-2 * t), rel=1e-14)
        assert exact_s1_density(np.pi, t) == pytest.approx(np.exp(2 * t), rel=1e-14)


def test_exact_density_solves_continuity_equation():
    # d rho/dt + d(rho X)/dx = 0 with X = -sin 2x, by central differences
    x = np.linspace(0.1, TWO_PI - 0.1, 41)
    t, ht, hx = 0.8, 1e-5, 1e-5
    drho_dt = (exact_s1_density(x, t + ht) - exact_s1_density(x, t - ht)) / (2 * ht)
    flux = lambda y: exact_s1_density(y, t) * (-np.sin(2 * y))
    dflux_dx = (flux(x + hx) - flux(x - hx)) / (2 * hx)
    assert np.max(np.abs(drho_dt + dflux_dx)) < 1e-4


def test_exact_density_mass_is_conserved():
    x = np.arange(4096) * TWO_PI / 4096
    for t in (0.0, 0.7, 1.5):
        mass = np.mean(exact_s1_density(x, t)) * TWO_PI
        assert mass == pytest.approx(TWO_PI, rel=1e-10)


def test_exact_flow_identity_and_fixed_points():
    x = np.linspace(0.0, TWO_PI, 97)[:-1]
    assert np.max(np.abs(exact_s1_flow(x, 0.0) - x)) < 1e-12
    fixed = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    for t in (-1.0, 0.5, 2.0):
        assert np.max(np.abs(exact_s1_flow(fixed, t) - fixed)) < 1e-12


def test_exact_flow_group_property():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, TWO_PI, 50)
    there = exact_s1_flow(x, 0.9)
    back = exact_s1_flow(there, -0.9)
    assert np.max(np.abs(back - x)) < 1e-12
    two_step = exact_s1_flow(exact_s1_flow(x, 0.3), 0.6)
    assert np.max(np.abs(two_step - there)) < 1e-10


def test_exact_flow_velocity():
    # d/dt at t=0 equals +sin(2x): the map is the time-reversed particle flow
    x = np.linspace(0.2, 1.3, 7)
    h = 1e-6
    v = (exact_s1_flow(x, h) - exact_s1_flow(x, -h)) / (2 * h)
    assert np.max(np.abs(v - np.sin(2 * x))) < 1e-8


def test_exact_functions_solve_transport():
    # d f/dt - sin(2x) d f/dx = 0 for both transported observables
    x = np.linspace(0.3, TWO_PI - 0.3, 31)
    t, h = 0.6, 1e-5
    for which in ("f", "g"):
        dt_ = (exact_s1_functions(which, x, t + h) - exact_s1_functions(which, x, t - h)) / (2 * h)
        dx_ = (exact_s1_functions(which, x + h, t) - exact_s1_functions(which, x - h, t)) / (2 * h)
        residual = dt_ + (-np.sin(2 * x)) * dx_
        assert np.max(np.abs(residual)) < 1e-4


def test_exact_functions_product_and_sup():
    x = np.linspace(0, TWO_PI, 513)
    for t in (0.0, 0.5, 1.0):
        f = exact_s1_functions("f", x, t)
        g = exact_s1_functions("g", x, t)
        h = exact_s1_functions("h", x, t)
        assert np.max(np.abs(f * g - h)) < 1e-14
        assert np.max(np.abs(f)) == pytest.approx(1.0, abs=1e-6)
        assert np.max(np.abs(g)) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        exact_s1_functions("q", x, 0.0)


def test_exact_functions_t0():
    x = np.linspace(0, TWO_PI, 65)
    assert np.allclose(exact_s1_functions("f", x, 0.0), np.sin(x), atol=1e-14)
    assert np.allclose(exact_s1_functions("g", x, 0.0), np.cos(x), atol=1e-14)


# -- presets -------------------------------------------------------------------


def test_s1_benchmark_field_values():
    vf = s1_benchmark_field()
    x = np.linspace(0, TWO_PI, 33)[:-1].reshape(-1, 1)
    assert np.allclose(vf.evaluate(x)[:, 0], -np.sin(2 * x[:, 0]), atol=1e-14)


def test_abc_field_divergence_states():
    assert abc_field(1.0, 0.5, 0.2, 0.0).is_divergence_free()
    assert not abc_field(1.0, 0.5, 0.2, 0.5).is_divergence_free()
    assert not abc_field(1.0, 0.5, 0.2, 0.0, printed=True).is_divergence_free()


def test_harmonic_field_synthesis():
    tf = TruncationSpec(1, (1,), (TWO_PI,))
    f = harmonic_field(tf, {(1,): -0.5j, (-1,): 0.5j})
    g = synthesize(f, (64,))
    assert np.allclose(g.samples.real, np.sin(g.nodes(0)), atol=1e-14)
    assert np.max(np.abs(g.samples.imag)) < 1e-14


def test_wrapped_gaussian_normalized_and_periodic():
    fn = wrapped_gaussian((1.0, 1.0), [0.0, 0.5], [0.2, 0.3])
    g = sample_on_grid((1.0, 1.0), (64, 64), fn)
    mass = float(np.sum(g.samples) * g.cell_measure())
    assert mass == pytest.approx(1.0, rel=1e-8)
    # periodicity: value at x and x + L agree
    a = fn(np.array([0.13]), np.array([0.4]))
    b = fn(np.array([1.13]), np.array([0.4]))
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(ValueError):
        wrapped_gaussian((1.0,), [0.0], [0.0])


# -- scenario config -----------------------------------------------------------


def test_scenario_roundtrip(tmp_path):
    sc = benchmark_scenario(out_dir=str(tmp_path / "x"))
    cfg = sc.to_config()
    back = Scenario.from_config(cfg)
    assert back == sc
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(cfg))
    assert Scenario.from_json_file(p) == sc


def test_scenario_validation(tmp_path):
    with pytest.raises(ValueError, match="preset"):
        benchmark_scenario(field={"preset": "nope"})
    with pytest.raises(ValueError, match="modes"):
        benchmark_scenario(modes=(0,))
    with pytest.raises(ValueError, match="t_final"):
        benchmark_scenario(t_final=0.0)
    with pytest.raises(ValueError, match="format"):
        benchmark_scenario(out_format="xml")
    with pytest.raises(ValueError, match="solver"):
        benchmark_scenario(solvers=("alg2", "magic"))
    with pytest.raises(ValueError, match="snapshots"):
        benchmark_scenario(snapshots=1)


def test_scenario_modes_broadcast():
    sc = abc_scenario(modes=(4,))
    assert sc.modes == (4, 4, 4)
    assert sc.truncation().shape == (9, 9, 9)


def test_scenario_explicit_components():
    sc = Scenario(
        name="custom",
        dim=1,
        periods=(TWO_PI,),
        field={"components": [[{"mode": [2], "coeff": [0.0, 0.5]}, {"mode": [-2], "coeff": [0.0, -0.5]}]]},
        initial={"preset": "uniform"},
        modes=(4,),
        t_final=0.5,
    )
    vf = sc.vector_field()
    x = np.linspace(0, TWO_PI, 17)[:-1].reshape(-1, 1)
    assert np.allclose(vf.evaluate(x)[:, 0], -np.sin(2 * x[:, 0]), atol=1e-14)


def test_scenario_initial_from_file(tmp_path):
    samples = np.ones(24)
    path = tmp_path / "rho0.npy"
    np.save(path, samples)
    sc = benchmark_scenario(initial={"samples_file": str(path)}, modes=(5,))
    rho0 = sc.initial_density(sc.truncation())
    assert np.array_equal(rho0.samples, samples)


# -- drivers -------------------------------------------------------------------


@pytest.fixture(scope="module")
def bench_small(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    sc = benchmark_scenario(
        modes=(8,), snapshots=5, convergence_modes=(4, 6, 8), out_dir=str(out)
    )
    paths = run_benchmark_s1(sc)
    return sc, paths, out


def test_benchmark_driver_outputs(bench_small):
    sc, paths, out = bench_small
    for key in (
        "density_snapshot",
        "mass_series",
        "convergence",
        "discrepancy_series",
        "norms_series",
        "manifest",
        "fig_density",
        "fig_mass",
        "fig_convergence",
        "fig_discrepancy",
        "fig_norms",
    ):
        assert key in paths
        assert Path(paths[key]).exists()


def test_benchmark_manifest_contents(bench_small):
    sc, paths, out = bench_small
    m = json.loads(Path(paths["manifest"]).read_text())
    assert m["config"] == sc.to_config()
    assert len(m["config_sha256"]) == 64
    assert "halfspec" in m["versions"]
    assert "numpy" in m["versions"]
    r = m["results"]
    assert r["mass_rel_drift_alg2"] <= 1e-10
    assert r["negativity_alg2_max"] <= 1e-12
    assert r["l1_drift_standard_final"] > 0.1
    assert r["discrepancy_halfdens_final"] <= 1e-7
    assert r["discrepancy_standard_final"] >= 10 * r["discrepancy_halfdens_final"]
    assert "timestamp" not in json.dumps(m).lower()


def test_benchmark_csv_layout(bench_small):
    sc, paths, out = bench_small
    header = Path(paths["mass_series"]).read_text().splitlines()[0]
    assert header == "t,mass_nuclear_alg2,l1_alg2,negativity_alg2,l1_standard,negativity_standard"
    rows = Path(paths["mass_series"]).read_text().splitlines()[1:]
    assert len(rows) == sc.snapshots


def test_benchmark_driver_rejects_wrong_preset():
    sc = abc_scenario()
    with pytest.raises(StageError, match="setup"):
        run_benchmark_s1(sc)


def test_abc_driver_and_rerun_determinism(tmp_path):
    out = tmp_path / "abc"
    sc = abc_scenario(
        modes=(3,), snapshots=3, particle_count=1500, out_dir=str(out)
    )
    paths = run_abc(sc)
    first = {p: Path(paths[p]).read_bytes() for p in paths}
    paths2 = run_abc(sc)
    for p in paths2:
        assert Path(paths2[p]).read_bytes() == first[p], f"{p} not reproducible"
    m = json.loads(Path(paths["manifest"]).read_text())
    assert m["results"]["mass_rel_drift_alg2"] <= 1e-8
    assert m["results"]["negativity_alg2_max"] <= 1e-10
    assert "marginal_l1_distance" in m["results"]


def test_abc_generator_check_at_d0(tmp_path):
    sc = abc_scenario(
        modes=(3,),
        snapshots=3,
        field={"preset": "abc_modified", "A": 1.0, "B": 0.5, "C": 0.2, "D": 0.0},
        solvers=("alg2",),
        out_dir=str(tmp_path / "d0"),
    )
    paths = run_abc(sc)
    m = json.loads(Path(paths["manifest"]).read_text())
    assert m["results"]["generator_max_diff_half_plus_density"] <= 1e-12


def test_convergence_driver(tmp_path):
    sc = benchmark_scenario(
        convergence_modes=(4, 6, 8), out_dir=str(tmp_path / "conv")
    )
    paths = run_convergence(sc)
    m = json.loads(Path(paths["manifest"]).read_text())
    assert m["results"]["convergence_slope_alg2"] < 0
    lines = Path(paths["convergence"]).read_text().splitlines()
    assert lines[0] == "K,N,l1_error_alg2,l1_error_standard"
    assert len(lines) == 4


def test_stage_error_names_failing_stage(tmp_path):
    sc = benchmark_scenario(out_dir=str(tmp_path / "x"))
    bad = dataclasses.replace(sc, field={"preset": "abc_modified"}, dim=1)
    with pytest.raises((StageError, ValueError)):
        run_benchmark_s1(bad)
