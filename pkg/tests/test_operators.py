import numpy as np
import pytest

from halfspec import (
    SpectralField,
    TruncationSpec,
    VectorFieldSpec,
    antihermitian_defect,
    assemble_density_generator,
    assemble_half_density_generator,
    assemble_multiplication_operator,
    assemble_transport_generator,
    harmonic_field,
)
from halfspec.operators import DENSE_SIZE_GUARD

import oracles

TWO_PI = 2.0 * np.pi


# -- closed-form entries for the circle benchmark X = -sin(2x) --------------


def test_half_density_entries_closed_form(s1_vf):
    tr = TruncationSpec(1, (6,), (TWO_PI,))
    g = assemble_half_density_generator(s1_vf, tr)
    assert g.offsets == [(-2,), (2,)]
    for m in range(-4, 5):
        assert g.entry((m + 2,), (m,)) == pytest.approx(-(m + 1) / 2.0, abs=1e-14)
        assert g.entry((m - 2,), (m,)) == pytest.approx((m - 1) / 2.0, abs=1e-14)
        assert g.entry((m,), (m,)) == 0.0


def test_density_entries_closed_form(s1_vf):
    tr = TruncationSpec(1, (6,), (TWO_PI,))
    g = assemble_density_generator(s1_vf, tr)
    for m in range(-4, 5):
        assert g.entry((m + 2,), (m,)) == pytest.approx((m + 2) / 2.0, abs=1e-14)
        assert g.entry((m - 2,), (m,)) == pytest.approx(-(m - 2) / 2.0, abs=1e-14)


def test_transport_entries_closed_form(s1_vf):
    tr = TruncationSpec(1, (6,), (TWO_PI,))
    g = assemble_transport_generator(s1_vf, tr)
    for m in range(-4, 5):
        assert g.entry((m + 2,), (m,)) == pytest.approx(m / 2.0, abs=1e-14)
        assert g.entry((m - 2,), (m,)) == pytest.approx(-m / 2.0, abs=1e-14)


# -- quadrature oracle agreement ---------------------------------------------


@pytest.mark.parametrize("kind,assemble", [
    ("half_density", assemble_half_density_generator),
    ("density", assemble_density_generator),
    ("transport", assemble_transport_generator),
])
def test_s1_generators_match_quadrature(s1_vf, kind, assemble):
    tr = TruncationSpec(1, (6,), (TWO_PI,))
    dense = assemble(s1_vf, tr).to_dense()
    oracle = oracles.dense_generator_quadrature(
        kind, oracles.s1_velocity(), oracles.s1_divergence(), tr
    )
    assert np.max(np.abs(dense - oracle)) < 1e-12


@pytest.mark.parametrize("kind,assemble", [
    ("half_density", assemble_half_density_generator),
    ("density", assemble_density_generator),
    ("transport", assemble_transport_generator),
])
def test_abc_generators_match_quadrature(kind, assemble):
    from halfspec import abc_field

    a, b, c, d = 1.0, 0.5, 0.2, 0.5
    vf = abc_field(a, b, c, d)
    tr = TruncationSpec(3, (2, 2, 2), (1.0, 1.0, 1.0))
    op = assemble(vf, tr)
    vel = oracles.abc_velocity(a, b, c, d)
    div = oracles.abc_divergence(a, b, c, d)
    rng = np.random.default_rng(3)
    modes = [tuple(rng.integers(-2, 3, size=3)) for _ in range(12)]
    for col in modes:
        for off in op.offsets + [(0, 0, 0)]:
            row = tuple(c_ + o for c_, o in zip(col, off))
            if any(abs(r) > 2 for r in row):
                continue
            want = oracles.generator_entry_quadrature(
                kind, vel, div, (1.0, 1.0, 1.0), row, col, npts_per_axis=16
            )
            assert op.entry(row, col) == pytest.approx(want, abs=1e-11)


def test_printed_abc_variant_matches_its_own_quadrature():
    from halfspec import abc_field

    a, b, c, d = 1.0, 0.5, 0.2, 0.0
    vf = abc_field(a, b, c, d, printed=True)
    assert not vf.is_divergence_free()
    tr = TruncationSpec(3, (1, 1, 1), (1.0, 1.0, 1.0))
    dense = assemble_half_density_generator(vf, tr).to_dense()
    vel = oracles.abc_velocity_printed(a, b, c, d)
    div = oracles.abc_divergence_printed(a, b, c, d)
    # spot-check a full column against quadrature
    from halfspec import index_set

    modes = index_set(tr)
    j = modes.index((0, 0, 0))
    for i, row in enumerate(modes):
        want = oracles.generator_entry_quadrature(
            "half_density", vel, div, (1.0, 1.0, 1.0), row, (0, 0, 0), npts_per_axis=16
        )
        assert dense[i, j] == pytest.approx(want, abs=1e-12)


# -- structural properties ----------------------------------------------------


def test_half_density_antihermitian(s1_vf):
    tr = TruncationSpec(1, (16,), (TWO_PI,))
    assert antihermitian_defect(assemble_half_density_generator(s1_vf, tr)) <= 1e-13


def test_abc_half_density_antihermitian():
    from halfspec import abc_field

    vf = abc_field(1.0, 0.5, 0.2, 0.5)
    tr = TruncationSpec(3, (4, 4, 4), (1.0, 1.0, 1.0))
    assert antihermitian_defect(assemble_half_density_generator(vf, tr)) <= 1e-13


def test_density_generator_not_antihermitian(s1_vf):
    # foil: on a compressible field the continuity generator is skewed
    tr = TruncationSpec(1, (8,), (TWO_PI,))
    assert antihermitian_defect(assemble_density_generator(s1_vf, tr)) > 0.5


def test_matvec_matches_dense(s1_vf):
    rng = np.random.default_rng(7)
    tr = TruncationSpec(1, (5,), (TWO_PI,))
    g = assemble_half_density_generator(s1_vf, tr)
    z = rng.normal(size=tr.size) + 1j * rng.normal(size=tr.size)
    assert np.allclose(g.matvec(z), g.to_dense() @ z, atol=1e-14)

    from halfspec import abc_field

    vf = abc_field(1.0, 0.5, 0.2, 0.5)
    tr3 = TruncationSpec(3, (2, 2, 2), (1.0, 1.0, 1.0))
    g3 = assemble_density_generator(vf, tr3)
    z3 = rng.normal(size=tr3.size) + 1j * rng.normal(size=tr3.size)
    assert np.allclose(g3.matvec(z3), g3.to_dense() @ z3, atol=1e-13)


def test_to_scipy_matches_dense(s1_vf):
    tr = TruncationSpec(1, (5,), (TWO_PI,))
    g = assemble_transport_generator(s1_vf, tr)
    assert np.allclose(g.to_scipy().toarray(), g.to_dense(), atol=0)


def test_dense_size_guard(s1_vf):
    k = (DENSE_SIZE_GUARD + 1) // 2  # 2k+1 just over the guard
    tr = TruncationSpec(1, (k,), (TWO_PI,))
    g = assemble_half_density_generator(s1_vf, tr)
    with pytest.raises(ValueError, match="dense"):
        g.to_dense()
    # banded matvec still works at this size
    z = np.zeros(tr.size, dtype=complex)
    z[tr.size // 2] = 1.0
    out = g.matvec(z)
    assert np.isfinite(out).all()


# -- multiplication operators -------------------------------------------------


def test_multiplication_sin_entries():
    tr = TruncationSpec(1, (5,), (TWO_PI,))
    tf = TruncationSpec(1, (1,), (TWO_PI,))
    f = harmonic_field(tf, {(1,): -0.5j, (-1,): 0.5j})  # sin x
    h = assemble_multiplication_operator(f, tr)
    assert h.hermitian_defect() < 1e-14
    n = tr.size
    dense = h.mat
    for j in range(n - 1):
        assert dense[j + 1, j] == pytest.approx(-0.5j, abs=1e-14)
        assert dense[j, j + 1] == pytest.approx(0.5j, abs=1e-14)
    assert np.count_nonzero(np.abs(dense) > 1e-14) == 2 * (n - 1)


def test_multiplication_cos_entries():
    tr = TruncationSpec(1, (5,), (TWO_PI,))
    tf = TruncationSpec(1, (1,), (TWO_PI,))
    g = harmonic_field(tf, {(1,): 0.5, (-1,): 0.5})  # cos x
    h = assemble_multiplication_operator(g, tr)
    for j in range(tr.size - 1):
        assert h.mat[j + 1, j] == pytest.approx(0.5, abs=1e-14)
        assert h.mat[j, j + 1] == pytest.approx(0.5, abs=1e-14)


def test_multiplication_matches_quadrature():
    # random real band-limited f on the circle
    rng = np.random.default_rng(13)
    tf = TruncationSpec(1, (2,), (TWO_PI,))
    raw = rng.normal(size=5) + 1j * rng.normal(size=5)
    coeffs = raw + np.conj(raw[::-1])  # enforce reality
    f = SpectralField(tf, coeffs)
    tr = TruncationSpec(1, (4,), (TWO_PI,))
    h = assemble_multiplication_operator(f, tr)

    plain = {(k - 2,): coeffs[k] / np.sqrt(TWO_PI) for k in range(5)}

    def f_callable(x):
        return sum(c * np.exp(1j * p[0] * x) for p, c in plain.items())

    from halfspec import index_set

    modes = index_set(tr)
    for i, row in enumerate(modes):
        for j, col in enumerate(modes):
            want = oracles.multiplication_entry_quadrature(
                f_callable, (TWO_PI,), row, col, npts_per_axis=64
            )
            assert h.mat[i, j] == pytest.approx(want, abs=1e-12)


def test_multiplication_bandwidth_guard():
    tf = TruncationSpec(1, (4,), (TWO_PI,))
    f = SpectralField.zero(tf)
    tr = TruncationSpec(1, (2,), (TWO_PI,))
    with pytest.raises(ValueError):
        assemble_multiplication_operator(f, tr)


# -- vector field spec --------------------------------------------------------


def test_vector_field_reality_enforced():
    with pytest.raises(ValueError, match="real"):
        VectorFieldSpec(1, (TWO_PI,), ({(1,): 1.0},))  # e^{ix} alone is complex


def test_vector_field_evaluate(s1_vf):
    x = np.linspace(0, TWO_PI, 17)[:-1]
    pts = x.reshape(-1, 1)
    assert np.allclose(s1_vf.evaluate(pts)[:, 0], -np.sin(2 * x), atol=1e-14)


def test_abc_evaluate_matches_lambdas():
    from halfspec import abc_field

    a, b, c, d = 1.0, 0.5, 0.2, 0.5
    vf = abc_field(a, b, c, d)
    vel = oracles.abc_velocity(a, b, c, d)
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 1, size=(20, 3))
    got = vf.evaluate(pts)
    for i in range(3):
        want = vel[i](pts[:, 0], pts[:, 1], pts[:, 2])
        assert np.allclose(got[:, i], want, atol=1e-13)


def test_divergence_coefficients(s1_vf):
    # div(-sin 2x) = -2 cos 2x: plain coefficients -1 at modes +-2
    div = s1_vf.divergence_coefficients()
    assert div[(2,)] == pytest.approx(-1.0)
    assert div[(-2,)] == pytest.approx(-1.0)
    assert not s1_vf.is_divergence_free()
    rigid = VectorFieldSpec(1, (TWO_PI,), ({(0,): 1.0},))
    assert rigid.is_divergence_free()


def test_eigenvalues_guard_on_nonhermitian(s1_vf):
    from halfspec import ObservableMatrix

    tr = TruncationSpec(1, (2,), (TWO_PI,))
    mat = np.triu(np.ones((tr.size, tr.size), dtype=complex))
    h = ObservableMatrix(tr, mat)
    with pytest.raises(ValueError, match="Hermitian"):
        h.eigenvalues()
