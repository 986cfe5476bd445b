"""Galerkin generators and multiplication operators on truncated Fourier bases.

For a real trigonometric-polynomial vector field

    X^i(x) = sum_p c^i_p exp( i sum_j omega_j p_j x_j ),   omega_j = 2 pi / L_j,

every generator assembled here is banded: modes couple only along the fixed
offsets p that carry field coefficients.  Closed forms for the entries (one
inner product per band and source mode) replace per-entry quadrature; the
tests validate them against direct quadrature of the defining integrals.

Entry conventions, with m the source multi-index and p a band offset:

    half-density   [X_N]_{(m+p), m} = sum_i  i omega_i c^i_p (m_i + p_i/2)
    density        [G]_{(m+p), m}   = sum_i -i omega_i c^i_p (m_i + p_i)
    transport      [T]_{(m+p), m}   = sum_i -i omega_i c^i_p  m_i

The half-density generator is anti-Hermitian by construction (its flow is
unitary); the other two are the standard Galerkin baselines and conserve
nothing in general.  Targets outside the truncation are dropped, which is
exactly the projected operator pi_N o L_X restricted to V_N and preserves
anti-Hermiticity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .basis import SpectralField, TruncationSpec

__all__ = [
    "VectorFieldSpec",
    "SparseBandedOperator",
    "ObservableMatrix",
    "assemble_half_density_generator",
    "assemble_density_generator",
    "assemble_transport_generator",
    "assemble_multiplication_operator",
    "antihermitian_defect",
]

DENSE_SIZE_GUARD = 4096

KIND_HALF_DENSITY = "half_density"
KIND_DENSITY = "density"
KIND_TRANSPORT = "transport"
_KINDS = (KIND_HALF_DENSITY, KIND_DENSITY, KIND_TRANSPORT)


@dataclass(frozen=True)
class VectorFieldSpec:
    """Real vector field on T^n given by sparse plain-exponential coefficients.

    ``components[i]`` maps a mode tuple p to the coefficient c^i_p of
    exp(i sum_j omega_j p_j x_j) in X^i.  Reality requires
    c^i_{-p} = conj(c^i_p) for every stored p; this is validated.
    """

    dim: int
    periods: tuple[float, ...]
    components: tuple[Mapping[tuple[int, ...], complex], ...]

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods)
        comps = tuple(
            {tuple(int(q) for q in p): complex(c) for p, c in comp.items()}
            for comp in self.components
        )
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "components", comps)
        if len(periods) != self.dim or len(comps) != self.dim:
            raise ValueError("periods/components length must equal dim")
        if any(p <= 0 for p in periods):
            raise ValueError("periods must be positive")
        for i, comp in enumerate(comps):
            for p, c in comp.items():
                if len(p) != self.dim:
                    raise ValueError(f"component {i}: mode {p} has wrong length")
                neg = tuple(-q for q in p)
                cc = comp.get(neg, 0.0 + 0.0j)
                if abs(np.conj(c) - cc) > 1e-13 * max(1.0, abs(c)):
                    raise ValueError(
                        f"component {i} is not real: c_{neg} != conj(c_{p})"
                    )

    @property
    def omegas(self) -> tuple[float, ...]:
        return tuple(2.0 * np.pi / p for p in self.periods)

    @property
    def bandwidth(self) -> int:
        """W = max over components of the number of stored coefficients."""
        return max((len(c) for c in self.components), default=0)

    def offsets(self) -> list[tuple[int, ...]]:
        """Sorted union of stored modes across components."""
        out: set[tuple[int, ...]] = set()
        for comp in self.components:
            out.update(comp.keys())
        return sorted(out)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate X at an (m, n) array of positions; returns a real (m, n) array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError("points have wrong dimension")
        out = np.zeros(pts.shape, dtype=complex)
        omg = np.asarray(self.omegas)
        for i, comp in enumerate(self.components):
            if not comp:
                continue
            modes = np.array(list(comp.keys()), dtype=float) * omg  # (n_modes, n)
            coefs = np.array(list(comp.values()), dtype=complex)
            out[:, i] = np.exp(1j * pts @ modes.T) @ coefs
        if not np.all(np.isfinite(out)):
            raise ValueError("vector field evaluated to non-finite values")
        return out.real if points.ndim == 2 else out.real[0]

    def divergence_coefficients(self) -> dict[tuple[int, ...], complex]:
        """Plain-exponential coefficients of div X = sum_i d X^i / d x_i."""
        omg = self.omegas
        div: dict[tuple[int, ...], complex] = {}
        for i, comp in enumerate(self.components):
            for p, c in comp.items():
                div[p] = div.get(p, 0.0) + 1j * omg[i] * p[i] * c
        return div

    def is_divergence_free(self, tol: float = 1e-14) -> bool:
        return all(abs(v) <= tol for v in self.divergence_coefficients().values())


def _band_slices(
    shape: tuple[int, ...], delta: tuple[int, ...]
) -> tuple[tuple[slice, ...], tuple[slice, ...]] | None:
    """Source/target slices for the in-band part of offset delta; None if empty."""
    src, tgt = [], []
    for s, d in zip(shape, delta):
        a0 = max(0, -d)
        a1 = max(a0, min(s, s - d))
        if a1 <= a0:
            return None
        src.append(slice(a0, a1))
        tgt.append(slice(a0 + d, a1 + d))
    return tuple(tgt), tuple(src)


@dataclass(frozen=True)
class SparseBandedOperator:
    """Banded operator on the truncated basis, stored as one diagonal per offset.

    ``bands[p]`` is a full ``trunc.shape`` array d with entry (m+p, m) = d[m];
    out-of-band targets are dropped when the operator is applied.  ``kind``
    records which generator this is (``half_density`` operators are
    anti-Hermitian and integrate with a sign, see propagation).
    """

    trunc: TruncationSpec
    kind: str
    bands: Mapping[tuple[int, ...], np.ndarray]

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        bands = {
            tuple(int(q) for q in p): np.asarray(d, dtype=complex)
            for p, d in self.bands.items()
        }
        for p, d in bands.items():
            if len(p) != self.trunc.dim or d.shape != self.trunc.shape:
                raise ValueError(f"band {p} has wrong shape")
        object.__setattr__(self, "bands", bands)

    @property
    def offsets(self) -> list[tuple[int, ...]]:
        return sorted(self.bands.keys())

    def matvec(self, z: np.ndarray) -> np.ndarray:
        """Apply to a flat coefficient vector in canonical order."""
        zt = np.asarray(z, dtype=complex).reshape(self.trunc.shape)
        out = np.zeros_like(zt)
        for p, d in self.bands.items():
            sl = _band_slices(self.trunc.shape, p)
            if sl is None:
                continue
            tgt, src = sl
            out[tgt] += d[src] * zt[src]
        return out.reshape(-1)

    def entry(self, target: tuple[int, ...], source: tuple[int, ...]) -> complex:
        """Matrix entry by mode pair (test support)."""
        delta = tuple(t - s for t, s in zip(target, source))
        d = self.bands.get(delta)
        if d is None:
            return 0.0 + 0.0j
        idx = tuple(s + k for s, k in zip(source, self.trunc.cutoff))
        return complex(d[idx])

    def to_dense(self) -> np.ndarray:
        n = self.trunc.size
        if n > DENSE_SIZE_GUARD:
            raise ValueError(f"dense matrix guard exceeded: N={n} > {DENSE_SIZE_GUARD}")
        flat = np.arange(n).reshape(self.trunc.shape)
        out = np.zeros((n, n), dtype=complex)
        for p, d in self.bands.items():
            sl = _band_slices(self.trunc.shape, p)
            if sl is None:
                continue
            tgt, src = sl
            out[flat[tgt].ravel(), flat[src].ravel()] = d[src].ravel()
        return out

    def to_scipy(self):
        """CSC matrix (for sparse factorizations)."""
        from scipy.sparse import coo_matrix

        n = self.trunc.size
        flat = np.arange(n).reshape(self.trunc.shape)
        rows, cols, vals = [], [], []
        for p, d in self.bands.items():
            sl = _band_slices(self.trunc.shape, p)
            if sl is None:
                continue
            tgt, src = sl
            rows.append(flat[tgt].ravel())
            cols.append(flat[src].ravel())
            vals.append(d[src].ravel())
        if not rows:
            return coo_matrix((n, n), dtype=complex).tocsc()
        return coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsc()

    def onenorm_bound(self) -> float:
        """Upper bound on the induced 1-norm (max column sum)."""
        colsum = np.zeros(self.trunc.shape)
        for p, d in self.bands.items():
            sl = _band_slices(self.trunc.shape, p)
            if sl is None:
                continue
            _, src = sl
            colsum[src] += np.abs(d[src])
        return float(colsum.max()) if colsum.size else 0.0


def antihermitian_defect(op: SparseBandedOperator) -> float:
    """max |A + A^dagger| entrywise, computed band by band (no densification).

    Zero (to roundoff) for every half-density generator of a real field;
    strictly positive for density generators of compressible fields.
    """
    defect = 0.0
    shape = op.trunc.shape
    for p, d in op.bands.items():
        sl = _band_slices(shape, p)
        if sl is None:
            continue
        tgt, src = sl
        neg = tuple(-q for q in p)
        dneg = op.bands.get(neg)
        # (A^dagger)_{(m+p), m} = conj(A_{m, (m+p)}) = conj(d_{-p}[m+p])
        other = np.conj(dneg[tgt]) if dneg is not None else 0.0
        defect = max(defect, float(np.max(np.abs(d[src] + other))))
    return defect


def _assemble(vf: VectorFieldSpec, trunc: TruncationSpec, kind: str) -> SparseBandedOperator:
    if vf.dim != trunc.dim:
        raise ValueError("vector field and truncation dimension mismatch")
    if tuple(vf.periods) != trunc.periods:
        raise ValueError("vector field and truncation periods mismatch")
    axes = trunc.mode_axes()
    omg = vf.omegas
    bands: dict[tuple[int, ...], np.ndarray] = {}
    for i, comp in enumerate(vf.components):
        for p, c in comp.items():
            if kind == KIND_HALF_DENSITY:
                w = axes[i] + p[i] / 2.0
                coef = 1j * omg[i] * c
            elif kind == KIND_DENSITY:
                w = axes[i] + float(p[i])
                coef = -1j * omg[i] * c
            else:  # transport
                w = axes[i].astype(float)
                coef = -1j * omg[i] * c
            term = coef * w.reshape([-1 if j == i else 1 for j in range(trunc.dim)])
            prev = bands.get(p)
            full = np.broadcast_to(term, trunc.shape).astype(complex)
            bands[p] = full if prev is None else prev + full
    return SparseBandedOperator(trunc, kind, bands)


def assemble_half_density_generator(
    vf: VectorFieldSpec, trunc: TruncationSpec
) -> SparseBandedOperator:
    """Anti-Hermitian generator X_N of half-density advection on V_N.

    Entry (m+p, m) = sum_i i omega_i c^i_p (m_i + p_i/2).  The symmetric
    mean of the source and target mode numbers is what makes the matrix
    anti-Hermitian entry by entry, hence exp(-t X_N) exactly unitary.
    """
    return _assemble(vf, trunc, KIND_HALF_DENSITY)


def assemble_density_generator(
    vf: VectorFieldSpec, trunc: TruncationSpec
) -> SparseBandedOperator:
    """Standard Galerkin generator G of the continuity equation, rho' = G rho.

    Entry (m+p, m) = -sum_i i omega_i c^i_p (m_i + p_i).  Not anti-Hermitian
    unless div X = 0, in which case it equals -X_N entrywise.
    """
    return _assemble(vf, trunc, KIND_DENSITY)


def assemble_transport_generator(
    vf: VectorFieldSpec, trunc: TruncationSpec
) -> SparseBandedOperator:
    """Standard Galerkin generator T of scalar transport, f' = T f.

    Entry (m+p, m) = -sum_i i omega_i c^i_p m_i.
    """
    return _assemble(vf, trunc, KIND_TRANSPORT)


@dataclass(frozen=True)
class ObservableMatrix:
    """Dense truncated multiplication operator H_{f,N} (Hermitian for real f)."""

    trunc: TruncationSpec
    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=complex)
        n = self.trunc.size
        if arr.shape != (n, n):
            raise ValueError(f"matrix shape {arr.shape} does not match basis size {n}")
        object.__setattr__(self, "mat", arr)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.mat - self.mat.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        """Sorted real eigenvalues (requires Hermitian input)."""
        scale = max(1.0, float(np.max(np.abs(self.mat))))
        if self.hermitian_defect() > 1e-8 * scale:
            raise ValueError("matrix is not Hermitian within tolerance")
        return np.linalg.eigvalsh(self.mat)


def assemble_multiplication_operator(
    f: SpectralField, trunc: TruncationSpec
) -> ObservableMatrix:
    """Truncated operator of pointwise multiplication by f.

    Entry (m', m) is the plain Fourier coefficient of f at frequency m' - m,
    i.e. c^f_{m'-m} / prod_i sqrt(L_i); the matrix is Toeplitz in the mode
    difference and Hermitian whenever f is real.  f must live within the
    target truncation (K^f_i <= K_i, same periods).
    """
    if f.trunc.periods != trunc.periods or f.trunc.dim != trunc.dim:
        raise ValueError("function and target truncation mismatch")
    if any(kf > k for kf, k in zip(f.trunc.cutoff, trunc.cutoff)):
        raise ValueError("function bandwidth exceeds target truncation")
    n = trunc.size
    if n > DENSE_SIZE_GUARD:
        raise ValueError(f"dense matrix guard exceeded: N={n} > {DENSE_SIZE_GUARD}")
    flat = np.arange(n).reshape(trunc.shape)
    out = np.zeros((n, n), dtype=complex)
    scale = 1.0 / trunc.root_volume()
    kf = f.trunc.cutoff
    for q, c in np.ndenumerate(f.coeffs):
        if c == 0:
            continue
        delta = tuple(int(qi) - ki for qi, ki in zip(q, kf))
        sl = _band_slices(trunc.shape, delta)
        if sl is None:
            continue
        tgt, src = sl
        out[flat[tgt].ravel(), flat[src].ravel()] += c * scale
    return ObservableMatrix(trunc, out)
