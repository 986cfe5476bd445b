"""Time integration of the spectral ODEs and unitary propagators.

A half-density generator X_N integrates as z' = -X_N z (its stored matrix is
the Galerkin Lie derivative; the PDE carries the minus sign).  Baseline
generators (density, transport) are stored as the ODE right-hand side and
integrate as z' = G z directly.

Schemes
-------
dense_expm
    Exact matrix exponential.  Anti-Hermitian generators go through a
    Hermitian eigendecomposition, so the step is unitary to roundoff;
    baseline kinds use the general dense exponential.  Size-guarded.
cayley_midpoint
    (I - dt/2 G)^{-1} (I + dt/2 G) per step, factored once; exactly unitary
    for anti-Hermitian G up to the linear-solve roundoff, global error
    O(dt^2).
krylov_expm
    Restarted Arnoldi approximation of the exponential action with an
    a-posteriori residual estimate and adaptive substeps; deterministic, no
    randomized pieces; the only scheme that scales past the dense guard.
rk4
    Classical fixed-step Runge-Kutta.  Preserves nothing; kept as the
    non-preserving reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import TruncationSpec
from .operators import (
    DENSE_SIZE_GUARD,
    KIND_HALF_DENSITY,
    ObservableMatrix,
    SparseBandedOperator,
)

__all__ = [
    "SchemeSpec",
    "UnitaryPropagator",
    "evolve_state",
    "evolve_series",
    "dense_propagator",
    "conjugate_observable",
    "unitarity_defect",
]

SCHEMES = ("dense_expm", "cayley_midpoint", "krylov_expm", "rk4")


@dataclass(frozen=True)
class SchemeSpec:
    """Time integration scheme and its step/tolerance controls.

    dt applies to cayley_midpoint and rk4 (defaults |t|/200 and |t|/1000 if
    unset); tol applies to krylov_expm; dense_expm ignores both.
    """

    scheme: str = "dense_expm"
    dt: float | None = None
    tol: float = 1e-8
    krylov_dim: int = 30

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be >= 2")


@dataclass(frozen=True)
class UnitaryPropagator:
    """Dense unitary propagator U(t) = exp(-t X_N); validated at construction."""

    trunc: TruncationSpec
    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=complex)
        n = self.trunc.size
        if arr.shape != (n, n):
            raise ValueError("propagator shape does not match basis size")
        object.__setattr__(self, "mat", arr)
        defect = unitarity_defect(arr)
        if defect > 1e-10:
            raise ValueError(f"propagator is not unitary: defect {defect:.3e}")


def unitarity_defect(u) -> float:
    """max |U^dagger U - I| entrywise."""
    mat = u.mat if isinstance(u, UnitaryPropagator) else np.asarray(u, dtype=complex)
    n = mat.shape[0]
    return float(np.max(np.abs(mat.conj().T @ mat - np.eye(n))))


def _ode_sign(gen: SparseBandedOperator) -> float:
    # the PDE for half-densities is psi' + L_X psi = 0; baselines store the RHS
    return -1.0 if gen.kind == KIND_HALF_DENSITY else 1.0


def evolve_state(
    gen: SparseBandedOperator,
    z0: np.ndarray,
    t: float,
    spec: SchemeSpec | None = None,
) -> np.ndarray:
    """Integrate the generator ODE from 0 to t (t < 0 runs the flow backward).

    Solves z' = G z with G = -X_N for half-density generators and G = the
    stored matrix for baseline kinds.  Unitary schemes preserve ||z|| for
    anti-Hermitian G.
    """
    spec = spec or SchemeSpec()
    z0 = np.asarray(z0, dtype=complex).reshape(-1)
    if z0.size != gen.trunc.size:
        raise ValueError("state size does not match generator truncation")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0:
        return z0.copy()
    if spec.scheme == "dense_expm":
        return _evolve_dense(gen, z0, t)
    if spec.scheme == "cayley_midpoint":
        return _evolve_cayley(gen, z0, t, spec.dt)
    if spec.scheme == "krylov_expm":
        return _evolve_krylov(gen, z0, t, spec.tol, spec.krylov_dim)
    return _evolve_rk4(gen, z0, t, spec.dt)


def evolve_series(
    gen: SparseBandedOperator,
    z0: np.ndarray,
    times: np.ndarray,
    spec: SchemeSpec | None = None,
) -> np.ndarray:
    """States at an ascending time grid starting from t=0, evolved incrementally.

    Returns an array of shape (len(times), N).  The generator is autonomous,
    so each snapshot continues from the previous one.
    """
    times = np.asarray(times, dtype=float)
    if times.size and np.any(np.diff(times) < 0):
        raise ValueError("times must be ascending")
    out = np.empty((times.size, gen.trunc.size), dtype=complex)
    z = np.asarray(z0, dtype=complex).reshape(-1)
    prev = 0.0
    for j, t in enumerate(times):
        z = evolve_state(gen, z, t - prev, spec)
        out[j] = z
        prev = t
    return out


def _evolve_dense(gen: SparseBandedOperator, z0: np.ndarray, t: float) -> np.ndarray:
    n = gen.trunc.size
    if n > DENSE_SIZE_GUARD:
        raise ValueError(f"dense scheme guard exceeded: N={n} > {DENSE_SIZE_GUARD}")
    if gen.kind == KIND_HALF_DENSITY:
        # exp(-t X_N) = exp(i t B) with B = i X_N Hermitian
        b = 1j * gen.to_dense()
        w, v = np.linalg.eigh(b)
        return (v * np.exp(1j * t * w)) @ (v.conj().T @ z0)
    from scipy.linalg import expm

    return expm(t * gen.to_dense()) @ z0


def _evolve_cayley(
    gen: SparseBandedOperator, z0: np.ndarray, t: float, dt: float | None
) -> np.ndarray:
    from scipy.sparse import identity
    from scipy.sparse.linalg import splu

    h_mag = dt if dt is not None else abs(t) / 200.0
    steps = max(1, math.ceil(abs(t) / h_mag - 1e-12))
    h = t / steps
    a = (gen.to_scipy() * _ode_sign(gen)).tocsc()
    eye = identity(gen.trunc.size, dtype=complex, format="csc")
    lu = splu((eye - (h / 2.0) * a).tocsc())
    z = z0.copy()
    for _ in range(steps):
        z = lu.solve(z + (h / 2.0) * (a @ z))
    return z


def _evolve_rk4(
    gen: SparseBandedOperator, z0: np.ndarray, t: float, dt: float | None
) -> np.ndarray:
    sign = _ode_sign(gen)
    action = lambda v: sign * gen.matvec(v)  # noqa: E731
    h_mag = dt if dt is not None else abs(t) / 1000.0
    steps = max(1, math.ceil(abs(t) / h_mag - 1e-12))
    h = t / steps
    z = z0.copy()
    for _ in range(steps):
        k1 = action(z)
        k2 = action(z + (h / 2.0) * k1)
        k3 = action(z + (h / 2.0) * k2)
        k4 = action(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z


def _arnoldi(action, v0: np.ndarray, m: int):
    """Arnoldi factorization with one reorthogonalization pass.

    Returns (V, H, beta, exact) where V has j+1 orthonormal columns, H is the
    (j+1) x j Hessenberg block, beta = ||v0||, and exact marks a happy
    breakdown (the Krylov space is invariant, the projected exponential is
    exact).
    """
    n = v0.size
    v = np.zeros((n, m + 1), dtype=complex)
    h = np.zeros((m + 1, m), dtype=complex)
    beta = float(np.linalg.norm(v0))
    v[:, 0] = v0 / beta
    for j in range(m):
        w = action(v[:, j])
        for i in range(j + 1):
            h[i, j] = np.vdot(v[:, i], w)
            w -= h[i, j] * v[:, i]
        for i in range(j + 1):  # second pass keeps V orthonormal to roundoff
            c = np.vdot(v[:, i], w)
            h[i, j] += c
            w -= c * v[:, i]
        hnext = float(np.linalg.norm(w))
        h[j + 1, j] = hnext
        if hnext <= 1e-14 * max(beta, 1.0):
            return v[:, : j + 1], h[: j + 2, : j + 1], beta, True
        v[:, j + 1] = w / hnext
    return v[:, : m + 1], h, beta, False


def _evolve_krylov(
    gen: SparseBandedOperator, z0: np.ndarray, t: float, tol: float, m: int
) -> np.ndarray:
    from scipy.linalg import expm

    sign = _ode_sign(gen)
    action = lambda v: sign * gen.matvec(v)  # noqa: E731
    beta0 = float(np.linalg.norm(z0))
    if beta0 == 0.0:
        return z0.copy()
    total = abs(t)
    z = z0.astype(complex).copy()
    remaining = float(t)
    for _ in range(100000):
        if abs(remaining) <= 1e-14 * total:
            break
        v, h, beta, exact = _arnoldi(action, z, m)
        mk = h.shape[1]
        tau = remaining
        if exact:
            e = expm(tau * h[:mk, :mk])
        else:
            while True:
                e = expm(tau * h[:mk, :mk])
                # Saad's residual estimate for the projected exponential
                est = abs(beta * h[mk, mk - 1] * e[mk - 1, 0])
                if est <= tol * beta0 * (abs(tau) / total) or abs(tau) <= 1e-12 * total:
                    break
                tau *= 0.5
        z = beta * (v[:, :mk] @ e[:, 0])
        remaining -= tau
    else:
        raise RuntimeError("krylov_expm failed to reach the final time")
    return z


def dense_propagator(gen: SparseBandedOperator, t: float) -> UnitaryPropagator:
    """U(t) = exp(-t X_N) via Hermitian eigendecomposition of i X_N.

    Requires a half-density (anti-Hermitian) generator and a basis small
    enough for dense eigensolves.
    """
    if gen.kind != KIND_HALF_DENSITY:
        raise ValueError("dense_propagator requires a half-density generator")
    n = gen.trunc.size
    if n > DENSE_SIZE_GUARD:
        raise ValueError(f"dense propagator guard exceeded: N={n} > {DENSE_SIZE_GUARD}")
    b = 1j * gen.to_dense()
    w, v = np.linalg.eigh(b)
    u = (v * np.exp(1j * t * w)) @ v.conj().T
    return UnitaryPropagator(gen.trunc, u)


def conjugate_observable(u: UnitaryPropagator, h: ObservableMatrix) -> ObservableMatrix:
    """U H U^dagger; preserves the spectrum and Hermiticity."""
    if u.trunc.shape != h.trunc.shape or u.trunc.periods != h.trunc.periods:
        raise ValueError("propagator and observable truncation mismatch")
    return ObservableMatrix(h.trunc, u.mat @ h.mat @ u.mat.conj().T)
