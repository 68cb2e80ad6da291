"""Linear stability of equilibria and the Hessian survey of the attraction kernel."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    BoundaryProximityError,
    ConfigError,
    EigenDecompositionError,
    IllConditionedError,
    NumericalError,
)
from .model import ModelParams, gradient_of_M, hessian_of_M_grid, probability_map, resolve_bias

TOL_MARGINAL = 1e-6
TOL_IMAG = 1e-8
RESIDUAL_TOL = 1e-8


class StabilityClass(str, Enum):
    STABLE_NODE = "stable-node"
    UNSTABLE_NODE = "unstable-node"
    STABLE_SPIRAL = "stable-spiral"
    UNSTABLE_SPIRAL = "unstable-spiral"
    MARGINAL = "marginal"


def jacobian(params: ModelParams, state, h: float = 1e-6, eps=None) -> np.ndarray:
    """Central-difference Jacobian ``J[i, j] = dp_i / dpi_j`` of the raw map.

    Perturbed states are not renormalized.
    """
    if not h > 0:
        raise ConfigError("h must be > 0")
    pi = np.asarray(state, dtype=float)
    close = np.flatnonzero(pi < 10 * h)
    if close.size:
        i = int(close[0])
        raise BoundaryProximityError(f"pi[{i}]={pi[i]!r} is within 10*h of the boundary", i)
    eps = resolve_bias(params, pi.size) if eps is None else np.asarray(eps, dtype=float)
    k = pi.size
    jac = np.empty((k, k))
    for j in range(k):
        up = pi.copy()
        dn = pi.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (probability_map(up, params, eps) - probability_map(dn, params, eps)) / (2 * h)
    return jac


def _order(vals):
    # descending real part; conjugate pairs land next to each other (+Im first)
    return np.lexsort((-vals.imag, -vals.real))


def eigen_decompose(m) -> tuple:
    """Complex eigenvalues and unit right eigenvectors, descending real part.

    Every pair is checked against ``||m v - lam v|| <= 1e-8 ||m||``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError("need a square matrix")
    if m.shape[0] > 128:
        raise ConfigError("matrices larger than 128x128 are not supported")
    if not np.all(np.isfinite(m)):
        raise EigenDecompositionError("matrix has non-finite entries")
    scale = max(np.linalg.norm(m, 2), np.finfo(float).tiny)
    vals, vecs, res = _eig_checked(m, m)
    if np.any(res > RESIDUAL_TOL * scale):
        # balancing can blow up on entries many decades below the rest; entries
        # under machine epsilon relative to ||m|| are within backward error anyway
        cleaned = np.where(np.abs(m) < np.finfo(float).eps * scale, 0.0, m)
        vals, vecs, res = _eig_checked(cleaned, m)
    if np.any(res > RESIDUAL_TOL * scale):
        vecs = _refine_vectors(m, vals, vecs, res)
        res = eigen_residuals(m, vals, vecs)
    if np.any(res > RESIDUAL_TOL * scale):
        raise EigenDecompositionError(f"eigenpair residual {res.max():.3g} exceeds tolerance")
    return vals, vecs


def _eig_checked(work, m):
    try:
        vals, vecs = np.linalg.eig(work)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(f"eigenvalue iteration failed: {exc}") from exc
    vals = vals.astype(complex)
    vecs = vecs.astype(complex)
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    order = _order(vals)
    vals, vecs = vals[order], vecs[:, order]
    return vals, vecs, eigen_residuals(m, vals, vecs)


def _refine_vectors(m, vals, vecs, res):
    """Replace poor eigenvectors by the smallest right singular vector of ``m - lam I``."""
    out = vecs.copy()
    eye = np.eye(m.shape[0])
    for i in np.flatnonzero(res > RESIDUAL_TOL * np.linalg.norm(m, 2)):
        _, _, vh = np.linalg.svd(m - vals[i] * eye)
        out[:, i] = vh[-1].conj()
    return out


def eigen_residuals(m, vals, vecs) -> np.ndarray:
    return np.linalg.norm(m @ vecs - vecs * vals, axis=0)


def tangent_basis(k: int) -> np.ndarray:
    """Orthonormal ``k x (k-1)`` basis of the zero-sum subspace."""
    seed = np.column_stack([np.ones(k), np.eye(k)[:, : k - 1]])
    q, _ = np.linalg.qr(seed)
    return q[:, 1:]


def tangent_eigenvalues(m) -> np.ndarray:
    """Spectrum of ``m`` restricted to the zero-sum subspace.

    Exact when that subspace is invariant, which holds for ``J - I`` because
    the columns of ``J`` sum to zero.
    """
    m = np.asarray(m, dtype=float)
    b = tangent_basis(m.shape[0])
    vals, _ = eigen_decompose(b.T @ m @ b)
    return vals


def classify_equilibrium(eigenvalues, tol_marginal: float = TOL_MARGINAL, tol_imag: float = TOL_IMAG) -> StabilityClass:
    vals = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    if vals.size == 0:
        raise ConfigError("empty spectrum")
    re, im = vals.real, np.abs(vals.imag)
    growing = re > tol_marginal
    if np.any(growing):
        if np.any(im[growing] > tol_imag):
            return StabilityClass.UNSTABLE_SPIRAL
        return StabilityClass.UNSTABLE_NODE
    if np.all(re < -tol_marginal):
        if np.any(im > tol_imag):
            return StabilityClass.STABLE_SPIRAL
        return StabilityClass.STABLE_NODE
    return StabilityClass.MARGINAL


@dataclass
class SpectralReport:
    point: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    tangent_eigenvalues: np.ndarray
    classification: StabilityClass


def stability_report(params: ModelParams, state, h: float = 1e-6, eps=None) -> SpectralReport:
    """Jacobian, spectrum of ``J - I`` and a label from the tangent modes.

    The full spectrum always carries the normal-direction eigenvalue -1; it is
    reported but does not enter the classification.
    """
    pi = np.asarray(state, dtype=float)
    jac = jacobian(params, pi, h, eps)
    shifted = jac - np.eye(pi.size)
    vals, vecs = eigen_decompose(shifted)
    tang = tangent_eigenvalues(shifted)
    return SpectralReport(
        point=pi,
        jacobian=jac,
        eigenvalues=vals,
        eigenvectors=vecs,
        residuals=eigen_residuals(shifted, vals, vecs),
        tangent_eigenvalues=tang,
        classification=classify_equilibrium(tang),
    )


def linearized_trajectory(m, y0, times, cond_max: float = 1e8) -> np.ndarray:
    """``y(t) = sum_i c_i v_i exp(lam_i t)`` with ``V c = y0``; one row per time."""
    m = np.asarray(m, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    vals, vecs = eigen_decompose(m)
    cond = np.linalg.cond(vecs)
    if not cond < cond_max:
        raise IllConditionedError(
            f"eigenvector matrix condition number {cond:.3g} >= {cond_max:.0e}; "
            "matrix is close to defective, use a direct matrix exponential instead"
        )
    c = np.linalg.solve(vecs, y0.astype(complex))
    ys = (np.exp(np.outer(times, vals)) * c) @ vecs.T
    leak = np.abs(ys.imag).max() if ys.size else 0.0
    if leak > 1e-10 * max(1.0, np.abs(y0).max()):
        raise NumericalError(f"linearized solution has imaginary residue {leak:.3g}")
    return ys.real


@dataclass
class HessianReport:
    grid_n: int
    n_points: int
    max_abs_det: float
    max_det_ratio: float
    min_eigenvalue: float
    max_eigenvalue: float
    max_flat_residual_ratio: float
    max_trace_identity_error: float
    min_gradient_norm: float

    @property
    def degenerate(self) -> bool:
        return self.max_det_ratio < 1e-9 and self.min_eigenvalue >= -1e-12 and self.max_flat_residual_ratio <= 1e-9

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["degenerate"] = self.degenerate
        return d


def hessian_grid(grid_n: int):
    """Interior points ``y = j/(n+1)``, ``x = s*y`` with ``s = i/(n+1)``: n^2 points, all with x < y."""
    g = np.arange(1, grid_n + 1) / (grid_n + 1)
    s, y = np.meshgrid(g, g, indexing="ij")
    return (s * y).ravel(), y.ravel()


def hessian_degeneracy_report(grid_n: int = 99) -> HessianReport:
    if grid_n < 2:
        raise ConfigError("grid_n must be >= 2")
    x, y = hessian_grid(grid_n)
    h = hessian_of_M_grid(x, y)
    norms = np.linalg.norm(h, axis=(1, 2))
    det = h[:, 0, 0] * h[:, 1, 1] - h[:, 0, 1] * h[:, 1, 0]
    eig = np.linalg.eigvalsh(h)
    flat = np.linalg.norm(h @ np.stack([x, y], axis=1)[:, :, None], axis=(1, 2))
    trace_pred = 2 / y + 2 * x**2 / y**3
    grads = np.array([gradient_of_M(a, b) for a, b in zip(x, y)])
    return HessianReport(
        grid_n=grid_n,
        n_points=x.size,
        max_abs_det=float(np.abs(det).max()),
        max_det_ratio=float((np.abs(det) / norms**2).max()),
        min_eigenvalue=float(eig[:, 0].min()),
        max_eigenvalue=float(eig[:, 1].max()),
        max_flat_residual_ratio=float((flat / norms).max()),
        max_trace_identity_error=float((np.abs(eig[:, 1] - trace_pred) / trace_pred).max()),
        min_gradient_norm=float(np.linalg.norm(grads, axis=1).min()),
    )
