"""Dense vector/matrix primitives and the brute-force reference eigensolver.

The reference solver is a cyclic Jacobi iteration. It is deliberately
independent of every iterative path in the package so it can serve as the
ground-truth oracle in tests and validation runs.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapacityError, ConfigError, NumericalError

DEFAULT_MATRIX_CAP_BYTES = 2 << 30

_SYM_RTOL = 1e-12
_ORTHO_TOL = 1e-8


def as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ConfigError(f"{name} must be a 1-d array with at least one entry")
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} has non-finite entries")
    return v


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ConfigError(f"{name} must be a 2-d array with positive shape")
    if not np.all(np.isfinite(m)):
        raise ConfigError(f"{name} has non-finite entries")
    return m


def check_unit(v: np.ndarray, tol: float = 1e-6, name: str = "vector") -> None:
    nrm = float(np.sqrt(v @ v))
    if abs(nrm - 1.0) > tol:
        raise ConfigError(f"{name} must be unit norm, got ||v|| = {nrm!r}")


def sym_matrix(entries) -> np.ndarray:
    """Validate a square matrix as symmetric and return its symmetrized copy.

    Symmetry within 1e-12 relative tolerance is required; the result is
    (A + A^T)/2 so later consumers can rely on exact symmetry.
    """
    a = as_matrix(entries)
    if a.shape[0] != a.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    skew = float(np.max(np.abs(a - a.T)))
    if skew > _SYM_RTOL * max(scale, 1e-300):
        raise ConfigError(
            f"matrix is not symmetric: max |A - A^T| = {skew!r} at scale {scale!r}")
    return np.ascontiguousarray((a + a.T) / 2.0)


def covariance(y, max_bytes: int = DEFAULT_MATRIX_CAP_BYTES) -> np.ndarray:
    """Gram matrix Y^T Y of a data matrix; symmetric positive semidefinite."""
    ym = as_matrix(y, "data matrix")
    d = ym.shape[1]
    if d * d * 8 > max_bytes:
        raise CapacityError(
            f"covariance of dimension {d} needs {d * d * 8} bytes, cap is {max_bytes}")
    c = ym.T @ ym
    return np.ascontiguousarray((c + c.T) / 2.0)


def matvec(a, x) -> np.ndarray:
    """Dense matrix-vector product with a fixed accumulation order."""
    am = as_matrix(a)
    xv = as_vector(x)
    if am.shape[1] != xv.shape[0]:
        raise ConfigError(f"dimension mismatch: {am.shape} @ {xv.shape}")
    out = np.empty(am.shape[0])
    _kernels.sym_matvec(am, xv, out)
    return out


def normalize(v) -> np.ndarray:
    """Rescale to unit Euclidean norm; norms below 1e-300 are degenerate."""
    vv = as_vector(v)
    nrm = float(np.sqrt(vv @ vv))
    if nrm < 1e-300:
        raise NumericalError("cannot normalize a (near-)zero vector")
    return vv / nrm


def sign_align(v, ref) -> np.ndarray:
    """Return v or -v so that the inner product with ref is non-negative.

    An exactly zero inner product keeps v unchanged.
    """
    vv = as_vector(v)
    rr = as_vector(ref, "reference")
    if vv.shape != rr.shape:
        raise ConfigError(f"dimension mismatch: {vv.shape} vs {rr.shape}")
    return -vv if float(vv @ rr) < 0.0 else vv


def _canonical_sign(rows: np.ndarray) -> np.ndarray:
    out = rows.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0.0:
            out[i] = -out[i]
    return out


@dataclass(frozen=True)
class EigenSystem:
    """Full eigendecomposition: values non-increasing, rows of `vectors` are
    the unit eigenvectors, sign-normalized so the largest-magnitude entry of
    each vector is non-negative (ties broken by lowest index)."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        vectors = _canonical_sign(np.ascontiguousarray(self.vectors, dtype=np.float64))
        if vectors.ndim != 2 or values.ndim != 1 or vectors.shape[0] != values.shape[0]:
            raise ConfigError("eigensystem shape mismatch")
        if np.any(np.diff(values) > 0.0):
            raise ConfigError("eigenvalues must be non-increasing")
        gram = vectors @ vectors.T
        if float(np.max(np.abs(gram - np.eye(vectors.shape[0])))) > _ORTHO_TOL:
            raise NumericalError("eigenvectors are not orthonormal to 1e-8")
        values.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def top(self, k: int) -> np.ndarray:
        return self.vectors[:k]


def reference_eigh(a, max_sweeps: int = 100, off_rtol: float = 1e-13) -> EigenSystem:
    """Ground-truth eigendecomposition by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops to
    off_rtol * ||A||_F; failure to converge within max_sweeps raises with
    diagnostics. Eigenvalues are returned in non-increasing order.
    """
    work = sym_matrix(a)
    d = work.shape[0]
    scale = float(np.linalg.norm(work))
    if scale == 0.0:
        return EigenSystem(np.zeros(d), np.eye(d))
    vecs = np.empty((d, d))
    status = _kernels.jacobi_eigh_raw(work, vecs, max_sweeps, off_rtol * scale)
    if status < 0.0:
        off = float(np.sqrt(max(np.sum(work * work) - np.sum(np.diag(work) ** 2), 0.0)))
        raise NumericalError(
            f"Jacobi did not converge in {max_sweeps} sweeps: "
            f"d={d}, off-diagonal norm {off!r}, target {off_rtol * scale!r}")
    vals = np.diag(work).copy()
    order = np.argsort(-vals, kind="stable")
    return EigenSystem(vals[order], vecs.T[order])
