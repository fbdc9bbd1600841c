"""Leading-eigenvector subroutines: power iteration and Hebb's rule.

Both satisfy the same call shape so every engine can consume either through
`top1`. `contraction_estimate` exposes the per-step error-shrink factor the
convergence schedule is built from: for power iteration it is realized by
the ratio of the two largest eigenvalue magnitudes.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, DegenerateSpectrumError, NumericalError
from .linalg import as_vector, check_unit, reference_eigh, sign_align, sym_matrix

POWER_ITERATION = "power_iteration"
HEBB = "hebb"


@dataclass(frozen=True)
class Top1Config:
    """Configuration of the local leading-eigenvector solver.

    steps is the number of inner iterations per call; eta is the Hebb step
    size and must be set (positive) when method == "hebb".
    """

    method: str = POWER_ITERATION
    steps: int = 1
    eta: float | None = None
    sign_align_output: bool = True

    def __post_init__(self):
        if self.method not in (POWER_ITERATION, HEBB):
            raise ConfigError(f"unknown Top1 method {self.method!r}")
        if int(self.steps) < 1:
            raise ConfigError(f"Top1 steps must be >= 1, got {self.steps}")
        if self.method == HEBB and (self.eta is None or not self.eta > 0.0):
            raise ConfigError("Hebb's rule needs a positive step size eta")


@dataclass(frozen=True)
class ContractionEstimate:
    """Per-step contraction factor F in (0,1) and the raw |lambda_2|/|lambda_1|."""

    F: float
    gap_ratio: float

    def __post_init__(self):
        if not 0.0 < self.F < 1.0:
            raise ConfigError(f"contraction factor must lie in (0,1), got {self.F!r}")


def _prep(sigma, v0):
    sm = sym_matrix(sigma)
    v = as_vector(v0, "start vector")
    if v.shape[0] != sm.shape[0]:
        raise ConfigError(f"dimension mismatch: {sm.shape} vs {v.shape}")
    check_unit(v, name="start vector")
    if not np.any(sm):
        raise ConfigError("matrix is identically zero")
    return sm, v


def pow_iter(sigma, v0, t_steps: int, sign_align_output: bool = True) -> np.ndarray:
    """t_steps normalized power-iteration steps x <- Sigma x / ||Sigma x||."""
    sm, v = _prep(sigma, v0)
    if int(t_steps) < 1:
        raise ConfigError(f"step count must be >= 1, got {t_steps}")
    out = np.empty_like(v)
    status = _kernels.power_steps(sm, v, int(t_steps), np.empty_like(v), out)
    if status < 0.0:
        raise NumericalError("power iteration hit a (near-)zero iterate")
    return sign_align(out, v) if sign_align_output else out


def hebb(sigma, v0, t_steps: int, eta: float, sign_align_output: bool = True) -> np.ndarray:
    """t_steps normalized Hebb updates x <- (x + eta Sigma x) / ||.||."""
    sm, v = _prep(sigma, v0)
    if int(t_steps) < 1:
        raise ConfigError(f"step count must be >= 1, got {t_steps}")
    if not eta > 0.0:
        raise ConfigError(f"Hebb step size must be positive, got {eta!r}")
    out = np.empty_like(v)
    status = _kernels.hebb_steps(sm, v, int(t_steps), float(eta), np.empty_like(v), out)
    if status < 0.0:
        raise NumericalError("Hebb update hit a (near-)zero iterate")
    return sign_align(out, v) if sign_align_output else out


def top1(sigma, v0, cfg: Top1Config) -> np.ndarray:
    """Uniform entry point used by all engines; dispatches on cfg.method."""
    if cfg.method == POWER_ITERATION:
        return pow_iter(sigma, v0, cfg.steps, cfg.sign_align_output)
    return hebb(sigma, v0, cfg.steps, cfg.eta, cfg.sign_align_output)


def exact_top1(sigma, v0) -> np.ndarray:
    """Oracle solver: exact top eigenvector (by reference_eigh), aligned to v0.

    Drop-in replacement for `top1` used in validation runs.
    """
    es = reference_eigh(sigma)
    idx = int(np.argmax(np.abs(es.values)))
    return sign_align(es.vectors[idx], as_vector(v0))


def contraction_estimate(sigma, min_rel_gap: float = 1e-8) -> ContractionEstimate:
    """Per-step contraction factor |lambda_2| / |lambda_1| of a matrix.

    Computed through the reference eigensolver; the two largest eigenvalue
    magnitudes must be separated by a relative gap of at least min_rel_gap.
    The factor is clamped into (1e-12, 1 - 1e-12) so downstream log(1/m)
    arithmetic stays finite.
    """
    es = reference_eigh(sigma)
    mags = np.sort(np.abs(es.values))[::-1]
    if mags[0] < 1e-300:
        raise DegenerateSpectrumError("matrix is numerically zero")
    if mags.shape[0] < 2:
        raise DegenerateSpectrumError("need dimension >= 2 for a gap ratio")
    ratio = float(mags[1] / mags[0])
    if (1.0 - ratio) < min_rel_gap:
        raise DegenerateSpectrumError(
            f"top eigenvalue magnitudes too close: ratio {ratio!r}")
    return ContractionEstimate(F=float(np.clip(ratio, 1e-12, 1.0 - 1e-12)),
                               gap_ratio=ratio)
