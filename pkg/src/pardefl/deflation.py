"""Deterministic deflation engines.

`sequential_deflation` is the classical nested loop: solve the top
eigenvector, subtract its rank-1 Rayleigh term from the current matrix,
repeat. `parallel_deflation` breaks the sequential dependency: every worker
k re-deflates the ORIGINAL matrix each round with its peers' latest
broadcast vectors,

    Sigma_{k,l} = Sigma - sum_{k'<k} (v_{k'}^T Sigma v_{k'}) v_{k'} v_{k'}^T,

then warm-starts its local solver at its own previous output. The two
procedures coincide when the inputs to the rank-1 terms are exact
eigenvectors.
"""

import numpy as np

from . import _kernels
from .engine import RunTrace, run_round_synchronous
from .errors import ConfigError, NumericalError, PardeflError
from .linalg import as_vector, check_unit, sym_matrix
from .seeding import unit_init
from .solvers import HEBB, Top1Config, top1


def deflate(sigma, vs) -> np.ndarray:
    """One-shot deflation of sigma by a list of unit vectors.

    Every rank-1 term uses the original sigma (not a nested partial
    deflation), matching the per-round recomputation of the parallel engine.
    """
    sm = sym_matrix(sigma)
    d = sm.shape[0]
    peers = np.zeros((0, d)) if len(vs) == 0 else np.ascontiguousarray(
        np.atleast_2d(np.asarray(vs, dtype=np.float64)))
    if peers.shape[1] != d:
        raise ConfigError(f"deflation vectors have dim {peers.shape[1]}, matrix has {d}")
    for i in range(peers.shape[0]):
        check_unit(peers[i], name=f"deflation vector {i + 1}")
    out = np.empty_like(sm)
    _kernels.deflate_into(sm, peers, np.empty(d), out)
    return out


def sequential_deflation(sigma, n_components: int, cfg: Top1Config,
                         seed: int) -> np.ndarray:
    """Classical deflation: returns the (K, d) stack of recovered vectors."""
    sm = sym_matrix(sigma)
    d = sm.shape[0]
    if not 1 <= n_components <= d:
        raise ConfigError(f"K must lie in [1, {d}], got {n_components}")
    current = sm.copy()
    out = np.empty((n_components, d))
    for k in range(1, n_components + 1):
        v0 = unit_init(seed, k, d)
        try:
            v = top1(current, v0, cfg)
        except PardeflError as exc:
            raise NumericalError(f"worker {k}: {exc}") from exc
        out[k - 1] = v
        lam = float(v @ current @ v)
        current -= lam * np.outer(v, v)
    return out


def _deflation_update(sigma, cfg: Top1Config, top1_fn=None):
    """Per-worker round update shared by the engine and by `replay_round`."""
    d = sigma.shape[0]

    def update(k, rnd, prev, _buffers={}):
        if k not in _buffers:
            _buffers[k] = (np.empty((d, d)), np.empty(d))
        defl, scratch = _buffers[k]
        _kernels.deflate_into(sigma, prev[: k - 1], scratch, defl)
        warm = prev[k - 1]
        try:
            if top1_fn is not None:
                return as_vector(top1_fn(defl, warm))
            if cfg.method == HEBB:
                out = np.empty(d)
                status = _kernels.hebb_steps(defl, warm, cfg.steps, cfg.eta,
                                             scratch, out)
            else:
                out = np.empty(d)
                status = _kernels.power_steps(defl, warm, cfg.steps, scratch, out)
            if status < 0.0:
                raise NumericalError("local solver hit a (near-)zero iterate")
            if cfg.sign_align_output and float(out @ warm) < 0.0:
                out = -out
            return out
        except PardeflError as exc:
            raise NumericalError(f"worker {k}, round {rnd}: {exc}") from exc

    return update


def parallel_deflation(sigma, n_components: int, n_rounds: int,
                       cfg: Top1Config, seed: int, mode: str = "serial",
                       top1_fn=None) -> RunTrace:
    """Round-synchronous parallel deflation.

    top1_fn optionally replaces the configured solver with any callable
    (deflated_matrix, warm_start) -> vector, e.g. `solvers.exact_top1` for
    oracle-exact validation runs. Deterministic given the seed; `mode` picks
    serial or threaded execution of the per-round worker updates, with
    bitwise identical results.
    """
    sm = sym_matrix(sigma)
    d = sm.shape[0]
    if not 1 <= n_components <= d:
        raise ConfigError(f"K must lie in [1, {d}], got {n_components}")
    update = _deflation_update(sm, cfg, top1_fn)
    return run_round_synchronous(
        dim=d, n_workers=n_components, n_rounds=n_rounds, seed=seed,
        update=update, algorithm="parallel_deflation", local_steps=cfg.steps,
        mode=mode)


def replay_round(sigma, trace: RunTrace, rnd: int, cfg: Top1Config,
                 top1_fn=None) -> np.ndarray:
    """Recompute round `rnd` (>= 2) of a parallel-deflation trace.

    Uses only the previous round's broadcast snapshot from the trace, so a
    replay must reproduce the recorded round bitwise.
    """
    if not 2 <= rnd <= trace.n_rounds:
        raise ConfigError(f"can only replay rounds 2..{trace.n_rounds}, got {rnd}")
    sm = sym_matrix(sigma)
    update = _deflation_update(sm, cfg, top1_fn)
    prev = trace.vectors[rnd - 2]
    out = np.empty((trace.n_workers, trace.dim))
    for k in range(1, trace.n_workers + 1):
        out[k - 1] = prev[k - 1] if k > rnd else update(k, rnd, prev)
    return out
