"""Round-synchronous multi-worker execution core.

One run is L communication rounds over K workers. Worker k stays inactive
(re-broadcasting its frozen initial vector) until round k; from then on it
recomputes its estimate each round from the previous round's broadcast
snapshot. Within a round the K worker updates are independent pure
functions of that immutable snapshot, so the serial and threaded modes
produce bitwise identical traces.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .io import atomic_write_text, save_pdm1
from .linalg import EigenSystem
from .seeding import unit_init

MODES = ("serial", "thread")


@dataclass(frozen=True)
class WorkerState:
    """One worker's view after a given round.

    Until its own index comes up (rounds_active == 0) the worker just
    re-broadcasts its frozen initial vector, so v_current equals v_init.
    """

    index: int
    v_init: np.ndarray
    v_current: np.ndarray
    rounds_active: int


@dataclass(frozen=True)
class RunTrace:
    """Per-round log of all broadcast worker vectors for one run.

    vectors has shape (L, K, d): vectors[l-1, k-1] is worker k's broadcast
    after round l. errors (same leading shape) holds sign-invariant
    distances to an attached ground-truth eigensystem, or None before
    `attach_oracle`. oracle_reliable is cleared when the attached truth has
    (near-)repeated leading eigenvalues, in which case per-worker errors are
    not meaningful and schedule checks refuse the trace.
    """

    algorithm: str
    local_steps: int
    seed: int
    vectors: np.ndarray
    errors: np.ndarray | None = None
    variant: str | None = None
    oracle_reliable: bool = True

    @property
    def n_rounds(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_workers(self) -> int:
        return self.vectors.shape[1]

    @property
    def dim(self) -> int:
        return self.vectors.shape[2]

    @property
    def final_vectors(self) -> np.ndarray:
        return self.vectors[-1]

    def active(self) -> np.ndarray:
        """Boolean (L, K) activation mask: worker k is active from round k on."""
        rounds = np.arange(1, self.n_rounds + 1)[:, None]
        workers = np.arange(1, self.n_workers + 1)[None, :]
        return workers <= rounds

    def worker_state(self, k: int, rnd: int) -> WorkerState:
        """Reconstruct worker k's state after round rnd (both 1-based)."""
        if not 1 <= k <= self.n_workers:
            raise ConfigError(f"worker index must lie in [1, {self.n_workers}]")
        if not 1 <= rnd <= self.n_rounds:
            raise ConfigError(f"round must lie in [1, {self.n_rounds}]")
        return WorkerState(index=k, v_init=unit_init(self.seed, k, self.dim),
                           v_current=self.vectors[rnd - 1, k - 1],
                           rounds_active=max(0, rnd - k + 1))


def run_round_synchronous(*, dim, n_workers, n_rounds, seed, update,
                          algorithm, local_steps, variant=None,
                          mode="serial") -> RunTrace:
    """Drive `update(worker, round, snapshot) -> vector` across all rounds.

    `snapshot` is the read-only (K, d) broadcast state of the previous round
    (round 0 holds the frozen initial vectors). Inactive workers are handled
    here and never reach `update`.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown engine mode {mode!r}")
    if n_workers < 1:
        raise ConfigError(f"need at least one worker, got {n_workers}")
    if n_rounds < n_workers:
        raise ConfigError(
            f"need at least as many rounds as workers, got L={n_rounds} < K={n_workers}")
    inits = np.stack([unit_init(seed, k, dim) for k in range(1, n_workers + 1)])
    inits.setflags(write=False)

    out = np.empty((n_rounds, n_workers, dim))
    prev = inits
    pool = ThreadPoolExecutor(max_workers=n_workers) if mode == "thread" else None
    try:
        for rnd in range(1, n_rounds + 1):
            cur = np.empty((n_workers, dim))

            def one(k, rnd=rnd, prev=prev, cur=cur):
                cur[k - 1] = inits[k - 1] if k > rnd else update(k, rnd, prev)

            if pool is None:
                for k in range(1, n_workers + 1):
                    one(k)
            else:
                list(pool.map(one, range(1, n_workers + 1)))
            cur.setflags(write=False)
            out[rnd - 1] = cur
            prev = cur
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    out.setflags(write=False)
    return RunTrace(algorithm=algorithm, local_steps=local_steps, seed=seed,
                    vectors=out, variant=variant)


def attach_oracle(trace: RunTrace, truth: EigenSystem,
                  min_rel_gap: float = 1e-8) -> RunTrace:
    """Fill per-round recovery errors min over sign of ||v_{k,l} -+ u_k||.

    Marks the trace unreliable when the leading part of the oracle spectrum
    has (near-)repeated eigenvalues, since per-index comparisons are then
    ill-posed.
    """
    k = trace.n_workers
    if k > truth.vectors.shape[0]:
        raise ConfigError(
            f"trace has {k} workers but the oracle only holds {truth.vectors.shape[0]} vectors")
    if truth.dim != trace.dim:
        raise ConfigError(
            f"dimension mismatch: trace d={trace.dim}, oracle d={truth.dim}")
    top = truth.vectors[:k]
    diff = np.linalg.norm(trace.vectors - top[None, :, :], axis=2)
    summ = np.linalg.norm(trace.vectors + top[None, :, :], axis=2)
    errors = np.minimum(diff, summ)
    errors.setflags(write=False)

    lead = truth.values[: min(k + 1, truth.values.shape[0])]
    scale = max(float(np.max(np.abs(lead))), 1e-300)
    reliable = bool(np.all(np.diff(lead) < -min_rel_gap * scale))
    return replace(trace, errors=errors, oracle_reliable=reliable)


def export_trace_csv(trace: RunTrace, path) -> None:
    """Write `round,worker,error,active` rows (plus `variant` for game runs)
    and a sidecar PDM1 file holding the final broadcast vectors."""
    header = ["round", "worker", "error", "active"]
    if trace.variant is not None:
        header.append("variant")
    active = trace.active()
    lines = [",".join(header)]
    for l in range(trace.n_rounds):
        for k in range(trace.n_workers):
            err = "" if trace.errors is None else repr(float(trace.errors[l, k]))
            row = [str(l + 1), str(k + 1), err, str(int(active[l, k]))]
            if trace.variant is not None:
                row.append(trace.variant)
            lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")
    save_pdm1(Path(path).with_suffix(".pdm1"), trace.final_vectors)


def read_trace_csv(path) -> list[dict]:
    """Round-trip reader for the trace CSV schema (used by tests and tools)."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
