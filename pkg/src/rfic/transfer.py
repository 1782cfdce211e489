"""Partition function of the random field Ising chain by renormalised 2x2
transfer-matrix products, with an exhaustive-enumeration oracle."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels as K
from .disorder import DisorderLaw, as_stream, increment_blocks
from .stats import Estimate, from_samples, map_replicas

MAX_BRUTE_N = 20


@dataclass(frozen=True)
class BoundaryCondition:
    g: int = 1
    d: int = 1

    def __post_init__(self):
        if self.g not in (1, -1) or self.d not in (1, -1):
            raise ValueError("boundary spins must be +1 or -1")

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        if len(text) != 2 or set(text) - {"+", "-"}:
            raise ValueError(f"boundary condition must look like '++' or '+-', got {text!r}")
        return cls(1 if text[0] == "+" else -1, 1 if text[1] == "+" else -1)

    def __str__(self):
        return ("+" if self.g > 0 else "-") + ("+" if self.d > 0 else "-")

    @property
    def index(self):
        return (0 if self.g > 0 else 1, 0 if self.d > 0 else 1)


PP = BoundaryCondition(1, 1)
PM = BoundaryCondition(1, -1)
MP = BoundaryCondition(-1, 1)
MM = BoundaryCondition(-1, -1)
ALL_BC = (PP, PM, MP, MM)


@dataclass(frozen=True)
class TransferMatrix:
    """Entries scaled so the largest is 1; true matrix is exp(log_scale) * entries."""
    entries: np.ndarray
    log_scale: float

    def dense(self):
        return np.exp(self.log_scale) * self.entries


@dataclass(frozen=True)
class LogPartition:
    value: float
    N: int
    J: float
    bc: BoundaryCondition


def _check_J(J):
    if not (J > 0 and math.isfinite(J)):
        raise ValueError(f"coupling J must be > 0, got {J}")


def step_matrix(h: float, J: float) -> TransferMatrix:
    """T_h Q: entries (e^h, e^{h-2J}; e^{-h-2J}, e^{-h})."""
    _check_J(J)
    m = np.array([[h, h - 2 * J], [-h - 2 * J, -h]])
    top = m.max()
    return TransferMatrix(np.exp(m - top), float(top))


def _new_state(J):
    return np.array([1.0, math.exp(-2 * J), math.exp(-2 * J), 1.0, 0.0])


def _read(st, bc):
    i, j = bc.index
    return st[4] + math.log(st[2 * i + j])


def log_partition(h, J: float, bc: BoundaryCondition = PP) -> LogPartition:
    h = np.ascontiguousarray(h, dtype=float)
    _check_J(J)
    if h.size == 0:
        raise ValueError("log_partition needs N >= 1 sites")
    if not np.all(np.isfinite(h)):
        raise ValueError("field values must be finite")
    st = _new_state(J)
    K.transfer_block(h, float(J), st)
    return LogPartition(_read(st, bc), h.size, J, bc)


def _all_spins(N):
    return np.array(list(itertools.product((1, -1), repeat=N)), dtype=np.int8).reshape(-1, N)


def hamiltonian(sigma, h, J, bc: BoundaryCondition = PP) -> float:
    """H(sigma) = -2J * (#walls incl. both boundaries) + sum h_n sigma_n."""
    s = np.concatenate(([bc.g], np.asarray(sigma), [bc.d]))
    walls = np.count_nonzero(s[1:] != s[:-1])
    return float(-2 * J * walls + np.dot(np.asarray(h, float), np.asarray(sigma, float)))


def all_energies(h, J):
    """Energies of every configuration for the four boundary conditions.

    Returns (spins, E) with E of shape (4, 2^N) in ALL_BC order, or for a
    2-d batch of fields (B, N) an array (4, B, 2^N)."""
    h = np.asarray(h, dtype=float)
    N = h.shape[-1]
    if N > MAX_BRUTE_N:
        raise ValueError(f"brute force enumeration capped at N={MAX_BRUTE_N}, got N={N}")
    if N == 0:
        raise ValueError("need N >= 1 sites")
    sp = _all_spins(N)
    inner = np.count_nonzero(sp[:, 1:] != sp[:, :-1], axis=1)
    field = h @ sp.T.astype(float)
    E = []
    for bc in ALL_BC:
        walls = inner + (sp[:, 0] != bc.g) + (sp[:, -1] != bc.d)
        E.append(field - 2 * J * walls)
    return sp, np.stack(E)


def brute_force_log_partition(h, J: float, bc: BoundaryCondition = PP) -> LogPartition:
    _check_J(J)
    h = np.asarray(h, dtype=float)
    _, E = all_energies(h, J)
    return LogPartition(float(logsumexp(E[ALL_BC.index(bc)])), h.size, J, bc)


def _run_joint(law, J, N, burn_in, stream, block):
    """One realization: log Z^{++}, M^{++} by the max recursion and the
    ergodic X-chain sum past burn_in."""
    rng = stream.generator()
    tst = _new_state(J)
    dst = np.array([0.0, -2.0 * J, 0.0])
    est = np.array([2.0 * J, 0.0, 0.0])
    for h in increment_blocks(law, rng, N, block):
        K.transfer_block(h, J, tst)
        K.dp_block(h, J, dst)
        K.erg_block(h, J, est, float(burn_in))
    return _read(tst, PP), dst[0] + dst[2], est[1]


def free_energy_estimate(law: DisorderLaw, J: float, N: int, replicas: int, stream,
                         threads=None, block: int = 1 << 18) -> Estimate:
    """(1/N) log Z^{++} averaged over independent replicas."""
    _check_J(J)
    if N < 1000:
        raise ValueError("N must be >= 1000")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    stream = as_stream(stream)

    def one(r):
        rng = stream.split(r).generator()
        st = _new_state(J)
        for h in increment_blocks(law, rng, N, block):
            K.transfer_block(h, float(J), st)
        return _read(st, PP) / N

    return from_samples(map_replicas(one, replicas, threads), stream.seed)
