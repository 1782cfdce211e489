"""Maximal energy (ground state) of the random field Ising chain.

Three routes: the exact max-plus recursion on (M+, M-), the clamped X-chain
with its telescoped increment, and an enumeration oracle for short chains.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .disorder import DisorderLaw, as_stream, increment_blocks
from .stats import Estimate, from_samples, map_replicas
from .transfer import (ALL_BC, PP, BoundaryCondition, _check_J, _new_state, _read,
                       all_energies, hamiltonian)


@dataclass(frozen=True)
class EnergyState:
    m_plus: float
    m_minus: float

    @property
    def x(self):
        return self.m_plus - self.m_minus

    @classmethod
    def initial(cls, J):
        return cls(0.0, -2.0 * J)


@dataclass(frozen=True)
class SpinConfig:
    N: int
    wall_positions: tuple
    bc: BoundaryCondition = PP

    def __post_init__(self):
        w = self.wall_positions
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("wall positions must be strictly increasing")
        if w and (w[0] < 0 or w[-1] > self.N):
            raise ValueError("wall positions must lie in [0, N]")
        if (len(w) % 2 == 0) != (self.bc.g == self.bc.d):
            raise ValueError("wall count parity does not match the boundary condition")

    def spins(self):
        """sigma_1..sigma_N."""
        flips = np.zeros(self.N + 2, dtype=np.int64)
        for k in self.wall_positions:
            flips[k + 1] += 1
        s = self.bc.g * (1 - 2 * (np.cumsum(flips) % 2))
        return s[1:self.N + 1].astype(np.int8)

    @classmethod
    def from_spins(cls, sigma, bc=PP):
        s = np.concatenate(([bc.g], np.asarray(sigma), [bc.d]))
        return cls(len(sigma), tuple(int(k) for k in np.flatnonzero(s[1:] != s[:-1])), bc)

    def energy(self, h, J):
        return hamiltonian(self.spins(), h, J, self.bc)


def dp_step(state: EnergyState, h_next: float, J: float) -> EnergyState:
    g = 2.0 * J
    mp, mm = state.m_plus, state.m_minus
    return EnergyState(max(mp + h_next, mm - g - h_next), max(mp - g + h_next, mm - h_next))


def x_chain_step(x: float, h_next: float, J: float) -> float:
    g = 2.0 * J
    return min(max(x + 2.0 * h_next, -g), g)


def max_energy(h, J: float, bc: BoundaryCondition = PP) -> float:
    """M^{gd}_N by the max-plus recursion; g = -1 uses the spin-flip symmetry."""
    _check_J(J)
    h = np.ascontiguousarray(h, dtype=float)
    if h.size == 0:
        raise ValueError("max_energy needs N >= 1 sites")
    d = bc.d
    if bc.g < 0:
        h = -h
        d = -d
    st = np.array([0.0, -2.0 * J, 0.0])
    K.dp_block(h, float(J), st)
    return float((st[0] if d > 0 else st[1]) + st[2])


def brute_force_max(h, J: float, bc: BoundaryCondition = PP):
    """(max energy, argmax SpinConfig); ties go to the lexicographically
    smallest configuration with + before -."""
    _check_J(J)
    h = np.asarray(h, dtype=float)
    sp, E = all_energies(h, J)
    e = E[ALL_BC.index(bc)]
    i = int(np.argmax(e))
    return float(e[i]), SpinConfig.from_spins(sp[i], bc)


def x_chain_path(h, J, x0=None):
    """X_0..X_N driven by h (default start 2J)."""
    _check_J(J)
    x0 = 2.0 * J if x0 is None else float(x0)
    return K.x_chain_path(x0, np.ascontiguousarray(h, dtype=float), float(J))


def coupled_x_chains(h, J, x0, y0):
    """Two X-chains sharing the same increments."""
    return x_chain_path(h, J, x0), x_chain_path(h, J, y0)


def default_burn_in(law: DisorderLaw, J: float) -> int:
    return 10 * math.ceil((2 * J) ** 2 / law.variance())


def _check_burn(law, J, N, burn_in):
    if burn_in is None:
        burn_in = default_burn_in(law, J)
    if burn_in < 0 or burn_in >= N:
        raise ValueError(f"burn_in must be in [0, N), got {burn_in}")
    if burn_in < 8 * (2 * J) ** 2 / law.variance():
        warnings.warn(f"burn_in={burn_in} is below 8*Gamma^2/theta^2; the X-chain may not have mixed",
                      RuntimeWarning, stacklevel=3)
    return int(burn_in)


def ergodic_max_energy(law: DisorderLaw, J: float, N: int, burn_in=None, replicas: int = 16,
                       stream=0, threads=None, block: int = 1 << 18) -> Estimate:
    """Time average of the M+ increment along the X-chain, past burn_in."""
    _check_J(J)
    burn_in = _check_burn(law, J, N, burn_in)
    stream = as_stream(stream)

    def one(r):
        rng = stream.split(r).generator()
        st = np.array([2.0 * J, 0.0, 0.0])
        for h in increment_blocks(law, rng, N, block):
            K.erg_block(h, float(J), st, float(burn_in))
        return st[1] / (N - burn_in)

    return from_samples(map_replicas(one, replicas, threads), stream.seed)


@dataclass(frozen=True)
class JointDensities:
    """Per-replica densities computed on shared realizations."""
    F: np.ndarray
    M_dp: np.ndarray
    M_ergodic: np.ndarray
    seed: int

    def estimates(self):
        return (from_samples(self.F, self.seed), from_samples(self.M_dp, self.seed),
                from_samples(self.M_ergodic, self.seed))


def joint_densities(law: DisorderLaw, J: float, N: int, replicas: int, stream,
                    burn_in=None, threads=None, block: int = 1 << 18) -> JointDensities:
    """(1/N) log Z^{++}, (1/N) M^{++}_N and the ergodic X-chain average, all
    from the same increments of each replica."""
    _check_J(J)
    burn_in = _check_burn(law, J, N, burn_in)
    stream = as_stream(stream)
    J = float(J)

    def one(r):
        rng = stream.split(r).generator()
        tst = _new_state(J)
        dst = np.array([0.0, -2.0 * J, 0.0])
        est = np.array([2.0 * J, 0.0, 0.0])
        for h in increment_blocks(law, rng, N, block):
            K.transfer_block(h, J, tst)
            K.dp_block(h, J, dst)
            K.erg_block(h, J, est, float(burn_in))
        return _read(tst, PP) / N, (dst[0] + dst[2]) / N, est[1] / (N - burn_in)

    res = np.array(map_replicas(one, replicas, threads))
    return JointDensities(res[:, 0], res[:, 1], res[:, 2], stream.seed)


def reconstruct_maximal_config(decomp) -> SpinConfig:
    """++ configuration with walls at u_1..u_{2K} on the walk cut at t_{2K}."""
    t = list(decomp.t)
    if len(t) == 0 or len(t) % 2:
        raise ValueError("decomposition must end at an even t-index")
    if decomp.N != t[-1]:
        raise ValueError(f"walk must be truncated at t_2K={t[-1]}, got length {decomp.N}")
    return SpinConfig(int(t[-1]), tuple(int(u) for u in decomp.u), PP)
