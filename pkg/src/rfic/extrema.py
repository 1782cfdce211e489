"""Gamma-extrema of a random walk: alternating records of drops and rises of
size Gamma, the stretches between them, and the environment around a
Gamma-minimum."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .disorder import DisorderLaw, as_stream
from .stats import Estimate, map_replicas, ratio_estimate


@dataclass(frozen=True)
class GammaDecomposition:
    """Records t_k, u_k, u_k^+ (k = 1.. as 0-based arrays). Odd k (index 0,
    2, ...) are Gamma-maxima, even k are Gamma-minima. ``N`` is the last index
    of the scanned walk."""
    gamma: float
    t: np.ndarray
    u: np.ndarray
    u_plus: np.ndarray
    S_u: np.ndarray
    N: int

    @property
    def n_records(self):
        return len(self.t)

    @property
    def complete(self):
        return len(self.t) >= 2

    @property
    def K(self):
        """Number of complete (max, min) periods."""
        return len(self.t) // 2

    def to_csv(self, fh=None):
        out = fh or io.StringIO()
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(["k", "t", "u", "u_plus", "S_u"])
        for i in range(len(self.t)):
            w.writerow([i + 1, int(self.t[i]), int(self.u[i]), int(self.u_plus[i]), repr(float(self.S_u[i]))])
        return out.getvalue() if fh is None else None


class _Scanner:
    """Incremental Gamma-extrema detection over consecutive walk blocks."""

    def __init__(self, gamma):
        if not gamma > 0:
            raise ValueError(f"gamma must be > 0, got {gamma}")
        self.gamma = float(gamma)
        self.stf = np.zeros(1)
        self.sti = np.zeros(4, dtype=np.int64)
        self.next_index = 0
        self.parts = []

    def feed(self, S):
        S = np.ascontiguousarray(S, dtype=float)
        n = S.size
        t = np.empty(n, np.int64)
        u = np.empty(n, np.int64)
        up = np.empty(n, np.int64)
        su = np.empty(n)
        k = K.gamma_scan(S, self.next_index, self.gamma, self.stf, self.sti, t, u, up, su)
        self.next_index += n
        if k:
            self.parts.append((t[:k].copy(), u[:k].copy(), up[:k].copy(), su[:k].copy()))
        return k

    def result(self):
        if self.parts:
            t, u, up, su = (np.concatenate(x) for x in zip(*self.parts))
        else:
            t = u = up = np.empty(0, np.int64)
            su = np.empty(0)
        return GammaDecomposition(self.gamma, t, u, up, su, self.next_index - 1)


def decompose(S, gamma: float) -> GammaDecomposition:
    """Single left-to-right pass; ``complete`` is False when t_2 is not reached."""
    sc = _Scanner(gamma)
    sc.feed(S)
    return sc.result()


def stream_records(law: DisorderLaw, gamma: float, n_records: int, rng, block: int = 1 << 18):
    """Decompose a fresh walk, generated in blocks, until ``n_records`` records exist."""
    sc = _Scanner(gamma)
    found = 0
    carry = 0.0
    sc.feed(np.zeros(1))
    while found < n_records:
        h = law.sample(rng, block)
        S = carry + np.cumsum(h)
        carry = S[-1]
        found += sc.feed(S)
    d = sc.result()
    m = n_records
    return GammaDecomposition(d.gamma, d.t[:m], d.u[:m], d.u_plus[:m], d.S_u[:m], int(d.t[m - 1]))


@dataclass(frozen=True)
class StretchSample:
    direction: str
    height: float
    length: int


def stretch_arrays(decomp: GammaDecomposition):
    """Heights and lengths of stretches u_k -> u_{k+1}, split by parity:
    returns (desc_heights, desc_lengths, asc_heights, asc_lengths)."""
    dh = np.abs(np.diff(decomp.S_u))
    dl = np.diff(decomp.u)
    return dh[0::2], dl[0::2], dh[1::2], dl[1::2]


def stretch_samples(decomp: GammaDecomposition, S=None):
    if not decomp.complete:
        raise ValueError("need a complete decomposition (at least t_2)")
    out = []
    for k in range(len(decomp.u) - 1):
        if S is not None:
            hgt = abs(float(S[decomp.u[k + 1]] - S[decomp.u[k]]))
        else:
            hgt = abs(float(decomp.S_u[k + 1] - decomp.S_u[k]))
        out.append(StretchSample("descending" if k % 2 == 0 else "ascending", hgt,
                                 int(decomp.u[k + 1] - decomp.u[k])))
    return out


def stretch_totals(law: DisorderLaw, J: float, K_pairs: int, stream, block: int = 1 << 18):
    """(sum of 2K stretch heights - 2 Gamma K, sum of their lengths) on one walk."""
    gamma = 2.0 * J
    d = stream_records(law, gamma, 2 * K_pairs + 1, as_stream(stream).generator(), block)
    num = float(np.abs(np.diff(d.S_u)).sum()) - 2.0 * gamma * K_pairs
    den = float(d.u[-1] - d.u[0])
    return num, den


def stretch_max_energy(law: DisorderLaw, J: float, K: int, replicas: int, stream,
                       threads=None, block: int = 1 << 16) -> Estimate:
    """(E[H_down + H_up] - 2 Gamma) / E[L_down + L_up] from K stretch pairs per
    replica; ratio of replica means with delta-method error."""
    if K < 100:
        raise ValueError("K must be >= 100 stretch pairs per replica")
    if not J > 0:
        raise ValueError("J must be > 0")
    stream = as_stream(stream)
    res = np.array(map_replicas(lambda r: stretch_totals(law, J, K, stream.split(r), block),
                                replicas, threads))
    return ratio_estimate(res[:, 0], res[:, 1], stream.seed)


@dataclass(frozen=True)
class Environment:
    offsets: np.ndarray
    values: np.ndarray
    tau_minus: int
    tau_plus: int
    gamma: float

    def value(self, n):
        return self.values[n - self.offsets[0]]

    def inner_logsum(self):
        """log of sum exp(-2 S) over tau- < n < tau+."""
        sel = (self.offsets > self.tau_minus) & (self.offsets < self.tau_plus)
        return float(np.log(np.exp(-2.0 * self.values[sel]).sum()))

    def full_logsum(self):
        return float(np.log(np.exp(-2.0 * self.values).sum()))


def environment_around_minimum(S, decomp: GammaDecomposition, k: int) -> Environment:
    """Walk recentred at the Gamma-minimum u_k (k even, 1-based) on the range
    [u_{k-1}, u_{k+1}^+]."""
    if k % 2 or k < 2:
        raise ValueError("k must be an even index >= 2 (a Gamma-minimum)")
    if k + 1 > len(decomp.u):
        raise ValueError(f"record u_{k + 1} not available; walk too short")
    S = np.asarray(S, dtype=float)
    lo, c, hi = int(decomp.u[k - 2]), int(decomp.u[k - 1]), int(decomp.u_plus[k])
    vals = S[lo:hi + 1] - S[c]
    offs = np.arange(lo - c, hi - c + 1)
    half = decomp.gamma / 2
    left = np.flatnonzero((offs <= 0) & (vals >= half))
    right = np.flatnonzero((offs >= 0) & (vals >= half))
    return Environment(offs, vals, int(offs[left[-1]]), int(offs[right[0]]), decomp.gamma)


def environment_functionals(S, decomp: GammaDecomposition):
    """Both log-sum functionals for every fully contained Gamma-minimum."""
    n = len(decomp.u)
    inner = np.empty(n)
    full = np.empty(n)
    m = K.env_functionals(np.ascontiguousarray(S, dtype=float), decomp.u, decomp.u_plus,
                          decomp.gamma, inner, full)
    return inner[:m], full[:m]
