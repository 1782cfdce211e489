"""Replica statistics: the Estimate value type and helpers to build it."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int = 0

    def __str__(self):
        return f"{self.mean:.6g} ± {self.stderr:.2g} (n={self.n_samples})"

    def as_dict(self):
        return {"mean": self.mean, "stderr": self.stderr,
                "n_samples": self.n_samples, "seed": self.seed}

    def __sub__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.mean - other.mean, math.hypot(self.stderr, other.stderr),
                        min(self.n_samples, other.n_samples), self.seed)


def from_samples(x, seed: int = 0) -> Estimate:
    """Mean and standard error of independent samples (zero error for n=1)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(x.mean()), se, n, seed)


def ratio_estimate(num, den, seed: int = 0) -> Estimate:
    """mean(num)/mean(den) with first-order delta-method error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = num.size
    a, b = num.mean(), den.mean()
    r = a / b
    if n < 2:
        return Estimate(float(r), 0.0, n, seed)
    cov = np.cov(num, den)
    var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (b * b * n)
    return Estimate(float(r), float(math.sqrt(max(var, 0.0))), n, seed)


def combined_z(a: Estimate, b: Estimate) -> float:
    """|a - b| in units of the combined standard error."""
    se = math.hypot(a.stderr, b.stderr)
    d = abs(a.mean - b.mean)
    if se == 0:
        return 0.0 if d == 0 else math.inf
    return d / se


_threads = None


def set_threads(k):
    global _threads
    _threads = None if k is None else max(1, int(k))


def default_threads() -> int:
    if _threads is not None:
        return _threads
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def map_replicas(fn, n: int, threads=None):
    """``[fn(0), ..., fn(n-1)]``, optionally on a thread pool. Order of the
    result (and hence any reduction) never depends on the thread count."""
    k = default_threads() if threads is None else threads
    if k <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=min(k, n)) as ex:
        return list(ex.map(fn, range(n)))
