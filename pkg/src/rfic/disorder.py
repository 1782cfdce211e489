"""Disorder laws for the random field and seeded random streams.

Every law in the registry is centered with finite variance. Sampling goes
through :class:`SeededStream`, a value type wrapping numpy's counter-based
Philox generator, so that replicas derive independent streams from
``(master_seed, replica_index)`` without any shared state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

KINDS = ("gaussian", "rademacher", "laplace", "uniform", "logistic_sech")

# laws whose increments have no atoms; weak and strict ladders coincide a.s.
CONTINUOUS = frozenset({"gaussian", "laplace", "uniform", "logistic_sech"})

BLOCK = 1 << 18


@dataclass(frozen=True)
class DisorderLaw:
    """A centered law for the field ``h``.

    ``param`` is sigma (gaussian), the atom a (rademacher), the scale b
    (laplace), the half-width a (uniform) or the logistic scale (1 for the
    ``logistic_sech`` law with density ``1/(2 cosh(x/2))**2``).
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "param", float(self.param))
        if not (math.isfinite(self.param) and self.param > 0):
            raise ValueError(f"{self.kind}: parameter must be > 0, got {self.param}")

    @property
    def spec(self) -> str:
        if self.kind == "logistic_sech" and self.param == 1.0:
            return "logistic_sech"
        return f"{self.kind}:{self.param:g}"

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def continuous(self) -> bool:
        return self.kind in CONTINUOUS

    def dilated(self, factor: float) -> "DisorderLaw":
        """Law of ``factor * h``."""
        return DisorderLaw(self.kind, self.param * factor)

    def negated(self) -> "DisorderLaw":
        """Law of ``-h`` (every registry law is symmetric)."""
        return self

    def variance(self) -> float:
        p = self.param
        if self.kind in ("gaussian", "rademacher"):
            return p * p
        if self.kind == "laplace":
            return 2.0 * p * p
        if self.kind == "uniform":
            return p * p / 3.0
        return p * p * math.pi ** 2 / 3.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.param
        if self.kind == "gaussian":
            return rng.normal(0.0, p, n)
        if self.kind == "rademacher":
            return np.where(rng.integers(0, 2, n, dtype=np.int8) == 1, p, -p)
        if self.kind == "laplace":
            return rng.laplace(0.0, p, n)
        if self.kind == "uniform":
            return rng.uniform(-p, p, n)
        return rng.logistic(0.0, p, n)

    def cdf(self, x):
        """``P[h <= x]`` in closed form."""
        x = np.asarray(x, dtype=float)
        p = self.param
        if self.kind == "gaussian":
            return special.ndtr(x / p)
        if self.kind == "rademacher":
            return np.where(x < -p, 0.0, np.where(x < p, 0.5, 1.0))
        if self.kind == "laplace":
            return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0) / p),
                            1.0 - 0.5 * np.exp(-np.maximum(x, 0) / p))
        if self.kind == "uniform":
            return np.clip((x + p) / (2 * p), 0.0, 1.0)
        return special.expit(x / p)

    def upper_partial_mean(self, a):
        """``E[(h - a)^+]``, i.e. the integral of ``P[h > y]`` over ``y > a``."""
        a = np.asarray(a, dtype=float)
        p = self.param
        if self.kind == "gaussian":
            s = a / p
            return p * np.exp(-0.5 * s * s) / math.sqrt(2 * math.pi) - a * special.ndtr(-s)
        if self.kind == "rademacher":
            return 0.5 * np.maximum(p - a, 0.0) + 0.5 * np.maximum(-p - a, 0.0)
        if self.kind == "laplace":
            return np.maximum(-a, 0.0) + 0.5 * p * np.exp(-np.abs(a) / p)
        if self.kind == "uniform":
            inner = (p - a) ** 2 / (4 * p)
            return np.where(a <= -p, -a, np.where(a >= p, 0.0, inner))
        return p * np.logaddexp(0.0, -a / p)


def parse_law(text: str) -> DisorderLaw:
    """Parse ``gaussian:1``, ``rademacher:1``, ``laplace:1``, ``uniform:1`` or
    ``logistic_sech``. Names are case-sensitive."""
    kind, sep, rest = text.partition(":")
    if kind not in KINDS:
        raise ValueError(f"unknown law {kind!r} in {text!r}; expected one of {', '.join(KINDS)}")
    if kind == "logistic_sech":
        if sep:
            raise ValueError("logistic_sech takes no parameter")
        return DisorderLaw(kind)
    if not sep:
        raise ValueError(f"{kind} needs a parameter, e.g. {kind}:1")
    try:
        value = float(rest)
    except ValueError:
        raise ValueError(f"{kind}: parameter {rest!r} is not a number") from None
    if not value > 0:
        names = {"gaussian": "sigma", "rademacher": "a", "laplace": "b", "uniform": "a"}
        raise ValueError(f"{kind}: {names[kind]} must be > 0 (got {rest})")
    return DisorderLaw(kind, value)


@dataclass(frozen=True)
class SeededStream:
    """Deterministic, splittable random stream.

    The Philox key comes from ``SeedSequence(seed, spawn_key=path)`` and the
    counter starts at ``offset`` (in Philox blocks of four 64-bit words), so
    ``s.advanced(n).advanced(m) == s.advanced(n + m)``.
    """

    seed: int
    path: tuple = ()
    offset: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def split(self, index: int) -> "SeededStream":
        return SeededStream(self.seed, self.path + (int(index),), 0)

    def advanced(self, n: int) -> "SeededStream":
        return SeededStream(self.seed, self.path, self.offset + int(n))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        bitgen = np.random.Philox(key=ss.generate_state(2, np.uint64))
        if self.offset:
            bitgen.advance(self.offset)
        return np.random.Generator(bitgen)


def as_stream(stream) -> SeededStream:
    if isinstance(stream, SeededStream):
        return stream
    return SeededStream(int(stream))


def sample_increments(law: DisorderLaw, stream, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be >= 0")
    return law.sample(as_stream(stream).generator(), n)


def increment_blocks(law: DisorderLaw, rng: np.random.Generator, n: int, block: int = BLOCK):
    """Yield ``n`` increments in blocks of at most ``block``."""
    done = 0
    while done < n:
        m = min(block, n - done)
        yield law.sample(rng, m)
        done += m


def walk_from_increments(h) -> np.ndarray:
    """Prefix sums ``S_0 = 0, S_n = h_1 + ... + h_n``."""
    h = np.asarray(h, dtype=float)
    s = np.empty(h.size + 1)
    s[0] = 0.0
    np.cumsum(h, out=s[1:])
    return s
