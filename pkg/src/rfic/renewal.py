"""Ladder variables, renewal functions and the expansion constants.

Conventions: everything takes field units (h, S, Gamma = 2J) except the
Lindley / renewal-CDF / patched-measure block, which works on the doubled
walk T = 2S with steps z = 2h. Those functions build the doubled law
internally via ``law.dilated(2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import _kernels as K
from .disorder import DisorderLaw, as_stream
from .extrema import decompose, environment_functionals
from .maxenergy import x_chain_path
from .stats import Estimate, combined_z, from_samples, map_replicas, ratio_estimate

EPOCH_CAP = 10 ** 9
_SAT = float(2 ** 62)


# ---------------------------------------------------------------- ladders

@dataclass(frozen=True)
class LadderSample:
    direction: str
    mode: str
    height: float
    epoch: int


@dataclass(frozen=True)
class LadderSamples:
    """Columnar ladder records. Epochs are saturated at 2**62."""
    direction: str
    mode: str
    heights: np.ndarray
    epochs: np.ndarray

    def __len__(self):
        return self.heights.size

    def __iter__(self):
        for h, e in zip(self.heights, self.epochs):
            yield LadderSample(self.direction, self.mode, float(h), int(e))


def _gauss_ladder(sig, n, rng):
    """Strict ascending ladder records of a N(0, sig^2) walk, sampled
    exactly by embedding the walk in Brownian motion at integer times: from
    level -y the motion needs y^2/(sig Z)^2 time to come back to 0, and the
    next integer time sees a fresh N(0, sig^2 r) value."""
    H = np.empty(n)
    E = np.empty(n)
    idx = np.arange(n)
    y = np.zeros(n)
    t = np.zeros(n)
    while idx.size:
        m = idx.size
        z = rng.standard_normal(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = np.where(y > 0, (y / (sig * z)) ** 2, 0.0)
        big = ~(tau <= 2.0 ** 50)
        tau = np.where(big, 0.0, tau)
        fl = np.floor(tau)
        r = 1.0 - (tau - fl)
        if big.any():
            r[big] = 1.0 - rng.random(int(big.sum()))
            fl[big] = _SAT
        t = np.minimum(t + fl + 1.0, _SAT)
        w = rng.standard_normal(m) * (sig * np.sqrt(r))
        done = w > 0
        H[idx[done]] = w[done]
        E[idx[done]] = t[done]
        keep = ~done
        idx, y, t = idx[keep], -w[keep], t[keep]
    return H, E


def _laplace_ladder(b, n, rng):
    """Laplace(b) is N(0, V) with V ~ Exp(mean 2b^2): the walk is Brownian
    motion read at Poisson times, which again allows exact skipping."""
    H = np.empty(n)
    E = np.empty(n)
    idx = np.arange(n)
    y = np.zeros(n)
    t = np.zeros(n)
    rate = 1.0 / (2.0 * b * b)
    while idx.size:
        m = idx.size
        z = rng.standard_normal(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = np.where(y > 0, (y / z) ** 2, 0.0)
        lam = np.where(np.isfinite(tau), tau * rate, _SAT)
        small = lam < 1e15
        cnt = np.empty(m)
        cnt[small] = rng.poisson(lam[small])
        nb = int((~small).sum())
        if nb:
            lb = lam[~small]
            cnt[~small] = np.maximum(np.round(lb + np.sqrt(lb) * rng.standard_normal(nb)), 0.0)
        t = np.minimum(t + cnt + 1.0, _SAT)
        gap = rng.exponential(2.0 * b * b, m)
        w = rng.standard_normal(m) * np.sqrt(gap)
        done = w > 0
        H[idx[done]] = w[done]
        E[idx[done]] = t[done]
        keep = ~done
        idx, y, t = idx[keep], -w[keep], t[keep]
    return H, E


def _log_u2k(k):
    """log P(simple walk has not gone above 0 in 2k-1 steps) = log C(2k,k)/4^k."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    s = k <= 1e4
    ks = k[s]
    out[s] = gammaln(2 * ks + 1) - 2 * gammaln(ks + 1) - 2 * ks * math.log(2)
    kb = k[~s]
    out[~s] = (-0.5 * np.log(math.pi * kb)
               + np.log1p(-1 / (8 * kb) + 1 / (128 * kb ** 2) + 5 / (1024 * kb ** 3)))
    return out


def _srw_epochs(n, rng):
    """Strict ladder epochs of the simple walk: 2K-1 with P(K > k) = u_{2k}."""
    lu = np.log(1.0 - rng.random(n))
    lo = np.zeros(n)
    hi = np.full(n, 2.0 ** 61)
    sat = _log_u2k(hi) > lu
    for _ in range(64):
        mid = np.floor((lo + hi) / 2)
        ok = _log_u2k(np.maximum(mid, 1)) <= lu
        hi = np.where(ok & (mid >= 1), mid, hi)
        lo = np.where(ok & (mid >= 1), lo, mid)
        if np.all(hi - lo <= 1):
            break
    ep = 2 * hi - 1
    ep[sat] = _SAT
    return ep


def _rademacher_ladder(a, n, rng, weak):
    if not weak:
        return np.full(n, float(a)), _srw_epochs(n, rng)
    up = rng.random(n) < 0.5
    H = np.where(up, float(a), 0.0)
    E = np.ones(n)
    m = int((~up).sum())
    E[~up] = np.minimum(1.0 + _srw_epochs(m, rng), _SAT)
    return H, E


def _direct_ladder(law, n, rng, weak, cap, block=1 << 16, drop=False):
    """Step-by-step simulation. With ``drop`` the walks reaching ``cap`` are
    discarded, which samples the law conditioned on epoch < cap."""
    H = np.empty(n)
    E = np.empty(n)
    st = np.zeros(3)
    while st[2] < n:
        h = law.sample(rng, block)
        if K.ladder_walk_block(h, weak, st, H, E, float(cap), drop):
            raise RuntimeError(
                f"ladder epoch reached the cap of {cap:.3g} steps for {law.spec} "
                f"after {int(st[2])} completed samples; rerun with a different seed or a larger cap")
    return H, E


def ladder_samples(law: DisorderLaw, direction: str = "ascending", mode: str = "strict",
                   n: int = 1, stream=0, cap: float = EPOCH_CAP) -> LadderSamples:
    """Independent first-passage records of fresh walks.

    ascending: first n >= 1 with S_n > 0 (strict) or S_n >= 0 (weak), height S_n.
    descending: the same for -S. Gaussian, Laplace and Rademacher laws use
    exact samplers that skip the excursion below 0; other laws step the walk
    directly and raise once an epoch reaches ``cap``."""
    if direction not in ("ascending", "descending"):
        raise ValueError("direction must be 'ascending' or 'descending'")
    if mode not in ("strict", "weak"):
        raise ValueError("mode must be 'strict' or 'weak'")
    if n < 1:
        raise ValueError("n must be >= 1")
    walk = law if direction == "ascending" else law.negated()
    rng = as_stream(stream).generator()
    weak = mode == "weak"
    if walk.kind == "gaussian":
        H, E = _gauss_ladder(walk.param, n, rng)
    elif walk.kind == "laplace":
        H, E = _laplace_ladder(walk.param, n, rng)
    elif walk.kind == "rademacher":
        H, E = _rademacher_ladder(walk.param, n, rng, weak)
    else:
        H, E = _direct_ladder(walk, n, rng, weak and not walk.continuous, cap)
    return LadderSamples(direction, mode, H, E.astype(np.int64))


# ---------------------------------------------------------------- kappa hat

@dataclass(frozen=True)
class KappaHat:
    strict: Estimate
    weak: Estimate
    c_left: Estimate
    c_right: Estimate

    @property
    def mean(self):
        return self.strict.mean

    @property
    def stderr(self):
        return self.strict.stderr


def _half_sum(a: Estimate, b: Estimate, seed):
    return Estimate(0.5 * (a.mean + b.mean), 0.5 * math.hypot(a.stderr, b.stderr),
                    min(a.n_samples, b.n_samples), seed)


def kappa_hat(law: DisorderLaw, n_samples: int, stream=0, cap: float = EPOCH_CAP) -> KappaHat:
    """1/2 (E[H_asc^2]/E[H_asc] + E[H_desc^2]/E[H_desc]) from strict ladder
    heights, plus the same expression on weak ladder heights, each on its
    own sub-stream."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if n_samples < 10 ** 4:
        warnings.warn("kappa_hat with fewer than 1e4 samples has an unreliable error bar",
                      RuntimeWarning, stacklevel=2)
    s = as_stream(stream)
    parts = []
    for i, (d, m) in enumerate([("ascending", "strict"), ("descending", "strict"),
                                ("ascending", "weak"), ("descending", "weak")]):
        H = ladder_samples(law, d, m, n_samples, s.split(i), cap).heights
        parts.append(ratio_estimate(H * H, H, s.seed))
    return KappaHat(_half_sum(parts[0], parts[1], s.seed), _half_sum(parts[2], parts[3], s.seed),
                    parts[0], parts[1])


# ---------------------------------------------------------------- kappa tilde

@dataclass(frozen=True)
class KappaTilde:
    gamma: float
    inner: Estimate
    full: Estimate


def environment_samples(law: DisorderLaw, gamma: float, n_envs: int, stream=0,
                        walk_len: int | None = None):
    """Log-sum functionals of ``n_envs`` environments around Gamma-minima,
    collected from independent walks of bounded length."""
    s = as_stream(stream)
    per = (gamma * gamma) / law.variance()
    if walk_len is None:
        walk_len = int(min(max(2.5 * per * (n_envs + 4), 1 << 14), 1 << 22))
    inner, full = [], []
    got = 0
    i = 0
    while got < n_envs:
        h = law.sample(s.split(i).generator(), walk_len)
        S = np.empty(walk_len + 1)
        S[0] = 0.0
        np.cumsum(h, out=S[1:])
        a, b = environment_functionals(S, decompose(S, gamma))
        inner.append(a)
        full.append(b)
        got += a.size
        i += 1
    return np.concatenate(inner)[:n_envs], np.concatenate(full)[:n_envs]


def kappa_tilde(law: DisorderLaw, gamma_list, n_envs: int, stream=0):
    """For each Gamma: mean of log sum exp(-2 S) over (tau-, tau+) and over
    the whole environment. Returns a list of KappaTilde."""
    gamma_list = [float(g) for g in gamma_list]
    if not gamma_list or min(gamma_list) <= 0:
        raise ValueError("gamma values must be > 0")
    if n_envs < 1:
        raise ValueError("n_envs must be >= 1")
    sd = math.sqrt(law.variance())
    if min(gamma_list) < 4 * sd:
        warnings.warn("Gamma below 4 standard deviations of the field; environment is not deep",
                      RuntimeWarning, stacklevel=2)
    s = as_stream(stream)
    out = []
    for j, g in enumerate(gamma_list):
        a, b = environment_samples(law, g, n_envs, s.split(j))
        out.append(KappaTilde(g, from_samples(a, s.seed), from_samples(b, s.seed)))
    top = max(out, key=lambda r: r.gamma)
    if combined_z(top.inner, top.full) > 1.0:
        warnings.warn(f"inner and full environment functionals differ by more than one combined "
                      f"stderr at Gamma={top.gamma:g}", RuntimeWarning, stacklevel=2)
    return out


# ---------------------------------------------------------------- CDFs

@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step function with jumps ``cum`` at sorted ``points``.

    Beyond ``x_max`` the optional ``tail`` (slope, intercept) line is used."""
    points: np.ndarray
    cum: np.ndarray
    x_max: float = math.inf
    tail: tuple | None = None

    @classmethod
    def from_samples(cls, x, weights=None, x_max=math.inf):
        x = np.asarray(x, dtype=float)
        w = np.full(x.size, 1.0 / x.size) if weights is None else np.asarray(weights, float)
        o = np.argsort(x, kind="stable")
        x, w = x[o], w[o]
        pts, inv = np.unique(x, return_inverse=True)
        mass = np.bincount(inv, weights=w, minlength=pts.size)
        return cls(pts, np.cumsum(mass), x_max)

    @classmethod
    def point_mass(cls, c, mass=1.0):
        return cls(np.array([float(c)]), np.array([float(mass)]))

    @property
    def total(self):
        return float(self.cum[-1]) if self.cum.size else 0.0

    def _eval(self, x, side):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.points, x, side=side) - 1
        v = np.where(i >= 0, self.cum[np.maximum(i, 0)], 0.0)
        if self.tail is not None:
            v = np.where(x > self.x_max, self.tail[0] * x + self.tail[1], v)
        return v if v.ndim else float(v)

    def __call__(self, x):
        return self._eval(x, "right")

    def left(self, x):
        """Left limit F(x-)."""
        return self._eval(x, "left")

    def scaled(self, f):
        tail = None if self.tail is None else (self.tail[0] * f, self.tail[1] * f)
        return EmpiricalCdf(self.points, self.cum * f, self.x_max, tail)

    def with_tail(self, slope, intercept):
        return EmpiricalCdf(self.points, self.cum, self.x_max, (slope, intercept))

    def to_csv(self, grid):
        rows = ["x,F"] + [f"{x!r},{v!r}" for x, v in zip(map(float, grid), map(float, self(grid)))]
        return "\r\n".join(rows) + "\r\n"


def wasserstein_1(a: EmpiricalCdf, b: EmpiricalCdf) -> float:
    """Integral of |F_a - F_b| by exact piecewise summation."""
    if not math.isclose(a.total, b.total, rel_tol=1e-9):
        raise ValueError("measures must have equal total mass")
    x = np.union1d(a.points, b.points)
    if x.size < 2:
        return 0.0
    d = np.abs(a(x[:-1]) - b(x[:-1]))
    return float(np.sum(d * np.diff(x)))


# ---------------------------------------------------------------- Lindley / renewal (T-units)

def lindley_step(y: float, z_next: float) -> float:
    if y < 0:
        raise ValueError("Lindley state must be >= 0")
    return max(y + z_next, 0.0)


def renewal_partial_sums(law: DisorderLaw, direction: str, x_max: float, n_chains: int, stream=0):
    """Partial sums H_1, H_1+H_2, ... <= x_max of T-unit strict ladder
    heights for ``n_chains`` independent chains (the k=0 term excluded)."""
    zlaw = law.dilated(2.0)
    s = as_stream(stream)
    pos = np.zeros(n_chains)
    active = np.arange(n_chains)
    out = []
    rnd = 0
    while active.size:
        H = ladder_samples(zlaw, direction, "strict", active.size, s.split(rnd)).heights
        pos[active] += H
        ok = pos[active] <= x_max
        out.append(pos[active[ok]])
        active = active[ok]
        rnd += 1
    return np.concatenate(out) if out else np.empty(0)


def renewal_cdf_raw(law, direction, x_max, n_chains, stream=0) -> EmpiricalCdf:
    """sum_{k>=0} P[H_1 + ... + H_k <= x] on [0, x_max] (value 1 at x = 0)."""
    ps = renewal_partial_sums(law, direction, x_max, n_chains, stream)
    pts = np.concatenate([np.zeros(n_chains), ps])
    counts = EmpiricalCdf.from_samples(pts, np.ones(pts.size))
    # integer counts divided once, so whole-number values stay exact
    return EmpiricalCdf(counts.points, counts.cum / n_chains, x_max)


@dataclass(frozen=True)
class AsymptoteFit:
    slope: float
    intercept: float
    max_residual: float
    window: tuple

    @property
    def ratio(self):
        return self.intercept / self.slope


def default_window(law: DisorderLaw):
    lo = 5.0 * math.sqrt(law.dilated(2.0).variance())
    return (lo, 2.5 * lo)


def asymptote_fit(cdf, fit_window, n_grid: int = 2001) -> AsymptoteFit:
    """Least-squares line through ``cdf`` on a dense grid over the window."""
    lo, hi = map(float, fit_window)
    if not hi > lo:
        raise ValueError("fit window must satisfy x_lo < x_hi")
    x = np.linspace(lo, hi, n_grid)
    y = np.asarray(cdf(x), dtype=float)
    slope, icpt = np.polyfit(x, y, 1)
    res = float(np.max(np.abs(y - (slope * x + icpt))))
    span = float(y.max() - y.min()) or 1.0
    if res > 0.02 * span:
        warnings.warn(f"asymptote fit residual {res:.3g} exceeds 2% of the range on "
                      f"[{lo:g}, {hi:g}]; window may not be in the linear regime",
                      RuntimeWarning, stacklevel=2)
    return AsymptoteFit(float(slope), float(icpt), res, (lo, hi))


def lindley_cdf_renewal(law: DisorderLaw, x_grid, n_samples: int, stream=0, direction="ascending",
                        fit_window=None) -> EmpiricalCdf:
    """Renewal CDF of T-unit strict ladder heights, rescaled to unit slope on
    the fit window; carries its fitted line as the tail beyond x_max."""
    x_grid = np.asarray(x_grid, dtype=float)
    window = tuple(fit_window) if fit_window is not None else default_window(law)
    x_max = max(float(x_grid.max()), window[1])
    raw = renewal_cdf_raw(law, direction, x_max, n_samples, stream)
    fit = asymptote_fit(raw, window)
    out = raw.scaled(1.0 / fit.slope)
    return out.with_tail(1.0, fit.intercept / fit.slope)


def renewal_constant(law: DisorderLaw, direction: str, n_chains: int, stream=0, window=None,
                     batches: int = 16) -> Estimate:
    """Intercept/slope of the renewal CDF asymptote (T-units), with an error
    bar from independent batches."""
    window = tuple(window) if window is not None else default_window(law)
    s = as_stream(stream)
    per = max(n_chains // batches, 1)
    vals = []
    for b in range(batches):
        raw = renewal_cdf_raw(law, direction, window[1], per, s.split(b))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            vals.append(asymptote_fit(raw, window).ratio)
    return from_samples(vals, s.seed)


def kappa_hat_2(law: DisorderLaw, n_chains: int, stream=0, window=None, batches: int = 16) -> Estimate:
    """(c_left + c_right)/2 from the two renewal asymptotes."""
    s = as_stream(stream)
    a = renewal_constant(law, "ascending", n_chains, s.split(0), window, batches)
    b = renewal_constant(law, "descending", n_chains, s.split(1), window, batches)
    return _half_sum(a, b, s.seed)


@dataclass(frozen=True)
class OccupationCdf:
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


def lindley_occupation(law: DisorderLaw, x_grid, n_steps: int, replicas: int, stream=0,
                       threads=None, block: int = 1 << 18) -> OccupationCdf:
    """Occupation of [0, x] by a long Lindley run started at 0, divided by the
    number of visits to 0 (T-units). Estimates the same renewal CDF."""
    zlaw = law.dilated(2.0)
    edges = np.unique(np.concatenate([[0.0], np.asarray(x_grid, dtype=float)]))
    s = as_stream(stream)

    def one(r):
        rng = s.split(r).generator()
        st = np.zeros(2)
        counts = np.zeros(edges.size)
        done = 0
        while done < n_steps:
            m = min(block, n_steps - done)
            K.lindley_block(zlaw.sample(rng, m), st, edges, counts)
            done += m
        return np.cumsum(counts) / max(st[1], 1.0)

    res = np.array(map_replicas(one, replicas, threads))
    se = res.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros(edges.size)
    return OccupationCdf(edges, res.mean(axis=0), se)


# ---------------------------------------------------------------- patched measure

@dataclass(frozen=True)
class PatchedMeasure:
    """CDF on [-Gamma, Gamma] glued from the two renewal CDFs (T-units)."""
    gamma: float
    F_left: EmpiricalCdf
    F_right: EmpiricalCdf
    C: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        g = self.gamma
        lo = self.F_left(np.minimum(x, 0.0) + g) / self.C
        hi = 1.0 - self.F_right.left(g - np.maximum(x, 0.0)) / self.C
        v = np.where(x < -g, 0.0, np.where(x <= 0, lo, np.where(x >= g, 1.0, hi)))
        return v if v.ndim else float(v)

    def breakpoints(self):
        g = self.gamma
        a = self.F_left.points
        b = self.F_right.points
        left = a[a <= g] - g
        right = g - b[b <= g]
        return np.unique(np.concatenate([left, right, [-g, 0.0, g]]))


def patched_measure(F_left: EmpiricalCdf, F_right: EmpiricalCdf, gamma: float) -> PatchedMeasure:
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    C = float(F_left(gamma) + F_right(gamma))
    if not C > 0:
        raise ValueError(f"normalisation C_Gamma must be > 0, got {C}")
    return PatchedMeasure(float(gamma), F_left, F_right, C)


@dataclass(frozen=True)
class Functional:
    value: float
    abs_tol: float


def m_gamma_functional(nu, law: DisorderLaw, gamma: float) -> Functional:
    """Integral of F_nu(z - Gamma) P[zeta <= -z] dz, zeta = 2h.

    ``nu`` is piecewise constant, so the integral is an exact sum of
    increments of Psi(a) = E[(W - a)^+] with W = -zeta."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    W = law.dilated(2.0).negated()
    b = nu.breakpoints() if isinstance(nu, PatchedMeasure) else np.asarray(nu.points, dtype=float)
    c = np.asarray(nu(b), dtype=float)
    psi = W.upper_partial_mean(b + gamma)
    seg = c[:-1] * (psi[:-1] - psi[1:])
    total = float(seg.sum() + c[-1] * psi[-1])
    tol = 4 * np.finfo(float).eps * (float(np.abs(seg).sum()) + abs(c[-1] * psi[-1]) + 1.0)
    return Functional(total, tol)


def kappa_hat_1(F_left: EmpiricalCdf, law: DisorderLaw) -> float:
    """1/2 integral over y > 0 of F_left(y) P[zeta <= -y] dy (T-units); the
    fitted tail line of F_left is used beyond its x_max."""
    W = law.dilated(2.0).negated()
    xm = F_left.x_max
    pts = F_left.points[F_left.points <= xm]
    b = np.concatenate([pts, [xm]]) if math.isfinite(xm) else pts
    c = np.asarray(F_left(b), dtype=float)
    psi = W.upper_partial_mean(b)
    body = float(np.sum(c[:-1] * (psi[:-1] - psi[1:])))
    if math.isfinite(xm) and F_left.tail is not None:
        sl, ic = F_left.tail
        tail, _ = integrate.quad(lambda y: (sl * y + ic) * (1.0 - W.cdf(y)), xm, np.inf,
                                 epsabs=1e-12, limit=200)
    else:
        tail = float(c[-1] * psi[-1])
    return 0.5 * (body + tail)


# ---------------------------------------------------------------- contraction

def coupled_distance(law: DisorderLaw, J: float, n_steps: int, replicas: int, stream=0):
    """Mean |X_n - X'_n| over replicas for X-chains started at +2J and -2J
    with shared increments; also returns each replica's coalescence time."""
    s = as_stream(stream)
    acc = np.zeros(n_steps + 1)
    meet = np.empty(replicas, dtype=np.int64)
    for r in range(replicas):
        h = law.sample(s.split(r).generator(), n_steps)
        a = x_chain_path(h, J, 2.0 * J)
        b = x_chain_path(h, J, -2.0 * J)
        d = np.abs(a - b)
        acc += d
        z = np.flatnonzero(d == 0)
        meet[r] = z[0] if z.size else -1
    return acc / replicas, meet
