"""Exhaustive-enumeration cross-checks of the fast recursions on short chains."""
from __future__ import annotations

from dataclasses import dataclass

from scipy.special import logsumexp

from .disorder import DisorderLaw, SeededStream, parse_law
from .maxenergy import max_energy
from .transfer import ALL_BC, all_energies, log_partition

GRID_LAWS = ("gaussian:1", "laplace:1", "rademacher:1")
GRID_J = (0.5, 1.0, 2.0)


@dataclass
class OracleResult:
    n_checked: int = 0
    worst_logz_rel: float = 0.0
    worst_max_abs: float = 0.0
    failures: int = 0

    @property
    def ok(self):
        return self.failures == 0


def check_instances(h, J, res: OracleResult, rtol=1e-10, atol=1e-12, chunk=25):
    """Compare every row of ``h`` (B, N) against enumeration, all four
    boundary conditions."""
    for s in range(0, h.shape[0], chunk):
        hb = h[s:s + chunk]
        _, E = all_energies(hb, J)
        lz = logsumexp(E, axis=2)
        mx = E.max(axis=2)
        for i, row in enumerate(hb):
            for b, bc in enumerate(ALL_BC):
                a = log_partition(row, J, bc).value
                rel = abs(a - lz[b, i]) / max(1.0, abs(lz[b, i]))
                m = abs(max_energy(row, J, bc) - mx[b, i])
                res.worst_logz_rel = max(res.worst_logz_rel, rel)
                res.worst_max_abs = max(res.worst_max_abs, m)
                res.failures += (rel > rtol) + (m > atol)
                res.n_checked += 1
    return res


def oracle_grid(seed: int = 1, instances: int = 200, laws=GRID_LAWS, Js=GRID_J, N_max: int = 16,
                progress=None) -> OracleResult:
    res = OracleResult()
    root = SeededStream(int(seed))
    for li, spec in enumerate(laws):
        law = spec if isinstance(spec, DisorderLaw) else parse_law(spec)
        for ji, J in enumerate(Js):
            if progress:
                progress(f"oracle {law.spec} J={J:g}")
            for N in range(1, N_max + 1):
                rng = root.split(li).split(ji).split(N).generator()
                h = law.sample(rng, instances * N).reshape(instances, N)
                check_instances(h, J, res)
    return res
