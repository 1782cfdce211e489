"""J-sweeps: every estimator on split seeds, the expansion residuals, and
report serialisation (CSV, canonical JSON, plot triplets)."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import warnings
from dataclasses import dataclass

from .disorder import DisorderLaw, SeededStream, parse_law
from .extrema import stretch_max_energy
from .maxenergy import joint_densities
from .renewal import kappa_hat, kappa_tilde
from .stats import Estimate, combined_z, from_samples

SCHEMA = "rfic.sweep/1"
CSV_COLUMNS = ["J", "F_hat", "F_se", "M_dp", "M_dp_se", "M_ergodic", "M_ergodic_se",
               "M_stretch", "M_stretch_se", "kappa_eff_F", "kappa_eff_M",
               "diff_scaled", "diff_scaled_se", "seed"]


@dataclass(frozen=True)
class Budget:
    N: int = 10 ** 7
    replicas: int = 32
    n_ladder: int = 10 ** 5
    n_envs: int = 4000
    K: int = 2000
    burn_in: int | None = None

    def as_dict(self):
        return {"N": self.N, "replicas": self.replicas, "n_ladder": self.n_ladder,
                "n_envs": self.n_envs, "K": self.K, "burn_in": self.burn_in}


def _est(d):
    return Estimate(float(d["mean"]), float(d["stderr"]), int(d["n_samples"]), int(d["seed"]))


@dataclass(frozen=True)
class SweepRow:
    J: float
    theta2: float
    F_hat: Estimate
    M_hat_dp: Estimate
    M_hat_ergodic: Estimate
    M_hat_stretch: Estimate
    diff: Estimate  # F - M_dp, paired over replicas

    @property
    def kappa_eff_F(self):
        return self.theta2 / self.F_hat.mean - 2 * self.J

    @property
    def kappa_eff_F_se(self):
        return self.theta2 * self.F_hat.stderr / self.F_hat.mean ** 2

    @property
    def kappa_eff_M(self):
        return self.theta2 / self.M_hat_dp.mean - 2 * self.J

    @property
    def kappa_eff_M_se(self):
        return self.theta2 * self.M_hat_dp.stderr / self.M_hat_dp.mean ** 2

    @property
    def diff_scaled(self):
        return self.diff.mean * (2 * self.J) ** 2 / self.theta2

    @property
    def diff_scaled_se(self):
        return self.diff.stderr * (2 * self.J) ** 2 / self.theta2

    def csv_row(self):
        return [self.J, self.F_hat.mean, self.F_hat.stderr, self.M_hat_dp.mean, self.M_hat_dp.stderr,
                self.M_hat_ergodic.mean, self.M_hat_ergodic.stderr, self.M_hat_stretch.mean,
                self.M_hat_stretch.stderr, self.kappa_eff_F, self.kappa_eff_M, self.diff_scaled,
                self.diff_scaled_se, self.F_hat.seed]

    def to_dict(self):
        return {"J": self.J, "theta2": self.theta2, "F_hat": self.F_hat.as_dict(),
                "M_hat_dp": self.M_hat_dp.as_dict(), "M_hat_ergodic": self.M_hat_ergodic.as_dict(),
                "M_hat_stretch": self.M_hat_stretch.as_dict(), "diff": self.diff.as_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["J"]), float(d["theta2"]), _est(d["F_hat"]), _est(d["M_hat_dp"]),
                   _est(d["M_hat_ergodic"]), _est(d["M_hat_stretch"]), _est(d["diff"]))


@dataclass(frozen=True)
class ExpansionReport:
    law: str
    master_seed: int
    budget: Budget
    rows: tuple
    kappa_hat: Estimate
    kappa_hat_weak: Estimate
    kappa_tilde: Estimate
    kappa_tilde_inner: Estimate
    kappa_tilde_gamma: float
    warnings: tuple = ()

    @property
    def kappa(self) -> Estimate:
        return self.kappa_hat - self.kappa_tilde

    def verdicts(self):
        """(name, passed, detail) for each check the sweep can decide."""
        out = []
        for r in self.rows:
            pairs = [("dp", r.M_hat_dp), ("ergodic", r.M_hat_ergodic), ("stretch", r.M_hat_stretch)]
            worst = max(combined_z(a, b) for i, (_, a) in enumerate(pairs) for _, b in pairs[i + 1:])
            out.append((f"M coherence J={r.J:g}", worst <= 3, f"max pairwise z={worst:.2f}"))
            gap = (r.F_hat.mean - r.M_hat_dp.mean) / max(r.F_hat.stderr, 1e-300)
            out.append((f"F >= M J={r.J:g}", gap >= -3, f"(F-M)/se_F={gap:.2f}"))
        last = self.rows[-1]
        k = self.kappa
        tol = max(0.5, 3 * math.hypot(last.kappa_eff_F_se, k.stderr))
        dev = abs(last.kappa_eff_F - k.mean)
        out.append((f"kappa: theta2/F - 2J at J={last.J:g} vs kappa_hat - kappa_tilde",
                    dev <= tol, f"{last.kappa_eff_F:.4f} vs {k.mean:.4f} (|d|={dev:.3f}, tol={tol:.3f})"))
        return out

    def to_dict(self):
        return {"schema": SCHEMA, "law": self.law, "master_seed": self.master_seed,
                "budget": self.budget.as_dict(), "rows": [r.to_dict() for r in self.rows],
                "kappa_hat": self.kappa_hat.as_dict(), "kappa_hat_weak": self.kappa_hat_weak.as_dict(),
                "kappa_tilde": self.kappa_tilde.as_dict(),
                "kappa_tilde_inner": self.kappa_tilde_inner.as_dict(),
                "kappa_tilde_gamma": self.kappa_tilde_gamma, "warnings": list(self.warnings)}

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        return cls(d["law"], int(d["master_seed"]), Budget(**d["budget"]),
                   tuple(SweepRow.from_dict(r) for r in d["rows"]), _est(d["kappa_hat"]),
                   _est(d["kappa_hat_weak"]), _est(d["kappa_tilde"]), _est(d["kappa_tilde_inner"]),
                   float(d["kappa_tilde_gamma"]), tuple(d["warnings"]))

    def summary(self):
        lines = [f"law {self.law}  seed {self.master_seed}",
                 f"kappa_hat   = {self.kappa_hat}",
                 f"kappa_tilde = {self.kappa_tilde}  (Gamma={self.kappa_tilde_gamma:g}; inner {self.kappa_tilde_inner})",
                 f"kappa       = {self.kappa}"]
        for r in self.rows:
            lines.append(f"J={r.J:g}: F={r.F_hat}  M={r.M_hat_dp}  kappa_eff_F={r.kappa_eff_F:.4f}"
                         f"  kappa_eff_M={r.kappa_eff_M:.4f}  diff_scaled={r.diff_scaled:.4f}")
        for name, ok, detail in self.verdicts():
            lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines)


def sweep_row(law: DisorderLaw, J: float, budget: Budget, stream: SeededStream, threads=None) -> SweepRow:
    jd = joint_densities(law, J, budget.N, budget.replicas, stream.split(0), budget.burn_in, threads)
    F, Mdp, Merg = jd.estimates()
    diff = from_samples(jd.F - jd.M_dp, stream.seed)
    Mst = stretch_max_energy(law, J, budget.K, budget.replicas, stream.split(1), threads)
    return SweepRow(float(J), law.variance(), F, Mdp, Merg, Mst, diff)


def run_sweep(law, J_list, budget: Budget = Budget(), master_seed: int = 0, threads=None,
              progress=None) -> ExpansionReport:
    """Every estimator at every J, on sub-streams of ``master_seed``."""
    if isinstance(law, str):
        law = parse_law(law)
    J_list = [float(j) for j in J_list]
    if len(J_list) < 2:
        raise ValueError("J_list needs at least two values")
    if any(b <= a for a, b in zip(J_list, J_list[1:])):
        raise ValueError("J_list must be strictly increasing")
    if min(J_list) <= 0:
        raise ValueError("J values must be > 0")
    root = SeededStream(int(master_seed))
    caught = []
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        rows = []
        for i, J in enumerate(J_list):
            if progress:
                progress(f"J={J:g}")
            rows.append(sweep_row(law, J, budget, root.split(i), threads))
        if progress:
            progress("kappa_hat")
        kh = kappa_hat(law, budget.n_ladder, root.split(1000))
        gamma = 2.0 * max(J_list)
        if progress:
            progress("kappa_tilde")
        kt = kappa_tilde(law, [gamma], budget.n_envs, root.split(1001))[0]
        caught = [str(x.message) for x in w]
    return ExpansionReport(law.spec, int(master_seed), budget, tuple(rows), kh.strict, kh.weak,
                           kt.full, kt.inner, gamma, tuple(dict.fromkeys(caught)))


def sweep_hash(report: ExpansionReport) -> str:
    key = json.dumps({"law": report.law, "J": [r.J for r in report.rows],
                      "budget": report.budget.as_dict(), "seed": report.master_seed},
                     sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(key.encode()).hexdigest()[:12]


def to_json(report: ExpansionReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)


def from_json(text: str) -> ExpansionReport:
    return ExpansionReport.from_dict(json.loads(text))


def to_csv(report: ExpansionReport) -> str:
    out = io.StringIO()
    out.write(f"#schema={SCHEMA}\r\n")
    w = csv.writer(out, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r.csv_row()])
    return out.getvalue()


def to_plotdata(report: ExpansionReport) -> str:
    series = {
        "two_J_F": [(r.J, 2 * r.J * r.F_hat.mean, 2 * r.J * r.F_hat.stderr) for r in report.rows],
        "kappa_eff_F": [(r.J, r.kappa_eff_F, r.kappa_eff_F_se) for r in report.rows],
        "kappa_eff_M": [(r.J, r.kappa_eff_M, r.kappa_eff_M_se) for r in report.rows],
        "diff_scaled": [(r.J, r.diff_scaled, r.diff_scaled_se) for r in report.rows],
    }
    lines = [f"#schema={SCHEMA}/plotdata", "series,J,value,err"]
    for name, pts in series.items():
        lines += [f"{name},{j!r},{v!r},{e!r}" for j, v, e in pts]
    return "\r\n".join(lines) + "\r\n"


def emit(report: ExpansionReport, fmt: str = "csv", out_dir: str = ".") -> str:
    """Write ``<law>_<hash>.<ext>`` into out_dir and return the path."""
    writers = {"csv": (to_csv, "csv"), "json": (to_json, "json"), "plotdata": (to_plotdata, "plot.csv")}
    if fmt not in writers:
        raise ValueError(f"unknown format {fmt!r}; expected csv, json or plotdata")
    fn, ext = writers[fmt]
    name = report.law.replace(":", "-")
    path = os.path.join(out_dir, f"{name}_{sweep_hash(report)}.{ext}")
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(fn(report))
    except OSError as e:
        raise OSError(f"cannot write report to {path}: {e.strerror or e}") from e
    return path
