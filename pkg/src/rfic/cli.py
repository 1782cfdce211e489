"""Command-line front end: ``rfic <subcommand> [flags]``.

Exit status is 0 on success, 2 on a usage error and 1 when a computation
fails. Results go to stdout (or ``--out``), progress to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .disorder import DisorderLaw, SeededStream, parse_law
from .extrema import stream_records, stretch_arrays, stretch_max_energy
from .harness import Budget, emit, run_sweep, to_csv, to_json
from .maxenergy import ergodic_max_energy, joint_densities
from .oracle import oracle_grid
from .renewal import asymptote_fit, default_window, kappa_hat, kappa_tilde, renewal_cdf_raw
from .stats import Estimate, ratio_estimate, set_threads
from .transfer import free_energy_estimate


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- flag types

def _law(text):
    try:
        return parse_law(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _count(text):
    """Non-negative integer; accepts ``1e7`` and ``100000``."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v != int(v) or v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(v)


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be a finite number > 0, got {text!r}")
    return v


def _positive_list(text):
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty list")
    return [_positive(p.strip()) for p in parts]


def _seed(text):
    v = _count(text)
    if v >= 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _pair(text):
    v = _positive_list(text)
    if len(v) != 2 or not v[0] < v[1]:
        raise argparse.ArgumentTypeError(f"expected lo,hi with lo < hi, got {text!r}")
    return tuple(v)


# ---------------------------------------------------------------- parser

@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    config_keys: list = field(default_factory=list)

    def __getattr__(self, name):
        return getattr(self.args, name)


def _common(p, law=True):
    if law:
        p.add_argument("--law", type=_law, help="gaussian:SIGMA | rademacher:A | laplace:B | uniform:A | logistic_sech")
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument("--threads", type=_count, default=None, help="worker threads (default: all cores)")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")


def build_parser():
    ap = argparse.ArgumentParser(prog="rfic", description="Random-field Ising chain estimators.")
    ap.add_argument("--version", action="version", version=f"rfic {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    leaves = {}

    p = sub.add_parser("free-energy", help="transfer-matrix free energy density")
    _common(p)
    p.add_argument("--J", type=_positive)
    p.add_argument("--N", type=_count, default="1e7")
    p.add_argument("--replicas", type=_count, default="32")
    leaves["free-energy"] = p

    p = sub.add_parser("max-energy", help="maximal energy density (dp, ergodic, stretch)")
    _common(p)
    p.add_argument("--J", type=_positive)
    p.add_argument("--N", type=_count, default="1e7")
    p.add_argument("--K", type=_count, default="2000", help="stretch pairs per replica")
    p.add_argument("--replicas", type=_count, default="32")
    p.add_argument("--burn-in", type=_count, default=None)
    p.add_argument("--method", choices=("dp", "ergodic", "stretch", "all"), default="all")
    leaves["max-energy"] = p

    p = sub.add_parser("extrema-stats", help="stretch samples between Gamma-extrema")
    _common(p)
    p.add_argument("--gamma", type=_positive)
    p.add_argument("--K", type=_count, default="2000", help="stretch pairs")
    leaves["extrema-stats"] = p

    p = sub.add_parser("constants", help="expansion constants")
    csub = p.add_subparsers(dest="which", metavar="CONSTANT")
    q = csub.add_parser("kappa-hat", help="ladder-height constant")
    _common(q)
    q.add_argument("--n", type=_count, default="1e5", help="ladder samples per direction and mode")
    leaves["constants kappa-hat"] = q
    q = csub.add_parser("kappa-tilde", help="environment constant")
    _common(q)
    q.add_argument("--gamma", type=_positive_list, default="8,12")
    q.add_argument("--n-envs", type=_count, default="4000")
    leaves["constants kappa-tilde"] = q
    leaves["constants"] = p

    p = sub.add_parser("lindley-cdf", help="renewal CDF of doubled ladder heights")
    _common(p)
    p.add_argument("--n", type=_count, default="1e5", help="renewal chains")
    p.add_argument("--x-max", type=_positive, default=None, help="grid end (default: fit window end)")
    p.add_argument("--points", type=_count, default="201")
    p.add_argument("--direction", choices=("ascending", "descending"), default="ascending")
    p.add_argument("--window", type=_pair, default=None, help="asymptote fit window lo,hi")
    leaves["lindley-cdf"] = p

    p = sub.add_parser("sweep", help="all estimators over a list of J")
    _common(p)
    p.add_argument("--J", type=_positive_list)
    p.add_argument("--N", type=_count, default="1e7")
    p.add_argument("--replicas", type=_count, default="32")
    p.add_argument("--n-ladder", type=_count, default="1e5")
    p.add_argument("--n-envs", type=_count, default="4000")
    p.add_argument("--K", type=_count, default="2000")
    p.add_argument("--burn-in", type=_count, default=None)
    leaves["sweep"] = p

    p = sub.add_parser("selftest", help="brute-force oracle grids for N <= 16")
    _common(p, law=False)
    p.add_argument("--instances", type=_count, default="200")
    leaves["selftest"] = p
    return ap, leaves


def _leaf_key(ns):
    if ns.command == "constants":
        return f"constants {ns.which}" if getattr(ns, "which", None) else "constants"
    return ns.command


def _config_value(v):
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    if isinstance(v, (int, float, str)) and not isinstance(v, bool):
        return str(v)
    raise UsageError(f"config value {v!r} must be a number, string or list")


def _apply_config(leaf, path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise UsageError(f"--config: cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"--config: {path} is not valid JSON ({e.msg})") from None
    if not isinstance(cfg, dict):
        raise UsageError("--config: top level must be an object")
    dests = {a.dest: a for a in leaf._actions if a.option_strings and a.dest not in ("help", "config")}
    defaults = {}
    for k, v in cfg.items():
        d = k.lstrip("-").replace("-", "_")
        if d not in dests:
            raise UsageError(f"--config: unknown key {k!r}")
        defaults[d] = _config_value(v)
    leaf.set_defaults(**defaults)
    return sorted(defaults)


_REQUIRED = {
    "free-energy": ("law", "J"), "max-energy": ("law", "J"), "extrema-stats": ("law", "gamma"),
    "constants kappa-hat": ("law",), "constants kappa-tilde": ("law",), "lindley-cdf": ("law",),
    "sweep": ("law", "J"), "selftest": (),
}


def _validate(key, ns, leaf):
    for name in _REQUIRED[key]:
        if getattr(ns, name, None) is None:
            leaf.error(f"the following arguments are required: --{name.replace('_', '-')}")

    def need(flag, ok, msg):
        if not ok:
            leaf.error(f"argument {flag}: {msg}")

    if hasattr(ns, "replicas"):
        need("--replicas", ns.replicas >= 1, "must be >= 1")
    if key in ("free-energy", "max-energy", "sweep"):
        need("--N", ns.N >= 1000, "must be >= 1000")
    if key in ("max-energy", "extrema-stats", "sweep"):
        need("--K", ns.K >= 100, "must be >= 100")
    if getattr(ns, "burn_in", None) is not None:
        need("--burn-in", ns.burn_in < ns.N, "must be < N")
    if key == "sweep":
        need("--J", len(ns.J) >= 2, "needs at least two values")
        need("--J", all(b > a for a, b in zip(ns.J, ns.J[1:])), "values must be strictly increasing")
        need("--n-ladder", ns.n_ladder >= 2, "must be >= 2")
        need("--n-envs", ns.n_envs >= 1, "must be >= 1")
    if key == "constants kappa-hat":
        need("--n", ns.n >= 2, "must be >= 2")
    if key == "constants kappa-tilde":
        need("--n-envs", ns.n_envs >= 1, "must be >= 1")
    if key == "lindley-cdf":
        need("--n", ns.n >= 1, "must be >= 1")
        need("--points", ns.points >= 2, "must be >= 2")
    if key == "selftest":
        need("--instances", ns.instances >= 1, "must be >= 1")
    if ns.threads is not None:
        need("--threads", ns.threads >= 1, "must be >= 1")
    if key == "sweep" and ns.format == "text" and ns.out:
        leaf.error("argument --format: choose csv or json when writing a report with --out")


def parse_args(argv=None) -> RunConfig:
    """Parse and validate; usage errors exit with status 2."""
    ap, leaves = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = ap.parse_args(argv)
    if ns.command is None:
        ap.error("a subcommand is required")
    key = _leaf_key(ns)
    if key == "constants":
        leaves["constants"].error("choose kappa-hat or kappa-tilde")
    leaf = leaves[key]
    keys = []
    if ns.config:
        try:
            keys = _apply_config(leaf, ns.config)
        except UsageError as e:
            leaf.error(str(e))
        ns = ap.parse_args(argv)
    _validate(key, ns, leaf)
    return RunConfig(key, ns, keys)


# ---------------------------------------------------------------- output

def _progress(msg):
    print(f"[rfic {time.strftime('%H:%M:%S')}] {msg}", file=sys.stderr, flush=True)


def _write(cfg, text):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
        _progress(f"wrote {cfg.out}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _records(cfg, rows, header):
    """rows: list of dicts sharing ``header`` keys."""
    if cfg.format == "json":
        return json.dumps({"command": cfg.command, "law": _law_spec(cfg), "seed": cfg.seed,
                           "rows": rows}, sort_keys=True, allow_nan=False) + "\n"
    if cfg.format == "csv":
        out = io.StringIO()
        w = csv.DictWriter(out, fieldnames=header, lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return out.getvalue()
    lines = []
    for r in rows:
        if "mean" in r:
            ctx = [f"{k}={r[k]:g}" for k in ("J", "gamma") if k in r]
            ctx += [f"n={r['n_samples']}", f"seed={r['seed']}"]
            lines.append(f"{r['quantity']} = {r['mean']:.{_digits(r['stderr'])}f} ± "
                         f"{r['stderr']:.{_digits(r['stderr'])}f}  ({', '.join(ctx)})")
        else:
            lines.append("  ".join(f"{k}={v}" for k, v in r.items()))
    return "\n".join(lines) + "\n"


def _digits(se):
    if not se > 0:
        return 3
    return int(min(max(3, 1 - math.floor(math.log10(se))), 10))


def _law_spec(cfg):
    law = getattr(cfg.args, "law", None)
    return law.spec if isinstance(law, DisorderLaw) else None


def _est_row(quantity, e: Estimate, **extra):
    return {"quantity": quantity, "mean": float(e.mean), "stderr": float(e.stderr),
            "n_samples": int(e.n_samples), "seed": int(e.seed), **extra}


# ---------------------------------------------------------------- commands

def cmd_free_energy(cfg):
    _progress(f"transfer: {cfg.law.spec} J={cfg.J:g} N={cfg.N} replicas={cfg.replicas}")
    e = free_energy_estimate(cfg.law, cfg.J, cfg.N, cfg.replicas, SeededStream(cfg.seed))
    return _records(cfg, [_est_row("F", e, J=cfg.J, N=cfg.N)],
                    ["quantity", "mean", "stderr", "n_samples", "seed", "J", "N"])


def cmd_max_energy(cfg):
    root = SeededStream(cfg.seed)
    rows = []
    extra = dict(J=cfg.J, N=cfg.N)
    if cfg.method in ("dp", "all"):
        _progress(f"dp + ergodic: {cfg.law.spec} J={cfg.J:g} N={cfg.N}")
        jd = joint_densities(cfg.law, cfg.J, cfg.N, cfg.replicas, root.split(0), cfg.burn_in)
        _, mdp, merg = jd.estimates()
        rows.append(_est_row("M_dp", mdp, **extra))
        if cfg.method == "all":
            rows.append(_est_row("M_ergodic", merg, **extra))
    if cfg.method == "ergodic":
        _progress(f"ergodic: {cfg.law.spec} J={cfg.J:g} N={cfg.N}")
        e = ergodic_max_energy(cfg.law, cfg.J, cfg.N, cfg.burn_in, cfg.replicas, root.split(0))
        rows.append(_est_row("M_ergodic", e, **extra))
    if cfg.method in ("stretch", "all"):
        _progress(f"stretch: K={cfg.K} per replica")
        e = stretch_max_energy(cfg.law, cfg.J, cfg.K, cfg.replicas, root.split(1))
        rows.append(_est_row("M_stretch", e, **extra))
    return _records(cfg, rows, ["quantity", "mean", "stderr", "n_samples", "seed", "J", "N"])


def cmd_extrema_stats(cfg):
    _progress(f"Gamma-extrema: {cfg.law.spec} Gamma={cfg.gamma:g} K={cfg.K}")
    d = stream_records(cfg.law, cfg.gamma, 2 * cfg.K + 1, SeededStream(cfg.seed).generator())
    dh, dl, ah, al = stretch_arrays(d)
    H = np.abs(np.diff(d.S_u))
    L = np.diff(d.u)
    summary = {}
    for name, h, ln in (("descending", dh, dl), ("ascending", ah, al)):
        summary[name] = {"count": int(h.size), "height_mean": float(h.mean()),
                         "height_var": float(h.var(ddof=1)), "height_m2": float(np.mean(h * h)),
                         "length_mean": float(ln.mean()), "length_var": float(ln.var(ddof=1))}
    pairs = H[:2 * cfg.K].reshape(-1, 2).sum(axis=1) - 2 * cfg.gamma
    lens = L[:2 * cfg.K].reshape(-1, 2).sum(axis=1).astype(float)
    m = ratio_estimate(pairs, lens, cfg.seed)
    summary["energy_density"] = {"mean": m.mean, "stderr": m.stderr}
    if cfg.format == "json":
        samples = [{"k": i + 1, "direction": "descending" if i % 2 == 0 else "ascending",
                    "height": float(H[i]), "length": int(L[i])} for i in range(H.size)]
        return json.dumps({"command": cfg.command, "law": cfg.law.spec, "gamma": cfg.gamma,
                           "seed": cfg.seed, "samples": samples, "summary": summary},
                          sort_keys=True, allow_nan=False) + "\n"
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\r\n")
    w.writerow(["k", "direction", "height", "length"])
    for i in range(H.size):
        w.writerow([i + 1, "descending" if i % 2 == 0 else "ascending", repr(float(H[i])), int(L[i])])
    for name in ("descending", "ascending"):
        s = summary[name]
        out.write("# " + name + " " + " ".join(f"{k}={v!r}" for k, v in s.items()) + "\r\n")
    out.write(f"# (sum H - 2 Gamma K)/sum L = {m.mean!r} +- {m.stderr!r}\r\n")
    return out.getvalue()


def cmd_kappa_hat(cfg):
    _progress(f"ladder heights: {cfg.law.spec} n={cfg.n}")
    kh = kappa_hat(cfg.law, cfg.n, SeededStream(cfg.seed))
    rows = [_est_row("kappa_hat", kh.strict), _est_row("kappa_hat_weak", kh.weak),
            _est_row("c_ascending", kh.c_left), _est_row("c_descending", kh.c_right)]
    return _records(cfg, rows, ["quantity", "mean", "stderr", "n_samples", "seed"])


def cmd_kappa_tilde(cfg):
    _progress(f"environments: {cfg.law.spec} Gamma={cfg.gamma} n_envs={cfg.n_envs}")
    res = kappa_tilde(cfg.law, cfg.gamma, cfg.n_envs, SeededStream(cfg.seed))
    rows = []
    for r in res:
        rows.append(_est_row("kappa_tilde_full", r.full, gamma=r.gamma))
        rows.append(_est_row("kappa_tilde_inner", r.inner, gamma=r.gamma))
    return _records(cfg, rows, ["quantity", "mean", "stderr", "n_samples", "seed", "gamma"])


def cmd_lindley_cdf(cfg):
    window = cfg.window or default_window(cfg.law)
    x_max = cfg.x_max or window[1]
    _progress(f"renewal CDF: {cfg.law.spec} n={cfg.n} window={window}")
    raw = renewal_cdf_raw(cfg.law, cfg.direction, max(x_max, window[1]), cfg.n, SeededStream(cfg.seed))
    fit = asymptote_fit(raw, window)
    grid = np.linspace(0.0, x_max, cfg.points)
    F = raw.scaled(1.0 / fit.slope)(grid)
    fitd = {"slope": fit.slope, "intercept": fit.intercept, "ratio": fit.ratio,
            "max_residual": fit.max_residual, "window": list(window)}
    if cfg.format == "json":
        return json.dumps({"command": cfg.command, "law": cfg.law.spec, "seed": cfg.seed,
                           "direction": cfg.direction, "x": grid.tolist(), "F": F.tolist(),
                           "fit": fitd}, sort_keys=True, allow_nan=False) + "\n"
    lines = ["x,F"] + [f"{x!r},{v!r}" for x, v in zip(grid.tolist(), F.tolist())]
    lines.append(f"# raw slope={fit.slope!r} intercept={fit.intercept!r} "
                 f"intercept/slope={fit.ratio!r} window={window[0]!r},{window[1]!r}")
    return "\r\n".join(lines) + "\r\n"


def cmd_sweep(cfg):
    budget = Budget(cfg.N, cfg.replicas, cfg.n_ladder, cfg.n_envs, cfg.K, cfg.burn_in)
    rep = run_sweep(cfg.law, cfg.J, budget, cfg.seed, progress=_progress)
    if cfg.out:
        path = emit(rep, cfg.format, cfg.out)
        plot = emit(rep, "plotdata", cfg.out)
        _progress(f"wrote {path} and {plot}")
        sys.stdout.write(rep.summary() + "\n")
        return None
    if cfg.format == "json":
        return to_json(rep) + "\n"
    if cfg.format == "csv":
        return to_csv(rep)
    return rep.summary() + "\n"


def cmd_selftest(cfg):
    t0 = time.time()
    res = oracle_grid(cfg.seed, cfg.instances, progress=_progress)
    dt = time.time() - t0
    ok = res.ok
    text = (f"selftest {'PASS' if ok else 'FAIL'}: {res.n_checked} instance/boundary checks, "
            f"worst |dlogZ|/max(1,|logZ|) = {res.worst_logz_rel:.2e}, "
            f"worst |dM| = {res.worst_max_abs:.2e}, mismatches = {res.failures}, {dt:.1f} s\n")
    return text, (0 if ok else 1)


COMMANDS = {
    "free-energy": cmd_free_energy, "max-energy": cmd_max_energy,
    "extrema-stats": cmd_extrema_stats, "constants kappa-hat": cmd_kappa_hat,
    "constants kappa-tilde": cmd_kappa_tilde, "lindley-cdf": cmd_lindley_cdf,
    "sweep": cmd_sweep, "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    cfg = parse_args(argv)
    set_threads(cfg.threads)
    status = 0
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = COMMANDS[cfg.command](cfg)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if isinstance(res, tuple):
            res, status = res
        if res is not None:
            _write(cfg, res)
    except (ValueError, RuntimeError, OSError, FloatingPointError) as e:
        print(f"rfic {cfg.command}: error: {e}", file=sys.stderr)
        return 1
    return status


if __name__ == "__main__":
    sys.exit(main())
