"""Command-line front end: ``fikit space gen``, ``fikit hopflax``, ``fikit check``, ``fikit report``.

Settings resolve in three layers: built-in defaults, then a flat JSON
config file (``--config``), then explicit flags. The resolved settings are
echoed to ``run.lock.json`` next to the outputs.

Exit codes: 0 pass, 1 fail, 2 usage or internal error, 3 inconclusive only.
"""
import argparse
import glob
import json
import os
import sys

import numpy as np

from . import __version__
from ._parallel import default_jobs, pmap
from .exceptions import FikitError
from .families import (
    coordinate,
    endpoint_pairs,
    exponential_family,
    random_lipschitz,
    random_perturbation,
)
from .hamiltonian import power_pair
from .hopf_lax import hopf_lax, semigroup_check
from .inequalities import (
    consts_rho,
    hwi_coupling_check,
    hypercontractivity_curve,
    lsi_check,
    lsi_constant_estimate,
    lsi_implies_talagrand_suite,
    phi_monitor,
    scaling_exponent_probe,
    talagrand_check,
    talagrand_dual_check,
    talagrand_implies_lsi_suite,
)
from .io import (
    atomic_write,
    convex_from_config,
    load_field,
    load_report,
    load_space,
    save_hopf_lax,
    save_report,
    save_space,
)
from .report import CheckReport, aggregate, digest, summary_table
from .space import (
    build_graph,
    build_grid_1d,
    build_grid_2d,
    build_heisenberg_grid,
    gaussian_measure,
    gibbs_measure,
)
from .transport import entropy_along_geodesic

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3

CHECKS = ("lsi", "talagrand", "dual-talagrand", "hc", "phi", "hwi",
          "geodesic-entropy", "slopes", "suite-lsi2tal", "suite-tal2lsi")

DEFAULTS = {
    "kind": "grid1d", "lo": -6.0, "hi": 6.0, "n": 601, "levels": 6, "step": 0.5,
    "space": None, "measure": "gaussian", "sigma": 1.0, "beta": 1.0, "base": 0,
    "gibbs_p": None, "family": None, "fields": None, "n_samples": 20,
    "rates": "0.2:1:5", "q": None, "p": None, "K": "1", "a": 1.0, "rho": None,
    "t_grid": None, "eps_grid": "0.02:0.2:8", "g": None, "nu": None,
    "strength": 0.9, "slope_tol_ent": 0.1, "slope_tol_wp": 0.15, "hwi_rtol": 0.05,
    "geo_tol": None, "out_dir": ".",
}


class UsageError(Exception):
    pass


def parse_grid(text, geometric=False):
    """``start:stop:count`` to an array; ``geometric`` spaces points by ratio."""
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except (ValueError, AttributeError):
        raise UsageError(f"grid must look like start:stop:count, got {text!r}") from None
    if count < 1:
        raise UsageError(f"grid count must be >= 1, got {count}")
    if geometric:
        if start <= 0 or stop <= 0:
            raise UsageError("geometric grids need positive endpoints")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def resolve_exponents(cfg):
    """Fill in ``q`` and ``p``; when both are given they must be conjugate."""
    q, p = cfg.get("q"), cfg.get("p")
    if q is None and p is None:
        q = 2.0
    if q is not None and p is not None:
        if abs(1 / p + 1 / q - 1) > 1e-12:
            raise UsageError(f"p={p} and q={q} are not conjugate")
    elif q is None:
        q = p / (p - 1) if p > 1 else None
        if q is None:
            raise UsageError(f"p must exceed 1, got {p}")
    else:
        p = q / (q - 1) if q > 1 else None
        if p is None:
            raise UsageError(f"q must exceed 1, got {q}")
    cfg["q"], cfg["p"] = float(q), float(p)
    return cfg["q"], cfg["p"]


def build_space(cfg):
    if cfg.get("space"):
        return load_space(cfg["space"])
    kind = cfg["kind"]
    if kind == "grid1d":
        return build_grid_1d(cfg["lo"], cfg["hi"], int(cfg["n"]))
    if kind == "grid2d":
        return build_grid_2d(cfg["lo"], cfg["hi"], int(cfg["n"]))
    if kind in ("heisenberg", "heisenberg_grid"):
        return build_heisenberg_grid(int(cfg["levels"]), cfg["step"])
    raise UsageError(f"unknown space kind {kind!r}")


def build_measure(cfg, space):
    m = cfg["measure"]
    if m == "gaussian":
        return gaussian_measure(space, cfg["sigma"])
    if m == "gibbs":
        gp = cfg["gibbs_p"] if cfg["gibbs_p"] is not None else max(cfg.get("p") or 2.0, 2.0)
        return gibbs_measure(space, int(cfg["base"]), cfg["beta"], gp)
    return load_field(m, space.n_points)


def build_family(cfg, space, default):
    """Test functions from files or a named seeded generator."""
    if cfg.get("fields"):
        return [load_field(path, space.n_points) for path in cfg["fields"]]
    family = cfg.get("family") or default
    seed = int(cfg["seed"])
    count = int(cfg["n_samples"])
    if family == "exp":
        return exponential_family(space, parse_grid(cfg["rates"]))
    if family == "lipschitz":
        return [random_lipschitz(space, seed + k) for k in range(count)]
    if family == "trig":
        x = coordinate(space)
        rng = np.random.default_rng(seed)
        return [np.sin(rng.uniform(0.5, 2.0) * x + rng.uniform(0, 2 * np.pi))
                for _ in range(count)]
    raise UsageError(f"unknown family {family!r}")


def build_nus(cfg, space, mu):
    if cfg.get("nu"):
        return [load_field(path, space.n_points) for path in cfg["nu"]]
    seed = int(cfg["seed"])
    return [random_perturbation(space, mu, seed + k, cfg["strength"])
            for k in range(int(cfg["n_samples"]))]


def resolve_K(cfg, space, mu, q):
    """``K`` is a number or ``estimate`` (log-Sobolev estimate over the family)."""
    K = cfg["K"]
    if str(K) == "estimate":
        family = build_family(cfg, space, "exp")
        value = lsi_constant_estimate(space, mu, family, q)
        cfg["K_estimate"] = value
        return value
    try:
        return float(K)
    except ValueError:
        raise UsageError(f"K must be a number or 'estimate', got {K!r}") from None


def _suite(name, reports, constants, details=None):
    for k, r in enumerate(reports):
        r.name = f"{r.name}[{k}]"
    return aggregate(name, reports, constants=constants,
                     inputs_digest=_combined_digest(reports), details=details)


def _combined_digest(reports):
    return digest(np.zeros(0), parts=[r.inputs_digest for r in reports])


def _cell(v):
    return str(v) if isinstance(v, (int, np.integer)) else repr(float(v))


def _curve_csv(header, rows):
    lines = [",".join(header)] + [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def run_check(name, cfg):
    """Run one named check. Returns ``(report, {filename: text})``."""
    space = build_space(cfg)
    mu = build_measure(cfg, space)
    extra = {}
    if name == "lsi":
        q, _ = resolve_exponents(cfg)
        K = resolve_K(cfg, space, mu, q)
        fs = build_family(cfg, space, "exp")
        reports = pmap(lambda f: lsi_check(space, mu, f, q, K), fs)
        return _suite("lsi", reports, {"q": q, "K": K}), extra
    if name == "talagrand":
        q, p = resolve_exponents(cfg)
        K = resolve_K(cfg, space, mu, q)
        reports = pmap(lambda nu: talagrand_check(space, mu, nu, p, K), build_nus(cfg, space, mu))
        return _suite("talagrand", reports, {"p": p, "K": K}), extra
    if name == "dual-talagrand":
        q, p = resolve_exponents(cfg)
        K = resolve_K(cfg, space, mu, q)
        fs = build_family(cfg, space, "lipschitz")
        reports = pmap(lambda f: talagrand_dual_check(space, mu, f, p, K), fs)
        return _suite("dual_talagrand", reports, {"p": p, "K": K}), extra
    if name == "hc":
        q, _ = resolve_exponents(cfg)
        a = float(cfg["a"])
        K = resolve_K(cfg, space, mu, q)
        rho = float(cfg["rho"]) if cfg["rho"] is not None else consts_rho(a, K, q)
        ts = parse_grid(cfg["t_grid"] or "0.1:1:10")
        fs = build_family(cfg, space, "lipschitz")
        reports = pmap(lambda f: hypercontractivity_curve(space, mu, f, a, rho, q, ts), fs)
        rows = [(k, t, lf, F)
                for k, r in enumerate(reports)
                for t, lf, F in zip(r.details["ts"], r.details["log_F"], r.details["F"])]
        extra["hc.F.csv"] = _curve_csv(["sample", "t", "log_F", "F"], rows)
        return _suite("hypercontractivity", reports, {"a": a, "rho": rho, "q": q, "K": K}), extra
    if name == "phi":
        q, _ = resolve_exponents(cfg)
        K = resolve_K(cfg, space, mu, q)
        ts = parse_grid(cfg["t_grid"] or "0.1:1:10")
        fs = build_family(cfg, space, "lipschitz")
        reports = pmap(lambda f: phi_monitor(space, mu, f, K, q, ts), fs)
        rows = [(k, t, v) for k, r in enumerate(reports)
                for t, v in zip(r.details["ts"], r.details["phi"])]
        extra["phi.csv"] = _curve_csv(["sample", "t", "phi"], rows)
        return _suite("phi_monitor", reports, {"K": K, "q": q}), extra
    if name == "hwi":
        _, p = resolve_exponents(cfg)
        fs = build_family(cfg, space, "exp")
        # members that are not positive are read as log-densities
        fs = [f if np.min(f) > 0 else np.exp(f) for f in fs]
        reports = pmap(lambda f: hwi_coupling_check(space, mu, f, p, cfg["hwi_rtol"]), fs)
        return _suite("hwi", reports, {"p": p}), extra
    if name == "geodesic-entropy":
        _, p = resolve_exponents(cfg)
        ts = parse_grid(cfg["t_grid"] or "0:1:11")
        pairs = endpoint_pairs(space, mu, int(cfg["n_samples"]), int(cfg["seed"]))
        reports = pmap(lambda pr: entropy_along_geodesic(mu, pr[0], pr[1], ts, space, p,
                                                         cfg["geo_tol"]), pairs)
        return _suite("geodesic_entropy", reports, {"p": p}), extra
    if name == "slopes":
        _, p = resolve_exponents(cfg)
        g = load_field(cfg["g"], space.n_points) if cfg["g"] else np.sin(coordinate(space))
        eps = parse_grid(cfg["eps_grid"], geometric=True)
        s_ent, s_wp = scaling_exponent_probe(space, mu, g, p, eps)
        clauses = [CheckReport("slope_entropy", abs(s_ent - 2.0), 0.0, cfg["slope_tol_ent"],
                               details={"slope": s_ent, "target": 2.0}),
                   CheckReport("slope_wasserstein", abs(s_wp - p), 0.0, cfg["slope_tol_wp"],
                               details={"slope": s_wp, "target": p})]
        return aggregate("scaling_exponents", clauses, constants={"p": p},
                         details={"slope_ent": s_ent, "slope_wp": s_wp,
                                  "eps": eps.tolist()}), extra
    if name == "suite-lsi2tal":
        q, _ = resolve_exponents(cfg)
        K = resolve_K(cfg, space, mu, q)
        report = lsi_implies_talagrand_suite(space, mu, q, K, build_nus(cfg, space, mu))
        return report, extra
    if name == "suite-tal2lsi":
        q, p = resolve_exponents(cfg)
        K = resolve_K(cfg, space, mu, q)
        fs = build_family(cfg, space, "exp")
        pairs = endpoint_pairs(space, mu, int(cfg["n_samples"]), int(cfg["seed"]))
        ts = parse_grid(cfg["t_grid"]) if cfg["t_grid"] else None
        report = talagrand_implies_lsi_suite(space, mu, p, K, fs, pairs, ts=ts,
                                             tol=cfg["geo_tol"])
        return report, extra
    raise UsageError(f"unknown check {name!r}")


def exit_code(statuses):
    statuses = list(statuses)
    if not statuses:
        return EXIT_USAGE
    if "fail" in statuses:
        return EXIT_FAIL
    if "inconclusive" in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _seed():
    try:
        return int(os.environ.get("FIKIT_SEED", "0"))
    except ValueError:
        raise UsageError("FIKIT_SEED must be an integer") from None


def resolve_config(args, keys):
    """Defaults, then the config file, then flags that were given."""
    cfg = {k: DEFAULTS.get(k) for k in keys}
    cfg["seed"] = _seed()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a flat JSON object")
        for k, v in loaded.items():
            k = k.replace("-", "_")
            if k not in cfg:
                raise UsageError(f"unknown config key {k!r}")
            cfg[k] = v
    for k in list(cfg):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def write_lock(folder, command, cfg):
    lock = {"tool": "fikit", "version": __version__, "command": command,
            "config": cfg, "seed": cfg.get("seed"), "threads": default_jobs()}
    atomic_write(os.path.join(folder, "run.lock.json"),
                 json.dumps(lock, sort_keys=True, indent=2, default=str) + "\n")


def cmd_space_gen(args):
    cfg = resolve_config(args, ["kind", "lo", "hi", "n", "levels", "step"])
    cfg["graph"] = args.graph
    if args.a is not None:
        cfg["lo"] = args.a
    if args.b is not None:
        cfg["hi"] = args.b
    if cfg["kind"] == "graph":
        if not args.graph:
            raise UsageError("--kind graph needs --graph EDGES.csv")
        rows = np.loadtxt(args.graph, delimiter=",", skiprows=1, ndmin=2)
        n = int(cfg["n"]) if args.n is not None else int(rows[:, :2].max()) + 1
        space = build_graph(n, rows.tolist())
    else:
        space = build_space(cfg)
    save_space(space, args.output)
    write_lock(os.path.dirname(os.path.abspath(args.output)), "space gen", cfg)
    print(f"wrote {args.output}: {space.n_points} points, kind={space.kind}"
          + (" (approximate)" if space.approximate else ""))
    return EXIT_PASS


def cmd_hopflax(args):
    cfg = resolve_config(args, ["space", "q", "out_dir"])
    if args.out_dir is None and args.output:
        cfg["out_dir"] = os.path.dirname(os.path.abspath(args.output))
    cfg.update({"g": args.g, "t": args.t, "lagrangian": args.lagrangian,
                "check": args.check, "s": args.s, "output": args.output})
    if cfg["space"] is None:
        raise UsageError("--space is required")
    if not args.t > 0:
        raise UsageError(f"--t must be positive, got {args.t}")
    space = load_space(cfg["space"])
    g = load_field(args.g, space.n_points)
    if args.lagrangian:
        L = convex_from_config(json.loads(args.lagrangian))
    else:
        q, _ = resolve_exponents(cfg)
        L = power_pair(q).L
    result = hopf_lax(space, g, args.t, L)
    out_dir = cfg["out_dir"] or "."
    if args.output:
        save_hopf_lax(result, args.output)
    code = EXIT_PASS
    if args.check == "semigroup":
        if args.s is None:
            raise UsageError("--check semigroup needs --s")
        report = semigroup_check(space, g, args.s, args.t, L)
        save_report(report, out_dir)
        print(report.to_markdown())
        code = exit_code([report.status])
    write_lock(out_dir, "hopflax", cfg)
    return code


def cmd_check(args):
    keys = [k for k in DEFAULTS]
    cfg = resolve_config(args, keys)
    report, extra = run_check(args.check, cfg)
    out = cfg["out_dir"]
    stem = args.check.replace("-", "_")
    save_report(report, out, stem)
    for fname, text in extra.items():
        atomic_write(os.path.join(out, fname), text)
    write_lock(out, f"check {args.check}", cfg)
    print(f"{args.check}: {report.status} (lhs={report.lhs:.6g}, rhs={report.rhs:.6g}, "
          f"margin={report.margin:.3g})")
    return exit_code([report.status])


def cmd_report(args):
    paths = sorted(p for p in glob.glob(os.path.join(args.directory, "*.json"))
                   if os.path.basename(p) != "run.lock.json")
    if not paths:
        raise UsageError(f"no JSON reports in {args.directory}")
    reports = []
    for path in paths:
        try:
            reports.append(load_report(path))
        except (KeyError, TypeError, json.JSONDecodeError):
            raise UsageError(f"{path} is not a check report") from None
    text = "# Summary\n\n" + summary_table(reports) + "\n"
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return exit_code(r.status for r in reports)


def _add_space_flags(p, with_ab=False):
    p.add_argument("--kind", choices=["grid1d", "grid2d", "graph", "heisenberg"])
    if with_ab:
        p.add_argument("--a", type=float, help="left end of the interval")
        p.add_argument("--b", type=float, help="right end of the interval")
    else:
        p.add_argument("--lo", type=float, help="left end of the interval (default -6)")
        p.add_argument("--hi", type=float, help="right end of the interval (default 6)")
    p.add_argument("--n", type=int, help="points per axis")
    p.add_argument("--levels", type=int, help="Heisenberg hop radius")
    p.add_argument("--step", type=float, help="Heisenberg step")


def build_parser():
    parser = argparse.ArgumentParser(prog="fikit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fikit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    space = sub.add_parser("space", help="generate spaces")
    space_sub = space.add_subparsers(dest="space_command", required=True)
    gen = space_sub.add_parser("gen", help="generate and save a space")
    _add_space_flags(gen, with_ab=True)
    gen.add_argument("--graph", help="edge CSV with header i,j,length (for --kind graph)")
    gen.add_argument("--config")
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_space_gen)

    hl = sub.add_parser("hopflax", help="evaluate Q_t g")
    hl.add_argument("--space", required=True)
    hl.add_argument("--g", required=True, help="point_id,value CSV of initial data")
    hl.add_argument("--t", type=float, required=True)
    hl.add_argument("--q", type=float, help="Hamiltonian exponent (default 2)")
    hl.add_argument("--lagrangian", help='JSON such as {"power": 3} or {"table": "L.csv"}')
    hl.add_argument("--check", choices=["semigroup"])
    hl.add_argument("--s", type=float)
    hl.add_argument("--config")
    hl.add_argument("--out-dir", dest="out_dir")
    hl.add_argument("-o", "--output")
    hl.set_defaults(func=cmd_hopflax)

    check = sub.add_parser("check", help="run an inequality check")
    check.add_argument("check", choices=CHECKS)
    _add_space_flags(check)
    check.add_argument("--space", help="space JSON file (overrides --kind)")
    check.add_argument("--measure", help="gaussian, gibbs or a point_id,value CSV")
    check.add_argument("--sigma", type=float)
    check.add_argument("--beta", type=float)
    check.add_argument("--base", type=int)
    check.add_argument("--gibbs-p", dest="gibbs_p", type=float)
    check.add_argument("--family", choices=["exp", "lipschitz", "trig"])
    check.add_argument("--fields", nargs="+", help="test functions as CSV files")
    check.add_argument("--nu", nargs="+", help="measures as CSV files")
    check.add_argument("--n-samples", dest="n_samples", type=int)
    check.add_argument("--seed", type=int, help="default from FIKIT_SEED, else 0")
    check.add_argument("--rates", help="exp-family rates as start:stop:count")
    check.add_argument("--strength", type=float, help="largest perturbation size")
    check.add_argument("--q", type=float)
    check.add_argument("--p", type=float)
    check.add_argument("--K", help="constant, or 'estimate'")
    check.add_argument("--a", type=float, help="hypercontractivity exponent")
    check.add_argument("--rho", type=float)
    check.add_argument("--t-grid", dest="t_grid")
    check.add_argument("--eps-grid", dest="eps_grid", help="start:stop:count, log spaced")
    check.add_argument("--g", help="perturbation direction for slopes")
    check.add_argument("--slope-tol-ent", dest="slope_tol_ent", type=float)
    check.add_argument("--slope-tol-wp", dest="slope_tol_wp", type=float)
    check.add_argument("--hwi-rtol", dest="hwi_rtol", type=float)
    check.add_argument("--geo-tol", dest="geo_tol", type=float)
    check.add_argument("--config")
    check.add_argument("--out-dir", dest="out_dir")
    check.set_defaults(func=cmd_check)

    rep = sub.add_parser("report", help="aggregate JSON reports into a markdown table")
    rep.add_argument("directory")
    rep.add_argument("-o", "--output")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fikit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FikitError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"fikit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
