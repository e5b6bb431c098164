"""Command-line entry point.

Subcommands: demo-redis, trajectories, sweep, stats, analyze. Every config
key is also a flag named by its dotted path (``--sweep.samples 20``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config, econ, estimator, eta, storage, sweep
from .kernels import BACKEND

log = logging.getLogger("redisgrowth")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DEGENERATE = 0, 1, 2, 3


class Degenerate(Exception):
    pass


# -- subcommands ----------------------------------------------------------

def demo_redistribution(y, a: float, b: float) -> dict:
    """Taxes and net incomes for every scheme on one income vector."""
    y = econ.as_income(y)
    out = {"incomes": y, "schemes": {}}
    for scheme in econ.SCHEMES:
        pol = econ.FiscalPolicy(scheme, a, b)
        t = econ.assess(y, pol)
        out["schemes"][scheme] = {
            "taxes": t.taxes,
            "net": econ.redistribute(y, pol),
            "public_good": t.public_good,
            "government_income": t.government_income,
            "threshold": t.threshold,
            "total_tax": t.total,
        }
    out["public_good"] = out["schemes"]["proportional"]["public_good"]
    out["government_income"] = out["schemes"]["proportional"]["government_income"]
    out["c_fee"] = out["schemes"]["regressive"]["threshold"]
    out["c_max"] = out["schemes"]["progressive"]["threshold"]
    return out


def cmd_demo(cfg: dict, outdir: Path) -> list[Path]:
    d = cfg["demo"]
    a, b = config.number(d["a"]), config.number(d["b"])
    res = demo_redistribution([config.number(v) for v in d["incomes"]], a, b)
    agents = outdir / "demo_agents.csv"
    storage.write_csv(
        agents, ["scheme", "agent", "income", "tax", "net_income"],
        ([s, i + 1, res["incomes"][i], r["taxes"][i], r["net"][i]]
         for s, r in res["schemes"].items() for i in range(res["incomes"].size)),
    )
    summary = outdir / "demo_summary.csv"
    storage.write_csv(
        summary, ["scheme", "total_tax", "public_good", "government_income", "threshold"],
        ([s, r["total_tax"], r["public_good"], r["government_income"], r["threshold"]]
         for s, r in res["schemes"].items()),
    )
    print(f"a = {a:.6g}, b = {b:.6g}, Y = {res['incomes'].sum():.6g}")
    print(f"{'agent':>5} {'income':>10}" + "".join(f" {s[:5] + ' net':>12}" for s in econ.SCHEMES))
    for i, yi in enumerate(res["incomes"]):
        nets = "".join(f" {res['schemes'][s]['net'][i]:12.4f}" for s in econ.SCHEMES)
        print(f"{i + 1:>5} {yi:10.4f}{nets}")
    print(f"pg = {res['public_good']:.6f}  gi = {res['government_income']:.6f}  "
          f"c_fee = {res['c_fee']:.6f}  c_max = {res['c_max']:.6f}")
    return [agents, summary]


def trajectory_records(n: int, T: int, a: float, b: float, spec: eta.EtaSpec,
                       seed: int, schemes) -> list[list]:
    """Long-form rows (t, series, Y, H): schemes on shared draws plus guides."""
    trajs = estimator.run_common_random(n, T, schemes, a, b, spec, seed)
    rows = []
    lower = spec.geomean * spec.scale
    upper = eta.upper_guide(a, b, spec)
    for t in range(T):
        for tr in trajs:
            rows.append([t, tr.policy.scheme, tr.totals[t], tr.human_capital[t]])
        rows.append([t, "guide_geomean", n * lower**t, None])
        rows.append([t, "guide_upper", n * upper**t, None])
    return rows


def cmd_trajectories(cfg: dict, outdir: Path) -> list[Path]:
    c = cfg["trajectories"]
    spec = config.eta_spec(cfg)
    n, T = int(c["N"]), int(c["T"])
    a, b = config.number(c["a"]), config.number(c["b"])
    if n < 1 or T < 1:
        raise config.ConfigError("trajectories need N >= 1 and T >= 1")
    schemes = list(c["schemes"])
    for s in schemes:
        if s not in econ.SCHEMES:
            raise config.ConfigError(f"unknown scheme {s!r}")
    if T == 1:
        # nothing to simulate: every series starts at N
        rows = [[0, s, float(n), float(n)] for s in schemes]
        rows += [[0, "guide_geomean", float(n), None], [0, "guide_upper", float(n), None]]
    else:
        rows = trajectory_records(n, T, a, b, spec, int(cfg["seed"]), schemes)
    path = outdir / "trajectories.csv"
    storage.write_csv(path, ["t", "series", "Y", "H"], rows)
    last = {r[1]: r[2] for r in rows if r[0] == T - 1}
    for k, v in last.items():
        print(f"{k:>15}: Y({T - 1}) = {v:.6g}")
    if T > 1:
        ys = np.array([[r[2] for r in rows if r[1] == s] for s in schemes])
        est = estimator.fit_log_growth(ys, n)
        for s, lg in zip(schemes, est):
            print(f"{s:>15}: g = {np.exp(lg):.6g}" if np.isfinite(lg) else f"{s:>15}: g = n/a")
    return [path]


def stats_report(spec: eta.EtaSpec, ts) -> dict:
    p = eta.lognormal_params(spec)
    cond = eta.growth_condition(spec)
    report = {
        "mean": spec.mean, "geomean": spec.geomean, "scale": spec.scale,
        "mu": p.mu, "sigma": p.sigma, "degenerate": p.sigma == 0.0,
        "growth_condition": {
            "individual_decline": cond.individual_decline,
            "aggregate_growth": cond.aggregate_growth,
            "holds": cond.holds,
            "variance_form": cond.variance_form,
        },
        "clt": {str(t): dict(zip(("mu_t", "var_t"), eta.clt_params(p, t))) for t in ts},
    }
    tails = eta.tail_stats(spec)
    report["tails"] = {"p_decline": tails.p_decline, "p_double": tails.p_double,
                       "p_tenfold": tails.p_tenfold}
    return report


def cmd_stats(cfg: dict, outdir: Path) -> list[Path]:
    spec = config.eta_spec(cfg)
    rep = stats_report(spec, [config.number(t) for t in cfg["stats"]["t"]])
    path = outdir / "stats.json"
    with open(path, "w") as fh:
        json.dump(rep, fh, indent=2)
        fh.write("\n")
    print(f"<eta> = {spec.mean:.6g}, <eta>_geo = {spec.geomean:.6g}, scale = {spec.scale:.6g}")
    print(f"mu = {rep['mu']:.4f}, sigma = {rep['sigma']:.4f}" + ("  (degenerate)" if rep["degenerate"] else ""))
    t = rep["tails"]
    print(f"P(eta<1) = {t['p_decline']:.4f}, P(eta>=2) = {t['p_double']:.4f}, P(eta>10) = {t['p_tenfold']:.4f}")
    print(f"growth condition mu_log < 0 < log <eta>: {'holds' if rep['growth_condition']['holds'] else 'fails'}")
    return [path]


def analyze_surfaces(surfaces, outdir: Path, window: int) -> list[Path]:
    surfaces = list(surfaces)
    curves = [sweep.government_curves(s, window) for s in surfaces]
    bounds = [(s, sweep.zone_boundary(s)) for s in surfaces]
    curves_path = outdir / "curves.csv"
    bounds_path = outdir / "boundary.csv"
    zones_path = outdir / "zones.csv"
    storage.write_curves(curves_path, curves)
    storage.write_boundaries(bounds_path, bounds)

    rows = []
    by = {(s.scheme, s.spec, s.N): s for s in surfaces}
    order = list(econ.SCHEMES)
    for (scheme, spec, n), s in by.items():
        i = order.index(scheme)
        if i + 1 < len(order) and (order[i + 1], spec, n) in by:
            other = by[(order[i + 1], spec, n)]
            r = sweep.compare_zones(s, other)
            rows.append(["scheme", scheme, order[i + 1], spec.mean, spec.geomean, n, n,
                         len(r.violations), len(r.marginal)])
        bigger = sorted(m for (sc, sp, m) in by if sc == scheme and sp == spec and m > n)
        if bigger:
            r = sweep.compare_zones(s, by[(scheme, spec, bigger[0])])
            rows.append(["size", scheme, scheme, spec.mean, spec.geomean, n, bigger[0],
                         len(r.violations), len(r.marginal)])
        rows.append(["trivial_bound", scheme, "", spec.mean, spec.geomean, n, "",
                     len(sweep.bound_violations(s)), ""])
    storage.write_csv(zones_path, ["check", "zone_a", "zone_b", "mean_eta", "geomean_eta",
                                   "N_a", "N_b", "violations", "marginal"], rows)

    for c in curves:
        m = c.meta
        print(f"{m['scheme']:>12} N={m['N']:<4} <eta>={m['spec'].mean:<6g} "
              f"a_opt(b=0)={c.a_opt[0]:.3g} b*={c.b_star} g_max(b*)="
              f"{c.g_max[c.b_star_index]:.4g}" if c.b_star is not None else
              f"{m['scheme']:>12} N={m['N']}: no finite cells")
    return [curves_path, bounds_path, zones_path]


def cmd_sweep(cfg: dict, outdir: Path, fresh: bool = False, stop_after: int | None = None) -> list[Path]:
    grid = config.sweep_grid(cfg)
    ck = storage.Checkpoint(outdir / "checkpoint.jsonl", grid)
    if fresh and ck.path.exists():
        ck.path.unlink()
    done = ck.load()
    total = grid.cell_count
    log.info("sweep: %d cells, %d already done, backend %s", total, len(done), BACKEND)
    started = time.time()
    progress = {"n": len(done)}

    def on_cell(key, summary):
        ck.append(key, summary)
        progress["n"] += 1
        if progress["n"] % 500 == 0:
            log.info("  %d / %d cells (%.0fs)", progress["n"], total, time.time() - started)

    ck.open()
    try:
        surfaces = sweep.run_sweep(grid, threads=int(cfg["threads"]), done=done,
                                   on_cell=on_cell, limit=stop_after)
    finally:
        ck.close()
    if progress["n"] < total:
        print(f"stopped after {progress['n']} of {total} cells; rerun to resume")
        return []

    surf_list = [surfaces[(s, e, n)] for s in grid.schemes for e in grid.specs for n in grid.N_values]
    path = outdir / "surfaces.csv"
    storage.write_surfaces(path, surf_list)
    outputs = [path] + analyze_surfaces(surf_list, outdir, int(cfg["sweep"]["window"]))
    if all(s.missing.all() for s in surf_list):
        raise Degenerate("every sweep cell is non-finite")
    print(f"{total} cells in {time.time() - started:.1f}s -> {outdir}")
    return outputs


def cmd_analyze(cfg: dict, outdir: Path, surfaces_path: Path) -> list[Path]:
    surfaces = storage.read_surfaces(surfaces_path)
    if not surfaces:
        raise Degenerate(f"{surfaces_path} holds no surfaces")
    outputs = analyze_surfaces(surfaces, outdir, int(cfg["sweep"]["window"]))
    if all(s.missing.all() for s in surfaces):
        raise Degenerate("every cell is non-finite")
    return outputs


# -- argument parsing -----------------------------------------------------

COMMANDS = ("demo-redis", "trajectories", "sweep", "stats", "analyze")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redisgrowth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="TOML configuration file")
    common.add_argument("-o", "--output", dest="output.dir", metavar="DIR",
                        default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    for path, default in config.leaves(config.DEFAULTS):
        if path == "output.dir":
            continue
        shown = ",".join(map(str, default)) if isinstance(default, list) else default
        common.add_argument(f"--{path}", dest=path, metavar="VALUE", default=argparse.SUPPRESS,
                            help=f"(default: {shown})")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("demo-redis", parents=[common], help="worked six-agent redistribution example")
    sub.add_parser("trajectories", parents=[common], help="common-random-number trajectories per scheme")
    sp = sub.add_parser("sweep", parents=[common], help="growth surfaces over the (b, a) grid")
    sp.add_argument("--fresh", action="store_true", help="discard an existing checkpoint")
    sp.add_argument("--stop-after", type=int, default=None, metavar="CELLS",
                    help="compute at most this many new cells, then stop (resumable)")
    sub.add_parser("stats", parents=[common], help="log-normal parameters and tail probabilities")
    ap = sub.add_parser("analyze", parents=[common], help="curves and boundaries from a surfaces file")
    ap.add_argument("surfaces", type=Path, help="surfaces.csv written by sweep")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    overrides = {}
    try:
        for path, _ in config.leaves(config.DEFAULTS):
            if path in vars(args):
                raw = getattr(args, path)
                overrides[path] = config.parse_flag(path, raw)
        cfg = config.load(args.config, overrides)
    except (config.ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    outdir = Path(cfg["output"]["dir"])
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        if args.command == "demo-redis":
            outputs = cmd_demo(cfg, outdir)
        elif args.command == "trajectories":
            outputs = cmd_trajectories(cfg, outdir)
        elif args.command == "sweep":
            outputs = cmd_sweep(cfg, outdir, fresh=args.fresh, stop_after=args.stop_after)
            if not outputs:
                return EXIT_OK
        elif args.command == "stats":
            outputs = cmd_stats(cfg, outdir)
        else:
            outputs = cmd_analyze(cfg, outdir, args.surfaces)
        (outdir / f"config-{args.command}.toml").write_text(config.to_toml(cfg))
        storage.write_manifest(
            outdir / f"manifest-{args.command}.json", version=__version__, command=args.command,
            seed=cfg["seed"], config=cfg, outputs=outputs, backend=BACKEND,
        )
    except Degenerate as e:
        print(f"degenerate result: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except econ.InvalidInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
