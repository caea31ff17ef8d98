"""Command-line front end: ``agenet {simulate,meanfield,chaos,validate}``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

import numpy as np

from . import artifacts, chaos, config as config_mod, engine, intensity, laws, pde


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


def _int_list(s: str):
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agenet", description="Age-structured spiking network simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="YAML config file")
        if out:
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=_u64, default=None, help="master seed (overrides the config)")

    sp = sub.add_parser("simulate", help="particle system: snapshots, event log, manifest")
    common(sp)
    sp.add_argument("--snapshot-grid", type=int, default=None)
    sp.add_argument("--n", type=int, default=None, help="number of neurons (overrides the config)")

    sp = sub.add_parser("meanfield", help="mean-field PDE: M(t), N(t), optional density")
    common(sp)
    sp.add_argument("--emit-density", type=_bool, default=False)

    sp = sub.add_parser("chaos", help="convergence study across N")
    common(sp)
    sp.add_argument("--n-list", type=_int_list, default=None)
    sp.add_argument("--replicas", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--snapshot-grid", type=int, default=None)
    sp.add_argument("--per-replica", type=_bool, default=False, help="also write replicas.csv")

    sp = sub.add_parser("validate", help="grid checks of the intensity hypotheses")
    common(sp, out=False)
    return p


def _fail(msg, code=2):
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_simulate(args, cfg: config_mod.RunConfig) -> int:
    if args.snapshot_grid is not None:
        cfg = cfg.with_network(snapshot_grid=args.snapshot_grid)
    if args.n is not None:
        cfg = cfg.with_network(n_neurons=args.n)
    t0 = time.perf_counter()
    try:
        res = engine.simulate(cfg.network)
    except (engine.SimulationError, ValueError) as e:
        return _fail(f"simulation failed: {e}", 1)
    w = artifacts.Writer(args.out)
    s = res.snapshots
    w.csv("snapshots.csv", ["t", "M", "age_q10", "age_q50", "age_q90", "mean_a", "mean_a2"],
          zip(s.t, s.activity, s.age_q10, s.age_q50, s.age_q90, s.mean_a, s.mean_a2))
    log = res.log
    w.csv("events.csv", ["t", "kind", "id"], zip(log.times, log.kinds, log.ids))
    w.manifest("simulate", cfg.to_dict(), cfg.seed, artifacts.SIMULATE_SEEDS, res.stats(),
               time.perf_counter() - t0)
    return 0


def cmd_meanfield(args, cfg: config_mod.RunConfig) -> int:
    t0 = time.perf_counter()
    if not isinstance(cfg.network.m0, laws.Dirac):
        return _fail("meanfield needs a deterministic initial activity (m0.kind: dirac)")
    try:
        mf_cfg = pde.MeanFieldConfig.from_network(cfg.network)
        sol = pde.picard_solve(mf_cfg, cfg.grid)
    except pde.CFLError as e:
        return _fail(f"{e} (CFL rule: dt <= dx)", 1)
    except pde.PicardError as e:
        w = artifacts.Writer(args.out)
        p = w.csv("picard_residuals.csv", ["iteration", "residual"], enumerate(e.residuals, 1))
        return _fail(f"{e}; residual history written to {p}", 1)
    except (pde.GridError, ValueError) as e:
        return _fail(str(e), 1)
    w = artifacts.Writer(args.out)
    w.csv("meanfield.csv", ["t", "M", "N", "mass"], zip(sol.t_grid, sol.activity, sol.boundary_flux, sol.mass))
    w.csv("picard_residuals.csv", ["iteration", "residual"], enumerate(sol.picard_residuals, 1))
    if args.emit_density:
        header = ["t"] + [artifacts.fmt(x) for x in sol.x_grid]
        w.csv("density.csv", header, ([t, *row] for t, row in zip(sol.density_times, sol.density)))
    stats = {
        "picard_iterations": len(sol.picard_residuals),
        "final_residual": sol.picard_residuals[-1],
        "nx": len(sol.x_grid),
        "nt": len(sol.t_grid),
        "max_mass_error": float(np.max(np.abs(sol.mass - 1.0))),
    }
    w.manifest("meanfield", cfg.to_dict(), cfg.seed, "deterministic (no random streams)", stats,
               time.perf_counter() - t0)
    return 0


def cmd_chaos(args, cfg: config_mod.RunConfig) -> int:
    ch = dict(cfg.chaos)
    if args.n_list is not None:
        ch["n_list"] = args.n_list
    if args.replicas is not None:
        ch["replicas"] = args.replicas
    if args.workers is not None:
        ch["workers"] = args.workers
    if args.snapshot_grid is not None:
        ch["snapshot_grid"] = args.snapshot_grid
    cfg = dataclasses.replace(cfg, chaos=ch)
    if ch["replicas"] is not None and int(ch["replicas"]) < 2:
        return _fail("replicas must be >= 2: the standard error is undefined for a single replica")
    t0 = time.perf_counter()
    try:
        rep = chaos.run_convergence_study(
            cfg.network, ch["n_list"], replicas=ch["replicas"], master_seed=cfg.seed, grid=cfg.grid,
            workers=int(ch["workers"]), three_times=bool(ch["three_times"]), snapshot_grid=int(ch["snapshot_grid"]),
        )
    except (chaos.StudyError, ValueError, RuntimeError) as e:
        return _fail(str(e), 1)
    w = artifacts.Writer(args.out)
    w.text("report.json", rep.to_json())
    w.text("report.csv", rep.to_csv())
    if args.per_replica:
        w.text("replicas.csv", rep.replicas_csv())
    stats = {
        "replicas": len(rep.replicas),
        "spikes": sum(r.spikes for r in rep.replicas),
        "copy_spikes": sum(r.copy_spikes for r in rep.replicas),
    }
    if rep.fits is not None:
        stats["slope"] = rep.fits.slope
        stats["slope_se"] = rep.fits.slope_se
    w.manifest("chaos", cfg.to_dict(), cfg.seed, artifacts.CHAOS_SEEDS, stats, time.perf_counter() - t0)
    for r in rep.rows:
        print(f"N={r['N']:>6d}  D={r['mean_D']:.6g} +- {r['se_D']:.2g}  W1={r['mean_W1']:.6g} +- {r['se_W1']:.2g}")
    if rep.fits is not None:
        print(f"log-log slope ({rep.fits.column}): {rep.fits.slope:.4f} +- {rep.fits.slope_se:.4f}")
    return 0


def cmd_validate(args, cfg: config_mod.RunConfig) -> int:
    v = cfg.validate
    try:
        grid = intensity.GridSpec(v["x_max"], v["m_max"], v["nx"], v["nm"])
    except intensity.IntensityError as e:
        return _fail(str(e))
    rep = intensity.check_hypotheses(cfg.network.intensity, grid)
    for line in rep.lines():
        print(line)
    print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 1


COMMANDS = {"simulate": cmd_simulate, "meanfield": cmd_meanfield, "chaos": cmd_chaos, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config)
    except config_mod.ConfigError as e:
        return _fail(f"config error: {e}")
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return COMMANDS[args.command](args, cfg)


if __name__ == "__main__":
    sys.exit(main())
