"""Coupling distance and W1 against N, with the log-log slope."""

import argparse
import time
from pathlib import Path

from agenet import chaos, config

ROOT = Path(__file__).resolve().parent.parent


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=str(ROOT / "configs" / "chaos.yaml"))
    p.add_argument("--n-list", default=None, help="comma-separated sizes (default: from the config)")
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--three-times", action="store_true", help="also evaluate at T/3 and 2T/3")
    p.add_argument("--json", default=None, help="write the full report here")
    args = p.parse_args()

    cfg = config.load(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    n_list = cfg.chaos["n_list"] if args.n_list is None else [int(v) for v in args.n_list.split(",")]
    t0 = time.perf_counter()
    rep = chaos.run_convergence_study(cfg.network, n_list, replicas=args.replicas, master_seed=seed,
                                      grid=cfg.grid, workers=args.workers, three_times=args.three_times)
    print(f"{'N':>6}  {'reps':>4}  {'mean D':>10}  {'se D':>9}  {'W1(mu,eta)':>10}  {'W1(mu,mf)':>10}")
    for r in rep.rows:
        print(f"{r['N']:>6}  {r['replicas']:>4}  {r['mean_D']:>10.5f}  {r['se_D']:>9.2e}  "
              f"{r['mean_W1_eta']:>10.5f}  {r['mean_W1']:>10.5f}")
        for t, v in r.get("by_time", {}).items():
            print(f"{'':>6}  t={float(t):.3f}  D={v['mean_D']:.5f}  W1={v['mean_W1']:.5f}")
    if rep.fits is not None:
        f = rep.fits
        print(f"log-log slope ({f.column}): {f.slope:.3f} +- {f.slope_se:.3f}")
        print(f"c log(1+N)/sqrt(N) fit: c = {f.scale_c:.4f}, relative residual {f.scaled_residual:.3f}")
    print(f"wall clock {time.perf_counter() - t0:.1f}s")
    if args.json:
        Path(args.json).write_text(rep.to_json())


if __name__ == "__main__":
    main()
