"""Mean-field solver self-convergence: sup |M_h - M_{h/2}| as the step shrinks."""

import argparse
import math

import numpy as np

from agenet import config, laws, pde
from agenet.intensity import IntensityModel, PurePower


def reference():
    return pde.MeanFieldConfig(alpha=1.0, epsilon=0.5, horizon=2.0, g0=laws.Dirac(0.0), m0=1.0,
                               intensity=IntensityModel(PurePower(1.0)))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=None, help="YAML config (default: linear rate from a Dirac start)")
    p.add_argument("--steps", default="4e-3,2e-3,1e-3,5e-4", help="comma-separated dx values, each half the last")
    args = p.parse_args()

    if args.config is None:
        mfc, grid = reference(), pde.PDEGrid()
    else:
        cfg = config.load(args.config)
        mfc, grid = pde.MeanFieldConfig.from_network(cfg.network), cfg.grid
    hs = [float(v) for v in args.steps.split(",")]
    sols = [pde.picard_solve(mfc, pde.PDEGrid(dx=h, x_max=grid.x_max, picard_tol=grid.picard_tol,
                                              max_iters=grid.max_iters)) for h in hs]
    prev = None
    for h, a, b in zip(hs[1:], sols, sols[1:]):
        gap = float(np.max(np.abs(b.activity[::2] - a.activity)))
        order = "" if prev is None else f"  observed order {math.log2(prev / gap):.2f}"
        print(f"dx={2 * h:.1e} vs {h:.1e}: sup |dM| = {gap:.3e}{order}")
        prev = gap


if __name__ == "__main__":
    main()
