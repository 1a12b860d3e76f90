"""Effect of haze-line bin size and subset cap on the estimated transmission."""
import argparse
import math

import numpy as np

from msdehaze.config import PipelineConfig
from msdehaze.restore import run_pipeline
from msdehaze.synth import evaluate, make_layered_scene, synthesize, within_line_variance


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, nargs="+", default=[120, 360, 720], help="bin step is pi/N")
    p.add_argument("--nus", type=int, nargs="+", default=[50, 200])
    p.add_argument("--rho-wgif", type=int, nargs="+", default=[25, 60])
    args = p.parse_args()

    airlight = np.array([0.8, 0.82, 0.85])
    scene = make_layered_scene(args.size, args.size, 4, 1.0, airlight, args.seed)
    z = synthesize(scene)
    print(f"{'bin':>8} {'nu':>4} {'rho':>4} {'subsets':>8} {'t-MAE':>7} {'img-MAE':>8} {'line-var':>9}")
    for nb in args.bins:
        for nu in args.nus:
            for rho in args.rho_wgif:
                cfg = PipelineConfig(bin_step=math.pi / nb, nu=nu, rho_wgif=rho)
                res = run_pipeline(z, cfg, airlight)
                rep = evaluate(scene.clean, res.image, t_true=scene.transmission, t_est=res.stages.refined.t)
                r = res.stages.clusters.radius
                valid = r >= cfg.r_min
                var = within_line_variance(res.stages.averaged.t / np.where(valid, r, 1.0),
                                           np.where(valid, scene.labels, -1))
                print(f"{'pi/' + str(nb):>8} {nu:4d} {rho:4d} {res.stages.clusters.n_subsets:8d} "
                      f"{rep.transmission_mae:7.4f} {rep.mae:8.4f} {var:9.4f}")


if __name__ == "__main__":
    main()
