"""Long-time behaviour of the Ohmic mean-square displacement.

Prints t ds/dt against 2 hbar / (pi zeta) at zero temperature (logarithmic
spreading) and s/t against 2kT/zeta at finite temperature (diffusion).
"""
import argparse
import math

import numpy as np

from qbm_coherence.bath import BathModel, BathSpec, green_function, mean_square_displacement


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--zeta", type=float, default=1.0)
    parser.add_argument("--temp", type=float, default=0.5)
    args = parser.parse_args(argv)

    cold = BathSpec(BathModel.OHMIC_FREE, zeta=args.zeta)
    warm = BathSpec(BathModel.OHMIC_FREE, zeta=args.zeta, kT=args.temp)
    log_slope = 2 / (math.pi * args.zeta)
    diffusion = 2 * args.temp / args.zeta
    print(f"{'gamma t':>10} {'t sdot (kT=0)':>16} {'ratio':>10} {'s/t (kT>0)':>14} {'ratio':>10} {'zeta G':>12}")
    for gt in np.geomspace(1e-1, 1e5, 13):
        t = gt / cold.gamma
        _, sdot = mean_square_displacement(cold, t)
        s, _ = mean_square_displacement(warm, t)
        G, _ = green_function(cold, t)
        print(f"{gt:10.3g} {t * sdot:16.10f} {t * sdot / log_slope:10.6f} "
              f"{s / t:14.8f} {s / t / diffusion:10.6f} {args.zeta * G:12.9f}")


if __name__ == "__main__":
    main()
