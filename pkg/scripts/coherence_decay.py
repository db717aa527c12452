"""Visibility a(t) and interference attenuation exp(-A(t)) for several widths.

Ohmic friction with a UV cutoff (the attenuation needs a finite velocity
variance); prints one column pair per packet width.
"""
import argparse
import math

import numpy as np

from qbm_coherence.bath import BathModel, BathSpec, kinetic_coefficients
from qbm_coherence.state import SuperpositionSpec, covariance_coefficients
from qbm_coherence.wigner import attenuation_exponent, coherence_visibility


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--temp", type=float, default=1.0)
    parser.add_argument("--cutoff", type=float, default=50.0)
    parser.add_argument("--dist", type=float, default=4.0)
    parser.add_argument("--sigmas", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    args = parser.parse_args(argv)

    bath = BathSpec(BathModel.OHMIC_FREE, kT=args.temp, cutoff=args.cutoff)
    states = [SuperpositionSpec(s, args.dist) for s in args.sigmas]
    header = "".join(f"  a(s={s.sigma:g})  e^-A(s={s.sigma:g})" for s in states)
    print(f"{'gamma t':>10}{header}")
    for t in np.concatenate([[0.0], np.geomspace(1e-2, 1e4, 25)]):
        kin = kinetic_coefficients(bath, float(t))
        cells = []
        for st in states:
            cov = covariance_coefficients(kin, st)
            cells.append(f"  {coherence_visibility(kin, st):10.7f}  {math.exp(-attenuation_exponent(cov, kin, st)):13.7f}")
        print(f"{t:10.4g}{''.join(cells)}")
    print("limits: " + ", ".join(f"exp(-d^2/4s^2) = {math.exp(-s.overlap_exponent):.7f}" for s in states))


if __name__ == "__main__":
    main()
