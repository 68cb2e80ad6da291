"""Tangent spectrum of the symmetric equilibrium across beta, reduced and full modes."""

import argparse

import numpy as np

from groupdyn.model import BiasSpec, ModelParams, uniform_state
from groupdyn.spectral import stability_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--eps", type=float, default=0.1)
    args = parser.parse_args()

    print(f"{'mode':>8} {'beta':>6} {'max Re(tangent)':>16}  class")
    for mode in ("reduced", "full"):
        for beta in np.arange(-2.0, 2.01, 0.5):
            params = ModelParams(beta=float(beta), attraction_mode=mode, bias=BiasSpec(explicit=(args.eps,) * args.k))
            rep = stability_report(params, uniform_state(args.k))
            # full mode is non-smooth at the uniform point; its numbers are one-sided averages
            print(f"{mode:>8} {beta:>6.2f} {rep.tangent_eigenvalues.real.max():>16.6f}  {rep.classification.value}")


if __name__ == "__main__":
    main()
