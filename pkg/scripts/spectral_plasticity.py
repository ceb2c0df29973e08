"""Plasticity runs on the constructed spectral-network scenarios.

Prints final structural weights, amplitudes, alignment cosines and the KKT
pressure report per scenario. Usage: python scripts/spectral_plasticity.py
"""
import argparse

import numpy as np

from hwg.spectral import (alignment_cosines, amplitude_pruning_scenario, pressure_report,
                          pruning_scenario, run_plasticity, selectivity_scenario,
                          synchronized_scenario)

SCENARIOS = {
    "pruning": (pruning_scenario, 2000, 0.1),
    "amplitude-pruning": (amplitude_pruning_scenario, 2000, 0.1),
    "selectivity": (selectivity_scenario, 2000, 0.1),
    "alignment": (synchronized_scenario, 20000, 0.2),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", help=f"subset of {sorted(SCENARIOS)}")
    args = ap.parse_args()
    unknown = set(args.names) - set(SCENARIOS)
    if unknown:
        ap.error(f"unknown scenarios {sorted(unknown)}")
    np.set_printoptions(precision=5, suppress=True)
    for name in args.names or SCENARIOS:
        factory, steps, lr = SCENARIOS[name]
        net, psi, phi, free = factory()
        run = run_plasticity(net, psi, phi, steps, lr, free=free)
        fin = run.net
        rep = pressure_report(fin, psi, phi, 0)
        print(f"== {name}: energy {run.energies[0]:.6f} -> {run.energies[-1]:.6e}")
        print("  p      ", fin.p[:, 0])
        print("  r      ", fin.r[:, 0])
        print("  cos    ", alignment_cosines(fin, psi, phi, 0))
        print(f"  pressure residual {rep.residual:.2e}, KKT ok {rep.kkt_ok}")


if __name__ == "__main__":
    main()
