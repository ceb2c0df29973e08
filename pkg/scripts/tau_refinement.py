"""Step-size refinement on the sleep-mode star scenario.

Prints the gap between trajectories at consecutive step sizes, the halving
factors and the Holder-modulus margins. Usage: python scripts/tau_refinement.py
"""
import argparse

from hwg.limit_lab import run_sleep_mode, stability_constants, star_sleep_scenario, tau_refinement


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=4, help="number of step sizes, starting at 1/4")
    ap.add_argument("--horizon", type=float, default=1.0)
    args = ap.parse_args()
    sc = star_sleep_scenario()
    taus = [0.25 / 2 ** k for k in range(args.levels)]
    runs = {t: run_sleep_mode(sc, t, args.horizon) for t in taus}
    table = tau_refinement(lambda t: runs[t].fields, sc.graph, taus,
                           [args.horizon / 2, args.horizon],
                           lambda t: stability_constants(runs[t], args.horizon)[1])
    print("tau        gap@T/2       gap@T")
    for t, gaps in zip(taus, table.gaps):
        print(f"{t:<10.5f} {gaps[0]:.6e}  {gaps[1]:.6e}")
    print("halving factors:", ", ".join(f"{f:.3f}" for f in table.factors))
    for t, (margin, const) in zip(taus, table.holder):
        print(f"holder tau={t:.5f}: worst lhs - rhs = {margin:.3e} (C_T = {const:.4f})")
    print("passed" if table.passed else "FAILED")


if __name__ == "__main__":
    main()
