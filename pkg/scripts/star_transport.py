"""Optimal plan and displacement interpolation on the unit 3-star.

Usage: python scripts/star_transport.py [--samples 5]
"""
import argparse

import numpy as np

from hwg.graph import VertexRef, point_label, star_tree
from hwg.measures import DiscreteMeasure
from hwg.transport import displacement, solve_ot, w2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=5, help="interpolation times in [0, 1]")
    args = ap.parse_args()
    g = star_tree([1.0, 1.0, 1.0])
    leaves = [VertexRef(i) for i in (1, 2, 3)]
    a = DiscreteMeasure(zip(leaves, [1 / 3, 1 / 3, 1 / 3]))
    b = DiscreteMeasure(zip(leaves, [2 / 3, 1 / 6, 1 / 6]))
    plan = solve_ot(g, a, b)
    print(f"cost {plan.cost:.12f}  W2 {w2(g, a, b):.12f}  unique {plan.unique}")
    for i, j, m in plan.entries(1e-15):
        print(f"  {point_label(plan.source[i])} -> {point_label(plan.target[j])}: {m:.6f}")
    for t in np.linspace(0.0, 1.0, args.samples):
        m = displacement(g, plan, float(t))
        atoms = ", ".join(f"{point_label(p)}:{w:.4f}" for p, w in m)
        print(f"t={t:.3f}  W2 to start {w2(g, a, m):.6f}  [{atoms}]")


if __name__ == "__main__":
    main()
