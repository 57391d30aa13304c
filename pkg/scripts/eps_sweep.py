"""Regularisation sweep: space-time L2 gaps between consecutive eps values."""
import argparse

from qrdiff.grid import Grid
from qrdiff.integrator import epsilon_sweep
from qrdiff.seird import SeirdParams, build_seird_quadratic, seird_initial_profiles


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=128)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--eps", default="1e-2,1e-3,1e-4")
    args = ap.parse_args()
    eps = tuple(float(v) for v in args.eps.split(","))

    g = Grid((args.cells,), (1.0,))
    sys = build_seird_quadratic(SeirdParams(domain=(1.0,)))
    sw = epsilon_sweep(sys, g, seird_initial_profiles("gaussian", g), args.T, eps)
    for (a, b), gap in zip(zip(eps, eps[1:]), sw.gaps):
        print(f"{a:.0e} vs {b:.0e}: {gap:.6e}")
    print("strictly decreasing" if sw.monotone else "NOT decreasing")


if __name__ == "__main__":
    main()
