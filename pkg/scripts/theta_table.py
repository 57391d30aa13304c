"""Auto-selected energy weights for each SEIRD preset and order."""
import argparse

from qrdiff.energy import space_time_samples, select_theta
from qrdiff.errors import SelectionError
from qrdiff.seird import SeirdParams, build_seird_delta, build_seird_original, build_seird_quadratic

PRESETS = {
    "original": build_seird_original,
    "quadratic": build_seird_quadratic,
    "delta": build_seird_delta,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--U", type=float, default=10.0)
    ap.add_argument("--orders", default="2,3,4")
    ap.add_argument("--A0", type=float, default=0.0)
    args = ap.parse_args()
    samples = space_time_samples((1.0, 1.0), 1.0, 64)
    params = SeirdParams(A0=args.A0)
    print(f"{'preset':<10} {'p':>2}  theta                      K_theta     min eig")
    for name, build in PRESETS.items():
        sys = build(params)
        for p in (int(v) for v in args.orders.split(",")):
            try:
                sel = select_theta(sys, p, args.U, samples)
            except SelectionError as exc:
                print(f"{name:<10} {p:>2}  failed: {exc}")
                continue
            print(f"{name:<10} {p:>2}  {str(sel.theta):<26} {sel.K_theta:<11.4g} {sel.min_eigenvalue:.4g}")


if __name__ == "__main__":
    main()
