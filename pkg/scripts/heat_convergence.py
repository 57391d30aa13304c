"""Grid refinement study for the 1D heat problem against its exact solution."""
import argparse
from pathlib import Path

from qrdiff.cli import format_converge, run_converge
from qrdiff.config import parse_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "heat.ini", type=Path)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("-o", "--output", default=None)
    args = ap.parse_args()
    _, table = run_converge(parse_config(args.config), args.levels, args.output)
    print(format_converge(table))


if __name__ == "__main__":
    main()
