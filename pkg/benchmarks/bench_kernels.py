"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0] [--csv out.csv]
"""
import argparse

from shadowcheck import bench, kernels
from shadowcheck.io import write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--csv", default=None)
    args = p.parse_args()
    if "cython" not in kernels.backends():
        print("compiled extension not built; only the fallback can be timed")
    rows = bench.run(repeat=args.repeat, scale=args.scale)
    print(bench.format_table(rows))
    if args.csv:
        write_csv(args.csv, rows)


if __name__ == "__main__":
    main()
