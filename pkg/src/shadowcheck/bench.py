"""Timing comparison of the compiled and pure-Python kernels."""
import time

import numpy as np

from . import kernels


def _cases(scale=1.0):
    rng = np.random.default_rng(0)
    n_rec = int(200_000 * scale)
    bases = rng.integers(0, 3, (n_rec, 6))
    outcomes = rng.integers(0, 2, (n_rec, 6))
    table = rng.standard_normal((6, 3, 2)) + 0j
    vec = rng.standard_normal(2**14) + 1j * rng.standard_normal(2**14)
    prev = np.unique(rng.integers(0, 50_000, int(40_000 * scale)))
    cand = rng.integers(0, 50_000, int(400_000 * scale))
    left = rng.integers(0, 9, int(100_000 * scale))
    right = rng.permutation(left)
    weights = rng.random(int(1_000_000 * scale))
    return {
        "compositions": lambda m: m.compositions(int(12 + 8 * scale), 6),
        "local_values": lambda m: m.local_values(bases, outcomes, table),
        "pauli_apply": lambda m: m.pauli_apply(vec, 0b10110011001101, 0b01101100110110),
        "frontier_mask": lambda m: m.frontier_mask(prev, cand),
        "bucket_match": lambda m: m.bucket_match(left, right),
        "alias_table": lambda m: m.alias_table(weights),
    }


def run(repeat=3, scale=1.0):
    """Best-of-``repeat`` seconds per kernel and backend, plus the speedup of each backend over Python."""
    backends = kernels.backends()
    rows = []
    for name, fn in _cases(scale).items():
        times = {}
        for bname, mod in backends.items():
            best = np.inf
            for _ in range(repeat):
                t0 = time.perf_counter()
                fn(mod)
                best = min(best, time.perf_counter() - t0)
            times[bname] = best
        for bname, t in times.items():
            rows.append({"kernel": name, "backend": bname, "seconds": t, "speedup_vs_python": times["python"] / t})
    return rows


def format_table(rows):
    lines = [f"{'kernel':<14} {'backend':<8} {'seconds':>10} {'speedup':>8}"]
    for r in rows:
        lines.append(f"{r['kernel']:<14} {r['backend']:<8} {r['seconds']:>10.4f} {r['speedup_vs_python']:>8.1f}")
    return "\n".join(lines)
