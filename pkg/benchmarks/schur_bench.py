"""Compare the compiled and NumPy Schur-accumulation kernels.

Generates random symmetric COO-encoded constraint families like those the
interior-point solver produces (one entry per (matrix position, scalar
variable)), then times H[j,k] += <A_j, Wi A_k Wi> with both backends and
checks they agree.

Run:  python3 benchmarks/schur_bench.py
"""

from __future__ import annotations

import time

import numpy as np

from cpolyopt.kernels import backend_name, schur_pairs, schur_pairs_numpy


def make_case(side: int, m: int, entries: int, seed: int):
    rng = np.random.default_rng(seed)
    iii = rng.integers(0, side, entries)
    jjj = rng.integers(0, side, entries)
    ii = np.minimum(iii, jjj).astype(np.int32)
    jj = np.maximum(iii, jjj).astype(np.int32)
    kk = rng.integers(0, m, entries).astype(np.int32)
    vv = rng.standard_normal(entries)
    ww = np.where(ii == jj, vv / np.sqrt(2.0), vv * np.sqrt(2.0))
    A = rng.standard_normal((side, side))
    Wi = A @ A.T + side * np.eye(side)
    return ii, jj, kk, ww, np.ascontiguousarray(Wi)


def run(kernel, m, args, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        H = np.zeros((m, m))
        t0 = time.perf_counter()
        kernel(H, *args)
        best = min(best, time.perf_counter() - t0)
        out = H
    return best, out


def main() -> None:
    if backend_name() != "cython":
        print("note: compiled extension not built; timing NumPy against itself")
    cases = [
        (10, 55, 120),
        (21, 231, 700),
        (36, 666, 2200),
        (56, 1596, 6500),
        (84, 3570, 16000),
    ]
    print(f"{'side':>5} {'scalars':>8} {'entries':>8} "
          f"{'numpy (ms)':>11} {'cython (ms)':>12} {'speedup':>8}  agree")
    for side, m, entries in cases:
        args = make_case(side, m, entries, seed=side)
        t_np, H_np = run(schur_pairs_numpy, m, args, repeats=3)
        t_cy, H_cy = run(schur_pairs, m, args, repeats=3)
        agree = np.allclose(H_np, H_cy, rtol=1e-10, atol=1e-10)
        print(f"{side:5d} {m:8d} {entries:8d} "
              f"{t_np * 1e3:11.2f} {t_cy * 1e3:12.2f} {t_np / t_cy:8.2f}  {agree}")
        if not agree:
            raise SystemExit("backends disagree!")
    print(f"\nactive backend in this environment: {backend_name()}")


if __name__ == "__main__":
    main()
