"""Time the numba kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is called once
to trigger compilation, then timed over a few repeats; the two results are
also compared so a speed-up never hides a wrong answer.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qiopa import _kernels as K


def _best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(size: str):
    rng = np.random.default_rng(7)
    n = {"small": 40, "medium": 120, "large": 300}[size]
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    psi = rng.normal(size=4 * n) + 1j * rng.normal(size=4 * n)
    psi /= np.linalg.norm(psi)
    pts = rng.normal(size=200) + 1j * rng.normal(size=200)
    weights = 0.98 ** np.arange(4 * n)
    yield "displacement_matrix", (lambda: K.displacement_matrix_numpy(2.0 + 1.0j, n)), (
        lambda: K.displacement_matrix_numba(2.0 + 1.0j, n))
    yield "wigner_dm", (lambda: K.wigner_dm_numpy(rho, pts)), (lambda: K.wigner_dm_numba(rho, pts))
    yield "parity_weighted_displaced", (lambda: K.parity_weighted_displaced_numpy(psi, pts, weights)), (
        lambda: K.parity_weighted_displaced_numba(psi, pts, weights))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", choices=("small", "medium", "large"), default="medium")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    print(f"{'kernel':28s} {'numpy s':>10s} {'numba s':>10s} {'speed-up':>9s} {'max diff':>10s}")
    for name, np_fn, nb_fn in cases(args.size):
        diff = float(np.max(np.abs(np_fn() - nb_fn())))
        t_np = _best(np_fn, args.repeats)
        t_nb = _best(nb_fn, args.repeats)
        print(f"{name:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:9.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
