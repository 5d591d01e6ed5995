"""Hot numeric kernels: displacement matrix elements and displaced-parity sums.

Every kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version with identical semantics.  The numba path is used when numba imports
and the environment variable ``QIOPA_DISABLE_NUMBA`` is not set to a truthy
value.  ``benchmarks/bench_kernels.py`` times both.

Displacement matrix elements are generated one diagonal ``k = m - n`` at a
time from the normalised Laguerre recurrence

    f_{n+1} = [(2n+1+k-x) f_n - sqrt(n(n+k)) f_{n-1}] / sqrt((n+1)(n+k+1)),

    f_n = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^{(k)}(x),   x = |beta|^2,

so that <n+k|D(beta)|n> = f_n e^{i k arg beta} and
<n|D(beta)|n+k> = f_n (-e^{-i arg beta})^k.  The recurrence runs on a
mantissa/log-scale pair, which keeps it finite for |beta|^2 in the thousands
where e^{-x/2} alone underflows.
"""

from __future__ import annotations

import math
import os

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}
_UNDERFLOW = -745.0
_BIG = 1e100
_SMALL = 1e-100

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def numba_enabled() -> bool:
    """True when dispatch goes to the numba kernels."""
    flag = os.environ.get("QIOPA_DISABLE_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag not in _TRUTHY


# ---------------------------------------------------------------------------
# numpy implementations (vectorised over diagonals or evaluation points)
# ---------------------------------------------------------------------------


def displacement_matrix_numpy(beta: complex, n: int) -> np.ndarray:
    beta = complex(beta)
    out = np.zeros((n, n), dtype=np.complex128)
    x = abs(beta) ** 2
    if x == 0.0:
        np.fill_diagonal(out, 1.0)
        return out
    ph = beta / abs(beta)
    k = np.arange(n, dtype=np.float64)
    lgk = np.array([math.lgamma(v + 1.0) for v in k])
    scale = 0.5 * k * math.log(x) - 0.5 * x - 0.5 * lgk
    f = np.ones(n)
    fm1 = np.zeros(n)
    ph_low = ph ** k
    ph_up = (-np.conj(ph)) ** k
    kk = np.arange(n)
    for step in range(n):
        live = kk < n - step
        idx = kk[live]
        val = np.where(scale[live] > _UNDERFLOW, f[live] * np.exp(np.maximum(scale[live], _UNDERFLOW)), 0.0)
        out[step + idx, step] = val * ph_low[live]
        out[step, step + idx] = val * ph_up[live]
        nxt = ((2 * step + 1 + k - x) * f - np.sqrt(step * (step + k)) * fm1) / np.sqrt((step + 1.0) * (step + k + 1.0))
        fm1, f = f, nxt
        a = np.maximum(np.abs(f), np.abs(fm1))
        resc = (a > _BIG) | ((a < _SMALL) & (a > 0))
        if resc.any():
            f = np.where(resc, f / np.where(resc, a, 1.0), f)
            fm1 = np.where(resc, fm1 / np.where(resc, a, 1.0), fm1)
            scale = np.where(resc, scale + np.log(np.where(resc, a, 1.0)), scale)
    return out


def _diag_start(x: np.ndarray, k: int) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 0.5 * k * np.log(x) - 0.5 * x - 0.5 * math.lgamma(k + 1.0)


def wigner_dm_numpy(rho: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """W(alpha) = (2/pi) sum_mn rho_mn (-1)^m <n|D(2 alpha)|m>, vectorised over points."""
    rho = np.asarray(rho, dtype=np.complex128)
    beta = 2.0 * np.asarray(alphas, dtype=np.complex128).ravel()
    n_dim = rho.shape[0]
    x = np.abs(beta) ** 2
    zero = x == 0.0
    xs = np.where(zero, 1.0, x)
    ph = np.where(zero, 1.0, beta / np.where(zero, 1.0, np.abs(beta)))
    total = np.zeros(beta.shape[0])
    parity = (-1.0) ** np.arange(n_dim)
    for k in range(n_dim):
        scale = _diag_start(xs, k)
        f = np.ones_like(xs)
        fm1 = np.zeros_like(xs)
        phk = ph**k
        wk = 1.0 if k == 0 else 2.0
        for n in range(n_dim - k):
            val = np.where(scale > _UNDERFLOW, f * np.exp(np.maximum(scale, _UNDERFLOW)), 0.0)
            total += wk * parity[n] * np.real(rho[n, n + k] * val * phk)
            nxt = ((2 * n + 1 + k - xs) * f - math.sqrt(n * (n + k)) * fm1) / math.sqrt((n + 1.0) * (n + k + 1.0))
            fm1, f = f, nxt
            a = np.maximum(np.abs(f), np.abs(fm1))
            resc = (a > _BIG) | ((a < _SMALL) & (a > 0))
            if resc.any():
                safe = np.where(resc, a, 1.0)
                f = f / safe
                fm1 = fm1 / safe
                scale = scale + np.log(safe)
    diag_par = float(np.sum(parity * np.real(np.diag(rho))))
    total = np.where(zero, diag_par, total)
    return (2.0 / math.pi) * total


def parity_weighted_displaced_numpy(psi: np.ndarray, betas: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_l weights[l] |<l|D(beta)|psi>|^2 for every beta, vectorised over points."""
    psi = np.asarray(psi, dtype=np.complex128)
    betas = np.asarray(betas, dtype=np.complex128).ravel()
    n_dim = psi.shape[0]
    n_keep = weights.shape[0]
    x = np.abs(betas) ** 2
    zero = x == 0.0
    xs = np.where(zero, 1.0, x)
    ph = np.where(zero, 1.0, betas / np.where(zero, 1.0, np.abs(betas)))
    v = np.zeros((n_keep, betas.shape[0]), dtype=np.complex128)
    for k in range(n_dim):
        steps = min(n_dim - k, n_keep)
        if steps <= 0:
            break
        scale = _diag_start(xs, k)
        f = np.ones_like(xs)
        fm1 = np.zeros_like(xs)
        ph_low = ph**k
        ph_up = (-np.conj(ph)) ** k
        for n in range(steps):
            val = np.where(scale > _UNDERFLOW, f * np.exp(np.maximum(scale, _UNDERFLOW)), 0.0)
            if n + k < n_keep:
                v[n + k] += val * ph_low * psi[n]
            if k > 0:
                v[n] += val * ph_up * psi[n + k]
            nxt = ((2 * n + 1 + k - xs) * f - math.sqrt(n * (n + k)) * fm1) / math.sqrt((n + 1.0) * (n + k + 1.0))
            fm1, f = f, nxt
            a = np.maximum(np.abs(f), np.abs(fm1))
            resc = (a > _BIG) | ((a < _SMALL) & (a > 0))
            if resc.any():
                safe = np.where(resc, a, 1.0)
                f = f / safe
                fm1 = fm1 / safe
                scale = scale + np.log(safe)
    out = np.einsum("l,lp->p", weights, np.abs(v) ** 2)
    base = np.abs(psi[:n_keep]) ** 2
    return np.where(zero, float(np.dot(weights[: base.shape[0]], base)), out)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def displacement_matrix_numba(beta, n):  # pragma: no cover - compiled
        out = np.zeros((n, n), dtype=np.complex128)
        x = abs(beta) ** 2
        if x == 0.0:
            for i in range(n):
                out[i, i] = 1.0
            return out
        ph = beta / abs(beta)
        lx = math.log(x)
        ph_low = 1.0 + 0.0j
        ph_up = 1.0 + 0.0j
        up_step = -np.conj(ph)
        for k in range(n):
            scale = 0.5 * k * lx - 0.5 * x - 0.5 * math.lgamma(k + 1.0)
            f = 1.0
            fm1 = 0.0
            for m in range(n - k):
                if scale > _UNDERFLOW:
                    val = f * math.exp(scale)
                    out[m + k, m] = val * ph_low
                    out[m, m + k] = val * ph_up
                nxt = ((2 * m + 1 + k - x) * f - math.sqrt(m * (m + k)) * fm1) / math.sqrt((m + 1.0) * (m + k + 1.0))
                fm1 = f
                f = nxt
                a = max(abs(f), abs(fm1))
                if a > _BIG or (a < _SMALL and a > 0.0):
                    f /= a
                    fm1 /= a
                    scale += math.log(a)
            ph_low *= ph
            ph_up *= up_step
        return out

    @numba.njit(cache=True)
    def _wigner_dm_point(rho, beta):  # pragma: no cover - compiled
        n_dim = rho.shape[0]
        x = abs(beta) ** 2
        total = 0.0
        if x == 0.0:
            for i in range(n_dim):
                total += (1.0 if i % 2 == 0 else -1.0) * rho[i, i].real
            return total
        ph = beta / abs(beta)
        lx = math.log(x)
        phk = 1.0 + 0.0j
        for k in range(n_dim):
            scale = 0.5 * k * lx - 0.5 * x - 0.5 * math.lgamma(k + 1.0)
            f = 1.0
            fm1 = 0.0
            wk = 1.0 if k == 0 else 2.0
            for m in range(n_dim - k):
                if scale > _UNDERFLOW:
                    val = f * math.exp(scale)
                    term = (rho[m, m + k] * phk).real * val
                    total += wk * (term if m % 2 == 0 else -term)
                nxt = ((2 * m + 1 + k - x) * f - math.sqrt(m * (m + k)) * fm1) / math.sqrt((m + 1.0) * (m + k + 1.0))
                fm1 = f
                f = nxt
                a = max(abs(f), abs(fm1))
                if a > _BIG or (a < _SMALL and a > 0.0):
                    f /= a
                    fm1 /= a
                    scale += math.log(a)
            phk *= ph
        return total

    @numba.njit(cache=True)
    def wigner_dm_numba(rho, alphas):  # pragma: no cover - compiled
        out = np.empty(alphas.shape[0])
        for p in range(alphas.shape[0]):
            out[p] = (2.0 / math.pi) * _wigner_dm_point(rho, 2.0 * alphas[p])
        return out

    @numba.njit(cache=True)
    def _parity_point(psi, beta, weights):  # pragma: no cover - compiled
        n_dim = psi.shape[0]
        n_keep = weights.shape[0]
        x = abs(beta) ** 2
        if x == 0.0:
            acc = 0.0
            for i in range(min(n_dim, n_keep)):
                acc += weights[i] * abs(psi[i]) ** 2
            return acc
        v = np.zeros(n_keep, dtype=np.complex128)
        ph = beta / abs(beta)
        lx = math.log(x)
        ph_low = 1.0 + 0.0j
        ph_up = 1.0 + 0.0j
        up_step = -np.conj(ph)
        for k in range(n_dim):
            steps = min(n_dim - k, n_keep)
            if steps <= 0:
                break
            scale = 0.5 * k * lx - 0.5 * x - 0.5 * math.lgamma(k + 1.0)
            f = 1.0
            fm1 = 0.0
            for m in range(steps):
                if scale > _UNDERFLOW:
                    val = f * math.exp(scale)
                    if m + k < n_keep:
                        v[m + k] += val * ph_low * psi[m]
                    if k > 0:
                        v[m] += val * ph_up * psi[m + k]
                nxt = ((2 * m + 1 + k - x) * f - math.sqrt(m * (m + k)) * fm1) / math.sqrt((m + 1.0) * (m + k + 1.0))
                fm1 = f
                f = nxt
                a = max(abs(f), abs(fm1))
                if a > _BIG or (a < _SMALL and a > 0.0):
                    f /= a
                    fm1 /= a
                    scale += math.log(a)
            ph_low *= ph
            ph_up *= up_step
        acc = 0.0
        for i in range(n_keep):
            acc += weights[i] * (v[i].real ** 2 + v[i].imag ** 2)
        return acc

    @numba.njit(cache=True)
    def parity_weighted_displaced_numba(psi, betas, weights):  # pragma: no cover - compiled
        out = np.empty(betas.shape[0])
        for p in range(betas.shape[0]):
            out[p] = _parity_point(psi, betas[p], weights)
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def displacement_matrix(beta: complex, n: int) -> np.ndarray:
    """Exact truncated matrix <m|D(beta)|n>, 0 <= m, n < n."""
    if numba_enabled():
        return displacement_matrix_numba(complex(beta), int(n))
    return displacement_matrix_numpy(beta, n)


def wigner_dm(rho: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    alphas = np.ascontiguousarray(np.ravel(alphas), dtype=np.complex128)
    if numba_enabled():
        return wigner_dm_numba(rho, alphas)
    return wigner_dm_numpy(rho, alphas)


def parity_weighted_displaced(psi: np.ndarray, betas: np.ndarray, weights: np.ndarray) -> np.ndarray:
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    betas = np.ascontiguousarray(np.ravel(betas), dtype=np.complex128)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if numba_enabled():
        return parity_weighted_displaced_numba(psi, betas, weights)
    return parity_weighted_displaced_numpy(psi, betas, weights)
