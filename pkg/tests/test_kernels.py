import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qiopa import _kernels as K
from qiopa.wigner import fock_input, wigner_points

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


def _rho(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("flag, expected", [("1", False), ("true", False), ("0", True), ("", True)])
def test_env_flag_selects_backend(monkeypatch, flag, expected):
    monkeypatch.setenv("QIOPA_DISABLE_NUMBA", flag)
    assert K.numba_enabled() == (expected and K.HAVE_NUMBA)


def test_fallback_is_used_when_disabled(monkeypatch):
    monkeypatch.setenv("QIOPA_DISABLE_NUMBA", "1")
    calls = []
    monkeypatch.setattr(K, "displacement_matrix_numpy", lambda b, n: calls.append(n) or np.eye(n))
    K.displacement_matrix(0.3, 4)
    assert calls == [4]


def test_results_do_not_depend_on_backend(monkeypatch):
    monkeypatch.setenv("QIOPA_DISABLE_NUMBA", "1")
    slow = float(wigner_points(fock_input(1), 0.2 + 0.1j, reflectivity=0.1))
    monkeypatch.setenv("QIOPA_DISABLE_NUMBA", "0")
    fast = float(wigner_points(fock_input(1), 0.2 + 0.1j, reflectivity=0.1))
    assert slow == pytest.approx(fast, abs=1e-13)


@given(st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False), st.integers(1, 60))
def test_displacement_is_unitary_in_the_low_block(beta, n):
    reach = math.sqrt(n) + abs(beta)
    d = K.displacement_matrix_numpy(beta, int(reach**2 + 12 * reach + 30))
    assert np.allclose((d.conj().T @ d)[:n, :n], np.eye(n), atol=1e-8)


@needs_numba
@given(st.complex_numbers(max_magnitude=8, allow_nan=False, allow_infinity=False), st.integers(1, 80))
def test_displacement_backends_agree(beta, n):
    a = K.displacement_matrix_numpy(beta, n)
    b = K.displacement_matrix_numba(complex(beta), n)
    assert np.allclose(a, b, atol=1e-12, rtol=1e-10)


@needs_numba
@pytest.mark.parametrize("n", [1, 5, 30])
def test_wigner_backends_agree(n):
    rng = np.random.default_rng(n)
    rho = _rho(rng, n)
    pts = rng.normal(size=25) + 1j * rng.normal(size=25)
    assert np.allclose(K.wigner_dm_numpy(rho, pts), K.wigner_dm_numba(rho, pts), atol=1e-12)


@needs_numba
@pytest.mark.parametrize("n", [1, 8, 64])
def test_parity_backends_agree(n):
    rng = np.random.default_rng(n)
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi /= np.linalg.norm(psi)
    pts = rng.normal(size=25) + 1j * rng.normal(size=25)
    w = 0.9 ** np.arange(n)
    assert np.allclose(K.parity_weighted_displaced_numpy(psi, pts, w),
                       K.parity_weighted_displaced_numba(psi, pts, w), atol=1e-12)


def test_vacuum_wigner_kernel():
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1
    pts = np.array([0.0, 0.5j, 1.0])
    ref = 2 / math.pi * np.exp(-2 * np.abs(pts) ** 2)
    assert np.allclose(K.wigner_dm_numpy(rho, pts), ref, atol=1e-14)
