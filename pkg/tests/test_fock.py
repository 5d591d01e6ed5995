import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density, random_vector
from qiopa.errors import DimensionGuardError, LayoutError, OutOfRangeError
from qiopa.fock import (
    DIAGONAL_FRAME,
    H_FRAME,
    DensityOperator,
    FockState,
    ModeLayout,
    PolarizationFrame,
    annihilation,
    bures_distance,
    build_fock,
    fidelity,
    partial_trace,
    polarization_correlations,
    rotate_polarization,
    state_from_dict,
    truncate_total,
    vacuum,
)

angles = st.floats(0.0, math.pi)
phases = st.floats(-math.pi, math.pi)


def test_layout_indexing_is_row_major():
    lay = ModeLayout(2, 2)
    assert lay.shape == (3, 3, 3, 3)
    assert lay.index((0, 0, 0, 1)) == 1
    assert lay.index((1, 0, 0, 0)) == 27
    assert lay.occupations(lay.index((2, 1, 0, 2))) == (2, 1, 0, 2)


def test_layout_per_mode_cutoffs_and_unpolarised():
    lay = ModeLayout(2, (1, 4))
    assert lay.shape == (2, 2, 5, 5)
    single = ModeLayout(1, 7, polarized=False)
    assert single.shape == (8,) and single.dim == 8


def test_layout_rejects_bad_input():
    with pytest.raises(LayoutError):
        ModeLayout(0, 2)
    with pytest.raises(LayoutError):
        ModeLayout(2, (1, 2, 3))
    with pytest.raises(OutOfRangeError):
        ModeLayout(1, 2).index((3, 0))


def test_layout_roundtrip():
    lay = ModeLayout(2, (1, 3))
    assert ModeLayout.from_dict(lay.to_dict()) == lay


def test_vacuum_and_fock_builders():
    lay = ModeLayout(1, 3)
    v = vacuum(lay)
    assert v.amplitudes[0] == 1 and v.norm == pytest.approx(1.0)
    f = build_fock(lay, (2, 1))
    assert f.mean_photons(0) == pytest.approx(2.0) and f.mean_photons(1) == pytest.approx(1.0)


def test_state_is_read_only():
    s = vacuum(ModeLayout(1, 2))
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2.0


def test_state_json_roundtrip():
    rng = np.random.default_rng(3)
    lay = ModeLayout(1, 3)
    s = FockState(lay, random_vector(rng, lay.dim))
    back = FockState.from_json(s.to_json())
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-14)
    rho = DensityOperator(lay, random_density(rng, lay.dim))
    back = DensityOperator.from_json(rho.to_json())
    assert np.allclose(back.matrix, rho.matrix, atol=1e-14)
    assert isinstance(state_from_dict(rho.to_dict()), DensityOperator)


def test_density_shape_validation():
    lay = ModeLayout(1, 1)
    with pytest.raises(LayoutError):
        DensityOperator(lay, np.eye(3))


def test_dense_guard():
    big = ModeLayout(2, 12)  # 13^4 = 28561 > guard
    amps = np.zeros(big.dim, dtype=complex)
    amps[0] = 1
    with pytest.raises(DimensionGuardError):
        FockState(big, amps).to_density()


def test_frame_vectors_are_orthonormal():
    for f in (H_FRAME, DIAGONAL_FRAME, PolarizationFrame(0.7, 1.9)):
        u = f.matrix()
        assert np.allclose(u.conj().T @ u, np.eye(2))
        assert abs(np.vdot(f.vector(), f.perp_vector())) < 1e-15
        assert abs(abs(np.vdot(f.flipped().vector(), f.perp_vector())) - 1) < 1e-12


@given(angles, phases, st.integers(0, 2**31 - 1))
def test_rotation_preserves_norm_and_inverts(theta, phi, seed):
    rng = np.random.default_rng(seed)
    lay = ModeLayout(1, 4)
    # keep the total photon number within the cutoff so rotation is exact
    amps = np.zeros(lay.shape, dtype=complex)
    for n in range(5):
        for m in range(5 - n):
            amps[n, m] = rng.normal() + 1j * rng.normal()
    s = FockState.from_tensor(lay, amps / np.linalg.norm(amps))
    f = PolarizationFrame(theta, phi)
    r = rotate_polarization(s, f)
    assert r.norm == pytest.approx(1.0, abs=1e-12)
    back = rotate_polarization(r, f, inverse=True)
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)


def test_rotation_maps_frame_photon_to_vector():
    f = PolarizationFrame(1.1, 0.4)
    one_axis = build_fock(ModeLayout(1, 2), (1, 0))
    out = rotate_polarization(one_axis, f)
    amps = np.array([out.tensor[1, 0], out.tensor[0, 1]])
    assert np.allclose(amps, f.vector(), atol=1e-14)


def test_partial_trace_of_product():
    lay = ModeLayout(2, 1)
    t = np.zeros(lay.shape, dtype=complex)
    t[1, 0, 0, 1] = 1.0
    red = partial_trace(FockState.from_tensor(lay, t), 0)
    assert red.trace == pytest.approx(1.0)
    assert red.diagonal()[1, 0] == pytest.approx(1.0)


def test_fidelity_and_bures_limits():
    rng = np.random.default_rng(5)
    lay = ModeLayout(1, 2)
    a = FockState(lay, random_vector(rng, lay.dim))
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)
    assert bures_distance(a, a) == pytest.approx(0.0, abs=1e-6)
    rho = DensityOperator(lay, random_density(rng, lay.dim))
    f_mixed = fidelity(a, rho)
    f_pure = float(np.real(a.amplitudes.conj() @ rho.matrix @ a.amplitudes))
    assert f_mixed == pytest.approx(f_pure, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_fidelity_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    lay = ModeLayout(1, 1)
    a = DensityOperator(lay, random_density(rng, lay.dim))
    b = DensityOperator(lay, random_density(rng, lay.dim, rank=2))
    f1, f2 = fidelity(a, b), fidelity(b, a)
    assert 0.0 <= f1 <= 1.0
    assert f1 == pytest.approx(f2, abs=1e-9)


def test_annihilation_and_correlations():
    lay = ModeLayout(1, 2)
    s = build_fock(lay, (2, 0))
    a = annihilation(lay, 0)
    out = a @ s.amplitudes
    assert out[lay.index((1, 0))] == pytest.approx(math.sqrt(2))
    g = polarization_correlations(s, 0)
    assert np.allclose(g, [[2, 0], [0, 0]])


def test_truncate_total():
    lay = ModeLayout(1, 3)
    amps = np.ones(lay.dim, dtype=complex)
    t = truncate_total(FockState(lay, amps / np.linalg.norm(amps)), 2)
    occ = lay.number_grids()
    assert np.all(t.tensor[(occ[0] + occ[1]) > 2] == 0)
