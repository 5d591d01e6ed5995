import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_vector
from qiopa._io import read_csv
from qiopa.channels import LossSpec, apply_loss
from qiopa.errors import OutOfRangeError, TruncationError
from qiopa.fock import FockState
from qiopa.wigner import (
    characteristic_function,
    degenerate_opa_state,
    fock_input,
    negativity_report,
    single_mode_layout,
    validity_radius,
    wigner_grid,
    wigner_points,
)

points = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


def coherent(beta, cutoff=40):
    n = np.arange(cutoff + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amps = np.exp(-abs(beta) ** 2 / 2 - 0.5 * log_fact) * beta ** n
    return FockState(single_mode_layout(cutoff), amps / np.linalg.norm(amps))


@given(points)
def test_characteristic_function_of_vacuum_and_photon(eta):
    r2 = abs(eta) ** 2
    vac = characteristic_function(fock_input(0, 30), eta)[0]
    one = characteristic_function(fock_input(1, 30), eta)[0]
    assert vac == pytest.approx(math.exp(-r2 / 2), abs=1e-8)
    assert one == pytest.approx((1 - r2) * math.exp(-r2 / 2), abs=1e-8)


def test_characteristic_function_at_origin_and_radius():
    rng = np.random.default_rng(4)
    s = FockState(single_mode_layout(6), random_vector(rng, 7))
    assert characteristic_function(s, 0.0)[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(OutOfRangeError):
        characteristic_function(s, validity_radius(6) + 0.1)


def test_wigner_at_origin():
    assert float(wigner_points(fock_input(0), 0.0)) == pytest.approx(2 / math.pi)
    assert float(wigner_points(fock_input(1), 0.0)) == pytest.approx(-2 / math.pi)


@given(st.floats(0.0, 1.0))
def test_lossy_photon_at_origin(r):
    assert float(wigner_points(fock_input(1), 0.0, reflectivity=r)) == pytest.approx(2 / math.pi * (2 * r - 1), abs=1e-12)


@given(points, points)
def test_coherent_state_gaussian(beta, alpha):
    w = float(wigner_points(coherent(beta), alpha))
    assert w == pytest.approx(2 / math.pi * math.exp(-2 * abs(alpha - beta) ** 2), abs=1e-9)


@given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0), points)
def test_pure_and_mixed_paths_agree(seed, r, alpha):
    rng = np.random.default_rng(seed)
    s = FockState(single_mode_layout(6), random_vector(rng, 7))
    lossy = apply_loss(s, LossSpec.from_reflectivity(r))
    assert float(wigner_points(s, alpha, reflectivity=r)) == pytest.approx(float(wigner_points(lossy, alpha)), abs=1e-10)


def test_parity_identity():
    rng = np.random.default_rng(9)
    s = FockState(single_mode_layout(8), random_vector(rng, 9))
    probs = np.abs(s.amplitudes) ** 2
    assert float(wigner_points(s, 0.0)) == pytest.approx(2 / math.pi * np.sum((-1.0) ** np.arange(9) * probs))


def test_grid_is_normalised_and_serialises():
    grid = wigner_grid(fock_input(2), resolution=121)
    assert grid.normalized_within()
    assert abs(grid.integral - 1) < 1e-3
    meta, cols, rows = read_csv(grid.to_csv())
    assert cols == ["re", "im", "W"] and len(rows) == 121 * 121
    head = json.loads(grid.header_json())
    assert "tail_mass" in json.dumps(head)


def test_window_too_small_raises():
    with pytest.raises(TruncationError):
        wigner_grid(fock_input(3), (-0.5, 0.5), (-0.5, 0.5), 11)
    grid = wigner_grid(fock_input(3), (-0.5, 0.5), (-0.5, 0.5), 11, check_tail=False)
    assert grid.tail_mass > 1e-3


def test_negativity_report_of_photon():
    rep = negativity_report(wigner_grid(fock_input(1), resolution=121))
    assert rep.min_value == pytest.approx(-2 / math.pi, abs=1e-9)
    assert abs(rep.argmin) < 1e-9
    assert rep.negative_volume > 0


def test_amplifier_without_gain_is_identity():
    s = fock_input(3, 6)
    out = degenerate_opa_state(0.0, s, 6)
    assert np.allclose(out.state.amplitudes, s.amplitudes)


def test_squeezed_vacuum_mean(oracles):
    out = degenerate_opa_state(1.0, fock_input(0))
    n = np.arange(out.cutoff + 1)
    mean = float(np.sum(n * np.abs(out.state.amplitudes) ** 2))
    assert mean == pytest.approx(oracles["squeezed_vacuum_mean_g1"], abs=1e-6)
    assert out.norm_deficit < 1e-8


def test_squeezed_photon_amplitudes(oracles):
    amps = degenerate_opa_state(1.0, fock_input(1)).state.amplitudes
    assert np.max(np.abs(amps[0::2])) < 1e-14
    for k, ref in oracles["squeezed_photon_g1"].items():
        assert abs(amps[int(k)]) == pytest.approx(ref, abs=1e-10)


def test_amplified_photon_keeps_negative_origin_under_small_loss():
    out = degenerate_opa_state(1.0, fock_input(1))
    vals = [float(wigner_points(out.state, 0.0, reflectivity=r)) for r in (0.0, 0.05, 0.2, 0.5)]
    assert vals[0] == pytest.approx(-2 / math.pi, abs=1e-7)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(0.0, abs=1e-9)
