import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qiopa.amplifier import (
    AmplifierParams,
    added_sequence,
    collinear_macrostate,
    fringe_scan,
    generator_matrix,
    injection_frame_occupations,
    linearized_spontaneous,
    linearized_stimulated,
    macrostate_pair,
    noncollinear_macrostate,
    oracle_evolve,
    sequence_length,
    spdc_singlet_macrostate,
    squeezed_sequence,
    tmsv_sequence,
    twin_beam,
)
from qiopa.errors import OutOfRangeError, TruncationError, ValidationError
from qiopa.fock import H_FRAME, ModeLayout, PolarizationFrame, build_fock, rotate_all

gains = st.floats(0.05, 1.2)


def test_params_derived_quantities():
    p = AmplifierParams(1.0)
    assert p.C == pytest.approx(math.cosh(1.0))
    assert p.Gamma == pytest.approx(math.tanh(1.0))
    assert p.mbar == pytest.approx(math.sinh(1.0) ** 2)


@pytest.mark.parametrize("g", [-0.1, float("nan"), float("inf")])
def test_params_reject_bad_gain(g):
    with pytest.raises(ValidationError):
        AmplifierParams(g)


@given(gains)
def test_sequences_are_normalised(g):
    p = AmplifierParams(g)
    n = sequence_length(p)
    assert np.sum(np.abs(tmsv_sequence(p, n)) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(np.abs(added_sequence(p, n)) ** 2) == pytest.approx(1.0, abs=1e-12)
    for odd in (False, True):
        assert np.sum(np.abs(squeezed_sequence(p, n, odd)) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_twin_beam_matches_operator_oracle(oracles):
    state = twin_beam(AmplifierParams(0.6))
    diag = [state.tensor[k, k] for k in range(4)]
    ref = [oracles["twin_beam_g06_diagonal"][str(k)] for k in range(4)]
    assert np.allclose(diag, ref, atol=1e-12)


@given(gains)
def test_twin_beam_norm_and_photon_numbers(g):
    p = AmplifierParams(g)
    s = twin_beam(p, epsilon_trunc=1e-10)
    assert s.norm_deficit < 1e-10
    # thermal photon statistics: the dropped tail holds sum_{n > c} n (1 - G^2) G^(2n)
    c = s.layout.cutoffs[0]
    n = np.arange(c + 1, c + 2000)
    tail = np.sum(n * (1 - p.Gamma**2) * p.Gamma ** (2 * n))
    assert s.mean_photons(0) == pytest.approx(p.mbar - tail, abs=1e-12)
    assert s.mean_photons(1) == pytest.approx(p.mbar - tail, abs=1e-12)


def test_twin_beam_polarised_layout_uses_h_modes():
    s = twin_beam(AmplifierParams(0.3), ModeLayout(2, 12), epsilon_trunc=1e-6)
    t = s.tensor
    assert np.allclose(t[:, 1:, :, :], 0) and np.allclose(t[:, :, :, 1:], 0)


def test_truncation_budget_is_enforced():
    with pytest.raises(TruncationError):
        twin_beam(AmplifierParams(1.0), 4, epsilon_trunc=1e-8)


@pytest.mark.parametrize("g", [0.5, 1.0, 1.5])
def test_collinear_totals(g, oracles):
    col = collinear_macrostate(AmplifierParams(g), 0.3, epsilon_trunc=1e-10)
    total = col.mean_photons(0) + col.mean_photons(1)
    assert total == pytest.approx(oracles["visibility"][f"{g}"]["collinear_total"], rel=1e-6)


@pytest.mark.parametrize("g", [0.5, 1.0])
def test_noncollinear_totals_from_state(g, oracles):
    non = noncollinear_macrostate(AmplifierParams(g), H_FRAME, epsilon_trunc=1e-8)
    total = non.mean_photons(0) + non.mean_photons(1)
    assert total == pytest.approx(oracles["visibility"][f"{g}"]["noncollinear_total"], rel=1e-6)


@given(gains, st.floats(-math.pi, math.pi))
def test_collinear_comb_support(g, phase):
    """In the injection frame, the axis mode holds odd and the perpendicular mode even photon numbers."""
    s = collinear_macrostate(AmplifierParams(g), phase, basis="frame", epsilon_trunc=1e-6)
    prob = s.probabilities()
    n = np.arange(prob.shape[0])
    wrong = ((n[:, None] % 2) == 0) | ((n[None, :] % 2) == 1)
    assert prob[wrong].sum() < 1e-14
    hv = collinear_macrostate(AmplifierParams(g), phase, epsilon_trunc=1e-6).probabilities()
    off = np.abs(n[:, None] - n[None, :]) != 1
    assert hv[:hv.shape[0], :hv.shape[1]][off[:hv.shape[0], :hv.shape[1]]].sum() < 1e-14


def test_collinear_frame_and_hv_agree():
    p = AmplifierParams(0.5)
    phi = 0.7
    frame = PolarizationFrame.equatorial(phi)
    hv = collinear_macrostate(p, phi, 30, epsilon_trunc=1.0)
    labelled = collinear_macrostate(p, phi, 60, basis=frame, epsilon_trunc=1.0)
    rotated = rotate_all(labelled, frame).tensor[:31, :31]
    assert np.allclose(rotated, hv.tensor, atol=1e-12)


def test_noncollinear_is_frame_covariant():
    p = AmplifierParams(0.4)
    frame = PolarizationFrame(1.0, 0.4)
    direct = noncollinear_macrostate(p, frame.vector(), 12, epsilon_trunc=1.0)
    labelled = noncollinear_macrostate(p, frame, 24, basis=frame, epsilon_trunc=1.0)
    rotated = rotate_all(labelled, frame).tensor[:13, :13, :13, :13]
    assert np.allclose(rotated, direct.tensor, atol=1e-10)


def test_spdc_state_is_rotation_invariant():
    p = AmplifierParams(0.3)
    s = spdc_singlet_macrostate(p, epsilon_trunc=1e-12)
    r = rotate_all(s, PolarizationFrame(0.9, 2.1))
    assert abs(abs(r.overlap(s)) ** 2 - 1) < 1e-10


def test_macrostate_pair_components_are_orthogonal():
    a, b = macrostate_pair(AmplifierParams(0.5), "noncollinear", PolarizationFrame(0.3, 1.0), 10, epsilon_trunc=1.0)
    assert abs(a.overlap(b)) < 1e-12


@pytest.mark.parametrize("g", [0.2, 0.6])
def test_oracle_noncollinear_small(g):
    p = AmplifierParams(g)
    closed = noncollinear_macrostate(p, H_FRAME, epsilon_trunc=1e-10)
    res = oracle_evolve("noncollinear", g, build_fock(closed.layout, (1, 0, 0, 0)), leakage_budget=1e-8)
    assert abs(res.state.overlap(closed)) ** 2 > 1 - 1e-8


def test_oracle_guards():
    lay = ModeLayout(1, 3)
    with pytest.raises(TruncationError):
        oracle_evolve("collinear", 2.0, build_fock(lay, (1, 0)), leakage_budget=1e-8)
    with pytest.raises(ValidationError):
        oracle_evolve("nonsense", 0.1, build_fock(lay, (1, 0)))


def test_generator_is_antisymmetric():
    a = generator_matrix("noncollinear", ModeLayout(2, 2))
    assert np.allclose(a, -a.T)


def test_linearised_amplitudes():
    s = linearized_stimulated(0.1)
    lay = s.layout
    ratio = s.amplitudes[lay.index((2, 0, 0, 1))] / s.amplitudes[lay.index((1, 1, 1, 0))]
    assert ratio == pytest.approx(-math.sqrt(2))
    v = linearized_spontaneous(0.1)
    assert v.amplitudes[lay.index((1, 0, 0, 1))] == pytest.approx(-v.amplitudes[lay.index((0, 1, 1, 0))])
    with pytest.raises(OutOfRangeError):
        linearized_stimulated(0.5)


@pytest.mark.parametrize("config", ["collinear", "noncollinear"])
@pytest.mark.parametrize("g", [0.5, 1.0, 1.5, 3.0])
def test_fringe_visibility_laws(config, g, oracles):
    pattern = fringe_scan(config, AmplifierParams(g), np.linspace(0, 2 * math.pi, 24, endpoint=False))
    assert pattern.visibility == pytest.approx(oracles["visibility"][f"{g}"][config], abs=1e-6)


def test_fringe_state_method_agrees():
    phases = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    p = AmplifierParams(0.6)
    a = fringe_scan("collinear", p, phases)
    b = fringe_scan("collinear", p, phases, method="state", epsilon_trunc=1e-10)
    assert np.allclose(a.intensities_plus, b.intensities_plus, atol=1e-6)


def test_injection_frame_occupations():
    p = AmplifierParams(1.0)
    m = p.mbar
    assert injection_frame_occupations(p, "noncollinear") == pytest.approx((2 * m + 1, m), rel=1e-10)
    assert injection_frame_occupations(p, "collinear") == pytest.approx((3 * m + 1, m), rel=1e-10)
