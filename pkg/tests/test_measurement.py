import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qiopa.amplifier import AmplifierParams
from qiopa.errors import DegenerateOutcomeError, OutOfRangeError, ValidationError
from qiopa.fock import DIAGONAL_FRAME, H_FRAME, PolarizationFrame
from qiopa.measurement import (
    OFilterSpec,
    ProductSource,
    SingletSource,
    conclusive_threshold_sweep,
    micro_macro_state,
    nosignaling_check,
    nosignaling_monte_carlo,
    ofilter_outcomes,
    ppt_entangled,
    pseudo_spin_witness,
    thin_counts,
    thinning_matrix,
    werner_extract,
    werner_extract_bruteforce,
    werner_matrix,
    witness_sweep_csv,
)
from qiopa._io import read_csv


def _random_counts(rng, size=9):
    p = rng.random((2, size, size))
    return p / p.sum()


@given(st.integers(0, 2**31 - 1), st.integers(0, 6), st.floats(0.0, 1.0))
def test_ofilter_outcomes_are_complete(seed, k, eta):
    counts = _random_counts(np.random.default_rng(seed))
    joint = ofilter_outcomes(counts, k, eta)
    assert joint.shape == (2, 3)
    assert np.all(joint >= -1e-15)
    assert joint.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(joint.sum(axis=1), counts.sum(axis=(1, 2)), atol=1e-12)


@given(st.floats(0.0, 1.0))
def test_thinning_preserves_probability(eta):
    b = thinning_matrix(10, eta)
    assert np.allclose(b.sum(axis=0), 1.0, atol=1e-12)
    dist = np.full((4, 4), 1 / 16)
    assert thin_counts(dist, eta).sum() == pytest.approx(1.0)


def test_ofilter_spec_validation():
    with pytest.raises(OutOfRangeError):
        OFilterSpec(threshold=-1)
    with pytest.raises(OutOfRangeError):
        OFilterSpec(efficiency=1.2)


def test_witness_is_maximal_without_gain():
    rep = pseudo_spin_witness(SingletSource(AmplifierParams(0.0), "collinear"), OFilterSpec(0))
    assert rep.S == pytest.approx(3.0, abs=1e-12)


def test_witness_degenerate_without_gain_and_threshold():
    with pytest.raises(DegenerateOutcomeError):
        pseudo_spin_witness(SingletSource(AmplifierParams(0.0), "collinear"), OFilterSpec(1))


def test_witness_needs_three_bases():
    with pytest.raises(ValidationError):
        pseudo_spin_witness(SingletSource(AmplifierParams(0.5), "noncollinear"), OFilterSpec(0), bases=[H_FRAME])


def _bloch(theta, phi):
    return PolarizationFrame(theta, phi).vector()


@settings(max_examples=25)
@given(
    st.floats(0.0, math.pi), st.floats(0.0, 2 * math.pi), st.floats(0.0, math.pi), st.floats(0.0, 2 * math.pi),
    st.floats(0.1, 1.2), st.integers(0, 3), st.floats(0.3, 1.0),
)
def test_separable_sources_respect_witness_bound(t1, p1, t2, p2, g, k, eta):
    src = ProductSource(_bloch(t1, p1), _bloch(t2, p2), AmplifierParams(g), "noncollinear")
    try:
        rep = pseudo_spin_witness(src, OFilterSpec(k, efficiency=eta))
    except DegenerateOutcomeError:
        return
    assert rep.S <= 1.0 + 1e-9


def test_witness_json_and_csv():
    rep = pseudo_spin_witness(SingletSource(AmplifierParams(0.4), "noncollinear"), OFilterSpec(1, efficiency=0.8))
    d = json.loads(rep.to_json())
    assert set(d) >= {"meta"} or "S" in json.dumps(d)
    _, cols, rows = read_csv(witness_sweep_csv([(0.4, 0.8, 1, rep)]))
    assert cols == ["g", "eta", "k", "V1", "V2", "V3", "S", "conclusive_fraction"]
    assert float(rows[0][6]) == pytest.approx(rep.S)


def test_conclusive_fraction_falls_with_threshold():
    src = SingletSource(AmplifierParams(0.8), "noncollinear")
    frac = conclusive_threshold_sweep(src, H_FRAME, 0.9, range(6))
    assert frac[0] <= 1.0
    assert np.all(np.diff(frac) <= 1e-12)


@pytest.mark.parametrize("config", ["collinear", "noncollinear"])
def test_no_signalling_exact(config):
    state = micro_macro_state(AmplifierParams(0.5), config, epsilon_trunc=1e-6)
    rep = nosignaling_check(state, (H_FRAME, DIAGONAL_FRAME), OFilterSpec(1, DIAGONAL_FRAME, 0.7))
    assert rep.max_deviation < 1e-12
    counts = nosignaling_check(state, (H_FRAME, PolarizationFrame(1.0, 0.3)), "counts")
    assert counts.max_deviation < 1e-12


def test_no_signalling_monte_carlo():
    state = micro_macro_state(AmplifierParams(0.5), "collinear", epsilon_trunc=1e-6)
    spec = OFilterSpec(1, DIAGONAL_FRAME, 0.7)
    mc = nosignaling_monte_carlo(state, (H_FRAME, DIAGONAL_FRAME), spec, 20000, seed=3)
    again = nosignaling_monte_carlo(state, (H_FRAME, DIAGONAL_FRAME), spec, 20000, seed=3)
    assert mc == again
    assert mc.consistent(4.0)


def test_werner_closed_form_matches_oracle(oracles):
    for key, ref in oracles["werner_p"].items():
        g, eta = map(float, key.split(","))
        assert werner_extract(AmplifierParams(g), eta).singlet_weight == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("g", [0.4, 1.2])
@pytest.mark.parametrize("eta", [0.1, 0.9])
def test_werner_bruteforce_matches_closed_form(g, eta):
    brute = werner_extract_bruteforce(AmplifierParams(g), eta)
    closed = werner_extract(AmplifierParams(g), eta)
    assert brute.singlet_weight == pytest.approx(closed.singlet_weight, abs=1e-8)
    assert np.allclose(brute.matrix, werner_matrix(closed.singlet_weight), atol=1e-8)


def test_werner_methods_agree():
    a = werner_extract_bruteforce(AmplifierParams(0.4), 0.5, method="pairs")
    b = werner_extract_bruteforce(AmplifierParams(0.4), 0.5, method="tensor")
    assert np.allclose(a.matrix, b.matrix, atol=1e-12)


def test_werner_weight_falls_with_gain():
    for eta in (0.1, 0.5, 0.9):
        p = [werner_extract(AmplifierParams(g), eta).singlet_weight for g in np.linspace(0, 3, 31)]
        assert np.all(np.diff(p) < 0)


def test_werner_json_has_no_nan():
    text = werner_extract(AmplifierParams(1.0), 0.5).to_json()
    assert "NaN" not in text
    json.loads(text)


@given(st.floats(0.0, 1.0))
def test_ppt_eigenvalue_of_werner_family(p):
    entangled, low = ppt_entangled(werner_matrix(p))
    assert low == pytest.approx(min((1 - 3 * p) / 4, (1 + p) / 4), abs=1e-12)
    assert entangled == (p > 1 / 3 + 1e-12) or abs(p - 1 / 3) < 1e-9


def test_ppt_singlet():
    entangled, low = ppt_entangled(werner_matrix(1.0))
    assert entangled and low == pytest.approx(-0.5)


def test_witness_visibility_under_heavy_loss(oracles):
    src = SingletSource(AmplifierParams(1.0), "noncollinear", epsilon_trunc=1e-13)
    for k, ref in oracles["witness_noncollinear_g1_eta005"].items():
        rep = pseudo_spin_witness(src, OFilterSpec(int(k), efficiency=0.05))
        assert rep.visibilities == pytest.approx((ref, ref, ref), abs=1e-9)
    # a threshold of 2 leaves roughly one conclusive event in a thousand
    assert 1e-3 < pseudo_spin_witness(src, OFilterSpec(2, efficiency=0.05)).filtering_probability < 3e-3
