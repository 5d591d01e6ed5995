import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qiopa._io import read_csv
from qiopa.cloning import (
    CloningSpec,
    amplifier_clone_extract,
    clone_statistics,
    clone_table,
    clone_table_csv,
    covariant_clone_map,
    pair_marginal,
    phase_covariant_fidelity,
    qubit_density,
    qubit_matrix,
    qubit_state,
    symmetrize_two_qubits,
    universal_clone_fidelity,
    unot_fidelity,
)
from qiopa.errors import DegenerateOutcomeError, OutOfRangeError, ValidationError
from qiopa.fock import PolarizationFrame

frames = st.builds(PolarizationFrame, st.floats(0.0, math.pi), st.floats(-math.pi, math.pi))


def test_universal_law_values():
    assert universal_clone_fidelity(CloningSpec(1, 2)) == pytest.approx(5 / 6)
    assert universal_clone_fidelity(CloningSpec(2, 3)) == pytest.approx((3 + 2 / 3) / 4)
    assert universal_clone_fidelity(CloningSpec(3, 3)) == pytest.approx(1.0)


@given(st.integers(1, 20), st.integers(0, 40))
def test_universal_law_is_monotone_in_copies(n, extra):
    f = universal_clone_fidelity(CloningSpec(n, n + extra))
    g = universal_clone_fidelity(CloningSpec(n, n + extra + 1))
    assert g <= f <= 1.0
    # many clones approach the measure-and-prepare limit from above
    assert g >= unot_fidelity(n) - 1e-12


def test_phase_covariant_values(oracles):
    assert phase_covariant_fidelity(CloningSpec(1, 2, "phase_covariant")) == pytest.approx(
        oracles["phase_covariant_1_2"], abs=1e-12)
    assert phase_covariant_fidelity(CloningSpec(1, 3, "phase_covariant")) == pytest.approx(
        oracles["phase_covariant_1_3"], abs=1e-12)


def test_phase_covariant_beats_universal():
    for m in range(2, 12):
        pc = phase_covariant_fidelity(CloningSpec(1, m, "phase_covariant"))
        assert pc >= universal_clone_fidelity(CloningSpec(1, m)) - 1e-12


def test_spec_validation():
    with pytest.raises(OutOfRangeError):
        CloningSpec(3, 2)
    with pytest.raises(ValidationError):
        CloningSpec(1, 2, "bogus")
    with pytest.raises(OutOfRangeError):
        phase_covariant_fidelity(CloningSpec(2, 3, "phase_covariant"))


def test_unot_values():
    assert unot_fidelity(1) == pytest.approx(2 / 3)
    assert unot_fidelity(4) == pytest.approx(5 / 6)


@given(frames)
def test_covariant_map_fidelities(frame):
    clone, anti = covariant_clone_map(frame)
    u, w = frame.vector(), frame.perp_vector()
    rc, ra = qubit_matrix(clone), qubit_matrix(anti)
    assert np.real(u.conj() @ rc @ u) == pytest.approx(5 / 6, abs=1e-12)
    assert np.real(w.conj() @ ra @ w) == pytest.approx(2 / 3, abs=1e-12)
    assert np.trace(rc).real == pytest.approx(1.0, abs=1e-12)


def test_amplifier_extraction_ratios():
    res = amplifier_clone_extract(0.05)
    assert res.clone_fidelity == pytest.approx(5 / 6, abs=1e-3)
    assert res.unot_fidelity == pytest.approx(2 / 3, abs=1e-3)
    assert res.ratio_R == pytest.approx(2.0, abs=1e-9)
    assert res.ratio_R_star == pytest.approx(2.0, abs=1e-9)


def test_clone_statistics_on_exact_macrostate():
    from qiopa.amplifier import AmplifierParams, noncollinear_macrostate
    from qiopa.fock import H_FRAME

    s = noncollinear_macrostate(AmplifierParams(0.3), H_FRAME, 6, epsilon_trunc=1.0)
    res = clone_statistics(s)
    assert res.ratio_R == pytest.approx(2.0, abs=1e-9)
    assert res.clone_fidelity == pytest.approx(5 / 6, abs=1e-9)


def test_symmetrisation_of_pure_and_mixed():
    psi = qubit_state([1, 0])
    mixed = qubit_density(np.eye(2) / 2)
    out, prob = symmetrize_two_qubits(psi, mixed)
    assert prob == pytest.approx(0.75)
    marg = qubit_matrix(pair_marginal(out, 0))
    assert marg[0, 0].real == pytest.approx(5 / 6)
    _, prob = symmetrize_two_qubits(psi, qubit_state([0, 1]))
    assert prob == pytest.approx(0.5)


def test_symmetrisation_degenerate():
    # a zero operator on one input makes the projection probability vanish
    with pytest.raises(DegenerateOutcomeError):
        symmetrize_two_qubits(qubit_density(np.zeros((2, 2))), qubit_state([1, 0]))


def test_clone_tables():
    rows = clone_table("universal", 1, 10)
    assert rows[1] == ("universal", 1, 2, pytest.approx(0.833333, abs=1e-6))
    meta, cols, body = read_csv(clone_table_csv(rows, {"flavor": "universal"}))
    assert cols == ["flavor", "N", "M", "fidelity"]
    assert len(body) == 10 and meta["flavor"] == "universal"
