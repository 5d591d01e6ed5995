"""Optimal cloning and spin-flip fidelities, the 1->2 covariant cloner, symmetrisation.

Polarisation qubits are single photons on one spatial mode with cutoff 1:
|H> = |1,0> and |V> = |0,1>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._io import csv_text
from .amplifier import linearized_stimulated
from .errors import DegenerateOutcomeError, LayoutError, OutOfRangeError, ValidationError
from .fock import DensityOperator, FockState, ModeLayout, PolarizationFrame, as_density

QUBIT_LAYOUT = ModeLayout(1, 1)
QUBIT_PAIR_LAYOUT = ModeLayout(2, 1)
_QUBIT_INDEX = (QUBIT_LAYOUT.index((1, 0)), QUBIT_LAYOUT.index((0, 1)))


@dataclass(frozen=True)
class CloningSpec:
    n_in: int
    m_out: int
    flavor: str = "universal"

    def __post_init__(self):
        if self.flavor not in ("universal", "phase_covariant"):
            raise ValidationError(f"flavor must be 'universal' or 'phase_covariant', got {self.flavor!r}")
        if int(self.n_in) < 1:
            raise OutOfRangeError("n_in must be >= 1")
        if int(self.m_out) < int(self.n_in):
            raise OutOfRangeError(f"m_out ({self.m_out}) must be >= n_in ({self.n_in})")

    @property
    def beta(self) -> float:
        return self.n_in / self.m_out


def universal_clone_fidelity(spec: CloningSpec) -> float:
    """(N + 1 + N/M) / (N + 2)."""
    if spec.flavor != "universal":
        raise ValidationError("universal_clone_fidelity needs a universal spec")
    n = spec.n_in
    return (n + 1 + spec.beta) / (n + 2)


def phase_covariant_fidelity(spec: CloningSpec) -> float:
    """Optimal 1->M cloning of equatorial qubits; separate odd and even M laws."""
    if spec.flavor != "phase_covariant":
        raise ValidationError("phase_covariant_fidelity needs a phase_covariant spec")
    if spec.n_in != 1:
        raise OutOfRangeError("phase-covariant fidelity is available for a single input copy only")
    m = spec.m_out
    if m % 2 == 1:
        return 0.5 * (1.0 + (m + 1) / (2.0 * m))
    return 0.5 * (1.0 + math.sqrt(m * (m + 2)) / (2.0 * m))


def unot_fidelity(n_in: int) -> float:
    """Optimal universal spin-flip from N copies: (N + 1) / (N + 2)."""
    if int(n_in) < 1:
        raise OutOfRangeError("n_in must be >= 1")
    return (n_in + 1) / (n_in + 2)


# ---------------------------------------------------------------------------
# qubit embedding
# ---------------------------------------------------------------------------


def qubit_state(vector) -> FockState:
    """Single-photon polarisation state with H/V amplitudes ``vector``."""
    amps = np.zeros(QUBIT_LAYOUT.dim, dtype=np.complex128)
    amps[list(_QUBIT_INDEX)] = np.asarray(vector, dtype=np.complex128)
    return FockState(QUBIT_LAYOUT, amps)


def qubit_density(matrix) -> DensityOperator:
    mat = np.zeros((QUBIT_LAYOUT.dim, QUBIT_LAYOUT.dim), dtype=np.complex128)
    mat[np.ix_(_QUBIT_INDEX, _QUBIT_INDEX)] = np.asarray(matrix, dtype=np.complex128)
    return DensityOperator(QUBIT_LAYOUT, mat)


def qubit_matrix(state) -> np.ndarray:
    """2x2 polarisation matrix of a single-photon state."""
    if state.layout != QUBIT_LAYOUT:
        raise LayoutError(f"expected a single-photon qubit layout, got {state.layout}")
    mat = as_density(state).matrix
    outside = abs(np.trace(mat).real - np.trace(mat[np.ix_(_QUBIT_INDEX, _QUBIT_INDEX)]).real)
    if outside > 1e-10:
        raise ValidationError("state has weight outside the single-photon subspace")
    return mat[np.ix_(_QUBIT_INDEX, _QUBIT_INDEX)].copy()


def _pair_density(matrix4: np.ndarray) -> DensityOperator:
    """Embed a two-qubit matrix (H/V per photon) into the two-spatial-mode layout."""
    idx = [QUBIT_PAIR_LAYOUT.index(a + b) for a in ((1, 0), (0, 1)) for b in ((1, 0), (0, 1))]
    mat = np.zeros((QUBIT_PAIR_LAYOUT.dim, QUBIT_PAIR_LAYOUT.dim), dtype=np.complex128)
    mat[np.ix_(idx, idx)] = matrix4
    return DensityOperator(QUBIT_PAIR_LAYOUT, mat)


def pair_matrix(state) -> np.ndarray:
    """4x4 two-qubit matrix of a one-photon-per-mode state on the qubit-pair layout."""
    if state.layout != QUBIT_PAIR_LAYOUT:
        raise LayoutError(f"expected the qubit-pair layout, got {state.layout}")
    idx = [QUBIT_PAIR_LAYOUT.index(a + b) for a in ((1, 0), (0, 1)) for b in ((1, 0), (0, 1))]
    return as_density(state).matrix[np.ix_(idx, idx)].copy()


# ---------------------------------------------------------------------------
# covariant cloner and symmetrisation
# ---------------------------------------------------------------------------


def _reduce(psi: np.ndarray, keep: int) -> np.ndarray:
    t = psi.reshape(2, 2, 2)
    t = np.moveaxis(t, keep, 0).reshape(2, 4)
    return t @ t.conj().T


def covariant_clone_map(input_qubit: PolarizationFrame) -> tuple:
    """Clone and anticlone marginals of the optimal 1->2 universal cloner.

    The three-qubit output sqrt(2/3)|psi psi psi_perp> - sqrt(1/6)(|psi psi_perp> + |psi_perp psi>)|psi>
    is built explicitly and traced down.  Returns (clone, anticlone).
    """
    u = input_qubit.vector()
    w = input_qubit.perp_vector()
    kron = lambda a, b, c: np.kron(np.kron(a, b), c)
    psi = math.sqrt(2.0 / 3.0) * kron(u, u, w) - math.sqrt(1.0 / 6.0) * (kron(u, w, u) + kron(w, u, u))
    return qubit_density(_reduce(psi, 0)), qubit_density(_reduce(psi, 2))


SWAP = np.eye(4)[[0, 2, 1, 3]]
SYMMETRIC_PROJECTOR = 0.5 * (np.eye(4) + SWAP)


def symmetrize_two_qubits(a, b) -> tuple:
    """Project a product of two polarisation qubits on the symmetric subspace.

    Returns (normalised two-photon state on the qubit-pair layout, success probability).
    """
    rho = np.kron(qubit_matrix(a), qubit_matrix(b))
    proj = SYMMETRIC_PROJECTOR @ rho @ SYMMETRIC_PROJECTOR
    prob = float(np.trace(proj).real)
    if prob < 1e-12:
        raise DegenerateOutcomeError("symmetric projection has zero probability")
    return _pair_density(proj / prob), prob


def pair_marginal(state, keep: int) -> DensityOperator:
    t = pair_matrix(state).reshape(2, 2, 2, 2)
    red = np.einsum("ajbj->ab", t) if keep == 0 else np.einsum("iaib->ab", t)
    return qubit_density(red)


# ---------------------------------------------------------------------------
# cloning from the amplifier output
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CloneExtraction:
    clone_fidelity: float
    unot_fidelity: float
    ratio_R: float
    ratio_R_star: float


def clone_statistics(state: FockState) -> CloneExtraction:
    """Clone and flip statistics of a non-collinear output written in injection-frame labels.

    Conditions on two photons in spatial mode 1 and one in mode 2.  A clone
    photon matches the input with the fraction of mode-1 photons on the axis;
    the flipped photon in mode 2 succeeds when it is perpendicular.
    """
    lay = state.layout
    if lay.spatial_modes != 2 or not lay.polarized:
        raise LayoutError("expected a two-spatial-mode polarised state")
    p = state.probabilities()
    p20 = float(p[2, 0, 0, 1] + p[2, 0, 1, 0])
    p11 = float(p[1, 1, 0, 1] + p[1, 1, 1, 0])
    p02 = float(p[0, 2, 0, 1] + p[0, 2, 1, 0])
    flip_ok = float(p[2, 0, 0, 1] + p[1, 1, 0, 1] + p[0, 2, 0, 1])
    flip_bad = float(p[2, 0, 1, 0] + p[1, 1, 1, 0] + p[0, 2, 1, 0])
    total = p20 + p11 + p02
    if total <= 0:
        raise DegenerateOutcomeError("no (2, 1) photon events in the state")
    return CloneExtraction(
        clone_fidelity=(p20 + 0.5 * p11) / total,
        unot_fidelity=flip_ok / total,
        ratio_R=p20 / p11 if p11 > 0 else math.inf,
        ratio_R_star=flip_ok / flip_bad if flip_bad > 0 else math.inf,
    )


def amplifier_clone_extract(g_small: float) -> CloneExtraction:
    """Clone fidelity, flip fidelity and signal-to-noise ratios of the linearised amplifier."""
    return clone_statistics(linearized_stimulated(g_small))


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


def clone_table(flavor: str, n_in: int, m_max: int) -> list:
    """Rows (flavor, N, M, fidelity) for M = N..m_max."""
    rows = []
    for m in range(n_in, m_max + 1):
        spec = CloningSpec(n_in, m, flavor)
        f = universal_clone_fidelity(spec) if flavor == "universal" else phase_covariant_fidelity(spec)
        rows.append((flavor, n_in, m, f))
    return rows


def clone_table_csv(rows: list, meta: dict | None = None) -> str:
    return csv_text(("flavor", "N", "M", "fidelity"), rows, meta)
