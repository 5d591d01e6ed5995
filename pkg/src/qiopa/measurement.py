"""Dichotomic photon-counting measurements on macrostates and micro-macro pairs.

The orthogonality filter (O-filter) counts n photons along an analysis axis
and m along its perpendicular, after binomial thinning by the detection
efficiency, and answers +1 if n - m > k, -1 if m - n > k and 0 (inconclusive)
otherwise.

Joint micro-macro statistics are handled as count distributions P[s, n, m]:
s = 0 (1) for the single photon found along the axis (perpendicular) of a
frame, and (n, m) the macro counts in the same frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from ._io import csv_text, json_text
from .amplifier import (
    DEFAULT_EPSILON_TRUNC,
    AmplifierParams,
    added_sequence,
    collinear_macrostate,
    noncollinear_macrostate,
    sequence_length,
    tmsv_sequence,
)
from .cloning import pair_matrix
from .errors import DegenerateOutcomeError, LayoutError, OutOfRangeError, ValidationError
from .fock import (
    CIRCULAR_FRAME,
    DIAGONAL_FRAME,
    H_FRAME,
    DensityOperator,
    FockState,
    ModeLayout,
    PolarizationFrame,
    State,
    rotate_polarization,
)

WITNESS_BASES = (H_FRAME, DIAGONAL_FRAME, CIRCULAR_FRAME)


@dataclass(frozen=True)
class OFilterSpec:
    threshold: int = 0
    analysis_frame: PolarizationFrame = H_FRAME
    efficiency: float = 1.0

    def __post_init__(self):
        if int(self.threshold) != self.threshold or self.threshold < 0:
            raise OutOfRangeError(f"threshold must be a non-negative integer, got {self.threshold}")
        if not 0.0 <= float(self.efficiency) <= 1.0:
            raise OutOfRangeError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        object.__setattr__(self, "threshold", int(self.threshold))
        object.__setattr__(self, "efficiency", float(self.efficiency))


@dataclass(frozen=True)
class OFilterProbabilities:
    plus: float
    minus: float
    inconclusive: float

    @property
    def conclusive(self) -> float:
        return self.plus + self.minus

    def as_tuple(self) -> tuple:
        return (self.plus, self.minus, self.inconclusive)


# ---------------------------------------------------------------------------
# count distributions
# ---------------------------------------------------------------------------


def thinning_matrix(n_max: int, efficiency: float) -> np.ndarray:
    """B[a, n]: probability of detecting a of n photons at the given efficiency."""
    n = np.arange(n_max + 1, dtype=np.float64)
    a, tot = n[:, None], n[None, :]
    keep = a <= tot
    lost = np.where(keep, tot - a, 0.0)
    log_comb = gammaln(tot + 1) - gammaln(a + 1) - gammaln(lost + 1)
    log_p = log_comb + xlogy(a, efficiency) + xlog1py(lost, -efficiency)
    return np.where(keep, np.exp(np.where(keep, log_p, 0.0)), 0.0)


def thin_counts(dist: np.ndarray, efficiency: float) -> np.ndarray:
    """Binomially thin the last two (count) axes of a distribution."""
    if efficiency == 1.0:
        return np.array(dist, dtype=np.float64)
    b_row = thinning_matrix(dist.shape[-2] - 1, efficiency)
    b_col = thinning_matrix(dist.shape[-1] - 1, efficiency)
    return b_row @ np.asarray(dist, dtype=np.float64) @ b_col.T


def outcome_masks(shape: tuple, threshold: int) -> tuple:
    n = np.arange(shape[0])[:, None]
    m = np.arange(shape[1])[None, :]
    return (n - m > threshold), (m - n > threshold)


def ofilter_outcomes(dist: np.ndarray, threshold: int, efficiency: float) -> np.ndarray:
    """Outcome probabilities (+1, -1, 0) along the last axis, for count distributions on the last two axes."""
    thinned = thin_counts(dist, efficiency)
    plus_mask, minus_mask = outcome_masks(thinned.shape[-2:], threshold)
    total = thinned.sum(axis=(-2, -1))
    plus = (thinned * plus_mask).sum(axis=(-2, -1))
    minus = (thinned * minus_mask).sum(axis=(-2, -1))
    return np.stack([plus, minus, total - plus - minus], axis=-1)


def _diagonal_tensor(state: State) -> np.ndarray:
    if isinstance(state, FockState):
        return state.probabilities()
    return state.diagonal()


def frame_count_distribution(state: State, frame: PolarizationFrame, spatial_mode: int = 0) -> np.ndarray:
    """Joint (axis, perp) photon-count distribution of one spatial mode in ``frame``.

    The state is rotated into frame labels; amplitude pushed past the cutoff
    by the rotation is lost and shows up as a missing probability.
    """
    layout = state.layout
    if not layout.polarized:
        raise LayoutError("O-filter needs a polarised spatial mode")
    layout.check_mode(spatial_mode)
    if not (frame.theta == 0.0 and frame.phi == 0.0):
        state = rotate_polarization(state, frame, spatial_mode, inverse=True)
    diag = _diagonal_tensor(state)
    ax = 2 * spatial_mode
    other = tuple(i for i in range(diag.ndim) if i not in (ax, ax + 1))
    return diag.sum(axis=other) if other else diag


def ofilter_probabilities(state: State, spec: OFilterSpec, spatial_mode: int = 0) -> OFilterProbabilities:
    """Born-rule O-filter outcome probabilities for one spatial mode.

    The three values are normalised by the state's trace so that they sum to 1.
    """
    dist = frame_count_distribution(state, spec.analysis_frame, spatial_mode)
    total = dist.sum()
    if total <= 0:
        raise DegenerateOutcomeError("state has zero weight")
    out = ofilter_outcomes(dist / total, spec.threshold, spec.efficiency)
    return OFilterProbabilities(*(float(v) for v in out))


# ---------------------------------------------------------------------------
# micro-macro count sources
# ---------------------------------------------------------------------------


def _collinear_label_basis(frame: PolarizationFrame):
    if abs(math.sin(frame.theta)) < 1e-12:
        if math.cos(frame.theta) < 0:
            raise ValidationError("use the H-axis frame for H/V counting")
        return "hv"
    if abs(frame.theta - math.pi / 2) < 1e-12:
        return frame
    raise ValidationError("collinear macrostates are counted in H/V or in an equatorial frame")


def macro_count_distribution(
    params: AmplifierParams, config: str, injected, frame: PolarizationFrame, *,
    epsilon_trunc: float = DEFAULT_EPSILON_TRUNC,
) -> np.ndarray:
    """Count distribution on spatial mode 1 of a macrostate, in ``frame`` labels.

    The macrostate is written directly in the frame's labels, so no rotation
    leakage enters.  For the non-collinear amplifier the second spatial mode is
    traced out; the two injected components then add incoherently because they
    differ in their mode-2 occupations.
    """
    from .amplifier import injection_vector, trim_sequence

    vec = injection_vector(injected)
    if config == "collinear":
        st = collinear_macrostate(params, vec, basis=_collinear_label_basis(frame), epsilon_trunc=epsilon_trunc)
        return st.probabilities()
    if config != "noncollinear":
        raise ValidationError(f"config must be 'collinear' or 'noncollinear', got {config!r}")
    coef = frame.matrix().conj().T @ vec
    length = sequence_length(params)
    stim = np.abs(trim_sequence(added_sequence(params, length), epsilon_trunc * 1e-3)) ** 2
    spont = np.abs(trim_sequence(tmsv_sequence(params, length), epsilon_trunc * 1e-3)) ** 2
    d = max(stim.size + 1, spont.size)
    pad = lambda v, shift: np.concatenate([np.zeros(shift), v, np.zeros(d - shift - v.size)])
    axis = np.outer(pad(stim, 1), pad(spont, 0))
    perp = np.outer(pad(spont, 0), pad(stim, 1))
    return abs(coef[0]) ** 2 * axis + abs(coef[1]) ** 2 * perp


class SingletSource:
    """Amplified half of a polarisation singlet: (|psi>|Phi^perp> - |perp>|Phi^psi>) / sqrt2 in every frame."""

    def __init__(self, params: AmplifierParams, config: str, *, epsilon_trunc: float = DEFAULT_EPSILON_TRUNC):
        self.params, self.config, self.epsilon_trunc = params, config, epsilon_trunc

    def __call__(self, frame: PolarizationFrame) -> np.ndarray:
        axis = macro_count_distribution(self.params, self.config, frame.vector(), frame, epsilon_trunc=self.epsilon_trunc)
        perp = macro_count_distribution(
            self.params, self.config, frame.perp_vector(), frame, epsilon_trunc=self.epsilon_trunc
        )
        shape = np.maximum(axis.shape, perp.shape)
        out = np.zeros((2, *shape))
        out[0, : perp.shape[0], : perp.shape[1]] = 0.5 * perp
        out[1, : axis.shape[0], : axis.shape[1]] = 0.5 * axis
        return out


class ProductSource:
    """Separable pair: a single photon ``micro`` and the macrostate of an independent injection ``macro``."""

    def __init__(self, micro, macro, params: AmplifierParams, config: str, *,
                 epsilon_trunc: float = DEFAULT_EPSILON_TRUNC):
        self.micro = np.asarray(micro, dtype=np.complex128)
        self.macro = np.asarray(macro, dtype=np.complex128)
        self.params, self.config, self.epsilon_trunc = params, config, epsilon_trunc

    def __call__(self, frame: PolarizationFrame) -> np.ndarray:
        dist = macro_count_distribution(self.params, self.config, self.macro, frame, epsilon_trunc=self.epsilon_trunc)
        w = np.abs(frame.matrix().conj().T @ self.micro) ** 2
        return np.stack([w[0] * dist, w[1] * dist])


def _check_micro_macro_layout(layout: ModeLayout) -> None:
    if layout.spatial_modes != 2 or not layout.polarized or layout.cutoffs[0] < 1:
        raise LayoutError("expected a polarised two-mode layout with a single-photon first mode")


def joint_counts(state: State, micro_frame: PolarizationFrame, macro_frame: PolarizationFrame) -> np.ndarray:
    """P[s, n, m] of a joint state: micro photon in ``micro_frame``, macro counts in ``macro_frame``."""
    _check_micro_macro_layout(state.layout)
    if not (micro_frame.theta == 0.0 and micro_frame.phi == 0.0):
        state = rotate_polarization(state, micro_frame, 0, inverse=True)
    if not (macro_frame.theta == 0.0 and macro_frame.phi == 0.0):
        state = rotate_polarization(state, macro_frame, 1, inverse=True)
    diag = _diagonal_tensor(state)
    return np.stack([diag[1, 0], diag[0, 1]])


class StateSource:
    """Counts of an explicit joint state, obtained by rotating it into each frame."""

    def __init__(self, state: State):
        _check_micro_macro_layout(state.layout)
        self.state = state

    def __call__(self, frame: PolarizationFrame) -> np.ndarray:
        return joint_counts(self.state, frame, frame)


def micro_macro_state(
    params: AmplifierParams, config: str, cutoff: int | None = None, *, epsilon_trunc: float = DEFAULT_EPSILON_TRUNC
) -> State:
    """(|H>|Phi^V> - |V>|Phi^H>) / sqrt2, the same for every frame of the singlet.

    Collinear: a pure state on a (1, c) layout.  Non-collinear: the macrostate
    occupies two spatial modes, so the second one is traced out and a density
    operator on the (1, c) layout is returned.
    """
    if config == "collinear":
        phi_h = collinear_macrostate(params, [1.0, 0.0], cutoff, epsilon_trunc=epsilon_trunc)
        phi_v = collinear_macrostate(params, [0.0, 1.0], phi_h.layout, epsilon_trunc=epsilon_trunc)
        c = phi_h.layout.cutoffs[0]
        layout = ModeLayout(2, (1, c))
        t = np.zeros(layout.shape, dtype=np.complex128)
        t[1, 0] = phi_v.tensor / math.sqrt(2.0)
        t[0, 1] = -phi_h.tensor / math.sqrt(2.0)
        return FockState.from_tensor(layout, t)
    if config == "noncollinear":
        phi_h = noncollinear_macrostate(params, [1.0, 0.0], cutoff, epsilon_trunc=epsilon_trunc)
        phi_v = noncollinear_macrostate(params, [0.0, 1.0], phi_h.layout, epsilon_trunc=epsilon_trunc)
        c1, c2 = phi_h.layout.cutoffs
        layout = ModeLayout(2, (1, c1))
        d1 = (c1 + 1) ** 2
        rows = np.zeros((4, d1, (c2 + 1) ** 2), dtype=np.complex128)
        rows[layout.shape[1] * 1 + 0] = phi_v.amplitudes.reshape(d1, -1) / math.sqrt(2.0)
        rows[0 * layout.shape[1] + 1] = -phi_h.amplitudes.reshape(d1, -1) / math.sqrt(2.0)
        y = rows.reshape(4 * d1, -1)
        from .fock import _guard_dim

        _guard_dim(layout)
        return DensityOperator(layout, y @ y.conj().T)
    raise ValidationError(f"config must be 'collinear' or 'noncollinear', got {config!r}")


def _as_source(joint):
    if isinstance(joint, (FockState, DensityOperator)):
        return StateSource(joint)
    if callable(joint):
        return joint
    raise ValidationError("joint must be a state or a count source")


# ---------------------------------------------------------------------------
# pseudo-spin witness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessReport:
    """V_i = |<sigma_i x O_i>| on conclusive events; S = V_1 + V_2 + V_3.

    ``filtering_probability`` is the mean conclusive fraction over the three
    bases; the per-basis fractions are kept alongside.
    """

    visibilities: tuple
    S: float
    filtering_probability: float
    conclusive_fractions: tuple
    threshold: int
    efficiency: float

    def to_dict(self) -> dict:
        return {
            "V1": self.visibilities[0],
            "V2": self.visibilities[1],
            "V3": self.visibilities[2],
            "S": self.S,
            "filtering_probability": self.filtering_probability,
            "conclusive_fractions": list(self.conclusive_fractions),
            "threshold": self.threshold,
            "efficiency": self.efficiency,
            "conditioning": "conclusive O-filter outcomes only",
        }

    def to_json(self, meta: dict | None = None) -> str:
        return json_text({"witness": self.to_dict()}, meta)


def conditional_correlation(counts: np.ndarray, threshold: int, efficiency: float) -> tuple:
    """(<sigma x O> on conclusive events, conclusive fraction) from P[s, n, m]."""
    joint = ofilter_outcomes(counts, threshold, efficiency)
    total = float(joint.sum())
    conclusive = float(joint[:, :2].sum())
    if total <= 0 or conclusive <= 0:
        raise DegenerateOutcomeError("no conclusive O-filter events")
    corr = (joint[0, 0] - joint[0, 1]) - (joint[1, 0] - joint[1, 1])
    return float(corr / conclusive), conclusive / total


def pseudo_spin_witness(joint, spec: OFilterSpec, bases: Sequence[PolarizationFrame] = WITNESS_BASES) -> WitnessReport:
    """Correlation sum of a single-photon sigma_i measurement and a macro O-filter in the same three frames.

    ``joint`` is a state on a (1, c) layout or a count source such as
    :class:`SingletSource` or :class:`ProductSource`.  Loss on the macro side
    before detection is the same as a lower ``spec.efficiency``.
    """
    if len(bases) != 3:
        raise ValidationError("the witness needs three bases")
    source = _as_source(joint)
    vis, frac = [], []
    for frame in bases:
        corr, f = conditional_correlation(source(frame), spec.threshold, spec.efficiency)
        vis.append(abs(corr))
        frac.append(f)
    return WitnessReport(tuple(vis), float(sum(vis)), float(np.mean(frac)), tuple(frac), spec.threshold,
                         spec.efficiency)


def witness_sweep_csv(rows: Sequence[tuple], meta: dict | None = None) -> str:
    """rows of (g, eta, k, WitnessReport)."""
    body = [(g, eta, k, *r.visibilities, r.S, r.filtering_probability) for g, eta, k, r in rows]
    return csv_text(("g", "eta", "k", "V1", "V2", "V3", "S", "conclusive_fraction"), body, meta)


def conclusive_threshold_sweep(source, frame: PolarizationFrame, efficiency: float, thresholds) -> np.ndarray:
    """Conclusive fraction of the O-filter on the macro side for each threshold."""
    counts = source(frame).sum(axis=0)
    thinned = thin_counts(counts / counts.sum(), efficiency)
    res = []
    for k in thresholds:
        plus, minus = outcome_masks(thinned.shape, int(k))
        res.append(float((thinned * (plus | minus)).sum()))
    return np.array(res)


# ---------------------------------------------------------------------------
# no-signalling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoSignalingReport:
    """Bob's marginals under two Alice bases and how much Alice's outcome conditions them."""

    max_deviation: float
    conditional_gap: float
    bob_marginals: tuple

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "conditional_gap": self.conditional_gap,
            "bob_marginals": [m.tolist() for m in self.bob_marginals],
        }


def _bob_table(state: State, alice: PolarizationFrame, bob) -> np.ndarray:
    """J[s, b]: Alice outcome s in basis ``alice`` and Bob outcome b."""
    if isinstance(bob, OFilterSpec):
        counts = joint_counts(state, alice, bob.analysis_frame)
        return ofilter_outcomes(counts, bob.threshold, bob.efficiency)
    if bob == "counts":
        counts = joint_counts(state, alice, H_FRAME)
        return counts.reshape(2, -1)
    raise ValidationError("bob observable must be an OFilterSpec or 'counts'")


def nosignaling_check(joint: State, alice_bases: Sequence[PolarizationFrame], bob=OFilterSpec()) -> NoSignalingReport:
    """Compare Bob's unconditioned outcome distribution across Alice's measurement bases."""
    if len(alice_bases) != 2:
        raise ValidationError("alice_bases must be a pair of frames")
    tables = [_bob_table(joint, f, bob) for f in alice_bases]
    marginals = tuple(t.sum(axis=0) for t in tables)
    dev = float(np.max(np.abs(marginals[0] - marginals[1])))
    t0 = tables[0]
    p_s = t0.sum(axis=1)
    if np.all(p_s > 0):
        gap = float(np.max(np.abs(t0[0] / p_s[0] - t0[1] / p_s[1])))
    else:
        gap = 0.0
    return NoSignalingReport(dev, gap, marginals)


@dataclass(frozen=True)
class MonteCarloNoSignaling:
    max_abs_z: float
    max_deviation: float
    samples: int
    seed: int

    def consistent(self, sigma: float = 3.0) -> bool:
        return self.max_abs_z < sigma


def nosignaling_monte_carlo(
    joint: State, alice_bases: Sequence[PolarizationFrame], bob: OFilterSpec, n_samples: int, seed: int
) -> MonteCarloNoSignaling:
    """Sampled version: detector thinning and outcomes drawn event by event, then a two-sample z test."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    freqs = []
    for frame in alice_bases:
        counts = joint_counts(joint, frame, bob.analysis_frame)
        p = counts.ravel() / counts.sum()
        idx = rng.choice(p.size, size=int(n_samples), p=p)
        _, n, m = np.unravel_index(idx, counts.shape)
        n = rng.binomial(n, bob.efficiency)
        m = rng.binomial(m, bob.efficiency)
        out = np.where(n - m > bob.threshold, 0, np.where(m - n > bob.threshold, 1, 2))
        freqs.append(np.bincount(out, minlength=3) / n_samples)
    pooled = 0.5 * (freqs[0] + freqs[1])
    se = np.sqrt(np.maximum(pooled * (1 - pooled), 1e-300) * 2.0 / n_samples)
    z = np.where(pooled > 0, np.abs(freqs[0] - freqs[1]) / se, 0.0)
    return MonteCarloNoSignaling(float(z.max()), float(np.max(np.abs(freqs[0] - freqs[1]))), int(n_samples), int(seed))


# ---------------------------------------------------------------------------
# Werner states from lossy pair emission
# ---------------------------------------------------------------------------

SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)


def werner_matrix(p: float) -> np.ndarray:
    """p |singlet><singlet| + (1 - p) I / 4 over (HH, HV, VH, VV)."""
    return p * np.outer(SINGLET, SINGLET).astype(np.complex128) + (1.0 - p) * np.eye(4) / 4.0


def werner_singlet_weight(params: AmplifierParams, efficiency: float) -> float:
    """1 / (2 G^2 + 1) with G = (1 - efficiency) tanh g."""
    eff = float(efficiency)
    if not 0.0 <= eff <= 1.0:
        raise OutOfRangeError(f"efficiency must lie in [0, 1], got {efficiency}")
    gt = (1.0 - eff) * params.Gamma
    return 1.0 / (2.0 * gt * gt + 1.0)


@dataclass(frozen=True, eq=False)
class WernerResult:
    matrix: np.ndarray
    singlet_weight: float
    gain: float
    efficiency: float
    method: str
    success_probability: float = float("nan")

    @property
    def density(self) -> DensityOperator:
        from .cloning import _pair_density

        return _pair_density(self.matrix)

    def to_dict(self) -> dict:
        return {
            "g": self.gain,
            "eta": self.efficiency,
            "method": self.method,
            "singlet_weight": self.singlet_weight,
            "success_probability": None if math.isnan(self.success_probability) else self.success_probability,
            "basis": ["HH", "HV", "VH", "VV"],
            "matrix_re": self.matrix.real.tolist(),
            "matrix_im": self.matrix.imag.tolist(),
        }

    def to_json(self, meta: dict | None = None) -> str:
        return json_text({"werner": self.to_dict()}, meta)


def werner_extract(params: AmplifierParams, efficiency: float) -> WernerResult:
    """Closed-form two-photon state postselected with one detected photon per branch."""
    p = werner_singlet_weight(params, efficiency)
    return WernerResult(werner_matrix(p), p, params.gain, float(efficiency), "closed_form")


def _kraus_branch(tensor: np.ndarray, kept: tuple, amp: np.ndarray) -> np.ndarray:
    """Amplitudes indexed by lost photons when ``kept`` photons survive on each axis (zero-padded)."""
    d = tensor.shape
    src = tuple(slice(o, n) for o, n in zip(kept, d))
    out = tensor[src].copy()
    for axis, (o, n) in enumerate(zip(kept, d)):
        lost = np.arange(n - o)
        shape = [1] * tensor.ndim
        shape[axis] = n - o
        out *= amp[lost, lost + o].reshape(shape)
    padded = np.zeros(d, dtype=out.dtype)
    padded[tuple(slice(0, n - o) for o, n in zip(kept, d))] = out
    return padded


_ONE_PER_BRANCH = ((1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1))


def werner_extract_bruteforce(
    params: AmplifierParams, efficiency: float, *, epsilon_trunc: float = 1e-10, method: str = "pairs"
) -> WernerResult:
    """Pair-emission state -> loss on all four sub-modes -> one photon per branch -> renormalise.

    Loss is a sum over lost-photon tuples applied to the pure amplitudes, so no
    density matrix of the full state is formed.  ``method="tensor"`` works on
    the full four-sub-mode tensor; ``"pairs"`` uses the fact that the emission
    is a product of two two-sub-mode factors, (1H, 2V) and (1V, 2H), and that
    loss acts on each sub-mode separately.  Both give the same matrix.
    """
    from .amplifier import _noncollinear_pairs, _select_cutoff, _kept_mass, sequence_length, tmsv_sequence
    from .amplifier import spdc_singlet_macrostate
    from .channels import loss_amplitudes

    eff = float(efficiency)
    if not 0.0 < eff <= 1.0:
        raise OutOfRangeError(f"brute-force extraction needs efficiency in (0, 1], got {efficiency}")
    if method == "tensor":
        psi = spdc_singlet_macrostate(params, epsilon_trunc=epsilon_trunc).tensor
        amp = loss_amplitudes(psi.shape[0] - 1, eff)
        vecs = np.array([_kraus_branch(psi, o, amp).ravel() for o in _ONE_PER_BRANCH])
        rho = vecs @ vecs.conj().T
    elif method == "pairs":
        spont = tmsv_sequence(params, sequence_length(params))
        c = _select_cutoff(lambda c: 1.0 - _kept_mass(spont, c) ** 2, epsilon_trunc)
        pairs = _noncollinear_pairs(params, c, c)
        a, b = pairs["A_spont"], pairs["B_spont"]  # a over (1H, 2V), b over (1V, 2H)
        amp = loss_amplitudes(c, eff)
        wa = [_kraus_branch(a, (o[0], o[3]), amp).ravel() for o in _ONE_PER_BRANCH]
        wb = [_kraus_branch(b, (o[1], o[2]), amp).ravel() for o in _ONE_PER_BRANCH]
        rho = (np.array(wa) @ np.array(wa).conj().T) * (np.array(wb) @ np.array(wb).conj().T)
    else:
        raise ValidationError(f"method must be 'pairs' or 'tensor', got {method!r}")
    prob = float(np.trace(rho).real)
    if prob <= 0:
        raise DegenerateOutcomeError("no one-photon-per-branch events")
    rho = rho / prob
    p = float(np.real(SINGLET @ rho @ SINGLET) * 4.0 / 3.0 - 1.0 / 3.0)
    return WernerResult(rho, p, params.gain, eff, f"bruteforce_{method}", prob)


def ppt_entangled(two_qubit) -> tuple:
    """(entangled?, minimum eigenvalue of the partial transpose) for a two-qubit state."""
    if isinstance(two_qubit, (FockState, DensityOperator)):
        mat = pair_matrix(two_qubit)
    else:
        mat = np.asarray(two_qubit, dtype=np.complex128)
    if mat.shape != (4, 4):
        raise LayoutError(f"expected a 4x4 two-qubit matrix, got shape {mat.shape}")
    pt = mat.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    w = float(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))[0])
    return w < -1e-12, w
