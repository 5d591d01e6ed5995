"""Amplified states of a single-photon-injected parametric amplifier.

Three interactions are covered, all with real positive gain ``g``:

* collinear (type II, one spatial mode): generator ``a_H^dag a_V^dag - h.c.``
* non-collinear (two spatial modes): ``a_1H^dag a_2V^dag - a_1V^dag a_2H^dag - h.c.``,
  which is invariant under a common SU(2) rotation of both modes
* degenerate (one bosonic mode): ``(a^dag^2 - a^2) / 2``

Every closed-form state factorises into one-dimensional amplitude sequences
(two-mode squeezed vacuum, photon-added squeezed vacuum, single-mode squeezed
vacuum and squeezed single photon).  The sequences decide the cutoff for a
requested truncation budget and give exact moments without building tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from ._io import csv_text, json_text
from .errors import DimensionGuardError, LayoutError, OutOfRangeError, TruncationError, ValidationError
from .fock import (
    FockState,
    ModeLayout,
    PolarizationFrame,
    H_FRAME,
)

DEFAULT_EPSILON_TRUNC = 1e-8
MAX_PURE_DIM = 6_000_000
LINEARIZATION_MAX_GAIN = 0.2


@dataclass(frozen=True)
class AmplifierParams:
    """Gain ``g`` with C = cosh g, Gamma = tanh g and mbar = sinh^2 g."""

    gain: float

    def __post_init__(self):
        g = float(self.gain)
        if not math.isfinite(g) or g < 0:
            raise OutOfRangeError(f"gain must be finite and >= 0, got {self.gain}")
        object.__setattr__(self, "gain", g)

    @property
    def C(self) -> float:
        return math.cosh(self.gain)

    @property
    def Gamma(self) -> float:
        return math.tanh(self.gain)

    @property
    def mbar(self) -> float:
        return math.sinh(self.gain) ** 2


# ---------------------------------------------------------------------------
# one-dimensional amplitude sequences
# ---------------------------------------------------------------------------


def sequence_length(params: AmplifierParams) -> int:
    """Number of terms after which every sequence tail is below ~e^-80."""
    g2 = params.Gamma**2
    if g2 == 0.0:
        return 4
    rate = -math.log(g2)
    n0 = 80.0 / rate
    return int(math.ceil(n0 + 2.0 * math.log1p(n0) / rate)) + 64


def _geometric_log(params: AmplifierParams, k: np.ndarray) -> np.ndarray:
    gam = params.Gamma
    if gam == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(gam)


def tmsv_sequence(params: AmplifierParams, length: int) -> np.ndarray:
    """Gamma^k / C: amplitude of |k>|k> in two-mode squeezed vacuum."""
    k = np.arange(length, dtype=np.float64)
    return np.exp(_geometric_log(params, k) - math.log(params.C))


def added_sequence(params: AmplifierParams, length: int) -> np.ndarray:
    """Gamma^k sqrt(k+1) / C^2: amplitude of |k+1>|k> after a stimulated pair emission."""
    k = np.arange(length, dtype=np.float64)
    return np.exp(_geometric_log(params, k) + 0.5 * np.log1p(k) - 2.0 * math.log(params.C))


def squeezed_sequence(params: AmplifierParams, length: int, odd: bool, phase: float = 0.0) -> np.ndarray:
    """Single-mode squeezing of |0> (``odd=False``) or |1> (``odd=True``).

    Entry j is the amplitude of |2j + odd> under exp[(g/2)(e^{i phase} a^dag^2 - h.c.)].
    """
    j = np.arange(length, dtype=np.float64)
    o = 1.0 if odd else 0.0
    logmag = (
        _geometric_log(params, j)
        - j * math.log(2.0)
        + 0.5 * gammaln(2.0 * j + 1.0 + o)
        - gammaln(j + 1.0)
        - (0.5 + o) * math.log(params.C)
    )
    return np.exp(logmag) * np.exp(1j * phase * j)


def trim_sequence(seq: np.ndarray, tail: float = 1e-15) -> np.ndarray:
    """Shortest prefix whose discarded squared mass is below ``tail``."""
    mass = np.abs(seq) ** 2
    remaining = np.sum(mass) - np.cumsum(mass)
    below = remaining < tail
    return seq[: int(np.argmax(below)) + 1] if np.any(below) else seq


def _kept_mass(seq: np.ndarray, last_index: int) -> float:
    if last_index < 0:
        return 0.0
    return float(np.sum(np.abs(seq[: last_index + 1]) ** 2))


def _select_cutoff(deficit: Callable[[int], float], eps: float, start: int = 1, cap: int = 20_000) -> int:
    """Smallest cutoff with ``deficit(c) < eps``; deficits are non-increasing in c."""
    hi = start
    while deficit(hi) >= eps:
        if hi >= cap:
            raise TruncationError(f"no cutoff up to {cap} meets the truncation budget {eps}")
        hi = min(2 * hi, cap)
    lo = max(start, hi // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if deficit(mid) < eps:
            hi = mid
        else:
            lo = mid + 1
    return hi


# ---------------------------------------------------------------------------
# layout handling
# ---------------------------------------------------------------------------

LayoutArg = Union[ModeLayout, int, None]


def _resolve_layout(
    layout: LayoutArg, spatial: int, polarized: bool, deficit: Callable[[int], float], eps: float
) -> ModeLayout:
    if layout is None:
        cut = _select_cutoff(deficit, eps)
        return ModeLayout(spatial, cut, polarized)
    if isinstance(layout, (int, np.integer)):
        return ModeLayout(spatial, int(layout), polarized)
    if layout.spatial_modes != spatial or layout.polarized != polarized:
        raise LayoutError(f"expected {spatial} spatial mode(s), polarized={polarized}; got {layout}")
    return layout


def _guard_pure(layout: ModeLayout) -> None:
    if layout.dim > MAX_PURE_DIM:
        raise DimensionGuardError(
            f"state dimension {layout.dim} exceeds {MAX_PURE_DIM}; use the factorised moment routines"
        )


def _check_budget(state: FockState, eps: float) -> FockState:
    if state.norm_deficit >= eps:
        raise TruncationError(f"norm deficit {state.norm_deficit:.3e} exceeds truncation budget {eps:.1e}")
    return state


def _pair_matrix(seq: np.ndarray, shift_row: int, shift_col: int, rows: int, cols: int) -> np.ndarray:
    """Matrix M[k + shift_row, k + shift_col] = seq[k], clipped to (rows, cols)."""
    out = np.zeros((rows, cols), dtype=np.complex128)
    n = min(len(seq), rows - shift_row, cols - shift_col)
    if n > 0:
        k = np.arange(n)
        out[k + shift_row, k + shift_col] = seq[:n]
    return out




def _embed_parity(seq: np.ndarray, odd: bool, cutoff: int) -> np.ndarray:
    """Vector over 0..cutoff with seq[j] placed at occupation 2j + odd."""
    out = np.zeros(cutoff + 1, dtype=np.complex128)
    occ = np.arange(int(odd), cutoff + 1, 2)
    out[occ] = seq[: len(occ)]
    return out


def injection_vector(injected) -> np.ndarray:
    """H/V amplitudes of an injected photon given as a frame, an equatorial phase or a 2-vector."""
    if isinstance(injected, PolarizationFrame):
        return injected.vector()
    arr = np.asarray(injected, dtype=np.complex128)
    if arr.ndim == 0:
        return PolarizationFrame.equatorial(float(arr.real)).vector()
    if arr.shape != (2,) or abs(np.linalg.norm(arr) - 1.0) > 1e-10:
        raise ValidationError("injected polarisation must be a unit 2-vector")
    return arr


def _label_frame(basis, injected) -> PolarizationFrame | None:
    """Equatorial label frame for collinear states, or None for H/V labels."""
    if isinstance(basis, PolarizationFrame):
        if abs(basis.theta - math.pi / 2) > 1e-12:
            raise ValidationError("collinear states are written in H/V or in an equatorial frame")
        return basis
    if basis == "hv":
        return None
    if basis == "frame":
        if isinstance(injected, PolarizationFrame):
            return PolarizationFrame.equatorial(injected.phi)
        arr = np.asarray(injected)
        if arr.ndim == 0:
            return PolarizationFrame.equatorial(float(arr.real))
        raise ValidationError("basis='frame' needs the injection as a phase or a frame")
    raise ValidationError(f"basis must be 'hv', 'frame' or an equatorial frame, got {basis!r}")


# ---------------------------------------------------------------------------
# closed-form states
# ---------------------------------------------------------------------------


def twin_beam(params: AmplifierParams, layout: LayoutArg = None, *, epsilon_trunc: float = DEFAULT_EPSILON_TRUNC) -> FockState:
    """Two-mode squeezed vacuum sum_n Gamma^n / C |n>_1 |n>_2.

    On a polarised layout the pairs occupy the H sub-modes.
    """
    seq = tmsv_sequence(params, sequence_length(params))
    polarized = layout.polarized if isinstance(layout, ModeLayout) else False
    layout = _resolve_layout(layout, 2, polarized, lambda c: 1.0 - _kept_mass(seq, c), epsilon_trunc)
    _guard_pure(layout)
    c1, c2 = layout.cutoffs
    diag = _pair_matrix(seq, 0, 0, c1 + 1, c2 + 1)
    if polarized:
        tensor = np.zeros(layout.shape, dtype=np.complex128)
        tensor[:, 0, :, 0] = diag
    else:
        tensor = diag
    return _check_budget(FockState.from_tensor(layout, tensor), epsilon_trunc)


def collinear_macrostate(
    params: AmplifierParams,
    injected=0.0,
    layout: LayoutArg = None,
    *,
    basis="hv",
    epsilon_trunc: float = DEFAULT_EPSILON_TRUNC,
) -> FockState:
    """Collinear amplifier output for a single injected photon.

    ``injected`` is an equatorial phase, a frame or H/V amplitudes.  With
    ``basis="hv"`` the state is written over (n_H, n_V).  With an equatorial
    frame as ``basis`` (or ``"frame"``, the equatorial frame at the injected
    phase) it is written over that frame's (axis, perp) sub-modes; there an
    injection along the axis is a squeezed single photon times an oppositely
    squeezed vacuum, with support on (odd, even) occupations only.
    """
    vec = injection_vector(injected)
    labels = _label_frame(basis, injected)
    length = sequence_length(params)
    if labels is None:
        seq = added_sequence(params, length)
        layout = _resolve_layout(layout, 1, True, lambda c: 1.0 - _kept_mass(seq, c - 1), epsilon_trunc)
        _guard_pure(layout)
        c = layout.cutoffs[0]
        tensor = vec[0] * _pair_matrix(seq, 1, 0, c + 1, c + 1) + vec[1] * _pair_matrix(seq, 0, 1, c + 1, c + 1)
    else:
        phi = labels.phi
        coef = labels.matrix().conj().T @ vec
        s1_axis = squeezed_sequence(params, length, True, -phi)
        s0_axis = squeezed_sequence(params, length, False, -phi)
        s1_perp = squeezed_sequence(params, length, True, math.pi + phi)
        s0_perp = squeezed_sequence(params, length, False, math.pi + phi)

        def deficit(c):
            return 1.0 - _kept_mass(s1_axis, (c - 1) // 2) * _kept_mass(s0_perp, c // 2)

        layout = _resolve_layout(layout, 1, True, deficit, epsilon_trunc)
        _guard_pure(layout)
        c = layout.cutoffs[0]
        tensor = coef[0] * np.outer(_embed_parity(s1_axis, True, c), _embed_parity(s0_perp, False, c))
        tensor = tensor + coef[1] * np.outer(_embed_parity(s0_axis, False, c), _embed_parity(s1_perp, True, c))
    return _check_budget(FockState.from_tensor(layout, tensor), epsilon_trunc)


def _noncollinear_pairs(params: AmplifierParams, c1: int, c2: int) -> dict:
    length = sequence_length(params)
    stim = added_sequence(params, length)
    spont = tmsv_sequence(params, length)
    sign = (-1.0) ** np.arange(length)
    return {
        # pair A couples (1, axis) with (2, perp); pair B couples (1, perp) with (2, axis)
        "A_stim": _pair_matrix(stim, 1, 0, c1 + 1, c2 + 1),
        "A_spont": _pair_matrix(spont, 0, 0, c1 + 1, c2 + 1),
        "B_stim": _pair_matrix(stim * sign, 1, 0, c1 + 1, c2 + 1),
        "B_spont": _pair_matrix(spont * sign, 0, 0, c1 + 1, c2 + 1),
    }


def _pair_tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a over (1 axis, 2 perp), b over (1 perp, 2 axis) -> (1 axis, 1 perp, 2 axis, 2 perp)
    return np.einsum("il,jk->ijkl", a, b)


def noncollinear_macrostate(
    params: AmplifierParams,
    injected=H_FRAME,
    layout: LayoutArg = None,
    *,
    basis: PolarizationFrame = H_FRAME,
    epsilon_trunc: float = DEFAULT_EPSILON_TRUNC,
) -> FockState:
    """Non-collinear amplifier output for one photon injected on spatial mode 1.

    ``injected`` is a frame or H/V amplitudes; the state is written in the
    (axis, perp) labels of ``basis`` on both spatial modes.

    The interaction is invariant under a common SU(2) rotation, so the closed
    form holds in the labels of any ``basis`` frame:
    axis injection gives sum Gamma^(n+m) (-1)^m sqrt(n+1) / C^3 |n+1, m>_1 |m, n>_2
    and perpendicular injection gives sum Gamma^(n+m) (-1)^m sqrt(m+1) / C^3 |n, m+1>_1 |m, n>_2.
    """
    length = sequence_length(params)
    stim = added_sequence(params, length)
    spont = tmsv_sequence(params, length)

    def deficit(c):
        return 1.0 - _kept_mass(stim, c - 1) * _kept_mass(spont, c)

    layout = _resolve_layout(layout, 2, True, deficit, epsilon_trunc)
    _guard_pure(layout)
    p = _noncollinear_pairs(params, *layout.cutoffs)
    coef = basis.matrix().conj().T @ injection_vector(injected)
    tensor = coef[0] * _pair_tensor(p["A_stim"], p["B_spont"]) + coef[1] * _pair_tensor(p["A_spont"], p["B_stim"])
    return _check_budget(FockState.from_tensor(layout, tensor), epsilon_trunc)


def spdc_singlet_macrostate(
    params: AmplifierParams, layout: LayoutArg = None, *, epsilon_trunc: float = DEFAULT_EPSILON_TRUNC
) -> FockState:
    """Vacuum-seeded output: sum_n Gamma^n / C^2 sum_m (-1)^m |n-m, m>_A |m, n-m>_B.

    Each n-pair term is a polarisation singlet of n pairs, so the state is the
    same in every common frame.
    """
    spont = tmsv_sequence(params, sequence_length(params))
    layout = _resolve_layout(layout, 2, True, lambda c: 1.0 - _kept_mass(spont, c) ** 2, epsilon_trunc)
    _guard_pure(layout)
    p = _noncollinear_pairs(params, *layout.cutoffs)
    return _check_budget(FockState.from_tensor(layout, _pair_tensor(p["A_spont"], p["B_spont"])), epsilon_trunc)


def macrostate_pair(
    params: AmplifierParams, config: str, frame: PolarizationFrame, layout: LayoutArg = None, *,
    epsilon_trunc: float = DEFAULT_EPSILON_TRUNC,
) -> tuple:
    """Macrostates for injection along ``frame`` and along its perpendicular, in common H/V labels.

    The perpendicular one carries the phase of ``frame.perp_vector()``.
    """
    perp = frame.flipped()
    # flipped().vector() == -e^{i phi} perp_vector()
    phase = -complex(math.cos(frame.phi), -math.sin(frame.phi))
    if config == "collinear":
        build = collinear_macrostate
    elif config == "noncollinear":
        build = noncollinear_macrostate
    else:
        raise ValidationError(f"config must be 'collinear' or 'noncollinear', got {config!r}")
    axis = build(params, frame, layout, epsilon_trunc=epsilon_trunc)
    other = build(params, perp, layout, epsilon_trunc=epsilon_trunc)
    return axis, FockState(other.layout, phase * other.amplitudes)


# ---------------------------------------------------------------------------
# photon-number moments and fringes
# ---------------------------------------------------------------------------


def injection_frame_occupations(params: AmplifierParams, config: str) -> tuple:
    """Mean photon numbers of spatial mode 1 along the injected axis and its perpendicular.

    Evaluated from the amplitude sequences (tails below e^-80), so no state
    tensor is built; this is the path used at high gain.
    """
    length = sequence_length(params)
    if config == "noncollinear":
        stim = np.abs(added_sequence(params, length)) ** 2
        spont = np.abs(tmsv_sequence(params, length)) ** 2
        k = np.arange(length)
        return float(np.sum(stim * (k + 1)) * np.sum(spont)), float(np.sum(spont * k) * np.sum(stim))
    if config == "collinear":
        s1 = np.abs(squeezed_sequence(params, length, True)) ** 2
        s0 = np.abs(squeezed_sequence(params, length, False)) ** 2
        j = np.arange(length)
        return float(np.sum(s1 * (2 * j + 1)) * np.sum(s0)), float(np.sum(s0 * 2 * j) * np.sum(s1))
    raise ValidationError(f"config must be 'collinear' or 'noncollinear', got {config!r}")


def sinusoid_fit(phases: np.ndarray, values: np.ndarray) -> tuple:
    """Least-squares fit values ~ a + b cos(phase) + c sin(phase); returns (a, b, c)."""
    phases = np.asarray(phases, dtype=np.float64)
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    coef, *_ = np.linalg.lstsq(design, np.asarray(values, dtype=np.float64), rcond=None)
    return tuple(float(v) for v in coef)


def fringe_visibility(phases, values) -> float:
    """(max - min) / (max + min) of the fitted sinusoid, or of the samples if fewer than 3 distinct phases."""
    phases = np.asarray(phases, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if len(np.unique(np.mod(phases, 2 * math.pi))) < 3:
        hi, lo = float(values.max()), float(values.min())
        return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0
    a, b, c = sinusoid_fit(phases, values)
    return math.hypot(b, c) / a if a > 0 else 0.0


@dataclass(frozen=True, eq=False)
class FringePattern:
    """Mean photon numbers in the two outputs of a fixed analysis frame versus injected phase."""

    phases: np.ndarray
    intensities_plus: np.ndarray
    intensities_minus: np.ndarray
    config: str = ""
    gain: float = float("nan")

    @property
    def visibility(self) -> float:
        return fringe_visibility(self.phases, self.intensities_plus)

    @property
    def visibility_minus(self) -> float:
        return fringe_visibility(self.phases, self.intensities_minus)

    def to_csv(self, meta: dict | None = None) -> str:
        info = {"config": self.config, "g": self.gain}
        info.update(meta or {})
        vis = self.visibility
        rows = [(p, a, b, vis) for p, a, b in zip(self.phases, self.intensities_plus, self.intensities_minus)]
        return csv_text(("phase_rad", "M_plus", "M_minus", "visibility"), rows, info)


def fringe_scan(
    config: str,
    params: AmplifierParams,
    phases: Sequence[float],
    *,
    analysis: PolarizationFrame = PolarizationFrame.equatorial(0.0),
    method: str = "factorized",
    layout: LayoutArg = None,
    epsilon_trunc: float = DEFAULT_EPSILON_TRUNC,
) -> FringePattern:
    """Inject an equatorial qubit at each phase and count photons along ``analysis`` axes on mode 1.

    ``method="factorized"`` rotates the exact injection-frame occupations into
    the analysis frame; ``method="state"`` builds each macrostate in H/V labels
    and evaluates the polarisation correlation matrix directly.
    """
    from .fock import polarization_correlations

    phases = np.asarray(phases, dtype=np.float64).ravel()
    if phases.size == 0:
        raise ValidationError("phases must be non-empty")
    w_plus, w_minus = analysis.vector(), analysis.perp_vector()
    plus = np.empty(phases.size)
    minus = np.empty(phases.size)
    if method == "factorized":
        occ = np.array(injection_frame_occupations(params, config))
        for i, phi in enumerate(phases):
            f = PolarizationFrame.equatorial(phi).matrix()
            plus[i] = float(np.sum(np.abs(f.conj().T @ w_plus) ** 2 * occ))
            minus[i] = float(np.sum(np.abs(f.conj().T @ w_minus) ** 2 * occ))
    elif method == "state":
        for i, phi in enumerate(phases):
            frame = PolarizationFrame.equatorial(phi)
            if config == "collinear":
                st = collinear_macrostate(params, frame, layout, epsilon_trunc=epsilon_trunc)
            elif config == "noncollinear":
                st = noncollinear_macrostate(params, frame, layout, epsilon_trunc=epsilon_trunc)
            else:
                raise ValidationError(f"config must be 'collinear' or 'noncollinear', got {config!r}")
            g = polarization_correlations(st, 0)
            plus[i] = float(np.real(w_plus @ g @ w_plus.conj()))
            minus[i] = float(np.real(w_minus @ g @ w_minus.conj()))
    else:
        raise ValidationError(f"method must be 'factorized' or 'state', got {method!r}")
    return FringePattern(phases, plus, minus, config, params.gain)


# ---------------------------------------------------------------------------
# brute-force generator evolution
# ---------------------------------------------------------------------------

# (spatial modes, polarised, terms); a term is (coefficient, sub-modes, creation?)
_GENERATORS = {
    "collinear": (1, True, ((1.0, (0, 1), True), (-1.0, (0, 1), False))),
    "noncollinear": (
        2,
        True,
        ((1.0, (0, 3), True), (-1.0, (1, 2), True), (-1.0, (0, 3), False), (1.0, (1, 2), False)),
    ),
    "degenerate": (1, False, ((0.5, (0, 0), True), (-0.5, (0, 0), False))),
}
MAX_ORACLE_BLOCK = 5000


def _apply_term(occ: tuple, term: tuple, cuts: tuple):
    coef, modes, create = term
    occ = list(occ)
    amp = coef
    for m in modes:
        n = occ[m]
        if create:
            if n + 1 > cuts[m]:
                return None
            amp *= math.sqrt(n + 1)
            occ[m] = n + 1
        else:
            if n == 0:
                return None
            amp *= math.sqrt(n)
            occ[m] = n - 1
    return tuple(occ), amp


def _generator_spec(kind: str, layout: ModeLayout) -> tuple:
    if kind not in _GENERATORS:
        raise ValidationError(f"unknown generator kind {kind!r}")
    spatial, polarized, terms = _GENERATORS[kind]
    if layout.spatial_modes != spatial or layout.polarized != polarized:
        raise LayoutError(f"{kind} generator needs spatial_modes={spatial}, polarized={polarized}; got {layout}")
    return terms, tuple(d - 1 for d in layout.shape)


def generator_block(kind: str, layout: ModeLayout, support: Sequence[int]) -> tuple:
    """Truncated real generator A restricted to the states connected to ``support``.

    Returns (flat indices of the block, dense A on the block).
    """
    terms, cuts = _generator_spec(kind, layout)
    order = [layout.occupations(i) for i in support]
    local = {occ: k for k, occ in enumerate(order)}
    entries = []
    head = 0
    while head < len(order):
        occ = order[head]
        for term in terms:
            res = _apply_term(occ, term, cuts)
            if res is None:
                continue
            new, amp = res
            if new not in local:
                local[new] = len(order)
                order.append(new)
                if len(order) > MAX_ORACLE_BLOCK:
                    raise DimensionGuardError(f"oracle block exceeds {MAX_ORACLE_BLOCK} states")
            entries.append((local[new], head, amp))
        head += 1
    mat = np.zeros((len(order), len(order)))
    for r, c, v in entries:
        mat[r, c] += v
    index = np.array([layout.index(o) for o in order], dtype=np.int64)
    return index, mat


def generator_matrix(kind: str, layout: ModeLayout) -> np.ndarray:
    """Dense truncated generator on the whole layout (small layouts only)."""
    if layout.dim > MAX_ORACLE_BLOCK:
        raise DimensionGuardError(f"layout dimension {layout.dim} exceeds {MAX_ORACLE_BLOCK}")
    terms, cuts = _generator_spec(kind, layout)
    mat = np.zeros((layout.dim, layout.dim))
    for col in range(layout.dim):
        occ = layout.occupations(col)
        for term in terms:
            res = _apply_term(occ, term, cuts)
            if res is not None:
                mat[layout.index(res[0]), col] += res[1]
    return mat


@dataclass(frozen=True, eq=False)
class OracleResult:
    state: FockState
    leakage: float
    block_dim: int
    kind: str
    strength: float

    def report(self, reference: FockState | None = None) -> dict:
        out = {
            "kind": self.kind,
            "strength": self.strength,
            "cutoff": list(self.state.layout.cutoffs),
            "block_dim": self.block_dim,
            "leakage": self.leakage,
            "norm_deficit": self.state.norm_deficit,
        }
        if reference is not None:
            out["overlap"] = abs(self.state.overlap(reference)) ** 2
        return out

    def to_json(self, reference: FockState | None = None, meta: dict | None = None) -> str:
        return json_text(self.report(reference), meta)


def _cutoff_shell(layout: ModeLayout, index: np.ndarray) -> np.ndarray:
    cuts = np.array(layout.shape) - 1
    occ = np.array(np.unravel_index(index, layout.shape)).T
    return np.any(occ >= cuts, axis=1)


def oracle_evolve(
    kind: str, strength: float, state: FockState, *, leakage_budget: float = DEFAULT_EPSILON_TRUNC
) -> OracleResult:
    """Apply exp(strength * A) with the truncated generator A of ``kind``.

    A is real antisymmetric, so i*A is Hermitian and the exponential comes from
    its eigendecomposition on the block reachable from the input.  Leakage is
    the output population on the cutoff shell; above ``leakage_budget`` a
    TruncationError is raised.
    """
    tau = float(strength)
    if not math.isfinite(tau) or tau < 0:
        raise OutOfRangeError(f"strength must be finite and >= 0, got {strength}")
    support = np.nonzero(state.amplitudes)[0]
    if support.size == 0:
        raise ValidationError("input state is zero")
    index, gen = generator_block(kind, state.layout, support)
    w, v = np.linalg.eigh(1j * gen)
    psi = state.amplitudes[index]
    out_block = v @ (np.exp(-1j * tau * w) * (v.conj().T @ psi))
    amps = np.zeros(state.layout.dim, dtype=np.complex128)
    amps[index] = out_block
    leakage = float(np.sum(np.abs(out_block[_cutoff_shell(state.layout, index)]) ** 2))
    if leakage > leakage_budget:
        raise TruncationError(f"cutoff-shell population {leakage:.3e} exceeds budget {leakage_budget:.1e}")
    return OracleResult(FockState(state.layout, amps), leakage, int(index.size), kind, tau)


# ---------------------------------------------------------------------------
# first-order expansions
# ---------------------------------------------------------------------------


def _linearized(g: float, occupations: tuple) -> FockState:
    g = float(g)
    if not 0.0 <= g <= LINEARIZATION_MAX_GAIN:
        raise OutOfRangeError(f"linearised expansion needs 0 <= g <= {LINEARIZATION_MAX_GAIN}, got {g}")
    layout = ModeLayout(2, 2)
    psi = np.zeros(layout.dim)
    psi[layout.index(occupations)] = 1.0
    index, gen = generator_block("noncollinear", layout, [layout.index(occupations)])
    out = np.zeros(layout.dim, dtype=np.complex128)
    out[index] = (np.eye(index.size) + g * gen) @ psi[index]
    out /= np.linalg.norm(out)
    return FockState(layout, out)


def linearized_stimulated(g: float) -> FockState:
    """First-order non-collinear output for one photon injected on (1, axis); normalised.

    The unnormalised expansion is |1,0>|0,0> + g (sqrt2 |2,0>|0,1> - |1,1>|1,0>).
    """
    return _linearized(g, (1, 0, 0, 0))


def linearized_spontaneous(g: float) -> FockState:
    """First-order vacuum output |0> + g (|1,0>|0,1> - |0,1>|1,0>); normalised."""
    return _linearized(g, (0, 0, 0, 0))
