"""Photon loss and the decoherence of macroscopic superpositions.

Loss is a beam splitter of transmittivity T with a vacuum ancilla, applied
independently to each selected sub-mode through the binomial Kraus operators
E_k |n> = sqrt(C(n, k) T^(n-k) R^k) |n - k>.  The Kraus sum is exact on the
truncated space because it never raises photon number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from ._io import csv_text
from .amplifier import (
    AmplifierParams,
    added_sequence,
    sequence_length,
    squeezed_sequence,
    tmsv_sequence,
    trim_sequence,
)
from .errors import DimensionGuardError, OutOfRangeError, ValidationError
from .fock import (
    MAX_DENSE_DIM,
    DensityOperator,
    FockState,
    State,
    _hermitize,
    _same_layout,
    bures_from_fidelity,
    root_fidelity_matrices,
)


@dataclass(frozen=True)
class LossSpec:
    """Lossy channel with transmittivity T and reflectivity R = 1 - T."""

    transmittivity: float

    def __post_init__(self):
        t = float(self.transmittivity)
        if not (0.0 <= t <= 1.0):
            raise OutOfRangeError(f"transmittivity must lie in [0, 1], got {self.transmittivity}")
        object.__setattr__(self, "transmittivity", t)

    @property
    def reflectivity(self) -> float:
        return 1.0 - self.transmittivity

    @classmethod
    def from_reflectivity(cls, r: float) -> "LossSpec":
        r = float(r)
        if not (0.0 <= r <= 1.0):
            raise OutOfRangeError(f"reflectivity must lie in [0, 1], got {r}")
        return cls(1.0 - r)


def loss_amplitudes(n_max: int, transmittivity: float) -> np.ndarray:
    """Table A[k, n] = sqrt(C(n, k) T^(n-k) R^k), zero for k > n."""
    t = float(transmittivity)
    r = 1.0 - t
    n = np.arange(n_max + 1, dtype=np.float64)[None, :]
    k = np.arange(n_max + 1, dtype=np.float64)[:, None]
    valid = k <= n
    nk = np.where(valid, n - k, 0.0)
    log = gammaln(n + 1) - gammaln(k + 1) - gammaln(nk + 1) + xlogy(nk, t) + xlogy(k, r)
    return np.where(valid, np.exp(0.5 * log), 0.0)


def _resolve_sub_modes(layout, sub_modes) -> list:
    count = len(layout.shape)
    if sub_modes is None:
        return list(range(count))
    subs = [int(s) for s in np.atleast_1d(sub_modes)]
    for s in subs:
        if not 0 <= s < count:
            raise ValidationError(f"sub-mode {s} not in layout with {count} sub-modes")
    return subs


def _loss_on_axes(tensor: np.ndarray, row_axis: int, col_axis: int, amp: np.ndarray) -> np.ndarray:
    """sum_k E_k rho E_k^dag along one sub-mode of a density tensor."""
    d = tensor.shape[row_axis]
    out = np.zeros_like(tensor)
    nd = tensor.ndim
    for k in range(d):
        w = amp[k, k:]
        if not np.any(w):
            continue
        src = [slice(None)] * nd
        dst = [slice(None)] * nd
        src[row_axis] = src[col_axis] = slice(k, d)
        dst[row_axis] = dst[col_axis] = slice(0, d - k)
        shape_r = [1] * nd
        shape_c = [1] * nd
        shape_r[row_axis] = d - k
        shape_c[col_axis] = d - k
        out[tuple(dst)] += tensor[tuple(src)] * w.reshape(shape_r) * w.reshape(shape_c)
    return out


def apply_loss(state: State, spec: LossSpec, sub_modes=None) -> DensityOperator:
    """Beam-splitter loss on the selected sub-modes (all by default)."""
    layout = state.layout
    if layout.dim > MAX_DENSE_DIM:
        raise DimensionGuardError(f"loss on a dense state of dimension {layout.dim} > {MAX_DENSE_DIM}")
    subs = _resolve_sub_modes(layout, sub_modes)
    if isinstance(state, FockState):
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
    else:
        rho = np.array(state.matrix)
    shp = layout.shape
    t = rho.reshape(shp + shp)
    for s in subs:
        amp = loss_amplitudes(shp[s] - 1, spec.transmittivity)
        t = _loss_on_axes(t, s, s + len(shp), amp)
    return DensityOperator(layout, t.reshape(layout.dim, layout.dim))


def lossy_mode_density(vector: np.ndarray, spec: LossSpec) -> np.ndarray:
    """Lossy density matrix of a single-mode pure state given as an amplitude vector."""
    vector = np.asarray(vector, dtype=np.complex128)
    d = vector.size
    amp = loss_amplitudes(d - 1, spec.transmittivity)
    kraus = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        kraus[: d - k, k] = amp[k, k:] * vector[k:]
    return kraus @ kraus.conj().T


# ---------------------------------------------------------------------------
# distances between lossy states
# ---------------------------------------------------------------------------


def coherent_cat_bures(x: float) -> float:
    """Large-amplitude Bures distance between lossy even/odd coherent cats with x lost photons."""
    x = float(x)
    if x < 0:
        raise OutOfRangeError("x must be >= 0")
    return math.sqrt(max(0.0, 1.0 - math.sqrt(-math.expm1(-4.0 * x))))


@dataclass(frozen=True)
class DiscriminationReport:
    """Bures distance (the bound) and the Helstrom success probability of the same pair."""

    bures: float
    helstrom: float
    trace_distance: float


def trace_distance_matrices(a: np.ndarray, b: np.ndarray) -> float:
    w = np.linalg.eigvalsh(_hermitize(a - b))
    return 0.5 * float(np.sum(np.abs(w)))


def discrimination_bound(a: State, b: State) -> DiscriminationReport:
    """Bures distance of two states together with the Helstrom probability 1/2 (1 + trace distance)."""
    from .fock import as_density, fidelity

    _same_layout(a, b)
    ra, rb = as_density(a), as_density(b)
    td = trace_distance_matrices(ra.matrix, rb.matrix)
    return DiscriminationReport(bures_from_fidelity(fidelity(a, b)), 0.5 * (1.0 + td), td)


# ---------------------------------------------------------------------------
# superposition decoherence curves
# ---------------------------------------------------------------------------

DEFAULT_X_GRID = tuple(round(0.1 * i, 10) for i in range(51))
DEFAULT_NBAR = 12.5
KINDS = ("phase_covariant", "universal", "coherent")
_KIND_ALIASES = {"pc": "phase_covariant", "phase_covariant": "phase_covariant", "universal": "universal",
                 "coherent": "coherent", "coh": "coherent"}
_SEQUENCE_TAIL = 1e-15


def canonical_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValidationError(f"unknown superposition kind {kind!r}; expected one of {KINDS}") from None


def gain_for_mean_photons(kind: str, nbar: float) -> float:
    """Gain giving total mean photon number ``nbar``.

    Phase-covariant (collinear) states carry 4 mbar + 1 photons; universal
    (non-collinear) states carry 3 mbar + 1 in mode 1 plus 2 mbar in mode 2.
    """
    kind = canonical_kind(kind)
    per = {"phase_covariant": 4.0, "universal": 5.0}.get(kind)
    if per is None:
        raise ValidationError("coherent superpositions have no gain")
    if nbar < 1.0:
        raise OutOfRangeError("an injected amplifier carries at least one photon")
    return math.asinh(math.sqrt((nbar - 1.0) / per))


def _trim(seq: np.ndarray) -> np.ndarray:
    return trim_sequence(seq, _SEQUENCE_TAIL)


def _parity_vector(seq: np.ndarray, odd: bool, cutoff: int) -> np.ndarray:
    out = np.zeros(cutoff + 1, dtype=np.complex128)
    occ = np.arange(int(odd), cutoff + 1, 2)[: seq.size]
    out[occ] = seq[: occ.size]
    return out


def _pc_root_fidelity(params: AmplifierParams, phi: float, spec: LossSpec) -> float:
    length = sequence_length(params)
    seqs = {
        (odd, ph): _trim(squeezed_sequence(params, length, odd, ph))
        for odd in (True, False)
        for ph in (-phi, math.pi + phi)
    }
    cut = 2 * max(s.size for s in seqs.values()) + 1
    vec = {key: _parity_vector(s, key[0], cut) for key, s in seqs.items()}
    rho = {key: lossy_mode_density(v, spec) for key, v in vec.items()}
    # axis injection: squeezed photon on the axis, squeezed vacuum on the perpendicular; swapped otherwise
    on_axis = root_fidelity_matrices(rho[(True, -phi)], rho[(False, -phi)])
    on_perp = root_fidelity_matrices(rho[(False, math.pi + phi)], rho[(True, math.pi + phi)])
    return on_axis * on_perp


def pair_lossy_blocks(coef: np.ndarray, shift: int, spec: LossSpec, n_max: int) -> dict:
    """Lossy two-mode state of sum_n coef[n] |n + shift>_a |n>_b with loss on both modes.

    The output is block diagonal in the photon-number difference d = n_a - n_b;
    block d is returned over the basis |m + d>_a |m>_b, m = 0..n_max.
    """
    n_pad = n_max + shift + 2
    c = np.zeros(n_pad, dtype=np.complex128)
    c[: coef.size] = coef
    amp = loss_amplitudes(n_pad - 1, spec.transmittivity)
    l = np.arange(n_max + 1)[:, None]
    m = np.arange(n_max + 1)[None, :]
    n = l + m
    inside = n <= n_max
    n_c = np.where(inside, n, 0)
    base = np.where(inside, c[n_c] * amp[l, n_c], 0.0)
    blocks = {}
    for delta in range(-n_max, n_max + shift + 1):
        k = l + delta
        ok = inside & (k >= 0) & (k <= n + shift)
        if not np.any(ok):
            continue
        v = np.where(ok, base * amp[np.clip(k, 0, n_pad - 1), np.where(ok, n + shift, 0)], 0.0)
        if not np.any(v):
            continue
        blocks[shift - delta] = v.T @ v.conj()
    return blocks


def block_root_fidelity(a: dict, b: dict) -> float:
    total = 0.0
    for d in a.keys() & b.keys():
        # a PSD block with a zero diagonal entry has that whole row and column zero
        keep = np.nonzero((a[d].diagonal().real > 0) | (b[d].diagonal().real > 0))[0]
        total += root_fidelity_matrices(a[d][np.ix_(keep, keep)], b[d][np.ix_(keep, keep)])
    return total


def _universal_root_fidelity(params: AmplifierParams, spec: LossSpec) -> float:
    length = sequence_length(params)
    stim = _trim(added_sequence(params, length))
    spont = _trim(tmsv_sequence(params, length))
    n_max = max(stim.size, spont.size)
    stim_blocks = pair_lossy_blocks(stim, 1, spec, n_max)
    spont_blocks = pair_lossy_blocks(spont, 0, spec, n_max)
    # pair (1 axis, 2 perp) is stimulated for axis injection and spontaneous otherwise;
    # pair (1 perp, 2 axis) the reverse.  The alternating sign on the second pair is a
    # local phase on one mode and drops out of the fidelity, which is symmetric, so both
    # pairs contribute the same factor.
    return block_root_fidelity(stim_blocks, spont_blocks) ** 2


def coherent_cat_vectors(alpha: complex, cutoff: int | None = None) -> tuple:
    """Normalised even and odd cats |alpha> +- |-alpha> as amplitude vectors."""
    alpha = complex(alpha)
    if cutoff is None:
        cutoff = int(abs(alpha) ** 2 + 12.0 * abs(alpha) + 40)
    n = np.arange(cutoff + 1)
    logmag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    coh = np.exp(logmag - 0.5 * abs(alpha) ** 2) * np.exp(1j * np.angle(alpha) * n)
    even = np.where(n % 2 == 0, coh, 0.0)
    odd = np.where(n % 2 == 1, coh, 0.0)
    return even / np.linalg.norm(even), odd / np.linalg.norm(odd)


def _coherent_root_fidelity(alpha: float, spec: LossSpec) -> float:
    even, odd = coherent_cat_vectors(alpha)
    return root_fidelity_matrices(lossy_mode_density(even, spec), lossy_mode_density(odd, spec))


@dataclass(frozen=True, eq=False)
class BuresCurve:
    kind: str
    x: np.ndarray
    distance: np.ndarray
    nbar: float
    gain: float = float("nan")
    alpha: float = float("nan")

    def rows(self) -> list:
        return [(x, d, self.kind, self.gain, self.alpha) for x, d in zip(self.x, self.distance)]


def bures_curves_csv(curves: Iterable[BuresCurve], meta: dict | None = None) -> str:
    rows = [r for c in curves for r in c.rows()]
    return csv_text(("x", "D", "kind", "g", "alpha"), rows, meta)


def mqs_bures_curve(
    kind: str,
    x_grid: Sequence[float] = DEFAULT_X_GRID,
    *,
    nbar: float = DEFAULT_NBAR,
    phase: float = 0.0,
) -> BuresCurve:
    """Bures distance between the two lossy components of a superposition versus x = R nbar.

    ``phase_covariant``: collinear macrostates for injected equatorial qubits at
    ``phase`` and ``phase + pi``; ``universal``: non-collinear macrostates for
    orthogonal injections (any frame gives the same curve), with loss on both
    spatial modes; ``coherent``: even and odd cats with |alpha|^2 = nbar.

    Each component factorises over sub-modes or pairs of sub-modes, so the
    fidelity is a product of small-block fidelities.
    """
    kind = canonical_kind(kind)
    xs = np.asarray(x_grid, dtype=np.float64)
    if np.any(xs < 0) or np.any(xs > nbar):
        raise OutOfRangeError(f"x must lie in [0, nbar={nbar}]")
    dist = np.empty(xs.size)
    gain = alpha = float("nan")
    if kind == "coherent":
        alpha = math.sqrt(nbar)
    else:
        gain = gain_for_mean_photons(kind, nbar)
        params = AmplifierParams(gain)
    for i, x in enumerate(xs):
        spec = LossSpec.from_reflectivity(x / nbar)
        if kind == "coherent":
            root = _coherent_root_fidelity(alpha, spec)
        elif kind == "phase_covariant":
            root = _pc_root_fidelity(params, phase, spec)
        else:
            root = _universal_root_fidelity(params, spec)
        dist[i] = bures_from_fidelity(min(root, 1.0) ** 2)
    return BuresCurve(kind, xs, dist, float(nbar), gain, alpha)


def mqs_lossy_pair_dense(kind: str, params: AmplifierParams, spec: LossSpec, frame, cutoff: int) -> tuple:
    """Brute-force lossy component pair built as dense states in H/V labels.

    Universal states are projected on at most ``cutoff`` photons per spatial
    mode, a truncation that commutes with polarisation rotations.
    """
    from .amplifier import macrostate_pair
    from .fock import truncate_total

    kind = canonical_kind(kind)
    if kind == "phase_covariant":
        a, b = macrostate_pair(params, "collinear", frame, cutoff, epsilon_trunc=1.0)
    elif kind == "universal":
        a, b = macrostate_pair(params, "noncollinear", frame, cutoff, epsilon_trunc=1.0)
        a, b = truncate_total(a, cutoff), truncate_total(b, cutoff)
    else:
        raise ValidationError("dense pairs exist for amplifier kinds only")
    return apply_loss(a, spec), apply_loss(b, spec)


# ---------------------------------------------------------------------------
# sampled loss for large pure states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int


def sample_lossy_counts(state: FockState, spec: LossSpec, n_samples: int, seed: int, sub_modes=None) -> np.ndarray:
    """Photon counts per sub-mode after loss, sampled from the number distribution.

    Valid for observables diagonal in photon number, which loss maps to
    binomially thinned counts.
    """
    if n_samples < 1:
        raise OutOfRangeError("n_samples must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    p = np.abs(state.amplitudes) ** 2
    idx = rng.choice(p.size, size=int(n_samples), p=p / p.sum())
    counts = np.array(np.unravel_index(idx, state.layout.shape)).T
    for s in _resolve_sub_modes(state.layout, sub_modes):
        counts[:, s] = rng.binomial(counts[:, s], spec.transmittivity)
    return counts


def monte_carlo_expectation(
    state: FockState, spec: LossSpec, observable: Callable[[np.ndarray], np.ndarray], n_samples: int, seed: int,
    sub_modes=None,
) -> MonteCarloEstimate:
    """Mean of ``observable(counts)`` over sampled lossy counts, with its standard error."""
    vals = np.asarray(observable(sample_lossy_counts(state, spec, n_samples, seed, sub_modes)), dtype=np.float64)
    err = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("inf")
    return MonteCarloEstimate(float(vals.mean()), err, int(vals.size), int(seed))
