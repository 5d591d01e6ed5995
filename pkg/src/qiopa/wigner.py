"""Single-mode phase-space analysis: characteristic function, Wigner grids, negativity.

Phase-space points are complex amplitudes alpha = x + i p with vacuum
quadrature variance 1/4, so the vacuum Wigner function is (2/pi) exp(-2|alpha|^2).

Pure states sent through a loss channel are handled without forming a density
matrix.  With transmission T and reflectivity R = 1 - T the lossy Wigner
function is

    W(alpha) = (2/pi) sum_l (R - T)^l |<l| D(-alpha / sqrt(T)) |psi>|^2,

because loss commutes with displacement up to a sqrt(T) rescaling and maps the
parity operator to (R - T)^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ._io import csv_text
from ._kernels import displacement_matrix, parity_weighted_displaced, wigner_dm
from .amplifier import AmplifierParams, squeezed_sequence
from .errors import LayoutError, OutOfRangeError, TruncationError, ValidationError
from .fock import DensityOperator, FockState, ModeLayout

DEFAULT_EPSILON_GRID = 1e-3
DEFAULT_RESOLUTION = 241
DEFAULT_HALF_WIDTH = 6.0
WINDOW_SIGMAS = 6.0
PARITY_WEIGHT_FLOOR = 1e-16
MARGINAL_POINTS = 4001
OPA_EPSILON_TRUNC = 1e-8
OPA_MAX_CUTOFF = 20_000

State = FockState | DensityOperator


def single_mode_layout(cutoff: int) -> ModeLayout:
    return ModeLayout(1, int(cutoff), polarized=False)


def _single_mode(state: State) -> None:
    lay = state.layout
    if lay.spatial_modes != 1 or lay.polarized:
        raise LayoutError(f"expected a single unpolarised mode, got {lay}")


def _density_matrix(state: State) -> np.ndarray:
    if isinstance(state, FockState):
        v = state.amplitudes
        return np.outer(v, v.conj())
    return state.matrix


# ---------------------------------------------------------------------------
# characteristic function
# ---------------------------------------------------------------------------


def validity_radius(cutoff: int) -> float:
    """Largest |eta| accepted by :func:`characteristic_function` for a given cutoff."""
    return math.sqrt(2.0 * cutoff + 1.0) + 10.0


def characteristic_function(state: State, eta_points) -> np.ndarray:
    """chi(eta) = Tr[rho exp(eta a^dag - eta^* a)] at each point."""
    _single_mode(state)
    rho = _density_matrix(state)
    n = rho.shape[0]
    etas = np.atleast_1d(np.asarray(eta_points, dtype=np.complex128))
    limit = validity_radius(n - 1)
    if np.any(np.abs(etas) > limit):
        raise OutOfRangeError(f"|eta| exceeds the validity radius {limit:.3g} for cutoff {n - 1}")
    out = np.empty(etas.shape, dtype=np.complex128)
    for i, eta in np.ndenumerate(etas):
        out[i] = np.sum(rho.T * displacement_matrix(eta, n))
    return out


# ---------------------------------------------------------------------------
# quadrature marginals (used for window choice and tail mass)
# ---------------------------------------------------------------------------


def _quadrature_amplitudes(vectors: np.ndarray, x: np.ndarray, rotate: bool) -> np.ndarray:
    """sum_n v[k, n] <x|n> for the x quadrature, or the p quadrature when ``rotate``.

    Uses the normalised Hermite recurrence with a running log scale so that
    large |x| does not underflow before the high-n terms are reached.
    """
    vectors = np.atleast_2d(vectors)
    n_dim = vectors.shape[1]
    u = math.sqrt(2.0) * x
    mant = np.ones_like(u)
    prev = np.zeros_like(u)
    scale = 0.25 * math.log(2.0 / math.pi) - x * x
    out = np.zeros((vectors.shape[0], x.size), dtype=np.complex128)
    phase = 1.0 + 0.0j
    for n in range(n_dim):
        coef = vectors[:, n] * phase
        if np.any(coef != 0):
            weight = np.where(scale > -745.0, mant * np.exp(np.maximum(scale, -745.0)), 0.0)
            out += coef[:, None] * weight[None, :]
        nxt = math.sqrt(2.0 / (n + 1)) * u * mant - math.sqrt(n / (n + 1)) * prev
        prev, mant = mant, nxt
        big = np.maximum(np.abs(mant), np.abs(prev))
        resc = big > 1e100
        if resc.any():
            safe = np.where(resc, big, 1.0)
            mant, prev = mant / safe, prev / safe
            scale = scale + np.log(safe)
        if rotate:
            phase *= -1j
    return out


def _mixture(state: State) -> tuple:
    """(weights, vectors) with rho = sum_k w_k |v_k><v_k|."""
    if isinstance(state, FockState):
        return np.array([1.0]), state.amplitudes[None, :]
    w, v = np.linalg.eigh(state.matrix)
    keep = w > 1e-14 * max(w.max(), 1e-300)
    return w[keep], v[:, keep].T


def quadrature_moments(state: State) -> tuple:
    """(mean, variance) of the x and p quadratures: ((mx, vx), (mp, vp))."""
    weights, vectors = _mixture(state)
    n = vectors.shape[1]
    sq = np.sqrt(np.arange(1, n))
    low = np.zeros_like(vectors)
    low[:, :-1] = sq * vectors[:, 1:]
    low2 = np.zeros_like(vectors)
    low2[:, :-1] = sq * low[:, 1:]
    a = np.sum(weights * np.einsum("kn,kn->k", vectors.conj(), low))
    a2 = np.sum(weights * np.einsum("kn,kn->k", vectors.conj(), low2))
    nn = float(np.sum(weights * np.einsum("kn,kn->k", low.conj(), low).real))
    mx, mp = a.real, a.imag
    vx = (2 * a2.real + 2 * nn + 1) / 4 - mx * mx
    vp = (-2 * a2.real + 2 * nn + 1) / 4 - mp * mp
    return (float(mx), float(max(vx, 0.0))), (float(mp), float(max(vp, 0.0)))


def window_mass(state: State, lo: float, hi: float, quadrature: str, reflectivity: float = 0.0) -> float:
    """Probability that the lossy x (or p) quadrature falls inside [lo, hi]."""
    if quadrature not in ("x", "p"):
        raise ValidationError("quadrature must be 'x' or 'p'")
    refl = float(reflectivity)
    trans = 1.0 - refl
    (mx, vx), (mp, vp) = quadrature_moments(state)
    mean, var = (mx, vx) if quadrature == "x" else (mp, vp)
    half = 12.0 * math.sqrt(var) + 1.0
    if refl <= 0.0:
        lo_c, hi_c = max(lo, mean - half), min(hi, mean + half)
        if hi_c <= lo_c:
            return 0.0
        grid = np.linspace(lo_c, hi_c, MARGINAL_POINTS)
    elif trans <= 0.0:
        return float(ndtr(2.0 * hi) - ndtr(2.0 * lo))
    else:
        grid = np.linspace(mean - half, mean + half, MARGINAL_POINTS)
    weights, vectors = _mixture(state)
    amps = _quadrature_amplitudes(vectors, grid, quadrature == "p")
    density = np.einsum("k,kx->x", weights, np.abs(amps) ** 2)
    if refl <= 0.0:
        kernel = 1.0
    else:
        s = 0.5 * math.sqrt(refl)
        shift = math.sqrt(trans) * grid
        kernel = ndtr((hi - shift) / s) - ndtr((lo - shift) / s)
    return float(np.trapezoid(density * kernel, grid))


def tail_mass(state: State, re_range: tuple, im_range: tuple, reflectivity: float = 0.0) -> float:
    """Union bound on the probability outside the window, from the two quadrature marginals."""
    out_x = 1.0 - window_mass(state, *re_range, "x", reflectivity)
    out_p = 1.0 - window_mass(state, *im_range, "p", reflectivity)
    return float(max(out_x, 0.0) + max(out_p, 0.0))


def auto_window(state: State, reflectivity: float = 0.0) -> tuple:
    """Window centred on the mean quadratures, at least +-6 wide and +-6 sigma of the lossy state."""
    refl = float(reflectivity)
    trans = 1.0 - refl
    ranges = []
    for mean, var in quadrature_moments(state):
        var_out = trans * var + refl / 4.0
        half = max(DEFAULT_HALF_WIDTH, WINDOW_SIGMAS * math.sqrt(var_out))
        centre = math.sqrt(trans) * mean
        ranges.append((centre - half, centre + half))
    return tuple(ranges)


# ---------------------------------------------------------------------------
# Wigner function
# ---------------------------------------------------------------------------


def parity_weights(reflectivity: float, n_dim: int, max_shift: float = 0.0) -> np.ndarray:
    """(R - T)^l for the photon numbers that matter.

    The sum stops where |R - T|^l < 1e-16 or where a state of ``n_dim`` levels
    displaced by at most ``max_shift`` has no weight left, whichever is first.
    """
    r = float(reflectivity)
    base = r - (1.0 - r)
    if base == 0.0:
        return np.ones(1)
    reach = n_dim + int(math.ceil(max_shift * max_shift + 12.0 * max_shift + 30.0))
    if abs(base) < 1.0:
        reach = min(reach, int(math.ceil(math.log(PARITY_WEIGHT_FLOOR) / math.log(abs(base)))) + 1)
    return base ** np.arange(reach)


def wigner_points(state: State, alphas, reflectivity: float = 0.0) -> np.ndarray:
    """W(alpha) at each point for the state after a loss channel of the given reflectivity."""
    _single_mode(state)
    refl = float(reflectivity)
    if not 0.0 <= refl <= 1.0:
        raise OutOfRangeError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    pts = np.asarray(alphas, dtype=np.complex128)
    flat = pts.ravel()
    if refl == 1.0:
        vac = (2.0 / math.pi) * np.exp(-2.0 * np.abs(flat) ** 2) * float(np.real(np.trace(_density_matrix(state))))
        return vac.reshape(pts.shape)
    trans = 1.0 - refl
    if isinstance(state, FockState):
        psi = state.amplitudes
        betas = -flat / math.sqrt(trans)
        shift = float(np.abs(betas).max()) if betas.size else 0.0
        weights = parity_weights(refl, psi.size, shift)
        if weights.size > psi.size:
            psi = np.concatenate([psi, np.zeros(weights.size - psi.size)])
        vals = (2.0 / math.pi) * parity_weighted_displaced(psi, betas, weights)
        return vals.reshape(pts.shape)
    rho = state
    if refl > 0.0:
        from .channels import LossSpec, apply_loss

        rho = apply_loss(state, LossSpec(trans))
    return wigner_dm(rho.matrix, flat).reshape(pts.shape)


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """W sampled on a rectangle; ``values[i, j]`` sits at re_axis[i] + 1j * im_axis[j]."""

    re_range: tuple
    im_range: tuple
    resolution: tuple
    values: np.ndarray
    tail_mass: float
    epsilon_grid: float
    reflectivity: float = 0.0
    cutoff: int = 0
    norm_deficit: float = 0.0

    @property
    def re_axis(self) -> np.ndarray:
        return np.linspace(*self.re_range, self.resolution[0])

    @property
    def im_axis(self) -> np.ndarray:
        return np.linspace(*self.im_range, self.resolution[1])

    @property
    def cell_area(self) -> float:
        dx = (self.re_range[1] - self.re_range[0]) / max(self.resolution[0] - 1, 1)
        dy = (self.im_range[1] - self.im_range[0]) / max(self.resolution[1] - 1, 1)
        return dx * dy

    @property
    def integral(self) -> float:
        inner = np.trapezoid(self.values, self.im_axis, axis=1)
        return float(np.trapezoid(inner, self.re_axis))

    def normalized_within(self, eps: float | None = None) -> bool:
        eps = self.epsilon_grid if eps is None else eps
        return abs(self.integral - 1.0) <= eps

    def header(self) -> dict:
        return {
            "re_range": list(self.re_range),
            "im_range": list(self.im_range),
            "resolution": list(self.resolution),
            "tail_mass": self.tail_mass,
            "epsilon_grid": self.epsilon_grid,
            "reflectivity": self.reflectivity,
            "cutoff": self.cutoff,
            "norm_deficit": self.norm_deficit,
            "integral": self.integral,
        }

    def header_json(self, meta: dict | None = None) -> str:
        from ._io import json_text

        return json_text({"grid": self.header()}, meta)

    def to_csv(self, meta: dict | None = None) -> str:
        re_ax, im_ax = self.re_axis, self.im_axis
        rows = ((re_ax[i], im_ax[j], self.values[i, j]) for i in range(re_ax.size) for j in range(im_ax.size))
        return csv_text(("re", "im", "W"), rows, meta)


def wigner_grid(
    state: State,
    re_range: tuple | None = None,
    im_range: tuple | None = None,
    resolution: int | tuple = DEFAULT_RESOLUTION,
    *,
    reflectivity: float = 0.0,
    epsilon_grid: float = DEFAULT_EPSILON_GRID,
    check_tail: bool = True,
) -> PhaseSpaceGrid:
    """Wigner function on a grid by displaced parity.

    Missing ranges come from :func:`auto_window`.  With ``check_tail`` a
    window holding less than 1 - epsilon_grid of the quadrature probability
    raises :class:`TruncationError`; otherwise the tail mass is only reported.
    """
    _single_mode(state)
    if re_range is None or im_range is None:
        auto_re, auto_im = auto_window(state, reflectivity)
        re_range = tuple(re_range) if re_range is not None else auto_re
        im_range = tuple(im_range) if im_range is not None else auto_im
    res = (int(resolution), int(resolution)) if np.isscalar(resolution) else tuple(int(r) for r in resolution)
    if min(res) < 2:
        raise ValidationError("resolution must be at least 2 per axis")
    for lo, hi in (re_range, im_range):
        if not hi > lo:
            raise ValidationError(f"empty range ({lo}, {hi})")
    tail = tail_mass(state, re_range, im_range, reflectivity)
    if check_tail and tail > epsilon_grid:
        raise TruncationError(f"window misses {tail:.3g} of the probability (epsilon_grid {epsilon_grid:g})")
    re_ax = np.linspace(*re_range, res[0])
    im_ax = np.linspace(*im_range, res[1])
    alphas = re_ax[:, None] + 1j * im_ax[None, :]
    values = wigner_points(state, alphas, reflectivity)
    return PhaseSpaceGrid(
        tuple(float(v) for v in re_range), tuple(float(v) for v in im_range), res, values, tail,
        float(epsilon_grid), float(reflectivity), state.layout.cutoffs[0], float(state.norm_deficit),
    )


@dataclass(frozen=True)
class NegativityReport:
    min_value: float
    negative_volume: float
    argmin: complex

    def to_dict(self) -> dict:
        return {"min_value": self.min_value, "negative_volume": self.negative_volume,
                "argmin_re": self.argmin.real, "argmin_im": self.argmin.imag}


def negativity_report(grid: PhaseSpaceGrid) -> NegativityReport:
    """Minimum of W and the integral of |W| over the region where W < 0."""
    vals = grid.values
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    neg = np.where(vals < 0, -vals, 0.0)
    volume = float(np.trapezoid(np.trapezoid(neg, grid.im_axis, axis=1), grid.re_axis))
    return NegativityReport(float(vals[i, j]), volume, complex(grid.re_axis[i], grid.im_axis[j]))


# ---------------------------------------------------------------------------
# single-mode degenerate amplifier
# ---------------------------------------------------------------------------


def _opa_cutoff(params: AmplifierParams, top_input: int, eps: float) -> int:
    """Cutoff at which squeezed vacuum and squeezed |1> both lose less than eps of their norm, plus headroom."""
    length = 64
    while True:
        tails = []
        for odd in (False, True):
            seq = squeezed_sequence(params, length, odd)
            prob = np.abs(seq) ** 2
            tail = 1.0 - np.cumsum(prob)
            tails.append(tail)
        need = eps
        ok = [np.nonzero(t < need)[0] for t in tails]
        if all(o.size for o in ok):
            j = max(int(o[0]) for o in ok)
            return 2 * j + 2 + 4 * top_input + 20
        length *= 2
        if 2 * length > OPA_MAX_CUTOFF:
            raise TruncationError(f"degenerate amplifier cutoff would exceed {OPA_MAX_CUTOFF}")


@dataclass(frozen=True, eq=False)
class DegenerateOutput:
    state: FockState
    cutoff: int
    norm_deficit: float


def degenerate_opa_state(
    g: float, input_state: FockState, cutoff: int | None = None, *, epsilon_trunc: float = OPA_EPSILON_TRUNC
) -> DegenerateOutput:
    """exp[(g/2)(a^dag^2 - a^2)] applied to a single-mode input.

    Columns S|n> are generated from squeezed vacuum with
    S|n+1> = (cosh g a^dag - sinh g a) S|n> / sqrt(n+1).  The cutoff is chosen
    from the squeezed-vacuum and squeezed-photon tails unless given, and the
    value used is returned together with the norm lost to truncation.
    """
    _single_mode(input_state)
    params = AmplifierParams(g)
    amps = input_state.amplitudes
    support = np.nonzero(np.abs(amps) > 0)[0]
    top = int(support.max()) if support.size else 0
    if cutoff is None:
        cutoff = _opa_cutoff(params, top, epsilon_trunc)
    cutoff = int(cutoff)
    if cutoff < top:
        raise TruncationError(f"cutoff {cutoff} is below the input support {top}")
    dim = cutoff + 1
    col = np.zeros(dim, dtype=np.complex128)
    vac = squeezed_sequence(params, (dim + 1) // 2, False)
    col[0::2] = vac[: col[0::2].size]
    sq = np.sqrt(np.arange(1, dim))
    out = amps[0] * col
    c, s = params.C, math.sinh(params.gain)
    for n in range(top):
        nxt = np.zeros_like(col)
        nxt[1:] += c * sq * col[:-1]
        nxt[:-1] -= s * sq * col[1:]
        col = nxt / math.sqrt(n + 1.0)
        if amps[n + 1] != 0:
            out = out + amps[n + 1] * col
    state = FockState(single_mode_layout(cutoff), out)
    deficit = float(max(input_state.norm ** 2 - state.norm ** 2, 0.0))
    if deficit > epsilon_trunc:
        raise TruncationError(f"cutoff {cutoff} loses {deficit:.3g} of the norm (budget {epsilon_trunc:g})")
    return DegenerateOutput(state, cutoff, deficit)


def fock_input(n: int, cutoff: int | None = None) -> FockState:
    """|n> on a single unpolarised mode."""
    cutoff = max(n, 1) if cutoff is None else cutoff
    amps = np.zeros(cutoff + 1, dtype=np.complex128)
    amps[n] = 1.0
    return FockState(single_mode_layout(cutoff), amps)
