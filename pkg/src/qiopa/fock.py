"""Truncated bosonic state algebra over polarisation-resolved spatial modes.

A layout has one or two spatial modes.  Each spatial mode carries two
polarisation sub-modes (H, V) unless ``polarized=False``, in which case it is a
single bosonic mode.  Basis states are ordered row-major over the sub-mode
occupations with spatial mode 1 slowest: ``(n_H, n_V, m_H, m_V)``.

States are immutable: constructors copy their input and mark it read-only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionGuardError,
    LayoutError,
    OutOfRangeError,
    ValidationError,
)

MAX_DENSE_DIM = 20_000
HERMITIAN_TOL = 1e-10
JSON_AMPLITUDE_FLOOR = 1e-14


@dataclass(frozen=True)
class ModeLayout:
    """Mode structure and Fock cutoff of a state.

    ``cutoff`` is the maximum photon number per sub-mode; a tuple gives one
    cutoff per spatial mode (for example ``(1, 40)`` for a single-photon
    partner next to a multiphoton mode).
    """

    spatial_modes: int
    cutoff: Union[int, tuple]
    polarized: bool = True
    cutoffs: tuple = field(init=False, repr=False, compare=True)

    def __post_init__(self):
        if self.spatial_modes not in (1, 2):
            raise LayoutError(f"spatial_modes must be 1 or 2, got {self.spatial_modes}")
        if isinstance(self.cutoff, (tuple, list)):
            cuts = tuple(int(c) for c in self.cutoff)
            if len(cuts) != self.spatial_modes:
                raise LayoutError("one cutoff per spatial mode required")
        else:
            cuts = (int(self.cutoff),) * self.spatial_modes
        if min(cuts) < 1:
            raise LayoutError("cutoff must be >= 1")
        if len(set(cuts)) == 1:
            object.__setattr__(self, "cutoff", cuts[0])
        else:
            object.__setattr__(self, "cutoff", cuts)
        object.__setattr__(self, "cutoffs", cuts)

    @property
    def pols(self) -> int:
        return 2 if self.polarized else 1

    @property
    def labels(self) -> tuple:
        pol = ("H", "V") if self.polarized else ("",)
        return tuple(f"{m + 1}{p}" for m in range(self.spatial_modes) for p in pol)

    @property
    def shape(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs for _ in range(self.pols))

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    def sub_mode(self, spatial_mode: int, pol: int = 0) -> int:
        self.check_mode(spatial_mode)
        return spatial_mode * self.pols + pol

    def check_mode(self, spatial_mode: int) -> None:
        if not 0 <= spatial_mode < self.spatial_modes:
            raise LayoutError(f"spatial mode {spatial_mode} not in layout with {self.spatial_modes} modes")

    def index(self, occupations: Sequence[int]) -> int:
        occ = tuple(int(o) for o in occupations)
        if len(occ) != len(self.shape):
            raise ValidationError(f"expected {len(self.shape)} occupations, got {len(occ)}")
        for o, d in zip(occ, self.shape):
            if o < 0 or o >= d:
                raise OutOfRangeError(f"occupation {o} outside [0, {d - 1}]")
        return int(np.ravel_multi_index(occ, self.shape))

    def occupations(self, index: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(int(index), self.shape))

    def single(self, spatial_mode: int) -> "ModeLayout":
        self.check_mode(spatial_mode)
        return ModeLayout(1, self.cutoffs[spatial_mode], self.polarized)

    def number_grids(self) -> list:
        """Photon-number arrays broadcast over the state tensor, one per sub-mode."""
        return list(np.indices(self.shape, sparse=True))

    def to_dict(self) -> dict:
        return {"spatial_modes": self.spatial_modes, "cutoff": list(self.cutoffs), "polarized": self.polarized}

    @classmethod
    def from_dict(cls, d: dict) -> "ModeLayout":
        cut = d["cutoff"]
        return cls(int(d["spatial_modes"]), tuple(cut) if isinstance(cut, list) else cut, bool(d.get("polarized", True)))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FockState:
    """Pure state: flat amplitude vector over the layout basis."""

    layout: ModeLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape[0] != self.layout.dim:
            raise LayoutError(f"amplitude length {amps.shape[0]} != layout dimension {self.layout.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_tensor(cls, layout: ModeLayout, tensor: np.ndarray) -> "FockState":
        return cls(layout, np.asarray(tensor).reshape(-1))

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.shape)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def norm_deficit(self) -> float:
        """1 - <psi|psi>: probability lost to truncation."""
        return float(1.0 - np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.tensor) ** 2

    def mean_photons(self, sub_mode: int) -> float:
        n = self.layout.number_grids()[sub_mode]
        return float(np.sum(self.probabilities() * n))

    def overlap(self, other: "FockState") -> complex:
        _same_layout(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> "FockState":
        return FockState(self.layout, self.amplitudes / self.norm)

    def to_density(self) -> "DensityOperator":
        _guard_dim(self.layout)
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def to_dict(self) -> dict:
        idx = np.nonzero(np.abs(self.amplitudes) > JSON_AMPLITUDE_FLOOR)[0]
        return {
            "kind": "FockState",
            "layout": self.layout.to_dict(),
            "amplitudes": [[int(i), float(self.amplitudes[i].real), float(self.amplitudes[i].imag)] for i in idx],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "FockState":
        layout = ModeLayout.from_dict(d["layout"])
        amps = np.zeros(layout.dim, dtype=np.complex128)
        for i, re, im in d["amplitudes"]:
            amps[int(i)] = complex(re, im)
        return cls(layout, amps)

    @classmethod
    def from_json(cls, text: str) -> "FockState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Mixed state: dense matrix over the layout basis."""

    layout: ModeLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise LayoutError(f"matrix shape {mat.shape} != ({d}, {d})")
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def norm_deficit(self) -> float:
        return 1.0 - self.trace

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(_hermitize(self.matrix))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).reshape(self.layout.shape)

    def mean_photons(self, sub_mode: int) -> float:
        n = self.layout.number_grids()[sub_mode]
        return float(np.sum(self.diagonal() * n))

    def to_dict(self) -> dict:
        ii, jj = np.nonzero(np.abs(self.matrix) > JSON_AMPLITUDE_FLOOR)
        return {
            "kind": "DensityOperator",
            "layout": self.layout.to_dict(),
            "entries": [
                [int(i), int(j), float(self.matrix[i, j].real), float(self.matrix[i, j].imag)] for i, j in zip(ii, jj)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DensityOperator":
        layout = ModeLayout.from_dict(d["layout"])
        mat = np.zeros((layout.dim, layout.dim), dtype=np.complex128)
        for i, j, re, im in d["entries"]:
            mat[int(i), int(j)] = complex(re, im)
        return cls(layout, mat)

    @classmethod
    def from_json(cls, text: str) -> "DensityOperator":
        return cls.from_dict(json.loads(text))


State = Union[FockState, DensityOperator]


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _guard_dim(layout: ModeLayout) -> None:
    if layout.dim > MAX_DENSE_DIM:
        raise DimensionGuardError(
            f"dense mixed-state operation needs dimension {layout.dim} > {MAX_DENSE_DIM}; use a pure-state path"
        )


def _same_layout(a, b) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")


def as_density(state: State) -> DensityOperator:
    return state.to_density() if isinstance(state, FockState) else state


def state_from_dict(d: dict) -> State:
    if d.get("kind") == "DensityOperator":
        return DensityOperator.from_dict(d)
    return FockState.from_dict(d)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def build_fock(layout: ModeLayout, occupations: Sequence[int]) -> FockState:
    """Unit-norm Fock basis state with the given sub-mode occupations."""
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[layout.index(occupations)] = 1.0
    return FockState(layout, amps)


def vacuum(layout: ModeLayout) -> FockState:
    return build_fock(layout, (0,) * len(layout.shape))


# ---------------------------------------------------------------------------
# polarisation frames and mode rotations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarizationFrame:
    """Bloch-sphere analysis/injection basis {pi_phi, pi_phi_perp}.

    a_phi^dag = cos(theta/2) a_H^dag + e^{i phi} sin(theta/2) a_V^dag and
    a_perp^dag = -e^{-i phi} sin(theta/2) a_H^dag + cos(theta/2) a_V^dag,
    so the frame map is an SU(2) matrix and theta = phi = 0 is the identity.
    """

    theta: float = 0.0
    phi: float = 0.0

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        e = complex(math.cos(self.phi), math.sin(self.phi))
        return np.array([[c, -s / e], [e * s, c]], dtype=np.complex128)

    def vector(self) -> np.ndarray:
        return self.matrix()[:, 0].copy()

    def perp_vector(self) -> np.ndarray:
        return self.matrix()[:, 1].copy()

    def flipped(self) -> "PolarizationFrame":
        """Frame whose first axis is this frame's perpendicular (up to phase)."""
        return PolarizationFrame(math.pi - self.theta, self.phi + math.pi)

    @classmethod
    def equatorial(cls, phi: float) -> "PolarizationFrame":
        return cls(math.pi / 2, phi)


H_FRAME = PolarizationFrame(0.0, 0.0)
DIAGONAL_FRAME = PolarizationFrame(math.pi / 2, 0.0)
CIRCULAR_FRAME = PolarizationFrame(math.pi / 2, math.pi / 2)


def _key(u: np.ndarray) -> tuple:
    return tuple(np.round(np.asarray(u, dtype=np.complex128).ravel(), 15).tolist())


@lru_cache(maxsize=64)
def _rotation_blocks_cached(key: tuple, n_max: int) -> tuple:
    u = np.array(key, dtype=np.complex128).reshape(2, 2)
    return tuple(_rotation_blocks(u, n_max))


def _rotation_blocks(u: np.ndarray, n_max: int) -> list:
    """Photon-number blocks of the passive map a_1^dag -> u[0,0] a_H^dag + u[1,0] a_V^dag, a_2^dag -> u[:,1].

    ``blocks[N][k, n]`` is the amplitude of |k, N-k> in the image of |n, N-n>.
    Built column by column by applying one rotated creation operator at a time.
    """
    blocks = [np.ones((1, 1), dtype=np.complex128)]
    for n_tot in range(1, n_max + 1):
        prev = blocks[-1]
        cur = np.zeros((n_tot + 1, n_tot + 1), dtype=np.complex128)
        up = np.sqrt(np.arange(1, n_tot + 1, dtype=np.float64))
        up_v = np.sqrt(np.arange(n_tot, 0, -1, dtype=np.float64))
        for n in range(n_tot + 1):
            if n > 0:
                src, a, b, norm = prev[:, n - 1], u[0, 0], u[1, 0], math.sqrt(n)
            else:
                src, a, b, norm = prev[:, 0], u[0, 1], u[1, 1], math.sqrt(n_tot)
            col = np.zeros(n_tot + 1, dtype=np.complex128)
            col[1:] += a * up * src
            col[:-1] += b * up_v * src
            cur[:, n] = col / norm
        blocks.append(cur)
    return blocks


def _apply_blocks(tensor: np.ndarray, ax_h: int, ax_v: int, blocks) -> np.ndarray:
    arr = np.moveaxis(tensor, (ax_h, ax_v), (-2, -1))
    lead = arr.shape[:-2]
    dh, dv = arr.shape[-2:]
    arr = arr.reshape(-1, dh, dv)
    out = np.zeros_like(arr)
    for n_tot in range(dh + dv - 1):
        ks = np.arange(max(0, n_tot - dv + 1), min(dh - 1, n_tot) + 1)
        blk = blocks[n_tot][np.ix_(ks, ks)]
        out[:, ks, n_tot - ks] = arr[:, ks, n_tot - ks] @ blk.T
    out = out.reshape(lead + (dh, dv))
    return np.moveaxis(out, (-2, -1), (ax_h, ax_v))


def mode_unitary_blocks(u: np.ndarray, n_max: int) -> tuple:
    return _rotation_blocks_cached(_key(u), int(n_max))


def apply_mode_unitary(state: State, u: np.ndarray, spatial_mode: int = 0) -> State:
    """Apply the passive polarisation map ``u`` (2x2 unitary) to one spatial mode.

    Amplitude pushed beyond the per-sub-mode cutoff is dropped; the returned
    state's ``norm_deficit`` exposes the loss.
    """
    layout = state.layout
    if not layout.polarized:
        raise LayoutError("polarisation rotation needs a polarised layout")
    layout.check_mode(spatial_mode)
    ax_h = layout.sub_mode(spatial_mode, 0)
    c = layout.cutoffs[spatial_mode]
    blocks = mode_unitary_blocks(u, 2 * c)
    if isinstance(state, FockState):
        return FockState.from_tensor(layout, _apply_blocks(state.tensor, ax_h, ax_h + 1, blocks))
    shp = layout.shape
    t = state.matrix.reshape(shp + shp)
    t = _apply_blocks(t, ax_h, ax_h + 1, blocks)
    conj_blocks = [b.conj() for b in blocks]
    off = len(shp)
    t = _apply_blocks(t, off + ax_h, off + ax_h + 1, conj_blocks)
    return DensityOperator(layout, t.reshape(layout.dim, layout.dim))


def rotate_polarization(state: State, frame: PolarizationFrame, spatial_mode: int = 0, inverse: bool = False) -> State:
    """Re-express a state written in frame labels in H/V labels (or back with ``inverse``).

    The forward map sends a_H^dag -> a_phi^dag and a_V^dag -> a_perp^dag, so
    |1_H, 0_V> under the diagonal frame becomes (|1,0> + |0,1>)/sqrt(2).
    """
    u = frame.matrix()
    if inverse:
        u = u.conj().T
    return apply_mode_unitary(state, u, spatial_mode)


def rotate_all(state: State, frame: PolarizationFrame, inverse: bool = False) -> State:
    for m in range(state.layout.spatial_modes):
        state = rotate_polarization(state, frame, m, inverse=inverse)
    return state


# ---------------------------------------------------------------------------
# reductions and distances
# ---------------------------------------------------------------------------


def partial_trace(state: State, keep: int) -> DensityOperator:
    """Reduced state of spatial mode ``keep`` of a two-spatial-mode state."""
    layout = state.layout
    if layout.spatial_modes != 2:
        raise LayoutError("partial_trace needs two spatial modes")
    layout.check_mode(keep)
    out_layout = layout.single(keep)
    p = layout.pols
    d_a = int(np.prod(layout.shape[:p]))
    d_b = int(np.prod(layout.shape[p:]))
    if isinstance(state, FockState):
        psi = state.amplitudes.reshape(d_a, d_b)
        red = psi @ psi.conj().T if keep == 0 else psi.T @ psi.conj()
    else:
        t = state.matrix.reshape(d_a, d_b, d_a, d_b)
        red = np.einsum("ajbj->ab", t) if keep == 0 else np.einsum("iaib->ab", t)
    return DensityOperator(out_layout, red)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(_hermitize(m))
    w = np.where(w > 0, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity_matrices(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of two PSD matrices."""
    return root_fidelity_matrices(a, b) ** 2


def fidelity(a: State, b: State) -> float:
    """Uhlmann fidelity; reduces to |<psi|phi>|^2 for pure inputs."""
    _same_layout(a, b)
    if isinstance(a, FockState) and isinstance(b, FockState):
        val = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif isinstance(a, FockState):
        val = np.vdot(a.amplitudes, b.matrix @ a.amplitudes).real
    elif isinstance(b, FockState):
        val = np.vdot(b.amplitudes, a.matrix @ b.amplitudes).real
    else:
        val = fidelity_matrices(a.matrix, b.matrix)
    return float(min(max(val, 0.0), 1.0))


def bures_from_fidelity(f: float) -> float:
    return math.sqrt(max(0.0, 1.0 - math.sqrt(min(max(f, 0.0), 1.0))))


def bures_distance(a: State, b: State) -> float:
    """sqrt(1 - sqrt(F)) in [0, 1]."""
    return bures_from_fidelity(fidelity(a, b))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def annihilation(layout: ModeLayout, sub_mode: int) -> sp.csr_matrix:
    """Sparse truncated annihilation operator of one sub-mode on the full layout."""
    mats = []
    for i, d in enumerate(layout.shape):
        if i == sub_mode:
            mats.append(sp.diags(np.sqrt(np.arange(1, d, dtype=np.float64)), 1, format="csr"))
        else:
            mats.append(sp.identity(d, format="csr"))
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out.astype(np.complex128)


def _lower(tensor: np.ndarray, axis: int) -> np.ndarray:
    """Apply the annihilation operator of the sub-mode on ``axis`` to a tensor."""
    d = tensor.shape[axis]
    out = np.zeros_like(tensor)
    src = [slice(None)] * tensor.ndim
    dst = [slice(None)] * tensor.ndim
    src[axis] = slice(1, d)
    dst[axis] = slice(0, d - 1)
    shape = [1] * tensor.ndim
    shape[axis] = d - 1
    out[tuple(dst)] = tensor[tuple(src)] * np.sqrt(np.arange(1, d, dtype=np.float64)).reshape(shape)
    return out


def polarization_correlations(state: State, spatial_mode: int = 0) -> np.ndarray:
    """2x2 matrix G[i, j] = <a_i^dag a_j> over the (H, V) sub-modes of a spatial mode."""
    layout = state.layout
    ax = layout.sub_mode(spatial_mode, 0)
    if isinstance(state, FockState):
        t = state.tensor
        low = [_lower(t, ax), _lower(t, ax + 1)]
        return np.array([[np.vdot(low[i], low[j]) for j in range(2)] for i in range(2)])
    ops = [annihilation(layout, ax), annihilation(layout, ax + 1)]
    rho = state.matrix
    g = np.zeros((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            op = (ops[i].conj().T @ ops[j]).tocoo()
            g[i, j] = np.sum(op.data * rho[op.col, op.row])
    return g


def truncate_total(state: FockState, n_max: int) -> FockState:
    """Drop components with more than ``n_max`` photons in any spatial mode.

    Unlike the per-sub-mode box, this projection commutes with polarisation
    rotations, so truncated states stay exactly frame-covariant.
    """
    layout = state.layout
    grids = layout.number_grids()
    keep = np.ones(layout.shape, dtype=bool)
    for m in range(layout.spatial_modes):
        tot = sum(grids[m * layout.pols + p] for p in range(layout.pols))
        keep &= tot <= n_max
    return FockState.from_tensor(layout, np.where(keep, state.tensor, 0.0))


def root_fidelity_matrices(a: np.ndarray, b: np.ndarray) -> float:
    """Tr sqrt(sqrt(a) b sqrt(a)), the square root of the Uhlmann fidelity."""
    # trace norm of sqrt(a) sqrt(b): avoids square roots of round-off eigenvalues
    return float(np.sum(np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False)))
