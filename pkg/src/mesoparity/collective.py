"""Permutation-symmetric machinery for the mesoscopic system (MS).

Dicke ladders, collective rotations and flips, excitation-sector bookkeeping,
and a sector-resolved mixed-state form for the parity-conditioned protocol
family.  The MS is an ensemble of n identical two-level systems addressed only
through collective operations.

Convention: m always counts constituents in |1> (per-site number operator
|1><1|), so the weakly polarized product state rho_eps concentrates near m=0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .states import (
    DENSE_DENSITY_DIM_CAP,
    DENSE_STATE_DIM_CAP,
    LABEL_APPARATUS,
    LABEL_MS,
    LABEL_Q1,
    LABEL_Q2,
    DensityOperator,
    LayoutError,
    PureState,
    SubsystemLayout,
    ValidationError,
)
from .tolerances import TOL


class RepresentationError(ValueError):
    """The requested operation leaves the family of representable states."""


# ---------------------------------------------------------------------------
# excitation-sector bookkeeping


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    """Number of 1-bits of every n-bit basis index, site 1 = most significant."""
    v = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.uint8)
    v.setflags(write=False)
    return v


@lru_cache(maxsize=None)
def total_excitation_grid(block_sizes: tuple[int, ...]) -> np.ndarray:
    """Total excitation m_1+...+m_k over the tuple grid of block indices."""
    grid = np.indices(tuple(b + 1 for b in block_sizes)).sum(axis=0)
    grid.setflags(write=False)
    return grid


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """b(m; n, p) for m = 0..n.

    Exact products up to n = 50, log-space beyond so that large-n tails do not
    underflow through intermediate factors.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability {p} outside [0, 1]")
    m = np.arange(n + 1)
    if p == 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if p == 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    if n <= 50:
        combs = np.array([math.comb(n, k) for k in m], dtype=float)
        return combs * p**m * (1.0 - p) ** (n - m)
    log_pmf = (
        gammaln(n + 1)
        - gammaln(m + 1)
        - gammaln(n - m + 1)
        + m * np.log(p)
        + (n - m) * np.log1p(-p)
    )
    return np.exp(log_pmf)


@dataclass(frozen=True)
class MsConfig:
    """Ensemble size and per-site depolarization of the MS initial state.

    Each site starts in diag(q, 1-q) with q = 1 - epsilon/2, i.e. polarization
    1 - epsilon toward |0>.
    """

    n: int
    epsilon: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"MS size must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not 0.0 <= self.epsilon < 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    @classmethod
    def from_polarization(cls, n: int, polarization: float) -> "MsConfig":
        return cls(n, 1.0 - polarization)

    @property
    def ground_probability(self) -> float:
        return 1.0 - self.epsilon / 2.0

    @property
    def polarization(self) -> float:
        return 1.0 - self.epsilon

    def sector_weights(self) -> np.ndarray:
        """Excitation-sector distribution b(m; n, epsilon/2) of rho_eps."""
        return binomial_pmf(self.n, self.epsilon / 2.0)


@dataclass(frozen=True)
class SectorProjector:
    """Projector onto total MS excitation m (applied via basis masks)."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"sector index must be a nonnegative integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    def dense_mask(self, n: int) -> np.ndarray:
        return popcounts(n) == self.m

    def grid_mask(self, block_sizes: Sequence[int]) -> np.ndarray:
        return total_excitation_grid(tuple(block_sizes)) == self.m

    def expectation(self, state) -> float:
        probs = sector_probabilities(state)
        return float(probs[self.m]) if self.m < probs.size else 0.0


# ---------------------------------------------------------------------------
# Dicke ladder (single permutation-symmetric block)


@dataclass(frozen=True)
class DickeLadder:
    """Pure symmetric state of one block: amplitude per excitation m = 0..N_b."""

    block_size: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError(f"block size must be >= 1, got {self.block_size}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.size != self.block_size + 1:
            raise LayoutError(
                f"{amps.size} amplitudes for a size-{self.block_size} ladder"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > TOL.norm:
            raise ValidationError(f"ladder norm {nrm} deviates from 1 beyond {TOL.norm}")


def ladder_ground(n: int) -> DickeLadder:
    amps = np.zeros(n + 1)
    amps[0] = 1.0
    return DickeLadder(n, amps)


@lru_cache(maxsize=None)
def ladder_generator(n: int) -> np.ndarray:
    """Matrix of sum_j sigma_x^(j) restricted to the symmetric ladder."""
    off = np.sqrt((n - np.arange(n)) * (np.arange(n) + 1.0))
    gen = np.diag(off, 1) + np.diag(off, -1)
    gen.setflags(write=False)
    return gen


def rotation_matrix(n: int, theta: float) -> np.ndarray:
    """exp(-i*theta*sum_j sigma_x^(j)) on the ladder, via eigendecomposition."""
    evals, vecs = np.linalg.eigh(ladder_generator(n))
    return (vecs * np.exp(-1j * theta * evals)) @ vecs.conj().T


def collective_rotation(theta: float, block: DickeLadder) -> DickeLadder:
    """Uniform rotation of every site about x by 2*theta.

    theta = pi/2 reverses the ladder (m -> N_b - m) up to the global phase
    (-i)^{N_b}, because each site contributes exp(-i*(pi/2)*sigma_x) =
    -i*sigma_x.
    """
    out = rotation_matrix(block.block_size, theta) @ block.amplitudes
    return DickeLadder(block.block_size, out)


def dicke_vector(n: int, m: int) -> np.ndarray:
    """Dense 2^n amplitude vector of the symmetric m-excitation state."""
    if not 0 <= m <= n:
        raise ValueError(f"excitation {m} outside [0, {n}]")
    mask = popcounts(n) == m
    return mask / math.sqrt(math.comb(n, m))


@lru_cache(maxsize=None)
def dicke_basis(n: int) -> np.ndarray:
    """Columns are the dense Dicke vectors m = 0..n (an isometry 2^n x (n+1))."""
    mat = np.stack([dicke_vector(n, m) for m in range(n + 1)], axis=1)
    mat.setflags(write=False)
    return mat


# ---------------------------------------------------------------------------
# multi-block pure states with the two target qubits (and optional apparatus)


@dataclass(frozen=True)
class CollectiveBlockState:
    """Pure joint state: axes (q1, q2, block_1, ..., block_k[, apparatus]).

    Each MS block is an independent Dicke ladder; block 1 holds the first
    (leftmost) sites.  Total excitation of an index tuple is sum(m_i).
    """

    amplitudes: np.ndarray
    block_sizes: tuple[int, ...]
    has_apparatus: bool = False

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if not sizes or any(b < 1 for b in sizes):
            raise LayoutError(f"bad block sizes {sizes}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        expected = (2, 2) + tuple(b + 1 for b in sizes)
        if self.has_apparatus:
            expected += (2,)
        if amps.shape != expected:
            raise LayoutError(f"amplitude shape {amps.shape}, expected {expected}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > TOL.norm:
            raise ValidationError(f"state norm {nrm} deviates from 1 beyond {TOL.norm}")

    @property
    def n_sites(self) -> int:
        return sum(self.block_sizes)

    @property
    def block_axes(self) -> tuple[int, ...]:
        return tuple(range(2, 2 + len(self.block_sizes)))

    @property
    def apparatus_axis(self) -> int:
        if not self.has_apparatus:
            raise LayoutError("state has no apparatus slot")
        return 2 + len(self.block_sizes)

    def qubit_axis(self, label: str) -> int:
        if label == LABEL_Q1:
            return 0
        if label == LABEL_Q2:
            return 1
        raise LayoutError(f"unknown control label {label!r}")


def block_ground_state(qubit_amplitudes: np.ndarray, block_sizes: Sequence[int]) -> CollectiveBlockState:
    """Qubits in the given 2x2 amplitude table, every block at m = 0."""
    sizes = tuple(int(b) for b in block_sizes)
    amps = np.zeros((2, 2) + tuple(b + 1 for b in sizes), dtype=complex)
    idx = (slice(None), slice(None)) + (0,) * len(sizes)
    amps[idx] = np.asarray(qubit_amplitudes, dtype=complex)
    return CollectiveBlockState(amps, sizes)


# ---------------------------------------------------------------------------
# collective flips, the GHZ-manifold entangler, and the edge phase gate
#
# Dense states keep the MS as one big-endian slot of dimension 2^n, so a flip
# of all sites is an index reversal (b -> 2^n-1-b) and a flip of a contiguous
# site range is a reversal of one factor of a reshaped index.


def _dense_ms_meta(layout: SubsystemLayout) -> tuple[int, int]:
    slot = layout.slot(LABEL_MS)
    dim = layout.dims[slot]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise LayoutError(f"MS dimension {dim} is not a power of two")
    return slot, n


def _flip_ms_tensor(t, ms_axis, bit_counts, which_blocks, control_axis=None):
    nd = t.ndim
    t2 = np.moveaxis(t, ms_axis, nd - 1)
    lead = t2.shape[:-1]
    t2 = t2.reshape(lead + tuple(1 << b for b in bit_counts))
    flip_axes = tuple(len(lead) + j for j in which_blocks)
    if control_axis is None:
        t2 = np.flip(t2, axis=flip_axes)
    else:
        cpos = control_axis if control_axis < ms_axis else control_axis - 1
        t2 = t2.copy()
        sl = [slice(None)] * t2.ndim
        sl[cpos] = slice(1, 2)
        sl = tuple(sl)
        t2[sl] = np.flip(t2[sl], axis=flip_axes)
    t2 = t2.reshape(lead + (prod(1 << b for b in bit_counts),))
    return np.moveaxis(t2, nd - 1, ms_axis)


def _flip_block_tensor(t, block_axes, control_axis=None):
    if control_axis is None:
        return np.flip(t, axis=tuple(block_axes))
    out = t.copy()
    sl = [slice(None)] * t.ndim
    sl[control_axis] = slice(1, 2)
    sl = tuple(sl)
    out[sl] = np.flip(t[sl], axis=tuple(block_axes))
    return out


def _resolve_dense_blocks(n, block_sizes, blocks):
    sizes = (n,) if block_sizes is None else tuple(int(b) for b in block_sizes)
    if sum(sizes) != n:
        raise LayoutError(f"block sizes {sizes} do not cover {n} sites")
    which = tuple(range(len(sizes))) if blocks is None else tuple(blocks)
    if any(j < 0 or j >= len(sizes) for j in which):
        raise LayoutError(f"block selection {which} outside {len(sizes)} blocks")
    return sizes, which


def collective_flip(state, controlled_on=None, blocks=None, block_sizes=None):
    """Exact X-on-every-site flip of the selected MS blocks, optionally
    controlled on one target qubit; carries no phase by construction.

    Within each selected block m -> N_b - m.  `block_sizes` partitions a dense
    MS slot into contiguous site ranges (default: one block of all sites);
    collective-backend states flip their own declared blocks.
    """
    if isinstance(state, CollectiveBlockState):
        if block_sizes is not None and tuple(block_sizes) != state.block_sizes:
            raise LayoutError("block_sizes conflicts with the state's own blocks")
        which = state.block_axes if blocks is None else tuple(2 + j for j in blocks)
        ctrl = None if controlled_on is None else state.qubit_axis(controlled_on)
        out = _flip_block_tensor(state.amplitudes, which, ctrl)
        return CollectiveBlockState(out, state.block_sizes, state.has_apparatus)
    if isinstance(state, SectorMixture):
        if controlled_on is not None:
            raise RepresentationError(
                "single-qubit-controlled flips leave the parity-block family; "
                "use the parity-conditioned evolution instead"
            )
        return mixture_conditional(state, True, True)
    if isinstance(state, (PureState, DensityOperator)):
        slot, n = _dense_ms_meta(state.layout)
        sizes, which = _resolve_dense_blocks(n, block_sizes, blocks)
        ctrl = None if controlled_on is None else state.layout.slot(controlled_on)
        if isinstance(state, PureState):
            t = _flip_ms_tensor(state.as_tensor(), slot, sizes, which, ctrl)
            return PureState(t.reshape(-1), state.layout)
        nd = state.layout.n_slots
        t = state.as_tensor()
        t = _flip_ms_tensor(t, slot, sizes, which, ctrl)
        t = _flip_ms_tensor(t, nd + slot, sizes, which, None if ctrl is None else nd + ctrl)
        d = state.layout.total_dim
        return DensityOperator(t.reshape(d, d), state.layout)
    raise TypeError(f"cannot flip {type(state).__name__}")


def ghz_entangler(state, inverse: bool = False):
    """Apply (identity -/+ i * flip-all)/sqrt(2), the collective entangler that
    sends |m> to (|m> -/+ i |N-m>)/sqrt(2); its square is -/+ i * flip-all.
    """
    coeff = 1j if inverse else -1j
    if isinstance(state, CollectiveBlockState):
        t = state.amplitudes
        out = (t + coeff * _flip_block_tensor(t, state.block_axes)) / math.sqrt(2.0)
        return CollectiveBlockState(out, state.block_sizes, state.has_apparatus)
    if isinstance(state, PureState):
        slot, n = _dense_ms_meta(state.layout)
        t = state.as_tensor()
        out = (t + coeff * _flip_ms_tensor(t, slot, (n,), (0,))) / math.sqrt(2.0)
        return PureState(out.reshape(-1), state.layout)
    if isinstance(state, DensityOperator):
        slot, n = _dense_ms_meta(state.layout)
        nd = state.layout.n_slots
        t = state.as_tensor()
        t = (t + coeff * _flip_ms_tensor(t, slot, (n,), (0,))) / math.sqrt(2.0)
        t = (t + coeff.conjugate() * _flip_ms_tensor(t, nd + slot, (n,), (0,))) / math.sqrt(2.0)
        d = state.layout.total_dim
        return DensityOperator(t.reshape(d, d), state.layout)
    raise TypeError(f"cannot apply the collective entangler to {type(state).__name__}")


def _edge_phase_tensor(t, ms_axis, n, site_first, control_axis):
    nd = t.ndim
    t2 = np.moveaxis(t, ms_axis, nd - 1)
    lead = t2.shape[:-1]
    split = (2, 1 << (n - 1)) if site_first else (1 << (n - 1), 2)
    t2 = t2.reshape(lead + split).copy()
    cpos = control_axis if control_axis < ms_axis else control_axis - 1
    sl = [slice(None)] * t2.ndim
    sl[cpos] = slice(1, 2)
    sl[len(lead) + (0 if site_first else 1)] = slice(1, 2)
    sl = tuple(sl)
    t2[sl] = -t2[sl]
    t2 = t2.reshape(lead + (1 << n,))
    return np.moveaxis(t2, nd - 1, ms_axis)


def edge_phase_gate(state, controlled_on: str):
    """Controlled-Z between a target qubit and its nearby MS site.

    Qubit q1 couples to site 1 (most significant bit of the dense index), q2
    to site n (least significant).  On the collective backend the MS support
    must be confined to m in {0, n}: only there does a single-site phase act
    within the symmetric subspace.
    """
    if controlled_on not in (LABEL_Q1, LABEL_Q2):
        raise LayoutError(f"unknown control label {controlled_on!r}")
    site_first = controlled_on == LABEL_Q1
    if isinstance(state, CollectiveBlockState):
        if len(state.block_sizes) != 1:
            raise RepresentationError(
                "edge phase gate needs a single-block collective state"
            )
        n = state.n_sites
        ctrl = state.qubit_axis(controlled_on)
        sl = [slice(None)] * state.amplitudes.ndim
        sl[ctrl] = 1
        branch = np.abs(state.amplitudes[tuple(sl)]) ** 2
        sector = branch.sum(axis=tuple(i for i in range(branch.ndim) if i != 1))
        bad = [m for m in range(1, n) if sector[m] > TOL.prob_floor]
        if bad:
            raise RepresentationError(
                f"edge phase gate outside the m in {{0, {n}}} manifold: "
                f"control branch occupies sectors {bad}"
            )
        out = state.amplitudes.copy()
        sl[ctrl] = slice(1, 2)
        sl[2] = slice(n, n + 1)
        sl = tuple(sl)
        out[sl] = -out[sl]
        return CollectiveBlockState(out, state.block_sizes, state.has_apparatus)
    if isinstance(state, PureState):
        slot, n = _dense_ms_meta(state.layout)
        ctrl = state.layout.slot(controlled_on)
        t = _edge_phase_tensor(state.as_tensor(), slot, n, site_first, ctrl)
        return PureState(t.reshape(-1), state.layout)
    if isinstance(state, DensityOperator):
        slot, n = _dense_ms_meta(state.layout)
        ctrl = state.layout.slot(controlled_on)
        nd = state.layout.n_slots
        t = state.as_tensor()
        t = _edge_phase_tensor(t, slot, n, site_first, ctrl)
        t = _edge_phase_tensor(t, nd + slot, n, site_first, nd + ctrl)
        d = state.layout.total_dim
        return DensityOperator(t.reshape(d, d), state.layout)
    raise TypeError(f"cannot apply the edge phase gate to {type(state).__name__}")


# ---------------------------------------------------------------------------
# sector statistics


def sector_probabilities(state) -> np.ndarray:
    """p(m) = <Pi(m)> over total excitation m = 0..n."""
    if isinstance(state, CollectiveBlockState):
        axes = tuple(i for i in range(state.amplitudes.ndim) if i not in state.block_axes)
        grid_probs = (np.abs(state.amplitudes) ** 2).sum(axis=axes)
        grid = total_excitation_grid(state.block_sizes)
        return np.bincount(grid.reshape(-1), weights=grid_probs.reshape(-1),
                           minlength=state.n_sites + 1)
    if isinstance(state, SectorMixture):
        return 0.5 * (state.weight_odd + state.weight_even)
    if isinstance(state, PureState):
        slot, n = _dense_ms_meta(state.layout)
        t = np.abs(state.as_tensor()) ** 2
        axes = tuple(i for i in range(t.ndim) if i != slot)
        basis_probs = t.sum(axis=axes) if axes else t
        return np.bincount(popcounts(n).astype(np.intp), weights=basis_probs,
                           minlength=n + 1)
    if isinstance(state, DensityOperator):
        slot, n = _dense_ms_meta(state.layout)
        d = state.diagonal().reshape(state.layout.dims)
        axes = tuple(i for i in range(d.ndim) if i != slot)
        basis_probs = d.sum(axis=axes) if axes else d
        return np.bincount(popcounts(n).astype(np.intp), weights=basis_probs,
                           minlength=n + 1)
    raise TypeError(f"no sector statistics for {type(state).__name__}")


def thermal_site(config: MsConfig) -> np.ndarray:
    q = config.ground_probability
    return np.diag([q, 1.0 - q]).astype(complex)


def thermal_ms_dense(config: MsConfig) -> DensityOperator:
    """rho_eps as one dense diagonal over the 2^n product basis."""
    n = config.n
    if (1 << n) > DENSE_DENSITY_DIM_CAP:
        raise LayoutError(f"2^{n} exceeds the dense density cap")
    q = config.ground_probability
    pops = popcounts(n).astype(np.float64)
    diag = q ** (n - pops) * (1.0 - q) ** pops
    layout = SubsystemLayout((1 << n,), (LABEL_MS,))
    return DensityOperator(np.diag(diag).astype(complex), layout)


# ---------------------------------------------------------------------------
# sector-resolved mixed form of the parity-conditioned family
#
# States of the form
#   1/2 (|o+><o+| (x) A_o + |e+><e+| (x) A_e + |o+><e+| (x) X + h.c.)
# where A_o, A_e are sector-uniform diagonals and the cross block X is a
# sector-uniform diagonal optionally multiplied from the left by the full
# collective flip F.  This family is closed under parity-conditioned flips and
# sector-diagonal measurement updates, and it is exactly where the
# limited-polarization protocol lives at sizes far beyond the dense cap.


@dataclass(frozen=True)
class SectorMixture:
    """Sector data of a parity-conditioned two-qubit/MS mixed state.

    weight_odd[m] / weight_even[m]: excitation-sector weights of the MS blocks
    correlated with the odd/even Bell component; cross[m]: per-sector scalar of
    the odd-even cross block, which carries a collective flip when
    cross_flipped is set (making its trace vanish identically).
    """

    n: int
    weight_odd: np.ndarray
    weight_even: np.ndarray
    cross: np.ndarray
    cross_flipped: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        for name in ("weight_odd", "weight_even", "cross"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
            if v.size != self.n + 1:
                raise LayoutError(f"{name} has length {v.size}, expected {self.n + 1}")
        if self.weight_odd.min() < -TOL.norm or self.weight_even.min() < -TOL.norm:
            raise ValidationError("negative sector weight")
        total = 0.5 * (self.weight_odd.sum() + self.weight_even.sum())
        if abs(total - 1.0) > TOL.norm:
            raise ValidationError(f"mixture trace {total} deviates from 1")
        # the cross block connects sector m of the even branch with sector m
        # (or n-m, when it carries the flip) of the odd branch
        w_o = self.weight_odd[::-1] if self.cross_flipped else self.weight_odd
        bound = np.sqrt(np.clip(w_o, 0, None) * np.clip(self.weight_even, 0, None))
        if np.any(np.abs(self.cross) > bound + 1e-9):
            raise ValidationError("cross block exceeds its Cauchy-Schwarz bound")

    @property
    def fidelity_odd(self) -> float:
        return 0.5 * float(self.weight_odd.sum())

    @property
    def fidelity_even(self) -> float:
        return 0.5 * float(self.weight_even.sum())

    @property
    def cross_trace(self) -> float:
        return 0.0 if self.cross_flipped else float(self.cross.sum())


def mixture_prepare(config: MsConfig) -> SectorMixture:
    """|++><++| (x) rho_eps in sector form (both branches equal, full cross)."""
    w = config.sector_weights()
    return SectorMixture(config.n, w, w, w, cross_flipped=False)


def mixture_conditional(mix: SectorMixture, odd_flip: bool, even_flip: bool) -> SectorMixture:
    """Conjugate by the parity-conditioned unitary with tag blocks.

    The odd-branch block maps A_o -> V_o A_o V_o^dag and the cross block
    F^f diag(u) -> F^(f xor a xor b) diag(u reversed-if-b), with a, b flagging
    whether V_o, V_e are the collective flip.  Self-inverse, so it serves both
    the evolution and its reversal.
    """
    w_o = mix.weight_odd[::-1] if odd_flip else mix.weight_odd
    w_e = mix.weight_even[::-1] if even_flip else mix.weight_even
    cross = mix.cross[::-1] if even_flip else mix.cross
    flipped = mix.cross_flipped ^ odd_flip ^ even_flip
    return SectorMixture(mix.n, w_o, w_e, cross, flipped)


def _spread_over_basis(n: int, sector_weights: np.ndarray) -> np.ndarray:
    """Per-basis-state diagonal whose sector sums reproduce the given weights."""
    pops = popcounts(n).astype(np.intp)
    counts = np.array([math.comb(n, m) for m in range(n + 1)], dtype=float)
    return np.asarray(sector_weights, dtype=float)[pops] / counts[pops]


def mixture_to_dense(mix: SectorMixture) -> DensityOperator:
    """Expand to the dense (q1, q2, ms) density for cross-checks at small n."""
    from .metrics import BELL_EVEN_PLUS, BELL_ODD_PLUS

    n = mix.n
    dim = 1 << n
    if 4 * dim > DENSE_DENSITY_DIM_CAP:
        raise LayoutError(f"dense mixture dimension {4 * dim} exceeds the density cap")
    a_o = np.diag(_spread_over_basis(n, mix.weight_odd)).astype(complex)
    a_e = np.diag(_spread_over_basis(n, mix.weight_even)).astype(complex)
    x = np.diag(_spread_over_basis(n, mix.cross)).astype(complex)
    if mix.cross_flipped:
        x = np.eye(dim)[::-1] @ x
    o = BELL_ODD_PLUS.vector[:, None]
    e = BELL_EVEN_PLUS.vector[:, None]
    rho = 0.5 * (
        np.kron(o @ o.conj().T, a_o)
        + np.kron(e @ e.conj().T, a_e)
        + np.kron(o @ e.conj().T, x)
        + np.kron(e @ o.conj().T, x.conj().T)
    )
    layout = SubsystemLayout((2, 2, dim), (LABEL_Q1, LABEL_Q2, LABEL_MS))
    return DensityOperator(rho, layout)


def expand_to_dense(state: CollectiveBlockState) -> PureState:
    """Embed a block state into the dense product basis (small n only)."""
    total = 4 * (1 << state.n_sites) * (2 if state.has_apparatus else 1)
    if total > DENSE_STATE_DIM_CAP:
        raise LayoutError(f"dense expansion dimension {total} exceeds the cap")
    t = state.amplitudes
    for j, nb in enumerate(state.block_sizes):
        axis = 2 + j
        t = np.moveaxis(t, axis, 0)
        t = np.tensordot(dicke_basis(nb), t, axes=(1, 0))
        t = np.moveaxis(t, 0, axis)
    dims = (2, 2, 1 << state.n_sites)
    labels = (LABEL_Q1, LABEL_Q2, LABEL_MS)
    if state.has_apparatus:
        dims += (2,)
        labels += (LABEL_APPARATUS,)
    return PureState(t.reshape(-1), SubsystemLayout(dims, labels))
