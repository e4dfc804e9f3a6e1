"""Collective-excitation measurements.

Effects act only through the total-excitation projectors: E_alpha =
sum_m a[alpha][m] Pi(m).  The post-measurement state follows the square-root
update rule, sqrt(E_alpha) rho sqrt(E_alpha) / p_alpha, with
sqrt(E_alpha) = sum_m sqrt(a[alpha][m]) Pi(m) acting on the MS slots only.

The apparatus route realizes a two-outcome member of this family physically:
attach a probe qubit in |0>, rotate it by theta(m) conditioned on the sector,
read it out projectively, then undo the leftover sector-diagonal signs so the
result coincides with the square-root rule exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import block_diag

from .circuits import JointState, qubit_marginal
from .collective import (
    CollectiveBlockState,
    SectorMixture,
    _dense_ms_meta,
    popcounts,
    sector_probabilities,
    total_excitation_grid,
)
from .metrics import BELL_EVEN_PLUS, BELL_ODD_PLUS, fidelity
from .states import (
    LABEL_APPARATUS,
    LABEL_MS,
    DensityOperator,
    LayoutError,
    PureState,
    SubsystemLayout,
    ValidationError,
    apply,
)
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class CollectivePOVM:
    """Coefficient matrix a[alpha][m] of sector-diagonal effects."""

    coefficients: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 2:
            raise LayoutError(f"coefficient matrix shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)
        if a.min() < -TOL.povm or a.max() > 1.0 + TOL.povm:
            raise ValidationError("POVM coefficients must lie in [0, 1]")
        res = np.abs(a.sum(axis=0) - 1.0).max()
        if res > TOL.povm:
            raise ValidationError(f"POVM incomplete: column sums off by {res}")

    @property
    def n_sites(self) -> int:
        return self.coefficients.shape[1] - 1

    @property
    def n_outcomes(self) -> int:
        return self.coefficients.shape[0]


@dataclass(frozen=True, eq=False)
class TwoOutcomeTheta:
    """Angle table theta(m) defining the cos^2/sin^2 two-outcome family."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).reshape(-1)
        if th.size < 2:
            raise LayoutError("theta table needs at least two entries (m = 0..n)")
        if not np.all(np.isfinite(th)):
            raise ValidationError("theta table must be finite")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @classmethod
    def linear(cls, n: int, g: float, t_m: float) -> "TwoOutcomeTheta":
        return cls(g * t_m * np.arange(n + 1))

    @property
    def n_sites(self) -> int:
        return self.theta.size - 1


@dataclass(frozen=True)
class ApparatusSpec:
    """Probe-qubit coupling: rotation angle theta(m) = g * m * t_m."""

    g: float
    t_m: float

    def __post_init__(self):
        gt = self.g * self.t_m
        if not np.isfinite(gt) or gt < 0:
            raise ValidationError(f"g*t_m must be finite and nonnegative, got {gt}")

    def theta(self, n: int) -> TwoOutcomeTheta:
        return TwoOutcomeTheta.linear(n, self.g, self.t_m)


@dataclass(frozen=True, eq=False)
class OutcomeRecord:
    """One measurement outcome: its probability, post-selected state, and
    Bell fidelities of the post-selected qubit pair (None below the
    probability floor)."""

    outcome: int
    probability: float
    post_state: Optional[JointState]
    fidelity_odd: Optional[float]
    fidelity_even: Optional[float]
    fidelity_best: Optional[float]


def povm_from_theta(t: TwoOutcomeTheta) -> CollectivePOVM:
    """Two outcomes with coefficients cos^2(theta(m)) and sin^2(theta(m))."""
    c, s = np.cos(t.theta), np.sin(t.theta)
    return CollectivePOVM(np.stack([c * c, s * s]))


def threshold_pvm(n: int) -> CollectivePOVM:
    """Binary coarse-graining: outcome 0 collects every sector m <= floor(n/2)."""
    low = (np.arange(n + 1) <= n // 2).astype(float)
    return CollectivePOVM(np.stack([low, 1.0 - low]))


def sector_pvm(n: int) -> CollectivePOVM:
    """The fully resolving measurement: one outcome per excitation sector."""
    return CollectivePOVM(np.eye(n + 1))


# ---------------------------------------------------------------------------
# square-root-rule measurement


def _state_n_sites(state) -> int:
    if isinstance(state, (CollectiveBlockState,)):
        return state.n_sites
    if isinstance(state, SectorMixture):
        return state.n
    return _dense_ms_meta(state.layout)[1]


def _record(outcome, p, post) -> OutcomeRecord:
    if post is None:
        return OutcomeRecord(outcome, max(float(p), 0.0), None, None, None, None)
    marg = qubit_marginal(post)
    f_o = fidelity(marg, BELL_ODD_PLUS)
    f_e = fidelity(marg, BELL_EVEN_PLUS)
    return OutcomeRecord(outcome, float(p), post, f_o, f_e, max(f_o, f_e))


def _sqrt_update(state, sqrt_coeffs: np.ndarray, p: float):
    """sqrt(E) state / sqrt(p) for one sector-diagonal effect."""
    if isinstance(state, PureState):
        slot, n = _dense_ms_meta(state.layout)
        w = sqrt_coeffs[popcounts(n).astype(np.intp)]
        shape = [1] * state.layout.n_slots
        shape[slot] = 1 << n
        t = state.as_tensor() * w.reshape(shape)
        return PureState(t.reshape(-1) / np.sqrt(p), state.layout)
    if isinstance(state, DensityOperator):
        slot, n = _dense_ms_meta(state.layout)
        w = sqrt_coeffs[popcounts(n).astype(np.intp)]
        shape = [1] * state.layout.n_slots
        shape[slot] = 1 << n
        v = np.broadcast_to(w.reshape(shape), state.layout.dims).reshape(-1)
        mat = state.matrix * np.outer(v, v) / p
        return DensityOperator(mat, state.layout)
    if isinstance(state, CollectiveBlockState):
        grid = total_excitation_grid(state.block_sizes)
        shape = (1, 1) + grid.shape + ((1,) if state.has_apparatus else ())
        t = state.amplitudes * sqrt_coeffs[grid].reshape(shape)
        return CollectiveBlockState(t / np.sqrt(p), state.block_sizes, state.has_apparatus)
    if isinstance(state, SectorMixture):
        a = sqrt_coeffs**2
        cross_factor = a if not state.cross_flipped else sqrt_coeffs * sqrt_coeffs[::-1]
        return SectorMixture(
            state.n,
            a * state.weight_odd / p,
            a * state.weight_even / p,
            cross_factor * state.cross / p,
            state.cross_flipped,
        )
    raise TypeError(f"cannot measure {type(state).__name__}")


def measure(state: JointState, povm: CollectivePOVM) -> list:
    """Apply a sector POVM: one OutcomeRecord per effect, probabilities from
    the sector distribution, post states from the square-root rule."""
    n = _state_n_sites(state)
    if povm.n_sites != n:
        raise LayoutError(
            f"POVM covers sectors 0..{povm.n_sites} but the MS has {n} sites"
        )
    sectors = sector_probabilities(state)
    records = []
    for alpha in range(povm.n_outcomes):
        a = povm.coefficients[alpha]
        p = float(a @ sectors)
        if p < TOL.prob_floor:
            records.append(_record(alpha, p, None))
            continue
        post = _sqrt_update(state, np.sqrt(a), p)
        records.append(_record(alpha, p, post))
    return records


# ---------------------------------------------------------------------------
# apparatus-qubit realization


def _probe_rotation(theta: float) -> np.ndarray:
    # exp(-i*theta*sigma_y)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _sector_signs(values: np.ndarray) -> np.ndarray:
    # sign convention: exactly +1 at zeros, so the correction stays unitary
    return np.where(values >= 0.0, 1.0, -1.0)


def apparatus_measure(state: JointState, spec: Union[ApparatusSpec, TwoOutcomeTheta]) -> list:
    """Measure via the probe qubit and return records identical to
    `measure` with `povm_from_theta`.

    Steps: attach |0>, rotate the probe by theta(m) on each sector, read the
    probe in its computational basis, discard it, then apply the
    sector-diagonal sign correction sum_m sign(cos theta(m)) Pi(m) (outcome 0)
    or sum_m sign(sin theta(m)) Pi(m) (outcome 1).
    """
    n = _state_n_sites(state)
    table = spec.theta(n) if isinstance(spec, ApparatusSpec) else spec
    if table.n_sites != n:
        raise LayoutError(
            f"theta table covers sectors 0..{table.n_sites} but the MS has {n} sites"
        )
    theta = table.theta
    cos_m, sin_m = np.cos(theta), np.sin(theta)
    if isinstance(state, PureState):
        return _apparatus_pure_dense(state, cos_m, sin_m)
    if isinstance(state, DensityOperator):
        return _apparatus_density(state, theta, cos_m, sin_m)
    if isinstance(state, CollectiveBlockState):
        return _apparatus_blocks(state, cos_m, sin_m)
    if isinstance(state, SectorMixture):
        # the probe enters in |0>, so outcome k weights every sector by
        # R(theta_m)[k,0]^2; signs cancel pairwise on the diagonal blocks and
        # in sign-corrected cross terms
        factors = [cos_m, sin_m]
        records = []
        for k in (0, 1):
            f = factors[k]
            p = 0.5 * float((f * f) @ (state.weight_odd + state.weight_even))
            if p < TOL.prob_floor:
                records.append(_record(k, p, None))
                continue
            records.append(_record(k, p, _sqrt_update(state, np.abs(f), p)))
        return records
    raise TypeError(f"cannot apparatus-measure {type(state).__name__}")


def _apparatus_pure_dense(state: PureState, cos_m, sin_m) -> list:
    slot, n = _dense_ms_meta(state.layout)
    pops = popcounts(n).astype(np.intp)
    shape = [1] * state.layout.n_slots
    shape[slot] = 1 << n
    c_b = cos_m[pops].reshape(shape)
    s_b = sin_m[pops].reshape(shape)
    t = state.as_tensor()
    # probe attached in |0>, rotated: amplitude cos on outcome 0, sin on 1
    raw = {0: c_b * t, 1: s_b * t}
    signs = {0: _sector_signs(cos_m)[pops].reshape(shape),
             1: _sector_signs(sin_m)[pops].reshape(shape)}
    records = []
    for k in (0, 1):
        p = float(np.linalg.norm(raw[k]) ** 2)
        if p < TOL.prob_floor:
            records.append(_record(k, p, None))
            continue
        corrected = signs[k] * raw[k] / np.sqrt(p)
        records.append(_record(k, p, PureState(corrected.reshape(-1), state.layout)))
    return records


def _apparatus_density(state: DensityOperator, theta, cos_m, sin_m) -> list:
    slot, n = _dense_ms_meta(state.layout)
    nd = state.layout.n_slots
    pops = popcounts(n).astype(np.intp)
    probe = PureState(np.array([1.0, 0.0]),
                      SubsystemLayout((2,), (LABEL_APPARATUS,)))
    attached = DensityOperator(
        np.kron(state.matrix, probe.to_density().matrix),
        state.layout.concat(probe.layout),
    )
    u_m = block_diag(*[_probe_rotation(theta[m]) for m in pops]).astype(complex)
    attached = apply(u_m, attached, [slot, nd])
    t = attached.as_tensor()
    records = []
    for k, trig in ((0, cos_m), (1, sin_m)):
        sub = np.take(np.take(t, k, axis=2 * nd + 1), k, axis=nd)
        reduced = sub.reshape(state.layout.total_dim, state.layout.total_dim)
        p = float(reduced.trace().real)
        if p < TOL.prob_floor:
            records.append(_record(k, p, None))
            continue
        post = DensityOperator(reduced / p, state.layout)
        sign_op = np.diag(_sector_signs(trig)[pops]).astype(complex)
        post = apply(sign_op, post, [slot])
        records.append(_record(k, p, post))
    return records


def _apparatus_blocks(state: CollectiveBlockState, cos_m, sin_m) -> list:
    if state.has_apparatus:
        raise LayoutError("state already carries a probe qubit")
    grid = total_excitation_grid(state.block_sizes)
    shape = (1, 1) + grid.shape
    t = state.amplitudes
    raw = {0: cos_m[grid].reshape(shape) * t, 1: sin_m[grid].reshape(shape) * t}
    signs = {0: _sector_signs(cos_m), 1: _sector_signs(sin_m)}
    records = []
    for k in (0, 1):
        p = float(np.linalg.norm(raw[k]) ** 2)
        if p < TOL.prob_floor:
            records.append(_record(k, p, None))
            continue
        corrected = signs[k][grid].reshape(shape) * raw[k] / np.sqrt(p)
        records.append(_record(
            k, p, CollectiveBlockState(corrected, state.block_sizes)))
    return records
