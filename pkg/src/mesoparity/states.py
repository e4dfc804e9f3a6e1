"""Dense complex linear algebra and state bookkeeping over labelled tensor layouts.

Slot 0 is the leftmost tensor factor and basis indices are big-endian over
slots (numpy C-order reshape), so a basis index of |q1 q2> (x) |ms> reads left
to right.  All values are immutable; operations are pure functions returning
new values.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from .tolerances import TOL

LABEL_Q1 = "q1"
LABEL_Q2 = "q2"
LABEL_MS = "ms"
LABEL_APPARATUS = "apparatus"

# Desk-scale caps: pure amplitude vectors up to 2^22, density matrices much
# smaller since they cost dim^2 memory.
DENSE_STATE_DIM_CAP = 2**22
DENSE_DENSITY_DIM_CAP = 2**11


class LayoutError(ValueError):
    """Dimensions do not match the declared subsystem layout."""


class ValidationError(ValueError):
    """A value violates a declared invariant (norm, Hermiticity, POVM axioms, ...)."""


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered local dimensions with a role label per slot."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.dims) != len(self.labels):
            raise LayoutError(
                f"{len(self.dims)} dims but {len(self.labels)} labels"
            )
        if not self.dims:
            raise LayoutError("layout needs at least one slot")
        if any(d < 1 for d in self.dims):
            raise LayoutError(f"non-positive local dimension in {self.dims}")

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def n_slots(self) -> int:
        return len(self.dims)

    def slots(self, label: str) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.labels) if lab == label)

    def slot(self, label: str) -> int:
        found = self.slots(label)
        if len(found) != 1:
            raise LayoutError(f"expected exactly one {label!r} slot, found {len(found)}")
        return found[0]

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(self.dims + other.dims, self.labels + other.labels)

    def keep(self, slots: Sequence[int]) -> "SubsystemLayout":
        return SubsystemLayout(
            tuple(self.dims[i] for i in slots), tuple(self.labels[i] for i in slots)
        )

    def require_target_qubits(self) -> tuple[int, int]:
        """Protocol layouts own exactly one dim-2 slot for each target qubit."""
        s1, s2 = self.slots(LABEL_Q1), self.slots(LABEL_Q2)
        if len(s1) != 1 or len(s2) != 1:
            raise LayoutError("layout must carry exactly one q1 and one q2 slot")
        if self.dims[s1[0]] != 2 or self.dims[s2[0]] != 2:
            raise LayoutError("target qubit slots must have dimension 2")
        return s1[0], s2[0]


def qubit_pair_layout() -> SubsystemLayout:
    return SubsystemLayout((2, 2), (LABEL_Q1, LABEL_Q2))


@dataclass(frozen=True)
class PureState:
    """Unit-norm complex amplitude vector over a layout."""

    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.layout.total_dim > DENSE_STATE_DIM_CAP:
            raise LayoutError(
                f"total dimension {self.layout.total_dim} exceeds the dense cap "
                f"{DENSE_STATE_DIM_CAP}"
            )
        if amps.size != self.layout.total_dim:
            raise LayoutError(
                f"{amps.size} amplitudes for total dimension {self.layout.total_dim}"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > TOL.norm:
            raise ValidationError(f"state norm {nrm} deviates from 1 beyond {TOL.norm}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace matrix over a layout.

    Positivity is not re-checked on every construction (it costs an
    eigendecomposition); call :func:`validate_density` at trust boundaries.
    """

    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        d = self.layout.total_dim
        if d > DENSE_DENSITY_DIM_CAP:
            raise LayoutError(
                f"total dimension {d} exceeds the dense density cap {DENSE_DENSITY_DIM_CAP}"
            )
        if mat.shape != (d, d):
            raise LayoutError(f"matrix shape {mat.shape} for total dimension {d}")
        if np.abs(mat - mat.conj().T).max() > TOL.hermiticity:
            raise ValidationError("density matrix is not Hermitian within tolerance")
        tr = mat.trace().real
        if abs(tr - 1.0) > TOL.norm:
            raise ValidationError(f"density trace {tr} deviates from 1 beyond {TOL.norm}")

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real

    def as_tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.layout.dims + self.layout.dims)


def validate_density(rho: DensityOperator) -> None:
    """Full state check including positivity; raises ValidationError."""
    evals = np.linalg.eigvalsh(rho.matrix)
    if evals.min() < TOL.positivity:
        raise ValidationError(f"density has eigenvalue {evals.min()} below {TOL.positivity}")


# ---------------------------------------------------------------------------
# operations


def tensor(a, b):
    """Kronecker composite of two same-kind states; layouts concatenate."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), a.layout.concat(b.layout))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.layout.concat(b.layout))
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def _apply_axes(op: np.ndarray, tensor_in: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a square operator against the given axes of a tensor."""
    axes = list(axes)
    k = len(axes)
    t = np.moveaxis(tensor_in, axes, range(k))
    lead, rest = t.shape[:k], t.shape[k:]
    mat = t.reshape(prod(lead), -1)
    mat = op @ mat
    t = mat.reshape(lead + rest)
    return np.moveaxis(t, range(k), axes)


def apply(op: np.ndarray, state, slots: Sequence[int]):
    """Embed ``op (x) identity`` over the listed slots and apply it.

    The operator indexes the selected slots in the listed order, first slot
    most significant.  Densities are conjugated, U rho U^dag.
    """
    slots = list(slots)
    op = np.asarray(op, dtype=complex)
    dims = state.layout.dims
    if len(set(slots)) != len(slots):
        raise LayoutError(f"repeated slot in {slots}")
    if any(s < 0 or s >= len(dims) for s in slots):
        raise LayoutError(f"slot out of range in {slots} for {len(dims)} slots")
    d_sel = prod(dims[s] for s in slots)
    if op.shape != (d_sel, d_sel):
        raise LayoutError(f"operator shape {op.shape} does not match selected dims {d_sel}")
    if isinstance(state, PureState):
        out = _apply_axes(op, state.as_tensor(), slots)
        return PureState(out.reshape(-1), state.layout)
    if isinstance(state, DensityOperator):
        nd = len(dims)
        t = state.as_tensor()
        t = _apply_axes(op, t, slots)
        t = _apply_axes(op.conj(), t, [nd + s for s in slots])
        d = state.layout.total_dim
        return DensityOperator(t.reshape(d, d), state.layout)
    raise TypeError(f"cannot apply operator to {type(state).__name__}")


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Reduced state on the kept slots (order preserved as listed)."""
    keep = list(keep)
    if not keep:
        raise LayoutError("keep must name at least one slot")
    nd = rho.layout.n_slots
    t = rho.as_tensor()
    row_idx = list(range(nd))
    col_idx = [i if i not in keep else nd + i for i in range(nd)]
    out_idx = [i for i in keep] + [nd + i for i in keep]
    reduced = np.einsum(t, row_idx + col_idx, out_idx)
    sub = rho.layout.keep(keep)
    return DensityOperator(reduced.reshape(sub.total_dim, sub.total_dim), sub)


def hermitian_eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if np.abs(m - m.conj().T).max() > TOL.hermiticity:
        raise ValidationError("matrix is not Hermitian within tolerance")
    evals, evecs = np.linalg.eigh(m)
    return evals, evecs
