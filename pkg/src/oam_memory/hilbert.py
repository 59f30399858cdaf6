"""Operator algebra on truncated bosonic Fock spaces.

Everything is dense complex numpy. A composite space is an ordered tuple of
labeled modes; the basis is the Kronecker-product basis with the *leftmost
mode varying slowest* (plain ``numpy.kron`` order). All values are immutable
after construction and safe to share between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_ATOL = 1e-10
TRACE_ATOL = 1e-8
EIGENVALUE_FLOOR = -1e-8


class HilbertError(ValueError):
    """Invalid space, label, occupation or state data."""


@dataclass(frozen=True)
class ModeSpace:
    """A single bosonic mode truncated to the Fock basis {|0>,...,|cutoff-1>}."""

    label: str
    cutoff: int

    def __post_init__(self):
        if not self.label:
            raise HilbertError("mode label must be a non-empty string")
        if self.cutoff < 2:
            raise HilbertError(f"cutoff must be >= 2, got {self.cutoff}")


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of modes; leftmost mode varies slowest."""

    modes: tuple[ModeSpace, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if not modes:
            raise HilbertError("composite space needs at least one mode")
        labels = [m.label for m in modes]
        if len(set(labels)) != len(labels):
            raise HilbertError(f"duplicate mode labels: {labels}")

    @property
    def dim(self) -> int:
        return int(np.prod([m.cutoff for m in self.modes]))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(m.cutoff for m in self.modes)

    def axis(self, label: str) -> int:
        """Position of a mode in the tensor order."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise HilbertError(
                f"unknown mode {label!r}; space has {list(self.labels)}"
            ) from None

    def basis_index(self, occupations: Sequence[int]) -> int:
        """Flat basis index of |n_1,...,n_k> (slowest-first convention)."""
        occs = list(occupations)
        if len(occs) != len(self.modes):
            raise HilbertError(
                f"expected {len(self.modes)} occupations, got {len(occs)}"
            )
        idx = 0
        for n, mode in zip(occs, self.modes):
            if not 0 <= n < mode.cutoff:
                raise HilbertError(
                    f"occupation {n} out of range for mode {mode.label!r} "
                    f"(cutoff {mode.cutoff})"
                )
            idx = idx * mode.cutoff + n
        return idx

    def occupation_vectors(self) -> dict[str, np.ndarray]:
        """Per-mode arrays giving the occupation of each flat basis index."""
        dims = self.cutoffs
        out = {}
        for k, mode in enumerate(self.modes):
            grid = np.arange(mode.cutoff)
            shape = [1] * len(dims)
            shape[k] = mode.cutoff
            occ = np.broadcast_to(grid.reshape(shape), dims)
            out[mode.label] = occ.reshape(-1).astype(float)
        return out


def space(*mode_defs: ModeSpace | tuple[str, int]) -> CompositeSpace:
    """Convenience constructor: ``space(("a_ell", 2), ("c", 2))``."""
    modes = tuple(
        m if isinstance(m, ModeSpace) else ModeSpace(m[0], m[1]) for m in mode_defs
    )
    return CompositeSpace(modes)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on a composite space."""

    space: CompositeSpace
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = _freeze(self.data)
        if data.shape != (self.space.dim, self.space.dim):
            raise HilbertError(
                f"operator shape {data.shape} does not match space dim {self.space.dim}"
            )
        object.__setattr__(self, "data", data)

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.data.conj().T)

    def is_hermitian(self, atol: float = HERMITICITY_ATOL) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T)) <= atol)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, OperatorMatrix):
            if other.space != self.space:
                raise HilbertError("operators live on different spaces")
            return other.data
        return other

    def __matmul__(self, other):
        return OperatorMatrix(self.space, self.data @ self._coerce(other))

    def __add__(self, other):
        return OperatorMatrix(self.space, self.data + self._coerce(other))

    def __sub__(self, other):
        return OperatorMatrix(self.space, self.data - self._coerce(other))

    def __mul__(self, scalar):
        return OperatorMatrix(self.space, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(self.space, -self.data)


@dataclass(frozen=True)
class StateMatrix:
    """Density matrix on a composite space.

    Construction checks shape and Hermiticity (1e-10). Trace and positivity
    are checked by :meth:`validate`, which every from-scratch constructor in
    this module calls with the strict defaults; propagated states are
    re-validated by the dynamics layer at its own (looser) tolerances.
    """

    space: CompositeSpace
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = _freeze(self.data)
        if data.shape != (self.space.dim, self.space.dim):
            raise HilbertError(
                f"state shape {data.shape} does not match space dim {self.space.dim}"
            )
        herm = np.max(np.abs(data - data.conj().T))
        if herm > HERMITICITY_ATOL:
            raise HilbertError(f"state is not Hermitian: max |rho - rho^+| = {herm:.3e}")
        object.__setattr__(self, "data", data)

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    @property
    def purity(self) -> float:
        return float(np.vdot(self.data, self.data).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])

    def validate(
        self,
        trace_atol: float = TRACE_ATOL,
        eigenvalue_floor: float = EIGENVALUE_FLOOR,
    ) -> "StateMatrix":
        """Raise if the trace or positivity tolerance is violated.

        Eigenvalues are never clipped; a violation always raises.
        """
        tr = self.trace
        if abs(tr - 1.0) > trace_atol:
            raise HilbertError(f"state trace {tr!r} deviates from 1 by {abs(tr-1):.3e}")
        lam = self.min_eigenvalue()
        if lam < eigenvalue_floor:
            raise HilbertError(f"state has negative eigenvalue {lam:.3e}")
        return self


def identity(sp: CompositeSpace) -> OperatorMatrix:
    return OperatorMatrix(sp, np.eye(sp.dim, dtype=complex))


def _lowering(cutoff: int) -> np.ndarray:
    a = np.zeros((cutoff, cutoff), dtype=complex)
    for n in range(1, cutoff):
        a[n - 1, n] = np.sqrt(n)
    return a


def embed(sp: CompositeSpace, mode_label: str, local: np.ndarray) -> OperatorMatrix:
    """Tensor a single-mode matrix with identities on every other mode."""
    axis = sp.axis(mode_label)
    cutoff = sp.modes[axis].cutoff
    if local.shape != (cutoff, cutoff):
        raise HilbertError(
            f"local operator shape {local.shape} does not match cutoff {cutoff}"
        )
    out = np.array([[1.0 + 0j]])
    for k, mode in enumerate(sp.modes):
        block = local if k == axis else np.eye(mode.cutoff)
        out = np.kron(out, block)
    return OperatorMatrix(sp, out)


def annihilation(sp: CompositeSpace, mode_label: str) -> OperatorMatrix:
    """Lowering operator on one mode: <n-1|a|n> = sqrt(n)."""
    axis = sp.axis(mode_label)
    return embed(sp, mode_label, _lowering(sp.modes[axis].cutoff))


def creation(sp: CompositeSpace, mode_label: str) -> OperatorMatrix:
    return annihilation(sp, mode_label).dag()


def number_op(sp: CompositeSpace, mode_label: str) -> OperatorMatrix:
    axis = sp.axis(mode_label)
    cutoff = sp.modes[axis].cutoff
    return embed(sp, mode_label, np.diag(np.arange(cutoff, dtype=complex)))


def quadrature_x(sp: CompositeSpace, mode_label: str) -> OperatorMatrix:
    """Position quadrature (a + a^+)/sqrt(2) of one mode."""
    a = annihilation(sp, mode_label)
    return OperatorMatrix(sp, (a.data + a.data.conj().T) / np.sqrt(2.0))


def fock_ket(sp: CompositeSpace, occupations: Sequence[int]) -> StateMatrix:
    """Pure product Fock state as a density matrix."""
    idx = sp.basis_index(occupations)
    rho = np.zeros((sp.dim, sp.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return StateMatrix(sp, rho).validate()


def fock_vector(sp: CompositeSpace, occupations: Sequence[int]) -> np.ndarray:
    vec = np.zeros(sp.dim, dtype=complex)
    vec[sp.basis_index(occupations)] = 1.0
    return vec


def superpose(
    sp: CompositeSpace,
    terms: Iterable[tuple[complex, Sequence[int]]],
) -> StateMatrix:
    """Normalized pure state sum_i c_i |n_i...> as a density matrix."""
    vec = np.zeros(sp.dim, dtype=complex)
    for amp, occs in terms:
        vec[sp.basis_index(occs)] += amp
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise HilbertError("superposition amplitudes are all zero")
    vec /= norm
    return StateMatrix(sp, np.outer(vec, vec.conj())).validate()


def pure_state(sp: CompositeSpace, vec: np.ndarray) -> StateMatrix:
    vec = np.asarray(vec, dtype=complex)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise HilbertError("zero state vector")
    vec = vec / norm
    return StateMatrix(sp, np.outer(vec, vec.conj())).validate()


def _as_tensor(rho: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    return rho.reshape(dims + dims)


def partial_trace(state: StateMatrix, keep: Sequence[str]) -> StateMatrix:
    """Reduce to the named modes (kept in their original order)."""
    keep = list(keep)
    if not keep:
        raise HilbertError("partial_trace needs at least one mode to keep")
    sp = state.space
    keep_axes = sorted(sp.axis(label) for label in keep)
    if len(set(keep_axes)) != len(keep):
        raise HilbertError(f"duplicate labels in keep list: {keep}")
    n = len(sp.modes)
    tensor = _as_tensor(state.data, sp.cutoffs)
    for axis in sorted(set(range(n)) - set(keep_axes), reverse=True):
        tensor = np.trace(tensor, axis1=axis, axis2=axis + tensor.ndim // 2)
    sub = CompositeSpace(tuple(sp.modes[k] for k in keep_axes))
    return StateMatrix(sub, tensor.reshape(sub.dim, sub.dim))


def partial_transpose(state: StateMatrix, subsystem: Sequence[str]) -> OperatorMatrix:
    """Transpose the indices of the named modes only.

    The result is Hermitian and trace-one but generally not positive, hence
    an OperatorMatrix.
    """
    subsystem = list(subsystem)
    sp = state.space
    axes = sorted(sp.axis(label) for label in subsystem)
    if not axes or len(axes) >= len(sp.modes):
        raise HilbertError("subsystem must be a proper non-empty subset of modes")
    n = len(sp.modes)
    tensor = _as_tensor(state.data, sp.cutoffs)
    for axis in axes:
        tensor = np.swapaxes(tensor, axis, axis + n)
    return OperatorMatrix(sp, tensor.reshape(sp.dim, sp.dim))


def trace_norm(op: OperatorMatrix) -> float:
    """Sum of |eigenvalues| of a Hermitian operator."""
    if not op.is_hermitian():
        raise HilbertError("trace_norm requires a Hermitian operator")
    return float(np.sum(np.abs(np.linalg.eigvalsh(op.data))))


def expectation(op: OperatorMatrix, state: StateMatrix) -> complex:
    if op.space != state.space:
        raise HilbertError("operator and state live on different spaces")
    return complex(np.trace(op.data @ state.data))


def tensor_state(a: StateMatrix, b: StateMatrix) -> StateMatrix:
    """Product state on the concatenated space."""
    sp = CompositeSpace(a.space.modes + b.space.modes)
    return StateMatrix(sp, np.kron(a.data, b.data))
