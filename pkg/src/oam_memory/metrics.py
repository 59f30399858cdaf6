"""Performance measures for retrieved states.

Fidelity here is the square-root (amplitude-overlap) Uhlmann fidelity,

    F(rho_a, rho_b) = Tr sqrt( sqrt(rho_a) rho_b sqrt(rho_a) ),

symmetric in its arguments and equal to |<psi_a|psi_b>| for pure states.
This is the convention the retrieval-fidelity figures are quoted in.

Logarithmic negativity is log2 of the trace norm of the partial transpose;
the raw (possibly slightly negative) value is kept, flooring at zero happens
only in report presentation. Wigner functions use dimensionless quadratures
with vacuum variance 1/2, so W_vac(0,0) = 1/pi and the grid integrates to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi
from typing import Sequence

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .hilbert import StateMatrix, partial_transpose, trace_norm

SQRT_CLAMP = -1e-10  # eigenvalues in [SQRT_CLAMP, 0) are treated as zero


class MetricsError(ValueError):
    """Invalid input to a metric."""


def _floor_spectral_noise(vals: np.ndarray) -> np.ndarray:
    """Zero eigenvalues at the machine-noise floor.

    Square roots amplify roundoff-level eigenvalues (sqrt(1e-17) ~ 3e-9) into
    visible fidelity errors on rank-deficient states; anything below
    1e-13 * max is numerical noise for trace-one inputs.
    """
    floor = 1e-13 * max(1.0, float(vals[-1]))
    out = np.clip(vals, 0.0, None)
    out[out < floor] = 0.0
    return out


def _psd_sqrt(data: np.ndarray, what: str) -> np.ndarray:
    vals, vecs = np.linalg.eigh(data)
    if vals[0] < SQRT_CLAMP:
        raise MetricsError(
            f"{what} has negative eigenvalue {vals[0]:.3e}; refusing to clamp"
        )
    vals = _floor_spectral_noise(vals)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho_a: StateMatrix, rho_b: StateMatrix) -> float:
    """Square-root Uhlmann fidelity between two density matrices."""
    if rho_a.space != rho_b.space:
        raise MetricsError("states live on different spaces")
    for rho in (rho_a, rho_b):
        if abs(rho.trace - 1.0) > 1e-6:
            raise MetricsError(f"input trace {rho.trace!r} is not 1")
    root = _psd_sqrt(rho_a.data, "first state")
    inner = root @ rho_b.data @ root
    vals = np.linalg.eigvalsh(inner)
    if vals[0] < SQRT_CLAMP:
        raise MetricsError(f"fidelity kernel has negative eigenvalue {vals[0]:.3e}")
    return float(np.sum(np.sqrt(_floor_spectral_noise(vals))))


def log_negativity(state: StateMatrix, subsystem: Sequence[str]) -> float:
    """log2 || rho^(T_subsystem) ||_1 across the given bipartition."""
    transposed = partial_transpose(state, subsystem)
    return float(np.log2(trace_norm(transposed)))


def classical_bound(kind: str, size: int) -> float:
    """Benchmark fidelity achievable without a quantum channel.

    ``qubit_memory``: measure-and-prepare bound (N+1)/(N+2) for N qubits.
    ``teleport``: classical teleportation bound 2/(d+1) for dimension d.
    """
    if kind == "qubit_memory":
        if size < 1:
            raise MetricsError(f"qubit count must be >= 1, got {size}")
        return (size + 1) / (size + 2)
    if kind == "teleport":
        if size < 2:
            raise MetricsError(f"dimension must be >= 2, got {size}")
        return 2 / (size + 1)
    raise MetricsError(f"unknown benchmark kind {kind!r}")


def _laguerre_kernel(m: int, n: int, r2: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Wigner kernel element for |m><n| with m >= n (z = x - i p)."""
    k = m - n
    log_coeff = 0.5 * (gammaln(n + 1) - gammaln(m + 1))
    coeff = ((-1.0) ** n) * np.exp(log_coeff)
    return coeff * (np.sqrt(2.0) * z) ** k * eval_genlaguerre(n, k, 2.0 * r2)


def wigner(
    state: StateMatrix,
    x_range: tuple[float, float] = (-5.0, 5.0),
    p_range: tuple[float, float] = (-5.0, 5.0),
    resolution: int = 201,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Wigner function of a single-mode state on a rectangular grid.

    Returns (x, p, W) with W indexed as W[i, j] = W(x[i], p[j]).
    """
    if len(state.space.modes) != 1:
        raise MetricsError(
            f"wigner needs a single-mode state, got {len(state.space.modes)} modes"
        )
    if resolution < 2:
        raise MetricsError("grid resolution must be at least 2")
    xs = np.linspace(x_range[0], x_range[1], resolution)
    ps = np.linspace(p_range[0], p_range[1], resolution)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    r2 = X**2 + P**2
    z = X - 1j * P
    rho = state.data
    dim = rho.shape[0]
    acc = np.zeros_like(r2, dtype=complex)
    for n in range(dim):
        acc += rho[n, n].real * _laguerre_kernel(n, n, r2, z)
        for m in range(n + 1, dim):
            if rho[m, n] != 0.0:
                acc += 2.0 * np.real(rho[m, n] * _laguerre_kernel(m, n, r2, z))
    W = np.real(acc) * np.exp(-r2) / pi
    return xs, ps, W


def wigner_minimum(state: StateMatrix, **kwargs) -> float:
    _, _, W = wigner(state, **kwargs)
    return float(W.min())


@dataclass(frozen=True)
class MetricsReport:
    """Bundle of retrieval metrics for one protocol run."""

    fidelity: float
    classical_bound: float
    mean_occupations: dict[str, float]
    log_negativity: float | None = None
    wigner_min: float | None = None

    def __post_init__(self):
        if not -1e-9 <= self.fidelity <= 1.0 + 1e-9:
            raise MetricsError(f"fidelity {self.fidelity!r} outside [0, 1]")

    @property
    def log_negativity_floored(self) -> float | None:
        if self.log_negativity is None:
            return None
        return max(0.0, self.log_negativity)

    @property
    def beats_classical_bound(self) -> bool:
        return self.fidelity > self.classical_bound

    def as_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "classical_bound": self.classical_bound,
            "beats_classical_bound": self.beats_classical_bound,
            "log_negativity": self.log_negativity,
            "wigner_min": self.wigner_min,
            "mean_occupations": dict(self.mean_occupations),
        }


def evaluate(
    rho_initial: StateMatrix,
    rho_retrieved: StateMatrix,
    *,
    bound: float,
    bipartition: Sequence[str] | None = None,
    wigner_grid: dict | None = None,
) -> MetricsReport:
    """Standard metric set comparing a retrieved state to its input."""
    from .hilbert import number_op, expectation  # local import to stay cycle-free

    occupations = {
        mode.label: float(
            expectation(number_op(rho_retrieved.space, mode.label), rho_retrieved).real
        )
        for mode in rho_retrieved.space.modes
    }
    log_neg = None
    if bipartition is not None:
        log_neg = log_negativity(rho_retrieved, bipartition)
    wig_min = None
    if wigner_grid is not None:
        wig_min = wigner_minimum(rho_retrieved, **wigner_grid)
    return MetricsReport(
        fidelity=fidelity(rho_initial, rho_retrieved),
        classical_bound=bound,
        mean_occupations=occupations,
        log_negativity=log_neg,
        wigner_min=wig_min,
    )
