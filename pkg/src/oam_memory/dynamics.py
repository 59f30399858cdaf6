"""Linearized interaction-picture Hamiltonians and Lindblad propagation.

The Hamiltonians here are the rotating-frame beam-splitter forms; energies
are expressed as angular rates (H/hbar, rad/s). Dissipation uses the GKSL
dissipator with rate gamma per channel,

    d rho/dt = -i [H, rho] + sum_k gamma_k (O rho O^+ - {O^+ O, rho} / 2),

so a mode damped through its lowering operator loses occupation at gamma.

Propagation is fixed-step 4th-order Runge-Kutta inside control pulses and an
exact per-mode damping map (plus a deterministic phase rotation when the
remaining Hamiltonian is diagonal) while the control field is off. The two
paths agree to better than 1e-7 in any observable; the exact map is what
makes second-long storage segments affordable. Identical inputs produce
bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil
from typing import Callable, Sequence

import numpy as np
from scipy.special import comb

from .hilbert import (
    CompositeSpace,
    OperatorMatrix,
    StateMatrix,
    annihilation,
    number_op,
)

TRACE_DRIFT_LIMIT = 1e-6
STEPS_PER_RATE = 50.0  # pulse step h = 1 / (STEPS_PER_RATE * fastest rate)
_MIN_STEP = 1e-18


class DynamicsError(RuntimeError):
    """Configuration or system construction error."""


class IntegrationError(RuntimeError):
    """Propagation failure, annotated with the offending segment and time."""

    def __init__(self, message: str, segment: tuple | None = None, time: float | None = None):
        self.segment = segment
        self.time = time
        detail = message
        if segment is not None:
            detail += f" [segment {segment}]"
        if time is not None:
            detail += f" [t = {time:.6e} s]"
        super().__init__(detail)


@dataclass(frozen=True)
class ControlEnvelope:
    """Piecewise-constant control amplitude.

    ``segments`` is an ordered tuple of (t_start, t_end, amplitude_scale)
    that must tile [0, t_final] without gaps or overlap; scales live in
    [0, 1]. ``reference_coupling`` is the boosted coupling (rad/s) at scale 1.
    """

    segments: tuple[tuple[float, float, float], ...]
    reference_coupling: float

    def __post_init__(self):
        segs = tuple(tuple(map(float, s)) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise DynamicsError("envelope needs at least one segment")
        if segs[0][0] != 0.0:
            raise DynamicsError("envelope must start at t = 0")
        prev_end = 0.0
        for t0, t1, scale in segs:
            if t0 != prev_end:
                raise DynamicsError(f"segments not contiguous at t = {t0}")
            if t1 < t0:
                raise DynamicsError(f"segment ({t0}, {t1}) runs backwards")
            if not 0.0 <= scale <= 1.0:
                raise DynamicsError(f"amplitude scale {scale} outside [0, 1]")
            prev_end = t1
        if self.reference_coupling < 0:
            raise DynamicsError("reference coupling must be >= 0")

    @property
    def end(self) -> float:
        return self.segments[-1][1]

    def scale_at(self, t: float) -> float:
        if not 0.0 <= t <= self.end:
            raise DynamicsError(f"time {t} outside envelope span [0, {self.end}]")
        for t0, t1, scale in self.segments:
            if t0 <= t < t1:
                return scale
        return self.segments[-1][2]

    def coupling_at(self, t: float) -> float:
        return self.scale_at(t) * self.reference_coupling


@dataclass(frozen=True)
class TimedHamiltonian:
    """H(t)/hbar = coupling(t) * coupling_part + static_part.

    Callable, returning an OperatorMatrix; the split form lets the
    propagator pick step sizes and recognise damping-only segments.
    """

    coupling_part: OperatorMatrix
    static_part: OperatorMatrix
    coupling: Callable[[float], float]

    def __post_init__(self):
        if self.coupling_part.space != self.static_part.space:
            raise DynamicsError("hamiltonian parts live on different spaces")
        for part, name in ((self.coupling_part, "coupling"), (self.static_part, "static")):
            if not part.is_hermitian():
                raise DynamicsError(f"{name} part of the Hamiltonian is not Hermitian")

    @property
    def space(self) -> CompositeSpace:
        return self.coupling_part.space

    def __call__(self, t: float) -> OperatorMatrix:
        return OperatorMatrix(
            self.space, self.coupling(t) * self.coupling_part.data + self.static_part.data
        )

    def matrix_at_coupling(self, coupling_value: float) -> np.ndarray:
        return coupling_value * self.coupling_part.data + self.static_part.data

    def static_is_diagonal(self) -> bool:
        data = self.static_part.data
        return bool(np.max(np.abs(data - np.diag(np.diag(data)))) < 1e-12)

    def static_rate_scale(self) -> float:
        return float(np.max(np.abs(self.static_part.data)))


@dataclass(frozen=True)
class CollapseChannel:
    operator: OperatorMatrix
    rate: float
    mode_label: str | None = None

    def __post_init__(self):
        if self.rate < 0:
            raise DynamicsError(f"collapse rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class LindbladSystem:
    space: CompositeSpace
    hamiltonian: Callable[[float], OperatorMatrix]
    collapse_channels: tuple[CollapseChannel, ...]

    def __post_init__(self):
        object.__setattr__(self, "collapse_channels", tuple(self.collapse_channels))
        for ch in self.collapse_channels:
            if ch.operator.space != self.space:
                raise DynamicsError("collapse operator lives on a different space")


@dataclass(frozen=True)
class Trajectory:
    """Sampled observables plus full-state snapshots at checkpoint times."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    checkpoints: dict[float, StateMatrix]
    pulse_step: float = field(default=float("nan"))


def lowering_channels(
    sp: CompositeSpace, rates: dict[str, float]
) -> tuple[CollapseChannel, ...]:
    """One tagged lowering-operator channel per labeled mode."""
    return tuple(
        CollapseChannel(annihilation(sp, label), rate, mode_label=label)
        for label, rate in rates.items()
    )


def _swap_pair(sp: CompositeSpace, photon: str, phonon: str) -> np.ndarray:
    a = annihilation(sp, photon).data
    c = annihilation(sp, phonon).data
    return a.conj().T @ c + a @ c.conj().T


def _as_coupling_fn(coupling) -> Callable[[float], float]:
    if callable(coupling):
        return coupling
    return lambda t, g=float(coupling): g


def hamiltonian_single(
    sp: CompositeSpace,
    coupling: Callable[[float], float] | float,
    interaction_offset: float = 0.0,
    photon: str = "a_ell",
    phonon: str = "c",
) -> TimedHamiltonian:
    """Resonant photon-phonon swap, H/hbar = G(t)(a^+ c + a c^+) + off * c^+ c."""
    pair = _swap_pair(sp, photon, phonon)
    static = interaction_offset * number_op(sp, phonon).data
    return TimedHamiltonian(
        OperatorMatrix(sp, pair), OperatorMatrix(sp, static), _as_coupling_fn(coupling)
    )


def hamiltonian_superposition(
    sp: CompositeSpace,
    coupling: Callable[[float], float] | float,
    offsets: tuple[float, float] = (0.0, 0.0),
    branch_weights: tuple[float, float] = (1.0, 1.0),
    modes: tuple[str, str, str, str] = ("a_ell", "a_mell", "c", "d"),
) -> TimedHamiltonian:
    """Two swap branches sharing one control envelope.

    ``branch_weights`` scales each branch's coupling relative to the common
    envelope; the memory protocol uses equal branches, a zero weight
    disconnects a branch entirely.
    """
    a_l, a_ml, c, d = modes
    pair = branch_weights[0] * _swap_pair(sp, a_l, c)
    pair = pair + branch_weights[1] * _swap_pair(sp, a_ml, d)
    static = offsets[0] * number_op(sp, c).data + offsets[1] * number_op(sp, d).data
    return TimedHamiltonian(
        OperatorMatrix(sp, pair), OperatorMatrix(sp, static), _as_coupling_fn(coupling)
    )


def hamiltonian_entangled(
    sp: CompositeSpace,
    coupling: Callable[[float], float] | float,
    offsets: tuple[float, float] = (0.0, 0.0),
    cavity_weights: tuple[float, float] = (1.0, 1.0),
    mode_groups: tuple[tuple[str, str, str, str], ...] = (
        ("a_ell_1", "a_mell_1", "c_1", "d_1"),
        ("a_ell_2", "a_mell_2", "c_2", "d_2"),
    ),
) -> TimedHamiltonian:
    """Two four-mode cavities, each carrying the two-branch swap Hamiltonian."""
    pair = np.zeros((sp.dim, sp.dim), dtype=complex)
    static = np.zeros((sp.dim, sp.dim), dtype=complex)
    for weight, (a_l, a_ml, c, d) in zip(cavity_weights, mode_groups):
        if weight != 0.0:
            pair += weight * (_swap_pair(sp, a_l, c) + _swap_pair(sp, a_ml, d))
            static += offsets[0] * number_op(sp, c).data
            static += offsets[1] * number_op(sp, d).data
    return TimedHamiltonian(
        OperatorMatrix(sp, pair), OperatorMatrix(sp, static), _as_coupling_fn(coupling)
    )


def lindblad_rhs(
    rho: StateMatrix | np.ndarray,
    hamiltonian: OperatorMatrix | np.ndarray,
    channels: Sequence[CollapseChannel | tuple],
) -> np.ndarray:
    """Right-hand side of the master equation, as a plain matrix."""
    r = rho.data if isinstance(rho, StateMatrix) else np.asarray(rho, dtype=complex)
    h = (
        hamiltonian.data
        if isinstance(hamiltonian, OperatorMatrix)
        else np.asarray(hamiltonian, dtype=complex)
    )
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape != h.shape:
        raise DynamicsError(f"dimension mismatch: rho {r.shape}, H {h.shape}")
    out = -1j * (h @ r - r @ h)
    for ch in channels:
        if isinstance(ch, CollapseChannel):
            op, rate = ch.operator.data, ch.rate
        else:
            op, rate = ch
            op = op.data if isinstance(op, OperatorMatrix) else np.asarray(op)
        if op.shape != r.shape:
            raise DynamicsError("collapse operator dimension mismatch")
        od = op.conj().T
        odo = od @ op
        out += rate * (op @ r @ od - 0.5 * (odo @ r + r @ odo))
    return out


# ---------------------------------------------------------------------------
# compiled propagation internals
# ---------------------------------------------------------------------------


class _ModeChannel:
    """Lowering-operator channel applied through mode-local index shifts.

    Equivalent to the dense O rho O^+ / {O^+O, rho} formulas but O(dim^2)
    per application instead of two dim^3 matrix products.
    """

    def __init__(self, pre: int, dim: int, post: int, rate: float, occ: np.ndarray):
        self.pre, self.dim, self.post = pre, dim, post
        self.rate = rate
        self.occupations = occ
        w = np.sqrt(np.arange(1.0, dim))
        self._w_row = w.reshape(1, dim - 1, 1, 1, 1, 1)
        self._w_col = w.reshape(1, 1, 1, 1, dim - 1, 1)

    def jump(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        shaped = rho.reshape(self.pre, d, self.post, self.pre, d, self.post)
        out = np.zeros_like(shaped)
        if d == 2:  # weights are all 1
            out[:, :1, :, :, :1, :] = shaped[:, 1:, :, :, 1:, :]
        else:
            out[:, : d - 1, :, :, : d - 1, :] = (
                shaped[:, 1:, :, :, 1:, :] * self._w_row * self._w_col
            )
        return out.reshape(rho.shape)

    def damp(self, rho: np.ndarray, duration: float) -> np.ndarray:
        """Exact amplitude-damping channel over the given duration."""
        eta = float(np.exp(-self.rate * duration))
        d = self.dim
        shaped = rho.reshape(self.pre, d, self.post, self.pre, d, self.post)
        out = np.zeros_like(shaped)
        for lost in range(d):
            n = np.arange(lost, d)
            coeff = np.sqrt(comb(n, lost) * eta ** (n - lost) * (1.0 - eta) ** lost)
            row = coeff.reshape(1, -1, 1, 1, 1, 1)
            col = coeff.reshape(1, 1, 1, 1, -1, 1)
            out[:, : d - lost, :, :, : d - lost, :] += (
                shaped[:, lost:, :, :, lost:, :] * row * col
            )
        return out.reshape(rho.shape)


class _DenseChannel:
    def __init__(self, op: np.ndarray, rate: float):
        self.op = op
        self.dag = op.conj().T
        self.dag_op = self.dag @ op
        self.rate = rate


class _CompiledSystem:
    """Pre-processed channels and occupation vectors for the hot loop."""

    def __init__(self, system: LindbladSystem):
        sp = system.space
        self.space = sp
        self.occ_vectors = sp.occupation_vectors()
        dims = sp.cutoffs
        self.mode_channels: list[_ModeChannel] = []
        self.dense_channels: list[_DenseChannel] = []
        self.max_rate = 0.0
        damp_vec = np.zeros(sp.dim)
        for ch in system.collapse_channels:
            if ch.rate == 0.0:
                continue
            self.max_rate = max(self.max_rate, ch.rate)
            label = ch.mode_label
            if label is not None and np.array_equal(
                ch.operator.data, annihilation(sp, label).data
            ):
                axis = sp.axis(label)
                pre = int(np.prod(dims[:axis], dtype=np.int64))
                post = int(np.prod(dims[axis + 1 :], dtype=np.int64))
                occ = self.occ_vectors[label]
                self.mode_channels.append(
                    _ModeChannel(pre, dims[axis], post, ch.rate, occ)
                )
                damp_vec += ch.rate * occ
            else:
                self.dense_channels.append(_DenseChannel(ch.operator.data, ch.rate))
        self.damp_vec = damp_vec
        self._has_mode_channels = bool(self.mode_channels)

    def rhs(self, rho: np.ndarray, h_data: np.ndarray) -> np.ndarray:
        out = h_data @ rho
        out -= rho @ h_data
        out *= -1j
        if self._has_mode_channels:
            out -= 0.5 * (self.damp_vec[:, None] * rho + rho * self.damp_vec[None, :])
            for ch in self.mode_channels:
                out += ch.rate * ch.jump(rho)
        for ch in self.dense_channels:
            out += ch.rate * (
                ch.op @ rho @ ch.dag - 0.5 * (ch.dag_op @ rho + rho @ ch.dag_op)
            )
        return out

    def supports_free_decay(self) -> bool:
        return not self.dense_channels

    def apply_free_decay(
        self, rho: np.ndarray, duration: float, static_diag: np.ndarray | None
    ) -> np.ndarray:
        for ch in self.mode_channels:
            rho = ch.damp(rho, duration)
        if static_diag is not None and np.any(static_diag):
            phase = np.exp(-1j * static_diag * duration)
            rho = phase[:, None] * rho * phase.conj()[None, :]
        return rho


def zero_hamiltonian(sp: CompositeSpace) -> TimedHamiltonian:
    zero = OperatorMatrix(sp, np.zeros((sp.dim, sp.dim), dtype=complex))
    return TimedHamiltonian(zero, zero, lambda t: 0.0)


def free_decay_map(
    rho: StateMatrix,
    channels: Sequence[CollapseChannel],
    duration: float,
    static_diagonal: np.ndarray | None = None,
) -> StateMatrix:
    """Exact control-off propagation: per-mode damping plus diagonal phases.

    Requires every channel to be a plain lowering operator tagged with its
    mode label; the optional diagonal (given as the vector of diagonal
    Hamiltonian entries, rad/s) is applied as a commuting phase rotation.
    """
    system = LindbladSystem(rho.space, zero_hamiltonian(rho.space), tuple(channels))
    compiled = _CompiledSystem(system)
    if not compiled.supports_free_decay():
        raise DynamicsError("free_decay_map needs mode-tagged lowering channels")
    data = compiled.apply_free_decay(rho.data.copy(), duration, static_diagonal)
    return StateMatrix(rho.space, data)


def pulse_step(rate_scale: float) -> float:
    """Largest admissible RK4 step: 1 / (50 * fastest angular rate)."""
    if rate_scale == 0.0:
        return float("inf")
    return 1.0 / (STEPS_PER_RATE * abs(rate_scale))


def integrate(
    system: LindbladSystem,
    rho0: StateMatrix,
    schedule: ControlEnvelope,
    sample_times: Sequence[float],
    checkpoint_times: Sequence[float] = (),
) -> Trajectory:
    """Propagate the master equation across the full control schedule.

    Observables (per-mode occupations, trace, purity) are recorded exactly at
    ``sample_times`` (sorted, de-duplicated); deep state snapshots are taken
    at ``checkpoint_times``. Control-off segments whose residual Hamiltonian
    is diagonal use the exact damping map, everything else fixed-step RK4.
    Trace drift beyond 1e-6 or a step-size underflow aborts with diagnostics.
    """
    if rho0.space != system.space:
        raise DynamicsError("initial state lives on a different space")
    samples = np.unique(np.asarray([float(t) for t in sample_times]))
    if samples.size and (samples[0] < 0.0 or samples[-1] > schedule.end * (1 + 1e-12)):
        raise DynamicsError("sample times fall outside the schedule span")
    checkpoints_wanted = sorted(set(float(t) for t in checkpoint_times))

    compiled = _CompiledSystem(system)
    timed = system.hamiltonian if isinstance(system.hamiltonian, TimedHamiltonian) else None
    static_diag = None
    if timed is not None and timed.static_is_diagonal():
        static_diag = np.real(np.diag(timed.static_part.data)).copy()

    if timed is not None:
        static_scale = timed.static_rate_scale()
    else:
        static_scale = float(np.max(np.abs(system.hamiltonian(0.0).data)))
    h_pulse = pulse_step(
        max(schedule.reference_coupling, static_scale, compiled.max_rate)
    )

    records: dict[str, list[float]] = {
        **{f"n_{label}": [] for label in system.space.labels},
        "trace": [],
        "purity": [],
    }
    recorded_times: list[float] = []
    snapshots: dict[float, StateMatrix] = {}
    occ_items = [(f"n_{label}", occ) for label, occ in compiled.occ_vectors.items()]

    rho = rho0.data.copy()

    def record(t: float):
        diag = np.real(np.diag(rho))
        for name, occ in occ_items:
            records[name].append(float(occ @ diag))
        records["trace"].append(float(diag.sum()))
        records["purity"].append(float(np.vdot(rho, rho).real))
        recorded_times.append(t)

    sample_set = set(samples.tolist())
    checkpoint_set = set(checkpoints_wanted)

    if 0.0 in sample_set:
        record(0.0)
    if 0.0 in checkpoint_set:
        snapshots[0.0] = StateMatrix(system.space, rho.copy())

    pending = [t for t in sorted(sample_set | checkpoint_set) if t > 0.0]
    pending_iter = iter(pending)
    next_event = next(pending_iter, None)

    for segment in schedule.segments:
        t0, t1, scale = segment
        if t1 == t0:
            continue
        events = set()
        while next_event is not None and next_event <= t1 + 1e-18:
            events.add(next_event)
            next_event = next(pending_iter, None)
        events = sorted(events | {t1})

        coupling_value = scale * schedule.reference_coupling
        analytic = (
            scale == 0.0
            and timed is not None
            and static_diag is not None
            and compiled.supports_free_decay()
        )
        h_matrix = timed.matrix_at_coupling(coupling_value) if timed is not None else None

        t = t0
        for target in events:
            dt = target - t
            if dt > 0.0:
                if analytic:
                    rho = compiled.apply_free_decay(rho, dt, static_diag)
                else:
                    n_steps = 1 if not np.isfinite(h_pulse) else max(1, ceil(dt / h_pulse))
                    h = dt / n_steps
                    if h < _MIN_STEP:
                        raise IntegrationError(
                            f"step size underflow (h = {h:.3e} s)", segment, t
                        )
                    for k in range(n_steps):
                        if h_matrix is not None:
                            hm0 = hm1 = hm2 = h_matrix
                        else:
                            tk = t + k * h
                            clamp = lambda x: min(max(x, t0), t1)  # noqa: E731
                            hm0 = system.hamiltonian(clamp(tk)).data
                            hm1 = system.hamiltonian(clamp(tk + 0.5 * h)).data
                            hm2 = system.hamiltonian(clamp(tk + h)).data
                        k1 = compiled.rhs(rho, hm0)
                        k2 = compiled.rhs(rho + (0.5 * h) * k1, hm1)
                        k3 = compiled.rhs(rho + (0.5 * h) * k2, hm1)
                        k4 = compiled.rhs(rho + h * k3, hm2)
                        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                t = target
            tr = float(np.trace(rho).real)
            if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
                raise IntegrationError(
                    f"trace drifted to {tr!r} (|drift| = {abs(tr - 1):.3e})", segment, t
                )
            if t in sample_set and (not recorded_times or recorded_times[-1] != t):
                record(t)
            if t in checkpoint_set and t not in snapshots:
                snapshots[t] = StateMatrix(system.space, rho.copy())

    if len(recorded_times) != samples.size:
        raise IntegrationError(
            f"recorded {len(recorded_times)} of {samples.size} requested samples"
        )

    return Trajectory(
        times=np.asarray(recorded_times),
        observables={k: np.asarray(v) for k, v in records.items()},
        checkpoints=snapshots,
        pulse_step=h_pulse,
    )
