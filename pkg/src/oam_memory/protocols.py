"""End-to-end write/store/read memory scenarios.

Four scenario kinds share one pipeline:

  single         one photonic mode swapped into one phonon mode
  fock_series    the single pipeline at cutoff 4, for number states |1>, |2>
                 and their superpositions
  superposition  two counter-rotating photonic modes, two phonon branches
  entangled      two independent cavities, four photonic + four phonon modes

The control schedule is always [write 0..t_off | store t_off..t_on |
read t_on..t_read] with t_off = pi/(2 G) (plus an optional deliberate
mistiming), t_on = t_off + storage_time and t_read = t_on + pi/(2 G).
Retrieved states are the intracavity photonic reductions at t_read.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Sequence

import numpy as np

from . import metrics, model
from .dynamics import (
    ControlEnvelope,
    LindbladSystem,
    Trajectory,
    hamiltonian_entangled,
    hamiltonian_single,
    hamiltonian_superposition,
    integrate,
    lowering_channels,
    pulse_step,
)
from .hilbert import (
    CompositeSpace,
    ModeSpace,
    StateMatrix,
    annihilation,
    partial_trace,
    space,
    superpose,
)

SCENARIO_KINDS = ("single", "superposition", "entangled", "fock_series")

STORAGE_SAMPLES_PER_DECADE = 25
MAX_STORAGE_SAMPLES = 200


class ProtocolError(ValueError):
    """Invalid scenario configuration or network description."""


# ---------------------------------------------------------------------------
# computational-basis bookkeeping
# ---------------------------------------------------------------------------

QUBIT_BASIS_LABELS = ("|00>", "|01>", "|10>", "|11>")


def qubit_index(n_plus: int, n_minus: int) -> int:
    """Occupation pair (n_+l, n_-l) -> computational index 0..3."""
    if n_plus not in (0, 1) or n_minus not in (0, 1):
        raise ProtocolError(f"occupations ({n_plus}, {n_minus}) outside the qubit domain")
    return 2 * n_plus + n_minus


def composite_qubit_index(p: int, q: int) -> int:
    """Two-register flattening n = 4p + q - 5 for p, q in {1, 2, 3}."""
    if p not in (1, 2, 3) or q not in (1, 2, 3):
        raise ProtocolError(f"register indices ({p}, {q}) outside {{1, 2, 3}}")
    return 4 * p + q - 5


@dataclass(frozen=True)
class QubitProjection:
    """Two-mode state reordered into the computational basis."""

    matrix: np.ndarray
    discarded_weight: float
    truncated: bool  # True when discarded_weight exceeded 1e-6


def map_to_qubit_basis(state: StateMatrix) -> QubitProjection:
    """Project a two-mode state onto occupation pairs {0,1} x {0,1}.

    Population living above single occupation in either mode is discarded
    and reported; a warning flag (never an error) is raised past 1e-6.
    """
    sp = state.space
    if len(sp.modes) != 2:
        raise ProtocolError(f"expected a two-mode state, got {len(sp.modes)} modes")
    out = np.zeros((4, 4), dtype=complex)
    for np_row in (0, 1):
        for nm_row in (0, 1):
            for np_col in (0, 1):
                for nm_col in (0, 1):
                    out[qubit_index(np_row, nm_row), qubit_index(np_col, nm_col)] = (
                        state.data[
                            sp.basis_index((np_row, nm_row)),
                            sp.basis_index((np_col, nm_col)),
                        ]
                    )
    discarded = float(state.trace - np.trace(out).real)
    return QubitProjection(out, discarded, truncated=discarded > 1e-6)


# ---------------------------------------------------------------------------
# linear-optics state generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Beamsplitter:
    mode_a: str
    mode_b: str


@dataclass(frozen=True)
class PhaseShift:
    mode: str
    theta: float


@dataclass(frozen=True)
class VortexRelabel:
    """Vortex plate: tags a path with an OAM index by renaming its mode."""

    mode: str
    new_label: str


NetworkElement = Beamsplitter | PhaseShift | VortexRelabel


@dataclass(frozen=True)
class LinearOpticsNetwork:
    modes: tuple[tuple[str, int], ...]
    elements: tuple[NetworkElement, ...]


def _apply_unitary(state: StateMatrix, unitary: np.ndarray) -> StateMatrix:
    return StateMatrix(state.space, unitary @ state.data @ unitary.conj().T)


def beamsplitter_transform(state: StateMatrix, mode_a: str, mode_b: str) -> StateMatrix:
    """50:50 beam splitter with the i-reflection convention.

    On creation operators: a^+ -> (a^+ + i b^+)/sqrt(2) and symmetrically,
    i.e. the unitary exp(i (pi/4)(a^+ b + a b^+)).
    """
    sp = state.space
    if mode_a == mode_b:
        raise ProtocolError("beam splitter needs two distinct modes")
    ax_a, ax_b = sp.axis(mode_a), sp.axis(mode_b)
    if sp.modes[ax_a].cutoff != sp.modes[ax_b].cutoff:
        raise ProtocolError("beam splitter ports must share a cutoff")
    a = annihilation(sp, mode_a).data
    b = annihilation(sp, mode_b).data
    generator = a.conj().T @ b + a @ b.conj().T
    vals, vecs = np.linalg.eigh(generator)
    unitary = (vecs * np.exp(1j * (pi / 4) * vals)) @ vecs.conj().T
    return _apply_unitary(state, unitary)


def phase_transform(state: StateMatrix, mode: str, theta: float) -> StateMatrix:
    occ = state.space.occupation_vectors()[mode]
    phase = np.exp(1j * theta * occ)
    return StateMatrix(state.space, phase[:, None] * state.data * phase.conj()[None, :])


def relabel_mode(state: StateMatrix, mode: str, new_label: str) -> StateMatrix:
    sp = state.space
    axis = sp.axis(mode)
    modes = list(sp.modes)
    modes[axis] = ModeSpace(new_label, modes[axis].cutoff)
    return StateMatrix(CompositeSpace(tuple(modes)), state.data)


def run_network(network: LinearOpticsNetwork, input_occupations: Sequence[int]) -> StateMatrix:
    """Send a Fock input through the network elements in order."""
    sp = space(*network.modes)
    state = superpose(sp, [(1.0, tuple(input_occupations))])
    for element in network.elements:
        if isinstance(element, Beamsplitter):
            state = beamsplitter_transform(state, element.mode_a, element.mode_b)
        elif isinstance(element, PhaseShift):
            state = phase_transform(state, element.mode, element.theta)
        elif isinstance(element, VortexRelabel):
            state = relabel_mode(state, element.mode, element.new_label)
        else:
            raise ProtocolError(f"unknown network element {element!r}")
    return state


def mach_zehnder_network(theta: float | None = None) -> LinearOpticsNetwork:
    """Two-port interferometer: splitter, vortex plates, optional phase, merger.

    The photon enters port a1; without a phase element it exits port a4 with
    certainty. The vortex plates tag the internal arms as the +l / -l OAM
    paths.
    """
    elements: list[NetworkElement] = [
        Beamsplitter("a0", "a1"),
        VortexRelabel("a0", "a_ell"),
        VortexRelabel("a1", "a_mell"),
    ]
    if theta is not None:
        elements.append(PhaseShift("a_mell", theta))
    elements += [
        Beamsplitter("a_ell", "a_mell"),
        VortexRelabel("a_ell", "a4"),
        VortexRelabel("a_mell", "a5"),
    ]
    return LinearOpticsNetwork(modes=(("a0", 2), ("a1", 2)), elements=tuple(elements))


def run_mach_zehnder(
    network: LinearOpticsNetwork, input_occupations: Sequence[int] = (0, 1)
) -> StateMatrix:
    return run_network(network, input_occupations)


def make_superposition_input(cutoff: int = 2) -> StateMatrix:
    """Single photon split evenly over the +l / -l modes, relative phase +1.

    Built by sending |0, 1> through the splitter-and-vortex-plate stage with
    a quarter-cycle phase shim on the +l arm (the bare splitter leaves the
    arms in relative phase i); the result is asserted against the direct
    construction before being returned.
    """
    prep = LinearOpticsNetwork(
        modes=(("a0", cutoff), ("a1", cutoff)),
        elements=(
            Beamsplitter("a0", "a1"),
            VortexRelabel("a0", "a_ell"),
            VortexRelabel("a1", "a_mell"),
            PhaseShift("a_ell", -pi / 2),
        ),
    )
    generated = run_network(prep, (0, 1))
    direct = superpose(
        generated.space, [(1 / sqrt(2), (1, 0)), (1 / sqrt(2), (0, 1))]
    )
    mismatch = float(np.max(np.abs(generated.data - direct.data)))
    if mismatch > 1e-12:
        raise ProtocolError(
            f"interferometer output deviates from the target state by {mismatch:.3e}"
        )
    return direct


def make_entangled_input(cutoff: int = 2) -> StateMatrix:
    """Postselected photon pair with opposite OAM in two paths.

    (|1,0>_1 |0,1>_2 + |0,1>_1 |1,0>_2) / sqrt(2) on modes
    (a_ell_1, a_mell_1, a_ell_2, a_mell_2).
    """
    sp = space(
        ("a_ell_1", cutoff), ("a_mell_1", cutoff), ("a_ell_2", cutoff), ("a_mell_2", cutoff)
    )
    return superpose(
        sp,
        [(1 / sqrt(2), (1, 0, 0, 1)), (1 / sqrt(2), (0, 1, 1, 0))],
    )


# ---------------------------------------------------------------------------
# scenario configuration and execution
# ---------------------------------------------------------------------------

_DEFAULT_CUTOFF = {"single": 2, "superposition": 2, "entangled": 2, "fock_series": 4}
_PHOTONIC_LABELS = {
    "single": ("a_ell",),
    "fock_series": ("a_ell",),
    "superposition": ("a_ell", "a_mell"),
    "entangled": ("a_ell_1", "a_mell_1", "a_ell_2", "a_mell_2"),
}
_PHONON_LABELS = {
    "single": ("c",),
    "fock_series": ("c",),
    "superposition": ("c", "d"),
    "entangled": ("c_1", "d_1", "c_2", "d_2"),
}
# full-space mode order, photonic and phonon interleaved per cavity
_MODE_ORDER = {
    "single": ("a_ell", "c"),
    "fock_series": ("a_ell", "c"),
    "superposition": ("a_ell", "a_mell", "c", "d"),
    "entangled": (
        "a_ell_1", "a_mell_1", "c_1", "d_1",
        "a_ell_2", "a_mell_2", "c_2", "d_2",
    ),
}

InitialStateTerms = tuple[tuple[complex, tuple[int, ...]], ...]


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    physical: model.PhysicalParams = field(default_factory=model.PhysicalParams)
    storage_time: float = 6.125e-4
    coupling_ratio: float = 4.0
    coupling_source: str = "ratio"  # "ratio": G = ratio * gamma_0; "power": derived
    interactions_enabled: bool = False
    cutoff: int | None = None
    initial_state: InitialStateTerms | None = None
    t_off_offset: float = 0.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ProtocolError(f"unknown scenario kind {self.kind!r}")
        if self.storage_time < 0:
            raise ProtocolError(f"storage_time must be >= 0, got {self.storage_time}")
        if self.coupling_ratio <= 0:
            raise ProtocolError(f"coupling_ratio must be > 0, got {self.coupling_ratio}")
        if self.coupling_source not in ("ratio", "power"):
            raise ProtocolError(f"unknown coupling source {self.coupling_source!r}")
        if self.cutoff is not None and self.cutoff < 2:
            raise ProtocolError(f"cutoff must be >= 2, got {self.cutoff}")

    @property
    def effective_cutoff(self) -> int:
        return self.cutoff if self.cutoff is not None else _DEFAULT_CUTOFF[self.kind]


@dataclass(frozen=True)
class ProtocolSchedule:
    t_off: float
    t_on: float
    t_read: float
    swap_duration: float
    envelope: ControlEnvelope


@dataclass(frozen=True)
class ProtocolResult:
    config: ScenarioConfig
    derived: model.DerivedParams
    constraints: model.ConstraintReport
    schedule: ProtocolSchedule
    trajectory: Trajectory
    rho_initial: StateMatrix
    rho_retrieved: StateMatrix
    metrics: metrics.MetricsReport


def _default_initial_terms(kind: str) -> InitialStateTerms:
    if kind in ("single", "fock_series"):
        return ((1.0, (1,)),)
    if kind == "superposition":
        return ((1 / sqrt(2), (1, 0)), (1 / sqrt(2), (0, 1)))
    return ((1 / sqrt(2), (1, 0, 0, 1)), (1 / sqrt(2), (0, 1, 1, 0)))


def boosted_coupling_for(config: ScenarioConfig, derived: model.DerivedParams) -> float:
    if config.coupling_source == "power":
        return derived.boosted_coupling
    return config.coupling_ratio * config.physical.cavity_decay


def build_schedule(coupling: float, storage_time: float, t_off_offset: float = 0.0) -> ProtocolSchedule:
    swap = pi / (2 * coupling)
    t_off = swap + t_off_offset
    if t_off <= 0:
        raise ProtocolError(f"t_off offset {t_off_offset} cancels the write pulse")
    t_on = t_off + storage_time
    t_read = t_on + swap
    envelope = ControlEnvelope(
        segments=((0.0, t_off, 1.0), (t_off, t_on, 0.0), (t_on, t_read, 1.0)),
        reference_coupling=coupling,
    )
    return ProtocolSchedule(t_off, t_on, t_read, swap, envelope)


def _scenario_space(kind: str, cutoff: int) -> CompositeSpace:
    return space(*((label, cutoff) for label in _MODE_ORDER[kind]))


def _initial_state(config: ScenarioConfig, sp: CompositeSpace) -> StateMatrix:
    terms = config.initial_state or _default_initial_terms(config.kind)
    photonic = _PHOTONIC_LABELS[config.kind]
    full_terms = []
    for amp, occs in terms:
        if len(occs) != len(photonic):
            raise ProtocolError(
                f"initial-state term {occs} should give one occupation per photonic "
                f"mode ({len(photonic)} expected)"
            )
        occ_map = dict(zip(photonic, occs))
        full = tuple(occ_map.get(label, 0) for label in sp.labels)
        full_terms.append((amp, full))
    return superpose(sp, full_terms)


def _sample_times(schedule: ProtocolSchedule, h_pulse: float) -> np.ndarray:
    """Dense per-step samples in the pulses, log-spaced during storage."""
    chunks = []
    for t0, t1 in ((0.0, schedule.t_off), (schedule.t_on, schedule.t_read)):
        n = max(1, int(np.ceil((t1 - t0) / h_pulse)))
        chunks.append(np.linspace(t0, t1, n + 1))
    storage = schedule.t_on - schedule.t_off
    if storage > 0:
        lo = max(storage * 1e-6, h_pulse)
        if lo < storage:
            decades = np.log10(storage / lo)
            n = int(min(MAX_STORAGE_SAMPLES, max(5, STORAGE_SAMPLES_PER_DECADE * decades)))
            chunks.append(schedule.t_off + np.logspace(np.log10(lo), np.log10(storage), n))
    return np.unique(np.concatenate(chunks))


def build_system(
    config: ScenarioConfig,
    coupling_fn,
    shift: float,
    sp: CompositeSpace,
) -> LindbladSystem:
    offset = shift if config.interactions_enabled else 0.0
    kind = config.kind
    if kind in ("single", "fock_series"):
        hamiltonian = hamiltonian_single(sp, coupling_fn, interaction_offset=offset)
    elif kind == "superposition":
        hamiltonian = hamiltonian_superposition(sp, coupling_fn, offsets=(offset, offset))
    else:
        hamiltonian = hamiltonian_entangled(sp, coupling_fn, offsets=(offset, offset))
    rates = {label: config.physical.cavity_decay for label in _PHOTONIC_LABELS[kind]}
    rates.update({label: config.physical.mechanical_decay for label in _PHONON_LABELS[kind]})
    return LindbladSystem(sp, hamiltonian, lowering_channels(sp, rates))


def _read_frame(state: StateMatrix) -> StateMatrix:
    """Reference the retrieved state to the read pulse's carrier phase.

    A full write/read cycle maps a -> -a on each photonic mode (two quarter
    periods of the swap), a deterministic parity rotation that the free
    choice of the reactivated control field's phase absorbs. Undoing it here
    makes the lossless double swap the identity channel on every input,
    including superpositions of different photon numbers.
    """
    occ = state.space.occupation_vectors()
    total = sum(occ.values())
    parity = np.where(np.mod(total, 2) == 0, 1.0, -1.0)
    return StateMatrix(state.space, parity[:, None] * state.data * parity[None, :])


def run_protocol(config: ScenarioConfig, wigner_grid: dict | None = None) -> ProtocolResult:
    """Execute one write/store/read cycle and evaluate its metrics."""
    derived = model.derive(config.physical)
    constraints = model.check_constraints(config.physical, derived)
    coupling = boosted_coupling_for(config, derived)
    schedule = build_schedule(coupling, config.storage_time, config.t_off_offset)

    sp = _scenario_space(config.kind, config.effective_cutoff)
    system = build_system(config, schedule.envelope.coupling_at, derived.interaction_shift, sp)

    static_scale = (
        system.hamiltonian.static_rate_scale()
        if hasattr(system.hamiltonian, "static_rate_scale")
        else 0.0
    )
    h_pulse = pulse_step(
        max(coupling, static_scale, config.physical.cavity_decay, config.physical.mechanical_decay)
    )
    samples = _sample_times(schedule, h_pulse)
    checkpoints = (0.0, schedule.t_off, schedule.t_on, schedule.t_read)

    rho0 = _initial_state(config, sp)
    trajectory = integrate(system, rho0, schedule.envelope, samples, checkpoints)

    rho_read = trajectory.checkpoints[schedule.t_read]
    rho_read.validate(trace_atol=1e-6, eigenvalue_floor=-1e-6)

    photonic = list(_PHOTONIC_LABELS[config.kind])
    rho_initial = partial_trace(rho0, photonic)
    rho_retrieved = _read_frame(partial_trace(rho_read, photonic))

    if config.kind == "entangled":
        bound = metrics.classical_bound("teleport", 4)
        bipartition = ["a_ell_1", "a_mell_1"]
    else:
        bound = metrics.classical_bound("qubit_memory", 1)
        bipartition = None
    if wigner_grid is None and config.kind == "fock_series":
        wigner_grid = {}
    report = metrics.evaluate(
        rho_initial,
        rho_retrieved,
        bound=bound,
        bipartition=bipartition,
        wigner_grid=wigner_grid,
    )
    return ProtocolResult(
        config=config,
        derived=derived,
        constraints=constraints,
        schedule=schedule,
        trajectory=trajectory,
        rho_initial=rho_initial,
        rho_retrieved=rho_retrieved,
        metrics=report,
    )
