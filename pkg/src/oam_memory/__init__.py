"""Cavity-optomechanical quantum memory simulator for twisted-light photons.

Simulates write/store/read protocols that swap orbital-angular-momentum
photon states into long-lived rotational side modes of a ring-trapped
condensate, and evaluates retrieval fidelity, logarithmic negativity and
Wigner functions against classical benchmarks.
"""

__version__ = "0.1.0"

from .dynamics import (
    CollapseChannel,
    ControlEnvelope,
    LindbladSystem,
    Trajectory,
    hamiltonian_entangled,
    hamiltonian_single,
    hamiltonian_superposition,
    integrate,
    lindblad_rhs,
)
from .hilbert import (
    CompositeSpace,
    ModeSpace,
    OperatorMatrix,
    StateMatrix,
    annihilation,
    creation,
    fock_ket,
    number_op,
    partial_trace,
    partial_transpose,
    quadrature_x,
    space,
    superpose,
    trace_norm,
)
from .metrics import (
    MetricsReport,
    classical_bound,
    fidelity,
    log_negativity,
    wigner,
)
from .model import (
    ConstraintReport,
    DerivedParams,
    PhysicalParams,
    check_constraints,
    derive,
    interaction_shift,
)
from .protocols import (
    ProtocolResult,
    ScenarioConfig,
    beamsplitter_transform,
    make_entangled_input,
    make_superposition_input,
    map_to_qubit_basis,
    run_mach_zehnder,
    run_protocol,
)

__all__ = [
    "__version__",
    "CollapseChannel",
    "CompositeSpace",
    "ConstraintReport",
    "ControlEnvelope",
    "DerivedParams",
    "LindbladSystem",
    "MetricsReport",
    "ModeSpace",
    "OperatorMatrix",
    "PhysicalParams",
    "ProtocolResult",
    "ScenarioConfig",
    "StateMatrix",
    "Trajectory",
    "annihilation",
    "beamsplitter_transform",
    "check_constraints",
    "classical_bound",
    "creation",
    "derive",
    "fidelity",
    "fock_ket",
    "hamiltonian_entangled",
    "hamiltonian_single",
    "hamiltonian_superposition",
    "integrate",
    "interaction_shift",
    "lindblad_rhs",
    "log_negativity",
    "make_entangled_input",
    "make_superposition_input",
    "map_to_qubit_basis",
    "number_op",
    "partial_trace",
    "partial_transpose",
    "quadrature_x",
    "run_mach_zehnder",
    "run_protocol",
    "space",
    "superpose",
    "trace_norm",
    "wigner",
]
