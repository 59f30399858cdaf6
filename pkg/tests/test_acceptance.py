"""Acceptance suite: one test per shipped claim, one printed line each.

Each criterion evaluates the quantity at its stated tolerance and prints a
single PASS/FAIL line (visible with ``pytest -s`` or in failure reports)
before asserting. Expensive protocol runs are shared through module-scoped
fixtures; every run also feeds the cross-cutting property criterion.
"""

import time
from math import cos, pi

import numpy as np
import pytest
from scipy.linalg import sqrtm

from oam_memory.dynamics import (
    CollapseChannel,
    ControlEnvelope,
    LindbladSystem,
    hamiltonian_single,
    integrate,
    lowering_channels,
)
from oam_memory.hilbert import StateMatrix, annihilation, fock_ket, space, superpose
from oam_memory.metrics import classical_bound, fidelity, log_negativity
from oam_memory.model import PhysicalParams, check_constraints, derive
from oam_memory.protocols import (
    ScenarioConfig,
    mach_zehnder_network,
    make_entangled_input,
    run_mach_zehnder,
    run_protocol,
)
from conftest import random_density

GAMMA0 = 2 * pi * 1e3


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def strong_coupling_params() -> PhysicalParams:
    return PhysicalParams(winding_number=25, atom_count=80_000, control_power=1.45e-9)


@pytest.fixture(scope="module")
def default_run():
    start = time.perf_counter()
    result = run_protocol(ScenarioConfig(kind="single"))
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def superposition_run():
    start = time.perf_counter()
    result = run_protocol(
        ScenarioConfig(
            kind="superposition",
            physical=strong_coupling_params(),
            coupling_ratio=8.0,
            storage_time=0.5,
        )
    )
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def entangled_run():
    start = time.perf_counter()
    result = run_protocol(
        ScenarioConfig(
            kind="entangled",
            physical=strong_coupling_params(),
            coupling_ratio=8.0,
            storage_time=0.2,
        )
    )
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def fock_runs():
    start = time.perf_counter()
    results = {
        n: run_protocol(
            ScenarioConfig(
                kind="fock_series",
                coupling_ratio=4.1,
                storage_time=1e-3,
                initial_state=((1.0, (n,)),),
            )
        )
        for n in (1, 2)
    }
    return results, time.perf_counter() - start


class TestCriterion1ProtocolTiming:
    def test_swap_peaks_align_with_schedule(self, default_run):
        result, elapsed = default_run
        traj = result.trajectory
        sched = result.schedule
        step = traj.pulse_step

        write = traj.times <= sched.t_off + 1e-15
        t_peak_write = traj.times[write][np.argmax(traj.observables["n_c"][write])]
        write_offset = abs(t_peak_write - sched.swap_duration)

        read = traj.times >= sched.t_on - 1e-15
        t_peak_read = traj.times[read][np.argmax(traj.observables["n_a_ell"][read])]
        read_offset = abs(t_peak_read - (sched.t_on + sched.swap_duration))

        ok = write_offset <= step + 1e-15 and read_offset <= step + 1e-15 and elapsed < 10.0
        report(
            1,
            ok,
            f"phonon peak off t_off by {write_offset / step:.2f} steps, retrieved "
            f"photon peak off t_read by {read_offset / step:.2f} steps "
            f"(tolerance 1 step of {step * 1e6:.3f} us); runtime {elapsed:.2f} s < 10 s",
        )


class TestCriterion2SuperpositionFidelity:
    def test_half_second_storage_fidelity(self, superposition_run):
        result, elapsed = superposition_run
        fid = result.metrics.fidelity
        bound = classical_bound("qubit_memory", 1)
        ok = abs(fid - 0.88) <= 0.04 and fid > bound and elapsed < 120.0
        report(
            2,
            ok,
            f"fidelity {fid:.4f} vs 0.88 +- 0.04, classical bound {bound:.4f}; "
            f"runtime {elapsed:.1f} s < 120 s",
        )


class TestCriterion3EntangledStorage:
    def test_two_tenths_second_storage(self, entangled_run):
        result, elapsed = entangled_run
        neg = result.metrics.log_negativity
        fid = result.metrics.fidelity
        bound = classical_bound("teleport", 4)
        neg_ok = abs(neg - 0.6) <= 0.06
        fid_ok = abs(fid - 0.8) <= 0.05 and fid > bound
        ok = neg_ok and fid_ok and elapsed < 900.0
        report(
            3,
            ok,
            f"log-negativity {neg:.4f} vs 0.6 +- 0.06 ({'ok' if neg_ok else 'out of band'}), "
            f"fidelity {fid:.4f} vs 0.8 +- 0.05 ({'ok' if fid_ok else 'out of band'}), "
            f"bound {bound:.2f}; runtime {elapsed:.1f} s < 900 s",
        )

    def test_retrieved_state_zero_pattern(self, entangled_run):
        # forbidden configurations stay empty: both photons in one path or
        # any coherence between different total photon numbers
        result, _ = entangled_run
        rho = result.rho_retrieved
        sp = rho.space
        for occs in ((1, 1, 0, 0), (0, 0, 1, 1), (1, 0, 1, 0), (0, 1, 0, 1)):
            idx = sp.basis_index(occs)
            assert rho.data[idx, idx].real < 1e-10, occs
        vacuum = sp.basis_index((0, 0, 0, 0))
        bell = sp.basis_index((1, 0, 0, 1))
        assert abs(rho.data[bell, vacuum]) < 1e-10
        assert rho.data[vacuum, vacuum].real > 0.01


class TestCriterion4WignerNegativity:
    def test_fock_states_keep_negative_wigner_minimum(self, fock_runs):
        results, elapsed = fock_runs
        w1 = results[1].metrics.wigner_min
        w2 = results[2].metrics.wigner_min
        ok = w1 < -0.01 and w2 < -0.01 and elapsed < 60.0
        report(
            4,
            ok,
            f"retrieved Wigner minima {w1:.4f} (one photon) and {w2:.4f} "
            f"(two photons), both < -0.01; runtime {elapsed:.1f} s < 60 s",
        )


class TestCriterion5InterferometerNetwork:
    def test_balanced_and_phased_outputs(self):
        out = run_mach_zehnder(mach_zehnder_network())
        idx = out.space.basis_index((1, 0))
        p4 = out.data[idx, idx].real
        balanced_ok = abs(p4 - 1.0) <= 1e-12

        max_err = 0.0
        for theta in np.linspace(0, 2 * pi, 8, endpoint=False):
            swept = run_mach_zehnder(mach_zehnder_network(theta=theta))
            p4 = swept.data[swept.space.basis_index((1, 0)),
                            swept.space.basis_index((1, 0))].real
            p5 = swept.data[swept.space.basis_index((0, 1)),
                            swept.space.basis_index((0, 1))].real
            max_err = max(
                max_err,
                abs(p4 - (1 + cos(theta)) / 2),
                abs(p5 - (1 - cos(theta)) / 2),
            )
        ok = balanced_ok and max_err <= 1e-10
        report(
            5,
            ok,
            f"balanced output population 1 within 1e-12: {balanced_ok}; phase-swept "
            f"populations match (1 +- cos)/2 to {max_err:.2e} (tolerance 1e-10)",
        )


class TestCriterion6PropertySuite:
    def test_property_suite(self, default_run, superposition_run, entangled_run, fock_runs):
        checks: list[tuple[str, bool, str]] = []

        # trace preservation and checkpoint positivity across every scenario
        trace_err = 0.0
        min_eig = 0.0
        runs = [default_run[0], superposition_run[0], entangled_run[0]] + list(
            fock_runs[0].values()
        )
        for result in runs:
            trace_err = max(
                trace_err, float(np.max(np.abs(result.trajectory.observables["trace"] - 1)))
            )
            for state in result.trajectory.checkpoints.values():
                min_eig = min(min_eig, state.min_eigenvalue())
        checks.append(("trace drift", trace_err < 1e-6, f"{trace_err:.2e} < 1e-6"))
        checks.append(("positivity", min_eig >= -1e-6, f"min eig {min_eig:.2e} >= -1e-6"))

        # lossless swap against the Rabi oracle
        sp = space(("a_ell", 2), ("c", 2))
        coupling = 4 * GAMMA0
        system = LindbladSystem(sp, hamiltonian_single(sp, coupling), ())
        t_off = pi / (2 * coupling)
        env = ControlEnvelope(((0.0, t_off, 1.0),), coupling)
        traj = integrate(system, fock_ket(sp, [1, 0]), env, np.linspace(0, t_off, 100))
        rabi_err = float(
            np.max(np.abs(traj.observables["n_a_ell"] - np.cos(coupling * traj.times) ** 2))
        )
        checks.append(("swap oracle", rabi_err < 1e-7, f"{rabi_err:.2e} < 1e-7"))

        # analytic damping map vs brute-force integration, 10 ms storage
        rho0 = superpose(sp, [(1, (1, 0)), (1, (0, 1))])
        env_store = ControlEnvelope(((0.0, 0.01, 0.0),), 0.0)
        h0 = hamiltonian_single(sp, 0.0)
        tagged = LindbladSystem(
            sp, h0, lowering_channels(sp, {"a_ell": GAMMA0, "c": 1.7e-5 * GAMMA0})
        )
        dense = LindbladSystem(
            sp,
            h0,
            (
                CollapseChannel(annihilation(sp, "a_ell"), GAMMA0),
                CollapseChannel(annihilation(sp, "c"), 1.7e-5 * GAMMA0),
            ),
        )
        exact = integrate(tagged, rho0, env_store, [0.01], checkpoint_times=[0.01])
        brute = integrate(dense, rho0, env_store, [0.01], checkpoint_times=[0.01])
        storage_err = float(
            np.max(np.abs(exact.checkpoints[0.01].data - brute.checkpoints[0.01].data))
        )
        checks.append(("storage map", storage_err < 1e-7, f"{storage_err:.2e} < 1e-7"))

        # fidelity and log-negativity against independent brute-force oracles,
        # 50 random states across 4- and 16-dimensional spaces
        rng = np.random.default_rng(617)
        fid_err = 0.0
        neg_err = 0.0
        sp4 = space(("a", 2), ("b", 2))
        sp16 = space(("a", 4), ("b", 4))
        for spc in (sp4, sp16):
            dim = spc.dim
            for _ in range(25):
                a = random_density(rng, dim)
                b = random_density(rng, dim)
                ra = sqrtm(a)
                oracle = float(np.real(np.trace(sqrtm(ra @ b @ ra))))
                fid_err = max(
                    fid_err, abs(fidelity(StateMatrix(spc, a), StateMatrix(spc, b)) - oracle)
                )
                d = spc.modes[0].cutoff
                pt = a.reshape(d, d, d, d).swapaxes(0, 2).reshape(dim, dim)
                neg_oracle = float(np.log2(np.sum(np.abs(np.real(np.linalg.eigvals(pt))))))
                neg_err = max(
                    neg_err, abs(log_negativity(StateMatrix(spc, a), ["a"]) - neg_oracle)
                )
        checks.append(("fidelity oracle", fid_err < 1e-9, f"{fid_err:.2e} < 1e-9"))
        checks.append(("negativity oracle", neg_err < 1e-9, f"{neg_err:.2e} < 1e-9"))

        # unit entanglement of the two-path input state
        neg_input = log_negativity(make_entangled_input(), ["a_ell_1", "a_mell_1"])
        checks.append(
            ("input negativity", abs(neg_input - 1.0) <= 1e-9, f"{neg_input:.12f} = 1 +- 1e-9")
        )

        # classical benchmarks, exact
        bounds_ok = classical_bound("qubit_memory", 1) == 2 / 3 and classical_bound(
            "teleport", 4
        ) == 2 / 5
        checks.append(("classical bounds", bounds_ok, "2/3 and 2/5 exact"))

        ok = all(flag for _, flag, _ in checks)
        detail = "; ".join(f"{name}: {msg}" for name, _, msg in checks)
        report(6, ok, detail)


class TestCriterion7ConstraintChecks:
    def test_reference_profile_and_overcrowded_fixture(self):
        params = PhysicalParams()
        report_ok = check_constraints(params, derive(params))
        default_ok = report_ok.all_ok

        crowded = params.with_overrides(atom_count=300_000)
        crowded_report = check_constraints(crowded, derive(crowded))
        flags = {name: entry["ok"] for name, entry in crowded_report.as_dict().items()}
        only_quasi_fails = flags.pop("quasi_1d") is False and all(flags.values())

        ok = default_ok and only_quasi_fails
        report(
            7,
            ok,
            f"reference profile passes all five checks: {default_ok}; atom number "
            f"above the transverse-freezing bound fails exactly quasi_1d: {only_quasi_fails}",
        )
