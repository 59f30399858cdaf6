"""Laboratory parameters and the model constants derived from them.

All quantities are SI: rates and frequencies in rad/s, lengths in meters,
powers in watts. The derivation chain for a ring condensate of radius R
driven through a cavity is

    I      = m R^2
    Omega_p = hbar L_p^2 / (2 I)
    omega_c = hbar (L_p + 2 ell)^2 / (2 I)      (co-rotating side mode)
    omega_d = hbar (L_p - 2 ell)^2 / (2 I)      (counter-rotating side mode)
    U0     = g_a^2 / Delta_a                    (lattice depth per photon)
    G      = U0 sqrt(N / 8)                     (bare optomechanical coupling)
    eps_c  = sqrt(P_c gamma_0 / (hbar omega_0)) (control pump rate)
    alpha  = eps_c / |gamma_0/2 - i omega_c|    (steady control amplitude,
                                                 phase fixed real)
    G_eff  = G alpha / sqrt(2)                  (control-boosted coupling)
    shift  = 4 g~ N,  g~ = omega_rho a_s / (2 pi R)

The steady amplitude ignores side-mode backaction (its detuning correction
is negligible for every supported regime) and uses the resonant detuning
-omega_c for the co-rotating write configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import pi, sqrt

HBAR = 1.054571817e-34  # J s
AMU = 1.66053906660e-27  # kg
C_LIGHT = 299792458.0  # m/s

# "much greater" threshold used by the advisory inequality checks
STRONG_INEQUALITY_FACTOR = 10.0


class ModelError(ValueError):
    """Invalid laboratory parameters."""


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory inputs. Defaults are the sodium ring-trap reference set."""

    atom_mass: float = 23 * AMU  # kg
    scattering_length: float = 0.1e-9  # m
    ring_radius: float = 10e-6  # m
    trap_freq_rho: float = 2 * pi * 840.0  # rad/s
    trap_freq_z: float = 2 * pi * 840.0  # rad/s
    atom_count: int = 20_000
    winding_number: int = 20
    oam_index: int = 130
    atom_photon_coupling: float = 2 * pi * 0.36e6  # rad/s
    atomic_detuning: float = 300 * (2 * pi * 9.8e6)  # rad/s
    cavity_decay: float = 2 * pi * 1e3  # rad/s
    mechanical_decay: float = 1.7e-5 * (2 * pi * 1e3)  # rad/s
    control_power: float = 8.6e-10  # W
    signal_power: float = 8.6e-12  # W
    optical_frequency: float = 2 * pi * C_LIGHT / 589e-9  # rad/s

    def __post_init__(self):
        positive = {
            "atom_mass": self.atom_mass,
            "scattering_length": self.scattering_length,
            "ring_radius": self.ring_radius,
            "trap_freq_rho": self.trap_freq_rho,
            "trap_freq_z": self.trap_freq_z,
            "atom_count": self.atom_count,
            "atom_photon_coupling": self.atom_photon_coupling,
            "atomic_detuning": self.atomic_detuning,
            "cavity_decay": self.cavity_decay,
            "mechanical_decay": self.mechanical_decay,
            "control_power": self.control_power,
            "signal_power": self.signal_power,
            "optical_frequency": self.optical_frequency,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ModelError(f"{name} must be strictly positive, got {value!r}")
        if self.oam_index < 1:
            raise ModelError(f"oam_index must be >= 1, got {self.oam_index}")
        if self.winding_number < 0:
            raise ModelError(
                f"winding_number must be >= 0, got {self.winding_number}"
            )

    def with_overrides(self, **kwargs) -> "PhysicalParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DerivedParams:
    moment_of_inertia: float  # kg m^2
    omega_p: float  # rad/s, rotational energy scale of the ring current
    omega_c: float  # rad/s
    omega_d: float  # rad/s
    lattice_depth: float  # rad/s (U0)
    bare_coupling: float  # rad/s (G)
    pump_rate_control: float  # 1/s (eps_c)
    steady_amplitude: float  # dimensionless |alpha|
    boosted_coupling: float  # rad/s (G alpha / sqrt 2)
    interaction_shift: float  # rad/s (4 g~ N)
    swap_time: float  # s, pi / (2 boosted_coupling)


@dataclass(frozen=True)
class ConstraintCheck:
    ok: bool
    margin: float  # dimensionless; > 1 means satisfied with that headroom


@dataclass(frozen=True)
class ConstraintReport:
    """Advisory parameter-regime checks; never raises on violation."""

    quasi_1d: ConstraintCheck
    bogoliubov: ConstraintCheck
    lattice_weak: ConstraintCheck
    sideband_resolved: ConstraintCheck
    mode_separation: ConstraintCheck

    @property
    def all_ok(self) -> bool:
        return all(
            c.ok
            for c in (
                self.quasi_1d,
                self.bogoliubov,
                self.lattice_weak,
                self.sideband_resolved,
                self.mode_separation,
            )
        )

    def as_dict(self) -> dict:
        return {
            name: {"ok": check.ok, "margin": check.margin}
            for name, check in (
                ("quasi_1d", self.quasi_1d),
                ("bogoliubov", self.bogoliubov),
                ("lattice_weak", self.lattice_weak),
                ("sideband_resolved", self.sideband_resolved),
                ("mode_separation", self.mode_separation),
            )
        }


def interaction_shift(params: PhysicalParams) -> float:
    """Collisional frequency offset 4 g~ N applied to the side modes."""
    g_tilde = params.trap_freq_rho * params.scattering_length / (
        2 * pi * params.ring_radius
    )
    return 4.0 * g_tilde * params.atom_count


def derive(params: PhysicalParams) -> DerivedParams:
    """Populate every derived model constant from the laboratory inputs."""
    inertia = params.atom_mass * params.ring_radius**2
    lp, ell = params.winding_number, params.oam_index
    omega_p = HBAR * lp**2 / (2 * inertia)
    omega_c = HBAR * (lp + 2 * ell) ** 2 / (2 * inertia)
    omega_d = HBAR * (lp - 2 * ell) ** 2 / (2 * inertia)
    lattice_depth = params.atom_photon_coupling**2 / params.atomic_detuning
    bare = lattice_depth * sqrt(params.atom_count / 8.0)
    pump = sqrt(
        params.control_power * params.cavity_decay / (HBAR * params.optical_frequency)
    )
    alpha = pump / abs(params.cavity_decay / 2 - 1j * omega_c)
    boosted = bare * alpha / sqrt(2.0)
    return DerivedParams(
        moment_of_inertia=inertia,
        omega_p=omega_p,
        omega_c=omega_c,
        omega_d=omega_d,
        lattice_depth=lattice_depth,
        bare_coupling=bare,
        pump_rate_control=pump,
        steady_amplitude=alpha,
        boosted_coupling=boosted,
        interaction_shift=interaction_shift(params),
        swap_time=pi / (2 * boosted),
    )


def control_power_for_coupling(params: PhysicalParams, boosted_coupling: float) -> float:
    """Invert the pump chain: power needed for a target boosted coupling."""
    if boosted_coupling <= 0:
        raise ModelError("boosted coupling must be positive")
    d = derive(params)
    alpha = boosted_coupling * sqrt(2.0) / d.bare_coupling
    pump = alpha * abs(params.cavity_decay / 2 - 1j * d.omega_c)
    return pump**2 * HBAR * params.optical_frequency / params.cavity_decay


def check_constraints(params: PhysicalParams, derived: DerivedParams) -> ConstraintReport:
    """Evaluate the parameter-space inequalities with their margins.

    Strict inequalities (quasi-1D atom number, weak lattice) pass at any
    margin > 1; order-of-magnitude separations pass at margin >= 10.
    """
    n_bound = (
        4 * params.ring_radius / (3 * params.scattering_length)
    ) * sqrt(pi * params.trap_freq_rho / params.trap_freq_z)
    quasi = ConstraintCheck(
        ok=params.atom_count < n_bound, margin=n_bound / params.atom_count
    )

    shift = derived.interaction_shift
    side_min = min(derived.omega_c, derived.omega_d)
    bog_margin = side_min / shift if shift > 0 else float("inf")
    bogoliubov = ConstraintCheck(
        ok=bog_margin >= STRONG_INEQUALITY_FACTOR, margin=bog_margin
    )

    lattice_energy = derived.lattice_depth * derived.steady_amplitude**2
    chemical_scale = derived.omega_p + shift / 2.0
    lat_margin = chemical_scale / lattice_energy if lattice_energy > 0 else float("inf")
    lattice = ConstraintCheck(ok=lat_margin > 1.0, margin=lat_margin)

    sb_margin = side_min / params.cavity_decay
    sideband = ConstraintCheck(
        ok=sb_margin >= STRONG_INEQUALITY_FACTOR, margin=sb_margin
    )

    sep_margin = abs(derived.omega_c - derived.omega_d) / params.cavity_decay
    separation = ConstraintCheck(
        ok=sep_margin >= STRONG_INEQUALITY_FACTOR, margin=sep_margin
    )

    return ConstraintReport(
        quasi_1d=quasi,
        bogoliubov=bogoliubov,
        lattice_weak=lattice,
        sideband_resolved=sideband,
        mode_separation=separation,
    )
