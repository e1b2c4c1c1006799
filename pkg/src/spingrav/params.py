"""Experiment parameters, derived coupling quantities and validation.

All parameter containers are frozen dataclasses in SI units (angular
frequencies in rad/s).  Construction never raises on unphysical values;
`validate` returns a report instead, so that configurations can be
inspected rather than rejected mid-parse.  Derived quantities (lambda,
delta_lambda, r, z0, ...) are pure functions of the primitive fields.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .constants import CONSTANTS, TWO_PI, PhysicalConstants


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical mode: levitated nanosphere or cantilever CoM motion."""

    m: float = 1e-16                 # kg
    omega_z: float = TWO_PI * 500.0  # trap frequency, rad/s
    Q: float = 1e8                   # mechanical quality factor
    T: float = 1e-4                  # CoM temperature, K
    R: float = 200e-9                # sphere radius, m
    rho: float = 3000.0              # material density, kg/m^3
    epsilon: float = 1.5             # relative permittivity


def from_sphere(R: float, rho: float, **kwargs) -> OscillatorParams:
    """Oscillator parameters with the mass derived from a solid sphere.

    Args:
        R: sphere radius, m.
        rho: material density, kg/m^3.
        **kwargs: remaining OscillatorParams fields (omega_z, Q, T, ...).
    """
    if R <= 0.0:
        raise ValueError(f"sphere radius must be positive, got {R}")
    if rho <= 0.0:
        raise ValueError(f"density must be positive, got {rho}")
    m = (4.0 / 3.0) * math.pi * R**3 * rho
    return OscillatorParams(m=m, R=R, rho=rho, **kwargs)


@dataclass(frozen=True)
class SpinParams:
    """NV electron-spin coherence properties and drive strength."""

    T1: float = 10e-3                # s
    T2: float = 2e-3                 # s
    Omega: float = TWO_PI * 10e6     # Rabi frequency, rad/s


@dataclass(frozen=True)
class CouplingParams:
    """Magnetic-gradient coupling between the spin and the CoM motion."""

    b_g: float = 1e6                 # field gradient dB/dz, T/m
    b_pp: float = 0.0                # second gradient d^2B/dz^2, T/m^2


@dataclass(frozen=True)
class EnvironmentParams:
    """Vacuum, trap light and measurement-repetition environment."""

    P: float = 1e-9 * CONSTANTS.torr_to_pa  # gas pressure, Pa
    v: float = 500.0                 # gas mean speed, m/s
    lambda_0: float = 10e-6          # trap wavelength, m
    f0: float = 2.88e9               # microwave carrier, Hz
    M: float = 100.0                 # on-chip resonator count
    f_rep: float = 1000.0            # measurement repetition rate, Hz


@dataclass(frozen=True)
class SystemParams:
    """One full experiment configuration plus derived coupling quantities.

    Immutable after construction; safe to share across threads.  Derived
    values are recomputed from primitives on every access so they can never
    drift out of sync with the stored fields.
    """

    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    oscillator: OscillatorParams = field(default_factory=OscillatorParams)
    spin: SpinParams = field(default_factory=SpinParams)
    coupling: CouplingParams = field(default_factory=CouplingParams)
    environment: EnvironmentParams = field(default_factory=EnvironmentParams)

    # -- derived quantities ------------------------------------------------

    @property
    def zp_length(self) -> float:
        """Zero-point length sqrt(hbar / 2 m omega_z), m."""
        osc = self.oscillator
        return math.sqrt(self.constants.hbar / (2.0 * osc.m * osc.omega_z))

    @property
    def lam(self) -> float:
        """Spin-oscillator coupling energy g_NV mu_B B_g z_zp, J."""
        c = self.constants
        return c.g_NV * c.mu_B * self.coupling.b_g * self.zp_length

    @property
    def delta_lam(self) -> float:
        """Gravity coupling energy (1/2) m g z_zp, J."""
        return 0.5 * self.oscillator.m * self.constants.g_local * self.zp_length

    @property
    def r(self) -> float:
        """Dimensionless spin-oscillator coupling lam / (hbar omega_z)."""
        return self.lam / (self.constants.hbar * self.oscillator.omega_z)

    @property
    def r_g(self) -> float:
        """Dimensionless gravity offset delta_lam / (hbar omega_z)."""
        return self.delta_lam / (self.constants.hbar * self.oscillator.omega_z)

    @property
    def t0(self) -> float:
        """One mechanical period 2 pi / omega_z, s."""
        return TWO_PI / self.oscillator.omega_z

    @property
    def z0(self) -> float:
        """Gravitational equilibrium shift g / omega_z^2, m."""
        return self.constants.g_local / self.oscillator.omega_z**2

    @property
    def delta_z(self) -> float:
        """Conventional spin-branch displacement |g_pm| / omega_z^2, m.

        Uses the textbook spin-dependent acceleration g_NV mu_B B_g / (2 m).
        """
        c = self.constants
        osc = self.oscillator
        return c.g_NV * c.mu_B * abs(self.coupling.b_g) / (2.0 * osc.m * osc.omega_z**2)

    @property
    def branch_displacement(self) -> float:
        """Equilibrium shift per spin branch implied by the coupling term, m.

        The interaction -2(lam S_z - dlam)(c + c^dag) displaces each S_z = +-1
        branch by 2 g_NV mu_B B_g / (m omega_z^2), i.e. 4x `delta_z`.  The
        classical trajectories and action integrals use this value so that
        the action-difference phase agrees with the closed-form fringe phase
        and with the quantum propagator.
        """
        return 4.0 * self.delta_z

    @property
    def branch_acceleration(self) -> float:
        """Branch acceleration matching `branch_displacement`, m/s^2."""
        return self.branch_displacement * self.oscillator.omega_z**2

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "constants": asdict(self.constants),
            "oscillator": asdict(self.oscillator),
            "spin": asdict(self.spin),
            "coupling": asdict(self.coupling),
            "environment": asdict(self.environment),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        return cls(
            constants=PhysicalConstants(**data["constants"]),
            oscillator=OscillatorParams(**data["oscillator"]),
            spin=SpinParams(**data["spin"]),
            coupling=CouplingParams(**data["coupling"]),
            environment=EnvironmentParams(**data["environment"]),
        )

    def with_gravity(self, g: float) -> "SystemParams":
        return replace(self, constants=replace(self.constants, g_local=g))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of `validate`: violated invariants plus a derived summary."""

    violations: tuple[str, ...]
    derived: dict

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        lines = ["configuration valid" if self.ok else "configuration INVALID"]
        lines += [f"  violation: {v}" for v in self.violations]
        lines += [f"  {k} = {v:.6e}" for k, v in self.derived.items()]
        return "\n".join(lines)


def validate(params: SystemParams) -> ValidationReport:
    """Check every physical-admissibility invariant; never raises."""
    v: list[str] = []
    c, osc, spin, env = params.constants, params.oscillator, params.spin, params.environment

    if osc.m <= 0.0:
        v.append("mass must be positive")
    if osc.omega_z <= 0.0:
        v.append("trap frequency must be positive")
    if osc.Q <= 0.0:
        v.append("quality factor must be positive")
    if osc.T < 0.0:
        v.append("temperature must be non-negative")
    if osc.R <= 0.0:
        v.append("radius must be positive")
    if osc.rho <= 0.0:
        v.append("density must be positive")
    if osc.epsilon <= 1.0:
        v.append("permittivity must exceed 1")
    if spin.T2 <= 0.0:
        v.append("T2 must be positive")
    if spin.T1 <= 0.0:
        v.append("T1 must be positive")
    elif spin.T2 > 0.0 and spin.T1 < spin.T2 / 2.0:
        v.append("T1 must be at least T2/2")
    if spin.Omega <= 0.0:
        v.append("Rabi frequency must be positive")
    if env.P <= 0.0:
        v.append("pressure must be positive")
    if env.v <= 0.0:
        v.append("gas speed must be positive")
    if env.lambda_0 <= 0.0:
        v.append("trap wavelength must be positive")
    if env.f0 <= 0.0:
        v.append("microwave frequency must be positive")
    if env.M <= 0.0:
        v.append("resonator count must be positive")
    if env.f_rep <= 0.0:
        v.append("repetition rate must be positive")
    if c.g_local < 0.0:
        v.append("gravity must be non-negative")
    for name in ("hbar", "k_B", "mu_B", "g_NV", "D", "c"):
        if getattr(c, name) <= 0.0:
            v.append(f"constant {name} must be positive")

    derived: dict = {}
    if osc.m > 0.0 and osc.omega_z > 0.0:
        derived = {
            "lambda_J": params.lam,
            "delta_lambda_J": params.delta_lam,
            "r": params.r,
            "r_g": params.r_g,
            "z0_m": params.z0,
            "delta_z_m": params.delta_z,
            "branch_displacement_m": params.branch_displacement,
            "t0_s": params.t0,
            "zp_length_m": params.zp_length,
            "sphere_mass_kg": (4.0 / 3.0) * math.pi * osc.R**3 * osc.rho,
        }
    return ValidationReport(violations=tuple(v), derived=derived)
