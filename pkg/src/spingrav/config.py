"""Structured-text configuration ingestion.

The file format is INI-style key = value sections.  Every key is optional
and carries its unit in the name; unknown sections or keys are hard errors.
Parsed values are converted to SI + rad/s on ingestion.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

from .constants import (
    CONSTANTS,
    HZ_TO_RAD_S,
    MHZ_TO_RAD_S,
    MK_TO_K,
    MS_TO_S,
    NM_TO_M,
    TORR_TO_PA,
    TWO_PI,
    UM_TO_M,
)
from .params import (
    CouplingParams,
    EnvironmentParams,
    OscillatorParams,
    SpinParams,
    SystemParams,
)


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, bad section."""


@dataclass(frozen=True)
class SequenceParams:
    """Desk-scale interferometer sequence settings for the quantum runs."""

    r: float = 0.5            # dimensionless coupling lambda/(hbar omega_z)
    r_g: float = 0.02         # dimensionless gravity offset
    fock_cutoff: int = 64
    nbar: float = 0.0         # initial thermal occupancy
    phi_points: int = 33


# section -> key -> (converter to internal units, default in file units)
_SCHEMA: dict[str, dict[str, tuple] ] = {
    "oscillator": {
        "mass_kg": (float, 1e-16),
        "frequency_hz": (lambda x: float(x) * HZ_TO_RAD_S, 500.0),
        "quality_factor": (float, 1e8),
        "temperature_mk": (lambda x: float(x) * MK_TO_K, 0.1),
        "radius_nm": (lambda x: float(x) * NM_TO_M, 200.0),
        "density_kg_m3": (float, 3000.0),
        "permittivity": (float, 1.5),
    },
    "spin": {
        "t1_ms": (lambda x: float(x) * MS_TO_S, 10.0),
        "t2_ms": (lambda x: float(x) * MS_TO_S, 2.0),
        "rabi_mhz": (lambda x: float(x) * MHZ_TO_RAD_S, 10.0),
    },
    "coupling": {
        "gradient_t_m": (float, 1e6),
        "second_gradient_t_m2": (float, 0.0),
    },
    "environment": {
        "pressure_torr": (lambda x: float(x) * TORR_TO_PA, 1e-9),
        "gas_speed_m_s": (float, 500.0),
        "trap_wavelength_um": (lambda x: float(x) * UM_TO_M, 10.0),
        "microwave_ghz": (lambda x: float(x) * 1e9, 2.88),
        "resonators": (float, 100.0),
        "repetition_hz": (float, 1000.0),
        "gravity_m_s2": (float, CONSTANTS.g_local),
    },
    "sequence": {
        "coupling_ratio": (float, 0.5),
        "gravity_ratio": (float, 0.02),
        "fock_cutoff": (lambda x: int(float(x)), 64),
        "nbar": (float, 0.0),
        "phi_points": (lambda x: int(float(x)), 33),
    },
}


def _parse_ini(text: str) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep key case; schema keys are lower-case anyway
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    out: dict[str, dict[str, str]] = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            out[section][key] = raw
    return out


def _resolved(section: str, values: dict[str, str]) -> dict[str, float]:
    resolved = {}
    for key, (conv, default) in _SCHEMA[section].items():
        raw = values.get(key)
        try:
            resolved[key] = conv(raw) if raw is not None else conv(default)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
    return resolved


def load_config(text: str) -> tuple[SystemParams, SequenceParams]:
    """Parse configuration text into fully resolved parameter objects."""
    raw = _parse_ini(text)
    osc = _resolved("oscillator", raw.get("oscillator", {}))
    spin = _resolved("spin", raw.get("spin", {}))
    coup = _resolved("coupling", raw.get("coupling", {}))
    env = _resolved("environment", raw.get("environment", {}))
    seq = _resolved("sequence", raw.get("sequence", {}))

    params = SystemParams(
        constants=replace(CONSTANTS, g_local=env["gravity_m_s2"]),
        oscillator=OscillatorParams(
            m=osc["mass_kg"],
            omega_z=osc["frequency_hz"],
            Q=osc["quality_factor"],
            T=osc["temperature_mk"],
            R=osc["radius_nm"],
            rho=osc["density_kg_m3"],
            epsilon=osc["permittivity"],
        ),
        spin=SpinParams(T1=spin["t1_ms"], T2=spin["t2_ms"], Omega=spin["rabi_mhz"]),
        coupling=CouplingParams(b_g=coup["gradient_t_m"], b_pp=coup["second_gradient_t_m2"]),
        environment=EnvironmentParams(
            P=env["pressure_torr"],
            v=env["gas_speed_m_s"],
            lambda_0=env["trap_wavelength_um"],
            f0=env["microwave_ghz"],
            M=env["resonators"],
            f_rep=env["repetition_hz"],
        ),
    )
    sequence = SequenceParams(
        r=seq["coupling_ratio"],
        r_g=seq["gravity_ratio"],
        fock_cutoff=seq["fock_cutoff"],
        nbar=seq["nbar"],
        phi_points=seq["phi_points"],
    )
    return params, sequence


def load_config_file(path: str) -> tuple[SystemParams, SequenceParams]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def default_config() -> tuple[SystemParams, SequenceParams]:
    return load_config("")


def to_config_text(params: SystemParams, sequence: SequenceParams | None = None) -> str:
    """Emit canonical configuration text that round-trips all fields."""
    sequence = sequence or SequenceParams()
    g = lambda x: format(x, ".17g")
    buf = io.StringIO()
    buf.write("[oscillator]\n")
    buf.write(f"mass_kg = {g(params.oscillator.m)}\n")
    buf.write(f"frequency_hz = {g(params.oscillator.omega_z / TWO_PI)}\n")
    buf.write(f"quality_factor = {g(params.oscillator.Q)}\n")
    buf.write(f"temperature_mk = {g(params.oscillator.T / MK_TO_K)}\n")
    buf.write(f"radius_nm = {g(params.oscillator.R / NM_TO_M)}\n")
    buf.write(f"density_kg_m3 = {g(params.oscillator.rho)}\n")
    buf.write(f"permittivity = {g(params.oscillator.epsilon)}\n")
    buf.write("\n[spin]\n")
    buf.write(f"t1_ms = {g(params.spin.T1 / MS_TO_S)}\n")
    buf.write(f"t2_ms = {g(params.spin.T2 / MS_TO_S)}\n")
    buf.write(f"rabi_mhz = {g(params.spin.Omega / MHZ_TO_RAD_S)}\n")
    buf.write("\n[coupling]\n")
    buf.write(f"gradient_t_m = {g(params.coupling.b_g)}\n")
    buf.write(f"second_gradient_t_m2 = {g(params.coupling.b_pp)}\n")
    buf.write("\n[environment]\n")
    buf.write(f"pressure_torr = {g(params.environment.P / TORR_TO_PA)}\n")
    buf.write(f"gas_speed_m_s = {g(params.environment.v)}\n")
    buf.write(f"trap_wavelength_um = {g(params.environment.lambda_0 / UM_TO_M)}\n")
    buf.write(f"microwave_ghz = {g(params.environment.f0 / 1e9)}\n")
    buf.write(f"resonators = {g(params.environment.M)}\n")
    buf.write(f"repetition_hz = {g(params.environment.f_rep)}\n")
    buf.write(f"gravity_m_s2 = {g(params.constants.g_local)}\n")
    buf.write("\n[sequence]\n")
    buf.write(f"coupling_ratio = {g(sequence.r)}\n")
    buf.write(f"gravity_ratio = {g(sequence.r_g)}\n")
    buf.write(f"fock_cutoff = {sequence.fock_cutoff}\n")
    buf.write(f"nbar = {g(sequence.nbar)}\n")
    buf.write(f"phi_points = {sequence.phi_points}\n")
    return buf.getvalue()
