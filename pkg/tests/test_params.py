"""Parameter containers, derived quantities, validation, configuration."""

import dataclasses
import math

import numpy as np
import pytest

from spingrav.config import (
    ConfigError,
    SequenceParams,
    default_config,
    load_config,
    to_config_text,
)
from spingrav.constants import CONSTANTS, TWO_PI
from spingrav.params import OscillatorParams, SystemParams, from_sphere, validate

HBAR = 1.054571817e-34
MU_B = 9.2740100783e-24
K_B = 1.380649e-23


def test_constants_positive_and_zfs():
    c = CONSTANTS
    for name in ("hbar", "k_B", "mu_B", "g_NV", "D", "g_local", "c", "torr_to_pa"):
        assert getattr(c, name) > 0.0
    assert abs(c.d_hz - 2.88e9) / 2.88e9 < 1e-9


def test_torr_conversion_factor():
    assert CONSTANTS.torr_to_pa == pytest.approx(101325.0 / 760.0, rel=1e-15)


def test_derived_r_recomputed_independently():
    # direct arithmetic: r = g_NV mu_B B_g sqrt(hbar/2 m w)/(hbar w)
    p = SystemParams()
    w = 2.0 * math.pi * 500.0
    zp = math.sqrt(HBAR / (2.0 * 1e-16 * w))
    r_expected = 2.0 * MU_B * 1e6 * zp / (HBAR * w)
    assert p.r == pytest.approx(r_expected, rel=1e-12)
    rep = validate(p)
    assert rep.ok
    assert rep.derived["r"] == pytest.approx(r_expected, rel=1e-12)


def test_zero_gradient_gives_zero_coupling():
    p = dataclasses.replace(
        SystemParams(), coupling=dataclasses.replace(SystemParams().coupling, b_g=0.0))
    rep = validate(p)
    assert rep.ok
    assert p.lam == 0.0
    assert p.r == 0.0


def test_negative_mass_reported_not_raised():
    p = dataclasses.replace(
        SystemParams(), oscillator=dataclasses.replace(SystemParams().oscillator, m=-1.0))
    rep = validate(p)
    assert not rep.ok
    assert "mass must be positive" in rep.violations


def test_validation_flags_each_bad_field():
    base = SystemParams()
    bad_spin = dataclasses.replace(base, spin=dataclasses.replace(base.spin, T1=1e-4, T2=2e-3))
    assert "T1 must be at least T2/2" in validate(bad_spin).violations
    bad_eps = dataclasses.replace(
        base, oscillator=dataclasses.replace(base.oscillator, epsilon=0.9))
    assert "permittivity must exceed 1" in validate(bad_eps).violations


def test_from_sphere_mass():
    # (4/3) pi R^3 rho by direct arithmetic
    osc = from_sphere(200e-9, 3000.0)
    expected = (4.0 / 3.0) * math.pi * (200e-9) ** 3 * 3000.0
    assert osc.m == pytest.approx(expected, rel=1e-12)
    assert osc.m == pytest.approx(1.00531e-16, rel=1e-4)
    heavier = from_sphere(200e-9, 3500.0)
    assert heavier.m == pytest.approx(1.17286e-16, rel=1e-4)


def test_from_sphere_rejects_nonpositive():
    with pytest.raises(ValueError):
        from_sphere(0.0, 3000.0)
    with pytest.raises(ValueError):
        from_sphere(200e-9, -1.0)


def test_branch_displacement_is_four_delta_z():
    p = SystemParams()
    assert p.branch_displacement == pytest.approx(4.0 * p.delta_z, rel=1e-14)
    assert p.branch_acceleration == pytest.approx(
        2.0 * CONSTANTS.g_NV * CONSTANTS.mu_B * 1e6 / 1e-16, rel=1e-12)


def test_serialization_round_trip_dict():
    p = SystemParams()
    q = SystemParams.from_dict(p.to_dict())
    assert q == p


def test_config_round_trip_all_fields():
    params, seq = default_config()
    text = to_config_text(params, seq)
    params2, seq2 = load_config(text)
    for section in ("constants", "oscillator", "spin", "coupling", "environment"):
        d1, d2 = params.to_dict()[section], params2.to_dict()[section]
        for key in d1:
            if d1[key] == 0.0:
                assert d2[key] == 0.0
            else:
                assert d2[key] == pytest.approx(d1[key], rel=1e-12), (section, key)
    assert seq2 == seq


def test_config_round_trip_random_params():
    rng = np.random.default_rng(20260808)
    for _ in range(20):
        base = SystemParams()
        p = dataclasses.replace(
            base,
            oscillator=dataclasses.replace(
                base.oscillator,
                m=float(10 ** rng.uniform(-18, -14)),
                omega_z=float(TWO_PI * 10 ** rng.uniform(1.7, 3.7)),
                Q=float(10 ** rng.uniform(3, 12)),
                T=float(10 ** rng.uniform(-6, -2)),
            ),
            coupling=dataclasses.replace(
                base.coupling, b_g=float(10 ** rng.uniform(3, 7))),
        )
        p2, _ = load_config(to_config_text(p))
        for key, val in p.to_dict()["oscillator"].items():
            assert p2.to_dict()["oscillator"][key] == pytest.approx(val, rel=1e-12)
        assert p2.coupling.b_g == pytest.approx(p.coupling.b_g, rel=1e-12)
        # derived quantities recompute identically from the parsed primitives
        assert p2.r == pytest.approx(p.r, rel=1e-9)


def test_unit_conversion_table():
    cases = [
        ("[environment]\npressure_torr = 1e-9\n",
         lambda p, s: p.environment.P, 1e-9 * 101325.0 / 760.0),
        ("[oscillator]\nfrequency_hz = 500\n",
         lambda p, s: p.oscillator.omega_z, TWO_PI * 500.0),
        ("[oscillator]\ntemperature_mk = 0.1\n",
         lambda p, s: p.oscillator.T, 1e-4),
        ("[oscillator]\nradius_nm = 200\n",
         lambda p, s: p.oscillator.R, 2e-7),
        ("[spin]\nt2_ms = 2\n", lambda p, s: p.spin.T2, 2e-3),
        ("[spin]\nrabi_mhz = 10\n", lambda p, s: p.spin.Omega, TWO_PI * 1e7),
        ("[environment]\ntrap_wavelength_um = 10\n",
         lambda p, s: p.environment.lambda_0, 1e-5),
        ("[environment]\nmicrowave_ghz = 2.88\n",
         lambda p, s: p.environment.f0, 2.88e9),
    ]
    for text, getter, expected in cases:
        params, seq = load_config(text)
        assert getter(params, seq) == pytest.approx(expected, rel=1e-12), text


def test_unknown_key_is_hard_error():
    with pytest.raises(ConfigError):
        load_config("[oscillator]\nmass_g = 1\n")
    with pytest.raises(ConfigError):
        load_config("[resonator]\nmass_kg = 1\n")
    with pytest.raises(ConfigError):
        load_config("[oscillator]\nmass_kg = not_a_number\n")


def test_immutability():
    p = SystemParams()
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.oscillator.m = 2e-16  # type: ignore[misc]


def test_gravity_override():
    p = SystemParams().with_gravity(9.8)
    assert p.constants.g_local == 9.8
    assert p.z0 == pytest.approx(9.8 / (TWO_PI * 500.0) ** 2, rel=1e-12)
