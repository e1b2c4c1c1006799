"""Trajectories, actions, phase shift and echo protocol."""

import dataclasses
import math

import numpy as np
import pytest

from spingrav import classical
from spingrav.constants import TWO_PI
from spingrav.params import SystemParams

HBAR = 1.054571817e-34
MU_B = 9.2740100783e-24


def headline_params(g=9.8, b_g=1e6, f_hz=500.0, m=1e-16, b_pp=0.0):
    base = SystemParams().with_gravity(g)
    return dataclasses.replace(
        base,
        oscillator=dataclasses.replace(base.oscillator, m=m, omega_z=TWO_PI * f_hz),
        coupling=dataclasses.replace(base.coupling, b_g=b_g, b_pp=b_pp),
    )


def test_spin_acceleration_value():
    # direct arithmetic: 2 mu_B 1e6 / (2e-16)
    p = headline_params()
    gp, gm = classical.spin_acceleration(p)
    expected = 2.0 * MU_B * 1e6 / (2.0 * 1e-16)
    assert gp == pytest.approx(expected, rel=1e-12)
    assert gp == pytest.approx(9.274e-2, rel=1e-3)
    assert gm == -gp


def test_spin_acceleration_zero_gradient_and_linearity():
    p0 = headline_params(b_g=0.0)
    assert classical.spin_acceleration(p0) == (0.0, -0.0)
    p1, p2 = headline_params(b_g=1e6), headline_params(b_g=2e6)
    assert classical.spin_acceleration(p2)[0] == pytest.approx(
        2.0 * classical.spin_acceleration(p1)[0], rel=1e-12)


def test_equilibrium_values():
    p = headline_params()
    z0, dz = classical.equilibrium(p)
    w2 = (TWO_PI * 500.0) ** 2
    assert z0 == pytest.approx(9.8 / w2, rel=1e-12)
    assert z0 == pytest.approx(9.93e-7, rel=1e-2)
    assert dz == pytest.approx(2.0 * MU_B * 1e6 / (2.0 * 1e-16) / w2, rel=1e-12)
    assert dz == pytest.approx(9.4e-9, rel=1e-2)
    # branch separation within an order of magnitude of the ~50 nm scale
    assert 5e-9 < 2.0 * dz < 5e-7
    assert classical.equilibrium(headline_params(b_g=0.0))[1] == 0.0


def test_trajectory_initial_and_midpoint():
    p = headline_params()
    for branch in (+1, -1):
        traj = classical.trajectory(branch, p, n_samples=4001)
        assert traj.positions[0] == pytest.approx(p.z0, rel=1e-12)
        assert traj.velocities[0] == 0.0
        mid = traj.positions[traj.times.searchsorted(p.t0 / 2.0)]
        # 1 - cos(pi) = 2 of the (signed) branch displacement
        assert mid == pytest.approx(p.z0 + 2.0 * traj.displacement, rel=1e-9)


def test_trajectory_closure_and_energy():
    p = headline_params()
    traj = classical.trajectory(+1, p, n_samples=4001)
    assert traj.positions[-1] == pytest.approx(traj.positions[0], abs=1e-20)
    assert traj.velocities[-1] == pytest.approx(traj.velocities[0], abs=1e-18)
    # energy in the shifted frame: (1/2) v^2 + (1/2) w^2 (z - b)^2 constant
    u = traj.positions - traj.equilibrium
    energy = 0.5 * traj.velocities**2 + 0.5 * traj.omega**2 * u**2
    assert np.ptp(energy) <= 1e-10 * energy.mean()


def test_trajectory_numeric_matches_analytic():
    p = headline_params()
    ana = classical.trajectory(+1, p, n_samples=2001)
    num = classical.trajectory_numeric(+1, p, n_samples=2001)
    err = np.abs(num.positions - ana.positions).max()
    assert err <= 1e-9 * abs(ana.displacement)


def test_trajectory_validation():
    p = headline_params()
    with pytest.raises(ValueError):
        classical.trajectory(0, p)
    with pytest.raises(ValueError):
        classical.trajectory(+1, p, n_samples=1)


def test_action_null_path():
    p = headline_params(g=0.0, b_g=0.0)
    traj = classical.trajectory(+1, p)
    assert classical.action(traj, p) == pytest.approx(0.0, abs=1e-12)


def test_action_quadrature_matches_closed_form():
    p = headline_params()
    closed = classical.phase_shift(p, method="closed_form")
    quad = classical.phase_shift(p, method="quadrature")
    assert quad.delta_phi == pytest.approx(closed.delta_phi, rel=1e-6)
    assert quad.s_plus - quad.s_minus == pytest.approx(closed.delta_phi, rel=1e-6)


def test_action_halving_convergence():
    p = headline_params()
    s_fine = classical.action(classical.trajectory(+1, p, n_samples=20001), p)
    s_half = classical.action(classical.trajectory(+1, p, n_samples=10001), p)
    assert abs(s_fine - s_half) <= 1e-8 * abs(s_fine)


def test_action_rejects_partial_span():
    p = headline_params()
    traj = classical.trajectory(+1, p)
    shortened = dataclasses.replace(
        traj, times=traj.times[:-100], positions=traj.positions[:-100],
        velocities=traj.velocities[:-100])
    with pytest.raises(ValueError):
        classical.action(shortened, p)


def test_phase_shift_headline_value():
    # g_NV mu_B B_g g t0^3 / (pi^2 hbar) at the quoted operating point
    p = headline_params()
    res = classical.phase_shift(p)
    expected = 2.0 * MU_B * 1e6 * 9.8 * (2e-3) ** 3 / (math.pi**2 * HBAR)
    assert res.delta_phi == pytest.approx(expected, rel=1e-12)
    assert res.delta_phi == pytest.approx(1.4e9, rel=0.01)


def test_phase_shift_forms_agree():
    p = headline_params()
    res = classical.phase_shift(p)
    d = res.details
    assert d["form_coupling"] == pytest.approx(d["form_gradient"], rel=1e-12)
    assert d["form_coupling"] == pytest.approx(d["form_displacement"], rel=1e-12)


def test_phase_shift_zero_gravity():
    p = headline_params(g=0.0)
    assert classical.phase_shift(p).delta_phi == 0.0


def test_phase_shift_rejects_wrong_t0():
    p = headline_params()
    with pytest.raises(ValueError):
        classical.phase_shift(p, t0=1.5 * p.t0)


def test_phase_scaling_cubic_in_t0():
    # log-log slope over a decade of t0 at fixed B_g, g
    t0s = np.geomspace(2e-4, 2e-3, 9)
    phis = [classical.phase_shift(headline_params(f_hz=1.0 / t0)).delta_phi
            for t0 in t0s]
    slope = np.polyfit(np.log(t0s), np.log(phis), 1)[0]
    assert slope == pytest.approx(3.0, abs=1e-3)


def test_phase_linear_in_gradient_and_gravity():
    base = classical.phase_shift(headline_params()).delta_phi
    assert classical.phase_shift(headline_params(b_g=3e6)).delta_phi == \
        pytest.approx(3.0 * base, rel=1e-12)
    assert classical.phase_shift(headline_params(g=4.9)).delta_phi == \
        pytest.approx(0.5 * base, rel=1e-12)


def test_quadrature_closed_form_property_100_sets():
    rng = np.random.default_rng(20260808)
    for _ in range(100):
        p = headline_params(
            b_g=float(10 ** rng.uniform(3, 7)),
            f_hz=float(10 ** rng.uniform(math.log10(50), math.log10(5000))),
            m=float(10 ** rng.uniform(-18, -14)),
        )
        closed = classical.phase_shift(p).delta_phi
        quad = classical.phase_shift(p, method="quadrature").delta_phi
        assert abs(quad - closed) <= 1e-6 * abs(closed)


def test_second_order_shift_value_and_antisymmetry():
    p = headline_params(f_hz=1000.0, b_pp=1.7e5)
    plus, minus = classical.second_order_frequency_shift(p)
    expected = 2.0 * MU_B * 1.7e5 / (8.0 * 1e-16 * (TWO_PI * 1e3) ** 2)
    assert plus == pytest.approx(expected, rel=1e-12)
    assert plus == pytest.approx(1e-10, rel=0.2)
    assert minus == -plus
    assert classical.second_order_frequency_shift(headline_params())[0] == 0.0


def _eps_params(eps=1e-6):
    base = headline_params()
    c, osc = base.constants, base.oscillator
    b_pp = eps * 8.0 * osc.m * osc.omega_z**2 / (c.g_NV * c.mu_B)
    return headline_params(b_pp=b_pp)


def test_echo_unperturbed_doubles_single_period():
    p = headline_params()
    single = classical.phase_shift(p).delta_phi
    echo = classical.echo_phase(p, with_second_gradient=False)
    assert echo.delta_phi == pytest.approx(2.0 * single, rel=1e-9)


def test_echo_rotation_cancels_second_gradient():
    p = _eps_params(1e-6)
    res_rot = classical.echo_residue(p, with_rotation=True)
    res_norot = classical.echo_residue(p, with_rotation=False)
    gravity = classical.echo_phase(p, with_second_gradient=False).delta_phi
    assert abs(res_rot) <= 1e-6 * abs(gravity)
    assert abs(res_norot) >= 1e3 * abs(res_rot)


def test_echo_conventions_reported_side_by_side():
    p = _eps_params(1e-6)
    assembly = classical.echo_phase_protocol(p, "rotation_assembly")
    lab = classical.echo_phase_protocol(p, "rotation_lab")
    single = classical.phase_shift(p).delta_phi
    # assembly rotation doubles the gravity phase, lab rotation refocuses it
    assert assembly.delta_phi == pytest.approx(2.0 * single, rel=1e-4)
    assert abs(lab.delta_phi) < 0.01 * abs(assembly.delta_phi)
    with pytest.raises(ValueError):
        classical.echo_phase_protocol(p, "sideways")
