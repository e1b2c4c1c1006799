"""Hybrid-space Hamiltonian, pulses, evolution, fringes, visibility."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from spingrav import quantum
from spingrav.constants import TWO_PI

HBAR = 1.054571817e-34
OMEGA = TWO_PI * 500.0


def model(r=0.5, r_g=0.02, D=0.0):
    return quantum.OscillatorSpinModel.from_ratios(OMEGA, r, r_g, D=D)


# -- Hamiltonian -------------------------------------------------------------


def test_hamiltonian_hermitian_and_block_diagonal():
    m = model(0.7, 0.05, D=TWO_PI * 2.88e9)
    h = quantum.build_hamiltonian(m, 8)
    assert np.abs(h - h.conj().T).max() < 1e-40
    n1 = 9
    for i in range(3):
        for j in range(3):
            if i != j:
                assert np.abs(h[i * n1:(i + 1) * n1, j * n1:(j + 1) * n1]).max() == 0.0


def test_hamiltonian_decoupled_spectrum():
    d = TWO_PI * 2.88e9
    m = model(0.0, 0.0, D=d)
    h = quantum.build_hamiltonian(m, 6)
    evals = np.sort(np.linalg.eigvalsh(h)) / HBAR
    expected = np.sort(np.concatenate(
        [d * s**2 + OMEGA * np.arange(7) for s in (1.0, 0.0, -1.0)]))
    assert np.allclose(evals, expected, rtol=1e-12, atol=1e-6)


def test_hamiltonian_displaced_ground_energy():
    # S_z = 0 block with gravity coupling only: completion of the square
    # shifts the ground energy by -4 dlam^2/(hbar w); cross-checked against
    # exact diagonalization at a generous cutoff.
    m = model(0.0, 0.3)
    n_cut = 60
    h = quantum.build_hamiltonian(m, n_cut)
    n1 = n_cut + 1
    block0 = h[n1:2 * n1, n1:2 * n1]
    ground = np.linalg.eigvalsh(block0)[0]
    expected = -4.0 * m.delta_lam**2 / (HBAR * OMEGA)
    assert ground == pytest.approx(expected, rel=1e-10)


def test_hamiltonian_displacement_sign_convention():
    # ground-state <c + c^dag> per spin block equals 4 (lam s - dlam)/(hbar w)
    m = model(0.5, 0.1)
    n_cut = 70
    h = quantum.build_hamiltonian(m, n_cut)
    n1 = n_cut + 1
    c_op = np.diag(np.sqrt(np.arange(1, n1)), 1)
    x_op = c_op + c_op.T
    for i, s in enumerate((1.0, 0.0, -1.0)):
        block = h[i * n1:(i + 1) * n1, i * n1:(i + 1) * n1]
        _, vecs = np.linalg.eigh(block)
        ground = vecs[:, 0]
        x_mean = ground @ x_op @ ground
        expected = 4.0 * (m.lam * s - m.delta_lam) / (HBAR * OMEGA)
        assert x_mean == pytest.approx(expected, rel=1e-8, abs=1e-10)


def test_hamiltonian_rejects_small_cutoff():
    with pytest.raises(quantum.CutoffError):
        quantum.build_hamiltonian(model(), 3)


# -- pulses -------------------------------------------------------------------


def _hmw(omega_rabi, phase):
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = omega_rabi            # <+1|H|0>/hbar
    h[2, 1] = omega_rabi * np.exp(1j * phase)
    return HBAR * (h + h.conj().T)


def test_pi_half_pulse_populations():
    pulse = quantum.PulseSpec.pi_half(TWO_PI * 1e7)
    state = quantum.HybridState.initial(4)
    out = quantum.apply_pulse(state, pulse)
    pops = out.spin_populations()
    assert pops == pytest.approx([0.5, 0.0, 0.5], abs=1e-12)


def test_two_pi_half_pulses_return_to_zero():
    pulse = quantum.PulseSpec.pi_half(TWO_PI * 1e7)
    state = quantum.HybridState.initial(4)
    out = quantum.apply_pulse(quantum.apply_pulse(state, pulse), pulse)
    assert out.spin_populations()[1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("phase", [0.0, 0.7, -2.1])
@pytest.mark.parametrize("kind", ["pi_half", "pi"])
def test_pulse_unitary_matches_expm_oracle(kind, phase):
    omega_rabi = TWO_PI * 5e6
    pulse = getattr(quantum.PulseSpec, kind)(omega_rabi, phase=phase)
    u = quantum.spin_pulse_unitary(pulse)
    u_oracle = expm(-1j * _hmw(omega_rabi, phase) * pulse.duration / HBAR)
    assert np.abs(u - u_oracle).max() < 1e-12


def test_pi_pulse_swaps_branches():
    pulse = quantum.PulseSpec.pi(TWO_PI * 1e7)
    u = quantum.spin_pulse_unitary(pulse)
    plus = np.array([1.0, 0.0, 0.0], dtype=complex)
    out = u @ plus
    assert abs(out[2]) == pytest.approx(1.0, abs=1e-12)
    assert abs(out[0]) < 1e-12


def test_pulse_durations():
    pulse = quantum.PulseSpec.pi_half(2.0)
    assert pulse.duration == pytest.approx(math.pi / (2.0 * math.sqrt(2.0) * 2.0))
    assert quantum.PulseSpec.pi(2.0).duration == pytest.approx(
        math.pi / (math.sqrt(2.0) * 2.0))


# -- thermal state ------------------------------------------------------------


def test_thermal_state_vacuum():
    rho = quantum.thermal_state(0.0, 10)
    assert rho[0, 0] == 1.0
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)


def test_thermal_state_mean_occupation_geometric_oracle():
    n_cut = 64
    rho = quantum.thermal_state(2.0, n_cut)
    mean_n = float(np.sum(np.arange(n_cut + 1) * np.diag(rho).real))
    assert mean_n == pytest.approx(2.0, abs=1e-6)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)


def test_thermal_state_cutoff_precondition():
    with pytest.raises(quantum.CutoffError) as err:
        quantum.thermal_state(2.0, 10)
    assert err.value.suggested_cutoff is not None


# -- closed evolution ---------------------------------------------------------


def test_closed_phase_matches_formula():
    m = model(0.5, 0.02)
    fringe = quantum.ramsey_run(m, 48)
    expected = m.closed_form_phase() % TWO_PI
    assert fringe.delta_phi == pytest.approx(expected, abs=1e-3)
    assert fringe.visibility >= 0.999
    assert fringe.residual <= 1e-3


def test_closed_phase_zero_without_gravity():
    m = model(0.5, 0.0)
    fringe = quantum.ramsey_run(m, 32)
    dist = min(fringe.delta_phi, TWO_PI - fringe.delta_phi)
    assert dist < 1e-6


def test_uncoupled_evolution_only_deterministic_phases():
    d = TWO_PI * 2.88e9
    m = model(0.0, 0.0, D=d)
    state = quantum.HybridState.initial(8)
    state = quantum.apply_pulse(state, quantum.PulseSpec.pi_half(TWO_PI * 1e7))
    out = quantum.evolve(state, m, duration=0.31 * m.t0)
    # populations untouched; coherences rotate by the known S_z^2 and number
    # phases, which are common mode inside the (+1, -1) pair
    assert out.spin_populations() == pytest.approx(state.spin_populations(), abs=1e-10)
    c_in, c_out = state.spin_coherence(), out.spin_coherence()
    assert abs(c_out) == pytest.approx(abs(c_in), abs=1e-10)
    assert c_out == pytest.approx(c_in, abs=1e-9)


def test_thermal_immunity_of_fringe_phase():
    m = model(0.5, 0.02)
    phases = [quantum.ramsey_run(m, 64, nbar=nb).delta_phi for nb in (0.0, 0.5, 2.0)]
    assert abs(phases[1] - phases[0]) < 1e-6
    assert abs(phases[2] - phases[0]) < 1e-6


def test_fringe_phase_cutoff_independence():
    m = model(0.5, 0.02)
    p32 = quantum.ramsey_run(m, 32).delta_phi
    p64 = quantum.ramsey_run(m, 64).delta_phi
    assert abs(p64 - p32) <= 1e-6


def test_cutoff_adequacy_violation_raises():
    m = model(2.0, 0.02)
    with pytest.raises(quantum.CutoffError) as err:
        quantum.ramsey_run(m, 16)
    assert err.value.suggested_cutoff == 32


# -- dissipative evolution ----------------------------------------------------


def test_dephasing_channel_oracle():
    # lam = dlam = 0: the |+1><-1| coherence decays exactly as exp(-t/T2)
    t2 = 2e-3
    m = model(0.0, 0.0)
    dis = quantum.Dissipators.from_q_t2(OMEGA, T2=t2)
    state = quantum.apply_pulse(quantum.HybridState.initial(6),
                                quantum.PulseSpec.pi_half(TWO_PI * 1e7))
    c0 = abs(state.spin_coherence())
    for frac in (0.5, 1.0, 2.0):
        out = quantum.evolve(state, m, duration=frac * t2, dissipators=dis)
        decay = abs(out.spin_coherence()) / c0
        assert decay == pytest.approx(math.exp(-frac), rel=1e-4)


def test_dephasing_visibility_one_over_e():
    m = model(0.5, 0.02)
    dis = quantum.Dissipators.from_q_t2(OMEGA, T2=m.t0)
    fringe = quantum.ramsey_run(m, 32, dissipators=dis)
    assert fringe.visibility == pytest.approx(1.0 / math.e, rel=0.02)


def test_damping_visibility_matches_lindblad_theory():
    # independent oracle: coherent-path decoherence functional gives
    # exp(-(2 pi / Q) |4 r|^2 / ... ) = exp(-(2 pi / Q) 16 r^2) per period
    r, q = 0.5, 1e3
    m = model(r, 0.02)
    dis = quantum.Dissipators.from_q_t2(OMEGA, Q=q)
    fringe = quantum.ramsey_run(m, 32, dissipators=dis)
    theory = math.exp(-(TWO_PI / q) * 16.0 * r**2)
    assert fringe.visibility == pytest.approx(theory, abs=1e-3)


def test_damping_visibility_near_formula_at_half_r():
    r, q = 0.5, 1e3
    m = model(r, 0.02)
    dis = quantum.Dissipators.from_q_t2(OMEGA, Q=q)
    fringe = quantum.ramsey_run(m, 32, dissipators=dis)
    formula = quantum.visibility_analytic(q, math.inf, m.t0, r)
    assert abs(fringe.visibility - formula) < 0.05


def test_evolution_preserves_trace_hermiticity_positivity():
    m = model(0.5, 0.02)
    dis = quantum.Dissipators.from_q_t2(OMEGA, Q=1e4, T2=2e-3, nbar_th=0.2)
    state = quantum.apply_pulse(quantum.HybridState.initial(24, nbar=0.2),
                                quantum.PulseSpec.pi_half(TWO_PI * 1e7))
    for frac in (0.25, 0.5, 1.0):
        out = quantum.evolve(state, m, duration=frac * m.t0, dissipators=dis)
        out.check_physical()  # raises on violation
        assert abs(out.trace - 1.0) < 1e-8


# -- fringe fitting and export ------------------------------------------------


def test_fit_fringe_recovers_known_parameters():
    rng = np.random.default_rng(7)
    for _ in range(10):
        true_phi = rng.uniform(0.0, TWO_PI)
        true_v = rng.uniform(0.2, 1.0)
        phis = np.linspace(0.0, TWO_PI, 33, endpoint=False)
        p0 = 0.5 * (1.0 + true_v * np.cos(phis - true_phi))
        d, v, c, resid = quantum.fit_fringe(phis, p0)
        assert d == pytest.approx(true_phi, abs=1e-9)
        assert v == pytest.approx(true_v, abs=1e-9)
        assert c == pytest.approx(0.5, abs=1e-9)
        assert resid < 1e-12


def test_fit_fringe_needs_eight_points():
    with pytest.raises(ValueError):
        quantum.fit_fringe(np.linspace(0, 6, 5), np.ones(5))


def test_visibility_analytic_limits_and_monotonicity():
    assert quantum.visibility_analytic(math.inf, math.inf, 2e-3, 90.0) == 1.0
    v = quantum.visibility_analytic(1e5, 2e-3, 2e-3, 90.0)
    expected = math.exp(-(TWO_PI / 1e5) * 180.0**2) * math.exp(-1.0)
    assert v == pytest.approx(expected, rel=1e-12)
    qs = np.geomspace(1e3, 1e9, 13)
    vis = [quantum.visibility_analytic(q, 2e-3, 2e-3, 1.0) for q in qs]
    assert np.all(np.diff(vis) >= 0.0)
    t2s = np.geomspace(1e-4, 1e-1, 13)
    vis_t = [quantum.visibility_analytic(1e6, t2, 2e-3, 1.0) for t2 in t2s]
    assert np.all(np.diff(vis_t) >= 0.0)


def test_visibility_monotone_under_dissipation():
    m = model(0.5, 0.02)
    v_list = []
    for q in (1e3, 1e5):
        dis = quantum.Dissipators.from_q_t2(OMEGA, Q=q)
        v_list.append(quantum.ramsey_run(m, 32, dissipators=dis).visibility)
    assert v_list[0] < v_list[1] <= 1.0 + 1e-9
