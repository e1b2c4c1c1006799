"""Ramsey-sequence simulation on the spin (x) truncated-Fock Hilbert space.

The hybrid Hamiltonian is

    H = hbar D S_z^2 + hbar omega_z c^dag c - 2 (lam S_z - dlam)(c + c^dag)

over span{|+1>, |0>, |-1>} (x) Fock(N).  Closed evolution uses the exact
per-block eigendecomposition propagator; open evolution integrates the
Lindblad master equation with fixed-step RK4 in the frame rotating at
(omega_z c^dag c + D S_z^2), with the step count doubled until the output
observables move by less than 1e-8.

Full experimental couplings (r = lam/hbar omega_z ~ 7e2) would need Fock
dimensions far beyond desk scale; the simulator validates the physics at
r <= 4 and the exact closed form carries the result to full scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .constants import CONSTANTS, TWO_PI
from .params import SystemParams

SPIN_VALUES = np.array([1.0, 0.0, -1.0])  # basis order |+1>, |0>, |-1>
_SPIN0 = 1  # index of |0>


class CutoffError(RuntimeError):
    """Fock cutoff too small for the requested state or evolution."""

    def __init__(self, message: str, suggested_cutoff: int | None = None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


@dataclass(frozen=True)
class OscillatorSpinModel:
    """Coupling energies defining the hybrid Hamiltonian."""

    omega_z: float            # rad/s
    lam: float                # spin-oscillator coupling, J
    delta_lam: float          # gravity coupling, J
    D: float = 0.0            # zero-field splitting, rad/s
    hbar: float = CONSTANTS.hbar

    @classmethod
    def from_ratios(cls, omega_z: float, r: float, r_g: float, D: float = 0.0
                    ) -> "OscillatorSpinModel":
        hbar = CONSTANTS.hbar
        return cls(omega_z=omega_z, lam=r * hbar * omega_z,
                   delta_lam=r_g * hbar * omega_z, D=D)

    @classmethod
    def from_system(cls, params: SystemParams) -> "OscillatorSpinModel":
        return cls(omega_z=params.oscillator.omega_z, lam=params.lam,
                   delta_lam=params.delta_lam, D=params.constants.D,
                   hbar=params.constants.hbar)

    @property
    def r(self) -> float:
        return self.lam / (self.hbar * self.omega_z)

    @property
    def r_g(self) -> float:
        return self.delta_lam / (self.hbar * self.omega_z)

    @property
    def t0(self) -> float:
        return TWO_PI / self.omega_z

    def closed_form_phase(self, duration: float | None = None) -> float:
        """Ramsey phase 16 lam dlam t / (hbar^2 omega_z), rad."""
        t = self.t0 if duration is None else duration
        return 16.0 * self.lam * self.delta_lam * t / (self.hbar**2 * self.omega_z)


@dataclass(frozen=True)
class Dissipators:
    """Lindblad dissipator set for `evolve`."""

    gamma: float = 0.0        # motional amplitude damping rate, rad/s
    nbar_th: float = 0.0      # thermal occupancy of the damping bath
    gamma_phi: float = 0.0    # S_z dephasing rate; |+1><-1| decays exp(-2 gamma_phi t)

    @classmethod
    def from_q_t2(cls, omega_z: float, Q: float = math.inf, T2: float = math.inf,
                  nbar_th: float = 0.0) -> "Dissipators":
        gamma = omega_z / Q if math.isfinite(Q) else 0.0
        gamma_phi = 1.0 / (2.0 * T2) if math.isfinite(T2) else 0.0
        return cls(gamma=gamma, nbar_th=nbar_th, gamma_phi=gamma_phi)

    @property
    def any_active(self) -> bool:
        return self.gamma > 0.0 or self.gamma_phi > 0.0


def build_hamiltonian(model: OscillatorSpinModel, n_cut: int) -> np.ndarray:
    """Hermitian hybrid Hamiltonian, shape (3*(n_cut+1),)*2, Joules."""
    if n_cut < 4:
        raise CutoffError(f"Fock cutoff must be at least 4, got {n_cut}")
    n1 = n_cut + 1
    nvec = np.arange(n1)
    c_op = np.zeros((n1, n1))
    c_op[nvec[:-1], nvec[1:]] = np.sqrt(nvec[1:])
    x_op = c_op + c_op.T
    h = np.zeros((3 * n1, 3 * n1), dtype=complex)
    hbar = model.hbar
    for i, s in enumerate(SPIN_VALUES):
        blk = slice(i * n1, (i + 1) * n1)
        h_s = np.diag(hbar * (model.D * s**2 + model.omega_z * nvec)).astype(complex)
        h_s += -2.0 * (model.lam * s - model.delta_lam) * x_op
        h[blk, blk] = h_s
    return h


def thermal_state(nbar: float, n_cut: int) -> np.ndarray:
    """Boltzmann-weighted diagonal Fock density matrix, trace one."""
    if nbar < 0.0:
        raise ValueError(f"nbar must be non-negative, got {nbar}")
    n1 = n_cut + 1
    if nbar == 0.0:
        rho = np.zeros((n1, n1), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    q = nbar / (nbar + 1.0)
    if q**n_cut > 1e-8:
        needed = math.ceil(8.0 * math.log(10.0) / -math.log(q))
        raise CutoffError(
            f"cutoff {n_cut} inadequate for nbar = {nbar}", suggested_cutoff=needed)
    weights = q ** np.arange(n1)
    weights /= weights.sum()
    return np.diag(weights).astype(complex)


@dataclass
class HybridState:
    """Density matrix over spin (x) Fock(n_cut), indexed (s, n, s', n')."""

    rho: np.ndarray           # complex, shape (3, n_cut+1, 3, n_cut+1)
    n_cut: int
    time: float = 0.0

    @classmethod
    def initial(cls, n_cut: int, nbar: float = 0.0) -> "HybridState":
        """Spin |0> with a vacuum or thermal motional state."""
        n1 = n_cut + 1
        rho = np.zeros((3, n1, 3, n1), dtype=complex)
        rho[_SPIN0, :, _SPIN0, :] = thermal_state(nbar, n_cut)
        return cls(rho=rho, n_cut=n_cut)

    @property
    def trace(self) -> float:
        return float(np.einsum("snsn->", self.rho).real)

    def spin_populations(self) -> np.ndarray:
        """(p_plus1, p_0, p_minus1)."""
        return np.einsum("snsn->s", self.rho).real.copy()

    def spin_coherence(self) -> complex:
        """Fock-traced coherence <+1| rho_spin |-1>."""
        return complex(np.einsum("nn->", self.rho[0, :, 2, :]))

    def fock_populations(self) -> np.ndarray:
        return np.einsum("snsn->n", self.rho).real.copy()

    def top_level_population(self) -> float:
        """Population of the top two Fock levels (cutoff adequacy measure)."""
        p = self.fock_populations()
        return float(p[-1] + p[-2])

    def check_physical(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10,
                       pos_tol: float = 1e-8) -> None:
        n1 = self.n_cut + 1
        mat = self.rho.reshape(3 * n1, 3 * n1)
        if abs(np.trace(mat).real - 1.0) > trace_tol:
            raise AssertionError(f"trace deviates: {np.trace(mat).real - 1.0:.3e}")
        if np.abs(mat - mat.conj().T).max() > herm_tol:
            raise AssertionError("state lost Hermiticity")
        if np.linalg.eigvalsh(mat).min() < -pos_tol:
            raise AssertionError("state lost positivity")


@dataclass(frozen=True)
class PulseSpec:
    """Microwave pulse driving |0> <-> (|+1> + e^{i phase} |-1>)/sqrt(2)."""

    Omega: float              # Rabi frequency, rad/s
    duration: float           # s
    phase: float = 0.0        # relative drive phase, rad

    @classmethod
    def pi_half(cls, Omega: float, phase: float = 0.0) -> "PulseSpec":
        return cls(Omega=Omega, duration=math.pi / (2.0 * math.sqrt(2.0) * Omega),
                   phase=phase)

    @classmethod
    def pi(cls, Omega: float, phase: float = 0.0) -> "PulseSpec":
        return cls(Omega=Omega, duration=math.pi / (math.sqrt(2.0) * Omega),
                   phase=phase)

    @property
    def rotation_angle(self) -> float:
        """Bright-state rotation angle sqrt(2) Omega t_p, rad."""
        return math.sqrt(2.0) * self.Omega * self.duration


def spin_pulse_unitary(pulse: PulseSpec) -> np.ndarray:
    """3x3 pulse unitary in the (|+1>, |0>, |-1>) basis (motional identity).

    Built from the bright/dark decomposition of the symmetric drive
    hbar Omega (|+1><0| + e^{i phi} |-1><0|) + h.c.
    """
    if pulse.Omega <= 0.0:
        raise ValueError("pulse Rabi frequency must be positive")
    theta = pulse.rotation_angle
    e = np.exp(1j * pulse.phase)
    bright = np.array([1.0, 0.0, e]) / math.sqrt(2.0)
    dark = np.array([1.0, 0.0, -e]) / math.sqrt(2.0)
    zero = np.array([0.0, 1.0, 0.0], dtype=complex)
    u = np.outer(dark, dark.conj())
    u += math.cos(theta) * (np.outer(zero, zero) + np.outer(bright, bright.conj()))
    u += -1j * math.sin(theta) * (np.outer(bright, zero) + np.outer(zero, bright.conj()))
    return u


def apply_pulse(state: HybridState, pulse: PulseSpec) -> HybridState:
    """Instantaneous spin rotation; motional state untouched."""
    u = spin_pulse_unitary(pulse)
    rho = np.einsum("sa,anbm,tb->sntm", u, state.rho, u.conj())
    return HybridState(rho=rho, n_cut=state.n_cut, time=state.time)


# ---------------------------------------------------------------------------
# evolution


def _block_propagators(model: OscillatorSpinModel, n_cut: int, duration: float
                       ) -> list[np.ndarray]:
    """Exact exp(-i H_s t / hbar) for each spin block via eigendecomposition."""
    n1 = n_cut + 1
    nvec = np.arange(n1)
    c_op = np.zeros((n1, n1))
    c_op[nvec[:-1], nvec[1:]] = np.sqrt(nvec[1:])
    x_op = c_op + c_op.T
    props = []
    for s in SPIN_VALUES:
        h_s = np.diag(model.hbar * (model.D * s**2 + model.omega_z * nvec))
        h_s = h_s + (-2.0 * (model.lam * s - model.delta_lam)) * x_op
        evals, evecs = np.linalg.eigh(h_s)
        phase = np.exp(-1j * evals * duration / model.hbar)
        props.append((evecs * phase) @ evecs.conj().T)
    return props


def _evolve_closed(state: HybridState, model: OscillatorSpinModel, duration: float,
                   cutoff_tol: float) -> HybridState:
    n1 = state.n_cut + 1
    rho = state.rho
    # cutoff adequacy sampled at intermediate times as well as the endpoint
    for frac in (0.25, 0.5, 0.75, 1.0):
        props = _block_propagators(model, state.n_cut, duration * frac)
        out = np.empty_like(rho)
        for i in range(3):
            for j in range(3):
                out[i, :, j, :] = props[i] @ rho[i, :, j, :] @ props[j].conj().T
        top = float(np.einsum("snsn->n", out).real[-2:].sum())
        if top > cutoff_tol:
            raise CutoffError(
                f"top two Fock levels hold {top:.2e} population at t = "
                f"{state.time + duration * frac:.3e} s; increase the cutoff",
                suggested_cutoff=2 * state.n_cut)
    return HybridState(rho=out, n_cut=state.n_cut, time=state.time + duration)


def _rhs_factory(model: OscillatorSpinModel, n_cut: int, dis: Dissipators):
    """Master-equation RHS in the rotating frame, acting on (3,n1,3,n1)."""
    n1 = n_cut + 1
    sq = np.sqrt(np.arange(1, n1))             # c matrix elements
    sq_l = sq[None, :, None, None]
    sq_r = sq[None, None, None, :]
    nvec = np.arange(n1, dtype=float)
    n_l = nvec[None, :, None, None]
    n_r = nvec[None, None, None, :]
    k_over_hbar = (-2.0 * (model.lam * SPIN_VALUES - model.delta_lam) / model.hbar)
    k_l = k_over_hbar[:, None, None, None]
    k_r = k_over_hbar[None, None, :, None]
    s_l = SPIN_VALUES[:, None, None, None]
    s_r = SPIN_VALUES[None, None, :, None]
    deph = s_l * s_r - 0.5 * (s_l**2 + s_r**2)  # D[S_z] block multiplier
    omega = model.omega_z
    gamma, nbar, gphi = dis.gamma, dis.nbar_th, dis.gamma_phi
    sq2 = (sq[:, None] * sq[None, :])[None, :, None, :]

    def rhs(rho: np.ndarray, t: float) -> np.ndarray:
        em = np.exp(-1j * omega * t)
        ep = em.conjugate()
        xl = np.zeros_like(rho)
        xl[:, :-1] += em * sq_l * rho[:, 1:]
        xl[:, 1:] += ep * sq_l * rho[:, :-1]
        xr = np.zeros_like(rho)
        xr[..., 1:] += em * sq_r * rho[..., :-1]
        xr[..., :-1] += ep * sq_r * rho[..., 1:]
        out = -1j * (k_l * xl - k_r * xr)
        if gamma > 0.0:
            down = np.zeros_like(rho)
            down[:, :-1, :, :-1] = sq2 * rho[:, 1:, :, 1:]
            out += gamma * (nbar + 1.0) * (down - 0.5 * (n_l + n_r) * rho)
            if nbar > 0.0:
                up = np.zeros_like(rho)
                up[:, 1:, :, 1:] = sq2 * rho[:, :-1, :, :-1]
                out += gamma * nbar * (up - 0.5 * (n_l + n_r + 2.0) * rho)
        if gphi > 0.0:
            out += gphi * deph * rho
        return out

    return rhs


def _rk4_run(rho0: np.ndarray, rhs, duration: float, n_steps: int,
             checkpoints: int, cutoff_tol: float, n_cut: int, t_start: float):
    rho = rho0.copy()
    dt = duration / n_steps
    check_every = max(1, n_steps // checkpoints)
    for k in range(n_steps):
        t = k * dt
        k1 = rhs(rho, t)
        k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(rho + dt * k3, t + dt)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % check_every == 0 or k + 1 == n_steps:
            top = float(np.einsum("snsn->n", rho).real[-2:].sum())
            if top > cutoff_tol:
                raise CutoffError(
                    f"top two Fock levels hold {top:.2e} population at t = "
                    f"{t_start + (k + 1) * dt:.3e} s; increase the cutoff",
                    suggested_cutoff=2 * n_cut)
    return rho


def _observables(rho: np.ndarray) -> np.ndarray:
    pops = np.einsum("snsn->s", rho).real
    coh = np.einsum("nn->", rho[0, :, 2, :])
    return np.array([pops[0], pops[1], pops[2], coh.real, coh.imag,
                     pops.sum()])


def _evolve_lindblad(state: HybridState, model: OscillatorSpinModel, duration: float,
                     dis: Dissipators, observable_tol: float, cutoff_tol: float,
                     n_steps_start: int, max_doublings: int) -> HybridState:
    rhs = _rhs_factory(model, state.n_cut, dis)
    n = n_steps_start
    prev_rho = _rk4_run(state.rho, rhs, duration, n, 16, cutoff_tol,
                        state.n_cut, state.time)
    prev_obs = _observables(prev_rho)
    for _ in range(max_doublings):
        n *= 2
        rho = _rk4_run(state.rho, rhs, duration, n, 16, cutoff_tol,
                       state.n_cut, state.time)
        obs = _observables(rho)
        if np.abs(obs - prev_obs).max() <= observable_tol:
            prev_rho = rho
            break
        prev_rho, prev_obs = rho, obs
    else:
        raise RuntimeError(
            f"master-equation step doubling did not converge below "
            f"{observable_tol:g} within {n} steps")
    # back to the lab frame: rho = R rho_I R^dag with R = exp(-i H0 t)
    n1 = state.n_cut + 1
    t_end = duration
    fock_phase = np.exp(-1j * model.omega_z * np.arange(n1) * t_end)
    spin_phase = np.exp(-1j * model.D * SPIN_VALUES**2 * t_end)
    left = (spin_phase[:, None] * fock_phase[None, :]).reshape(3, n1, 1, 1)
    rho_lab = left * prev_rho * left.conj().reshape(1, 1, 3, n1)
    rho_lab = 0.5 * (rho_lab + rho_lab.conj().transpose(2, 3, 0, 1))
    return HybridState(rho=rho_lab, n_cut=state.n_cut, time=state.time + duration)


def evolve(state: HybridState, model: OscillatorSpinModel, duration: float,
           dissipators: Dissipators | None = None, observable_tol: float = 1e-8,
           cutoff_tol: float = 1e-6, n_steps_start: int = 1024,
           max_doublings: int = 12) -> HybridState:
    """Propagate the hybrid state for `duration` seconds.

    Without dissipators the exact eigendecomposition propagator is applied;
    with dissipators the master equation is integrated by fixed-step RK4,
    doubling the step count until the output observables change by no more
    than `observable_tol`.  Cutoff adequacy (top two Fock levels <= 1e-6
    population) is enforced at sampled times throughout.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if dissipators is None or not dissipators.any_active:
        out = _evolve_closed(state, model, duration, cutoff_tol)
    else:
        out = _evolve_lindblad(state, model, duration, dissipators,
                               observable_tol, cutoff_tol, n_steps_start,
                               max_doublings)
    out.check_physical()
    return out


# ---------------------------------------------------------------------------
# fringe


@dataclass(frozen=True)
class Fringe:
    """Scanned Ramsey fringe with the fitted phase and visibility."""

    phis: np.ndarray          # scanned second-pulse phases, rad
    p0: np.ndarray            # measured |0> populations
    delta_phi: float          # fitted phase, rad, in [0, 2 pi)
    visibility: float
    offset: float
    residual: float           # rms fit residual
    nbar: float = 0.0

    def to_csv_rows(self):
        return zip(self.phis, self.p0)


def fit_fringe(phis: np.ndarray, p0: np.ndarray) -> tuple[float, float, float, float]:
    """(delta_phi, visibility, offset, residual) for p0 = c + V/2 cos(phi - dphi).

    A discrete Fourier component at frequency one initializes the nonlinear
    least-squares refinement (the two coincide for an equispaced full-circle
    phase grid).
    """
    phis = np.asarray(phis, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if phis.size < 8:
        raise ValueError("phase grid needs at least 8 points")
    c0 = p0.mean()
    a = 2.0 * np.mean((p0 - c0) * np.cos(phis))
    b = 2.0 * np.mean((p0 - c0) * np.sin(phis))
    v0 = 2.0 * math.hypot(a, b)
    d0 = math.atan2(b, a)

    def model(x):
        c, v, d = x
        return c + 0.5 * v * np.cos(phis - d) - p0

    sol = least_squares(model, x0=[c0, v0, d0])
    c, v, d = sol.x
    if v < 0.0:
        v, d = -v, d + math.pi
    d = d % TWO_PI
    residual = float(np.sqrt(np.mean(model(sol.x) ** 2)))
    return d, float(v), float(c), residual


def ramsey_run(model: OscillatorSpinModel, n_cut: int,
               phi_grid: np.ndarray | None = None,
               dissipators: Dissipators | None = None, nbar: float = 0.0,
               pulse_omega: float = TWO_PI * 10e6, duration: float | None = None,
               **evolve_kwargs) -> Fringe:
    """pi/2 -> evolve(t0) -> pi/2(phi) sequence scanned over the phase grid."""
    if phi_grid is None:
        phi_grid = np.linspace(0.0, TWO_PI, 33, endpoint=False)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if phi_grid.size < 8:
        raise ValueError("phase grid needs at least 8 points")
    duration = model.t0 if duration is None else duration

    state = HybridState.initial(n_cut, nbar=nbar)
    state = apply_pulse(state, PulseSpec.pi_half(pulse_omega, phase=0.0))
    state = evolve(state, model, duration, dissipators, **evolve_kwargs)

    p0 = np.empty_like(phi_grid)
    for i, phi in enumerate(phi_grid):
        read = apply_pulse(state, PulseSpec.pi_half(pulse_omega, phase=phi))
        p0[i] = read.spin_populations()[_SPIN0]
    delta_phi, visibility, offset, residual = fit_fringe(phi_grid, p0)
    return Fringe(phis=phi_grid, p0=p0, delta_phi=delta_phi,
                  visibility=visibility, offset=offset, residual=residual,
                  nbar=nbar)


def visibility_analytic(Q: float, T2: float, t0: float, r: float) -> float:
    """Single-period fringe visibility exp(-(2 pi / Q)(2r)^2) exp(-t0 / T2)."""
    motional = 0.0 if math.isinf(Q) else (TWO_PI / Q) * (2.0 * r) ** 2
    dephasing = 0.0 if math.isinf(T2) else t0 / T2
    return math.exp(-motional - dephasing)
