"""Forward integration of the controlled master equation and fidelities.

Two independent integrators share one fixed-step RK4 core: the component
form propagates the Bloch vector with matrices assembled from the structure
tensors, the density form propagates the row-major vectorized density
matrix with supermatrices assembled by Kronecker products.  Agreement
between the two is the primary dynamics oracle.

Controls are sampled schedules, interpolated cubically at the half steps;
reservoir coefficients are evaluated from their closed forms exactly.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np

from . import liouvillian as lv
from .controls import SIGMA_MINUS_SHAPE, SIGMA_PLUS_SHAPE, ControlSchedule
from .environment import LorentzianEnvironment, decay_and_shift
from .errors import IntegrationDivergedError, MalformedStateError
from .sun_algebra import (bloch_to_density, build_basis, density_to_bloch,
                          structure_constants)
from .trajectories import (TrajectorySpec, reference_ramp, steady_state_bloch,
                           tracking_trajectory)

__all__ = [
    "SimulationRun",
    "DEFAULT_MIN_STEPS",
    "integrate_affine",
    "integrate_bloch",
    "integrate_density",
    "integrate_density_general",
    "density_run_from_bloch",
    "adiabatic_reference_run",
    "fidelity",
    "fidelity_bloch",
]

DEFAULT_MIN_STEPS = 20000


@dataclass(frozen=True)
class SimulationRun:
    times: np.ndarray
    states: np.ndarray
    fidelity: np.ndarray | None
    schedule: ControlSchedule | None = None
    densities: np.ndarray | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelity))


@lru_cache(maxsize=1)
def _qubit_parts():
    """Cached N = 2 structure: Bloch-form blocks and supermatrix blocks."""
    basis = build_basis(2)
    tensors = structure_constants(basis)
    f_mats = np.array([tensors.f[k].T for k in range(3)])   # coefficient k: C += c_k f_mats[k]
    k_minus = lv.channel_matrix(SIGMA_MINUS_SHAPE, tensors)
    k_plus = lv.channel_matrix(SIGMA_PLUS_SHAPE, tensors)
    b_minus = lv.channel_drift(SIGMA_MINUS_SHAPE, tensors)
    b_plus = lv.channel_drift(SIGMA_PLUS_SHAPE, tensors)

    def unit_ham(k):
        c = np.zeros(4)
        c[k + 1] = 1.0
        return lv.kron_liouvillian(lv.HamiltonianSpec(c), [], basis)

    s_coh = np.array([unit_ham(k) for k in range(3)])
    s_minus = lv.kron_liouvillian(lv.HamiltonianSpec(np.zeros(4)),
                                  [lv.LindbladChannel(SIGMA_MINUS_SHAPE)], basis)
    s_plus = lv.kron_liouvillian(lv.HamiltonianSpec(np.zeros(4)),
                                 [lv.LindbladChannel(SIGMA_PLUS_SHAPE)], basis)
    return basis, tensors, f_mats, (k_minus, k_plus), (b_minus, b_plus), s_coh, (s_minus, s_plus)


def _stage_coefficients(schedule: ControlSchedule, env: LorentzianEnvironment,
                        fine_times: np.ndarray):
    """Hamiltonian coefficients (c_x, c_y, c_z) and channel rates on a fine grid."""
    omega_x = np.asarray(schedule.value("omega_x", fine_times), dtype=float)
    excitation = np.asarray(schedule.value("excitation", fine_times), dtype=float)
    gam, shift = decay_and_shift(env, fine_times)
    gam = np.asarray(gam, dtype=float)
    shift = np.asarray(shift, dtype=float)
    if schedule.protocol == "xy":
        omega_y = np.asarray(schedule.value("omega_y", fine_times), dtype=float)
        c_z = 0.5 * shift
    else:
        omega_y = np.zeros_like(omega_x)
        c_z = 0.5 * (shift + np.asarray(schedule.value("detuning_r", fine_times), dtype=float))
    rate_minus = gam * (excitation + 1.0)
    rate_plus = gam * excitation
    return omega_x, omega_y, c_z, rate_minus, rate_plus


def _fine_grid(times: np.ndarray, min_steps: int) -> tuple[np.ndarray, int]:
    n_out = len(times) - 1
    sub = max(1, ceil(min_steps / n_out))
    n_steps = n_out * sub
    fine = np.linspace(times[0], times[-1], 2 * n_steps + 1)
    return fine, sub


def _rk4_affine(build_mk, y0: np.ndarray, times: np.ndarray, sub: int,
                fine_times: np.ndarray):
    """RK4 for ydot = M(t) y + b(t), coefficients precomputed on the half grid.

    ``build_mk(i)`` returns (M, b) at fine-grid index i.  Records the state
    at every output node and raises on non-finite intermediate states.
    """
    n_out = len(times) - 1
    out = np.empty((n_out + 1, y0.size), dtype=y0.dtype)
    out[0] = y0
    y = y0.copy()
    h = (times[-1] - times[0]) / (n_out * sub)
    for step in range(n_out * sub):
        i = 2 * step
        m1, b1 = build_mk(i)
        m2, b2 = build_mk(i + 1)
        m4, b4 = build_mk(i + 2)
        k1 = m1 @ y + b1
        k2 = m2 @ (y + 0.5 * h * k1) + b2
        k3 = m2 @ (y + 0.5 * h * k2) + b2
        k4 = m4 @ (y + h * k3) + b4
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(np.asarray(y, dtype=complex).view(float))):
            raise IntegrationDivergedError(
                f"state became non-finite at t = {fine_times[i + 2]:.6g}")
        if (step + 1) % sub == 0:
            out[(step + 1) // sub] = y
    return out


def integrate_affine(matrix_fun, drift_fun, y0: np.ndarray, times: np.ndarray,
                     min_steps: int = DEFAULT_MIN_STEPS) -> np.ndarray:
    """Fixed-step RK4 for ydot = M(t) y + b(t); shared core of both integrators.

    Coefficients are evaluated at the step nodes and half steps.  Returns
    the states on the output grid.
    """
    times = np.asarray(times, dtype=float)
    fine, sub = _fine_grid(times, min_steps)
    mats = [np.asarray(matrix_fun(t)) for t in fine]
    drifts = [np.asarray(drift_fun(t)) for t in fine]
    return _rk4_affine(lambda i: (mats[i], drifts[i]), np.asarray(y0), times, sub, fine)


def integrate_bloch(schedule: ControlSchedule, env: LorentzianEnvironment,
                    r0: np.ndarray, times: np.ndarray, min_steps: int = DEFAULT_MIN_STEPS,
                    reference=None) -> SimulationRun:
    """Integrate the component-form Bloch equations under a control schedule.

    ``reference`` may be a TrajectorySpec or a callable t -> r; when given,
    the per-sample Uhlmann fidelity against it is recorded.
    """
    times = np.asarray(times, dtype=float)
    fine, sub = _fine_grid(times, min_steps)
    _, _, f_mats, (k_minus, k_plus), (b_minus, b_plus), _, _ = _qubit_parts()
    ox, oy, cz, rm, rp = _stage_coefficients(schedule, env, fine)

    def build_mk(i):
        m = (ox[i] * f_mats[0] + oy[i] * f_mats[1] + cz[i] * f_mats[2]
             + rm[i] * k_minus + rp[i] * k_plus)
        return m, rm[i] * b_minus + rp[i] * b_plus
    states = _rk4_affine(build_mk, np.asarray(r0, dtype=float), times, sub, fine)
    fid = _reference_fidelity(states, times, reference)
    return SimulationRun(times=times, states=states, fidelity=fid, schedule=schedule)


def integrate_density(schedule: ControlSchedule, env: LorentzianEnvironment,
                      rho0: np.ndarray, times: np.ndarray,
                      min_steps: int = DEFAULT_MIN_STEPS, reference=None,
                      keep_densities: bool = False) -> SimulationRun:
    """Integrate the vectorized density matrix with the Kronecker supermatrix.

    States are reported as Bloch vectors for direct comparison with
    ``integrate_bloch``; this is the primary dynamics oracle.  With
    ``keep_densities`` the raw matrices are attached to the run as well.
    """
    times = np.asarray(times, dtype=float)
    fine, sub = _fine_grid(times, min_steps)
    basis, _, _, _, _, s_coh, (s_minus, s_plus) = _qubit_parts()
    ox, oy, cz, rm, rp = _stage_coefficients(schedule, env, fine)
    zero = np.zeros(4, dtype=complex)

    def build_mk(i):
        s = (ox[i] * s_coh[0] + oy[i] * s_coh[1] + cz[i] * s_coh[2]
             + rm[i] * s_minus + rp[i] * s_plus)
        return s, zero
    vec0 = lv.vec(np.asarray(rho0, dtype=complex))
    raw = _rk4_affine(build_mk, vec0, times, sub, fine)
    states = np.array([density_to_bloch(lv.unvec(v), basis) for v in raw])
    fid = _reference_fidelity(states, times, reference)
    densities = np.array([lv.unvec(v) for v in raw]) if keep_densities else None
    return SimulationRun(times=times, states=states, fidelity=fid, schedule=schedule,
                         densities=densities)


def _reference_fidelity(states, times, reference):
    if reference is None:
        return None
    if isinstance(reference, TrajectorySpec):
        ref = lambda t: reference.evaluate(t)[0]
    else:
        ref = reference
    return np.array([fidelity_bloch(states[i], ref(t)) for i, t in enumerate(times)])


def adiabatic_reference_run(env: LorentzianEnvironment, n0: float, omega_c: float,
                            t_final: float, times: np.ndarray,
                            min_steps: int = DEFAULT_MIN_STEPS) -> SimulationRun:
    """Reference protocol: omega_x follows the bare ramp, omega_y = 0, N = n0.

    The fidelity column compares against the instantaneous steady state.
    """
    times = np.asarray(times, dtype=float)
    ramp = np.array([reference_ramp(omega_c, t_final, t) for t in times])
    schedule = ControlSchedule(times=times, omega_x=ramp, omega_y=np.zeros_like(ramp),
                               excitation=np.full_like(ramp, n0), protocol="xy")
    designed = tracking_trajectory(env, n0, omega_c, t_final)
    r0, _ = designed.evaluate(0.0)
    return integrate_bloch(schedule, env, r0, times, min_steps=min_steps,
                           reference=lambda t: steady_state_bloch(env, n0,
                                                                  reference_ramp(omega_c, t_final, t), t))


# ---------------------------------------------------------------------------
# fidelity


def fidelity_bloch(r1: np.ndarray, r2: np.ndarray) -> float:
    """Two-level Uhlmann fidelity from Bloch vectors.

    F = (1 + r1.r2 + sqrt((1 - |r1|^2)(1 - |r2|^2))) / 2.  Norms may exceed
    1 by integrator slack up to 2e-8; beyond that the state is unphysical.
    """
    out = []
    for r in (r1, r2):
        n2 = float(np.dot(r, r))
        if n2 > 1.0 + 2e-8:
            raise MalformedStateError(f"Bloch norm {np.sqrt(n2):.12f} exceeds 1")
        out.append(max(0.0, 1.0 - n2))
    val = 0.5 * (1.0 + float(np.dot(r1, r2)) + np.sqrt(out[0] * out[1]))
    return float(min(max(val, 0.0), 1.0 + 1e-12))


def fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2.

    Two-level inputs use the closed Bloch-vector formula; larger dimensions
    go through Hermitian eigendecompositions.

    Raises
    ------
    MalformedStateError
        If either state has an eigenvalue below -1e-8.
    """
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape == (2, 2):
        basis = _qubit_parts()[0]
        return fidelity_bloch(density_to_bloch(rho1, basis), density_to_bloch(rho2, basis))
    w1, v1 = np.linalg.eigh(rho1)
    if np.min(w1) < -1e-8 or np.min(np.linalg.eigvalsh(rho2)) < -1e-8:
        raise MalformedStateError("negative eigenvalue beyond tolerance; state unphysical")
    sqrt1 = (v1 * np.sqrt(np.clip(w1, 0.0, None))) @ v1.conj().T
    inner = sqrt1 @ rho2 @ sqrt1
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def integrate_density_general(hamiltonian_fun, channels, rho0: np.ndarray,
                              times: np.ndarray, basis,
                              min_steps: int = DEFAULT_MIN_STEPS) -> np.ndarray:
    """Kronecker-form integration for any SU(N) setup with callable coefficients.

    ``hamiltonian_fun(t)`` returns a HamiltonianSpec; channel rates and
    controls may be callables.  Returns the density matrices on the output
    grid.  Slower than the two-level path (the supermatrix is assembled at
    every stage) but dimension-agnostic.
    """
    times = np.asarray(times, dtype=float)
    fine, sub = _fine_grid(times, min_steps)
    zero = np.zeros(basis.dimension ** 2, dtype=complex)
    supers = [lv.kron_liouvillian(hamiltonian_fun(t), channels, basis, t) for t in fine]
    raw = _rk4_affine(lambda i: (supers[i], zero),
                      lv.vec(np.asarray(rho0, dtype=complex)), times, sub, fine)
    return np.array([lv.unvec(v) for v in raw])


def density_run_from_bloch(schedule: ControlSchedule, env: LorentzianEnvironment,
                           r0: np.ndarray, times: np.ndarray,
                           min_steps: int = DEFAULT_MIN_STEPS, reference=None,
                           keep_densities: bool = False) -> SimulationRun:
    """Convenience wrapper: density-form run started from a Bloch vector."""
    basis = _qubit_parts()[0]
    return integrate_density(schedule, env, bloch_to_density(np.asarray(r0, float), basis),
                             times, min_steps=min_steps, reference=reference,
                             keep_densities=keep_densities)
