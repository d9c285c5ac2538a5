"""Reverse engineering of control schedules from designed Bloch trajectories.

Given (r(t), rdot(t)) the two-level closed forms solve the Bloch equations

    rx' =  2 Oy rz - s0 ry - (2N+1) G rx
    ry' =  s0 rx - 2 Ox rz - (2N+1) G ry
    rz' =  2 Ox ry - 2 Oy rx - 2 G ((2N+1) rz + 1)

for (Ox, Oy, N) given the reservoir rate G = Gamma0(t) and Lamb shift s0(t),
or for (Ox, Delta^R, N) in the detuning protocol (Oy = 0, s0 -> s0 + Delta^R).
The generic path assembles the same linear system for any SU(N) setup from
the structure tensors and solves it densely; closed forms and generic solve
cross-check each other.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .environment import LorentzianEnvironment, decay_and_shift
from .errors import InvalidInputError, NoUniqueSolutionError, SingularControlError
from .liouvillian import HamiltonianSpec, LindbladChannel, channel_drift, channel_matrix
from .sun_algebra import StructureTensors

__all__ = [
    "SIGMA_MINUS_SHAPE",
    "SIGMA_PLUS_SHAPE",
    "SINGULARITY_TOL",
    "ControlSystem",
    "ControlSolution",
    "ControlSchedule",
    "MarkovianReductionReport",
    "two_level_controls",
    "two_level_controls_detuning",
    "assemble_control_system",
    "solve_controls",
    "markovian_reduction_check",
    "schedule_from_trajectory",
]

SIGMA_MINUS_SHAPE = np.array([0.5, -0.5j, 0.0])
SIGMA_PLUS_SHAPE = np.array([0.5, 0.5j, 0.0])

SINGULARITY_TOL = 1e-8
_CONDITION_LIMIT = 1e12


def two_level_controls(r: np.ndarray, rdot: np.ndarray, decay_rate: float,
                       lamb_shift: float, tol: float = SINGULARITY_TOL
                       ) -> tuple[float, float, float]:
    """Closed-form (Omega_x^R, Omega_y^R, N) driving the state along (r, rdot).

    Raises
    ------
    SingularControlError
        If |r_z| < tol (field singularity) or the excitation number has no
        finite value because the decay rate vanishes while r.rdot + 2 G r_z
        does not.
    """
    rx, ry, rz = r
    g = decay_rate
    if abs(rz) < tol:
        raise SingularControlError(f"coherent controls singular: |r_z| = {abs(rz):.3e} < {tol}")
    rr = float(np.dot(r, rdot))
    dd = float(np.dot(r, r)) + rz * rz
    if abs(g) < tol:
        raise SingularControlError(
            f"excitation number singular: decay rate {g:.3e} vanishes "
            f"(r.rdot + 2 G r_z = {rr + 2 * g * rz:.3e})")
    back = rr + 2.0 * g * rz
    omega_x = (dd * (rx * lamb_shift - rdot[1]) + back * ry) / (2.0 * rz * dd)
    omega_y = (dd * (ry * lamb_shift + rdot[0]) - back * rx) / (2.0 * rz * dd)
    excitation = -(2.0 * g * rz + rr + g * dd) / (2.0 * g * dd)
    return float(omega_x), float(omega_y), float(excitation)


def two_level_controls_detuning(r: np.ndarray, rdot: np.ndarray, decay_rate: float,
                                lamb_shift: float, tol: float = SINGULARITY_TOL
                                ) -> tuple[float, float, float]:
    """Closed-form (Omega_x^R, Delta^R, N) for the protocol without Omega_y^R.

    Singular where r_y vanishes; the excitation-number expression is the
    same rational function as in the two-field protocol.
    """
    rx, ry, rz = r
    g = decay_rate
    if abs(ry) < tol:
        raise SingularControlError(f"detuning protocol singular: |r_y| = {abs(ry):.3e} < {tol}")
    rr = float(np.dot(r, rdot))
    dd = float(np.dot(r, r)) + rz * rz
    if abs(g) < tol:
        raise SingularControlError(
            f"excitation number singular: decay rate {g:.3e} vanishes "
            f"(r.rdot + 2 G r_z = {rr + 2 * g * rz:.3e})")
    perp = rx * rx + ry * ry
    perp_dot = 2.0 * (rx * rdot[0] + ry * rdot[1])
    omega_x = ((2.0 * g + rdot[2]) * perp - perp_dot * rz) / (2.0 * ry * dd)
    detuning_r = -lamb_shift + (rx * (ry * rdot[1] + rz * rdot[2]) + 2.0 * g * rx * rz
                                - rdot[0] * (ry * ry + 2.0 * rz * rz)) / (ry * dd)
    excitation = -(2.0 * g * rz + rr + g * dd) / (2.0 * g * dd)
    return float(omega_x), float(detuning_r), float(excitation)


# ---------------------------------------------------------------------------
# generic linear system


@dataclass(frozen=True)
class ControlSystem:
    """Linear system  coherent @ c + incoherent @ ctilde = rhs.

    ``coherent`` has one column per selected Hamiltonian coefficient,
    ``incoherent`` one column per control group (channels sharing a
    ``control_index`` are summed, each weighted by its bare rate at t).
    Drift terms (fixed Hamiltonian part and channels with
    ``control_index=None``) are already subtracted from ``rhs``.
    """

    coherent: np.ndarray
    incoherent: np.ndarray
    rhs: np.ndarray
    coherent_indices: tuple[int, ...]

    @property
    def matrix(self) -> np.ndarray:
        return np.hstack([self.coherent, self.incoherent])

    @property
    def n_unknowns(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ControlSolution:
    values: np.ndarray
    residual: float
    condition: float

    @property
    def ill_conditioned(self) -> bool:
        return self.condition > _CONDITION_LIMIT


def assemble_control_system(r: np.ndarray, rdot: np.ndarray,
                            coherent_indices: Sequence[int],
                            channels: Sequence[LindbladChannel],
                            tensors: StructureTensors, t: float = 0.0,
                            drift: HamiltonianSpec | None = None) -> ControlSystem:
    """Assemble the control linear system at one instant.

    Selected coherent coefficients and channel control multipliers are the
    unknowns; everything else is drift.  Columns are exact contractions of
    the structure tensors, so the residual of a candidate control vector
    equals the residual of the component-form master equation.
    """
    r = np.asarray(r, dtype=float)
    rdot = np.asarray(rdot, dtype=float)
    n = tensors.dimension ** 2 - 1
    if r.shape != (n,) or rdot.shape != (n,):
        raise InvalidInputError(f"state and derivative must have length {n}")
    cols_c = np.empty((n, len(coherent_indices)))
    for col, k in enumerate(coherent_indices):
        if not 1 <= k <= n:
            raise InvalidInputError(f"coherent control index {k} outside 1..{n}")
        cols_c[:, col] = r @ tensors.f[k - 1]
    groups = sorted({ch.control_index for ch in channels if ch.control_index is not None})
    cols_i = np.zeros((n, len(groups)))
    rhs = rdot.copy()
    for ch in channels:
        rate = ch.rate(t) if callable(ch.rate) else ch.rate
        contrib = rate * (channel_matrix(ch.shape, tensors) @ r + channel_drift(ch.shape, tensors))
        if ch.control_index is None:
            ctrl = ch.control(t) if callable(ch.control) else ch.control
            rhs -= ctrl * contrib
        else:
            cols_i[:, groups.index(ch.control_index)] += contrib
    if drift is not None:
        c = drift.coefficients
        rhs -= np.einsum("k,kji,j->i", c[1:], tensors.f, r)
    return ControlSystem(coherent=cols_c, incoherent=cols_i, rhs=rhs,
                         coherent_indices=tuple(coherent_indices))


def solve_controls(system: ControlSystem) -> ControlSolution:
    """Solve the assembled system densely.

    Raises
    ------
    InvalidInputError
        On non-finite entries.
    NoUniqueSolutionError
        If the matrix is rank deficient; the message names the deficient
        direction (right-singular vector of the near-zero singular value).
    """
    a = system.matrix
    b = system.rhs
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("control system contains non-finite entries")
    if a.size == 0:
        return ControlSolution(values=np.zeros(0), residual=float(np.linalg.norm(b)),
                               condition=0.0)
    u, sing, vt = np.linalg.svd(a, full_matrices=False)
    smax = sing[0] if sing.size else 0.0
    rank_tol = max(a.shape) * np.finfo(float).eps * smax
    if smax == 0.0 or sing[-1] <= max(rank_tol, 1e-13 * smax):
        direction = vt[-1]
        raise NoUniqueSolutionError(
            "control system is singular; deficient direction "
            f"{np.array2string(direction, precision=6)} over unknowns "
            f"(coherent {system.coherent_indices} + {system.incoherent.shape[1]} incoherent)")
    x = vt.T @ ((u.T @ b) / sing)
    residual = float(np.linalg.norm(a @ x - b))
    if residual > 1e-8 * max(1.0, float(np.linalg.norm(b))):
        raise NoUniqueSolutionError(
            f"control system is inconsistent: least-squares residual {residual:.3e}; "
            "the requested trajectory is not reachable with the selected controls")
    return ControlSolution(values=x, residual=residual, condition=float(smax / sing[-1]))


# ---------------------------------------------------------------------------
# Markovian reduction


@dataclass(frozen=True)
class MarkovianReductionReport:
    identity_residual: float
    substitution_residual: float
    omega_x: float
    omega_y: float
    excitation: float


def markovian_reduction_check(r: np.ndarray, rdot: np.ndarray,
                              gamma0: float) -> MarkovianReductionReport:
    """Check the Markovian-limit identity of the closed-form controls.

    With s0 = 0 and G = gamma0, the solved excitation number satisfies
    2 G r_z + r.rdot = -(2N+1) (r^2 + r_z^2) G, and substituting it reduces
    the fields to Ox = -(ry' + (2N+1) G ry) / (2 rz),
    Oy = (rx' + (2N+1) G rx) / (2 rz).
    """
    omega_x, omega_y, excitation = two_level_controls(r, rdot, gamma0, 0.0)
    rr = float(np.dot(r, rdot))
    dd = float(np.dot(r, r)) + r[2] ** 2
    identity = 2.0 * gamma0 * r[2] + rr + (2.0 * excitation + 1.0) * dd * gamma0
    g_eff = (2.0 * excitation + 1.0) * gamma0
    ox_sub = -(rdot[1] + g_eff * r[1]) / (2.0 * r[2])
    oy_sub = (rdot[0] + g_eff * r[0]) / (2.0 * r[2])
    sub_res = max(abs(ox_sub - omega_x), abs(oy_sub - omega_y))
    return MarkovianReductionReport(identity_residual=abs(identity),
                                    substitution_residual=sub_res,
                                    omega_x=omega_x, omega_y=omega_y,
                                    excitation=excitation)


# ---------------------------------------------------------------------------
# sampled schedules


@dataclass(frozen=True)
class ControlSchedule:
    """Time-sampled control parameters with cubic interpolation between samples.

    ``protocol`` is "xy" (omega_x, omega_y, excitation) or "x-detuning"
    (omega_x, detuning_r, excitation).
    """

    times: np.ndarray
    omega_x: np.ndarray
    excitation: np.ndarray
    omega_y: np.ndarray | None = None
    detuning_r: np.ndarray | None = None
    protocol: str = "xy"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise InvalidInputError("schedule times must be strictly increasing")
        for name in ("omega_x", "omega_y", "detuning_r", "excitation"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != t.shape:
                raise InvalidInputError(f"schedule field {name} must match the time grid")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"schedule field {name} contains non-finite values")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "times", t)

    @cached_property
    def _splines(self):
        fields = {"omega_x": self.omega_x, "excitation": self.excitation}
        if self.omega_y is not None:
            fields["omega_y"] = self.omega_y
        if self.detuning_r is not None:
            fields["detuning_r"] = self.detuning_r
        return {k: CubicSpline(self.times, v) for k, v in fields.items()}

    def value(self, name: str, t):
        return self._splines[name](np.clip(t, self.times[0], self.times[-1]))

    @property
    def t_final(self) -> float:
        return float(self.times[-1])


def schedule_from_trajectory(trajectory, env: LorentzianEnvironment, times: np.ndarray,
                             protocol: str = "xy") -> ControlSchedule:
    """Solve the closed-form controls along a designed trajectory.

    At samples on the singular locus that satisfy the regularity conditions
    (the closed forms have finite one-sided limits) the value is taken as
    the average of evaluations at t -+ eps with eps = 1e-6 t_final; a
    genuinely singular sample propagates the error.
    """
    times = np.asarray(times, dtype=float)
    t_final = float(getattr(trajectory, "t_final", times[-1]))
    eps = 1e-6 * t_final
    solver = two_level_controls if protocol == "xy" else two_level_controls_detuning
    if protocol not in ("xy", "x-detuning"):
        raise InvalidInputError(f"unknown protocol {protocol!r}")

    def eval_at(t: float):
        r, rdot = trajectory.evaluate(t)
        g, s0 = decay_and_shift(env, t)
        return np.array(solver(r, rdot, g, s0))

    rows = np.empty((len(times), 3))
    for i, t in enumerate(times):
        try:
            rows[i] = eval_at(t)
        except SingularControlError:
            probes = [p for p in (t - eps, t + eps) if 0.0 <= p <= t_final and p != t]
            if not probes:
                raise
            rows[i] = np.mean([eval_at(p) for p in probes], axis=0)
    if protocol == "xy":
        return ControlSchedule(times=times, omega_x=rows[:, 0], omega_y=rows[:, 1],
                               excitation=rows[:, 2], protocol=protocol)
    return ControlSchedule(times=times, omega_x=rows[:, 0], detuning_r=rows[:, 1],
                           excitation=rows[:, 2], protocol=protocol)
