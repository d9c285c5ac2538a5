"""Built-in oracle suites for quick integrity checks of an installed build."""

import dataclasses

import numpy as np

from . import liouvillian as lv
from .controls import (SIGMA_MINUS_SHAPE, SIGMA_PLUS_SHAPE, assemble_control_system,
                       solve_controls, two_level_controls)
from .environment import LorentzianEnvironment, propagator_u
from .sun_algebra import build_basis, density_to_bloch, random_bloch_vector, structure_constants

__all__ = ["run_selfcheck"]


def _suite_liouvillian(perturb_f: float) -> float:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for dim in (2, 3):
        basis = build_basis(dim)
        tensors = structure_constants(basis)
        if perturb_f:
            tensors = dataclasses.replace(tensors, f=tensors.f + perturb_f)
        n = dim * dim - 1
        for _ in range(50):
            ham = lv.HamiltonianSpec(rng.normal(size=dim * dim))
            chans = [lv.LindbladChannel(shape=rng.normal(size=n) + 1j * rng.normal(size=n),
                                        rate=rng.normal())
                     for _ in range(int(rng.integers(1, 4)))]
            comp = lv.assemble_components(ham, chans, tensors)
            sup = lv.kron_liouvillian(ham, chans, basis)
            r = random_bloch_vector(dim, rng, 0.9 / np.sqrt(dim))
            rho = (np.eye(dim) + 0j) / dim
            rho += np.tensordot(r * np.sqrt(dim * (dim - 1) / 2), basis.traceless(), axes=1) / dim
            image = lv.unvec(sup @ lv.vec(rho)) + np.eye(dim) / dim
            worst = max(worst, float(np.max(np.abs(comp.apply(r)
                                                   - density_to_bloch(image, basis)))))
    return worst


def _suite_propagator() -> float:
    from scipy.integrate import solve_ivp
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        env = LorentzianEnvironment(lam=rng.uniform(0.05, 5.0),
                                    cavity_detuning=rng.uniform(-1, 1),
                                    drive_detuning=rng.uniform(-1, 1))
        grid = np.linspace(0.0, 10.0, 201)
        f0 = 0.5 * env.gamma0 * env.lam
        mu = env.lam + 1j * (env.drive_detuning - env.cavity_detuning)

        def rhs(t, y):
            u, z = y[0] + 1j * y[1], y[2] + 1j * y[3]
            du = -1j * env.drive_detuning * u - z
            dz = f0 * u - mu * z
            return [du.real, du.imag, dz.real, dz.imag]

        sol = solve_ivp(rhs, (0.0, 10.0), [1.0, 0.0, 0.0, 0.0], t_eval=grid,
                        rtol=1e-11, atol=1e-13, method="DOP853")
        worst = max(worst, float(np.max(np.abs(propagator_u(env, grid)
                                               - (sol.y[0] + 1j * sol.y[1])))))
    return worst


def _suite_solver() -> float:
    rng = np.random.default_rng(11)
    basis = build_basis(2)
    tensors = structure_constants(basis)
    worst = 0.0
    for _ in range(100):
        r = random_bloch_vector(2, rng, 0.95)
        while abs(r[2]) < 0.1:
            r = random_bloch_vector(2, rng, 0.95)
        rdot = rng.normal(size=3)
        gam = rng.uniform(0.1, 2.0)
        shift = rng.normal()
        closed = np.array(two_level_controls(r, rdot, gam, shift))
        channels = [
            lv.LindbladChannel(SIGMA_MINUS_SHAPE, rate=gam, control_index=None),
            lv.LindbladChannel(SIGMA_MINUS_SHAPE, rate=gam, control_index=0),
            lv.LindbladChannel(SIGMA_PLUS_SHAPE, rate=gam, control_index=0),
        ]
        drift = lv.HamiltonianSpec([shift / 2, 0.0, 0.0, shift / 2])
        system = assemble_control_system(r, rdot, (1, 2), channels, tensors, drift=drift)
        generic = solve_controls(system).values
        worst = max(worst, float(np.max(np.abs(generic - closed))))
    return worst


def run_selfcheck(perturb_f: float = 0.0, stream=None) -> int:
    """Run the oracle suites and print one pass/fail line each.

    ``perturb_f`` injects a uniform offset into the structure constants
    before the equivalence suite (a fault-injection hook for testing the
    selfcheck itself).  Returns 0 if every suite passes, 1 otherwise.
    """
    import sys
    stream = stream or sys.stdout
    suites = [
        ("liouvillian component form vs kronecker oracle", lambda: _suite_liouvillian(perturb_f), 1e-10),
        ("propagator closed form vs integro-differential oracle", _suite_propagator, 1e-6),
        ("closed-form controls vs generic linear solve", _suite_solver, 1e-9),
    ]
    failures = 0
    for name, fun, tol in suites:
        try:
            worst = fun()
            ok = worst < tol
        except Exception as exc:  # a crashed suite is a failure, not an abort
            print(f"FAIL {name}: raised {type(exc).__name__}: {exc}", file=stream)
            failures += 1
            continue
        verdict = "PASS" if ok else "FAIL"
        print(f"{verdict} {name}: worst deviation {worst:.3e} (tolerance {tol:g})", file=stream)
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1
