"""Numerically exact propagation oracle and propagator benchmarks.

The oracle integrates V'(t) = L(t) V(t) with an adaptive embedded
Runge-Kutta 5(4) pair.  Since L is T-periodic, V(mT + s) = V(s) V(T)^m, so
long stroboscopic grids are produced from a single one-period solve; direct
multi-period integration is available for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .linalg import SuperOp, devec, hs_norm, kron, matrix_exp, vec
from .models import PeriodicLindbladGenerator, liouvillian_fourier

DEVIATION_FLOOR = -16.0
DEFAULT_TOL = 1e-11


def _liouvillian_evaluator(gen: PeriodicLindbladGenerator):
    """Fast L(t) from precomputed Fourier components (avoids reassembling
    Kronecker products inside integrator callbacks)."""
    l0, comps = liouvillian_fourier(gen)
    l0_mat = l0.mat
    comp_mats = [(k, c.mat, s.mat) for k, c, s in comps]
    w = gen.omega

    def at(t: float) -> np.ndarray:
        out = l0_mat
        for k, c_mat, s_mat in comp_mats:
            out = out + c_mat * np.cos(k * w * t) + s_mat * np.sin(k * w * t)
        return out

    return at


class IntegratorFailure(RuntimeError):
    """The adaptive integrator could not reach the requested time."""


@dataclass(frozen=True)
class SubspaceProjector:
    """Projector P onto a state subspace and the induced map rho -> P rho P."""

    projector: np.ndarray
    super_mat: np.ndarray = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.projector, dtype=complex)
        defect = max(np.max(np.abs(p @ p - p)), np.max(np.abs(p - p.conj().T)))
        if defect > 1e-12 * max(1.0, hs_norm(p)):
            raise ValueError("projector must satisfy P^2 = P = P†")
        object.__setattr__(self, "projector", p)
        object.__setattr__(self, "super_mat", kron(p.T, p))

    @classmethod
    def lowest(cls, dim: int, k: int) -> "SubspaceProjector":
        p = np.zeros((dim, dim), dtype=complex)
        for i in range(k):
            p[i, i] = 1.0
        return cls(p)


def _integrate_propagator(gen: PeriodicLindbladGenerator, t_grid, tol: float):
    d2 = gen.dim**2
    y0 = np.eye(d2, dtype=complex).ravel()
    liou_at = _liouvillian_evaluator(gen)

    def rhs(t, y):
        return (liou_at(t) @ y.reshape(d2, d2)).ravel()

    t_grid = np.asarray(t_grid, dtype=float)
    t_end = float(t_grid[-1]) if t_grid[-1] > 0 else 1e-30
    sol = solve_ivp(
        rhs, (0.0, t_end), y0, method="RK45", rtol=tol, atol=tol,
        t_eval=t_grid, dense_output=False,
    )
    if not sol.success:
        raise IntegratorFailure(
            f"RK45 failed before t = {t_end:g}: {sol.message} "
            f"(nfev={sol.nfev}; the generator may be too stiff for an explicit pair)"
        )
    mats = [sol.y[:, i].reshape(d2, d2) for i in range(sol.y.shape[1])]
    info = {"nfev": int(sol.nfev), "n_steps": int(len(sol.t))}
    return mats, info


def exact_propagator(gen: PeriodicLindbladGenerator, t_grid, tol: float = DEFAULT_TOL,
                     compose: bool = True, return_info: bool = False):
    """Exact propagators V(t) on t_grid (ascending, starting at t >= 0).

    With compose=True the solver runs over a single period and uses
    periodicity, V(mT + s) = V(s) V(T)^m; with compose=False the grid is
    integrated directly.
    """
    if tol < 1e-13:
        raise ValueError("tolerance below 1e-13 is not resolvable in double precision")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be ascending and nonnegative")
    period = gen.period

    if not compose or t_grid[-1] <= period * (1 + 1e-12):
        mats, info = _integrate_propagator(gen, t_grid, tol)
    else:
        m_idx = np.floor(t_grid / period + 1e-12).astype(int)
        s_res = t_grid - m_idx * period
        # map residuals numerically equal to T back to (m+1, 0)
        wrap = s_res > period * (1 - 1e-12)
        m_idx[wrap] += 1
        s_res[wrap] = 0.0
        s_unique = np.unique(np.concatenate([s_res, [period]]))
        base_mats, info = _integrate_propagator(gen, s_unique, tol)
        lookup = {float(s): m for s, m in zip(s_unique, base_mats)}
        v_period = lookup[float(period)]
        powers = {0: np.eye(gen.dim**2, dtype=complex)}

        def period_power(m: int) -> np.ndarray:
            if m not in powers:
                k = max(p for p in powers if p <= m)
                acc = powers[k]
                while k < m:
                    acc = acc @ v_period
                    k += 1
                    powers[k] = acc
            return powers[m]

        mats = [lookup[float(s)] @ period_power(int(m)) for s, m in zip(s_res, m_idx)]
    props = [SuperOp(gen.dim, m) for m in mats]
    if return_info:
        return props, info
    return props


def generator_propagator(g: SuperOp, t: float) -> SuperOp:
    """exp(g t) for a time-independent effective generator."""
    return SuperOp(g.dim, matrix_exp(g.mat * t))


def density_trajectory(gen: PeriodicLindbladGenerator, rho0, t_grid,
                       tol: float = DEFAULT_TOL) -> list:
    """Integrate rho' = L(t) rho for a single initial state (cheaper than the
    full propagator; used e.g. by the truncation-convergence guard)."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = gen.dim
    liou_at = _liouvillian_evaluator(gen)

    def rhs(t, y):
        return liou_at(t) @ y

    t_grid = np.asarray(t_grid, dtype=float)
    sol = solve_ivp(rhs, (float(t_grid[0]), float(t_grid[-1])), vec(rho0),
                    method="RK45", rtol=tol, atol=tol, t_eval=t_grid)
    if not sol.success:
        raise IntegratorFailure(f"RK45 failed during state propagation: {sol.message}")
    return [devec(sol.y[:, i], d) for i in range(sol.y.shape[1])]


def deviation(v: SuperOp, v_approx: SuperOp, proj: SubspaceProjector | None = None) -> float:
    """log10 Hilbert-Schmidt norm of (v - v_approx), optionally restricted
    on both sides to a state subspace; floored at -16."""
    if v.dim != v_approx.dim:
        raise ValueError("dimension mismatch")
    diff = v.mat - v_approx.mat
    if proj is not None:
        diff = proj.super_mat @ diff @ proj.super_mat
    norm = hs_norm(diff)
    if norm <= 10.0**DEVIATION_FLOOR:
        return DEVIATION_FLOOR
    return max(float(np.log10(norm)), DEVIATION_FLOOR)


def choi_min_eig(v: SuperOp) -> float:
    """Minimum eigenvalue of the Choi matrix of v.

    Column-stacking rearrangement: J[(i,k),(j,l)] = V[(i,j),(k,l)].  The map
    is completely positive iff J is positive semidefinite.
    """
    d = v.dim
    s4 = v.mat.reshape(d, d, d, d)  # axes (j, i, l, k) of V[(i,j),(k,l)]
    j4 = s4.transpose(1, 3, 0, 2)  # axes (i, k, j, l)
    choi = j4.reshape(d * d, d * d)
    choi = 0.5 * (choi + choi.conj().T)
    return float(np.linalg.eigvalsh(choi)[0])


@dataclass(frozen=True)
class PropagatorSet:
    """Exact, Magnus, and corrected propagators on a common time grid."""

    times: np.ndarray
    exact: tuple  # SuperOp per time
    magnus: dict  # order -> tuple of SuperOp per time
    corrected: dict  # order -> tuple of SuperOp per time

    def validate(self, tol: float = 1e-9):
        families = [self.exact, *self.magnus.values(), *self.corrected.values()]
        for fam in families:
            for t, prop in zip(self.times, fam):
                ident = vec(np.eye(prop.dim)).conj()
                defect = np.linalg.norm(ident @ prop.mat - ident)
                if defect > tol:
                    raise AssertionError(
                        f"propagator at t={t:g} is not trace-preserving (defect {defect:.2e})"
                    )
                if t == 0:
                    eye_defect = hs_norm(prop.mat - np.eye(prop.dim**2))
                    if eye_defect > tol:
                        raise AssertionError("propagator at t=0 is not the identity")


def population_trace(propagators, rho0, observable) -> np.ndarray | dict:
    """Tr(observable @ V(t)[rho0]) per time per propagator.

    Accepts a PropagatorSet (returns {family: series}) or a plain sequence
    of SuperOp (returns an array).
    """
    rho0 = np.asarray(rho0, dtype=complex)
    observable = np.asarray(observable, dtype=complex)
    tr = np.trace(rho0)
    if abs(tr - 1.0) > 1e-9 or np.linalg.eigvalsh(0.5 * (rho0 + rho0.conj().T))[0] < -1e-9:
        raise ValueError("initial state must be a valid density matrix")

    def series(props):
        return np.array([float(np.trace(observable @ p(rho0)).real) for p in props])

    if isinstance(propagators, PropagatorSet):
        out = {"exact": series(propagators.exact)}
        for n, props in sorted(propagators.magnus.items()):
            out[f"magnus_{n}"] = series(props)
        for n, props in sorted(propagators.corrected.items()):
            out[f"corrected_{n}"] = series(props)
        return out
    return series(propagators)
