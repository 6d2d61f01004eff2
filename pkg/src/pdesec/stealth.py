"""Stealthy-attack synthesis: the boundary-output inverse source problem.

Given the plant, an initial condition phi1 and a target boundary trajectory
g(t), the attack delta(t) that makes the measured output equal g solves a
Volterra integral equation of the first kind,

    int_0^t delta(tau) b(t, tau) dtau = abar(t),
    abar(t) = g(t) - sum_n (-1)^n phi_n e^{lambda_n t},
    b(t, tau) = sum_n (-1)^n d_n e^{lambda_n (t - tau)},

which differentiates into a second-kind equation with constant diagonal
b(t, t) = D_a(1) and convolution kernel K(t, tau) = -b_t(t, tau)/b(t, t).
Three solvers are provided: product-trapezoid forward substitution for the
second-kind form (reference), a Liouville-Neumann resolvent sum (cross
check), and Tikhonov-regularized least squares on the first-kind form
(stable under data perturbations).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .spectral import (
    ModalBasis,
    ModalCoefficients,
    SampledSignal,
    forward_solve,
)

__all__ = [
    "AttackSignal",
    "StealthProblem",
    "VolterraSystem",
    "DegenerateKernelError",
    "IncompatibleTargetError",
    "assemble_volterra",
    "solve_volterra2",
    "NeumannResult",
    "neumann_series_solve",
    "tikhonov_solve",
    "operator_norm",
    "verify_stealth",
    "PerturbationReport",
    "perturbation_study",
    "blend_target",
    "write_attack_csv",
    "write_perturbation_csv",
]

AttackSignal = SampledSignal


class DegenerateKernelError(ValueError):
    """Raised when |D_a(1)| is too small for the second-kind reduction."""


class IncompatibleTargetError(ValueError):
    """Raised when g(0) != phi1(1), so no exact stealthy attack exists."""


@dataclass(frozen=True)
class StealthProblem:
    """Inverse-problem data: plant basis, attacked initial condition, target output.

    Any cosine series automatically has zero endpoint slope, so the smoothness
    assumption on phi1 is enforced by the representation itself; validation
    checks the compatibility g(0) = phi1(1) and the non-degeneracy D_a(1) != 0.
    """

    basis: ModalBasis
    phi1: ModalCoefficients
    Da: ModalCoefficients
    target: SampledSignal
    compat_tol: float = 1e-8
    degeneracy_tol: float = 1e-12

    def __post_init__(self):
        n = self.basis.n_modes + 1
        if self.phi1.coeffs.size != n or self.Da.coeffs.size != n:
            raise ValueError("phi1 and Da must match the basis mode count")
        b_diag = self.Da.boundary_value()
        if abs(b_diag) <= self.degeneracy_tol:
            raise DegenerateKernelError(
                f"D_a(1) = {b_diag:.3e} is (numerically) zero; the inverse problem is degenerate"
            )
        mismatch = abs(self.target(self.target.t0) - self.phi1.boundary_value())
        scale = max(1.0, abs(self.phi1.boundary_value()))
        if mismatch > self.compat_tol * scale:
            raise IncompatibleTargetError(
                f"target g(0) differs from phi1(1) by {mismatch:.3e}; "
                "blend the target first (see blend_target)"
            )


@dataclass(frozen=True)
class VolterraSystem:
    """Discretized first/second-kind Volterra data on a uniform time grid.

    Both b and K depend only on t - tau (all modes decay exponentially from
    the same eigenvalues), so they are stored as lag profiles; the full
    lower-triangular matrices are materialized on demand.
    """

    t_grid: np.ndarray
    a: np.ndarray
    a_dot: np.ndarray
    b_diag: float
    b_lag: np.ndarray
    b_half_lag: np.ndarray
    kernel_lag: np.ndarray
    m: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def n(self) -> int:
        return self.t_grid.size

    def _lag_matrix(self, profile: np.ndarray) -> np.ndarray:
        idx = np.arange(self.n)
        lag = idx[:, None] - idx[None, :]
        out = np.where(lag >= 0, profile[np.clip(lag, 0, self.n - 1)], 0.0)
        return out

    def K(self) -> np.ndarray:
        """Lower-triangular kernel matrix K(t_i, t_j), j <= i."""
        return self._lag_matrix(self.kernel_lag)

    def b_matrix(self) -> np.ndarray:
        """Lower-triangular first-kind kernel b(t_i, t_j), j <= i."""
        return self._lag_matrix(self.b_lag)

    def trapezoid_row_weights(self) -> np.ndarray:
        """W[i, j]: trapezoid weights for int_0^{t_i}, zero above the diagonal."""
        n, dt = self.n, self.dt
        W = np.tril(np.full((n, n), dt))
        W[:, 0] = dt / 2.0
        W[np.arange(n), np.arange(n)] = dt / 2.0
        W[0, 0] = 0.0
        return W


def _series_sum(signs, coeffs, lam, t, weight=None):
    """sum_n signs_n coeffs_n e^{lam_n t} (optionally weighted by lam_n)."""
    w = signs * coeffs if weight is None else signs * coeffs * weight
    # lam * t is <= 0 for decaying modes; exp underflow is harmless
    return np.exp(np.outer(t, lam)) @ w


def _central_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dt)
    return out


def assemble_volterra(problem: StealthProblem, dt: float, horizon: float) -> VolterraSystem:
    """Build abar, its derivative, the lag kernels and m on a uniform grid."""
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    n_steps = int(round(horizon / dt))
    if n_steps < 2:
        raise ValueError("horizon must span at least two steps")
    t = dt * np.arange(n_steps + 1)
    if problem.target.t_end < t[-1] - 1e-9 * dt:
        raise ValueError("target signal does not cover the horizon")

    lam = problem.basis.eigenvalues
    signs = problem.basis.signs
    phi = problem.phi1.coeffs
    d = problem.Da.coeffs

    g = np.asarray(problem.target(t), dtype=float)
    g_dot = _central_derivative(g, dt)

    a = g - _series_sum(signs, phi, lam, t)
    a_dot = g_dot - _series_sum(signs, phi, lam, t, weight=lam)

    b_diag = float(signs @ d)
    if abs(b_diag) <= problem.degeneracy_tol:
        raise DegenerateKernelError("D_a(1) vanishes; kernel diagonal is zero")
    b_lag = _series_sum(signs, d, lam, t)
    b_half_lag = _series_sum(signs, d, lam, t[:-1] + dt / 2.0)
    bt_lag = _series_sum(signs, d, lam, t, weight=lam)
    kernel_lag = -bt_lag / b_diag
    m = a_dot / b_diag
    return VolterraSystem(
        t_grid=t,
        a=a,
        a_dot=a_dot,
        b_diag=b_diag,
        b_lag=b_lag,
        b_half_lag=b_half_lag,
        kernel_lag=kernel_lag,
        m=m,
    )


def solve_volterra2(sys: VolterraSystem, diag_tol: float = 1e-10) -> AttackSignal:
    """Reference solver: product trapezoid plus forward substitution.

    Row i reads (1 - dt/2 K_ii) delta_i = m_i + sum_{j<i} w_j K_ij delta_j
    with trapezoid weights w_0 = dt/2 and w_j = dt for interior j.
    """
    n, dt = sys.n, sys.dt
    K_ii = sys.kernel_lag[0]
    diag = 1.0 - 0.5 * dt * K_ii
    if abs(diag) < diag_tol:
        raise ValueError("discrete diagonal nearly singular; reduce the time step")
    delta = np.empty(n)
    delta[0] = sys.m[0]
    w = np.full(n, dt)
    w[0] = dt / 2.0
    wd = np.empty(n)  # running w_j * delta_j
    wd[0] = w[0] * delta[0]
    rev = sys.kernel_lag[::-1]
    for i in range(1, n):
        acc = rev[n - 1 - i : n - 1] @ wd[:i]  # kernel_lag[i-j] against w_j delta_j
        delta[i] = (sys.m[i] + acc) / diag
        wd[i] = w[i] * delta[i]
    return AttackSignal(0.0, dt, delta)


@dataclass(frozen=True)
class NeumannResult:
    """Partial resolvent sum together with the per-term increment norms."""

    signal: AttackSignal
    increment_norms: np.ndarray

    @property
    def last_increment(self) -> float:
        return float(self.increment_norms[-1])


def _l2(values: np.ndarray, dt: float) -> float:
    return float(np.sqrt(np.trapezoid(values * values, dx=dt)))


def neumann_series_solve(sys: VolterraSystem, n_terms: int) -> NeumannResult:
    """Liouville-Neumann partial sum delta = m + sum_{k<=n_terms} K^k m.

    Convergence is reported through the L2 norms of the successive terms;
    a non-decaying tail signals non-convergence but never raises.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    KW = sys.K() * sys.trapezoid_row_weights()
    u = sys.m.copy()
    total = sys.m.copy()
    norms = []
    for _ in range(n_terms):
        u = KW @ u
        total += u
        norms.append(_l2(u, sys.dt))
    return NeumannResult(AttackSignal(0.0, sys.dt, total), np.asarray(norms))


def _first_kind_matrix(sys: VolterraSystem) -> np.ndarray:
    """Midpoint product rule for the first-kind operator.

    Row i (for t_i, i = 1..n-1) integrates against unknowns at the step
    midpoints: (T delta)_i = dt * sum_{j<i} b(t_i - t_{j+1/2}) delta_{j+1/2}.
    The midpoint rule is the classical stable discretization of first-kind
    Volterra equations; product trapezoid admits an alternating parasitic
    mode that the regularized inverse amplifies badly.
    """
    n = sys.n
    m = n - 1
    T = np.zeros((m, m))
    prof = sys.b_half_lag
    for i in range(1, n):
        T[i - 1, :i] = prof[i - 1 :: -1]
    return T * sys.dt


def _midpoints_to_nodes(mid: np.ndarray) -> np.ndarray:
    """Parabolic reconstruction of node values from step-midpoint values."""
    m = mid.size
    if m < 3:
        raise ValueError("need at least three steps for node reconstruction")
    out = np.empty(m + 1)
    out[0] = (15.0 * mid[0] - 10.0 * mid[1] + 3.0 * mid[2]) / 8.0
    out[1 : m - 1] = (3.0 * mid[: m - 2] + 6.0 * mid[1 : m - 1] - mid[2:m]) / 8.0
    out[m - 1] = (-mid[m - 3] + 6.0 * mid[m - 2] + 3.0 * mid[m - 1]) / 8.0
    out[m] = (3.0 * mid[m - 3] - 10.0 * mid[m - 2] + 15.0 * mid[m - 1]) / 8.0
    return out


def operator_norm(sys: VolterraSystem) -> float:
    """Spectral norm of the discretized first-kind operator."""
    return float(np.linalg.norm(_first_kind_matrix(sys), 2))


def tikhonov_solve(sys: VolterraSystem, gamma: float) -> AttackSignal:
    """Minimizer of ||T delta - abar||^2 + gamma ||delta||^2 (normal equations).

    T is the midpoint-product discretization of the first-kind Volterra
    operator; gamma > 0 makes the normal matrix positive definite, solved by
    a dense Cholesky factorization.  The midpoint unknowns are mapped back to
    the node grid by parabolic interpolation.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    T = _first_kind_matrix(sys)
    A = T.T @ T
    A[np.diag_indices_from(A)] += gamma
    rhs = T.T @ sys.a[1:]
    mid = cho_solve(cho_factor(A), rhs)
    return AttackSignal(0.0, sys.dt, _midpoints_to_nodes(mid))


def verify_stealth(
    delta: AttackSignal,
    problem: StealthProblem,
    dt: float,
    horizon: float | None = None,
) -> float:
    """Forward-simulate (phi1, delta) and return max_t |y(t) - g(t)|."""
    if horizon is None:
        horizon = delta.t_end
    traj = forward_solve(
        problem.basis,
        problem.phi1,
        horizon=horizon,
        dt=dt,
        delta=delta,
        Da=problem.Da,
    )
    g = np.asarray(problem.target(traj.times), dtype=float)
    return float(np.max(np.abs(traj.boundary() - g)))


@dataclass(frozen=True)
class PerturbationReport:
    """Continuous-dependence study of the regularized solution."""

    gamma: float
    diff_delta: float
    diff_a: float
    bound: float
    bound_ratio: float
    satisfied: bool


def perturbation_study(
    problem: StealthProblem,
    phi_tilde: ModalCoefficients,
    gamma: float,
    dt: float | None = None,
    horizon: float | None = None,
    strict: bool = True,
) -> PerturbationReport:
    """Compare regularized attacks for nominal and perturbed initial data.

    Checks the continuity bound ||delta_g - delta_g~||_{L2} <=
    gamma^{-1} ||abar - abar~||_{L2}; with strict=True a violation raises.
    """
    if dt is None:
        dt = problem.target.dt
    if horizon is None:
        horizon = problem.target.t_end
    tilde_problem = StealthProblem(
        basis=problem.basis,
        phi1=phi_tilde,
        Da=problem.Da,
        target=blend_target(problem.target, phi_tilde.boundary_value())[0],
        compat_tol=problem.compat_tol,
        degeneracy_tol=problem.degeneracy_tol,
    )
    sys_0 = assemble_volterra(problem, dt, horizon)
    sys_1 = assemble_volterra(tilde_problem, dt, horizon)
    d0 = tikhonov_solve(sys_0, gamma)
    d1 = tikhonov_solve(sys_1, gamma)
    diff_delta = _l2(d1.values - d0.values, dt)
    diff_a = _l2(sys_1.a - sys_0.a, dt)
    bound = diff_a / gamma
    ratio = 0.0 if bound == 0.0 else diff_delta / bound
    ok = diff_delta <= bound * (1.0 + 1e-12) + 1e-300
    if strict and not ok:
        raise AssertionError(
            f"continuity bound violated: {diff_delta:.3e} > {bound:.3e}"
        )
    return PerturbationReport(
        gamma=float(gamma),
        diff_delta=diff_delta,
        diff_a=diff_a,
        bound=bound,
        bound_ratio=ratio,
        satisfied=ok,
    )


def blend_target(
    g: SampledSignal, boundary_value: float, kappa: float = 50.0
) -> tuple[SampledSignal, float]:
    """Make a target compatible with phi1(1) by an exponential start-up blend.

    Returns g~(t) = g(t) + (phi1(1) - g(0)) e^{-kappa t} and the blend
    amplitude.  When the original target is already compatible the blend
    amplitude is zero and g is returned unchanged except for roundoff.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    t = g.times
    mismatch = boundary_value - float(g.values[0])
    values = g.values + mismatch * np.exp(-kappa * (t - t[0]))
    return SampledSignal(g.t0, g.dt, values), mismatch


def write_attack_csv(path, delta: AttackSignal) -> None:
    """Attack trace with header t,delta."""
    with open(path, "w", newline="") as fh:
        fh.write("t,delta\n")
        for t, v in zip(delta.times, delta.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def write_perturbation_csv(path, reports: list[PerturbationReport]) -> None:
    """Perturbation-study rows with header gamma,diff_delta,diff_a,bound_ratio."""
    with open(path, "w", newline="") as fh:
        fh.write("gamma,diff_delta,diff_a,bound_ratio\n")
        for r in reports:
            fh.write(
                f"{r.gamma!r},{r.diff_delta!r},{r.diff_a!r},{r.bound_ratio!r}\n"
            )
