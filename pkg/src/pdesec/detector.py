"""Finite-difference co-simulation of plant and observer with detection logic.

The plant and the output-injection observer advance side by side on a
uniform grid with Crank-Nicolson time stepping (tridiagonal solve per
step); distributed sources, the output-error injection L(x) r(t) and the
boundary injection u_x(1) = L1 r(t) enter explicitly.  Each step records
the residual r = y - yhat, the transformed boundary error, the energy
functional W and the field norms needed to evaluate the four design
requirements against a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .backstepping import BacksteppingKernel, KernelParams, TransformOperator, observer_gains
from .lmi import DesignCertificate, InitialBounds
from .spectral import SampledSignal

__all__ = [
    "FdGrid",
    "UncertaintySpec",
    "Scenario",
    "SimulationTrace",
    "DivergenceError",
    "co_simulate",
    "h_norm",
    "calibrate_threshold",
    "DetectionResult",
    "detect",
    "RequirementCheck",
    "RequirementsReport",
    "evaluate_requirements",
    "initial_bounds_from_fields",
    "write_trace_csv",
]


class DivergenceError(RuntimeError):
    """A field magnitude exceeded the divergence guard during time stepping."""


DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class FdGrid:
    """Uniform grid on [0, 1] with n_nodes points and time step dt."""

    n_nodes: int
    dt: float

    def __post_init__(self):
        if self.n_nodes < 51:
            raise ValueError("need at least 51 nodes")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_nodes - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_nodes)


@dataclass(frozen=True)
class UncertaintySpec:
    """Per-step i.i.d. standard-normal field, scaled by amplitude.

    A seed is mandatory whenever the amplitude is positive so every run is
    reproducible.
    """

    amplitude: float = 0.0
    seed: int | None = None
    mode: str = "per-step-iid"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.amplitude > 0 and self.seed is None:
            raise ValueError("a seed is required when the uncertainty amplitude is positive")
        if self.mode != "per-step-iid":
            raise ValueError(f"unsupported uncertainty mode {self.mode!r}")


@dataclass(frozen=True)
class Scenario:
    """Everything one co-simulation needs.

    Fields phi/phi_hat/D/Da live on the simulation grid; delta carries the
    attack onset implicitly (zero before onset) with attack_onset kept as
    metadata for reports.
    """

    phi: np.ndarray
    phi_hat: np.ndarray
    D: np.ndarray
    Da: np.ndarray
    kernel: KernelParams
    horizon: float
    q: SampledSignal | None = None
    delta: SampledSignal | None = None
    attack_onset: float | None = None
    uncertainty: UncertaintySpec = UncertaintySpec()
    certificate: DesignCertificate | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "phi_hat", np.asarray(self.phi_hat, dtype=float))
        object.__setattr__(self, "D", np.asarray(self.D, dtype=float))
        object.__setattr__(self, "Da", np.asarray(self.Da, dtype=float))
        n = self.phi.size
        if any(a.size != n for a in (self.phi_hat, self.D, self.Da)):
            raise ValueError("phi, phi_hat, D and Da must share the grid")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        # the attack can only act where the nominal actuation acts
        bad = (np.abs(self.Da) > 0) & (np.abs(self.D) == 0)
        if np.any(bad):
            raise ValueError("Da must be supported inside the support of D")

    @property
    def has_attack(self) -> bool:
        return self.delta is not None and bool(np.any(self.delta.values != 0.0))

    @property
    def has_uncertainty(self) -> bool:
        return self.uncertainty.amplitude > 0


def h_norm(field, field_x=None) -> float:
    """Composite norm sqrt(|u(1)|^2 + ||u||^2 + ||u_x||^2) on a uniform grid.

    The derivative, when not supplied, is taken as one-sided differences on
    the grid cells and integrated by the midpoint rule.
    """
    u = np.asarray(field, dtype=float)
    if u.size < 3:
        raise ValueError("need at least three nodes")
    dx = 1.0 / (u.size - 1)
    l2sq = float(np.trapezoid(u * u, dx=dx))
    if field_x is None:
        du = np.diff(u) / dx
        seminormsq = float(np.sum(du * du) * dx)
    else:
        ux = np.asarray(field_x, dtype=float)
        seminormsq = float(np.trapezoid(ux * ux, dx=dx))
    return float(np.sqrt(u[-1] ** 2 + l2sq + seminormsq))


@dataclass
class SimulationTrace:
    """Per-step records of a co-simulation run."""

    t: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    r: np.ndarray
    psi1: np.ndarray
    W: np.ndarray
    norm_u: np.ndarray
    norm_ux: np.ndarray
    norm_eta_H: np.ndarray
    delta: np.ndarray
    flag: np.ndarray
    c: float
    Da_H: float
    uncertainty_amplitude: float
    has_attack: bool
    has_uncertainty: bool


def _banded(main: np.ndarray, upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    n = main.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = main
    ab[2, :-1] = lower
    return ab


def _tridiag_apply(main, upper, lower, v):
    out = main * v
    out[:-1] += upper * v[1:]
    out[1:] += lower * v[:-1]
    return out


def co_simulate(s: Scenario, g: FdGrid) -> SimulationTrace:
    """Advance plant and observer over [0, horizon] and record the trace.

    Crank-Nicolson handles diffusion and reaction implicitly; the signals
    q and delta are evaluated at the half step and the uncertainty field is
    redrawn each step.  Neumann ends are folded in with mirror ghost nodes;
    the observer's boundary injection u_x(1) = L1 r enters through the same
    ghost trick as the source 2 L1 r / dx at the last node.  The whole
    injection G r = (L + 2 L1/dx e_M)(y - uhat_M) is integrated implicitly
    in uhat (rank-one correction of the tridiagonal solve), because treating
    it explicitly limits the stable step to dt < ~dx/L1.
    """
    n = g.n_nodes
    dx, dt = g.dx, g.dt
    x = g.x
    if s.phi.size != n:
        raise ValueError("scenario fields do not match the grid")
    n_steps = int(round(s.horizon / dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")

    kernel = BacksteppingKernel(s.kernel)
    L, L1 = observer_gains(kernel, x)
    to_target = TransformOperator(kernel, n)

    alpha = s.kernel.alpha
    c = s.kernel.c
    main = np.full(n, -2.0 / dx**2 + alpha)
    upper = np.full(n - 1, 1.0 / dx**2)
    lower = np.full(n - 1, 1.0 / dx**2)
    upper[0] = 2.0 / dx**2  # mirror ghost at x = 0
    lower[-1] = 2.0 / dx**2  # mirror ghost at x = 1
    half = 0.5 * dt
    left = _banded(1.0 - half * main, -half * upper, -half * lower)
    r_main, r_upper, r_lower = 1.0 + half * main, half * upper, half * lower

    # injection vector: in-domain gain plus the boundary ghost contribution
    G = L.copy()
    G[-1] += 2.0 * L1 / dx
    w_corr = solve_banded((1, 1), left, half * G)
    corr_denom = 1.0 + w_corr[-1]

    amp = s.uncertainty.amplitude
    rng = np.random.default_rng(s.uncertainty.seed) if amp > 0 else None

    times = dt * np.arange(n_steps + 1)
    delta_vals = np.zeros(n_steps + 1)
    if s.delta is not None:
        delta_vals = np.asarray(s.delta(times), dtype=float)
    q_half = np.zeros(n_steps)
    d_half = np.zeros(n_steps)
    t_half = times[:-1] + half
    if s.q is not None:
        q_half = np.asarray(s.q(t_half), dtype=float)
    if s.delta is not None:
        d_half = np.asarray(s.delta(t_half), dtype=float)

    u = s.phi.copy()
    uh = s.phi_hat.copy()

    out = SimulationTrace(
        t=times,
        y=np.empty(n_steps + 1),
        y_hat=np.empty(n_steps + 1),
        r=np.empty(n_steps + 1),
        psi1=np.empty(n_steps + 1),
        W=np.empty(n_steps + 1),
        norm_u=np.empty(n_steps + 1),
        norm_ux=np.empty(n_steps + 1),
        norm_eta_H=np.zeros(n_steps + 1),
        delta=delta_vals,
        flag=np.zeros(n_steps + 1, dtype=bool),
        c=c,
        Da_H=h_norm(s.Da),
        uncertainty_amplitude=amp,
        has_attack=s.has_attack,
        has_uncertainty=s.has_uncertainty,
    )

    def record(k, u_k, uh_k):
        err = u_k - uh_k
        psi = to_target.to_target(err)
        dpsi = np.diff(psi) / dx
        out.y[k] = u_k[-1]
        out.y_hat[k] = uh_k[-1]
        out.r[k] = err[-1]
        out.psi1[k] = psi[-1]
        out.W[k] = (
            0.5 * c * psi[-1] ** 2
            + 0.5 * float(np.trapezoid(psi * psi, dx=dx))
            + 0.5 * float(np.sum(dpsi * dpsi) * dx)
        )
        out.norm_u[k] = float(np.sqrt(np.trapezoid(err * err, dx=dx)))
        derr = np.diff(err) / dx
        out.norm_ux[k] = float(np.sqrt(np.sum(derr * derr) * dx))

    record(0, u, uh)
    for k in range(n_steps):
        eta = amp * rng.standard_normal(n) if rng is not None else None
        if eta is not None:
            out.norm_eta_H[k] = h_norm(eta)
        y_old = u[-1]

        f_plant = s.D * q_half[k] + s.Da * d_half[k]
        if eta is not None:
            f_plant = f_plant + eta
        rhs = _tridiag_apply(r_main, r_upper, r_lower, u) + dt * f_plant
        u = solve_banded((1, 1), left, rhs)

        # observer: uhat' = A uhat + D q + G (y - uhat_M), with the uhat_M
        # feedback on both CN levels and y averaged over the step
        y_bar = 0.5 * (y_old + u[-1])
        rhs_h = (
            _tridiag_apply(r_main, r_upper, r_lower, uh)
            - half * G * uh[-1]
            + dt * (s.D * q_half[k] + G * y_bar)
        )
        z = solve_banded((1, 1), left, rhs_h)
        uh = z - w_corr * (z[-1] / corr_denom)

        peak = max(np.max(np.abs(u)), np.max(np.abs(uh)))
        if peak > DIVERGENCE_GUARD:
            raise DivergenceError(
                f"field magnitude {peak:.3e} exceeded {DIVERGENCE_GUARD:g} at t = {times[k + 1]:.6g}"
            )
        record(k + 1, u, uh)
    return out


def calibrate_threshold(s: Scenario, n_runs: int, g: FdGrid, safety: float = 1.1) -> float:
    """Threshold from seeded attack-free runs: max over runs and time of |r|.

    The attack is forced off; every run reuses the scenario with seed
    base + run index, and the maximum is inflated by the safety factor.
    The caller decides whether the calibration scenario starts the observer
    matched (the usual choice, so the threshold reflects the uncertainty
    response alone) or carries the initial error.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base_seed = s.uncertainty.seed if s.uncertainty.seed is not None else 0
    peak = 0.0
    for i in range(n_runs):
        spec = replace(s.uncertainty, seed=base_seed + i) if s.uncertainty.amplitude > 0 else s.uncertainty
        run = replace(s, delta=None, attack_onset=None, uncertainty=spec)
        trace = co_simulate(run, g)
        peak = max(peak, float(np.max(np.abs(trace.r))))
    return safety * peak


@dataclass(frozen=True)
class DetectionResult:
    detected: bool
    time: float | None
    index: int | None
    flags: np.ndarray


def detect(
    trace: SimulationTrace,
    eps_th: float,
    debounce: int = 3,
    raw: bool = False,
    arm_time: float = 0.0,
) -> DetectionResult:
    """First time |r| exceeds the threshold, debounced over consecutive samples.

    With raw=True the single-sample logic is used instead.  Samples before
    arm_time are ignored so the observer's own start-up transient (which the
    threshold, calibrated on matched initial states, does not cover) cannot
    trip the alarm.
    """
    if eps_th < 0:
        raise ValueError("eps_th must be nonnegative")
    over = np.abs(trace.r) > eps_th
    over &= trace.t >= arm_time
    need = 1 if raw else max(1, debounce)
    flags = np.zeros_like(over)
    run = 0
    hit = None
    for i, o in enumerate(over):
        run = run + 1 if o else 0
        if run >= need:
            hit = i - need + 1
            break
    if hit is None:
        return DetectionResult(False, None, None, flags)
    flags[hit:] = over[hit:]
    return DetectionResult(True, float(trace.t[hit]), int(hit), flags)


@dataclass(frozen=True)
class RequirementCheck:
    applicable: bool
    passed: bool | None
    detail: dict


@dataclass(frozen=True)
class RequirementsReport:
    """Pass/fail of the four design requirements against a certificate.

    Integral requirements are evaluated on the simulated horizon, a finite
    surrogate of the design statements' infinite integrals.
    """

    dr1: RequirementCheck
    dr2: RequirementCheck
    dr3: RequirementCheck
    dr4: RequirementCheck
    horizon: float

    @property
    def all_applicable_pass(self) -> bool:
        return all(
            c.passed for c in (self.dr1, self.dr2, self.dr3, self.dr4) if c.applicable
        )


def evaluate_requirements(
    trace: SimulationTrace, cert: DesignCertificate, startup_steps: int = 3
) -> RequirementsReport:
    k = cert.constants
    p = cert.params
    t = trace.t
    r2 = trace.r**2
    r0sq = r2[0]
    sl = slice(startup_steps, None)

    drive = trace.Da_H**2 * trace.delta**2 + trace.norm_eta_H**2
    sup_drive = float(np.max(drive))

    # DR1: pure decay envelope (only meaningful without inputs)
    dr1_applicable = not trace.has_attack and not trace.has_uncertainty
    env1 = k.K1 * np.exp(-k.K2 * t[sl]) * r0sq
    dr1_pass = bool(np.all(r2[sl] <= env1 + 1e-300)) if dr1_applicable else None
    dr1 = RequirementCheck(
        dr1_applicable,
        dr1_pass,
        {"max_ratio": float(np.max(r2[sl] / np.maximum(env1, 1e-300))) if dr1_applicable else None},
    )

    # DR2: ISS envelope, always evaluable
    env2 = k.K3 * np.exp(-k.K4 * t[sl]) * r0sq + k.K5 * sup_drive
    dr2 = RequirementCheck(
        True,
        bool(np.all(r2[sl] <= env2 + 1e-300)),
        {"max_ratio": float(np.max(r2[sl] / np.maximum(env2, 1e-300)))},
    )

    # DR3: robustness (uncertainty only)
    int_r2 = float(np.trapezoid(r2, t))
    dr3_applicable = trace.has_uncertainty and not trace.has_attack
    if dr3_applicable:
        rhs3 = p.beta1**2 * float(np.trapezoid(trace.norm_eta_H**2, t)) + k.epsilon
        dr3 = RequirementCheck(True, int_r2 <= rhs3, {"lhs": int_r2, "rhs": rhs3})
    else:
        dr3 = RequirementCheck(False, None, {})

    # DR4: attack sensitivity (attack only)
    dr4_applicable = trace.has_attack and not trace.has_uncertainty
    if dr4_applicable:
        rhs4 = p.beta2**2 * trace.Da_H**2 * float(np.trapezoid(trace.delta**2, t)) - k.epsilon
        dr4 = RequirementCheck(True, int_r2 >= rhs4, {"lhs": int_r2, "rhs": rhs4})
    else:
        dr4 = RequirementCheck(False, None, {})

    return RequirementsReport(dr1=dr1, dr2=dr2, dr3=dr3, dr4=dr4, horizon=float(t[-1]))


def initial_bounds_from_fields(
    phi, phi_hat, kernel_params: KernelParams, slack: float = 1.0
) -> InitialBounds:
    """Initial-error bounds for the certificate, measured in the target domain.

    Transforms the initial observer error, measures its norms and boundary
    value, and inflates the upper bounds by the given slack factor.  The
    boundary error must be nonzero, otherwise the envelope constants are
    undefined.
    """
    err = np.asarray(phi, dtype=float) - np.asarray(phi_hat, dtype=float)
    op = TransformOperator(BacksteppingKernel(kernel_params), err.size)
    psi = op.to_target(err)
    dx = 1.0 / (err.size - 1)
    psi_norm = float(np.sqrt(np.trapezoid(psi * psi, dx=dx)))
    dpsi = np.diff(psi) / dx
    psix_norm = float(np.sqrt(np.sum(dpsi * dpsi) * dx))
    psi1 = abs(float(psi[-1]))
    if psi1 <= 0:
        raise ValueError("initial boundary error is zero; envelope constants undefined")
    return InitialBounds(
        psi0_bar=psi_norm * slack,
        psix0_bar=psix_norm * slack,
        psi10_bar=psi1 * slack,
        psi10_lower=psi1 / slack,
    )


def write_trace_csv(path, trace: SimulationTrace, flags: np.ndarray | None = None) -> None:
    """Trace CSV with header t,y,yhat,r,psi1,W,norm_u,norm_ux,norm_eta_H,delta,flag."""
    fl = trace.flag if flags is None else flags
    with open(path, "w", newline="") as fh:
        fh.write("t,y,yhat,r,psi1,W,norm_u,norm_ux,norm_eta_H,delta,flag\n")
        for i in range(trace.t.size):
            fh.write(
                f"{float(trace.t[i])!r},{float(trace.y[i])!r},{float(trace.y_hat[i])!r},"
                f"{float(trace.r[i])!r},{float(trace.psi1[i])!r},{float(trace.W[i])!r},"
                f"{float(trace.norm_u[i])!r},{float(trace.norm_ux[i])!r},"
                f"{float(trace.norm_eta_H[i])!r},{float(trace.delta[i])!r},{int(fl[i])}\n"
            )
