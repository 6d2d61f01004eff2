"""Cosine-basis spectral core for the 1-D reaction-diffusion plant.

The plant lives on x in [0, 1] with insulated (zero Neumann) boundaries:

    u_t = u_xx + alpha * u + D(x) q(t) + D_a(x) delta(t),   y(t) = u(1, t).

In the cosine eigenbasis {1, cos(pi x), cos(2 pi x), ...} the dynamics
decouple into scalar modal ODEs T_n' = lambda_n T_n + source, with
lambda_n = alpha - (n pi)^2.  Modes are advanced with an exact exponential
integrator (sources treated piecewise-linear per step), so the very stiff
high modes never constrain the step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModalBasis",
    "ModalCoefficients",
    "ModalState",
    "ModalTrajectory",
    "SampledSignal",
    "eigenvalues",
    "cosine_coefficients",
    "simpson_weights",
    "forward_solve",
    "boundary_output",
    "modal_l2_norm",
    "modal_h1_seminorm",
    "galerkin_output_differences",
    "uniform_bound_peaks",
    "write_field_csv",
    "write_modal_csv",
    "write_boundary_csv",
]


# ---------------------------------------------------------------------------
# basis and coefficient containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModalBasis:
    """Truncated cosine eigenbasis of the Neumann Sturm-Liouville problem.

    ``eigenvalues[n] = alpha - (n pi)^2`` for n = 0..n_modes.  A basis with
    alpha >= 0 can only be built explicitly (see :func:`eigenvalues`) and is
    marked ``conforming=False`` because the stability assumption alpha < 0
    no longer holds.
    """

    alpha: float
    n_modes: int
    eigenvalues: np.ndarray
    conforming: bool = True

    @property
    def signs(self) -> np.ndarray:
        """(-1)^n weights that evaluate a cosine series at x = 1."""
        s = np.ones(self.n_modes + 1)
        s[1::2] = -1.0
        return s


def eigenvalues(alpha: float, n_modes: int, *, allow_unstable: bool = False) -> ModalBasis:
    """Build the modal basis with eigenvalues alpha - (n pi)^2, n = 0..n_modes."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if alpha >= 0 and not allow_unstable:
        raise ValueError(
            "alpha must be negative for a conforming basis; "
            "pass allow_unstable=True to build a nonconforming one"
        )
    n = np.arange(n_modes + 1, dtype=float)
    lam = alpha - (n * np.pi) ** 2
    return ModalBasis(
        alpha=float(alpha),
        n_modes=int(n_modes),
        eigenvalues=lam,
        conforming=alpha < 0,
    )


@dataclass(frozen=True)
class ModalCoefficients:
    """Coefficients against the unnormalized basis 1, cos(pi x), ..., cos(N pi x).

    Reconstruction is f(x) = c_0 + sum_{n>=1} c_n cos(n pi x); the boundary
    value is the alternating sum f(1) = sum (-1)^n c_n.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.coeffs.ndim != 1 or self.coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D vector")

    @property
    def n_modes(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zeros(cls, n_modes: int) -> "ModalCoefficients":
        return cls(np.zeros(n_modes + 1))

    @classmethod
    def from_list(cls, values, n_modes: int) -> "ModalCoefficients":
        """Place the given leading coefficients in a zero-padded vector."""
        values = np.asarray(values, dtype=float)
        if values.size > n_modes + 1:
            raise ValueError("more values than modes")
        c = np.zeros(n_modes + 1)
        c[: values.size] = values
        return cls(c)

    def boundary_value(self) -> float:
        """f(1) = sum (-1)^n c_n."""
        signs = np.ones(self.coeffs.size)
        signs[1::2] = -1.0
        return float(signs @ self.coeffs)

    def reconstruct(self, x) -> np.ndarray:
        """Evaluate the cosine series at the given points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = np.arange(self.coeffs.size)
        return np.cos(np.outer(x, n) * np.pi) @ self.coeffs


def simpson_weights(n_nodes: int, dx: float) -> np.ndarray:
    """Composite Simpson weights on a uniform grid (odd node count required)."""
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of nodes >= 3")
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (dx / 3.0)


def cosine_coefficients(values, n_modes: int) -> ModalCoefficients:
    """Analyze a grid function on [0, 1] into cosine coefficients.

    c_0 = int f dx and c_n = 2 int f cos(n pi x) dx for n >= 1, computed by
    composite Simpson quadrature on the provided uniform grid.  The grid must
    carry at least 4 * n_modes + 1 nodes so the highest requested mode is
    well resolved.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("values must be a 1-D grid function")
    n_nodes = values.size
    if n_nodes < 4 * n_modes + 1:
        raise ValueError(
            f"grid too coarse for {n_modes} modes: need >= {4 * n_modes + 1} nodes, got {n_nodes}"
        )
    if n_nodes % 2 == 0:
        raise ValueError("grid must have an odd number of nodes for Simpson quadrature")
    x = np.linspace(0.0, 1.0, n_nodes)
    w = simpson_weights(n_nodes, x[1] - x[0])
    n = np.arange(n_modes + 1)
    basis = np.cos(np.outer(n, x) * np.pi)  # (N+1, n_nodes)
    c = basis @ (w * values)
    c[1:] *= 2.0
    return ModalCoefficients(c)


# ---------------------------------------------------------------------------
# sampled signals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledSignal:
    """Scalar time series on a uniform grid with piecewise-linear interpolation.

    Queries outside [t0, t_end] raise; values between samples are linearly
    interpolated.
    """

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("need at least two samples")

    @property
    def t_end(self) -> float:
        return self.t0 + (self.values.size - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def __call__(self, t) -> np.ndarray | float:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        slack = 1e-9 * self.dt
        if t_arr.min() < self.t0 - slack or t_arr.max() > self.t_end + slack:
            raise ValueError(
                f"query time outside signal range [{self.t0}, {self.t_end}]"
            )
        out = np.interp(t_arr, self.times, self.values)
        return out if np.ndim(t) else float(out[0])

    @classmethod
    def zeros(cls, t0: float, t_end: float, dt: float) -> "SampledSignal":
        n = int(round((t_end - t0) / dt))
        return cls(t0, dt, np.zeros(n + 1))

    @classmethod
    def constant(cls, value: float, t0: float, t_end: float, dt: float) -> "SampledSignal":
        n = int(round((t_end - t0) / dt))
        return cls(t0, dt, np.full(n + 1, float(value)))

    @classmethod
    def from_function(cls, fn, t0: float, t_end: float, dt: float) -> "SampledSignal":
        n = int(round((t_end - t0) / dt))
        t = t0 + dt * np.arange(n + 1)
        return cls(t0, dt, np.asarray([fn(ti) for ti in t], dtype=float))


# ---------------------------------------------------------------------------
# modal states and exponential time stepping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModalState:
    basis: ModalBasis
    t: float
    T: np.ndarray


@dataclass(frozen=True)
class ModalTrajectory:
    """Time-indexed modal coefficients T[k, n] at times[k]."""

    basis: ModalBasis
    times: np.ndarray
    T: np.ndarray

    def state(self, k: int) -> ModalState:
        return ModalState(self.basis, float(self.times[k]), self.T[k])

    def boundary(self) -> np.ndarray:
        """y(t_k) = u(1, t_k) for every stored step."""
        return self.T @ self.basis.signs

    def field(self, x) -> np.ndarray:
        """u(x_j, t_k) as an array of shape (n_times, n_x)."""
        x = np.asarray(x, dtype=float)
        n = np.arange(self.basis.n_modes + 1)
        return self.T @ np.cos(np.pi * np.outer(n, x))

    def l2_norms(self) -> tuple[np.ndarray, np.ndarray]:
        """(||u||, ||u_x||) over time, evaluated exactly from the coefficients."""
        norm = np.sqrt(self.T[:, 0] ** 2 + 0.5 * np.sum(self.T[:, 1:] ** 2, axis=1))
        n = np.arange(1, self.basis.n_modes + 1)
        semi = np.sqrt(0.5 * np.sum((self.T[:, 1:] * (n * np.pi)) ** 2, axis=1))
        return norm, semi


def boundary_output(state: ModalState) -> float:
    """Measured boundary value y = u(1, t) = sum (-1)^n T_n."""
    return float(state.basis.signs @ state.T)


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z with a series fallback near z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-5
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs * zs / 6.0
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out

def _phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z)/z^2 with a series fallback near z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 0.5 + zs / 6.0 + zs * zs / 24.0
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / (zb * zb)
    return out


def _signal_samples(sig: SampledSignal | None, times: np.ndarray) -> np.ndarray:
    if sig is None:
        return np.zeros_like(times)
    return np.asarray(sig(times), dtype=float)


def forward_solve(
    basis: ModalBasis,
    phi: ModalCoefficients,
    *,
    horizon: float,
    dt: float,
    delta: SampledSignal | None = None,
    Da: ModalCoefficients | None = None,
    q: SampledSignal | None = None,
    D: ModalCoefficients | None = None,
) -> ModalTrajectory:
    """Advance the modal system from phi over [0, horizon] with step dt.

    Each mode obeys T_n' = lambda_n T_n + d_n delta(t) + D_n q(t) and is
    integrated with the exact exponential rule, the combined source being
    treated as piecewise-linear over each step (second-order exponential
    time differencing).  With all sources zero the per-step update is the
    exact decay factor exp(lambda_n dt).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError("horizon must be a whole number of steps")

    n_coef = basis.n_modes + 1
    for name, mc in (("phi", phi), ("Da", Da), ("D", D)):
        if mc is not None and mc.coeffs.size != n_coef:
            raise ValueError(f"{name} has {mc.coeffs.size - 1} modes, basis has {basis.n_modes}")
    if delta is not None and Da is None:
        raise ValueError("delta given without its distribution Da")
    if q is not None and D is None:
        raise ValueError("q given without its distribution D")

    times = dt * np.arange(n_steps + 1)
    d = Da.coeffs if Da is not None else np.zeros(n_coef)
    Dc = D.coeffs if D is not None else np.zeros(n_coef)
    delta_vals = _signal_samples(delta, times)
    q_vals = _signal_samples(q, times)
    # per-step modal source s[k, n] = d_n delta(t_k) + D_n q(t_k)
    src = np.outer(delta_vals, d) + np.outer(q_vals, Dc)

    z = basis.eigenvalues * dt
    decay = np.exp(z)
    p1 = _phi1(z)
    p2 = _phi2(z)

    T = np.empty((n_steps + 1, n_coef))
    T[0] = phi.coeffs
    for k in range(n_steps):
        s0 = src[k]
        s1 = src[k + 1]
        T[k + 1] = decay * T[k] + dt * (p1 * s0 + p2 * (s1 - s0))
    return ModalTrajectory(basis=basis, times=times, T=T)


def modal_l2_norm(T: np.ndarray) -> float:
    """||u|| from modal coefficients: sqrt(T_0^2 + 1/2 sum T_n^2)."""
    T = np.asarray(T, dtype=float)
    return float(np.sqrt(T[0] ** 2 + 0.5 * np.sum(T[1:] ** 2)))


def modal_h1_seminorm(T: np.ndarray) -> float:
    """||u_x|| from modal coefficients: sqrt(1/2 sum (n pi T_n)^2)."""
    T = np.asarray(T, dtype=float)
    n = np.arange(1, T.size)
    return float(np.sqrt(0.5 * np.sum((n * np.pi * T[1:]) ** 2)))


# ---------------------------------------------------------------------------
# convergence diagnostics (truncation studies over the mode count)
# ---------------------------------------------------------------------------

def _project(fn, n_modes: int, n_grid: int) -> ModalCoefficients:
    x = np.linspace(0.0, 1.0, n_grid)
    return cosine_coefficients(fn(x), n_modes)

def galerkin_output_differences(
    alpha: float,
    phi_fn,
    Da_fn,
    delta: SampledSignal,
    *,
    horizon: float,
    dt: float,
    n_list: tuple[int, ...] = (8, 16, 32, 64),
    n_grid: int = 2049,
    allow_unstable: bool = False,
) -> list[float]:
    """sup_t |y_N - y_2N| for each N in n_list (output self-consistency)."""
    diffs = []
    for n in n_list:
        ys = []
        for m in (n, 2 * n):
            basis = eigenvalues(alpha, m, allow_unstable=allow_unstable)
            traj = forward_solve(
                basis,
                _project(phi_fn, m, n_grid),
                horizon=horizon,
                dt=dt,
                delta=delta,
                Da=_project(Da_fn, m, n_grid),
            )
            ys.append(traj.boundary())
        diffs.append(float(np.max(np.abs(ys[0] - ys[1]))))
    return diffs


def uniform_bound_peaks(
    alpha: float,
    phi_fn,
    Da_fn,
    delta: SampledSignal,
    *,
    horizon: float,
    dt: float,
    n_list: tuple[int, ...] = (8, 16, 32, 64, 128),
    n_grid: int = 2049,
    allow_unstable: bool = False,
) -> list[float]:
    """max_t (||u_N|| + ||(u_N)_x||) for each N (uniform-bound witness)."""
    peaks = []
    for n in n_list:
        basis = eigenvalues(alpha, n, allow_unstable=allow_unstable)
        traj = forward_solve(
            basis,
            _project(phi_fn, n, n_grid),
            horizon=horizon,
            dt=dt,
            delta=delta,
            Da=_project(Da_fn, n, n_grid),
        )
        norm, semi = traj.l2_norms()
        peaks.append(float(np.max(norm + semi)))
    return peaks


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_field_csv(path, times, x, U) -> None:
    """Long-format field snapshots with header t,x,u (one row per node per time)."""
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    if U.shape != (times.size, x.size):
        raise ValueError("U must have shape (n_times, n_x)")
    with open(path, "w", newline="") as fh:
        fh.write("t,x,u\n")
        for i, t in enumerate(times):
            for j, xj in enumerate(x):
                fh.write(f"{_fmt(t)},{_fmt(xj)},{_fmt(U[i, j])}\n")


def write_modal_csv(path, traj: ModalTrajectory) -> None:
    """Modal trajectories with header t,T0,T1,..."""
    n = traj.basis.n_modes
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(f"T{k}" for k in range(n + 1)) + "\n")
        for k, t in enumerate(traj.times):
            fh.write(_fmt(t) + "," + ",".join(_fmt(v) for v in traj.T[k]) + "\n")


def write_boundary_csv(path, times, y) -> None:
    """Boundary trace with header t,y."""
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write("t,y\n")
        for t, v in zip(times, y):
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")
