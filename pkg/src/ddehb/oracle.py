"""Independent time-evolution oracle for validating the spectral path.

Four engines, deliberately sharing no operator code with the harmonic
balance modules (separate delayed-value interpolation, separate Jacobian
assembly), so that agreement is evidence rather than tautology:

* method-of-steps RK4 integration of the delay system, with delayed
  values from piecewise-cubic interpolation of the stored history;
* the finite-segment ODE discretization (delay line of N first-order
  lags), integrable on its own and the basis for the two linear engines;
* monodromy exponents/eigenvectors of the variational equation along the
  orbit, via subspace iteration over one-period sweeps;
* backward integration of the discretized adjoint (again via one-period
  subspace sweeps, which is what repeated backward periods amount to)
  yielding oracle phase/amplitude response curves after the continuum
  normalization, plus direct pulse-perturbation PRC measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cycle import CycleSeed, PeriodicOrbit
from .errors import (
    MonodromyIllConditioned,
    NoOscillationDetected,
    NonConvergentAdjoint,
    NonFiniteState,
    PeriodDrift,
)
from .model import ModelSpec
from .spectral import sample_to_coeffs

# Half-point cubic Lagrange weights on a uniform 4-point stencil:
# centered (nodes -1,0,1,2 at x=1/2) and one-sided (nodes 0..3 at x=1/2).
_MID_CENTERED = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_ONESIDED = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0


@dataclass
class Trajectory:
    """Uniform-step trajectory; the leading samples cover one delay span."""

    t_start: float
    dt: float
    states: np.ndarray  # (n_points, ..., m)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.states.shape[0])

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * (self.states.shape[0] - 1)

    def write_csv(self, path):
        """Debug export: time column followed by the state components (or
        batch-flattened components); not a stable output contract."""
        flat = self.states.reshape(self.states.shape[0], -1)
        header = "t," + ",".join(f"x{j}" for j in range(flat.shape[1]))
        data = np.column_stack([self.times, flat])
        np.savetxt(path, data, delimiter=",", header=header, comments="",
                   fmt="%.17g")

    def value(self, t) -> np.ndarray:
        """Piecewise-cubic readout at arbitrary times (stencil clamped at
        the ends)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = self.states.shape[0]
        s = (t - self.t_start) / self.dt
        j = np.clip(np.floor(s).astype(int), 0, n - 2)
        u = s - j
        j0 = np.clip(j - 1, 0, n - 4)
        x = u + (j - j0)  # local coordinate within the 4-point stencil
        nodes = np.arange(4.0)
        # Lagrange basis on nodes 0..3 evaluated at x, per query point
        w = np.ones((t.size, 4))
        for i in range(4):
            for kk in range(4):
                if kk != i:
                    w[:, i] *= (x - nodes[kk]) / (nodes[i] - nodes[kk])
        idx = j0[:, None] + np.arange(4)[None, :]
        vals = self.states[idx]  # (npts, 4, ..., m)
        out = np.einsum("pk,pk...->p...", w, vals)
        return out


def _snap_step(tau: float, dt: float) -> tuple[float, int]:
    n_tau = int(np.ceil(tau / dt))
    return tau / n_tau, n_tau


def integrate_dde(
    model: ModelSpec,
    history,
    t_end: float,
    dt: float,
    initial_kick: np.ndarray | None = None,
) -> Trajectory:
    """Method-of-steps RK4 integration of the delay system from t=0.

    history(s) supplies the state for s in [-tau, 0]; it may return a
    batch (..., m), in which case the whole ensemble is advanced in
    lockstep.  dt is rounded so it divides tau exactly (and must satisfy
    dt <= tau/10), which keeps full-step delayed lookups on stored nodes;
    only the half-step stage values are interpolated (cubic).
    initial_kick, if given, is added to the state at t=0.
    """
    tau = model.tau
    if tau == 0.0:
        return _integrate_ode(model, history, t_end, dt, initial_kick)
    dt, n_tau = _snap_step(tau, dt)
    if n_tau < 10:
        raise ValueError(f"dt={dt:g} too coarse: need dt <= tau/10 = {tau / 10:g}")
    n_steps = int(np.ceil(t_end / dt))

    x0 = np.asarray(history(0.0), dtype=float)
    buf = np.empty((n_tau + n_steps + 1,) + x0.shape)
    for j in range(n_tau + 1):
        buf[j] = history((j - n_tau) * dt)
    if initial_kick is not None:
        buf[n_tau] = buf[n_tau] + initial_kick

    half = 0.5 * dt
    for k in range(n_steps):
        j = n_tau + k
        x = buf[j]
        xd0 = buf[j - n_tau]
        xd1 = buf[j - n_tau + 1]
        lo = j - n_tau - 1
        if lo >= 0:
            xdm = np.einsum("k,k...->...", _MID_CENTERED, buf[lo : lo + 4])
        else:
            xdm = np.einsum("k,k...->...", _MID_ONESIDED, buf[0:4])
        k1 = model.F(x, xd0)
        k2 = model.F(x + half * k1, xdm)
        k3 = model.F(x + half * k2, xdm)
        k4 = model.F(x + dt * k3, xd1)
        x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x_new)):
            raise NonFiniteState(
                f"integration blew up at t={k * dt:.6g}", t_last=k * dt
            )
        buf[j + 1] = x_new

    return Trajectory(t_start=-tau, dt=dt, states=buf)


def _integrate_ode(model, history, t_end, dt, initial_kick):
    """Degenerate tau=0 case: plain RK4 on x' = F(x, x)."""
    n_steps = int(np.ceil(t_end / dt))
    x = np.asarray(history(0.0), dtype=float)
    if initial_kick is not None:
        x = x + initial_kick
    buf = np.empty((n_steps + 1,) + x.shape)
    buf[0] = x
    for k in range(n_steps):
        x = buf[k]
        k1 = model.F(x, x)
        x2 = x + 0.5 * dt * k1
        k2 = model.F(x2, x2)
        x3 = x + 0.5 * dt * k2
        k3 = model.F(x3, x3)
        x4 = x + dt * k3
        k4 = model.F(x4, x4)
        x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x_new)):
            raise NonFiniteState(f"integration blew up at t={k * dt:.6g}", t_last=k * dt)
        buf[k + 1] = x_new
    return Trajectory(t_start=0.0, dt=dt, states=buf)


@dataclass
class SettleOptions:
    dt: float = 0.05
    M: int = 20
    component: int = 0
    min_crossings: int = 12
    last_intervals: int = 10
    drift_tol: float = 0.01  # spread / mean threshold
    observe_time: float | None = None  # defaults to 100 * max(tau, 1)
    amplitude_floor: float = 1e-8


@dataclass
class SettleResult:
    period: float
    spread: float
    crossings: np.ndarray
    trajectory: Trajectory  # one period, centered on the anchor maximum
    seed: CycleSeed


def settle_to_cycle(
    model: ModelSpec, history, transient: float, opts: SettleOptions | None = None
) -> SettleResult:
    """Relax onto the attracting cycle and extract a period + Fourier seed.

    The period comes from successive upward mean-crossings of the
    anchored component over the post-transient window (mean of the last
    10 intervals, spread reported).  The seed resamples one period onto a
    2M+1 grid, time-shifted so the anchor component peaks at t=0, which
    pre-satisfies the solver's phase anchor.
    """
    opts = opts or SettleOptions()
    observe = opts.observe_time
    if observe is None:
        observe = 100.0 * max(model.tau, 1.0)
    traj = integrate_dde(model, history, transient + observe, opts.dt)

    times = traj.times
    comp = traj.states[..., opts.component]
    window = times >= transient
    tw = times[window]
    xw = comp[window]
    if np.ptp(xw) < opts.amplitude_floor:
        raise NoOscillationDetected(
            f"post-transient oscillation amplitude {np.ptp(xw):.3e} below floor"
        )
    ref = xw.mean()
    y = xw - ref
    up = np.nonzero((y[:-1] < 0.0) & (y[1:] >= 0.0))[0]
    crossings = tw[up] - y[up] * opts.dt / (y[up + 1] - y[up])
    if crossings.size < opts.min_crossings:
        raise NoOscillationDetected(
            f"only {crossings.size} upward crossings detected "
            f"(need >= {opts.min_crossings})"
        )
    intervals = np.diff(crossings)[-opts.last_intervals :]
    period = float(intervals.mean())
    spread = float(intervals.max() - intervals.min())
    if spread > opts.drift_tol * period:
        raise PeriodDrift(
            f"crossing interval spread {spread:.3e} exceeds "
            f"{opts.drift_tol:.0%} of the mean period {period:.6g}"
        )

    # anchor the seed at the maximum of the anchored component
    t_ref = crossings[-1]
    fine = np.linspace(t_ref - period, t_ref, 4096)
    vals = traj.value(fine)[..., opts.component]
    i = int(np.argmax(vals))
    if 0 < i < fine.size - 1:
        a, b, c = vals[i - 1], vals[i], vals[i + 1]
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        t_max = fine[i] + shift * (fine[1] - fine[0])
    else:
        t_max = fine[i]

    K = 2 * opts.M + 1
    grid_t = t_max + np.arange(-opts.M, opts.M + 1) * (period / K)
    samples = traj.value(grid_t)
    seed = CycleSeed(series=sample_to_coeffs(samples, period), period=period)

    lo = int(np.searchsorted(times, t_max - 0.5 * period)) - 1
    hi = int(np.searchsorted(times, t_max + 0.5 * period)) + 2
    lo = max(lo, 0)
    one_period = Trajectory(
        t_start=float(times[lo]), dt=traj.dt, states=traj.states[lo:hi].copy()
    )
    return SettleResult(
        period=period,
        spread=spread,
        crossings=crossings,
        trajectory=one_period,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Finite-segment discretization of the delay line
# ---------------------------------------------------------------------------


@dataclass
class DiscretizedSystem:
    """Delay line of N first-order lags: y = (x_0, ..., x_N), dim m(N+1)."""

    model: ModelSpec
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def dim(self) -> int:
        return self.model.m * (self.N + 1)

    @property
    def rate(self) -> float:
        return self.N / self.model.tau

    def G(self, y: np.ndarray) -> np.ndarray:
        """Vector field of the discretized system on flat states (..., dim)."""
        y = np.asarray(y, dtype=float)
        blocks = y.reshape(y.shape[:-1] + (self.N + 1, self.m))
        out = np.empty_like(blocks)
        out[..., 0, :] = self.model.F(blocks[..., 0, :], blocks[..., self.N, :])
        out[..., 1:, :] = self.rate * (blocks[..., :-1, :] - blocks[..., 1:, :])
        return out.reshape(y.shape)

    def jacobian_dense(self, z0: np.ndarray, zN: np.ndarray) -> np.ndarray:
        """Dense Jacobian of G at a state with head z0 and tail zN.

        Only sensible for small N; the monodromy sweep never materializes
        this.
        """
        m, N, c = self.m, self.N, self.rate
        J = np.zeros((self.dim, self.dim))
        J[:m, :m] = self.model.DF0(z0, zN)
        J[:m, N * m :] = self.model.DF1(z0, zN)
        for i in range(1, N + 1):
            J[i * m : (i + 1) * m, (i - 1) * m : i * m] = c * np.eye(m)
            J[i * m : (i + 1) * m, i * m : (i + 1) * m] = -c * np.eye(m)
        return J

    def lift(self, orbit: PeriodicOrbit, t: float) -> np.ndarray:
        """Lifted orbit state: x_i = x^gamma(t - i tau / N), flattened."""
        s = t - np.arange(self.N + 1) * (self.model.tau / self.N)
        return orbit.value(s).reshape(-1)


def integrate_discretized(
    system: DiscretizedSystem, y0: np.ndarray, t_end: float, dt: float
) -> Trajectory:
    """Plain RK4 on the discretized vector field (first block is x(t))."""
    n_steps = int(np.ceil(t_end / dt))
    dt = t_end / n_steps
    y = np.asarray(y0, dtype=float).copy()
    m = system.m
    out = np.empty((n_steps + 1, m))
    out[0] = y[:m]
    for k in range(n_steps):
        k1 = system.G(y)
        k2 = system.G(y + 0.5 * dt * k1)
        k3 = system.G(y + 0.5 * dt * k2)
        k4 = system.G(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"discretized integration blew up at t={k * dt:.6g}")
        out[k + 1] = y[:m]
    return Trajectory(t_start=0.0, dt=dt, states=out)


# ---------------------------------------------------------------------------
# Monodromy of the variational equation along the orbit
# ---------------------------------------------------------------------------


def _variational_tables(system: DiscretizedSystem, orbit: PeriodicOrbit, steps: int):
    """DF0/DF1 along the cycle at the RK4 node and midpoint times."""
    T = orbit.T
    h = T / steps
    t_nodes = np.arange(steps + 1) * h
    t_mid = t_nodes[:-1] + 0.5 * h
    tau = system.model.tau

    def tables(ts):
        x = orbit.value(ts)
        xd = orbit.value(ts - tau)
        return system.model.DF0(x, xd), system.model.DF1(x, xd)

    return h, tables(t_nodes), tables(t_mid)


def _choose_steps(system: DiscretizedSystem, T: float) -> int:
    # The upwind lag blocks put eigenvalues on the circle |z + c| = c with
    # c = N/tau, reaching -2c, so RK4 stability needs 2*h*c below ~2.78.
    h_max = 1.0 * system.model.tau / system.N
    return max(int(np.ceil(T / h_max)), 1024)


def _jac_apply(DF0, DF1, c, V):
    """J V for block states V of shape (N+1, m, k)."""
    out = np.empty_like(V)
    out[0] = DF0 @ V[0] + DF1 @ V[-1]
    out[1:] = c * (V[:-1] - V[1:])
    return out


def _jac_apply_T(DF0, DF1, c, V):
    """J^T V: first block feeds back into head and tail rows."""
    out = np.empty_like(V)
    out[0] = DF0.T @ V[0] + c * V[1]
    out[1:-1] = c * (V[2:] - V[1:-1])
    out[-1] = DF1.T @ V[0] - c * V[-1]
    return out


def _sweep_forward(system, V, h, steps, node_tab, mid_tab, store_head=False):
    """Propagate columns of V through one period of y' = J(t) y."""
    c = system.rate
    DF0_n, DF1_n = node_tab
    DF0_m, DF1_m = mid_tab
    Y = V.reshape(system.N + 1, system.m, -1).copy()
    head = np.empty((steps + 1, system.m, Y.shape[-1])) if store_head else None
    if store_head:
        head[0] = Y[0]
    for j in range(steps):
        k1 = _jac_apply(DF0_n[j], DF1_n[j], c, Y)
        k2 = _jac_apply(DF0_m[j], DF1_m[j], c, Y + 0.5 * h * k1)
        k3 = _jac_apply(DF0_m[j], DF1_m[j], c, Y + 0.5 * h * k2)
        k4 = _jac_apply(DF0_n[j + 1], DF1_n[j + 1], c, Y + h * k3)
        Y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if store_head:
            head[j + 1] = Y[0]
    return Y.reshape(system.dim, -1), head


def _sweep_backward(system, V, h, steps, node_tab, mid_tab, store_head=False):
    """Propagate columns of V through one period of I' = -J(t)^T I,
    integrating from t = T down to t = 0 (the transposed monodromy)."""
    c = system.rate
    DF0_n, DF1_n = node_tab
    DF0_m, DF1_m = mid_tab
    Y = V.reshape(system.N + 1, system.m, -1).copy()
    head = np.empty((steps + 1, system.m, Y.shape[-1])) if store_head else None
    if store_head:
        head[steps] = Y[0]
    s = -h
    for j in range(steps, 0, -1):
        k1 = -_jac_apply_T(DF0_n[j], DF1_n[j], c, Y)
        k2 = -_jac_apply_T(DF0_m[j - 1], DF1_m[j - 1], c, Y + 0.5 * s * k1)
        k3 = -_jac_apply_T(DF0_m[j - 1], DF1_m[j - 1], c, Y + 0.5 * s * k2)
        k4 = -_jac_apply_T(DF0_n[j - 1], DF1_n[j - 1], c, Y + s * k3)
        Y += (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if store_head:
            head[j - 1] = Y[0]
    return Y.reshape(system.dim, -1), head


@dataclass
class MonodromyResult:
    exponents: np.ndarray  # complex, sorted by descending real part
    multipliers: np.ndarray
    vectors: np.ndarray  # (dim, n_modes) Ritz vectors matching multipliers
    unit_multiplier_error: float
    T: float
    steps: int
    iterations: int

    def leading_nontrivial(self) -> complex:
        """Exponent with the largest real part besides the trivial one."""
        i_unit = int(np.argmin(np.abs(self.multipliers - 1.0)))
        rest = [mu for i, mu in enumerate(self.exponents) if i != i_unit]
        return rest[0]


def monodromy_exponents(
    system: DiscretizedSystem,
    orbit: PeriodicOrbit,
    k: int = 5,
    steps: int | None = None,
    max_iterations: int = 40,
    tol: float = 1e-10,
    seed: int = 0,
) -> MonodromyResult:
    """Leading Floquet exponents of the discretized variational equation.

    Subspace iteration over one-period sweeps (k+3 vectors, QR
    re-orthonormalization, Rayleigh-Ritz extraction) instead of the full
    fundamental matrix; convergence is declared when the leading Ritz
    values stabilize.  The unit multiplier must be present: deviation
    beyond 1e-2 raises MonodromyIllConditioned.
    """
    steps = steps or _choose_steps(system, orbit.T)
    h, node_tab, mid_tab = _variational_tables(system, orbit, steps)
    kk = min(k + 3, system.dim)
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((system.dim, kk)))

    prev = None
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        W, _ = _sweep_forward(system, V, h, steps, node_tab, mid_tab)
        H = V.T @ W
        vals, vecs = np.linalg.eig(H)
        order = np.argsort(-np.abs(vals))
        vals, vecs = vals[order], vecs[:, order]
        if prev is not None and np.all(
            np.abs(vals[:k] - prev[:k]) <= tol * np.maximum(1.0, np.abs(vals[:k]))
        ):
            break
        prev = vals
        V, _ = np.linalg.qr(W)

    ritz_vecs = V @ vecs
    multipliers = vals[:k]
    vectors = ritz_vecs[:, :k]
    exponents = np.log(multipliers.astype(complex)) / orbit.T
    order = np.argsort(-exponents.real)
    multipliers, exponents, vectors = (
        multipliers[order],
        exponents[order],
        vectors[:, order],
    )
    unit_err = float(np.min(np.abs(multipliers - 1.0)))
    if unit_err > 1e-2:
        raise MonodromyIllConditioned(
            f"unit Floquet multiplier missing: closest is off by {unit_err:.3e}"
        )
    return MonodromyResult(
        exponents=exponents,
        multipliers=multipliers,
        vectors=vectors,
        unit_multiplier_error=unit_err,
        T=orbit.T,
        steps=steps,
        iterations=iterations,
    )


def _realify(vec: np.ndarray) -> np.ndarray:
    """Rotate a numerically-real complex vector onto the real axis."""
    i = int(np.argmax(np.abs(vec)))
    v = vec * np.exp(-1j * np.angle(vec[i]))
    return np.real(v)


def _mode_gauge(R: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(R, axis=-1)
    R = R / norms.max()
    idx = np.unravel_index(np.argmax(np.abs(R)), R.shape)
    if R[idx] < 0:
        R = -R
    return R


@dataclass
class _PeriodicInterp:
    """Cubic interpolant of dense uniform samples over one period."""

    T: float
    values: np.ndarray  # (steps+1, m), endpoint duplicated

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tm = np.mod(t, self.T)
        steps = self.values.shape[0] - 1
        h = self.T / steps
        s = tm / h
        j = np.clip(np.floor(s).astype(int), 0, steps - 1)
        u = s - j
        # periodic 4-point stencil around [j, j+1]
        idx = (np.arange(-1, 3)[None, :] + j[:, None]) % steps
        x = u[:, None] + 1.0
        nodes = np.arange(4.0)
        w = np.ones((t.size, 4))
        for i in range(4):
            for kq in range(4):
                if kq != i:
                    w[:, i] *= (x[:, 0] - nodes[kq]) / (nodes[i] - nodes[kq])
        vals = self.values[idx]
        return np.einsum("pk,pkm->pm", w, vals)


def monodromy_eigenfunction(
    system: DiscretizedSystem,
    orbit: PeriodicOrbit,
    result: MonodromyResult,
    mu: float,
) -> _PeriodicInterp:
    """Periodic eigenfunction profile rho(t) = e^{-mu t} y_0(t) from the
    monodromy eigenvector at multiplier e^{mu T}, max-normalized with the
    same gauge as the spectral path."""
    lam = np.exp(mu * result.T)
    i = int(np.argmin(np.abs(result.multipliers - lam)))
    v0 = _realify(result.vectors[:, i])
    steps = result.steps
    h, node_tab, mid_tab = _variational_tables(system, orbit, steps)
    _, head = _sweep_forward(
        system, v0[:, None], h, steps, node_tab, mid_tab, store_head=True
    )
    t = np.arange(steps + 1) * h
    rho = np.exp(-mu * t)[:, None] * head[:, :, 0]
    rho = _mode_gauge(rho)
    rho[-1] = rho[0]  # enforce exact periodicity of the stored profile
    return _PeriodicInterp(T=result.T, values=rho)


# ---------------------------------------------------------------------------
# Discretized adjoint (oracle response curves)
# ---------------------------------------------------------------------------


@dataclass
class OracleResponse:
    kind: str
    mu: float
    interp: _PeriodicInterp
    iterations: int
    multiplier: complex
    normalization: float  # achieved pairing value after rescaling

    def value(self, t) -> np.ndarray:
        return self.interp(t)


def _orbit_tangent(orbit):
    """Cycle tangent from the delay system itself, x' = F(x, x_delayed)."""

    def xdot(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return orbit.model.F(orbit.value(t), orbit.value(t - orbit.model.tau))

    return xdot


def oracle_pairing(
    orbit: PeriodicOrbit,
    response,
    partner,
    mu: float,
    t0: float = 0.0,
    quad_nodes: int = 64,
) -> float:
    """Continuum normalization functional evaluated with oracle-side
    interpolants (callables of time), based at t0."""
    model = orbit.model
    tau = model.tau
    head = float(np.atleast_2d(response(t0))[0] @ np.atleast_2d(partner(t0))[0])
    if tau == 0.0:
        return head
    xi, w = np.polynomial.legendre.leggauss(quad_nodes)
    zeta = 0.5 * tau * (xi - 1.0)
    weights = 0.5 * tau * w
    s = t0 + tau + zeta
    qv = np.atleast_2d(response(s))
    pv = np.atleast_2d(partner(t0 + zeta))
    DF1 = model.DF1(orbit.value(s), orbit.value(s - tau))
    integrand = np.einsum("ni,nij,nj->n", qv, DF1, pv)
    return head + float(np.exp(-mu * tau)) * float(weights @ integrand)


def discretized_adjoint(
    system: DiscretizedSystem,
    orbit: PeriodicOrbit,
    mu: float,
    rho: _PeriodicInterp | None = None,
    steps: int | None = None,
    max_periods: int = 50,
    tol: float = 1e-8,
    quad_nodes: int = 64,
    subspace: int = 6,
    seed: int = 1,
) -> OracleResponse:
    """Oracle response curve from backward adjoint integration.

    Repeated one-period backward sweeps of I' = -J(t)^T I (a small block
    of vectors at once, re-orthonormalized each period) converge on the
    left eigenspace of the monodromy map; the Ritz vector at multiplier
    e^{mu T} is then swept backward once more to record the profile, whose
    first block is the response.  mu = 0 gives the phase response; a
    nonzero exponent needs rho (from monodromy_eigenfunction) for the
    amplitude normalization.  Periodicity is declared when the target
    vector moves less than tol between successive periods;
    NonConvergentAdjoint after max_periods.
    """
    if mu != 0.0 and rho is None:
        raise ValueError("amplitude-side adjoint needs the eigenfunction rho")
    steps = steps or _choose_steps(system, orbit.T)
    h, node_tab, mid_tab = _variational_tables(system, orbit, steps)
    kk = min(subspace, system.dim)
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((system.dim, kk)))
    lam_target = float(np.exp(mu * orbit.T))

    u_prev = None
    iterations = 0
    converged = False
    for iterations in range(1, max_periods + 1):
        W, _ = _sweep_backward(system, V, h, steps, node_tab, mid_tab)
        H = V.T @ W
        vals, vecs = np.linalg.eig(H)
        i = int(np.argmin(np.abs(vals - lam_target)))
        u = _realify(V @ vecs[:, i])
        u /= np.linalg.norm(u)
        if u_prev is not None:
            if u @ u_prev < 0:
                u = -u
            if np.linalg.norm(u - u_prev) <= tol:
                converged = True
                u_prev = u
                multiplier = vals[i]
                break
        u_prev = u
        multiplier = vals[i]
        V, _ = np.linalg.qr(W)
    if not converged:
        raise NonConvergentAdjoint(
            f"adjoint profile still moving after {max_periods} backward periods"
        )

    _, head = _sweep_backward(
        system, u_prev[:, None], h, steps, node_tab, mid_tab, store_head=True
    )
    t = np.arange(steps + 1) * h
    w0 = head[:, :, 0]
    curve = np.exp(mu * t)[:, None] * w0  # q(t) = e^{mu t} w(t); mu=0 -> z
    curve[-1] = curve[0]
    interp = _PeriodicInterp(T=orbit.T, values=curve)

    if mu == 0.0:
        partner = _orbit_tangent(orbit)
        c = oracle_pairing(orbit, interp, partner, 0.0, quad_nodes=quad_nodes)
        scale = orbit.omega / c
        target = orbit.omega
    else:
        c = oracle_pairing(orbit, interp, rho, mu, quad_nodes=quad_nodes)
        scale = 1.0 / c
        target = 1.0
    interp = _PeriodicInterp(T=orbit.T, values=curve * scale)
    achieved = oracle_pairing(
        orbit, interp, _orbit_tangent(orbit) if mu == 0.0 else rho, mu,
        quad_nodes=quad_nodes,
    )
    return OracleResponse(
        kind="phase" if mu == 0.0 else "amplitude",
        mu=float(mu),
        interp=interp,
        iterations=iterations,
        multiplier=complex(multiplier),
        normalization=float(achieved),
    )


# ---------------------------------------------------------------------------
# Direct pulse-perturbation PRC measurement
# ---------------------------------------------------------------------------


@dataclass
class PrcResult:
    phases: np.ndarray
    eps: float
    raw_shifts: np.ndarray  # asymptotic phase shifts (radians)
    measured: np.ndarray  # shifts / eps, comparable to z at the pulse phase


def direct_prc(
    model: ModelSpec,
    orbit: PeriodicOrbit,
    phases,
    eps: float | None = None,
    component: int = 0,
    dt: float | None = None,
    periods: int = 20,
    window_periods: int = 5,
) -> PrcResult:
    """Measure the PRC by pulse perturbation and cross-correlation.

    For each phase the unperturbed and kicked copies start from the same
    orbit history and run for `periods` cycles (all trajectories advance
    as one batch); the asymptotic time shift is read off as the phase
    difference of the fundamental harmonic over the trailing window,
    which is the peak of the circular cross-correlation of the two
    near-sinusoidal signals, located spectrally.
    """
    phases = np.asarray(phases, dtype=float)
    T = orbit.T
    omega = orbit.omega
    if eps is None:
        eps = 1e-3 * float(np.abs(orbit.X[:, component]).max())
    if dt is None:
        dt = model.tau / 64.0
    t_theta = phases / omega  # kick times along the cycle

    def history(s):
        # batch of orbit histories: rows 0..B-1 unperturbed, B..2B-1 kicked
        tt = np.concatenate([t_theta, t_theta]) + s
        return orbit.value(tt)

    kick = np.zeros((2 * phases.size, model.m))
    kick[phases.size :, component] = eps
    traj = integrate_dde(model, history, periods * T, dt, initial_kick=kick)

    times = traj.times
    sel = times >= periods * T - window_periods * T
    tw = times[sel]
    xw = traj.states[sel][:, :, component]  # (nt, 2B)
    fundamental = np.exp(-1j * omega * tw) @ xw
    phi = np.angle(fundamental)
    dphi = phi[phases.size :] - phi[: phases.size]
    dphi = np.mod(dphi + np.pi, 2.0 * np.pi) - np.pi
    return PrcResult(
        phases=phases,
        eps=float(eps),
        raw_shifts=dphi,
        measured=dphi / eps,
    )


def build_discretized(model: ModelSpec, N: int) -> DiscretizedSystem:
    """Assemble the N-segment delay-line discretization of the model."""
    return DiscretizedSystem(model=model, N=N)


# ---------------------------------------------------------------------------
# Extrapolating oracle layer
# ---------------------------------------------------------------------------
#
# The first-order lag chain converges like a/N + b/N^2 + ...; running the
# same computation on chain levels N/4, N/2, N and combining the reported
# quantities (exponents, multipliers, periodic profiles) with Richardson
# weights removes the low-order bias.  Profiles are functions of time, so
# they extrapolate across levels despite the differing state dimensions.

_RICHARDSON_WEIGHTS = {
    1: (1.0,),
    2: (-1.0, 2.0),
    3: (1.0 / 3.0, -2.0, 8.0 / 3.0),
}  # ordered coarsest -> finest, for levels N/2^(L-1), ..., N/2, N


def _level_sizes(N: int, levels: int) -> list[int]:
    if levels not in _RICHARDSON_WEIGHTS:
        raise ValueError("levels must be 1, 2 or 3")
    sizes = [N >> (levels - 1 - i) for i in range(levels)]
    if sizes[0] << (levels - 1) != N:
        raise ValueError(f"N={N} must be divisible by {1 << (levels - 1)}")
    return sizes


def _combine_profiles(interps, weights, T, points=4096) -> _PeriodicInterp:
    t = np.linspace(0.0, T, points + 1)
    acc = sum(w * interp(t) for w, interp in zip(weights, interps))
    acc[-1] = acc[0]
    return _PeriodicInterp(T=T, values=acc)


@dataclass
class OracleFloquet:
    """Monodromy exponents across chain levels with extrapolated values."""

    levels: list[int]
    systems: list[DiscretizedSystem]
    results: list[MonodromyResult]
    multipliers: np.ndarray  # extrapolated, matched across levels
    exponents: np.ndarray
    unit_multiplier_error: float
    T: float

    def leading_nontrivial(self) -> float:
        i_unit = int(np.argmin(np.abs(self.multipliers - 1.0)))
        rest = [mu for i, mu in enumerate(self.exponents) if i != i_unit]
        return float(rest[0].real)

    def leading_per_level(self) -> list[float]:
        return [float(r.leading_nontrivial().real) for r in self.results]


def oracle_floquet(
    model: ModelSpec,
    orbit: PeriodicOrbit,
    N: int = 2000,
    k: int = 5,
    levels: int = 3,
    seed: int = 0,
) -> OracleFloquet:
    """Monodromy exponents with Richardson extrapolation over chain levels.

    The finest level is N; coarser levels halve it.  Multipliers are
    matched between levels by proximity before combining; unmatched ones
    keep the finest-level value.
    """
    sizes = _level_sizes(N, levels)
    weights = _RICHARDSON_WEIGHTS[levels]
    systems = [build_discretized(model, n) for n in sizes]
    results = [
        monodromy_exponents(sys, orbit, k=k, seed=seed) for sys in systems
    ]
    fine = results[-1]
    multipliers = np.array(fine.multipliers, dtype=complex)
    for j, lam in enumerate(fine.multipliers):
        acc = weights[-1] * lam
        ok = True
        for w, res in zip(weights[:-1], results[:-1]):
            i = int(np.argmin(np.abs(res.multipliers - lam)))
            if abs(res.multipliers[i] - lam) > 0.5 * max(abs(lam), 0.01):
                ok = False
                break
            acc += w * res.multipliers[i]
        if ok:
            multipliers[j] = acc
    exponents = np.log(multipliers) / orbit.T
    order = np.argsort(-exponents.real)
    multipliers, exponents = multipliers[order], exponents[order]
    unit_err = float(np.min(np.abs(multipliers - 1.0)))
    return OracleFloquet(
        levels=sizes,
        systems=systems,
        results=results,
        multipliers=multipliers,
        exponents=exponents,
        unit_multiplier_error=unit_err,
        T=orbit.T,
    )


def oracle_eigenfunction(
    orbit: PeriodicOrbit, ofl: OracleFloquet, mu: float | None = None
) -> _PeriodicInterp:
    """Extrapolated, max-normalized eigenfunction profile at the leading
    nontrivial exponent (or at mu if given), sign-aligned across levels."""
    weights = _RICHARDSON_WEIGHTS[len(ofl.levels)]
    profiles = []
    for sys, res in zip(ofl.systems, ofl.results):
        mu_lvl = float(res.leading_nontrivial().real) if mu is None else mu
        profiles.append(monodromy_eigenfunction(sys, orbit, res, mu_lvl))
    t_ref = np.linspace(0.0, orbit.T, 512)
    ref = profiles[-1](t_ref)
    aligned = []
    for p in profiles:
        s = 1.0 if float(np.sum(p(t_ref) * ref)) >= 0 else -1.0
        aligned.append(_PeriodicInterp(T=p.T, values=s * p.values))
    combined = _combine_profiles(aligned, weights, orbit.T)
    combined.values[:] = _mode_gauge(combined.values)
    combined.values[-1] = combined.values[0]
    return combined


def oracle_phase_response(
    model: ModelSpec,
    orbit: PeriodicOrbit,
    N: int = 2000,
    levels: int = 3,
    quad_nodes: int = 64,
    subspace: int = 6,
    seed: int = 1,
) -> OracleResponse:
    """Extrapolated oracle phase response curve."""
    sizes = _level_sizes(N, levels)
    weights = _RICHARDSON_WEIGHTS[levels]
    curves = [
        discretized_adjoint(
            build_discretized(model, n), orbit, 0.0, quad_nodes=quad_nodes,
            subspace=subspace, seed=seed,
        )
        for n in sizes
    ]
    interp = _combine_profiles([c.interp for c in curves], weights, orbit.T)
    c = oracle_pairing(orbit, interp, _orbit_tangent(orbit), 0.0, quad_nodes=quad_nodes)
    interp.values *= orbit.omega / c
    return OracleResponse(
        kind="phase",
        mu=0.0,
        interp=interp,
        iterations=max(c_.iterations for c_ in curves),
        multiplier=curves[-1].multiplier,
        normalization=float(orbit.omega),
    )


def oracle_amplitude_response(
    orbit: PeriodicOrbit,
    ofl: OracleFloquet,
    rho: _PeriodicInterp | None = None,
    quad_nodes: int = 64,
    seed: int = 1,
) -> OracleResponse:
    """Extrapolated oracle amplitude response at the leading exponent.

    Each chain level uses its own exponent and (sign-aligned)
    eigenfunction; the combined curve is renormalized against the
    extrapolated pair so the amplitude pairing is exactly 1.
    """
    weights = _RICHARDSON_WEIGHTS[len(ofl.levels)]
    t_ref = np.linspace(0.0, orbit.T, 512)
    mu_ex = ofl.leading_nontrivial()
    rho_ex = rho if rho is not None else oracle_eigenfunction(orbit, ofl)
    ref = rho_ex(t_ref)
    curves = []
    for sys, res in zip(ofl.systems, ofl.results):
        mu_lvl = float(res.leading_nontrivial().real)
        rho_lvl = monodromy_eigenfunction(sys, orbit, res, mu_lvl)
        s = 1.0 if float(np.sum(rho_lvl(t_ref) * ref)) >= 0 else -1.0
        rho_lvl = _PeriodicInterp(T=rho_lvl.T, values=s * rho_lvl.values)
        curves.append(
            discretized_adjoint(
                sys, orbit, mu_lvl, rho=rho_lvl, quad_nodes=quad_nodes, seed=seed
            )
        )
    interp = _combine_profiles([c.interp for c in curves], weights, orbit.T)
    c = oracle_pairing(orbit, interp, rho_ex, mu_ex, quad_nodes=quad_nodes)
    interp.values /= c
    return OracleResponse(
        kind="amplitude",
        mu=mu_ex,
        interp=interp,
        iterations=max(c_.iterations for c_ in curves),
        multiplier=curves[-1].multiplier,
        normalization=1.0,
    )
