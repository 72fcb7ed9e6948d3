"""Harmonic-balance zero problem for the periodic orbit and its period.

The unknown vector is the sampled orbit X (grid-major, shape (2M+1, m))
together with the period T.  Collocating the delay system on the grid
gives m(2M+1) equations

    (D0 kron I_m) X - F(X, (Delta kron I_m) X) = 0,

closed by one phase-anchor equation: the chosen state component has
vanishing time derivative at t = 0.  The square system is solved by
damped (Levenberg-Marquardt) least squares with an analytic Jacobian in
X and a finite-difference column in T, since both the derivative and the
delay operator depend on the period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergedToEquilibrium,
    MaxIterations,
    NonFiniteState,
    SingularJacobian,
)
from .model import ModelSpec
from .spectral import FourierSeries, SpectralGrid, build_operators, sample_to_coeffs

EQUILIBRIUM_HARMONIC_FLOOR = 1e-8


@dataclass
class SolveOptions:
    M: int = 20
    anchor_component: int = 0
    max_iterations: int = 100
    tolerance: float = 1e-10  # residual max-norm
    lambda_init: float = 1e-3
    lambda_factor: float = 10.0
    step_tolerance: float = 1e-14
    period_fd_step: float = 1e-6  # relative step for the T column

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.anchor_component < 0:
            raise ValueError("anchor component must be nonnegative")


@dataclass
class CycleSeed:
    """Initial guess: a Fourier series plus a period guess."""

    series: FourierSeries
    period: float


@dataclass
class PeriodicOrbit:
    """A converged harmonic-balance orbit with its Fourier interpolant."""

    model: ModelSpec
    T: float
    M: int
    anchor_component: int
    X: np.ndarray  # (2M+1, m) samples on the collocation grid
    series: FourierSeries
    residual_norm: float
    iterations: int

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    @property
    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.M, self.T)

    def value(self, t) -> np.ndarray:
        return self.series.evaluate(t)

    def derivative(self, t) -> np.ndarray:
        return self.series.derivative().evaluate(t)

    def delayed(self, t) -> np.ndarray:
        return self.series.evaluate(np.asarray(t) - self.model.tau)

    @property
    def xdot_samples(self) -> np.ndarray:
        return self.series.derivative().evaluate(self.grid.sample_times)


class _OperatorCache:
    """Rebuild D0/Delta whenever T moves more than 1e-14 relative."""

    def __init__(self, M, tau):
        self.M = M
        self.tau = tau
        self._T = None
        self._ops = None

    def get(self, T):
        if self._T is None or abs(T - self._T) > 1e-14 * abs(self._T):
            self._ops = build_operators(self.M, T, self.tau)
            self._T = T
        return self._ops


def _residual_arrays(model, ops, X, anchor):
    """Dynamic residual (2M+1, m) and the scalar phase-anchor residual."""
    Xd = ops.Delta @ X
    R = ops.D0 @ X - model.F(X, Xd)
    center = ops.grid.M  # row index of t = 0
    phase = float((ops.D0 @ X[:, anchor])[center])
    return R, phase


def residual(model: ModelSpec, X: np.ndarray, T: float, anchor: int = 0) -> np.ndarray:
    """Stacked residual of the collocated system plus the anchor equation.

    Returns a vector of length m(2M+1)+1; the first block is the
    collocated delay-system residual, the last entry the derivative of
    the anchor component at the time origin.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    M = (X.shape[0] - 1) // 2
    ops = build_operators(M, T, model.tau)
    R, phase = _residual_arrays(model, ops, X, anchor)
    out = np.concatenate([R.ravel(), [phase]])
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("non-finite right-hand side in cycle residual")
    return out


def _jacobian(model, ops, X, T, anchor, opts):
    """Analytic d(residual)/dX plus a central finite-difference T column."""
    K, m = X.shape
    Xd = ops.Delta @ X
    DF0 = model.DF0(X, Xd)  # (K, m, m)
    DF1 = model.DF1(X, Xd)
    n_dyn = K * m

    J = np.zeros((n_dyn + 1, n_dyn + 1))
    Im = np.eye(m)
    J[:n_dyn, :n_dyn] = np.kron(ops.D0, Im)
    # block-diagonal DF0 and DF1 composed with the delay operator
    for n in range(K):
        r = slice(n * m, (n + 1) * m)
        J[r, r] -= DF0[n]
    Delta_kron = np.kron(ops.Delta, Im)
    J1 = np.zeros((n_dyn, n_dyn))
    for n in range(K):
        r = slice(n * m, (n + 1) * m)
        J1[r, r] = DF1[n]
    J[:n_dyn, :n_dyn] -= J1 @ Delta_kron

    center = ops.grid.M
    J[n_dyn, anchor : n_dyn : m] = ops.D0[center, :]

    # period column: both omega_p and the delay symbol depend on T
    h = opts.period_fd_step * T
    rp = _stacked_residual(model, X, T + h, anchor, opts)
    rm = _stacked_residual(model, X, T - h, anchor, opts)
    J[:, n_dyn] = (rp - rm) / (2.0 * h)
    return J


def _stacked_residual(model, X, T, anchor, opts, cache=None):
    M = (X.shape[0] - 1) // 2
    ops = cache.get(T) if cache is not None else build_operators(M, T, model.tau)
    R, phase = _residual_arrays(model, ops, X, anchor)
    return np.concatenate([R.ravel(), [phase]])


def seed_from_ansatz(m: int, amplitude, period_guess: float, M: int = 20) -> CycleSeed:
    """Single-harmonic seed: a_1 = amplitude/2 per component, a_0 = 0."""
    if period_guess <= 0:
        raise ValueError("period guess must be positive")
    amp = np.broadcast_to(np.atleast_1d(np.asarray(amplitude, dtype=float)), (m,))
    coeffs = np.zeros((2 * M + 1, m), dtype=complex)
    coeffs[M + 1] = amp / 2.0  # p = +1
    coeffs[M - 1] = amp / 2.0  # p = -1 (conjugate partner)
    return CycleSeed(series=FourierSeries(period_guess, coeffs), period=period_guess)


def solve_cycle(model: ModelSpec, seed: CycleSeed, opts: SolveOptions | None = None) -> PeriodicOrbit:
    """Solve the collocated zero problem for (X, T) by damped least squares.

    Raises MaxIterations, SingularJacobian or DivergedToEquilibrium; the
    last one signals collapse onto an equilibrium (all nonzero harmonics
    below 1e-8), which the zero problem always admits.
    """
    opts = opts or SolveOptions()
    if seed.period <= 0:
        raise ValueError("seed period must be positive")
    if opts.anchor_component >= model.m:
        raise ValueError("anchor component out of range")

    M = opts.M
    K = 2 * M + 1
    grid0 = SpectralGrid(M, seed.period)
    X = np.asarray(seed.series.evaluate(grid0.sample_times), dtype=float)
    T = float(seed.period)
    cache = _OperatorCache(M, model.tau)
    anchor = opts.anchor_component

    r = _stacked_residual(model, X, T, anchor, opts, cache)
    if not np.all(np.isfinite(r)):
        raise NonFiniteState("non-finite residual at the seed")
    lam = opts.lambda_init
    n_dyn = K * model.m
    iterations = 0
    res_norm = float(np.abs(r).max())

    while res_norm > opts.tolerance:
        if iterations >= opts.max_iterations:
            raise MaxIterations(
                f"no convergence in {opts.max_iterations} iterations "
                f"(residual {res_norm:.3e})",
                residual_norm=res_norm,
                iterations=iterations,
            )
        iterations += 1
        ops = cache.get(T)
        J = _jacobian(model, ops, X, T, anchor, opts)
        A = J.T @ J
        g = J.T @ r

        accepted = False
        step_norm = 0.0
        for _ in range(60):
            A_damped = A + lam * np.eye(A.shape[0])
            try:
                step = np.linalg.solve(A_damped, -g)
            except np.linalg.LinAlgError:
                raise SingularJacobian("normal equations are singular") from None
            if not np.all(np.isfinite(step)):
                raise SingularJacobian("normal equations produced non-finite step")
            X_new = X + step[:n_dyn].reshape(K, model.m)
            T_new = T + step[n_dyn]
            if T_new <= 0:
                lam *= opts.lambda_factor
                continue
            r_new = _stacked_residual(model, X_new, T_new, anchor, opts, cache)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < np.linalg.norm(r):
                X, T, r = X_new, T_new, r_new
                lam = max(lam / opts.lambda_factor, 1e-14)
                accepted = True
                step_norm = float(np.linalg.norm(step))
                break
            lam *= opts.lambda_factor

        res_norm = float(np.abs(r).max())
        if not accepted or step_norm <= opts.step_tolerance:
            break

    if res_norm > opts.tolerance:
        raise MaxIterations(
            f"stalled at residual {res_norm:.3e} above tolerance {opts.tolerance:.1e}",
            residual_norm=res_norm,
            iterations=iterations,
        )

    series = sample_to_coeffs(X, T)
    nonzero = np.abs(series.coeffs.copy())
    nonzero[M] = 0.0  # drop the a_0 row
    if nonzero.max() < EQUILIBRIUM_HARMONIC_FLOOR:
        raise DivergedToEquilibrium(
            "solution collapsed to a constant: all nonzero harmonics below "
            f"{EQUILIBRIUM_HARMONIC_FLOOR:.0e}"
        )

    return PeriodicOrbit(
        model=model,
        T=T,
        M=M,
        anchor_component=anchor,
        X=X,
        series=series,
        residual_norm=res_norm,
        iterations=iterations,
    )


@dataclass
class SweepRow:
    M: int
    T: float
    tail_energy: float
    residual_norm: float
    error: str = ""


def convergence_sweep(model, seed, opts, M_list) -> list[SweepRow]:
    """Re-solve the cycle over increasing truncations M.

    Reports the period and the coefficient tail energy
    sum_{|p| > M/2} |a_p|^2 per truncation, used to certify that M is
    large enough.  Solver failures are recorded per entry.
    """
    M_list = list(M_list)
    if not M_list:
        raise ValueError("M_list must be nonempty")
    if any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ValueError("M_list must be strictly increasing")
    rows = []
    for M in M_list:
        run_opts = SolveOptions(
            M=M,
            anchor_component=opts.anchor_component,
            max_iterations=opts.max_iterations,
            tolerance=opts.tolerance,
            lambda_init=opts.lambda_init,
            lambda_factor=opts.lambda_factor,
            step_tolerance=opts.step_tolerance,
        )
        try:
            orbit = solve_cycle(model, seed, run_opts)
        except Exception as exc:  # propagate details per entry
            rows.append(SweepRow(M=M, T=float("nan"), tail_energy=float("nan"),
                                 residual_norm=float("nan"), error=str(exc)))
            continue
        rows.append(
            SweepRow(
                M=M,
                T=orbit.T,
                tail_energy=orbit.series.tail_energy(M // 2),
                residual_norm=orbit.residual_norm,
            )
        )
    return rows
