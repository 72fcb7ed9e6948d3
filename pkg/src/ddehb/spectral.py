"""Fourier collocation machinery on the symmetric grid t_n = nT/(2M+1).

All operators act on real sample vectors laid out grid-major: an array of
shape (2M+1, m) flattens (C order) to the stacked vector used by the
stability and adjoint systems.  Complex quantities (the DFT matrix, the
diagonal derivative/delay symbols) stay internal; the public matrices are
the real parts left after symmetrization, with the discarded imaginary
residue tracked and bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Largest tolerated imaginary residue, per unit of 2M+1, when realifying
# S L S^-1 and S Gamma S^-1.
IMAG_RESIDUE_BOUND = 1e-12


def _validate_grid(M, T):
    if int(M) != M or M < 1:
        raise ValueError(f"truncation order M must be a positive integer, got {M}")
    if not T > 0:
        raise ValueError(f"period T must be positive, got {T}")


@dataclass(frozen=True)
class SpectralGrid:
    """Collocation grid of 2M+1 equispaced samples, symmetric about t=0."""

    M: int
    T: float

    def __post_init__(self):
        _validate_grid(self.M, self.T)

    @property
    def n_samples(self) -> int:
        return 2 * self.M + 1

    @property
    def indices(self) -> np.ndarray:
        """Harmonic/sample indices n = -M..M."""
        return np.arange(-self.M, self.M + 1)

    @property
    def sample_times(self) -> np.ndarray:
        return self.indices * (self.T / self.n_samples)

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    @property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies omega_p = 2 pi p / T for p = -M..M."""
        return self.indices * self.omega


@dataclass
class FourierSeries:
    """Truncated Fourier series sum_p a_p e^{i omega_p t} with a_{-p} = a_p*.

    coeffs has shape (2M+1, m); row index 0 corresponds to p = -M.
    Conjugate symmetry is enforced on construction so the time-domain
    signal is real.
    """

    T: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] % 2 != 1:
            raise ValueError("coefficient count must be odd (2M+1)")
        # symmetrize: average a_p with conj(a_{-p})
        self.coeffs = 0.5 * (c + np.conj(c[::-1]))

    @property
    def M(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1) * (2.0 * np.pi / self.T)

    def evaluate(self, t) -> np.ndarray:
        """Evaluate the series at times t; returns shape t.shape + (m,)."""
        t = np.asarray(t, dtype=float)
        phase = np.exp(1j * np.multiply.outer(t, self.frequencies))
        return np.real(phase @ self.coeffs)

    def derivative(self) -> "FourierSeries":
        return FourierSeries(self.T, (1j * self.frequencies)[:, None] * self.coeffs)

    def shifted(self, dt: float) -> "FourierSeries":
        """Series of t -> x(t + dt)."""
        return FourierSeries(
            self.T, np.exp(1j * self.frequencies * dt)[:, None] * self.coeffs
        )

    def tail_energy(self, cutoff: int) -> float:
        """Sum of |a_p|^2 over |p| > cutoff, all components."""
        p = np.arange(-self.M, self.M + 1)
        mask = np.abs(p) > cutoff
        return float(np.sum(np.abs(self.coeffs[mask]) ** 2))


@dataclass
class SpectralOperators:
    """DFT matrix, diagonal symbols and the derived real operators.

    D is the real differentiation-plus-shift matrix Re(S L(mu) S^-1) and
    Delta the real delay matrix Re(S Gamma S^-1).  Delta.T is the exact
    advance (shift by +tau) operator on the same grid.
    """

    grid: SpectralGrid
    tau: float
    mu: float
    S: np.ndarray
    S_inv: np.ndarray
    L: np.ndarray
    Gamma: np.ndarray
    D: np.ndarray
    Delta: np.ndarray
    imag_residue: float = field(default=0.0)

    @property
    def D0(self) -> np.ndarray:
        """Pure differentiation matrix Re(S L(0) S^-1) = D - mu*I."""
        return self.D - self.mu * np.eye(self.grid.n_samples)

    @property
    def Delta_advance(self) -> np.ndarray:
        return self.Delta.T.copy()


def build_operators(M: int, T: float, tau: float, mu: float = 0.0) -> SpectralOperators:
    """Assemble the spectral operators for a given (M, T, tau, mu).

    S has entries e^{2 pi i n p/(2M+1)} for n, p = -M..M, L(mu) the
    diagonal entries mu + i omega_p and Gamma the delay symbol
    e^{-i omega_p tau}.  The derived matrices D and Delta are realified;
    the discarded imaginary magnitude must stay below
    IMAG_RESIDUE_BOUND * (2M+1).
    """
    _validate_grid(M, T)
    if tau < 0:
        raise ValueError(f"delay tau must be nonnegative, got {tau}")
    grid = SpectralGrid(M, T)
    n = grid.indices
    K = grid.n_samples
    S = np.exp(2j * np.pi * np.outer(n, n) / K)
    S_inv = np.conj(S) / K
    omega_p = grid.frequencies
    L = np.diag(mu + 1j * omega_p)
    Gamma = np.diag(np.exp(-1j * omega_p * tau))

    D_c = S @ L @ S_inv
    Delta_c = S @ Gamma @ S_inv
    residue = max(np.abs(D_c.imag).max(), np.abs(Delta_c.imag).max())
    if residue > IMAG_RESIDUE_BOUND * K:
        raise ValueError(
            f"imaginary residue {residue:.3e} above bound {IMAG_RESIDUE_BOUND * K:.3e}"
        )
    return SpectralOperators(
        grid=grid,
        tau=tau,
        mu=mu,
        S=S,
        S_inv=S_inv,
        L=L,
        Gamma=Gamma,
        D=D_c.real.copy(),
        Delta=Delta_c.real.copy(),
        imag_residue=float(residue),
    )


def sample_to_coeffs(samples: np.ndarray, T: float) -> FourierSeries:
    """Invert X = S A for samples laid out (2M+1, m) on the grid."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] % 2 != 1:
        raise ValueError(f"sample count {X.shape[0]} does not match a 2M+1 grid")
    K = X.shape[0]
    M = (K - 1) // 2
    n = np.arange(-M, M + 1)
    S_inv = np.exp(-2j * np.pi * np.outer(n, n) / K) / K
    return FourierSeries(T, S_inv @ X)


def coeffs_to_samples(series: FourierSeries) -> np.ndarray:
    """Sample the series on its own collocation grid; returns (2M+1, m)."""
    grid = SpectralGrid(series.M, series.T)
    return series.evaluate(grid.sample_times)


def evaluate(series: FourierSeries, t) -> np.ndarray:
    """Continuous readout of the truncated series at time(s) t."""
    return series.evaluate(t)


def block_apply(op: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Apply a (2M+1)x(2M+1) operator across each state component.

    Equivalent to (op kron I_m) acting on the grid-major flattening of
    samples, without materializing the Kronecker product.
    """
    return op @ samples
