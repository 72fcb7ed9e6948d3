"""Nonlinear eigenproblem det(M(mu)) = 0 for real Floquet exponents.

The stability operator collocates the linearized dynamics about the
converged orbit,

    M(mu) = (D(mu) kron I_m) - J0 - e^{-mu tau} J1 (Delta kron I_m),

with J0, J1 the block-diagonal Jacobians of the right-hand side along the
cycle (delayed orbit values read from the Fourier interpolant, never from
nearest samples).  Raw determinants overflow at modest sizes, so the scan
works with log-magnitude plus sign from pivoted factorization; the
smallest singular value serves as the refinement objective because it is
smooth near simple roots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cycle import PeriodicOrbit
from .errors import DegenerateNullspace, NoRootInBracket
from .spectral import FourierSeries, build_operators, sample_to_coeffs

SINGULARITY_RATIO = 1e-8  # sigma_min/sigma_max threshold for "singular"
DEGENERACY_GAP = 1e-6  # relative gap between two smallest singular values


def _jacobian_blocks(orbit: PeriodicOrbit):
    """DF0 and DF1 along the cycle at the grid times, (2M+1, m, m) each."""
    t = orbit.grid.sample_times
    x = orbit.X
    xd = orbit.delayed(t)
    return orbit.model.DF0(x, xd), orbit.model.DF1(x, xd)


def _blockdiag(blocks: np.ndarray) -> np.ndarray:
    K, m, _ = blocks.shape
    out = np.zeros((K * m, K * m))
    for n in range(K):
        out[n * m : (n + 1) * m, n * m : (n + 1) * m] = blocks[n]
    return out


@dataclass
class StabilityMatrix:
    mu: float
    matrix: np.ndarray


def build_stability_matrix(orbit: PeriodicOrbit, mu: float) -> StabilityMatrix:
    """Assemble M(mu) for the linearization about the converged orbit."""
    model = orbit.model
    ops = build_operators(orbit.M, orbit.T, model.tau, mu=mu)
    DF0, DF1 = _jacobian_blocks(orbit)
    Im = np.eye(model.m)
    mat = (
        np.kron(ops.D, Im)
        - _blockdiag(DF0)
        - np.exp(-mu * model.tau) * (_blockdiag(DF1) @ np.kron(ops.Delta, Im))
    )
    return StabilityMatrix(mu=float(mu), matrix=mat)


@dataclass
class ScanPoint:
    mu: float
    log_abs_det: float
    sign: float
    sigma_min: float


@dataclass
class DetScanResult:
    points: list[ScanPoint]
    failures: list[float] = field(default_factory=list)

    def sign_changes(self):
        """Bracketing intervals (mu_lo, mu_hi) where det changes sign."""
        out = []
        for a, b in zip(self.points, self.points[1:]):
            if a.sign != 0 and b.sign != 0 and a.sign != b.sign:
                out.append((a.mu, b.mu))
        return out


def det_scan(orbit: PeriodicOrbit, mu_range, grid_points: int = 200) -> DetScanResult:
    """Evaluate log|det M(mu)|, its sign and sigma_min on a uniform grid."""
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    lo, hi = mu_range
    mus = np.linspace(lo, hi, grid_points)
    points, failures = [], []
    for mu in mus:
        mat = build_stability_matrix(orbit, mu).matrix
        sign, logdet = np.linalg.slogdet(mat)
        if not np.isfinite(logdet) and sign == 0 and not np.all(np.isfinite(mat)):
            failures.append(float(mu))
            continue
        svals = np.linalg.svd(mat, compute_uv=False)
        points.append(
            ScanPoint(
                mu=float(mu),
                log_abs_det=float(logdet),
                sign=float(sign),
                sigma_min=float(svals[-1]),
            )
        )
    return DetScanResult(points=points, failures=failures)


def _sigma_extremes(orbit, mu):
    svals = np.linalg.svd(build_stability_matrix(orbit, mu).matrix, compute_uv=False)
    return float(svals[-1]), float(svals[0])


def _det_sign(orbit, mu):
    sign, _ = np.linalg.slogdet(build_stability_matrix(orbit, mu).matrix)
    return sign


def refine_exponent(orbit: PeriodicOrbit, bracket) -> float:
    """Polish a root of det(M(mu)) = 0 inside the bracket.

    Bisection on the determinant sign when the endpoints disagree,
    golden-section descent on sigma_min otherwise.  The refined mu must
    satisfy sigma_min <= 1e-8 sigma_max or NoRootInBracket is raised.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError("bracket must satisfy mu_lo < mu_hi")
    width_tol = 1e-14 * max(1.0, abs(lo), abs(hi))

    s_lo, s_hi = _det_sign(orbit, lo), _det_sign(orbit, hi)
    if s_lo != 0 and s_hi != 0 and s_lo != s_hi:
        a, b, sa = lo, hi, s_lo
        while b - a > width_tol:
            mid = 0.5 * (a + b)
            sm = _det_sign(orbit, mid)
            if sm == 0:
                a = b = mid
                break
            if sm == sa:
                a = mid
            else:
                b = mid
        mu_hat = 0.5 * (a + b)
    else:
        # no sign change: descend on the sigma_min dip
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - invphi * (b - a)
        dpt = a + invphi * (b - a)
        fc, _ = _sigma_extremes(orbit, c)
        fd, _ = _sigma_extremes(orbit, dpt)
        while b - a > width_tol:
            if fc < fd:
                b, dpt, fd = dpt, c, fc
                c = b - invphi * (b - a)
                fc, _ = _sigma_extremes(orbit, c)
            else:
                a, c, fc = c, dpt, fd
                dpt = a + invphi * (b - a)
                fd, _ = _sigma_extremes(orbit, dpt)
        mu_hat = 0.5 * (a + b)

    s_min, s_max = _sigma_extremes(orbit, mu_hat)
    if s_min > SINGULARITY_RATIO * s_max:
        raise NoRootInBracket(
            f"refinement stagnated at mu={mu_hat:.6e} with "
            f"sigma_min/sigma_max = {s_min / s_max:.3e}"
        )
    return float(mu_hat)


@dataclass
class FloquetMode:
    """A real exponent with its max-normalized sampled eigenfunction."""

    mu: float
    R: np.ndarray  # (2M+1, m) samples of rho on the grid
    series: FourierSeries
    sigma_min: float
    sigma_max: float
    residual: float  # ||M(mu) R|| / ||R||
    gauge: str = "max-sample-norm-1, largest-entry-positive"

    def value(self, t) -> np.ndarray:
        return self.series.evaluate(t)


def _fix_mode_gauge(R: np.ndarray) -> np.ndarray:
    """Scale so max per-sample Euclidean norm is 1; sign so the overall
    largest-magnitude entry is positive."""
    norms = np.linalg.norm(R, axis=1)
    R = R / norms.max()
    idx = np.unravel_index(np.argmax(np.abs(R)), R.shape)
    if R[idx] < 0:
        R = -R
    return R


def eigenfunction(orbit: PeriodicOrbit, mu: float) -> FloquetMode:
    """Extract the sampled eigenfunction of M(mu) at a refined exponent.

    The eigenfunction is the right singular vector for the smallest
    singular value (full SVD for robustness near near-degenerate
    spectra); raises DegenerateNullspace when the two smallest singular
    values are within 1e-6 relative.
    """
    mat = build_stability_matrix(orbit, mu).matrix
    U, svals, Vt = np.linalg.svd(mat)
    s_min, s_next, s_max = svals[-1], svals[-2], svals[0]
    if s_min > SINGULARITY_RATIO * s_max:
        raise ValueError(
            f"M(mu) is not singular at mu={mu:.6e}: "
            f"sigma_min/sigma_max = {s_min / s_max:.3e}"
        )
    if s_next - s_min <= DEGENERACY_GAP * max(s_next, np.finfo(float).eps * s_max):
        raise DegenerateNullspace(
            f"two smallest singular values within {DEGENERACY_GAP:.0e} relative "
            f"at mu={mu:.6e}: {s_min:.3e}, {s_next:.3e}"
        )
    R = _fix_mode_gauge(Vt[-1].reshape(-1, orbit.model.m))
    residual = float(
        np.linalg.norm(mat @ R.ravel()) / np.linalg.norm(R.ravel())
    )
    return FloquetMode(
        mu=float(mu),
        R=R,
        series=sample_to_coeffs(R, orbit.T),
        sigma_min=float(s_min),
        sigma_max=float(s_max),
        residual=residual,
    )


def find_exponents(
    orbit: PeriodicOrbit,
    mu_range,
    grid_points: int = 200,
    exclude_zero_radius: float = 1e-4,
) -> list[float]:
    """Scan-and-refine pipeline for nontrivial real exponents.

    The trivial root at mu = 0 is always present, so candidates inside
    exclude_zero_radius of zero are dropped.  Candidates come from
    determinant sign changes and from interior sigma_min dips.
    """
    scan = det_scan(orbit, mu_range, grid_points)
    brackets = list(scan.sign_changes())
    pts = scan.points
    for i in range(1, len(pts) - 1):
        if pts[i].sigma_min < pts[i - 1].sigma_min and pts[i].sigma_min < pts[i + 1].sigma_min:
            bracket = (pts[i - 1].mu, pts[i + 1].mu)
            if not any(b[0] <= pts[i].mu <= b[1] for b in brackets):
                brackets.append(bracket)
    roots = []
    for bracket in brackets:
        try:
            mu = refine_exponent(orbit, bracket)
        except NoRootInBracket:
            continue
        if abs(mu) < exclude_zero_radius:
            continue
        if all(abs(mu - r) > exclude_zero_radius for r in roots):
            roots.append(mu)
    roots.sort(reverse=True)
    return roots
