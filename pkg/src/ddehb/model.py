"""DDE model interface and the two built-in benchmark oscillators.

A model is the right-hand side F(x(t), x(t - tau)) together with its two
partial Jacobians.  Callbacks broadcast over leading axes: inputs of shape
(..., m) yield F of shape (..., m) and Jacobians of shape (..., m, m).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ModelSpec:
    """A delay system x'(t) = F(x(t), x(t - tau)) with analytic Jacobians.

    DF0 and DF1 are the partial derivatives of F with respect to the
    current and the delayed state.  They must be consistent with F (see
    verify_jacobians); they feed the Floquet and adjoint operators where
    finite-difference noise would contaminate determinant root-finding.
    """

    name: str
    m: int
    tau: float
    F: Callable[[np.ndarray, np.ndarray], np.ndarray]
    DF0: Callable[[np.ndarray, np.ndarray], np.ndarray]
    DF1: Callable[[np.ndarray, np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)


def kotani_scalar(delta: float = 0.05) -> ModelSpec:
    """Scalar benchmark with delay pi/2 whose limit cycle is cos(t).

    x'(t) = -x(t - pi/2) + delta * x(t) * (1 - x(t)^2 - x(t - pi/2)^2)
    """

    def F(z0, z1):
        z0 = np.asarray(z0, dtype=float)
        z1 = np.asarray(z1, dtype=float)
        return -z1 + delta * z0 * (1.0 - z0**2 - z1**2)

    def DF0(z0, z1):
        x = np.asarray(z0, dtype=float)[..., 0]
        xd = np.asarray(z1, dtype=float)[..., 0]
        return (delta * (1.0 - 3.0 * x**2 - xd**2))[..., None, None]

    def DF1(z0, z1):
        x = np.asarray(z0, dtype=float)[..., 0]
        xd = np.asarray(z1, dtype=float)[..., 0]
        return (-1.0 - 2.0 * delta * x * xd)[..., None, None]

    return ModelSpec(
        name="kotani",
        m=1,
        tau=np.pi / 2.0,
        F=F,
        DF0=DF0,
        DF1=DF1,
        params={"delta": delta},
    )


def cortico_thalamic(
    alpha: float = -0.039,
    beta: float = -0.4,
    gamma: float = -2.0,
    delta: float = -10.0,
    tau: float = 8.0,
) -> ModelSpec:
    """Two-component model for delayed cortico-thalamic EEG rhythms.

    x' = y
    y' = gamma*y + alpha*x + beta*x(t - tau) + delta*x^3
    """

    def F(z0, z1):
        z0 = np.asarray(z0, dtype=float)
        z1 = np.asarray(z1, dtype=float)
        x, y = z0[..., 0], z0[..., 1]
        xd = z1[..., 0]
        return np.stack([y, gamma * y + alpha * x + beta * xd + delta * x**3], axis=-1)

    def DF0(z0, z1):
        z0 = np.asarray(z0, dtype=float)
        x = z0[..., 0]
        out = np.zeros(z0.shape[:-1] + (2, 2))
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = alpha + 3.0 * delta * x**2
        out[..., 1, 1] = gamma
        return out

    def DF1(z0, z1):
        z0 = np.asarray(z0, dtype=float)
        out = np.zeros(z0.shape[:-1] + (2, 2))
        out[..., 1, 0] = beta
        return out

    return ModelSpec(
        name="cortico",
        m=2,
        tau=tau,
        F=F,
        DF0=DF0,
        DF1=DF1,
        params={"alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta, "tau": tau},
    )


BUILTIN_MODELS = {
    "kotani": kotani_scalar,
    "cortico": cortico_thalamic,
}


def make_model(name: str, **params) -> ModelSpec:
    """Instantiate a built-in model by name with parameter overrides."""
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; built-ins: {sorted(BUILTIN_MODELS)}"
        ) from None
    return factory(**params)


@dataclass
class JacobianReport:
    """Outcome of the finite-difference Jacobian consistency check."""

    ok: bool
    max_rel_error: float
    tol: float
    trials: int
    worst: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def verify_jacobians(
    model: ModelSpec, trials: int = 100, tol: float = 1e-6, seed: int = 0
) -> JacobianReport:
    """Compare DF0/DF1 against central differences of F at random points.

    Points are drawn uniformly from [-2, 2]^m for both arguments.  The
    report locates the worst entry; ok is False when the maximum relative
    error exceeds tol.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    h = 1e-5
    worst = {"error": 0.0}
    max_err = 0.0
    for _ in range(trials):
        z0 = rng.uniform(-2.0, 2.0, model.m)
        z1 = rng.uniform(-2.0, 2.0, model.m)
        for which, analytic in (("DF0", model.DF0(z0, z1)), ("DF1", model.DF1(z0, z1))):
            num = np.zeros((model.m, model.m))
            for j in range(model.m):
                dz = np.zeros(model.m)
                dz[j] = h
                if which == "DF0":
                    fp, fm = model.F(z0 + dz, z1), model.F(z0 - dz, z1)
                else:
                    fp, fm = model.F(z0, z1 + dz), model.F(z0, z1 - dz)
                num[:, j] = (fp - fm) / (2.0 * h)
            err = np.abs(num - analytic) / np.maximum(np.abs(analytic), 1.0)
            idx = np.unravel_index(np.argmax(err), err.shape)
            if err[idx] > max_err:
                max_err = float(err[idx])
                worst = {
                    "error": max_err,
                    "jacobian": which,
                    "entry": (int(idx[0]), int(idx[1])),
                    "z0": z0.copy(),
                    "z1": z1.copy(),
                }
    return JacobianReport(
        ok=max_err <= tol, max_rel_error=max_err, tol=tol, trials=trials, worst=worst
    )
