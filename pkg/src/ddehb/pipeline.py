"""Orchestration shared by the command-line front end and the validators."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import adjoint, floquet, oracle
from .config import RunConfig
from .cycle import CycleSeed, PeriodicOrbit, SolveOptions, seed_from_ansatz
from .errors import ConfigError
from .model import ModelSpec, make_model
from .spectral import FourierSeries


def build_model(cfg: RunConfig) -> ModelSpec:
    try:
        return make_model(cfg.model.name, **cfg.model.params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for model {cfg.model.name!r}: {exc}") from None


def sinusoid_history(model: ModelSpec, amplitude, period: float):
    amp = np.broadcast_to(np.atleast_1d(np.asarray(amplitude, float)), (model.m,))
    w = 2.0 * np.pi / period

    def history(s):
        s = np.asarray(s, dtype=float)
        return amp * np.cos(w * s)[..., None]

    return history


def build_seed(cfg: RunConfig, model: ModelSpec):
    """Seed per config: single-harmonic ansatz, oracle settle, or file."""
    sc = cfg.seed
    if sc.kind == "ansatz":
        return seed_from_ansatz(model.m, sc.amplitude, sc.period_guess, cfg.solver.M), None
    if sc.kind == "oracle":
        dt = sc.dt if sc.dt is not None else model.tau / 64.0
        opts = oracle.SettleOptions(
            dt=dt,
            M=cfg.solver.M,
            component=cfg.solver.anchor_component,
            observe_time=sc.observe_time,
        )
        history = sinusoid_history(model, sc.amplitude, sc.period_guess)
        settled = oracle.settle_to_cycle(model, history, sc.transient, opts)
        return settled.seed, settled
    if sc.kind == "file":
        with open(sc.path) as fh:
            data = json.load(fh)
        coeffs = np.array(
            [[complex(re, im) for re, im in comp] for comp in data["coeffs"]]
        ).T
        return CycleSeed(series=FourierSeries(data["T"], coeffs), period=data["T"]), None
    raise ConfigError(f"unknown seed kind {sc.kind!r}")


def solve_options(cfg: RunConfig) -> SolveOptions:
    return SolveOptions(
        M=cfg.solver.M,
        anchor_component=cfg.solver.anchor_component,
        tolerance=cfg.solver.tolerance,
        max_iterations=cfg.solver.max_iterations,
    )


@dataclass
class FloquetRun:
    scan: floquet.DetScanResult
    exponents: list[float]  # nontrivial, descending
    modes: list[floquet.FloquetMode]
    trivial_mode: floquet.FloquetMode


def run_floquet(cfg: RunConfig, orbit: PeriodicOrbit) -> FloquetRun:
    scan = floquet.det_scan(orbit, (cfg.scan.mu_min, cfg.scan.mu_max), cfg.scan.points)
    exponents = floquet.find_exponents(
        orbit,
        (cfg.scan.mu_min, cfg.scan.mu_max),
        cfg.scan.points,
        cfg.scan.exclude_zero_radius,
    )
    modes = [floquet.eigenfunction(orbit, mu) for mu in exponents]
    trivial = floquet.eigenfunction(orbit, 0.0)
    return FloquetRun(scan=scan, exponents=exponents, modes=modes, trivial_mode=trivial)


@dataclass
class ResponseRun:
    z: adjoint.ResponseCurve
    q: adjoint.ResponseCurve | None


def run_responses(
    cfg: RunConfig,
    orbit: PeriodicOrbit,
    mu: float | None,
    mode: floquet.FloquetMode | None,
    kinds: str = "both",
) -> ResponseRun:
    nodes = cfg.response.quadrature_nodes
    legacy = cfg.response.legacy_amplitude_normalization
    z = None
    q = None
    if kinds in ("both", "phase"):
        z = adjoint.solve_response(orbit, 0.0, "phase", quad_nodes=nodes)
    if kinds in ("both", "amplitude"):
        if mu is None or mode is None:
            raise ConfigError("amplitude response requires a refined nontrivial exponent")
        q = adjoint.solve_response(
            orbit, mu, "amplitude", floquet_mode=mode, quad_nodes=nodes,
            legacy_scaling=legacy,
        )
    return ResponseRun(z=z, q=q)
