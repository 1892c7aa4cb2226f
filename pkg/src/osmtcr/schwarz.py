"""Parallel optimized Schwarz iteration for two layers with contact resistance."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .analysis import (
    PhysicalParams,
    RawPair,
    StandardRobin,
    TransmissionSpec,
    spec_to_dict,
    transmission_coefficients,
)
from .subdomain import (
    Field,
    SubdomainProblem,
    SubdomainSolver,
    interface_flux,
    interface_trace,
    layered_domains,
    robin_flux,
)

UPDATE_MODES = ("derivative_free", "direct")
CRITERIA = ("error", "difference")


class UnsupportedSpecError(ValueError):
    """The requested quantity is not defined for this transmission choice."""


@dataclass(frozen=True)
class OsmConfig:
    params: PhysicalParams
    transmission: TransmissionSpec
    tol: float = 1e-6
    max_iter: int = 500
    seed: int = 0
    update_mode: str = "derivative_free"
    criterion: str = "error"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"kappa1": p.kappa1, "kappa2": p.kappa2, "c1": p.c1, "c2": p.c2, "r_c": p.r_c},
            "transmission": spec_to_dict(self.transmission),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "seed": self.seed,
            "update_mode": self.update_mode,
            "criterion": self.criterion,
        }


@dataclass(frozen=True)
class IterationRecord:
    n: int
    err1_inf: float
    err2_inf: float
    diff_inf: float
    pseudo_energy: float
    trace1: np.ndarray = field(repr=False)
    trace2: np.ndarray = field(repr=False)
    flux1: np.ndarray = field(repr=False)
    flux2: np.ndarray = field(repr=False)

    @property
    def err_inf(self) -> float:
        return max(self.err1_inf, self.err2_inf)


@dataclass
class IterationTrace:
    config: OsmConfig
    records: list[IterationRecord]
    converged: bool
    iterations_used: int
    fields: Optional[tuple[Field, Field]] = field(default=None, repr=False)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.err_inf for r in self.records])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.pseudo_energy for r in self.records])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "err1_inf", "err2_inf", "pseudo_energy"])
            for r in self.records:
                w.writerow([r.n, f"{r.err1_inf:.17g}", f"{r.err2_inf:.17g}", f"{r.pseudo_energy:.17g}"])

    def summary(self) -> dict:
        try:
            contraction = observed_contraction(self)
        except ValueError:
            contraction = None
        return {
            "config": self.config.to_dict(),
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "observed_contraction": contraction,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def update_interface_data(tau12, tau21, r_c, trace_T1, trace_T2, h1_prev, h2_prev):
    """Next Robin data from the previous traces and data only (no normal derivatives)."""
    arrays = [np.asarray(a, dtype=float) for a in (trace_T1, trace_T2, h1_prev, h2_prev)]
    if len({a.shape for a in arrays}) != 1:
        raise ValueError("interface vectors must have matching lengths")
    t1, t2, g1, g2 = arrays
    h1 = (tau21 + tau12 - tau12 * r_c * tau21) * t2 + (-1.0 + tau12 * r_c) * g2
    h2 = (tau12 + tau21 - tau21 * r_c * tau12) * t1 + (-1.0 + tau21 * r_c) * g1
    return h1, h2


def direct_interface_data(tau12, tau21, r_c, trace_T1, trace_T2, flux_T1, flux_T2):
    """Next Robin data built from traces and outward normal fluxes."""
    arrays = [np.asarray(a, dtype=float) for a in (trace_T1, trace_T2, flux_T1, flux_T2)]
    if len({a.shape for a in arrays}) != 1:
        raise ValueError("interface vectors must have matching lengths")
    t1, t2, q1, q2 = arrays
    h1 = (-1.0 + tau12 * r_c) * q2 + tau12 * t2
    h2 = (-1.0 + tau21 * r_c) * q1 + tau21 * t1
    return h1, h2


def _trapezoid(values: np.ndarray, ds: float, pad: bool) -> float:
    v = np.asarray(values, dtype=float)
    if pad:
        v = np.concatenate(([0.0], v, [0.0]))
    return float(np.trapezoid(v, dx=ds))


def pseudo_energy(step: IterationRecord, tau, ds: float, pad: bool = True) -> float:
    """Interface energy sum_i int |kappa_i d_n e_i|^2 + |p e_i|^2 ds (trapezoid rule).

    ``tau`` is the scalar Robin parameter, or a (tau12, tau21) pair that must
    be equal. With ``pad`` the arrays are taken as interior interface nodes
    and padded with the zero values of the homogeneous Dirichlet corners.
    """
    if isinstance(tau, (tuple, list)):
        t12, t21 = tau
        if not math.isclose(t12, t21, rel_tol=1e-14, abs_tol=0.0):
            raise UnsupportedSpecError("pseudo-energy needs tau12 == tau21")
        tau = t12
    total = 0.0
    for e, q in ((step.trace1, step.flux1), (step.trace2, step.flux2)):
        total += _trapezoid(np.asarray(q) ** 2 + (tau * np.asarray(e)) ** 2, ds, pad)
    return total


def observed_contraction(trace: IterationTrace) -> float:
    """Geometric mean of the double-step ratios ||T^{n+2}|| / ||T^n||."""
    if trace.converged and trace.iterations_used <= 2:
        return 0.0
    e = trace.errors
    if len(e) < 4:
        raise ValueError("need at least 4 iterations to measure contraction")
    if np.any(e == 0):
        return 0.0
    ratios = e[2:] / e[:-2]
    return float(np.exp(np.mean(np.log(ratios))))


def two_layer_problems(params: PhysicalParams, h: float, source=None, dirichlet=None):
    """Templates for Omega1 = (-1,0)x(0,1) and Omega2 = (0,1)x(0,1)."""
    d1, d2 = layered_domains(h)
    return (SubdomainProblem(d1, params.kappa1, params.c1, 1.0, dirichlet, None, source),
            SubdomainProblem(d2, params.kappa2, params.c2, 1.0, dirichlet, None, source))


def _energy_tau(spec: TransmissionSpec, tau12: float, tau21: float):
    if isinstance(spec, StandardRobin):
        return spec.p
    if isinstance(spec, RawPair) and tau12 == tau21:
        return tau12
    return None


def run_osm(problems: Sequence[SubdomainProblem], config: OsmConfig,
            initial: Optional[tuple[np.ndarray, np.ndarray]] = None,
            keep_fields: bool = False) -> IterationTrace:
    """Iterate both Robin subproblems in parallel until the stopping test passes.

    The error criterion stops on max(||T1||, ||T2||) < tol, meant for zero
    data where the iterates are the errors. The difference criterion stops on
    the max-norm change between successive iterates.
    """
    p1, p2 = problems
    d1, d2 = p1.domain, p2.domain
    if d1.n_interface != d2.n_interface or not np.allclose(d1.y_range, d2.y_range):
        raise ValueError("subdomain interface grids do not match")
    params = config.params
    tau12, tau21 = transmission_coefficients(config.transmission, params)
    r_c = params.r_c
    s1 = SubdomainSolver(replace(p1, robin_coeff=tau12, interface_rhs=None))
    s2 = SubdomainSolver(replace(p2, robin_coeff=tau21, interface_rhs=None))

    if initial is None:
        rng = np.random.default_rng(config.seed)
        g1 = rng.uniform(-1.0, 1.0, d1.n_interface)
        g2 = rng.uniform(-1.0, 1.0, d2.n_interface)
    else:
        g1, g2 = (np.asarray(a, dtype=float).copy() for a in initial)

    e_tau = _energy_tau(config.transmission, tau12, tau21)
    records: list[IterationRecord] = []
    prev = None
    converged = False
    for n in range(1, config.max_iter + 1):
        T1, T2 = s1.solve(g1), s2.solve(g2)
        t1, t2 = interface_trace(T1), interface_trace(T2)
        q1, q2 = robin_flux(t1, g1, tau12), robin_flux(t2, g2, tau21)
        diff = math.inf
        if prev is not None:
            diff = max(float(np.max(np.abs(T1.values - prev[0].values))),
                       float(np.max(np.abs(T2.values - prev[1].values))))
        rec = IterationRecord(n, T1.max_norm(), T2.max_norm(), diff, math.nan, t1, t2, q1, q2)
        if e_tau is not None:
            rec = replace(rec, pseudo_energy=pseudo_energy(rec, e_tau, d1.h))
        records.append(rec)
        stop_value = rec.err_inf if config.criterion == "error" else diff
        if stop_value < config.tol:
            converged = True
            break
        if config.update_mode == "derivative_free":
            g1, g2 = update_interface_data(tau12, tau21, r_c, t1, t2, g1, g2)
        else:
            g1, g2 = direct_interface_data(tau12, tau21, r_c, t1, t2,
                                           interface_flux(T1, p1.kappa), interface_flux(T2, p2.kappa))
        prev = (T1, T2)
    return IterationTrace(config, records, converged, len(records),
                          (T1, T2) if keep_fields else None)
