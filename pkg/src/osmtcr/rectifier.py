"""Axisymmetric two-layer thermal rectifier solved by the scaled Robin OSM.

Each layer is an annulus with temperature-dependent conductivity. The
steady radial equation ``-(1/r) (r kappa(T) T')' = 0`` is discretized by
finite volumes on a uniform radial grid. The nonlinearity is handled by
freezing kappa at the previous iterate (Picard), once per Schwarz iteration
by default.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import solve_banded

from .analysis import FrequencyBand, PhysicalParams, scaled_taus
from .optimizer import optimize_scaled_robin

T_MIN_VALID, T_MAX_VALID = 200.0, 1000.0


class RectifierError(RuntimeError):
    """The coupled nonlinear iteration failed."""


@dataclass(frozen=True)
class Affine:
    a: float
    b: float

    def __call__(self, T):
        return self.a + self.b * np.asarray(T, dtype=float)


@dataclass(frozen=True)
class ExpDecay:
    a: float
    b: float
    rate: float
    t_ref: float

    def __call__(self, T):
        return self.a + self.b * np.exp(self.rate * (np.asarray(T, dtype=float) - self.t_ref))


MaterialModel = Union[Affine, ExpDecay]

COPPER = Affine(413.4, -0.0516)
ALUMINA = ExpDecay(5.5, 34.5, -0.0033, 237.0)


def _guard(T, check: bool):
    if check:
        t = np.asarray(T, dtype=float)
        if np.any(t < T_MIN_VALID) or np.any(t > T_MAX_VALID):
            raise ValueError(f"temperature outside the model range [{T_MIN_VALID}, {T_MAX_VALID}] K")


def kappa_copper(T, check: bool = True):
    """Copper conductivity in W/(m K)."""
    _guard(T, check)
    v = COPPER(T)
    return float(v) if np.ndim(v) == 0 else v


def kappa_alumina(T, check: bool = True):
    """Alumina conductivity in W/(m K)."""
    _guard(T, check)
    v = ALUMINA(T)
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class RectifierConfig:
    r_inner: float = 0.05
    r_interface: float = 0.10
    r_outer: float = 0.15
    T_hot: float = 700.0
    T_cold: float = 300.0
    direction: str = "forward"
    r_c: float = 9.280e-5
    mesh_n: int = 200
    tol: float = 1e-6
    max_outer: int = 200
    seed: int = 0
    picard: str = "interleaved"
    inner_material: MaterialModel = COPPER
    outer_material: MaterialModel = ALUMINA

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_interface < self.r_outer:
            raise ValueError("need 0 < r_inner < r_interface < r_outer")
        if self.direction not in ("forward", "reverse"):
            raise ValueError("direction must be 'forward' or 'reverse'")
        if self.r_c < 0:
            raise ValueError("contact resistance must be nonnegative")
        if self.mesh_n < 2:
            raise ValueError("need at least 2 cells per layer")
        if not self.tol > 0 or self.max_outer < 1:
            raise ValueError("tol must be positive and max_outer at least 1")
        if self.picard not in ("interleaved", "converged"):
            raise ValueError("picard must be 'interleaved' or 'converged'")

    @property
    def boundary_temperatures(self) -> tuple[float, float]:
        """(T at r_inner, T at r_outer)."""
        if self.direction == "forward":
            return self.T_hot, self.T_cold
        return self.T_cold, self.T_hot

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("inner_material", "outer_material"):
            m = getattr(self, key)
            d[key] = {"model": type(m).__name__, **asdict(m)}
        return d


@dataclass
class RectifierResult:
    config: RectifierConfig
    r1: np.ndarray
    T1: np.ndarray
    r2: np.ndarray
    T2: np.ndarray
    osm_iterations: int
    converged: bool
    heat_flux: float  # W per metre of cylinder length, positive outward
    layer_fluxes: tuple[np.ndarray, np.ndarray] = field(repr=False)
    history: list[float] = field(default_factory=list, repr=False)
    p_history: list[float] = field(default_factory=list, repr=False)

    @property
    def interface_jump(self) -> float:
        return float(self.T1[-1] - self.T2[0])

    @property
    def interface_flux_density(self) -> float:
        """Outward heat flux per unit area at the interface."""
        return self.heat_flux / (2 * math.pi * self.config.r_interface)

    def profiles_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "T", "layer"])
            for layer, (r, T) in enumerate(((self.r1, self.T1), (self.r2, self.T2)), start=1):
                for ri, ti in zip(r, T):
                    w.writerow([f"{ri:.17g}", f"{ti:.17g}", layer])

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "direction": self.config.direction,
            "r_c": self.config.r_c,
            "iterations": self.osm_iterations,
            "converged": self.converged,
            "heat_flux": self.heat_flux,
            "interface_jump": self.interface_jump,
        }


def _face_conductance(r, T, material):
    rf = 0.5 * (r[1:] + r[:-1])
    kf = material(0.5 * (T[1:] + T[:-1]))
    if np.any(kf <= 0):
        raise RectifierError("nonpositive conductivity encountered")
    return rf * kf


def solve_layer(r: np.ndarray, T_old: np.ndarray, material, tau: float, g: float,
                robin_at: str, T_dirichlet: float) -> np.ndarray:
    """One frozen-coefficient radial solve with Dirichlet at one end, Robin at the other.

    The Robin condition is ``kappa dT/dn + tau T = g`` with n the outward
    normal of the layer at the Robin end.
    """
    n = len(r) - 1
    h = r[1] - r[0]
    w = _face_conductance(r, T_old, material) / h  # r_{i+1/2} kappa_{i+1/2} / h
    ab = np.zeros((3, n + 1))
    b = np.zeros(n + 1)
    # interior rows: -w_{i-1} T_{i-1} + (w_{i-1} + w_i) T_i - w_i T_{i+1} = 0
    ab[1, 1:n] = w[:-1] + w[1:]
    ab[0, 2:] = -w[1:]
    ab[2, :n - 1] = -w[:-1]
    if robin_at == "right":
        ab[1, 0], ab[0, 1] = 1.0, 0.0
        b[0] = T_dirichlet
        ab[1, n] = w[-1] + r[n] * tau
        ab[2, n - 1] = -w[-1]
        b[n] = r[n] * g
    elif robin_at == "left":
        ab[1, n], ab[2, n - 1] = 1.0, 0.0
        b[n] = T_dirichlet
        ab[1, 0] = w[0] + r[0] * tau
        ab[0, 1] = -w[0]
        b[0] = r[0] * g
    else:
        raise ValueError("robin_at must be 'left' or 'right'")
    return solve_banded((1, 1), ab, b)


def layer_heat_flow(r: np.ndarray, T: np.ndarray, material) -> np.ndarray:
    """Discrete outward heat flow per unit length, -2 pi r kappa dT/dr, on each face."""
    h = r[1] - r[0]
    return -2 * math.pi * _face_conductance(r, T, material) * np.diff(T) / h


def _local_taus(cfg: RectifierConfig, t1_gamma: float, t2_gamma: float, h: float):
    k1 = float(cfg.inner_material(t1_gamma))
    k2 = float(cfg.outer_material(t2_gamma))
    if k1 <= 0 or k2 <= 0:
        raise RectifierError("nonpositive conductivity at the interface")
    params = PhysicalParams(k1, k2, r_c=cfg.r_c)
    band = FrequencyBand(math.pi / (cfg.r_outer - cfg.r_inner), math.pi / h)
    p = optimize_scaled_robin(params, band, h).p_star
    return p, scaled_taus(p, params)


def solve_rectifier(cfg: RectifierConfig, check: bool = True) -> RectifierResult:
    """Scaled Robin OSM with Picard linearization on the two annular layers."""
    n = cfg.mesh_n
    r1 = np.linspace(cfg.r_inner, cfg.r_interface, n + 1)
    r2 = np.linspace(cfg.r_interface, cfg.r_outer, n + 1)
    h = r1[1] - r1[0]
    T_in, T_out = cfg.boundary_temperatures
    lo, hi = min(T_in, T_out), max(T_in, T_out)

    rng = np.random.default_rng(cfg.seed)
    tg1, tg2 = rng.uniform(lo, hi, 2)
    # initial profiles: linear from the Dirichlet value to a random interface value
    T1 = np.linspace(T_in, tg1, n + 1)
    T2 = np.linspace(tg2, T_out, n + 1)
    p, (tau12, tau21) = _local_taus(cfg, T1[-1], T2[0], h)
    # initial Robin data: zero flux at the random interface temperatures
    g1, g2 = tau12 * tg1, tau21 * tg2

    history, p_hist = [], []
    converged = False
    it = 0
    for it in range(1, cfg.max_outer + 1):
        T1_new = _subsolve(cfg, r1, T1, cfg.inner_material, tau12, g1, "right", T_in)
        T2_new = _subsolve(cfg, r2, T2, cfg.outer_material, tau21, g2, "left", T_out)
        if check:
            _guard(np.concatenate((T1_new, T2_new)), True)
        diff = max(float(np.max(np.abs(T1_new - T1))), float(np.max(np.abs(T2_new - T2))))
        history.append(diff)
        p_hist.append(p)
        # outward fluxes from the Robin rows each side just satisfied
        q1 = g1 - tau12 * T1_new[-1]
        q2 = g2 - tau21 * T2_new[0]
        T1, T2 = T1_new, T2_new
        if diff < cfg.tol:
            converged = True
            break
        p, (tau12_n, tau21_n) = _local_taus(cfg, T1[-1], T2[0], h)
        g1 = (-1.0 + tau12_n * cfg.r_c) * q2 + tau12_n * T2[0]
        g2 = (-1.0 + tau21_n * cfg.r_c) * q1 + tau21_n * T1[-1]
        tau12, tau21 = tau12_n, tau21_n

    f1 = layer_heat_flow(r1, T1, cfg.inner_material)
    f2 = layer_heat_flow(r2, T2, cfg.outer_material)
    flux = float(np.mean(np.concatenate((f1, f2))))
    return RectifierResult(cfg, r1, T1, r2, T2, it, converged, flux, (f1, f2), history, p_hist)


def _subsolve(cfg, r, T_old, material, tau, g, robin_at, T_d):
    T = solve_layer(r, T_old, material, tau, g, robin_at, T_d)
    if cfg.picard == "converged":
        for _ in range(100):
            T_next = solve_layer(r, T, material, tau, g, robin_at, T_d)
            if np.max(np.abs(T_next - T)) < 1e-3 * cfg.tol:
                return T_next
            T = T_next
    return T


def rectification_ratio(forward_flux: float, reverse_flux: float) -> float:
    if reverse_flux == 0:
        raise ZeroDivisionError("reverse flux is zero")
    return abs(forward_flux) / abs(reverse_flux)


def run_both_directions(base: RectifierConfig, r_c_forward: float = 9.280e-5,
                        r_c_reverse: float = 0.01552) -> dict:
    fwd = solve_rectifier(_with(base, direction="forward", r_c=r_c_forward))
    rev = solve_rectifier(_with(base, direction="reverse", r_c=r_c_reverse))
    return {"forward": fwd, "reverse": rev,
            "ratio": rectification_ratio(fwd.heat_flux, rev.heat_flux)}


def _with(cfg: RectifierConfig, **changes) -> RectifierConfig:
    from dataclasses import replace
    return replace(cfg, **changes)


def write_summary(results: dict, path) -> None:
    out = {
        "forward": results["forward"].summary(),
        "reverse": results["reverse"].summary(),
        "rectification_ratio": results["ratio"],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
