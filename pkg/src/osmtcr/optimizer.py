"""Optimized transmission parameters for the scaled and standard Robin conditions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .analysis import (
    FrequencyBand,
    PhysicalParams,
    ScaledRobin,
    StandardRobin,
    max_rho_on_band,
    rho_scaled,
)

METHODS = ("closed_form", "equioscillation", "asymptotic", "asymptotic_rc0",
           "numeric_direct_search")


class BracketError(ValueError):
    """A root-finding bracket could not be established."""


@dataclass(frozen=True)
class OptimizedParameter:
    p_star: float
    method: str
    predicted_max_rho: float
    band: FrequencyBand

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")


def _bisect(f, lo: float, hi: float, xtol: float = 0.0, max_iter: int = 400) -> float:
    """Bisection on a sign-changing bracket, run down to float resolution by default."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo if abs(flo) <= abs(f(hi)) else hi


def equioscillation_residual(p: float, params: PhysicalParams, band: FrequencyBand) -> float:
    return float(rho_scaled(band.k_min, p, params) - rho_scaled(band.k_max, p, params))


def _check_band_mesh(band: FrequencyBand, h: float):
    if not h > 0:
        raise ValueError("mesh size must be positive")
    if not math.isclose(band.k_max, math.pi / h, rel_tol=1e-9):
        raise ValueError(f"band.k_max={band.k_max!r} does not match pi/h={math.pi / h!r}")


def optimal_p_closed_form(params: PhysicalParams, band: FrequencyBand, h: float) -> OptimizedParameter:
    """Exact min-max scaled Robin parameter for c1 = c2 = 0, Rc > 0, k_max = pi/h."""
    if params.c1 != 0 or params.c2 != 0:
        raise ValueError("closed form requires c1 = c2 = 0; use optimal_p_equioscillation")
    if params.r_c == 0:
        raise ValueError("closed form requires Rc > 0; use asymptotic_p_rc0")
    _check_band_mesh(band, h)
    k1, k2, rc, km = params.kappa1, params.kappa2, params.r_c, band.k_min
    pi = math.pi
    num = pi * rc * k1 * k2 * km + math.sqrt(pi) * math.sqrt(
        ((pi * rc * k1 + h) * k2 + h * k1) * km * ((rc * k1 * km + 1) * k2 + k1))
    den = (rc * (h * km + pi) * k2 + h) * k1 + h * k2
    p = num / den
    return OptimizedParameter(p, "closed_form", float(rho_scaled(km, p, params)), band)


def optimal_p_equioscillation(params: PhysicalParams, band: FrequencyBand) -> OptimizedParameter:
    """Root of rho_SR(k_min, p) = rho_SR(k_max, p) on (k_min, k_max) by bisection."""
    if params.r_c <= 0:
        raise ValueError("equioscillation solve requires Rc > 0")

    def f(p):
        return equioscillation_residual(p, params, band)

    lo, hi = band.k_min, band.k_max
    if not (f(lo) < 0 < f(hi)):
        raise BracketError("equioscillation residual does not change sign on the band")
    guess = _c_hat(params, band.k_min)
    if lo < guess < hi:
        if f(guess) < 0:
            lo = guess
        else:
            hi = guess
    p = _bisect(f, lo, hi)
    return OptimizedParameter(p, "equioscillation", float(rho_scaled(band.k_min, p, params)), band)


def _c_hat(params: PhysicalParams, k_min: float) -> float:
    k1, k2, rc = params.kappa1, params.kappa2, params.r_c
    return k_min + math.sqrt(k_min**2 + k_min / (rc * k1) + k_min / (rc * k2))


def g_kmin(cp: float, params: PhysicalParams, k_min: float) -> float:
    k1, k2, rc = params.kappa1, params.kappa2, params.r_c
    e1, e2 = params.eta(1), params.eta(2)
    f1k, f2k = math.sqrt(k_min**2 + e1), math.sqrt(k_min**2 + e2)
    f1c, f2c = math.sqrt(cp**2 + e1), math.sqrt(cp**2 + e2)
    phi3 = k1 * (rc * k2 * f2c + 1) * f1k + k2 * f2c
    phi4 = k2 * (rc * k1 * f1c + 1) * f2k + k1 * f1c
    return k1 * k2 * (f1k - f1c) * (f2k - f2c) / (phi3 * phi4)


def g_kmax(cp: float, params: PhysicalParams) -> float:
    k1, k2, rc = params.kappa1, params.kappa2, params.r_c
    f1c = math.sqrt(cp**2 + params.eta(1))
    f2c = math.sqrt(cp**2 + params.eta(2))
    return 1.0 / ((rc * k1 * f1c + 1) * (rc * k2 * f2c + 1))


def asymptotic_p_general(params: PhysicalParams, k_min: float) -> float:
    """Mesh-independent limit C_p of the scaled Robin optimum for general c_i."""
    if params.r_c <= 0:
        raise ValueError("asymptotic parameter requires Rc > 0")

    def f(cp):
        return g_kmin(cp, params, k_min) - g_kmax(cp, params)

    lo = k_min
    hi = max(2.0 * _c_hat(params, k_min), 2.0 * k_min)
    for _ in range(200):
        if f(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError("could not bracket the asymptotic equioscillation root")
    return _bisect(f, lo, hi)


def asymptotic_p_rc(params: PhysicalParams, k_min: float) -> tuple[float, float]:
    """Small-h limit of the closed form (c_i = 0) and its max-rho estimate."""
    if params.c1 != 0 or params.c2 != 0:
        raise ValueError("requires c1 = c2 = 0; use asymptotic_p_general")
    if params.r_c <= 0:
        raise ValueError("requires Rc > 0; use asymptotic_p_rc0")
    c_hat = _c_hat(params, k_min)
    rc = params.r_c
    rho = 1.0 / ((rc * params.kappa1 * c_hat + 1) * (rc * params.kappa2 * c_hat + 1))
    return c_hat, rho


def asymptotic_p_rc0(params: PhysicalParams, band: FrequencyBand, h: float) -> tuple[float, float]:
    """Leading-order optimum and max-rho for the scaled Robin condition without TCR."""
    if not h > 0:
        raise ValueError("mesh size must be positive")
    lam = params.contrast
    km = band.k_min
    phi1 = math.sqrt(km**2 + params.eta(1))
    phi2 = math.sqrt(km**2 + params.eta(2))
    s = lam * phi1 + phi2
    p0 = math.sqrt(math.pi * (lam + 1) * s) / (lam + 1) * h**-0.5
    rho = 1.0 - (lam + 1) ** 1.5 * math.sqrt(s) / (math.sqrt(math.pi) * lam) * h**0.5
    return p0, rho


def predicted_parameter(params: PhysicalParams, band: FrequencyBand, h: float) -> OptimizedParameter:
    """Pick the mesh-independent or the Rc = 0 prediction from h versus Rc*kappa.

    kappa is the series conductivity 1/(1/kappa1 + 1/kappa2). This is a
    heuristic switch; callers decide whether to use it.
    """
    if params.r_c > 0 and h < params.r_c * params.kappa_series:
        if params.c1 == 0 and params.c2 == 0:
            p, rho = asymptotic_p_rc(params, band.k_min)
        else:
            p = asymptotic_p_general(params, band.k_min)
            rho = g_kmax(p, params)
        return OptimizedParameter(p, "asymptotic", rho, band)
    p, rho = asymptotic_p_rc0(params, band, h)
    return OptimizedParameter(p, "asymptotic_rc0", rho, band)


def _standard_upper(params: PhysicalParams, band: FrequencyBand) -> float:
    if params.r_c > 0:
        return 2.0 / params.r_c
    # Rc = 0 leaves p unbounded; the Robin symbol never needs to exceed kappa*k_max.
    return 2.0 * max(params.kappa1, params.kappa2) * band.k_max


def standard_robin_grid(params: PhysicalParams, band: FrequencyBand, n: int = 101) -> np.ndarray:
    """Log grid strictly inside the admissible interval (0, 2/Rc)."""
    upper = _standard_upper(params, band)
    return np.geomspace(upper * 1e-6, upper * (1 - 1e-6), n)


def optimize_standard_robin(params: PhysicalParams, band: FrequencyBand,
                            n_samples: int = 2048, n_grid: int = 101) -> OptimizedParameter:
    """Minimize the sampled max |rho(k, p, p)| over p by grid scan plus bounded search."""

    def objective_log(t):
        return max_rho_on_band(StandardRobin(math.exp(t)), params, band, n_samples)[1]

    grid = standard_robin_grid(params, band, n_grid)
    vals = np.array([objective_log(math.log(p)) for p in grid])
    i = int(np.argmin(vals))
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, len(grid) - 1)])
    best_p, best_v = float(grid[i]), float(vals[i])
    if hi > lo:
        res = minimize_scalar(objective_log, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if res.fun < best_v:
            best_p, best_v = float(math.exp(res.x)), float(res.fun)
    return OptimizedParameter(best_p, "numeric_direct_search", best_v, band)


def optimize_scaled_robin(params: PhysicalParams, band: FrequencyBand, h: float | None = None) -> OptimizedParameter:
    """Closed form when it applies, otherwise the equioscillation root."""
    if params.r_c > 0 and params.c1 == 0 and params.c2 == 0 and h is not None:
        return optimal_p_closed_form(params, band, h)
    if params.r_c > 0:
        return optimal_p_equioscillation(params, band)
    return _scaled_rc0_equioscillation(params, band)


def _scaled_rc0_equioscillation(params: PhysicalParams, band: FrequencyBand) -> OptimizedParameter:
    # Without TCR the same endpoint equioscillation characterizes the optimum.
    def f(p):
        return equioscillation_residual(p, params, band)

    p = _bisect(f, band.k_min, band.k_max)
    return OptimizedParameter(p, "equioscillation", float(rho_scaled(band.k_min, p, params)), band)


def contrast_asymptotic_rate(params: PhysicalParams, k_min: float) -> float:
    """Max-rho estimate written in terms of the contrast lambda = kappa1/kappa2.

    Uses T = Rc kappa2 k_min + sqrt(Rc kappa2 k_min (Rc kappa2 k_min + 1 + 1/lambda)),
    which equals Rc kappa2 C_hat, so the value is 1/((lambda T + 1)(T + 1)).
    """
    if params.c1 != 0 or params.c2 != 0 or params.r_c <= 0:
        raise ValueError("contrast estimate requires c1 = c2 = 0 and Rc > 0")
    lam = params.contrast
    t = contrast_t(params, k_min)
    return 1.0 / ((lam * t + 1.0) * (t + 1.0))


def contrast_t(params: PhysicalParams, k_min: float, lam: float | None = None) -> float:
    lam = params.contrast if lam is None else lam
    a = params.r_c * params.kappa2 * k_min
    return a + math.sqrt(a * (a + 1.0 + 1.0 / lam))


def contrast_rate_large_lambda(params: PhysicalParams, k_min: float) -> float:
    """Leading 1/lambda term of the contrast estimate."""
    t_inf = contrast_t(params, k_min, lam=math.inf)
    return 1.0 / (t_inf * (t_inf + 1.0)) / params.contrast


def scaled_max_rho(p: float, params: PhysicalParams, band: FrequencyBand) -> float:
    return max_rho_on_band(ScaledRobin(p), params, band)[1]
