"""Fourier-level symbols and convergence factors for the two-layer OSM.

Every function accepts a scalar or a numpy array for the frequency ``k``
and returns a float or an array of the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


class DomainError(ValueError):
    """A symbol was evaluated outside its domain (e.g. k = 0 with c = 0)."""


class PoleError(ZeroDivisionError):
    """A convergence-factor denominator vanished."""


@dataclass(frozen=True)
class PhysicalParams:
    kappa1: float
    kappa2: float
    c1: float = 0.0
    c2: float = 0.0
    r_c: float = 0.0

    def __post_init__(self):
        for name in ("kappa1", "kappa2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("c1", "c2", "r_c"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a nonnegative finite number, got {v!r}")

    def kappa(self, side: int) -> float:
        return (self.kappa1, self.kappa2)[_side_index(side)]

    def c(self, side: int) -> float:
        return (self.c1, self.c2)[_side_index(side)]

    def eta(self, side: int) -> float:
        """Reaction-to-conductivity ratio c_i / kappa_i."""
        return self.c(side) / self.kappa(side)

    @property
    def contrast(self) -> float:
        """Heterogeneity contrast kappa1 / kappa2."""
        return self.kappa1 / self.kappa2

    @property
    def kappa_series(self) -> float:
        """Series conductivity, 1/kappa = 1/kappa1 + 1/kappa2."""
        return 1.0 / (1.0 / self.kappa1 + 1.0 / self.kappa2)

    def replace(self, **changes) -> "PhysicalParams":
        fields = dict(kappa1=self.kappa1, kappa2=self.kappa2, c1=self.c1,
                      c2=self.c2, r_c=self.r_c)
        fields.update(changes)
        return PhysicalParams(**fields)


@dataclass(frozen=True)
class FrequencyBand:
    k_min: float
    k_max: float

    def __post_init__(self):
        if not (np.isfinite(self.k_min) and np.isfinite(self.k_max)):
            raise ValueError("band endpoints must be finite")
        if not 0 < self.k_min < self.k_max:
            raise ValueError(
                f"need 0 < k_min < k_max, got k_min={self.k_min!r}, k_max={self.k_max!r}")

    def logspace(self, n: int) -> np.ndarray:
        return np.geomspace(self.k_min, self.k_max, n)


@dataclass(frozen=True)
class StandardRobin:
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"Robin parameter must be positive, got {self.p!r}")


@dataclass(frozen=True)
class ScaledRobin:
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"Robin parameter must be positive, got {self.p!r}")


@dataclass(frozen=True)
class RawPair:
    tau12: float
    tau21: float


TransmissionSpec = Union[StandardRobin, ScaledRobin, RawPair]


def _side_index(side: int) -> int:
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side!r}")
    return side - 1


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def characteristic_root(side: int, k, params: PhysicalParams):
    """Decay rate sqrt(c*kappa + kappa^2 k^2) / kappa of the side-``side`` mode."""
    kappa, c = params.kappa(side), params.c(side)
    k = np.asarray(k, dtype=float)
    return _out(np.sqrt(c * kappa + kappa**2 * k**2) / kappa)


def xi(side: int, k, params: PhysicalParams):
    """Dirichlet-to-Neumann inverse symbol 1 / (kappa_i lambda_i(k))."""
    kappa = params.kappa(side)
    lam = np.asarray(characteristic_root(side, k, params))
    if np.any(lam == 0):
        raise DomainError(f"xi_{side} is singular at k = 0 when c_{side} = 0")
    return _out(1.0 / (kappa * lam))


def rho_general(k, tau12, tau21, params: PhysicalParams):
    """Double-step convergence factor for arbitrary scalar transmission symbols."""
    x1, x2 = np.asarray(xi(1, k, params)), np.asarray(xi(2, k, params))
    r_c = params.r_c
    d1 = 1.0 + tau12 * x1
    d2 = 1.0 + tau21 * x2
    if np.any(d1 == 0) or np.any(d2 == 0):
        raise PoleError("convergence factor has a vanishing denominator")
    num1 = (1.0 - tau12 * r_c) - tau12 * x2
    num2 = (1.0 - tau21 * r_c) - tau21 * x1
    return _out(num1 / d1 * (num2 / d2))


def rho_standard(k, p, params: PhysicalParams):
    if not p > 0:
        raise ValueError(f"Robin parameter must be positive, got {p!r}")
    return rho_general(k, p, p, params)


def standard_robin_inequalities(k, p, params: PhysicalParams):
    """Left-hand sides of the two sufficient conditions for |rho_standard| < 1.

    Returns ``(a, b)``; convergence needs ``a < 0`` and ``b > 0``.
    """
    x1, x2 = np.asarray(xi(1, k, params)), np.asarray(xi(2, k, params))
    r_c = params.r_c
    a = p * (p * r_c - 2.0) * (r_c + x1 + x2)
    b = (p * r_c - 1.0) ** 2 + 1.0 + (x1 + x2) * r_c + 2.0 * x1 * x2 * p**2
    return _out(a), _out(b)


def scaled_taus(p: float, params: PhysicalParams) -> tuple[float, float]:
    """Scaled Robin symbols (tau12, tau21) = (1/(xi2(p)+Rc), 1/(xi1(p)+Rc))."""
    tau12 = 1.0 / (xi(2, p, params) + params.r_c)
    tau21 = 1.0 / (xi(1, p, params) + params.r_c)
    return float(tau12), float(tau21)


def rho_scaled(k, p, params: PhysicalParams):
    x1k, x2k = np.asarray(xi(1, k, params)), np.asarray(xi(2, k, params))
    x1p, x2p = xi(1, p, params), xi(2, p, params)
    r_c = params.r_c
    return _out((x1p - x1k) / (x1p + r_c + x2k) * ((x2p - x2k) / (x2p + r_c + x1k)))


def rho_scaled_rc0(k, p, params: PhysicalParams):
    """Scaled Robin factor with the contact resistance dropped (Rc = 0)."""
    k = np.asarray(k, dtype=float)
    e1, e2 = params.eta(1), params.eta(2)
    k1, k2 = params.kappa1, params.kappa2
    sp1, sk1 = np.sqrt(p * p + e1), np.sqrt(k * k + e1)
    sp2, sk2 = np.sqrt(p * p + e2), np.sqrt(k * k + e2)
    num = (sp1 - sk1) * (sp2 - sk2) * k1 * k2
    den = (k1 * sp1 + k2 * sk2) * (k1 * sk1 + k2 * sp2)
    return _out(num / den)


def frequency_band(interface_length: float, h: float) -> FrequencyBand:
    """Band (pi/|Gamma|, pi/h) resolved by a uniform mesh on a Dirichlet interface."""
    if not interface_length > 0 or not h > 0:
        raise ValueError("interface length and mesh size must be positive")
    if not h < interface_length:
        raise ValueError("mesh size must be smaller than the interface length")
    return FrequencyBand(np.pi / interface_length, np.pi / h)


def transmission_coefficients(spec: TransmissionSpec, params: PhysicalParams) -> tuple[float, float]:
    """Scalar Robin coefficients (tau12, tau21) for a transmission choice."""
    if isinstance(spec, StandardRobin):
        return float(spec.p), float(spec.p)
    if isinstance(spec, ScaledRobin):
        return scaled_taus(spec.p, params)
    if isinstance(spec, RawPair):
        return float(spec.tau12), float(spec.tau21)
    raise TypeError(f"unknown transmission spec {spec!r}")


def rho_of_spec(k, spec: TransmissionSpec, params: PhysicalParams):
    if isinstance(spec, ScaledRobin):
        return rho_scaled(k, spec.p, params)
    tau12, tau21 = transmission_coefficients(spec, params)
    return rho_general(k, tau12, tau21, params)


def max_rho_on_band(spec: TransmissionSpec, params: PhysicalParams,
                    band: FrequencyBand, n_samples: int = 2048) -> tuple[float, float]:
    """Largest |rho| over the band and the frequency where it occurs.

    The scaled Robin factor peaks at a band endpoint, so only the endpoints
    are evaluated. Other choices can peak inside the band and are sampled on
    a log-spaced grid that includes both endpoints.
    """
    if not isinstance(band, FrequencyBand):
        raise TypeError("band must be a FrequencyBand")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if isinstance(spec, ScaledRobin):
        ks = np.array([band.k_min, band.k_max])
    else:
        ks = band.logspace(n_samples)
    vals = np.abs(np.asarray(rho_of_spec(ks, spec, params)))
    i = int(np.argmax(vals))
    return float(ks[i]), float(vals[i])


def spec_to_dict(spec: TransmissionSpec) -> dict:
    if isinstance(spec, StandardRobin):
        return {"kind": "standard_robin", "p": spec.p}
    if isinstance(spec, ScaledRobin):
        return {"kind": "scaled_robin", "p": spec.p}
    if isinstance(spec, RawPair):
        return {"kind": "raw_pair", "tau12": spec.tau12, "tau21": spec.tau21}
    raise TypeError(f"unknown transmission spec {spec!r}")


def spec_from_dict(d: dict) -> TransmissionSpec:
    kind = d.get("kind")
    if kind == "standard_robin":
        return StandardRobin(float(d["p"]))
    if kind == "scaled_robin":
        return ScaledRobin(float(d["p"]))
    if kind == "raw_pair":
        return RawPair(float(d["tau12"]), float(d["tau21"]))
    raise ValueError(f"unknown transmission kind {kind!r}")
