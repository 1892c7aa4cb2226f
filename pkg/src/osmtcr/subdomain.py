"""Finite-difference solver for one rectangular Robin subproblem.

The subproblem is ``-kappa * Lap(T) + c*T = f`` on a rectangle with
Dirichlet data on every edge except the interface edge, where
``kappa * dT/dn + tau*T = g`` holds (n the outward normal). The interface
condition is discretized with a ghost node and centered differences, which
keeps the scheme second order. Interface rows are halved so the matrix is
symmetric.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

GridData = Union[None, float, np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class RectDomain:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    interface_side: Optional[str]
    h: float

    def __post_init__(self):
        if self.interface_side not in ("left", "right", None):
            raise ValueError(f"interface_side must be 'left', 'right' or None, got {self.interface_side!r}")
        if not self.h > 0:
            raise ValueError("mesh size must be positive")
        for lo, hi in (self.x_range, self.y_range):
            if not hi > lo:
                raise ValueError("empty coordinate range")
        self.nx, self.ny  # validates divisibility

    def _cells(self, lo: float, hi: float) -> int:
        n = (hi - lo) / self.h
        m = int(round(n))
        if abs(n - m) > 1e-9 * max(n, 1.0) or m < 2:
            raise ValueError(f"mesh size {self.h!r} must divide the extent {hi - lo!r} at least twice")
        return m

    @property
    def nx(self) -> int:
        return self._cells(*self.x_range)

    @property
    def ny(self) -> int:
        return self._cells(*self.y_range)

    @property
    def interface_length(self) -> float:
        return self.y_range[1] - self.y_range[0]

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_range[0], self.y_range[1], self.ny + 1)

    @property
    def interface_column(self) -> Optional[int]:
        if self.interface_side is None:
            return None
        return 0 if self.interface_side == "left" else self.nx

    @property
    def unknown_columns(self) -> np.ndarray:
        """Grid columns that carry unknowns (interior plus the interface edge)."""
        lo, hi = 1, self.nx - 1
        if self.interface_side == "left":
            lo = 0
        elif self.interface_side == "right":
            hi = self.nx
        return np.arange(lo, hi + 1)

    @property
    def n_interface(self) -> int:
        return self.ny - 1


def layered_domains(h: float) -> tuple[RectDomain, RectDomain]:
    """Omega1 = (-1,0)x(0,1) and Omega2 = (0,1)x(0,1) sharing the edge x = 0."""
    return (RectDomain((-1.0, 0.0), (0.0, 1.0), "right", h),
            RectDomain((0.0, 1.0), (0.0, 1.0), "left", h))


def _grid_values(data: GridData, domain: RectDomain) -> np.ndarray:
    shape = (domain.ny + 1, domain.nx + 1)
    if data is None:
        return np.zeros(shape)
    if callable(data):
        X, Y = np.meshgrid(domain.x, domain.y)
        return np.broadcast_to(np.asarray(data(X, Y), dtype=float), shape).copy()
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape != shape:
        raise ValueError(f"grid data has shape {arr.shape}, expected {shape}")
    return arr.copy()


@dataclass(frozen=True)
class SubdomainProblem:
    domain: RectDomain
    kappa: float
    c: float = 0.0
    robin_coeff: float = 1.0
    dirichlet_data: GridData = None
    interface_rhs: Optional[np.ndarray] = None
    source: GridData = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.c < 0:
            raise ValueError("reaction coefficient must be nonnegative")
        if self.domain.interface_side is not None and not self.robin_coeff > 0:
            raise ValueError("Robin coefficient must be positive")
        if self.interface_rhs is not None:
            n = np.asarray(self.interface_rhs).shape
            if n != (self.domain.n_interface,):
                raise ValueError(f"interface_rhs has shape {n}, expected ({self.domain.n_interface},)")

    def with_interface_rhs(self, g) -> "SubdomainProblem":
        return replace(self, interface_rhs=np.asarray(g, dtype=float))


@dataclass
class Field:
    domain: RectDomain
    values: np.ndarray

    def __post_init__(self):
        shape = (self.domain.ny + 1, self.domain.nx + 1)
        if self.values.shape != shape:
            raise ValueError(f"field shape {self.values.shape} does not match domain {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path) -> None:
        X, Y = np.meshgrid(self.domain.x, self.domain.y)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for x, y, v in zip(X.ravel(), Y.ravel(), self.values.ravel()):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])


@dataclass
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    node_index: np.ndarray = field(repr=False)  # (ny+1, nx+1) -> unknown id, -1 for Dirichlet
    interface_rows: np.ndarray = field(repr=False)


def _operator(domain: RectDomain, kappa: float, c: float, tau: float):
    nx, ny, h = domain.nx, domain.ny, domain.h
    ucols = domain.unknown_columns
    ncol = len(ucols)
    idx = -np.ones((ny + 1, nx + 1), dtype=np.int64)
    idx[1:ny, ucols] = np.arange((ny - 1) * ncol).reshape(ny - 1, ncol)
    ig = domain.interface_column

    J, I = np.meshgrid(np.arange(1, ny), ucols, indexing="ij")
    J, I = J.ravel(), I.ravel()
    rid = idx[J, I]
    on_iface = I == ig
    a = kappa / h**2
    # interface rows are the ghost-eliminated rows multiplied by 1/2
    diag = np.where(on_iface, 2 * a + 0.5 * c + tau / h, 4 * a + c)
    inner = 1 if ig == 0 else nx - 1
    x_shifts = [(0, -1), (0, 1)]
    rows, cols, vals = [rid], [rid], [diag]
    links_r, links_j, links_i, links_v = [], [], [], []

    def couple(mask, jj, ii, v):
        # masked-out entries may point off the grid; clip before indexing
        q = idx[np.clip(jj, 0, ny), np.clip(ii, 0, nx)]
        inside = q >= 0
        m = mask & inside
        rows.append(rid[m]); cols.append(q[m]); vals.append(np.broadcast_to(v, rid.shape)[m])
        m = mask & ~inside
        links_r.append(rid[m]); links_j.append(jj[m]); links_i.append(ii[m])
        links_v.append(np.broadcast_to(v, rid.shape)[m])

    interior = ~on_iface
    for dj, di in x_shifts:
        couple(interior, J + dj, I + di, -a)
    for dj in (-1, 1):
        couple(interior, J + dj, I, -a)
        couple(on_iface, J + dj, I, -0.5 * a)
    if ig is not None:
        couple(on_iface, J, np.full_like(I, inner), -a)
    n = (ny - 1) * ncol
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    iface = idx[1:ny, ig] if ig is not None else np.array([], dtype=np.int64)
    links = (np.concatenate(links_r), np.concatenate(links_j), np.concatenate(links_i),
             np.concatenate(links_v))
    return A, idx, iface, links


def _rhs(problem: SubdomainProblem, idx, iface, links) -> np.ndarray:
    d = problem.domain
    n = int(idx.max()) + 1
    f = _grid_values(problem.source, d)
    g = _grid_values(problem.dirichlet_data, d)
    b = np.zeros(n)
    mask = idx >= 0
    b[idx[mask]] = f[mask]
    if len(iface):
        b[iface] *= 0.5
        if problem.interface_rhs is not None:
            b[iface] += np.asarray(problem.interface_rhs, dtype=float) / d.h
    r, jj, ii, v = links
    np.subtract.at(b, r, v * g[jj, ii])
    return b


def assemble(problem: SubdomainProblem) -> AssembledSystem:
    """Sparse matrix and right-hand side of the discrete subproblem."""
    A, idx, iface, links = _operator(problem.domain, problem.kappa, problem.c, problem.robin_coeff)
    return AssembledSystem(A, _rhs(problem, idx, iface, links), idx, iface)


class SubdomainSolver:
    """LU-factorized subproblem for repeated solves with new interface data.

    The factorization is read-only after construction.
    """

    def __init__(self, problem: SubdomainProblem):
        self.problem = problem
        A, idx, iface, links = _operator(problem.domain, problem.kappa, problem.c, problem.robin_coeff)
        self.matrix = A
        self._idx, self._iface = idx, iface
        self._lu = spla.splu(A.tocsc())
        base = replace(problem, interface_rhs=None)
        self._b0 = _rhs(base, idx, iface, links)
        self._boundary = _grid_values(problem.dirichlet_data, problem.domain)

    def rhs(self, interface_rhs=None) -> np.ndarray:
        b = self._b0.copy()
        if interface_rhs is not None:
            b[self._iface] += np.asarray(interface_rhs, dtype=float) / self.problem.domain.h
        return b

    def solve(self, interface_rhs=None) -> Field:
        u = self._lu.solve(self.rhs(interface_rhs))
        return self._scatter(u)

    def _scatter(self, u: np.ndarray) -> Field:
        vals = self._boundary.copy()
        mask = self._idx >= 0
        vals[mask] = u[self._idx[mask]]
        return Field(self.problem.domain, vals)


def solve_subdomain(problem: SubdomainProblem) -> Field:
    return SubdomainSolver(problem).solve(problem.interface_rhs)


def interface_trace(field: Field) -> np.ndarray:
    """Field values at the interface nodes, ordered by increasing y."""
    d = field.domain
    if d.interface_column is None:
        raise ValueError("domain has no interface edge")
    return field.values[1:d.ny, d.interface_column].copy()


def interface_flux(field: Field, kappa: float) -> np.ndarray:
    """kappa * dT/dn on the interface, one-sided second-order difference.

    The normal points out of the owning subdomain: -x for a left interface,
    +x for a right interface.
    """
    d = field.domain
    if d.nx < 2:
        raise ValueError("need at least 3 nodes across the subdomain for the flux stencil")
    v = field.values[1:d.ny]
    if d.interface_side == "left":
        dtdx = (-3 * v[:, 0] + 4 * v[:, 1] - v[:, 2]) / (2 * d.h)
        return -kappa * dtdx
    if d.interface_side == "right":
        dtdx = (3 * v[:, -1] - 4 * v[:, -2] + v[:, -3]) / (2 * d.h)
        return kappa * dtdx
    raise ValueError("domain has no interface edge")


def robin_flux(trace: np.ndarray, interface_rhs: np.ndarray, tau: float) -> np.ndarray:
    """Normal flux implied by the discrete Robin row, g - tau*T."""
    return np.asarray(interface_rhs, dtype=float) - tau * np.asarray(trace, dtype=float)
