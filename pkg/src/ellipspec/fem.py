"""Finite elements on [-1, 1] that are piecewise linear in phi = arcsin(x).

Profiles vanishing like sqrt(1 - x^2) at the ends make the natural unknowns
behave like A(x) + sqrt(1 - x^2) B(x) with A, B smooth; in phi both terms are
smooth, and so are the weights L, 1/L, L' and L'^2/L times dx = cos(phi) dphi.
Elements and Gauss-Legendre quadrature therefore live in phi, while nodes
and all integrands are expressed in x.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

GAUSS_ORDER = 5
_GL_T, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray
    _qx: np.ndarray = field(init=False, repr=False, compare=False)
    _qw: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.nodes, float)
        if x.ndim != 1 or x.size < 3 or np.any(np.diff(x) <= 0):
            raise MeshError("mesh nodes must be strictly increasing with at least 2 cells")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        qx, qw = _cell_quadrature(x)
        object.__setattr__(self, "_qx", qx)
        object.__setattr__(self, "_qw", qw)

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def quad_points(self) -> np.ndarray:
        """(n_cells, GAUSS_ORDER) quadrature nodes."""
        return self._qx

    @property
    def quad_weights(self) -> np.ndarray:
        return self._qw

    def cells_near_ends(self, band: float = 1.0 / 16.0):
        x = self.nodes
        left = int(np.sum(x[1:] <= x[0] + band + 1e-15))
        right = int(np.sum(x[:-1] >= x[-1] - band - 1e-15))
        return left, right

    def check_endpoint_resolution(self, min_cells: int = 8, band: float = 1.0 / 16.0):
        left, right = self.cells_near_ends(band)
        if min(left, right) < min_cells:
            raise MeshError(
                f"mesh too coarse near the endpoints: {left} / {right} cells within "
                f"{band} of -1 / +1, need {min_cells}")

    def refined(self) -> "Mesh":
        """Every cell halved."""
        x = self.nodes
        mid = 0.5 * (x[1:] + x[:-1])
        out = np.empty(2 * x.size - 1)
        out[0::2] = x
        out[1::2] = mid
        return Mesh(out)


def _cell_quadrature(x):
    p = np.arcsin(np.clip(x, -1.0, 1.0))
    a, b = p[:-1], p[1:]
    half = 0.5 * (b - a)
    qp = 0.5 * (a + b)[:, None] + half[:, None] * _GL_T[None, :]
    qx = np.sin(qp)
    qw = half[:, None] * _GL_W[None, :] * np.cos(qp)
    return qx, qw


def graded_mesh(n_cells: int = 400) -> Mesh:
    """Nodes x_j = sin(phi_j), phi uniform on [-pi/2, pi/2]: spacing ~ sqrt(1 - x^2)."""
    if n_cells < 4:
        raise MeshError("need at least 4 cells")
    return Mesh(np.sin(np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_cells + 1)))


def geometric_mesh(n_cells: int = 400, ratio: float = 0.7, depth: float = 1e-3,
                   a: float = -1.0, b: float = 1.0) -> Mesh:
    """Uniform core of spacing (b - a)/n_cells with geometric grading into both ends.

    Grading layers shrink by ``ratio`` until the cell size drops below
    ``depth`` times the core spacing.
    """
    if n_cells < 4:
        raise MeshError("need at least 4 cells")
    if not 0 < ratio < 1:
        raise MeshError("grading ratio must be in (0, 1)")
    d = (b - a) / n_cells
    sizes = []
    s = d * ratio
    while s > depth * d:
        sizes.append(s)
        s *= ratio
    sizes.append(s / (1 - ratio))  # last cell absorbs the geometric remainder
    g = float(np.sum(sizes))
    n_core = max(2, int(round(((b - a) - 2 * g) / d)))
    left = a + np.concatenate([[0.0], np.cumsum(sizes[::-1])])
    core = np.linspace(a + g, b - g, n_core + 1)
    right = b - np.concatenate([[0.0], np.cumsum(sizes[::-1])])[::-1]
    return Mesh(np.concatenate([left[:-1], core, right[1:]]))


def uniform_mesh(n_cells: int, a: float = -1.0, b: float = 1.0) -> Mesh:
    return Mesh(np.linspace(a, b, n_cells + 1))


# shape functions, linear in phi on each cell, at the quadrature points
def _shape(mesh: Mesh):
    p = np.arcsin(np.clip(mesh.nodes, -1.0, 1.0))
    a = p[:-1, None]
    hcell = (p[1:] - p[:-1])[:, None]
    qp = np.arcsin(np.clip(mesh.quad_points, -1.0, 1.0))
    t = (qp - a) / hcell
    phi = np.stack([1.0 - t, t], axis=0)          # (2, ncell, q)
    dxdp = np.cos(qp)
    dphi = np.stack([-1.0 / hcell / dxdp, 1.0 / hcell / dxdp], axis=0)  # d/dx
    return phi, dphi


def _assemble(mesh: Mesh, w, left, right):
    """sum_cells sum_q w(q) left_a(q) right_b(q) into an (n, n) sparse matrix."""
    n = mesh.nodes.size
    nc = mesh.n_cells
    qw = mesh.quad_weights * w
    rows, cols, vals = [], [], []
    base = np.arange(nc)
    for i in range(2):
        for j in range(2):
            vals.append(np.sum(qw * left[i] * right[j], axis=1))
            rows.append(base + i)
            cols.append(base + j)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n))


class P1Space:
    """Continuous functions linear in arcsin(x) on each cell (all nodes active)."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self._phi, self._dphi = _shape(mesh)

    @property
    def size(self) -> int:
        return self.mesh.nodes.size

    def weight(self, f):
        """Evaluate a weight function at the quadrature points."""
        return np.asarray(f(self.mesh.quad_points), float).reshape(self.mesh.quad_points.shape)

    def mass(self, w):
        """int w phi_i phi_j (w: array of weights at quadrature points)."""
        return _assemble(self.mesh, w, self._phi, self._phi)

    def stiffness(self, w):
        """int w phi_i' phi_j'."""
        return _assemble(self.mesh, w, self._dphi, self._dphi)

    def mixed(self, w):
        """int w phi_i' phi_j (derivative on the row index)."""
        return _assemble(self.mesh, w, self._dphi, self._phi)

    def integrate(self, values):
        return float(np.sum(self.mesh.quad_weights * values))

    def interpolate_at_quad(self, coef):
        """Values and x-derivatives at the quadrature points for nodal values ``coef``."""
        c = np.asarray(coef)
        lo, hi = c[:-1, None], c[1:, None]
        val = lo * self._phi[0] + hi * self._phi[1]
        der = lo * self._dphi[0] + hi * self._dphi[1]
        return val, der


def interior_restriction(n: int, drop_left: bool = True, drop_right: bool = True):
    """Selector matrix removing the endpoint nodes (essential zero conditions)."""
    keep = np.arange(n)
    if drop_left:
        keep = keep[1:]
    if drop_right:
        keep = keep[:-1]
    return keep
