"""Axisymmetric ellipsoids {(h x)^2 + y^2 + z^2 < 1} and profile solids of revolution.

For u = e^{i m alpha} v(x, r) the form h^2 |d_x u|^2 + |grad_yz u|^2 reduces to

    int int (h^2 v_x^2 + v_r^2 + m^2 v^2 / r^2) r dr dx   over 0 < r < L(x),

and with rho = r / L(x) the disk modes phi_n(rho) ~ J_m(j_{m,n} rho) of
angular momentum m diagonalise the transversal part, whose eigenvalues are
j_{m,n}^2 / L(x)^2.  Two solvers are provided: the decoupled stack of 1D
operators of weight L^2 (sturm1d with p = 2), and an exact-in-x Galerkin
solve of the coupled (x, r) problem on the same transversal basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import eigen, sturm1d
from .branches import _fit_power
from .fem import Mesh, P1Space, graded_mesh
from .oval2d import double_oval, solve_smallest
from .profiles import ProfileFunction, circle
from .specfun import bessel_j, bessel_j_derivative, bessel_zeros


@dataclass(frozen=True)
class SectorThreshold:
    m: int
    n: int
    value: float


def sector_coefficients(m: int, count: int) -> np.ndarray:
    """spec_m of the unit disk: j_{m,n}^2, n = 1..count."""
    if m < 0:
        raise ValueError("sectors are labelled by m >= 0 (the conjugate -m is identified)")
    z = bessel_zeros(m, count).zeros
    return z * z


def sector_thresholds(m: int, count: int, profile: ProfileFunction | None = None):
    profile = profile or circle()
    c = sector_coefficients(m, count)
    return [SectorThreshold(m, n + 1, float(v / profile.L0 ** 2)) for n, v in enumerate(c)]


def cross_sector_gap(max_m: int = 5, count: int = 10) -> float:
    """Smallest |j_{m,n}^2 - j_{m',n'}^2| over m != m' <= max_m, n, n' <= count."""
    tables = [sector_coefficients(m, count) for m in range(max_m + 1)]
    best = math.inf
    for a in range(max_m + 1):
        for b in range(a + 1, max_m + 1):
            best = min(best, float(np.min(np.abs(tables[a][:, None] - tables[b][None, :]))))
    return best


@dataclass(frozen=True)
class SectorEigenvalue:
    value: float
    m: int
    k: int
    index: int


@dataclass
class SectorSystem:
    m: int
    h: float
    operators: list  # sturm1d.WeightedOperator per transversal mode k


def sector_system(m: int, h: float, top: float, profile: ProfileFunction | None = None,
                  mesh: Mesh | None = None) -> SectorSystem:
    """Per-mode operators A_{h,m,k} whose thresholds lie at or below ``top``."""
    profile = profile or circle()
    n = 1
    while sector_coefficients(m, n + 1)[-1] / profile.L0 ** 2 <= top:
        n += 1
    coeffs = sector_coefficients(m, n)
    ops = [sturm1d.assemble_akh(profile, k, h, 2, mesh, coefficient=c)
           for k, c in sturm1d.active_modes(profile, top, coeffs)]
    return SectorSystem(m, h, ops)


def sector_spectrum(m: int, h: float, window, profile: ProfileFunction | None = None,
                    mesh: Mesh | None = None) -> list:
    """Merged spectra of the decoupled operators A_{h,m,k} in ``window``, tagged (m, k)."""
    a, b = window
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("window must be finite")
    s = sector_system(m, h, b, profile, mesh)
    out = []
    for op in s.operators:
        spec = sturm1d.mode_spectrum(op, (a, b))
        out.extend(SectorEigenvalue(float(e), m, op.k, i) for i, e in enumerate(spec.eigenvalues))
    out.sort(key=lambda t: (t.value, t.k))
    return out


# --- coupled (x, r) Galerkin solve ---------------------------------------------

def _radial_basis(m: int, K: int, lifting: bool, nq: int = 400):
    """Values and rho-derivatives of the transversal functions at Gauss points of [0, 1].

    phi_n = J_m(j_{m,n} rho) normalised in L^2(rho d rho); the optional lifting
    rho^m (rho^2 - 1) carries the curvature of u at the boundary that
    J_m-modes flatten (the 3D analogue of the polynomial liftings in oval2d).
    """
    t, w = np.polynomial.legendre.leggauss(nq)
    rho = 0.5 * (t + 1.0)
    w = 0.5 * w
    z = bessel_zeros(m, K).zeros
    vals, ders = [], []
    for j in z:
        f = bessel_j(m, j * rho)
        df = j * bessel_j_derivative(m, j * rho)
        nrm = math.sqrt(float(np.sum(w * rho * f * f)))
        vals.append(f / nrm)
        ders.append(df / nrm)
    if lifting:
        f = rho ** m * (rho * rho - 1.0)
        df = (m + 2) * rho ** (m + 1) - (m * rho ** (m - 1) if m > 0 else 0.0)
        nrm = math.sqrt(float(np.sum(w * rho * f * f)))
        vals.append(f / nrm)
        ders.append(df / nrm)
    return rho, w, np.array(vals), np.array(ders), z * z


def _radial_tables(m, rho, w, F, dF):
    wr = w * rho
    Gm = (F * wr) @ F.T
    Ty = (dF * wr) @ dF.T
    if m:
        Ty = Ty + m * m * (F * (w / rho)) @ F.T
    C = (F * (wr * rho)) @ dF.T          # int phi_n rho phi_l' rho d rho
    G = (dF * (wr * rho * rho)) @ dF.T   # int rho^2 phi_n' phi_l' rho d rho
    return Gm, 0.5 * (Ty + Ty.T), C, 0.5 * (G + G.T)


@dataclass
class SectorGalerkin:
    m: int
    h: float
    profile: ProfileFunction
    mesh: Mesh
    Qx: sparse.csr_matrix
    Qy: sparse.csr_matrix
    M: sparse.csr_matrix
    thresholds: np.ndarray

    @property
    def Q(self):
        return (self.h * self.h * self.Qx + self.Qy).tocsr()

    def with_h(self, h: float) -> "SectorGalerkin":
        return SectorGalerkin(self.m, h, self.profile, self.mesh, self.Qx, self.Qy, self.M,
                              self.thresholds)


def assemble_sector(m: int, h: float, profile: ProfileFunction | None = None, K: int = 12,
                    mesh: Mesh | None = None, lifting: bool = True) -> SectorGalerkin:
    """Matrices of the reduced form in L^2(r dr dx) on the basis u_n(x) phi_n(r / L(x))."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if h <= 0:
        raise ValueError("h must be positive")
    profile = profile or circle()
    profile.validate()
    mesh = mesh or graded_mesh(400)
    mesh.check_endpoint_resolution()
    rho, w, F, dF, lam = _radial_basis(m, K, lifting)
    Gm, Ty, C, G = _radial_tables(m, rho, w, F, dF)
    V = P1Space(mesh)
    L = V.weight(profile.L)
    dL = V.weight(profile.dL)
    inner = slice(1, mesh.nodes.size - 1)
    S = V.stiffness(L * L)[inner, inner]
    ML2 = V.mass(L * L)[inner, inner]
    M1 = V.mass(np.ones_like(L))[inner, inner]
    D = V.mixed(L * dL)[inner, inner]
    DT = D.T.tocsr()
    Mg = V.mass(dL * dL)[inner, inner]
    nb = F.shape[0]
    qx = [[None] * nb for _ in range(nb)]
    qy = [[None] * nb for _ in range(nb)]
    mm = [[None] * nb for _ in range(nb)]
    tol = 1e-13
    for i in range(nb):
        for j in range(nb):
            blk = Gm[i, j] * S - C[i, j] * D - C[j, i] * DT + G[i, j] * Mg
            qx[i][j] = blk
            if abs(Ty[i, j]) > tol:
                qy[i][j] = Ty[i, j] * M1
            if abs(Gm[i, j]) > tol:
                mm[i][j] = Gm[i, j] * ML2
    Qx = sparse.bmat(qx, format="csr")
    Qy = sparse.bmat(qy, format="csr")
    Mm = sparse.bmat(mm, format="csr")
    sym = lambda A: (0.5 * (A + A.T)).tocsr()
    return SectorGalerkin(m, h, profile, mesh, sym(Qx), sym(Qy), sym(Mm), lam / profile.L0 ** 2)


@dataclass
class SectorResult:
    m: int
    h: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    thresholds: np.ndarray

    def records(self):
        for i, e in enumerate(self.eigenvalues):
            yield {"m": self.m, "h": self.h, "index": i, "eigenvalue": float(e),
                   "residual": float(self.residuals[i])}


def sector_solve_2d(m: int, h: float, count: int = 4, profile: ProfileFunction | None = None,
                    K: int = 12, mesh: Mesh | None = None, system: SectorGalerkin | None = None
                    ) -> SectorResult:
    """Lowest ``count`` eigenpairs of the coupled sector-m problem."""
    s = (system.with_h(h) if system is not None
         else assemble_sector(m, h, profile, K, mesh))
    w, v, r = eigen.smallest(s.Q, s.M, count)
    return SectorResult(m, h, w, v, r, s.thresholds)


def ball_reconstruction(max_m: int, count: int = 6, K: int = 12, mesh: Mesh | None = None,
                        rtol: float = 1e-4):
    """Union of sector spectra at h = 1 (m >= 1 doubled) grouped into distinct levels.

    Returns [(value, multiplicity, sectors)] for levels below the smallest
    sector-``max_m`` value, where the union is complete.
    """
    vals = []
    top = math.inf
    for m in range(max_m + 1):
        r = sector_solve_2d(m, 1.0, count, K=K, mesh=mesh)
        vals.extend((float(e), m) for e in r.eigenvalues)
        top = min(top, float(r.eigenvalues[-1]))
    vals.sort()
    levels = []
    for e, m in vals:
        if e > top * (1 + rtol):
            break
        if levels and abs(e - levels[-1][0]) <= rtol * e:
            v0, mult, ms = levels[-1]
            levels[-1] = (v0, mult + (2 if m else 1), ms + [m])
        else:
            levels.append((e, 2 if m else 1, [m]))
    return levels


@dataclass(frozen=True)
class SectorLimit:
    m: int
    limit: float
    threshold: float
    mismatch: float
    alpha: float


def sector_branch_limit(m: int, hs=(0.1, 0.07, 0.05), profile: ProfileFunction | None = None,
                        K: int = 8, mesh: Mesh | None = None) -> SectorLimit:
    """Extrapolate the lowest sector-m eigenvalue to h -> 0 and compare with j_{m,1}^2 / L(0)^2."""
    profile = profile or circle()
    hs = np.sort(np.asarray(hs, float))
    if hs.size < 3:
        raise ValueError("need three h values")
    s = assemble_sector(m, float(hs[0]), profile, K, mesh)
    E = np.array([sector_solve_2d(m, float(h), 1, system=s).eigenvalues[0] for h in hs[:3]])
    E0, _, alpha, _ = _fit_power(hs[:3], E)
    T = float(s.thresholds[0])
    return SectorLimit(m, E0, T, abs(E0 - T) / T, alpha)


@dataclass
class TriaxialThresholds:
    h0: float
    odd: np.ndarray
    even: np.ndarray
    min_gap: float

    def disjoint(self, tol: float = 1e-3) -> bool:
        # the default mesh resolves eigenvalues to ~1e-4, so exact coincidences
        # (the disk) show gaps of that size
        return self.min_gap > tol


def triaxial_thresholds(h0: float, count: int = 10, profile: ProfileFunction | None = None,
                        K: int = 16, mesh: Mesh | None = None) -> TriaxialThresholds:
    """Parity-split Dirichlet spectra of the ellipse with semi-axes (1/h0, 1)."""
    profile = profile or circle()
    pair = double_oval(profile, "dirichlet", h0, K, mesh)
    odd = solve_smallest(pair["odd"], count=count).eigenvalues
    even = solve_smallest(pair["even"], count=count).eigenvalues
    # only compare where both lists are complete
    top = min(odd[-1], even[-1])
    o, e = odd[odd <= top], even[even <= top]
    gap = float(np.min(np.abs(o[:, None] - e[None, :]))) if o.size and e.size else math.inf
    return TriaxialThresholds(h0, odd, even, gap)
