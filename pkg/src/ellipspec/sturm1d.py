"""Weighted Sturm-Liouville operators with degenerate endpoint weight L^p.

A_{k,h} v = -h^2 L^{-p} (L^p v')' + (c_k / L^2) v on ]-1, 1[, acting in
L^2(L^p dx).  c_k = (k pi)^2 for the oval modes (p = 1) or a disk eigenvalue
for the axisymmetric 3D sectors (p = 2).  The endpoints carry no essential
condition; the vanishing weight selects the Friedrichs realisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import eigen
from .fem import Mesh, P1Space, graded_mesh
from .profiles import ProfileFunction


@dataclass(frozen=True)
class Threshold:
    k: int
    value: float


@dataclass
class WeightedOperator:
    """Assembled generalized problem stiffness u = E mass u for one mode."""

    k: int
    h: float
    p: int
    coefficient: float  # c_k
    profile: ProfileFunction
    mesh: Mesh
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix

    @property
    def threshold(self) -> Threshold:
        return Threshold(self.k, self.coefficient / self.profile.L0 ** 2)

    def form(self, v):
        return float(v @ (self.stiffness @ v))

    def norm2(self, v):
        return float(v @ (self.mass @ v))


@dataclass
class ModeSpectrum:
    k: int
    h: float
    threshold: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    def rows(self):
        for i, e in enumerate(self.eigenvalues):
            yield self.k, self.h, i, float(e), self.threshold, float(e - self.threshold)


def mode_coefficient(k: int) -> float:
    return (k * math.pi) ** 2


def assemble_akh(profile: ProfileFunction, k: int, h: float, p: int = 1,
                 mesh: Mesh | None = None, coefficient: float | None = None) -> WeightedOperator:
    """P1 matrices of h^2 int L^p v'^2 + int c L^(p-2) v^2 and int L^p v^2.

    ``coefficient`` overrides c = (k pi)^2, e.g. with a disk eigenvalue.
    """
    profile.validate()
    if h <= 0:
        raise ValueError("h must be positive")
    if p not in (1, 2):
        raise ValueError("weight exponent p must be 1 or 2")
    if k < 0:
        raise ValueError("mode index must be >= 0")
    mesh = mesh or graded_mesh(400)
    mesh.check_endpoint_resolution()
    c = mode_coefficient(k) if coefficient is None else float(coefficient)
    V = P1Space(mesh)
    L = V.weight(profile.L)
    Lp = L ** p
    with np.errstate(divide="ignore"):
        pot = c * L ** (p - 2) if c else np.zeros_like(L)
    S = h * h * V.stiffness(Lp) + V.mass(pot)
    M = V.mass(Lp)
    return WeightedOperator(k, h, p, c, profile, mesh, S.tocsr(), M.tocsr())


def mode_spectrum(op: WeightedOperator, window) -> ModeSpectrum:
    a, b = window
    T = op.threshold.value
    if b < T:
        empty = np.empty(0)
        return ModeSpectrum(op.k, op.h, T, empty, np.empty((op.mass.shape[0], 0)), empty)
    w, v, r = eigen.window(op.stiffness, op.mass, a, b)
    return ModeSpectrum(op.k, op.h, T, w, v, r)


def lowest(op: WeightedOperator, count: int = 1):
    w, v, r = eigen.smallest(op.stiffness, op.mass, count)
    return ModeSpectrum(op.k, op.h, op.threshold.value, w, v, r)


def active_modes(profile: ProfileFunction, top: float, coefficients=None):
    """Modes whose threshold does not exceed ``top``; higher modes stay above the window."""
    L0 = profile.L0
    if coefficients is None:
        kmax = int(math.floor(math.sqrt(max(top, 0.0)) * L0 / math.pi + 1e-12))
        return [(k, mode_coefficient(k)) for k in range(1, kmax + 1)]
    return [(k, c) for k, c in enumerate(coefficients, start=1) if c / L0 ** 2 <= top]


@dataclass(frozen=True)
class TaggedEigenvalue:
    value: float
    k: int
    index: int


def stacked_spectrum(profile: ProfileFunction, h: float, window, p: int = 1,
                     mesh: Mesh | None = None, coefficients=None):
    """Union of the per-mode spectra in [a, b], each value tagged by its mode."""
    a, b = window
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("window must be finite")
    out = []
    for k, c in active_modes(profile, b, coefficients):
        op = assemble_akh(profile, k, h, p, mesh, coefficient=c)
        spec = mode_spectrum(op, (a, b))
        out.extend(TaggedEigenvalue(float(e), k, i) for i, e in enumerate(spec.eigenvalues))
    out.sort(key=lambda t: (t.value, t.k))
    return out


@dataclass(frozen=True)
class NormRatioReport:
    ratios: np.ndarray
    envelope: tuple

    @property
    def min(self):
        return float(self.ratios.min())

    @property
    def max(self):
        return float(self.ratios.max())


def weighted_h1_ratio(profile: ProfileFunction, h: float, u, du, mesh: Mesh) -> float:
    """||u||_{weighted} / ||u||_{flat} with ||u||^2 = int w (h^2 u'^2 + u^2)."""
    V = P1Space(mesh)
    x = mesh.quad_points
    ux, dux = u(x), du(x)
    dens = h * h * dux ** 2 + ux ** 2
    flat = V.integrate(dens)
    if flat <= 0:
        raise ValueError("test function has zero norm")
    return math.sqrt(V.integrate(profile.L(x) * dens) / flat)


def h1_norm_equivalence_check(profile: ProfileFunction, delta: float, h: float, trials: int = 50,
                              seed: int = 0, modes: int = 8, mesh: Mesh | None = None) -> NormRatioReport:
    """Weighted vs flat semiclassical H^1 norms of random fields supported in I_delta.

    Test fields are random sine series on I_delta = [-1 + delta, 1 - delta].
    The ratio must lie in [sqrt(min L), sqrt(max L)] over I_delta.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    mesh = mesh or graded_mesh(800)
    lo, hi = -1 + delta, 1 - delta
    width = hi - lo
    ratios = []
    for _ in range(trials):
        a = rng.standard_normal(modes) / (1.0 + np.arange(modes))
        j = np.arange(1, modes + 1)

        def u(x, a=a):
            t = np.clip((x - lo) / width, 0, 1)
            return np.where((x >= lo) & (x <= hi), np.sin(np.pi * t[..., None] * j) @ a, 0.0)

        def du(x, a=a):
            t = np.clip((x - lo) / width, 0, 1)
            s = np.cos(np.pi * t[..., None] * j) @ (a * j * np.pi / width)
            return np.where((x >= lo) & (x <= hi), s, 0.0)

        ratios.append(weighted_h1_ratio(profile, h, u, du, _aligned(mesh, lo, hi)))
    xs = np.linspace(lo, hi, 2001)
    Ls = profile.L(xs)
    return NormRatioReport(np.array(ratios), (math.sqrt(Ls.min()), math.sqrt(Ls.max())))


def _aligned(mesh: Mesh, lo: float, hi: float) -> Mesh:
    """Mesh with lo and hi inserted as nodes, so no cell straddles the support edge."""
    x = np.union1d(mesh.nodes, [lo, hi])
    return Mesh(x)


def threshold_gaps(profile: ProfileFunction, k: int, hs, p: int = 1, mesh: Mesh | None = None):
    """(h, E_min - T_k) along an h sweep."""
    out = []
    for h in hs:
        s = lowest(assemble_akh(profile, k, h, p, mesh))
        out.append((h, float(s.eigenvalues[0] - s.threshold)))
    return out
