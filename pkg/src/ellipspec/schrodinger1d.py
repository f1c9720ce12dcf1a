"""Semiclassical single-well operators P_h = -h^2 d^2/dx^2 + V on a Dirichlet box.

Spectrum in an energy window, the spacing law, the Liouville-measure average
of xi^2 on an energy shell, and the kinetic quadratic form restricted to the
eigenvectors nearest a reference energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import diags

from .profiles import ProfileFunction


class BoxTooSmallError(ValueError):
    pass


class InsufficientModesError(ValueError):
    pass


class TurningPointError(RuntimeError):
    pass


@dataclass(frozen=True)
class SingleWellPotential:
    """Potential with its unique minimum at x = 0, increasing in |x|."""

    V: Callable[[np.ndarray], np.ndarray]
    dV: Callable[[np.ndarray], np.ndarray]
    name: str = "V"

    def __call__(self, x):
        return self.V(np.asarray(x, float))

    @property
    def V0(self) -> float:
        return float(self(np.array([0.0]))[0])

    def validate(self, X: float, n: int = 2001):
        x = np.linspace(-X, X, n)
        if np.any(self(x) < 0):
            raise ValueError(f"{self.name}: V must be non-negative")
        xx = x[np.abs(x) > 1e-9 * X]
        if np.any(xx * self.dV(xx) <= 0):
            raise ValueError(f"{self.name}: x V'(x) must be positive away from 0")
        return self

    def shifted(self, c: float) -> "SingleWellPotential":
        return SingleWellPotential(lambda x: self.V(x) + c, self.dV, f"{self.name}+{c}")

    def turning_points(self, E: float):
        """(x_-, x_+) with V(x_+-) = E, found by bracketing outward from 0."""
        if E <= self.V0:
            raise TurningPointError(f"energy {E} is not above the well minimum {self.V0}")
        out = []
        for sgn in (-1.0, 1.0):
            r = 1.0
            for _ in range(200):
                if self(np.array([sgn * r]))[0] > E:
                    break
                r *= 2.0
            else:
                raise TurningPointError(f"no turning point found for E={E}")
            g = lambda t: float(self(np.array([sgn * t]))[0]) - E
            out.append(sgn * optimize.brentq(g, 0.0, r, xtol=1e-15, rtol=1e-15))
        return out[0], out[1]


def power_potential(p: int = 2, scale: float = 1.0) -> SingleWellPotential:
    """V = scale x^p for even p >= 2."""
    if p < 2 or p % 2:
        raise ValueError("use an even power p >= 2")
    return SingleWellPotential(lambda x: scale * x ** p,
                               lambda x: scale * p * x ** (p - 1),
                               "x^2" if p == 2 else f"x^{p}")


def harmonic() -> SingleWellPotential:
    return power_potential(2)


def quartic() -> SingleWellPotential:
    return power_potential(4)


def profile_well(profile: ProfileFunction, delta: float) -> SingleWellPotential:
    """Single well V_delta agreeing with 1/L^2 on [-1 + delta/2, 1 - delta/2].

    Beyond +-x0 the well continues as the C^1 quadratic v0 + s0 t + s0 t^2
    (t = |x| - x0) matching value and slope, so it is increasing in |x|.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    x0 = 1.0 - 0.5 * delta
    ends = np.array([-x0, x0])
    Lm = profile.L(ends)
    dLm = profile.dL(ends)
    v0 = 1.0 / Lm ** 2
    s0 = np.abs(-2.0 * dLm / Lm ** 3)

    def V(x):
        x = np.asarray(x, float)
        inside = np.abs(x) <= x0
        out = np.empty_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[inside] = 1.0 / profile.L(x[inside]) ** 2
        xo = x[~inside]
        side = (xo > 0).astype(int)
        t = np.abs(xo) - x0
        out[~inside] = v0[side] + s0[side] * t + s0[side] * t * t
        return out

    def dV(x):
        x = np.asarray(x, float)
        inside = np.abs(x) <= x0
        out = np.empty_like(x)
        xi = x[inside]
        out[inside] = -2.0 * profile.dL(xi) / profile.L(xi) ** 3
        xo = x[~inside]
        side = (xo > 0).astype(int)
        t = np.abs(xo) - x0
        out[~inside] = np.sign(xo) * (s0[side] + 2.0 * s0[side] * t)
        return out

    return SingleWellPotential(V, dV, f"well[{profile.name},{delta}]")


@dataclass(frozen=True)
class LineDiscretization:
    """N interior nodes x_i = -X + i dx, dx = 2X/(N+1), Dirichlet at +-X."""

    X: float
    N: int

    def __post_init__(self):
        if self.N < 64:
            raise ValueError("need N >= 64 grid points")
        if self.X <= 0:
            raise ValueError("box half-width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.X / (self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return -self.X + self.dx * np.arange(1, self.N + 1)


def choose_box(V: SingleWellPotential, top: float, margin: float = 5.0,
               h: float | None = None, tail_action: float = 20.0) -> float:
    """Half-width X with V(+-X) >= top + margin.

    Given h, X is also widened until the tunnelling action
    (1/h) int sqrt(V - top) from the turning point to X reaches
    ``tail_action`` on both sides, so box truncation costs ~exp(-2 tail_action).
    """
    a, b = V.turning_points(top + margin)
    X = max(-a, b)
    if h is None:
        return X
    ta, tb = V.turning_points(top)
    for t0, sgn in ((tb, 1.0), (-ta, -1.0)):
        f = lambda s: math.sqrt(max(float(V(np.array([sgn * s]))[0]) - top, 0.0))
        while integrate.quad(f, t0, X, limit=200)[0] / h < tail_action:
            X = t0 + 1.25 * (X - t0)
    return X


def default_discretization(V: SingleWellPotential, h: float, top: float,
                           points_per_wavelength: int = 60) -> LineDiscretization:
    """Box from `choose_box`, spacing resolving the local wavelength 2 pi h / sqrt(top)."""
    X = choose_box(V, top, h=h)
    kmax = math.sqrt(max(top - V.V0, 1e-12)) / h
    dx = 2.0 * math.pi / (kmax * points_per_wavelength)
    N = max(64, int(math.ceil(2 * X / dx)))
    return LineDiscretization(X, N)


@dataclass(frozen=True)
class TridiagonalOperator:
    diag: np.ndarray
    off: np.ndarray
    h: float
    disc: LineDiscretization
    potential: SingleWellPotential

    def to_sparse(self):
        return diags([self.off, self.diag, self.off], [-1, 0, 1], format="csr")

    def apply(self, v):
        out = self.diag[:, None] * v if v.ndim == 2 else self.diag * v
        out[1:] += (self.off[:, None] if v.ndim == 2 else self.off) * v[:-1]
        out[:-1] += (self.off[:, None] if v.ndim == 2 else self.off) * v[1:]
        return out


def assemble_ph(V: SingleWellPotential, disc: LineDiscretization, h: float,
                window_top: float | None = None) -> TridiagonalOperator:
    """Central-difference -h^2 u'' + V u with Dirichlet ends at +-X.

    With ``window_top`` the box is checked: both turning points at that energy
    must sit inside 90% of the box.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if window_top is not None and window_top > V.V0:
        a, b = V.turning_points(window_top)
        if max(-a, b) > 0.9 * disc.X:
            raise BoxTooSmallError(
                f"turning points ({a:.4g}, {b:.4g}) at E={window_top} lie within 10% "
                f"of the box edge X={disc.X}")
    x = disc.nodes
    k = h * h / disc.dx ** 2
    d = 2.0 * k + V(x)
    off = np.full(disc.N - 1, -k)
    return TridiagonalOperator(d, off, h, disc, V)


@dataclass
class WindowSpectrum:
    h: float
    window: tuple
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns, normalised so that dx * sum |psi|^2 = 1
    dx: float
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    diagnostic: str = ""
    weyl_estimate: float = float("nan")

    def __len__(self):
        return self.eigenvalues.size

    def gram(self):
        return self.dx * self.vectors.T @ self.vectors


def bohr_sommerfeld_count(V: SingleWellPotential, h: float, E: float) -> float:
    """Number of levels below E: (1/(pi h)) int sqrt(E - V) dx + 1/2."""
    if E <= V.V0:
        return 0.0
    return action_integral(V, E) / (math.pi * h) + 0.5


def _shell_integral(V, E, power):
    """int_{x-}^{x+} (E - V)^power dx (power = +-1/2), endpoint-safe.

    The substitution x = c + w sin(theta) maps the turning points to
    theta = +-pi/2 and removes the inverse-square-root singularity.
    """
    a, b = V.turning_points(E)
    c, w = 0.5 * (a + b), 0.5 * (b - a)

    def f(theta):
        x = c + w * math.sin(theta)
        gap = E - float(V(np.array([x]))[0])
        if gap <= 0:
            return 0.0
        cos = math.cos(theta)
        if power > 0:
            return math.sqrt(gap) * w * cos
        # (E - V)^(-1/2) w cos(theta), finite at the turning points
        return w * cos / math.sqrt(gap) if cos > 1e-300 else _limit(V, x, w)

    val, _ = integrate.quad(f, -0.5 * math.pi, 0.5 * math.pi, epsabs=0, epsrel=1e-12, limit=400)
    return val


def _limit(V, x, w):
    # at a turning point (E - V) ~ |V'| w (1 - sin) ~ |V'| w cos^2/2
    return math.sqrt(2.0 * w / abs(float(V.dV(np.array([x]))[0])))


def action_integral(V: SingleWellPotential, E: float) -> float:
    return _shell_integral(V, E, 0.5)


def classical_period(V: SingleWellPotential, E: float) -> float:
    """T(E) = int dx / sqrt(E - V) over the allowed region; gaps are ~ 2 pi h / T."""
    return _shell_integral(V, E, -0.5)


def liouville_beta(V: SingleWellPotential, E0: float) -> float:
    """Average of xi^2 over the energy shell {xi^2 + V = E0} (probability measure)."""
    return action_integral(V, E0) / classical_period(V, E0)


def window_spectrum(op: TridiagonalOperator, window) -> WindowSpectrum:
    """All eigenpairs of the operator with eigenvalue in [a, b]."""
    a, b = float(window[0]), float(window[1])
    if b < a:
        raise ValueError("window must satisfy a <= b")
    dx = op.disc.dx
    V0 = op.potential.V0
    if b < V0:
        return WindowSpectrum(op.h, (a, b), np.empty(0), np.empty((op.disc.N, 0)), dx,
                              diagnostic=f"window lies below the well minimum {V0}",
                              weyl_estimate=0.0)
    diagnostic = "" if a > V0 else f"window starts at or below the well minimum {V0}"
    w, v = eigh_tridiagonal(op.diag, op.off, select="v", select_range=(a, b))
    # eigh_tridiagonal uses a half-open interval; keep the closed window
    keep = (w >= a) & (w <= b)
    w, v = w[keep], v[:, keep]
    v = v / math.sqrt(dx)
    res = np.linalg.norm(op.apply(v) - v * w, axis=0) if w.size else np.empty(0)
    bad = res > 1e-8 * np.maximum(np.linalg.norm(v, axis=0), 1.0) * max(1.0, abs(b))
    if np.any(bad):
        raise RuntimeError(f"eigensolver residual too large: {res.max():.3e}")
    est = bohr_sommerfeld_count(op.potential, op.h, b) - bohr_sommerfeld_count(
        op.potential, op.h, max(a, V0))
    return WindowSpectrum(op.h, (a, b), w, v, dx, res, diagnostic, est)


def spacing_law(spectrum: WindowSpectrum):
    """(min gap / h, max gap / h) over consecutive window eigenvalues."""
    if len(spectrum) < 2:
        raise InsufficientModesError("need at least two eigenvalues in the window to form gaps")
    g = np.diff(spectrum.eigenvalues) / spectrum.h
    return float(g.min()), float(g.max())


def eigenvector_derivative(spectrum: WindowSpectrum, idx=None) -> np.ndarray:
    """Centered differences with zero Dirichlet padding."""
    v = spectrum.vectors if idx is None else spectrum.vectors[:, idx]
    p = np.pad(v, ((1, 1), (0, 0)))
    return (p[2:] - p[:-2]) / (2.0 * spectrum.dx)


@dataclass(frozen=True)
class KineticFormResult:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    center_index: int

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    @property
    def max_offdiag(self):
        """Largest |off-diagonal|; None when only one mode is present."""
        n = self.matrix.shape[0]
        if n < 2:
            return None
        return float(np.max(np.abs(self.matrix[~np.eye(n, dtype=bool)])))


def b_matrix(spectrum: WindowSpectrum, E0: float, N: int, h: float | None = None) -> KineticFormResult:
    """Matrix <h psi_i', h psi_j'> for the 2N+1 window modes nearest E0."""
    h = spectrum.h if h is None else h
    if N < 0:
        raise ValueError("N must be >= 0")
    lam = spectrum.eigenvalues
    if lam.size < 2 * N + 1:
        raise InsufficientModesError(f"need {2 * N + 1} modes, window has {lam.size}")
    c = int(np.argmin(np.abs(lam - E0)))
    lo, hi = c - N, c + N + 1
    if lo < 0 or hi > lam.size:
        raise InsufficientModesError(
            f"only {c} modes below and {lam.size - c - 1} above E0={E0} in the window; need {N} each side")
    d = h * eigenvector_derivative(spectrum, slice(lo, hi))
    B = spectrum.dx * d.T @ d
    B = 0.5 * (B + B.T)
    return KineticFormResult(B, lam[lo:hi].copy(), c)


def spectrum_rows(spectrum: WindowSpectrum):
    """(h, index, eigenvalue) rows for tabular export."""
    return [(spectrum.h, i, float(e)) for i, e in enumerate(spectrum.eigenvalues)]


def spectrum_record(spectrum: WindowSpectrum, include_vectors: bool = False) -> dict:
    rec = dict(h=spectrum.h, window=list(spectrum.window),
               eigenvalues=[float(e) for e in spectrum.eigenvalues],
               diagnostic=spectrum.diagnostic)
    if include_vectors:
        rec["dx"] = spectrum.dx
        rec["vectors"] = spectrum.vectors.T.tolist()
    return rec


def harmonic_envelope(n, dx: float, h: float, X: float, C: float = 2.0):
    """Frozen error bound for level n of the discretised harmonic oscillator.

    The leading central-difference error of level n is
    -dx^2 (2n^2 + 2n + 1)/16 (independent of h); C = 2 gives headroom for the
    next order, plus the box-truncation tail.
    """
    n = np.asarray(n, float)
    return C * (dx * dx * (2 * n * n + 2 * n + 1) / 16.0 + math.exp(-X * X / (2.0 * h)))
