"""Exact Dirichlet / Neumann spectra of the unit disk and unit ball."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .zeros import bessel_derivative_zeros, bessel_zeros

Boundary = Literal["dirichlet", "neumann"]
ParityFilter = Literal["all", "odd", "even"]


@dataclass(frozen=True)
class DiskMode:
    """Separated disk eigenmode J_m(sqrt(lam) r) {cos, sin}(m theta).

    ``n`` is the radial index (1-based); the Neumann constant mode has n = 0.
    ``parity`` is 'radial' for m = 0, otherwise 'odd' (sine) or 'even' (cosine).
    """

    m: int
    n: int
    lam: float
    parity: str


@dataclass(frozen=True)
class BallMode:
    ell: int
    n: int
    lam: float

    @property
    def multiplicity(self) -> int:
        return 2 * self.ell + 1

    def sector_dimension(self, m: int) -> int:
        """dim of the eigenspace slice in the rotation sector e^{i m alpha}."""
        return 1 if abs(m) <= self.ell else 0


def _zeros_below(nu, bound, derivative):
    """All positive zeros of J_nu (or J'_nu) below ``bound``."""
    n = max(1, int(bound / math.pi - 0.5 * nu) + 2)
    fetch = bessel_derivative_zeros if derivative else bessel_zeros
    while True:
        table = fetch(nu, n)
        z = table.derivative_zeros if derivative else table.zeros
        if z[-1] > bound:
            return z[z < bound]
        n *= 2


def _first_zero(nu, derivative):
    table = (bessel_derivative_zeros if derivative else bessel_zeros)(nu, 1)
    return float((table.derivative_zeros if derivative else table.zeros)[0])


def _disk_modes_below(boundary: Boundary, parity_filter: ParityFilter, bound: float):
    derivative = boundary == "neumann"
    modes = []
    if boundary == "neumann" and parity_filter != "odd":
        modes.append(DiskMode(0, 0, 0.0, "radial"))
    m = 0
    while True:
        if _first_zero(m, derivative) > bound:
            break
        z = _zeros_below(m, bound, derivative)
        for i, zz in enumerate(z):
            lam = float(zz * zz)
            if m == 0:
                if parity_filter != "odd":
                    modes.append(DiskMode(0, i + 1, lam, "radial"))
                continue
            if parity_filter in ("all", "odd"):
                modes.append(DiskMode(m, i + 1, lam, "odd"))
            if parity_filter in ("all", "even"):
                modes.append(DiskMode(m, i + 1, lam, "even"))
        m += 1
    order = {"radial": 0, "even": 1, "odd": 2}
    modes.sort(key=lambda d: (d.lam, d.m, order[d.parity]))
    return modes


def disk_spectrum(boundary: Boundary = "dirichlet", parity_filter: ParityFilter = "all",
                  count: int = 10) -> list[DiskMode]:
    """First ``count`` unit-disk eigenmodes in a parity class, ascending.

    'odd' keeps the sine modes (m >= 1), 'even' the cosine modes (m >= 0);
    'all' is their multiset union, so each m >= 1 eigenvalue appears twice.
    """
    boundary = boundary.lower()
    if boundary not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary {boundary!r}")
    if parity_filter not in ("all", "odd", "even"):
        raise ValueError(f"unknown parity filter {parity_filter!r}")
    if count < 1:
        raise ValueError("count must be >= 1")
    bound = math.sqrt(8.0 * count) + 4.0
    while True:
        modes = _disk_modes_below(boundary, parity_filter, bound)
        if len(modes) >= count:
            return modes[:count]
        bound *= 1.5


def distinct_levels(modes, rtol: float = 1e-10):
    """Collapse a mode list to (eigenvalue, multiplicity) pairs."""
    out = []
    for d in modes:
        if out and abs(d.lam - out[-1][0]) <= rtol * max(1.0, d.lam):
            out[-1][1] += 1
        else:
            out.append([d.lam, 1])
    return [(lam, k) for lam, k in out]


def ball_spectrum(count: int) -> list[BallMode]:
    """First ``count`` distinct Dirichlet eigenvalues of the unit ball.

    Eigenvalue j_{ell+1/2, n}^2 with multiplicity 2 ell + 1.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    bound = 2.0 * math.pi + 2.0 * count ** (1.0 / 3.0) * math.pi
    while True:
        modes = []
        ell = 0
        while True:
            z = _zeros_below(ell + 0.5, bound, False)
            if z.size == 0:
                break
            modes.extend(BallMode(ell, i + 1, float(zz * zz)) for i, zz in enumerate(z))
            ell += 1
        modes.sort(key=lambda b: (b.lam, b.ell))
        if len(modes) >= count:
            return modes[:count]
        bound *= 1.5


def disk_mode_eigenvalues(m: int, count: int, radius: float = 1.0) -> np.ndarray:
    """spec_m of the Dirichlet disk: j_{m,n}^2 / radius^2, n = 1..count."""
    z = bessel_zeros(abs(m), count).zeros
    return z * z / radius ** 2
