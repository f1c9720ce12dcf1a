"""Real-order Bessel functions of the first kind.

``bessel_j`` combines three regimes:

* the ascending series where its terms do not cancel (small ``x`` or
  ``x**2/4 <= nu + 1``),
* Miller's backward recurrence normalised by the Neumann-type sum
  ``(x/2)**mu = sum_k (mu + 2k) Gamma(mu + k) / k! * J_{mu+2k}(x)``,
* the Hankel large-argument expansion for ``x >> nu**2``.

All three agree to ~1e-15 in their overlap bands, which the test suite checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 60.0

_RESCALE = 1e250


class BesselDomainError(ValueError):
    """Order or argument outside the validated evaluation domain."""


@dataclass(frozen=True)
class BesselOrder:
    """Non-negative real order with an integer / half-integer flag."""

    nu: float

    def __post_init__(self):
        if not np.isfinite(self.nu) or self.nu < 0:
            raise BesselDomainError(f"Bessel order must be >= 0, got {self.nu!r}")

    @property
    def is_integer(self) -> bool:
        return abs(self.nu - round(self.nu)) < 1e-12

    @property
    def is_half_integer(self) -> bool:
        return abs(self.nu - 0.5 - round(self.nu - 0.5)) < 1e-12

    def __float__(self):
        return float(self.nu)

    def label(self) -> str:
        if self.is_integer:
            return str(int(round(self.nu)))
        if self.is_half_integer:
            return f"{int(round(2 * self.nu))}/2"
        return repr(self.nu)


def as_order(order) -> BesselOrder:
    return order if isinstance(order, BesselOrder) else BesselOrder(float(order))


def _series(nu, x):
    """Ascending series; only used where terms decrease monotonically."""
    q = -0.25 * x * x
    term = np.exp(nu * (np.log(x) - math.log(2.0)) - math.lgamma(nu + 1.0))
    total = term.copy()
    for k in range(1, 400):
        term = term * q / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _neumann_weights(mu, kmax):
    """Coefficients of J_{mu+2k} in the Neumann sum for (x/2)**mu."""
    if mu == 0.0:
        w = np.full(kmax + 1, 2.0)
        w[0] = 1.0
        return w
    k = np.arange(1, kmax + 1)
    lg = np.array([math.lgamma(mu + kk) - math.lgamma(kk + 1.0) for kk in k])
    # k = 0 term is mu Gamma(mu) = Gamma(mu + 1), finite as mu -> 0
    return np.concatenate([[math.gamma(mu + 1.0)], (mu + 2.0 * k) * np.exp(lg)])


def _miller(nu, x):
    n = int(math.floor(nu))
    mu = nu - n
    xmax = float(np.max(x))
    top = int(max(xmax, nu) + 12.0 * xmax ** (1.0 / 3.0) + 30)
    top += top % 2
    weights = _neumann_weights(mu, top // 2 + 1)

    f_next = np.zeros_like(x)         # J_{mu+j+1}, unnormalised
    f_cur = np.full_like(x, 1e-300)   # J_{mu+j}
    norm = np.zeros_like(x)
    target = np.zeros_like(x)
    for j in range(top, -1, -1):
        if j % 2 == 0:
            norm += weights[j // 2] * f_cur
        if j == n:
            target = f_cur.copy()
        if j == 0:
            break
        f_prev = (2.0 * (mu + j) / x) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            f_cur *= s
            f_next *= s
            norm *= s
            target *= s
    return target * np.exp(mu * np.log(0.5 * x)) / norm


def _hankel(nu, x):
    m4 = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 60):
        term = term * (m4 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if k % 2 == 1:
            contrib = term if (k // 2) % 2 == 0 else -term
            q += contrib
        else:
            contrib = -term if (k // 2) % 2 == 1 else term
            p += contrib
        if np.all(np.abs(term) < 1e-17):
            break
    chi = x - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j(order, x):
    """Bessel function J_nu(x) for real nu in [0, 60] and x >= 0.

    Accepts scalar or array ``x``; returns the same shape (a float for scalar
    input).
    """
    nu = float(as_order(order))
    if nu > MAX_ORDER:
        raise BesselDomainError(
            f"order {nu} exceeds {MAX_ORDER}: recurrence normalisation would overflow")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise BesselDomainError("bessel_j requires finite x >= 0")

    out = np.empty_like(xa)
    zero = xa == 0.0
    out[zero] = 1.0 if nu == 0.0 else 0.0

    use_series = ~zero & ((xa <= 2.0) | (0.25 * xa * xa <= nu + 1.0))
    use_hankel = ~zero & ~use_series & (xa >= max(40.0, 2.0 * nu * nu))
    use_miller = ~zero & ~use_series & ~use_hankel
    if np.any(use_series):
        out[use_series] = _series(nu, xa[use_series])
    if np.any(use_hankel):
        out[use_hankel] = _hankel(nu, xa[use_hankel])
    if np.any(use_miller):
        out[use_miller] = _miller(nu, xa[use_miller])
    return float(out[0]) if scalar else out


def bessel_j_derivative(order, x):
    """J'_nu(x), from (nu/x) J_nu - J_{nu+1} (and -J_1 for nu = 0)."""
    nu = float(as_order(order))
    xa = np.asarray(x, dtype=float)
    if nu == 0.0:
        return -bessel_j(1.0, xa)
    if nu >= 1.0:
        return 0.5 * (bessel_j(nu - 1.0, xa) - bessel_j(nu + 1.0, xa))
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    out = np.empty_like(xa)
    pos = xa > 0
    out[~pos] = np.inf
    xp = xa[pos]
    out[pos] = nu / xp * bessel_j(nu, xp) - bessel_j(nu + 1.0, xp)
    return float(out[0]) if scalar else out
