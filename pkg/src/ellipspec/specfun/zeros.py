"""Zeros of J_nu and J'_nu, Lommel polynomials, and Bourget-type separation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bessel import BesselOrder, as_order, bessel_j, bessel_j_derivative

ZERO_TOL = 1e-10
_SCAN_STEP = 0.25


class ZeroRefinementError(RuntimeError):
    def __init__(self, order, bracket, value):
        self.order = order
        self.bracket = bracket
        super().__init__(
            f"refinement of zero of order {order} in bracket {bracket} did not converge "
            f"(residual {value:.3e})")


@dataclass(frozen=True)
class BesselTable:
    """First zeros of J_nu (``zeros``) and of J'_nu (``derivative_zeros``).

    Either array may be empty when it was not requested.
    """

    order: BesselOrder
    zeros: np.ndarray = field(default_factory=lambda: np.empty(0))
    derivative_zeros: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        for arr in (self.zeros, self.derivative_zeros):
            arr.setflags(write=False)
            if arr.size > 1 and np.any(np.diff(arr) <= 0):
                raise ValueError("zero table must be strictly increasing")

    def rows(self):
        """(order, index, zero, zero_of_derivative) records; missing entries are None."""
        n = max(self.zeros.size, self.derivative_zeros.size)
        for i in range(n):
            z = float(self.zeros[i]) if i < self.zeros.size else None
            d = float(self.derivative_zeros[i]) if i < self.derivative_zeros.size else None
            yield self.order.nu, i + 1, z, d


def mcmahon(nu: float, n: int) -> float:
    """McMahon's large-n estimate of j_{nu,n}."""
    beta = (n + 0.5 * nu - 0.25) * np.pi
    mu = 4.0 * nu * nu
    return beta - (mu - 1.0) / (8.0 * beta) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta) ** 3)


def _find_sign_changes(f, nu, count, start):
    """Scan f on a fine grid until `count` sign changes are bracketed."""
    brackets = []
    lo = start
    # McMahon sizes the first window; extend until enough sign changes appear
    hi = max(mcmahon(nu, count) + 2 * np.pi, start + 4 * np.pi, nu + 4 * np.pi)
    while True:
        grid = np.arange(lo, hi + _SCAN_STEP, _SCAN_STEP)
        vals = f(grid)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        for i in idx:
            brackets.append((grid[i], grid[i + 1]))
            if len(brackets) == count:
                return brackets
        lo = grid[-1]
        hi = lo + 10 * np.pi


def _refine(f, order, brackets, fun_tol):
    out = []
    for a, b in brackets:
        z = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        val = f(z)
        if not abs(val) <= fun_tol:
            raise ZeroRefinementError(order.nu, (a, b), abs(val))
        out.append(z)
    return np.array(out)


def bessel_zeros(order, count: int) -> BesselTable:
    """First ``count`` positive zeros of J_nu, each certified by a sign change."""
    order = as_order(order)
    if count < 1:
        raise ValueError("count must be >= 1")
    nu = order.nu
    f = lambda x: bessel_j(nu, x)
    br = _find_sign_changes(f, nu, count, start=max(0.5 * nu, 1e-3))
    return BesselTable(order, zeros=_refine(f, order, br, ZERO_TOL))


def bessel_derivative_zeros(order, count: int) -> BesselTable:
    """First ``count`` positive zeros of J'_nu (z = 0 excluded for nu = 0)."""
    order = as_order(order)
    if count < 1:
        raise ValueError("count must be >= 1")
    nu = order.nu
    f = lambda x: bessel_j_derivative(nu, x)
    br = _find_sign_changes(f, nu, count, start=max(0.5 * nu, 1e-3))
    return BesselTable(order, derivative_zeros=_refine(f, order, br, ZERO_TOL))


def interlace(a: np.ndarray, b: np.ndarray) -> bool:
    """True if zeros of J_nu (a) and J_{nu+1} (b) strictly interlace: a0 < b0 < a1 < b1 ..."""
    n = min(a.size, b.size)
    merged = np.empty(2 * n)
    merged[0::2] = a[:n]
    merged[1::2] = b[:n]
    return bool(np.all(np.diff(merged) > 0))


# --- Lommel polynomials -------------------------------------------------------

def lommel_polynomials(k: int, m: int):
    """Integer coefficient lists (ascending powers of w = 1/z) of p, q with

    J_{k+m}(z) = p(1/z) J_k(z) + q(1/z) J_{k-1}(z),

    obtained by iterating J_{nu+1} = (2 nu / z) J_nu - J_{nu-1}.
    """
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    # (P_{j-1}, Q_{j-1}) and (P_j, Q_j) for J_{k+j-1}, J_{k+j}
    p_prev, q_prev = [0], [1]
    p_cur, q_cur = [1], [0]
    for j in range(m):
        c = 2 * (k + j)
        p_next = _poly_sub(_poly_shift_scale(p_cur, c), p_prev)
        q_next = _poly_sub(_poly_shift_scale(q_cur, c), q_prev)
        p_prev, q_prev, p_cur, q_cur = p_cur, q_cur, p_next, q_next
    return p_cur, q_cur


def _poly_shift_scale(p, c):
    return [0] + [c * a for a in p]


def _poly_sub(a, b):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    out = [x - y for x, y in zip(a, b)]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def _horner(coeffs, w):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * w + c
    return acc


def lommel_identity_residual(k: int, m: int, z: float) -> float:
    """|J_{k+m}(z) - p(1/z) J_k(z) - q(1/z) J_{k-1}(z)|."""
    if z <= 0:
        raise ValueError("z must be positive")
    p, q = lommel_polynomials(k, m)
    w = 1.0 / z
    lhs = bessel_j(k + m, z)
    rhs = _horner(p, w) * bessel_j(k, z) + _horner(q, w) * bessel_j(k - 1, z)
    return abs(lhs - rhs)


# --- Bourget separation ---------------------------------------------------------

@dataclass(frozen=True)
class BourgetReport:
    min_distance: float
    closest_pair: tuple | None  # ((nu, n, zero), (nu', n', zero'))
    tolerance: float
    orders: tuple

    @property
    def passed(self) -> bool:
        return self.min_distance > self.tolerance

    @property
    def offending_pair(self):
        return None if self.passed else self.closest_pair

    def as_dict(self):
        pair = None
        if self.closest_pair is not None:
            pair = [dict(order=a[0], index=a[1], zero=a[2]) for a in self.closest_pair]
        return dict(min_distance=self.min_distance, closest_pair=pair,
                    tolerance=self.tolerance, passed=self.passed, orders=list(self.orders))


def bourget_check(max_order: int, zeros_per_order: int, half_integer: bool = False,
                  tolerance: float = 1e-6) -> BourgetReport:
    """Smallest distance between positive zeros of J_nu and J_nu' over distinct orders.

    Orders are 0..max_order, or 1/2 .. max_order + 1/2 with ``half_integer``.
    A single order has no pairs and reports +inf.
    """
    if max_order > 30 or zeros_per_order > 50:
        raise ValueError("bourget_check supports max_order <= 30, zeros_per_order <= 50")
    if max_order < 0 or zeros_per_order < 1:
        raise ValueError("need max_order >= 0 and zeros_per_order >= 1")
    offset = 0.5 if half_integer else 0.0
    orders = tuple(n + offset for n in range(max_order + 1))
    labelled = []
    for nu in orders:
        for i, z in enumerate(bessel_zeros(nu, zeros_per_order).zeros):
            labelled.append((float(z), nu, i + 1))
    labelled.sort()
    best = math.inf
    pair = None
    # nearest distinct-order neighbour in sorted order realises the minimum
    for (za, na, ia), (zb, nb, ib) in itertools.pairwise(labelled):
        if na != nb and zb - za < best:
            best = zb - za
            pair = ((na, ia, za), (nb, ib, zb))
    return BourgetReport(best, pair, tolerance, orders)
