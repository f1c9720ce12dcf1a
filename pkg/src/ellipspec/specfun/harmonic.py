"""Exact harmonic polynomials on R^3 generated by rotation ladder operators.

Coefficients are Gaussian rationals stored as pairs of ``Fraction``; every
identity here (harmonicity, R_x eigenrelation) holds exactly, not to a
tolerance.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb

_ZERO = (Fraction(0), Fraction(0))


def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _c(z):
    if isinstance(z, tuple):
        return (Fraction(z[0]), Fraction(z[1]))
    z = complex(z) if not isinstance(z, (int, Fraction)) else z
    if isinstance(z, complex):
        if z.real != int(z.real) or z.imag != int(z.imag):
            raise ValueError("use Fraction pairs for non-integer complex scalars")
        return (Fraction(int(z.real)), Fraction(int(z.imag)))
    return (Fraction(z), Fraction(0))


I = (Fraction(0), Fraction(1))


class HarmonicPolynomial:
    """Polynomial in x, y, z with Gaussian-rational coefficients.

    ``terms`` maps exponent triples (a, b, c) to (re, im) Fractions; zero
    coefficients are never stored, so equality is structural.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for mono, coef in (terms or {}).items():
            coef = _c(coef)
            if coef != _ZERO:
                self.terms[tuple(mono)] = coef

    @classmethod
    def variable(cls, name):
        return cls({{"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[name]: 1})

    def __add__(self, other):
        out = dict(self.terms)
        for mono, coef in other.terms.items():
            out[mono] = _cadd(out.get(mono, _ZERO), coef)
        return HarmonicPolynomial(out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = _c(s)
        return HarmonicPolynomial({m: _cmul(c, s) for m, c in self.terms.items()})

    def __mul__(self, other):
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2])
                out[mono] = _cadd(out.get(mono, _ZERO), _cmul(c1, c2))
        return HarmonicPolynomial(out)

    def __pow__(self, n):
        out = HarmonicPolynomial({(0, 0, 0): 1})
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, HarmonicPolynomial) and self.terms == other.terms

    def is_zero(self):
        return not self.terms

    def diff(self, axis):
        out = {}
        for mono, coef in self.terms.items():
            p = mono[axis]
            if p == 0:
                continue
            new = list(mono)
            new[axis] -= 1
            out[tuple(new)] = _cadd(out.get(tuple(new), _ZERO), _cmul(coef, _c(p)))
        return HarmonicPolynomial(out)

    def times(self, name):
        return self * HarmonicPolynomial.variable(name)

    def laplacian(self):
        return self.diff(0).diff(0) + self.diff(1).diff(1) + self.diff(2).diff(2)

    def degree(self):
        return max((sum(m) for m in self.terms), default=-1)

    def is_proportional_to(self, other):
        """Exact test: self == c * other for some Gaussian rational c."""
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        if set(self.terms) != set(other.terms):
            return False
        mono = next(iter(other.terms))
        a, b = self.terms[mono], other.terms[mono]
        # c = a / b
        den = b[0] * b[0] + b[1] * b[1]
        c = ((a[0] * b[0] + a[1] * b[1]) / den, (a[1] * b[0] - a[0] * b[1]) / den)
        return other.scale(c) == self

    def __repr__(self):
        parts = []
        for (a, b, c), (re, im) in sorted(self.terms.items(), reverse=True):
            parts.append(f"({re}{'+' if im >= 0 else '-'}{abs(im)}i)*x^{a}y^{b}z^{c}")
        return " + ".join(parts) or "0"


# rotation generators about the coordinate axes
def rot_x(p):
    return p.diff(1).times("z").scale(-1) + p.diff(2).times("y")


def rot_y(p):
    return p.diff(2).times("x").scale(-1) + p.diff(0).times("z")


def rot_z(p):
    return p.diff(0).times("y").scale(-1) + p.diff(1).times("x")


def ladder(p):
    """L = R_y + i R_z."""
    return rot_y(p) + rot_z(p).scale(I)


def ladder_polynomial(ell: int, k: int) -> HarmonicPolynomial:
    """Y_{ell,k} = L^k (y - i z)^ell, satisfying R_x Y = -i (ell - k) Y."""
    if ell < 0 or ell > 8:
        raise ValueError("ell must be in 0..8")
    if not 0 <= k <= 2 * ell:
        raise ValueError(f"k must be in 0..{2 * ell}, got {k}")
    terms = {}
    for j in range(ell + 1):
        # C(ell, j) y^(ell-j) (-i z)^j
        phase = [(1, 0), (0, -1), (-1, 0), (0, 1)][j % 4]
        coef = (Fraction(comb(ell, j) * phase[0]), Fraction(comb(ell, j) * phase[1]))
        terms[(0, ell - j, j)] = coef
    p = HarmonicPolynomial(terms)
    for _ in range(k):
        p = ladder(p)
    return p


def rx_eigenvalue(ell: int, k: int):
    """Eigenvalue -i (ell - k) as a Gaussian-rational pair."""
    return (Fraction(0), Fraction(-(ell - k)))
