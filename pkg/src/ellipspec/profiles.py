"""Profile curves L on ]-1, 1[ bounding half-ovals {0 < y < L(x)}."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileFunction:
    """A profile L with derivatives L', L''.

    ``endpoint_exponent`` is the vanishing order of L at +-1 (1/2 for the
    circle), used to pick the endpoint quadrature substitution.
    """

    name: str
    L: Callable[[np.ndarray], np.ndarray]
    dL: Callable[[np.ndarray], np.ndarray]
    d2L: Callable[[np.ndarray], np.ndarray]
    endpoint_exponent: float = 0.5

    @property
    def L0(self) -> float:
        return float(self.L(np.array([0.0]))[0])

    def validate(self, n: int = 401):
        """Check L > 0 inside, x L'(x) < 0 for x != 0, and L(+-1) = 0."""
        x = np.linspace(-1, 1, n)[1:-1]
        x = x[np.abs(x) > 1e-9]
        if np.any(self.L(x) <= 0):
            raise ProfileError(f"profile {self.name}: L must be positive on ]-1,1[")
        if np.any(x * self.dL(x) >= 0):
            raise ProfileError(f"profile {self.name}: violates x L'(x) < 0")
        ends = self.L(np.array([-1.0, 1.0]))
        if np.any(np.abs(ends) > 1e-12):
            raise ProfileError(f"profile {self.name}: L(+-1) = {ends} must vanish")
        return self

    def scaled(self, c: float) -> "ProfileFunction":
        """Homothetic profile c L (the half-oval is stretched vertically by c)."""
        return ProfileFunction(f"{c}*{self.name}", lambda x: c * self.L(x),
                               lambda x: c * self.dL(x), lambda x: c * self.d2L(x),
                               self.endpoint_exponent)


def _safe_sqrt(t):
    return np.sqrt(np.clip(t, 0.0, None))


def circle() -> ProfileFunction:
    """L(x) = sqrt(1 - x^2): the half-disk, and the ellipse after stretching."""

    def L(x):
        return _safe_sqrt(1.0 - np.asarray(x, float) ** 2)

    def dL(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore"):
            return -x / L(x)

    def d2L(x):
        with np.errstate(divide="ignore"):
            return -1.0 / L(x) ** 3

    return ProfileFunction("circle", L, dL, d2L, 0.5)


def bulged(a: float = 0.3) -> ProfileFunction:
    """L(x) = sqrt(1 - x^2) (1 + a (1 - x^2)), a >= 0; L(0) = 1 + a."""
    if a < 0:
        raise ProfileError("bulge parameter must be >= 0")

    def L(x):
        t = 1.0 - np.asarray(x, float) ** 2
        return _safe_sqrt(t) * (1.0 + a * t)

    def dL(x):
        x = np.asarray(x, float)
        t = 1.0 - x ** 2
        r = _safe_sqrt(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -x / r * (1.0 + a * t) - 2.0 * a * x * r

    def d2L(x):
        x = np.asarray(x, float)
        t = 1.0 - x ** 2
        r = _safe_sqrt(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            # d/dx of -x(1+at)/r - 2a x r
            return (-(1.0 + a * t) / r - x * x * (1.0 + a * t) / r ** 3
                    + 2.0 * a * x * x / r - 2.0 * a * r + 2.0 * a * x * x / r)

    return ProfileFunction(f"bulged({a})", L, dL, d2L, 0.5)


_REGISTRY = {"circle": circle, "bulged": bulged}


def get_profile(name: str) -> ProfileFunction:
    """Look up a profile by id: 'circle' or 'bulged' / 'bulged:0.3'."""
    base, _, arg = name.partition(":")
    if base not in _REGISTRY:
        raise ProfileError(f"unknown profile {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[base](float(arg)) if arg else _REGISTRY[base]()
