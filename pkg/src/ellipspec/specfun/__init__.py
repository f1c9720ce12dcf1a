"""Bessel functions, zeros, Bourget separation and disk/ball spectra."""
from .bessel import BesselDomainError, BesselOrder, bessel_j, bessel_j_derivative
from .harmonic import HarmonicPolynomial, ladder_polynomial, rot_x, rx_eigenvalue
from .spectra import (BallMode, DiskMode, ball_spectrum, disk_mode_eigenvalues,
                      disk_spectrum, distinct_levels)
from .zeros import (BesselTable, BourgetReport, ZeroRefinementError, bessel_derivative_zeros,
                    bessel_zeros, bourget_check, interlace, lommel_identity_residual,
                    lommel_polynomials, mcmahon)

__all__ = [
    "BallMode", "BesselDomainError", "BesselOrder", "BesselTable", "BourgetReport",
    "DiskMode", "HarmonicPolynomial", "ZeroRefinementError", "ball_spectrum",
    "bessel_derivative_zeros", "bessel_j", "bessel_j_derivative", "bessel_zeros",
    "bourget_check", "disk_mode_eigenvalues", "disk_spectrum", "distinct_levels",
    "interlace", "ladder_polynomial", "lommel_identity_residual", "lommel_polynomials",
    "mcmahon", "rot_x", "rx_eigenvalue",
]
