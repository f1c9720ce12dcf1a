"""
Disk and ball spectra from Bessel zeros
=======================================

The unit disk has Dirichlet eigenvalues j_{m,n}^2, doubled for m >= 1
(cos and sin).  The ball has j_{l+1/2,n}^2 with multiplicity 2l + 1.
Distinct orders never share a zero, which is why no other coincidences occur.
"""
import numpy as np

from ellipspec.specfun import (ball_spectrum, bessel_zeros, bourget_check, disk_spectrum,
                               distinct_levels)

# first zeros of J_0, J_1, J_2
for nu in (0, 1, 2):
    print(nu, bessel_zeros(nu, 3).zeros)

# half-integer orders are elementary: J_{1/2}(x) ~ sin(x) / sqrt(x)
print(bessel_zeros(0.5, 4).zeros / np.pi)

modes = disk_spectrum("dirichlet", "all", 10)
for lam, mult in distinct_levels(modes):
    print(f"{lam:10.5f}  x{mult}")

# Neumann: the constant mode sits at 0
print([round(m.lam, 4) for m in disk_spectrum("neumann", "all", 5)])

for b in ball_spectrum(6):
    print(b.ell, b.n, round(b.lam, 4), b.multiplicity)

# Bourget: the closest pair of zeros with different integer orders
rep = bourget_check(10, 20)
print(rep.min_distance, rep.closest_pair)
