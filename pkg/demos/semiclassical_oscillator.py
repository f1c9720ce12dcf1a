"""
Semiclassical spectra on the line
=================================

P_h = -h^2 d^2/dx^2 + V(x).  For the harmonic well the eigenvalues are
(2n + 1) h, so spacings over h tend to 2.  For other wells the spacing near
energy E is 2 pi h / T(E), with T the classical period.
"""
import numpy as np

from ellipspec import schrodinger1d as s1


def window(V, h, a, b):
    disc = s1.default_discretization(V, h, b, 60)
    op = s1.assemble_ph(V, disc, h, window_top=b)
    return s1.window_spectrum(op, (a, b))


sp = window(s1.harmonic(), 0.1, 0.0, 2.0)
print(sp.eigenvalues)
print(sp.eigenvalues / 0.1)

# gap / h shrinks toward 2 for the oscillator,
for h in (0.02, 0.01, 0.005):
    print(h, s1.spacing_law(window(s1.harmonic(), h, 0.5, 1.5)))

# and drifts with energy for the quartic well
for h in (0.01, 0.005):
    print(h, s1.spacing_law(window(s1.quartic(), h, 1.0, 2.0)))

# kinetic form <h psi_i', h psi_j'> near E0 = 1: the diagonal is the
# Liouville average beta = E0 / 2, the n, n+2 entries stay of size h n
V = s1.harmonic()
B = s1.b_matrix(window(V, 0.005, 0.5, 1.5), 1.0, 2)
print(s1.liouville_beta(V, 1.0))
print(np.round(B.diagonal, 4))
print(np.round(B.matrix, 4))
