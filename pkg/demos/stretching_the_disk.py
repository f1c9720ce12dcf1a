"""
Stretching a disk into an ellipse
=================================

q_h(u) = h^2 |d_x u|^2 + |d_y u|^2 on the unit disk has the spectrum of the
ellipse with semi-axes (1/h, 1).  Splitting by parity in y gives two
half-disk problems.  As h -> 0 the odd branches fall to (k pi)^2 and the even
ones to ((k - 1/2) pi)^2, so an odd and an even branch must cross somewhere.
"""
import numpy as np

from ellipspec import branches as br
from ellipspec import oval2d as o
from ellipspec.fem import graded_mesh
from ellipspec.profiles import circle

pair = o.double_oval(circle(), "dirichlet", 1.0, 16)
r = o.solve_smallest(pair, count=6)
print(list(zip(np.round(r.eigenvalues, 4), r.parity)))

# the finite-difference ellipse knows nothing about parity
print(o.fd_oracle_ellipse(1.0).extrapolated)

hs = np.geomspace(1.0, 0.05, 29)
bs = br.track(circle(), "dirichlet", hs, count=2, systems=pair)
for b in bs:
    print(b.parity, b.branch_id, round(b.values[0], 4), round(b.values[-1], 4),
          round(b.limit.limit, 4), b.limit.threshold)

# tidy CSV for plotting elsewhere
print(br.branches_csv(bs[:1]).splitlines()[:4])

# the first odd branch meets an even one near h = 0.578
c = br.find_crossing(None, None, (0.1, 0.9), systems=pair)
print(c.to_json())

# at h = 1 the disk doubles show up as flagged gaps; the parity blocks need a
# finer mesh so their discretisation errors stay below the 1e-4 tolerance
fine = o.double_oval(circle(), "dirichlet", 1.0, 16, graded_mesh(1600))
pt = br.simplicity_scan(circle(), "dirichlet", [0.7, 1.0], count=8, systems=fine)
for p in pt:
    print(p.h, p.min_gap, [(f["i"], f["j"]) for f in p.flagged])
