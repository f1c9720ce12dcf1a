import math

import mpmath
import numpy as np
import pytest

from ellipspec import ellipsoid3d as e3
from ellipspec.profiles import bulged, circle
from ellipspec.specfun import ball_spectrum, bessel_zeros

PI2 = math.pi ** 2


def test_sector_thresholds_examples():
    t0 = e3.sector_thresholds(0, 2)
    assert [t.value for t in t0] == pytest.approx([5.7832, 30.4713], abs=1e-4)
    assert e3.sector_thresholds(1, 1)[0].value == pytest.approx(14.6820, abs=1e-4)
    # L(0) = 1.2 rescales every threshold
    tb = e3.sector_thresholds(0, 1, bulged(0.2))[0].value
    assert tb == pytest.approx(t0[0].value / 1.44)
    with pytest.raises(ValueError):
        e3.sector_coefficients(-1, 3)


def test_cross_sector_gap_brute_force():
    z = {m: [float(mpmath.besseljzero(m, n)) ** 2 for n in range(1, 11)] for m in range(6)}
    best = min(abs(a - b) for m in z for mm in z if m < mm for a in z[m] for b in z[mm])
    assert e3.cross_sector_gap(5, 10) == pytest.approx(best, rel=1e-9)
    assert best > 1e-6


def test_sector_spectrum_threshold_bound():
    for m in (0, 1, 2):
        vals = e3.sector_spectrum(m, 0.3, (0.0, 80.0))
        thr = {n + 1: t.value for n, t in enumerate(e3.sector_thresholds(m, 6))}
        assert vals and all(v.value >= thr[v.k] * (1 - 1e-10) for v in vals)
        assert all(v.m == m for v in vals)
        assert [v.value for v in vals] == sorted(v.value for v in vals)


def test_sector_spectrum_empty_and_errors():
    assert e3.sector_spectrum(0, 1.0, (0.0, 5.0)) == []
    with pytest.raises(ValueError):
        e3.sector_spectrum(0, 1.0, (0.0, math.inf))


def test_sector_spectrum_decreases_toward_threshold():
    vals = [e3.sector_spectrum(1, h, (0.0, 40.0))[0].value for h in (0.2, 0.1, 0.05)]
    T = bessel_zeros(1, 1).zeros[0] ** 2
    assert vals[0] > vals[1] > vals[2] > T


def test_sector_2d_ball_modes():
    r0 = e3.sector_solve_2d(0, 1.0, 1)
    assert r0.eigenvalues[0] == pytest.approx(PI2, abs=5e-3)
    r1 = e3.sector_solve_2d(1, 1.0, 1)
    assert r1.eigenvalues[0] == pytest.approx(bessel_zeros(1.5, 1).zeros[0] ** 2, abs=2e-2)
    assert r1.eigenvalues[0] == pytest.approx(20.191, abs=2e-2)
    assert np.all(r0.residuals <= 1e-8)


def test_sector_2d_all_ell_at_h1():
    # sector m at h = 1 sees the ball modes with ell >= m
    ball = ball_spectrum(12)
    for m in (0, 1, 2):
        want = sorted(b.lam for b in ball if b.ell >= m)[:3]
        got = e3.sector_solve_2d(m, 1.0, 3).eigenvalues
        assert np.allclose(got, want, atol=2e-2)


def test_centrifugal_monotonicity():
    for h in (1.0, 0.5, 0.2):
        e1 = e3.sector_solve_2d(1, h, 1).eigenvalues[0]
        e2 = e3.sector_solve_2d(2, h, 1).eigenvalues[0]
        assert e2 > e1


def test_sector_assembly():
    s = e3.assemble_sector(1, 0.5, K=6)
    for A in (s.Qx, s.Qy, s.M):
        assert abs(A - A.T).max() <= 1e-14 * abs(A).max()
    assert abs(s.with_h(0.25).Q - (0.0625 * s.Qx + s.Qy)).max() <= 1e-14 * abs(s.Q).max()
    with pytest.raises(ValueError):
        e3.assemble_sector(-1, 0.5)
    with pytest.raises(ValueError):
        e3.assemble_sector(0, 0.0)


def test_ball_reconstruction_multiplicities():
    levels = e3.ball_reconstruction(3, 4)
    ball = ball_spectrum(len(levels))
    assert [mult for _, mult, _ in levels] == [b.multiplicity for b in ball]
    assert np.allclose([v for v, _, _ in levels], [b.lam for b in ball], atol=2e-2)


@pytest.mark.parametrize("m", range(6))
def test_sector_branch_limits(m):
    lim = e3.sector_branch_limit(m)
    assert lim.threshold == pytest.approx(bessel_zeros(m, 1).zeros[0] ** 2)
    assert lim.mismatch < 0.01


def test_sector_limits_pairwise_distinct():
    lims = [e3.sector_branch_limit(m).limit for m in range(4)]
    assert min(abs(a - b) for i, a in enumerate(lims) for b in lims[i + 1:]) > 1.0


def test_triaxial_disk_not_disjoint():
    t = e3.triaxial_thresholds(1.0)
    assert not t.disjoint()
    # odd ones are j_{k,n}^2 with k >= 1, all shared with the even list
    assert t.odd[0] == pytest.approx(bessel_zeros(1, 1).zeros[0] ** 2, abs=1e-3)
    assert t.even[0] == pytest.approx(bessel_zeros(0, 1).zeros[0] ** 2, abs=1e-3)


def test_triaxial_generic_disjoint():
    t = e3.triaxial_thresholds(0.73)
    assert t.disjoint() and t.min_gap > 1e-4


def test_triaxial_homothety():
    # {|y| < 2 L(x)} at h = 0.365 is the h = 0.73 ellipse scaled by 2
    a = e3.triaxial_thresholds(0.73, count=6)
    b = e3.triaxial_thresholds(0.365, count=6, profile=circle().scaled(2.0))
    assert np.allclose(4 * b.odd, a.odd, rtol=1e-4)
    assert np.allclose(4 * b.even, a.even, rtol=1e-4)
    assert 4 * b.min_gap == pytest.approx(a.min_gap, rel=1e-3)


def test_records():
    rec = list(e3.sector_solve_2d(0, 1.0, 2).records())
    assert rec[1]["index"] == 1 and set(rec[0]) == {"m", "h", "index", "eigenvalue", "residual"}
