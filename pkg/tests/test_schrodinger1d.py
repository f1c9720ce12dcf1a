import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipspec import schrodinger1d as s1
from ellipspec.profiles import bulged, circle


def spectrum(V, h, window, ppw=60):
    disc = s1.default_discretization(V, h, window[1], ppw)
    op = s1.assemble_ph(V, disc, h, window_top=window[1])
    return s1.window_spectrum(op, window), disc, op


def test_harmonic_ground_state_h1():
    sp, disc, _ = spectrum(s1.harmonic(), 1.0, (0.0, 2.0))
    assert sp.eigenvalues[0] == pytest.approx(1.0, abs=float(s1.harmonic_envelope(0, disc.dx, 1.0, disc.X)))


def test_harmonic_ground_state_small_h():
    sp, disc, _ = spectrum(s1.harmonic(), 0.1, (0.0, 0.5))
    assert sp.eigenvalues[0] == pytest.approx(0.1, abs=float(s1.harmonic_envelope(0, disc.dx, 0.1, disc.X)))
    assert sp.eigenvalues[0] == pytest.approx(0.1, rel=1e-3)


@pytest.mark.parametrize("h", [0.1, 0.01])
def test_harmonic_levels_inside_envelope(h):
    top = 42 * h
    sp, disc, _ = spectrum(s1.harmonic(), h, (0.0, top))
    n = np.arange(21)
    err = np.abs(sp.eigenvalues[:21] - (2 * n + 1) * h)
    assert np.all(err <= s1.harmonic_envelope(n, disc.dx, h, disc.X))


def test_constant_shift():
    V = s1.harmonic()
    disc = s1.LineDiscretization(6.0, 300)
    a = s1.assemble_ph(V, disc, 0.3)
    b = s1.assemble_ph(V.shifted(2.5), disc, 0.3)
    assert np.allclose(b.diag, a.diag + 2.5, rtol=0, atol=1e-13)
    assert np.array_equal(a.off, b.off)


def test_lower_bound_and_gram():
    for V, h in ((s1.harmonic(), 0.05), (s1.quartic(), 0.02)):
        sp, disc, _ = spectrum(V, h, (0.0, 1.5))
        assert sp.eigenvalues.min() >= V.V0 - 10 * disc.dx ** 2
        assert np.allclose(sp.gram(), np.eye(len(sp)), atol=1e-10)


def test_residuals():
    sp, _, op = spectrum(s1.quartic(), 0.02, (0.5, 1.5))
    r = np.linalg.norm(op.apply(sp.vectors) - sp.vectors * sp.eigenvalues, axis=0)
    assert np.all(r <= 1e-8 * np.linalg.norm(sp.vectors, axis=0))


def test_window_count_and_spacing():
    sp, _, _ = spectrum(s1.harmonic(), 0.01, (0.5, 1.5))
    # levels 0.01 (2n + 1) in [0.5, 1.5]: n = 25..74
    assert len(sp) == 50
    assert abs(len(sp) - sp.weyl_estimate) <= 2
    assert np.allclose(np.diff(sp.eigenvalues), 0.02, rtol=1e-3)


def test_window_below_well_is_empty():
    V = s1.harmonic().shifted(1.0)
    op = s1.assemble_ph(V, s1.LineDiscretization(5.0, 200), 0.1)
    sp = s1.window_spectrum(op, (0.0, 0.5))
    assert len(sp) == 0 and "below" in sp.diagnostic


def test_window_between_levels_is_empty():
    # levels 0.1 (2n + 1): 0.9 and 1.1 straddle [0.95, 1.05]
    sp, _, _ = spectrum(s1.harmonic(), 0.1, (0.95, 1.05))
    assert len(sp) == 0


def test_box_too_small():
    disc = s1.LineDiscretization(1.05, 200)  # turning points +-1 at E = 1
    with pytest.raises(s1.BoxTooSmallError):
        s1.assemble_ph(s1.harmonic(), disc, 0.1, window_top=1.0)


def test_harmonic_spacing_law():
    for h in (0.02, 0.01, 0.005):
        sp, _, _ = spectrum(s1.harmonic(), h, (0.5, 1.5))
        lo, hi = s1.spacing_law(sp)
        assert lo == pytest.approx(2.0, rel=1e-2) and hi == pytest.approx(2.0, rel=1e-2)


def test_quartic_spacing_matches_period_oracle():
    V = s1.quartic()
    ratios = []
    for h in (0.005, 0.0025):
        sp, _, _ = spectrum(V, h, (1.0, 2.0))
        lo, hi = s1.spacing_law(sp)
        ratios.append((lo, hi))
        # local gap ~ 2 pi h / T(E), T from an independent quadrature
        E = sp.eigenvalues
        mid = 0.5 * (E[1:] + E[:-1])
        # x = e^(1/4) sin(t) removes the turning-point singularity
        T = np.array([2 * e ** -0.25 * float(mpmath.quad(
            lambda t: 1 / mpmath.sqrt(1 + mpmath.sin(t) ** 2), [0, mpmath.pi / 2]))
            for e in mid[::10]])
        assert np.allclose(np.diff(E)[::10], 2 * math.pi * h / T, rtol=1e-2)
    assert ratios[0][0] == pytest.approx(ratios[1][0], rel=0.05)
    assert ratios[0][1] == pytest.approx(ratios[1][1], rel=0.05)


def test_single_eigenvalue_has_no_gaps():
    sp, _, _ = spectrum(s1.harmonic(), 0.1, (0.2, 0.4))
    assert len(sp) == 1
    with pytest.raises(s1.InsufficientModesError):
        s1.spacing_law(sp)


@pytest.mark.parametrize("E0,beta", [(1.0, 0.5), (2.0, 1.0)])
def test_liouville_beta_harmonic(E0, beta):
    assert s1.liouville_beta(s1.harmonic(), E0) == pytest.approx(beta, rel=1e-6)


def test_liouville_beta_quartic_against_quadrature():
    num = mpmath.quad(lambda x: mpmath.sqrt(1 - x ** 4), [-1, 0, 1])
    den = mpmath.quad(lambda x: 1 / mpmath.sqrt(1 - x ** 4), [-1, 0, 1])
    assert s1.liouville_beta(s1.quartic(), 1.0) == pytest.approx(float(num / den), rel=1e-8)


def test_turning_point_error():
    with pytest.raises(s1.TurningPointError):
        s1.liouville_beta(s1.harmonic(), 0.0)


def test_b_matrix_harmonic():
    V = s1.harmonic()
    h = 0.005
    sp, _, _ = spectrum(V, h, (0.5, 1.5))
    B = s1.b_matrix(sp, 1.0, 2)
    assert np.allclose(B.diagonal, 0.5, rtol=0.05)
    # exact oscillator algebra: <h psi_n', h psi_m'> = (n + 1/2) h on the diagonal and
    # (h/2) sqrt((n + 1)(n + 2)) for m = n + 2; those entries do not decay with h
    n = np.rint((B.eigenvalues / h - 1) / 2).astype(int)
    assert np.allclose(B.diagonal, (n + 0.5) * h, rtol=5e-3)
    assert np.allclose(B.diagonal, B.eigenvalues / 2, rtol=2e-3)  # virial
    top = n[-3]
    assert B.max_offdiag == pytest.approx(0.5 * h * math.sqrt((top + 1) * (top + 2)), rel=5e-3)
    assert np.abs(B.matrix[np.arange(4), np.arange(1, 5)]).max() < 1e-8  # neighbours decouple


def test_b_matrix_single_mode():
    sp, _, _ = spectrum(s1.harmonic(), 0.01, (0.5, 1.5))
    B = s1.b_matrix(sp, 1.0, 0)
    assert B.matrix.shape == (1, 1) and B.max_offdiag is None


def test_b_matrix_insufficient_modes():
    sp, _, _ = spectrum(s1.harmonic(), 0.1, (0.8, 1.2))
    with pytest.raises(s1.InsufficientModesError):
        s1.b_matrix(sp, 1.0, 3)


@pytest.mark.parametrize("V,E0,N", [(s1.harmonic(), 1.0, 2), (s1.quartic(), 1.5, 3)])
def test_b_matrix_offdiag_decreasing(V, E0, N):
    vals = []
    for h in (0.02, 0.01, 0.005):
        sp, _, _ = spectrum(V, h, (E0 - 0.5, E0 + 0.5))
        vals.append(s1.b_matrix(sp, E0, N).max_offdiag)
    assert vals[0] > vals[1] > vals[2]


def test_b_matrix_diagonal_tends_to_beta_quartic():
    V = s1.quartic()
    beta = s1.liouville_beta(V, 1.5)
    errs = []
    for h in (0.02, 0.01, 0.005):
        sp, _, _ = spectrum(V, h, (1.0, 2.0))
        errs.append(np.abs(s1.b_matrix(sp, 1.5, 3).diagonal - beta).max())
    assert errs[0] > errs[1] > errs[2]


def test_spectrum_export():
    sp, _, _ = spectrum(s1.harmonic(), 0.1, (0.0, 1.0))
    rows = s1.spectrum_rows(sp)
    assert [r[1] for r in rows] == list(range(len(sp)))
    rec = s1.spectrum_record(sp)
    assert "vectors" not in rec
    rec = s1.spectrum_record(sp, include_vectors=True)
    assert len(rec["vectors"]) == len(sp)


@settings(max_examples=15, deadline=None)
@given(delta=st.floats(0.05, 0.9), a=st.floats(0.0, 0.5))
def test_profile_well_is_single_well(delta, a):
    prof = circle() if a == 0 else bulged(a)
    V = s1.profile_well(prof, delta)
    V.validate(4.0)
    x = np.linspace(-1 + delta / 2, 1 - delta / 2, 101)
    assert np.allclose(V(x), 1 / prof.L(x) ** 2)
    # C^1 at the junction
    x0 = 1 - delta / 2
    assert V(np.array([x0 + 1e-7]))[0] == pytest.approx(V(np.array([x0]))[0], rel=1e-5)


def test_discretization_minimum_size():
    with pytest.raises(ValueError):
        s1.LineDiscretization(5.0, 10)
