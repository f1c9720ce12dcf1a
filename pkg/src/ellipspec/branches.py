"""Eigenvalue branches of q_h along an h-grid.

The matrices Qx, Qy, M of a parity class do not depend on h, so one assembly
serves the whole sweep.  Consecutive solves are matched by M-overlap of the
eigenvectors (Hungarian assignment), which keeps labels straight through
near crossings where eigenvalue ordering would swap them.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from . import eigen
from .fem import Mesh, graded_mesh
from .oval2d import GalerkinSystem, double_oval
from .profiles import ProfileFunction

MIN_OVERLAP = 0.8
FH_RTOL = 0.02
FH_ATOL = 1e-6
MATCH_RTOL = 0.05


class BranchTrackingError(RuntimeError):
    """Eigenvector overlap too small to continue a branch; refine the grid."""

    def __init__(self, msg, interval=None):
        super().__init__(msg)
        self.interval = interval


def workers_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("ELLIPSPEC_WORKERS", default)))
    except ValueError:
        return default


def class_thresholds(system: GalerkinSystem, top: float | None = None) -> np.ndarray:
    """Candidate h -> 0 limits for a parity class: (omega_k / L(0))^2."""
    t = system.basis.thresholds(system.profile.L0)
    return t if top is None else t[t <= top]


@dataclass
class LimitEstimate:
    limit: float
    alpha: float
    c: float
    threshold: float | None  # matched parity-correct threshold, None if no match
    mismatch: float          # relative (absolute for a zero threshold)
    cross_parity: bool       # nearest threshold of any class belongs to the other parity
    alpha_clamped: bool

    @property
    def matched(self) -> bool:
        return self.threshold is not None


@dataclass
class Branch:
    branch_id: int
    parity: str
    boundary: str
    hs: np.ndarray
    values: np.ndarray
    vectors: list
    fh: np.ndarray
    overlaps: np.ndarray
    flags: list = field(default_factory=list)
    limit: LimitEstimate | None = None

    @property
    def fd(self) -> np.ndarray:
        """Three-point centered differences at interior grid points, nan at the ends."""
        return centered_differences(self.hs, self.values)

    def fh_consistent(self, rtol: float = FH_RTOL, atol: float = FH_ATOL) -> np.ndarray:
        fd = self.fd[1:-1]
        f = self.fh[1:-1]
        return np.abs(f - fd) <= rtol * np.abs(f) + atol

    def is_monotone(self, slack: float = 1e-8) -> bool:
        # hs decrease, so values must not increase along the arrays
        return bool(np.all(np.diff(self.values) <= slack * np.maximum(1.0, np.abs(self.values[1:]))))

    def rows(self):
        fd = self.fd
        for i, h in enumerate(self.hs):
            yield (float(h), self.parity, self.branch_id, float(self.values[i]), float(self.fh[i]),
                   None if math.isnan(fd[i]) else float(fd[i]))


def centered_differences(hs, values) -> np.ndarray:
    """Second-order derivative estimate on a nonuniform grid (interior points)."""
    x = np.asarray(hs, float)
    y = np.asarray(values, float)
    out = np.full(x.size, np.nan)
    for i in range(1, x.size - 1):
        a = x[i] - x[i - 1]
        b = x[i + 1] - x[i]
        out[i] = (-(b / (a * (a + b))) * y[i - 1] + ((b - a) / (a * b)) * y[i]
                  + (a / (b * (a + b))) * y[i + 1])
    return out


def fh_formula(system: GalerkinSystem, h: float, u) -> float:
    """dE/dh = 2h ||d_x u||^2 / ||u||^2 from the eigenvector's discrete x-energy."""
    u = np.asarray(u)
    return float(2.0 * h * (u @ (system.Qx @ u)) / (u @ (system.M @ u)))


def fh_derivative(branch: Branch, index: int):
    """(formula, centered difference or None) at grid point ``index``."""
    fd = branch.fd[index]
    return float(branch.fh[index]), (None if math.isnan(fd) else float(fd))


def _check_grid(hs):
    hs = np.asarray(hs, float)
    if hs.ndim != 1 or hs.size < 2:
        raise ValueError("h-grid needs at least two points")
    if np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise ValueError("h-grid must be positive and strictly decreasing")
    if np.any(hs[1:] / hs[:-1] < 0.7):
        raise ValueError("neighbouring grid points must have ratio >= 0.7")
    return hs


def _solve(system: GalerkinSystem, h: float, n: int):
    s = system.with_h(h)
    w, v, _ = eigen.smallest(s.Q, s.M, n)
    return w, v


def _overlap_matrix(M, prev, w, V, group_rtol=1e-7):
    """|<u_prev, v>_M|, with near-degenerate groups of v replaced by the group projection."""
    O = np.abs(prev.T @ (M @ V))
    start = 0
    while start < w.size:
        stop = start + 1
        while stop < w.size and abs(w[stop] - w[start]) <= group_rtol * max(1.0, abs(w[start])):
            stop += 1
        if stop - start > 1:
            proj = np.sqrt(np.sum(O[:, start:stop] ** 2, axis=1))
            O[:, start:stop] = proj[:, None]
        start = stop
    return O


def _match(M, prev, w, V):
    O = _overlap_matrix(M, prev, w, V)
    rows, cols = linear_sum_assignment(-O)
    order = np.empty(prev.shape[1], dtype=int)
    order[rows] = cols
    return order, O[rows, cols][np.argsort(rows)]


def _track_class(system: GalerkinSystem, parity: str, hs, count: int, extra: int,
                 max_refine: int, workers: int):
    n = count + extra
    hs = list(hs)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            sols = list(ex.map(lambda h: _solve(system, h, n), hs))
    else:
        sols = [_solve(system, h, n) for h in hs]
    M = system.M
    grid = [hs[0]]
    w0, V0 = sols[0]
    vals = [w0[:count]]
    vecs = [V0[:, :count]]
    ovl = []
    flags = []

    def advance(h_a, prev, h_b, sol_b, depth):
        w, V = sol_b
        order, o = _match(M, prev, w, V)
        if o.min() >= MIN_OVERLAP:
            return [(h_b, w[order], V[:, order], o)]
        if depth >= max_refine:
            raise BranchTrackingError(
                f"eigenvector overlap {o.min():.3f} < {MIN_OVERLAP} on h in [{h_b:.6g}, {h_a:.6g}]; "
                f"refine the grid there", (h_b, h_a))
        h_m = 0.5 * (h_a + h_b)
        first = advance(h_a, prev, h_m, _solve(system, h_m, n), depth + 1)
        return first + advance(h_m, first[-1][2], h_b, sol_b, depth + 1)

    for i in range(1, len(hs)):
        steps = advance(grid[-1], vecs[-1], hs[i], sols[i], 0)
        if len(steps) > 1:
            flags.append(f"refined ({hs[i]:.6g}, {hs[i - 1]:.6g}) with {len(steps) - 1} extra points")
        for h_b, w_b, V_b, o in steps:
            # continuity of sign along the branch
            sg = np.sign(np.einsum("ij,ij->j", vecs[-1], M @ V_b))
            sg[sg == 0] = 1.0
            grid.append(h_b)
            vals.append(w_b)
            vecs.append(V_b * sg)
            ovl.append(o)
    grid = np.array(grid)
    vals = np.array(vals)
    ovl = np.array(ovl) if ovl else np.empty((0, count))
    out = []
    for j in range(count):
        u = [V[:, j] for V in vecs]
        fh = np.array([fh_formula(system, h, uj) for h, uj in zip(grid, u)])
        b = Branch(j, parity, system.boundary.value, grid, vals[:, j], u, fh, ovl[:, j], list(flags))
        if not b.is_monotone():
            b.flags.append("not monotone in h")
        out.append(b)
    return out


def _fh_refined_grid(branches, hs):
    """Grid with midpoints added around interior points failing the FH check."""
    bad = set()
    for b in branches:
        for i in np.flatnonzero(~b.fh_consistent()) + 1:
            bad.update((0.5 * (b.hs[i - 1] + b.hs[i]), 0.5 * (b.hs[i] + b.hs[i + 1])))
    if not bad:
        return None
    return np.array(sorted(set(np.round(np.concatenate([hs, list(bad)]), 14)), reverse=True))


def track(profile: ProfileFunction, boundary: str, hs, count: int = 6, K: int = 16,
          mesh: Mesh | None = None, parities=("odd", "even"), extra: int = 4,
          max_refine: int = 3, fh_refine: int = 2, workers: int | None = None,
          systems: dict | None = None) -> list:
    """Track the lowest ``count`` branches of each parity of the double oval.

    ``boundary`` is the outer condition ('dirichlet' or 'neumann').  Grid
    points are inserted (up to ``max_refine`` bisections per interval) where
    consecutive overlaps fall below 0.8; beyond that BranchTrackingError
    names the interval.  Near avoided crossings E(h) bends sharply and the
    centered difference lags behind the exact derivative; up to ``fh_refine``
    passes add midpoints around grid points where the two disagree.
    """
    hs = _check_grid(hs)
    if count < 1:
        raise ValueError("count must be >= 1")
    workers = workers_from_env() if workers is None else workers
    systems = systems or double_oval(profile, boundary, float(hs[0]), K, mesh or graded_mesh(400))
    out = []
    for par in parities:
        grid = hs
        cls = _track_class(systems[par], par, grid, count, extra, max_refine, workers)
        for _ in range(fh_refine):
            finer = _fh_refined_grid(cls, cls[0].hs)
            if finer is None:
                break
            cls = _track_class(systems[par], par, finer, count, extra, max_refine, workers)
            for b in cls:
                b.flags.append("grid refined for derivative check")
        out.extend(cls)
    for b in out:
        b.limit = limit_extrapolate(b, systems)
    return out


def _fit_power(h, E, lo=0.5, hi=2.0):
    """E = E0 + c h^alpha through three points, alpha in [lo, hi]."""
    h = np.asarray(h, float)
    E = np.asarray(E, float)

    def resid(alpha):
        A = np.stack([np.ones(3), h ** alpha], axis=1)
        coef, *_ = np.linalg.lstsq(A, E, rcond=None)
        return coef, A @ coef - E

    def g(alpha):
        return (E[0] - E[1]) * (h[1] ** alpha - h[2] ** alpha) - (E[1] - E[2]) * (h[0] ** alpha - h[1] ** alpha)

    clamped = False
    ga, gb = g(lo), g(hi)
    if ga * gb < 0:
        alpha = brentq(g, lo, hi, xtol=1e-12)
    else:
        clamped = True
        alpha = lo if np.sum(resid(lo)[1] ** 2) <= np.sum(resid(hi)[1] ** 2) else hi
    coef, _ = resid(alpha)
    return float(coef[0]), float(coef[1]), float(alpha), clamped


def _nearest(value, thresholds):
    t = np.asarray(thresholds, float)
    i = int(np.argmin(np.abs(t - value)))
    T = float(t[i])
    mism = abs(value - T) / T if T != 0 else abs(value)
    return T, mism


def limit_extrapolate(branch: Branch, systems: dict | None = None, thresholds=None,
                      other_thresholds=None, rtol: float = MATCH_RTOL) -> LimitEstimate:
    """Fit E0 + c h^alpha on the three smallest h and match E0 to a threshold.

    ``thresholds`` are the branch's own class thresholds; ``other_thresholds``
    those of the opposite parity (for the cross-parity check).  Both can be
    taken from ``systems`` (the double-oval parity dict).  A zero threshold is
    matched in absolute terms (|E0| <= 1e-3).
    """
    if branch.hs.size < 3:
        raise ValueError("need at least three grid points to extrapolate")
    idx = np.argsort(branch.hs)[:3]
    E0, c, alpha, clamped = _fit_power(branch.hs[idx], branch.values[idx])
    if thresholds is None:
        if systems is None:
            raise ValueError("pass thresholds or the parity systems")
        thresholds = class_thresholds(systems[branch.parity])
        other = "even" if branch.parity == "odd" else "odd"
        other_thresholds = class_thresholds(systems[other]) if other in systems else None
    T, mism = _nearest(E0, thresholds)
    ok = mism <= (1e-3 if T == 0 else rtol)
    cross = False
    if other_thresholds is not None and len(other_thresholds):
        To, mo = _nearest(E0, other_thresholds)
        cross = mo < mism and mo <= (1e-3 if To == 0 else rtol)
    return LimitEstimate(E0, alpha, c, T if ok else None, mism, cross, clamped)


# --- simplicity scan ---------------------------------------------------------------

@dataclass
class ScanPoint:
    h: float
    eigenvalues: np.ndarray
    parities: list
    gaps: np.ndarray
    flagged: list  # (i, i+1, gap, parity pair)

    @property
    def min_gap(self):
        return float(self.gaps.min()) if self.gaps.size else math.inf


def merged_spectrum(systems: dict, h: float, count: int):
    vals, pars = [], []
    for par, s in systems.items():
        w, _ = _solve(s, h, count)
        vals.extend(w.tolist())
        pars.extend([par] * w.size)
    order = np.argsort(vals, kind="stable")
    return np.array(vals)[order][:count], [pars[i] for i in order][:count]


def simplicity_scan(profile: ProfileFunction, boundary: str, hs, count: int = 8, tol: float = 1e-4,
                    K: int = 16, mesh: Mesh | None = None, systems: dict | None = None,
                    certify: bool = True, certify_halfwidth: float = 0.01) -> list:
    """Smallest gaps among the first ``count`` eigenvalues (parities merged) at each h.

    Gaps <= tol are flagged.  A flagged odd/even pair is certified as a true
    crossing when the gap of the two parity branches changes sign across
    [h - halfwidth, h + halfwidth]; equal-parity near-degeneracies are
    reported only.
    """
    systems = systems or double_oval(profile, boundary, 1.0, K, mesh or graded_mesh(400))
    out = []
    for h in np.atleast_1d(np.asarray(hs, float)):
        w, p = merged_spectrum(systems, float(h), count)
        gaps = np.diff(w)
        flagged = []
        for i in np.flatnonzero(gaps <= tol):
            pair = (p[i], p[i + 1])
            entry = {"i": int(i), "j": int(i + 1), "gap": float(gaps[i]), "parities": pair,
                     "certificate": None}
            if certify and pair[0] != pair[1]:
                entry["certificate"] = _certify_pair(systems, float(h), w[i], p[i], p[i + 1],
                                                     float(certify_halfwidth), count)
            flagged.append(entry)
        out.append(ScanPoint(float(h), w, p, gaps, flagged))
    return out


def _class_index(systems, par, h, value, count):
    w, _ = _solve(systems[par], h, count)
    return int(np.argmin(np.abs(w - value)))


def _certify_pair(systems, h, value, pa, pb, halfwidth, count):
    odd_par = "odd" if "odd" in (pa, pb) else pa
    even_par = "even" if "even" in (pa, pb) else pb
    i_odd = _class_index(systems, odd_par, h, value, count)
    i_even = _class_index(systems, even_par, h, value, count)
    res = find_crossing(None, None, (h - halfwidth, h + halfwidth), odd_index=i_odd,
                        even_index=i_even, systems=systems)
    return res if res.found else None


# --- crossings ---------------------------------------------------------------------

@dataclass
class CrossingCertificate:
    found: bool
    h_lo: float
    h_hi: float
    odd_index: int
    even_index: int
    gap_lo: float   # E_odd - E_even at h_lo
    gap_hi: float
    parities: tuple = ("odd", "even")
    mesh_cells: int = 0
    K: int = 0
    evaluations: int = 0

    @property
    def h_star(self) -> float:
        return 0.5 * (self.h_lo + self.h_hi)

    @property
    def width(self) -> float:
        return self.h_hi - self.h_lo

    def to_json(self) -> str:
        return json.dumps({
            "found": self.found, "h_star": self.h_star, "bracket": [self.h_lo, self.h_hi],
            "gap_signs": [float(np.sign(self.gap_lo)), float(np.sign(self.gap_hi))],
            "gaps": [self.gap_lo, self.gap_hi], "branches": {"odd": self.odd_index, "even": self.even_index},
            "parities": list(self.parities), "mesh": {"cells": self.mesh_cells, "K": self.K},
            "evaluations": self.evaluations}, indent=2)


def _gap(systems, h, i_odd, i_even):
    wo, _ = _solve(systems["odd"], h, i_odd + 1)
    we, _ = _solve(systems["even"], h, i_even + 1)
    return float(wo[i_odd] - we[i_even])


def find_crossing(profile: ProfileFunction | None, boundary: str | None, window, odd_index: int = 0,
                  even_index: int | None = None, K: int = 16, mesh: Mesh | None = None,
                  systems: dict | None = None, tol: float = 1e-3, max_even: int = 30,
                  parities=("odd", "even")) -> CrossingCertificate:
    """Bracket h* where the odd branch ``odd_index`` meets the even eigenvalue ``even_index``.

    With ``even_index`` None, the smallest N <= max_even with E_even,N above
    E_odd at the top of the window is used (it tends to the lower even
    limit as h -> 0, so the gap changes sign).  Bisection stops at bracket
    width ``tol``.  Without a sign change the result has found=False.
    """
    if parities[0] == parities[1]:
        raise ValueError("crossing certificates need one odd and one even branch")
    lo, hi = float(min(window)), float(max(window))
    if lo <= 0:
        raise ValueError("window must lie in h > 0")
    systems = systems or double_oval(profile, boundary, hi, K, mesh or graded_mesh(400))
    evals = 0
    if even_index is None:
        wo, _ = _solve(systems["odd"], hi, odd_index + 1)
        we, _ = _solve(systems["even"], hi, max_even)
        evals += 2
        above = np.flatnonzero(we > wo[odd_index])
        if above.size == 0:
            raise ValueError(f"no even eigenvalue among the first {max_even} lies above the odd branch")
        even_index = int(above[0])
    g_lo = _gap(systems, lo, odd_index, even_index)
    g_hi = _gap(systems, hi, odd_index, even_index)
    evals += 2
    meta = dict(mesh_cells=systems["odd"].mesh.n_cells, K=systems["odd"].basis.K)
    if g_lo * g_hi > 0:
        return CrossingCertificate(False, lo, hi, odd_index, even_index, g_lo, g_hi,
                                   evaluations=evals, **meta)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g = _gap(systems, mid, odd_index, even_index)
        evals += 1
        if g == 0.0:
            lo = hi = mid
            g_lo = g_hi = 0.0
            break
        if g * g_lo < 0:
            hi, g_hi = mid, g
        else:
            lo, g_lo = mid, g
    return CrossingCertificate(True, lo, hi, odd_index, even_index, g_lo, g_hi, evaluations=evals, **meta)


def replay_certificate(cert: CrossingCertificate, systems: dict):
    """Re-solve at the bracket ends; True when the gap signs are reproduced."""
    a = _gap(systems, cert.h_lo, cert.odd_index, cert.even_index)
    b = _gap(systems, cert.h_hi, cert.odd_index, cert.even_index)
    return bool(np.sign(a) == np.sign(cert.gap_lo) and np.sign(b) == np.sign(cert.gap_hi))


# --- output -----------------------------------------------------------------------

BRANCH_COLUMNS = ("h", "parity", "branch_id", "E", "dE/dh_formula", "dE/dh_fd")


def branches_csv(branches, digits: int = 12) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(BRANCH_COLUMNS)
    for b in branches:
        for h, par, bid, E, f, d in b.rows():
            wr.writerow([f"{h:.{digits}g}", par, bid, f"{E:.{digits}g}", f"{f:.{digits}g}",
                         "" if d is None else f"{d:.{digits}g}"])
    return buf.getvalue()
