"""Eigenvalues of q_h(u) = h^2 |d_x u|^2 + |d_y u|^2 on a half-oval {0 < y < L(x)}.

Transversal-mode Galerkin: u = sum_k u_k(x) s_k(y / L(x)) with s_k a sine or
cosine family adapted to the boundary condition, and u_k piecewise linear on
a graded x-mesh.  With theta = y / L,

    d_x u = sum_k u_k' s_k - (L'/L) theta u_k s_k'(theta),

so every y-integral reduces to the closed-form couplings

    C_kl = int_0^1 s_k theta s_l',     G_kl = int_0^1 theta^2 s_k' s_l'.

The stiffness splits as Q = h^2 Qx + Qy, and the mass M does not depend on h;
Feynman-Hellmann is then exact at the discrete level: dE/dh = 2h u.Qx u.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigs

from . import eigen
from .fem import Mesh, P1Space, graded_mesh
from .profiles import ProfileFunction


class BoundarySpec(enum.Enum):
    FULL_DIRICHLET = "dirichlet"
    DIRICHLET_CURVED = "dirichlet-curved"
    DIRICHLET_STRAIGHT = "dirichlet-straight"
    FULL_NEUMANN = "neumann"

    @classmethod
    def parse(cls, s):
        if isinstance(s, cls):
            return s
        key = str(s).lower().replace("_", "-")
        aliases = {"fulldirichlet": "dirichlet", "full-dirichlet": "dirichlet",
                   "dirichletcurved": "dirichlet-curved", "dirichletstraight": "dirichlet-straight",
                   "fullneumann": "neumann", "full-neumann": "neumann"}
        key = aliases.get(key.replace(" ", ""), key)
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown boundary condition {s!r}; use one of {[m.value for m in cls]}")


# A transversal function is a tuple of terms (kind, parameter, coefficient):
# ("cos", a, c) = c cos(a theta), ("sin", a, c) = c sin(a theta), ("pow", n, c) = c theta^n.


def _d(terms):
    out = []
    for kind, a, c in terms:
        if kind == "cos":
            out.append(("sin", a, -a * c))
        elif kind == "sin":
            out.append(("cos", a, a * c))
        elif a > 0:
            out.append(("pow", a - 1, a * c))
    return tuple(t for t in out if t[2] != 0.0)


def _eval(terms, theta):
    theta = np.asarray(theta, float)
    out = np.zeros_like(theta)
    for kind, a, c in terms:
        if kind == "cos":
            out = out + c * np.cos(a * theta)
        elif kind == "sin":
            out = out + c * np.sin(a * theta)
        else:
            out = out + c * theta ** a
    return out


@dataclass(frozen=True)
class TransversalBasis:
    """Functions s_k on [0, 1]; e_k(x, y) = s_k(y / L(x)).

    The trigonometric modes are orthonormal, so int_0^L e_k e_l dy = L delta_kl:
    Dirichlet sqrt2 sin(k pi theta), curved-Dirichlet sqrt2 cos((k - 1/2) pi theta),
    straight-Dirichlet sqrt2 sin((k - 1/2) pi theta), Neumann {1, sqrt2 cos(k pi theta)}.

    On the straight side theta = 0 the trigonometric family has the parity of
    the eigenfunctions (reflection across y = 0).  On the curved side it does
    not: with a Neumann condition every mode has s_k'(1) = 0, while only the
    normal derivative of u vanishes, and the series converges like 1/K; with a
    Dirichlet condition s_k''(1) = 0 while d_theta^2 u(1) does not vanish, and
    the energy error decays like K^-3.  ``lifting`` appends one polynomial with
    the right parity at 0 and the missing derivative at 1 (theta^2/2, theta^3/3,
    theta^3 - theta, theta^2 - 1), which absorbs the mismatch.
    """

    boundary: BoundarySpec
    K: int
    lifting: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("need at least one transversal mode")

    @property
    def trig_indices(self) -> list[int]:
        if self.boundary is BoundarySpec.FULL_NEUMANN:
            return list(range(0, self.K + 1))
        return list(range(1, self.K + 1))

    @property
    def has_lifting(self) -> bool:
        return self.lifting

    @property
    def labels(self) -> list:
        """Mode labels: integer k for trigonometric modes, 'lift' for the lifting."""
        return self.trig_indices + (["lift"] if self.has_lifting else [])

    @property
    def indices(self) -> list[int]:
        return self.trig_indices

    def frequency(self, k: int) -> float:
        if self.boundary in (BoundarySpec.FULL_DIRICHLET, BoundarySpec.FULL_NEUMANN):
            return k * math.pi
        return (k - 0.5) * math.pi

    @property
    def frequencies(self) -> np.ndarray:
        """Frequencies of the trigonometric modes (thresholds are their squares)."""
        return np.array([self.frequency(k) for k in self.trig_indices])

    def terms(self, label):
        if label == "lift":
            return _LIFTS[self.boundary]
        a = self.frequency(label)
        if self.boundary is BoundarySpec.FULL_NEUMANN:
            return (("cos", a, 1.0 if label == 0 else math.sqrt(2.0)),)
        if self.boundary is BoundarySpec.DIRICHLET_CURVED:
            return (("cos", a, math.sqrt(2.0)),)
        return (("sin", a, math.sqrt(2.0)),)

    def evaluate(self, label, theta):
        return _eval(self.terms(label), theta)

    def evaluate_derivative(self, label, theta):
        return _eval(_d(self.terms(label)), theta)

    def is_constant(self, label) -> bool:
        return not _d(self.terms(label))

    def thresholds(self, L0: float = 1.0) -> np.ndarray:
        return (self.frequencies / L0) ** 2

    def _table(self, fa, fb, p):
        labs = self.labels
        out = np.zeros((len(labs), len(labs)))
        for i, k in enumerate(labs):
            for j, l in enumerate(labs):
                out[i, j] = moment(fa(k), fb(l), p)
        return out

    def gram(self):
        """int_0^1 s_k s_l."""
        return self._table(self.terms, self.terms, 0)

    def dy_gram(self):
        """int_0^1 s_k' s_l'."""
        return self._table(lambda k: _d(self.terms(k)), lambda k: _d(self.terms(k)), 0)

    def couplings(self):
        """(C, G): C_kl = int s_k theta s_l', G_kl = int theta^2 s_k' s_l', closed form."""
        d = lambda k: _d(self.terms(k))
        return self._table(self.terms, d, 1), self._table(d, d, 2)


_LIFTS = {
    BoundarySpec.FULL_NEUMANN: (("pow", 2, 0.5),),
    BoundarySpec.DIRICHLET_STRAIGHT: (("pow", 3, 1.0 / 3.0),),
    BoundarySpec.FULL_DIRICHLET: (("pow", 3, 1.0), ("pow", 1, -1.0)),
    BoundarySpec.DIRICHLET_CURVED: (("pow", 2, 1.0), ("pow", 0, -1.0)),
}


def _trig_moment(kind, a, p):
    """int_0^1 theta^p cos|sin(a theta) d theta by the integration-by-parts recursion."""
    if a == 0.0:
        return 1.0 / (p + 1) if kind == "cos" else 0.0
    s, c = math.sin(a), math.cos(a)
    ic, is_ = s / a, (1.0 - c) / a
    for n in range(1, p + 1):
        ic, is_ = s / a - n / a * is_, -c / a + n / a * ic
    return ic if kind == "cos" else is_


def _term_product(t1, t2, p):
    k1, a, c1 = t1
    k2, b, c2 = t2
    amp = c1 * c2
    if k1 == "pow" and k2 == "pow":
        return amp / (a + b + p + 1)
    if k1 == "pow":
        return amp * _trig_moment(k2, b, p + a)
    if k2 == "pow":
        return amp * _trig_moment(k1, a, p + b)
    if k1 == "cos" and k2 == "cos":
        parts = [("cos", a - b, 0.5), ("cos", a + b, 0.5)]
    elif k1 == "sin" and k2 == "sin":
        parts = [("cos", a - b, 0.5), ("cos", a + b, -0.5)]
    elif k1 == "sin":  # sin a cos b
        parts = [("sin", a + b, 0.5), ("sin", a - b, 0.5)]
    else:  # cos a sin b
        parts = [("sin", a + b, 0.5), ("sin", a - b, -0.5)]
    out = 0.0
    for kind, f, sg in parts:
        if kind == "sin" and f < 0:
            f, sg = -f, -sg
        out += sg * _trig_moment(kind, abs(f), p)
    return amp * out


def moment(f, g, p: int) -> float:
    """int_0^1 theta^p f(theta) g(theta) d theta for term tuples f, g."""
    return float(sum(_term_product(t1, t2, p) for t1 in f for t2 in g))


@dataclass
class GalerkinSystem:
    """Sparse generalized problem (h^2 Qx + Qy) u = E M u.

    Unknowns are mode-major: for each transversal function, the nodal values
    of u_k on ``active[i]`` (interior nodes when s_k' != 0, all nodes for the
    constant Neumann mode).
    """

    profile: ProfileFunction
    boundary: BoundarySpec
    h: float
    basis: TransversalBasis
    mesh: Mesh
    Qx: sparse.csr_matrix
    Qy: sparse.csr_matrix
    M: sparse.csr_matrix
    active: list
    offsets: np.ndarray
    parity: str | None = None

    @property
    def Q(self):
        return (self.h * self.h * self.Qx + self.Qy).tocsr()

    @property
    def size(self):
        return self.M.shape[0]

    @property
    def n_modes(self):
        return len(self.active)

    def with_h(self, h: float) -> "GalerkinSystem":
        """Same discretisation at another h (only the weighting of Qx changes)."""
        return GalerkinSystem(self.profile, self.boundary, h, self.basis, self.mesh, self.Qx,
                              self.Qy, self.M, self.active, self.offsets, self.parity)

    def mode_field(self, vec, i: int) -> np.ndarray:
        """Nodal values of u_k (k = basis.labels[i]) with zeros at removed nodes."""
        out = np.zeros(self.mesh.nodes.size)
        out[self.active[i]] = vec[self.offsets[i]:self.offsets[i + 1]]
        return out

    def threshold_top(self) -> float:
        return float(self.basis.thresholds(self.profile.L0)[-1])


def assemble_qh(profile: ProfileFunction, boundary, h: float, K: int = 16,
                mesh: Mesh | None = None, lifting: bool = True) -> GalerkinSystem:
    """Assemble the mode-Galerkin matrices of q_h for one boundary regime."""
    profile.validate()
    boundary = BoundarySpec.parse(boundary)
    if h <= 0:
        raise ValueError("h must be positive")
    if K < 2 and boundary is not BoundarySpec.FULL_NEUMANN:
        raise ValueError("need K >= 2 transversal modes")
    mesh = mesh or graded_mesh(400)
    mesh.check_endpoint_resolution()
    basis = TransversalBasis(boundary, K, lifting)
    labels = basis.labels
    C, G = basis.couplings()
    Gm = basis.gram()
    Dy = basis.dy_gram()
    V = P1Space(mesh)
    L = V.weight(profile.L)
    dL = V.weight(profile.dL)
    S_L = V.stiffness(L)
    M_L = V.mass(L)
    M_inv = V.mass(1.0 / L)
    D = V.mixed(dL)  # int L' phi_i' phi_j
    DT = D.T.tocsr()
    M_g = V.mass(dL * dL / L)
    n = mesh.nodes.size
    interior = np.arange(1, n - 1)
    everything = np.arange(n)
    active = [everything if basis.is_constant(k) else interior for k in labels]
    sizes = np.array([a.size for a in active])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    nm = len(labels)
    tol = 1e-15

    def sub(A, i, j):
        return A[active[i]][:, active[j]]

    qx = [[None] * nm for _ in range(nm)]
    qy = [[None] * nm for _ in range(nm)]
    mm = [[None] * nm for _ in range(nm)]
    for i in range(nm):
        for j in range(nm):
            blk = sparse.csr_matrix((sizes[i], sizes[j]))
            if abs(Gm[i, j]) > tol:
                blk = blk + Gm[i, j] * sub(S_L, i, j)
                mm[i][j] = Gm[i, j] * sub(M_L, i, j)
            if abs(C[i, j]) > tol:
                blk = blk - C[i, j] * sub(D, i, j)
            if abs(C[j, i]) > tol:
                blk = blk - C[j, i] * sub(DT, i, j)
            if abs(G[i, j]) > tol:
                blk = blk + G[i, j] * sub(M_g, i, j)
            qx[i][j] = blk
            if abs(Dy[i, j]) > tol:
                qy[i][j] = Dy[i, j] * sub(M_inv, i, j)
        if qy[i][i] is None:
            qy[i][i] = sparse.csr_matrix((sizes[i], sizes[i]))
        if mm[i][i] is None:
            raise AssertionError("transversal Gram matrix has a zero diagonal")
    Qx = sparse.bmat(qx, format="csr")
    Qx = (0.5 * (Qx + Qx.T)).tocsr()
    Qy = sparse.bmat(qy, format="csr")
    Qy = (0.5 * (Qy + Qy.T)).tocsr()
    M = sparse.bmat(mm, format="csr")
    M = (0.5 * (M + M.T)).tocsr()
    return GalerkinSystem(profile, boundary, h, basis, mesh, Qx, Qy, M, active, offsets)


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    vectors: list  # one M-normalised coefficient vector per eigenvalue
    residuals: np.ndarray
    h: float
    boundary: str
    parity: list
    systems: dict = field(repr=False, default_factory=dict)
    labels: list = field(default_factory=list)  # index into systems for each column

    def __len__(self):
        return self.eigenvalues.size

    def system_of(self, i: int) -> GalerkinSystem:
        return self.systems[self.labels[i]]

    def vector(self, i: int) -> np.ndarray:
        return self.vectors[i]

    def mode_fields(self, i: int) -> np.ndarray:
        """(n_modes, n_nodes) nodal coefficient fields u_k(x) of eigenvector i."""
        s = self.system_of(i)
        v = self.vector(i)
        return np.stack([s.mode_field(v, j) for j in range(s.n_modes)])

    def kinetic_x(self, i: int) -> float:
        """||d_x u||^2 for the M-normalised eigenvector i."""
        s = self.system_of(i)
        v = self.vector(i)
        return float(v @ (s.Qx @ v))

    def records(self):
        for i, e in enumerate(self.eigenvalues):
            yield dict(h=self.h, boundary=self.boundary, parity=self.parity[i], index=i,
                       eigenvalue=float(e), residual=float(self.residuals[i]))


def _sign_fix(system, v):
    # deterministic signs: the first mode field integrates positive
    s = np.sign(system.mode_field(v, 0).sum())
    return v * (s if s != 0 else 1.0)


def _solve_one(system: GalerkinSystem, count=None, window=None):
    if window is not None:
        a, b = window
        if b > system.threshold_top():
            warnings.warn(f"window top {b} exceeds the last transversal threshold "
                          f"{system.threshold_top():.4g}: window not mode-complete", stacklevel=3)
        w, v, r = eigen.window(system.Q, system.M, a, b)
    else:
        w, v, r = eigen.smallest(system.Q, system.M, count)
        if w.size and w[-1] > system.threshold_top():
            warnings.warn(f"requested eigenvalues reach {w[-1]:.4g}, above the last transversal "
                          f"threshold {system.threshold_top():.4g}", stacklevel=3)
    for j in range(v.shape[1]):
        v[:, j] = _sign_fix(system, v[:, j])
    return w, v, r


def solve_smallest(system, count: int | None = None, window=None) -> SpectralResult:
    """Lowest eigenpairs (or all in a window) of one system or of a parity pair.

    ``system`` may be a GalerkinSystem or a dict {parity: GalerkinSystem}
    from :func:`double_oval`; pairs are solved per block (the blocks decouple
    exactly) and merged by (eigenvalue, parity).
    """
    if (count is None) == (window is None):
        raise ValueError("give exactly one of count or window")
    if count is not None and count < 1:
        raise ValueError("count must be >= 1")
    systems = system if isinstance(system, dict) else {system.parity or "none": system}
    items = []
    for tag, s in systems.items():
        w, v, r = _solve_one(s, count, window)
        for j in range(w.size):
            items.append((float(w[j]), tag, v[:, j], float(r[j])))
    if window is not None and not items:
        raise ValueError(f"no eigenvalues in window {window}")
    items.sort(key=lambda t: (t[0], t[1]))
    if count is not None:
        items = items[:count]
    first = next(iter(systems.values()))
    if len(systems) == 1:
        label = first.boundary.value
    else:
        label = "double-" + ("dirichlet" if systems["odd"].boundary is BoundarySpec.FULL_DIRICHLET
                             else "neumann")
    tags = [t[1] for t in items]
    return SpectralResult(np.array([t[0] for t in items]), [t[2] for t in items],
                          np.array([t[3] for t in items]), first.h, label,
                          [tag if tag != "none" else None for tag in tags], systems, tags)


def double_oval(profile: ProfileFunction, boundary: str, h: float, K: int = 16,
                mesh: Mesh | None = None) -> dict:
    """Parity blocks of the symmetric oval {|y| < L(x)}.

    Odd functions in y restrict to the half-oval with Dirichlet on the
    straight side, even ones with Neumann there.  Dirichlet outer boundary:
    odd = FullDirichlet, even = DirichletCurved.  Neumann outer boundary:
    odd = DirichletStraight, even = FullNeumann.
    """
    boundary = str(boundary).lower()
    if boundary.startswith("d"):
        pair = {"odd": BoundarySpec.FULL_DIRICHLET, "even": BoundarySpec.DIRICHLET_CURVED}
    elif boundary.startswith("n"):
        pair = {"odd": BoundarySpec.DIRICHLET_STRAIGHT, "even": BoundarySpec.FULL_NEUMANN}
    else:
        raise ValueError("double-oval boundary must be 'dirichlet' or 'neumann'")
    mesh = mesh or graded_mesh(400)
    out = {}
    for par, bc in pair.items():
        s = assemble_qh(profile, bc, h, K, mesh)
        s.parity = par
        out[par] = s
    return out


def parity_block_matrix(pair: dict):
    """Full double-oval (Q, M) with the parity blocks on the diagonal."""
    Qs = [pair[p].Q for p in ("odd", "even")]
    Ms = [pair[p].M for p in ("odd", "even")]
    return sparse.block_diag(Qs, format="csr"), sparse.block_diag(Ms, format="csr")


# --- independent finite-difference oracle ---------------------------------------

class DegenerateStencilError(ValueError):
    pass


def _ellipse_laplacian(A: float, B: float, dx: float, strict: bool = False,
                       min_arm: float = 0.05):
    """Shortley-Weller 5-point -Laplacian on {(x/A)^2 + (y/B)^2 < 1}, Dirichlet."""
    nx = int(math.floor(A / dx))
    ny = int(math.floor(B / dx))
    xs = dx * np.arange(-nx, nx + 1)
    ys = dx * np.arange(-ny, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = (X / A) ** 2 + (Y / B) ** 2 < 1.0
    # half-widths of the chord through each node
    hx = A * np.sqrt(np.clip(1 - (Y / B) ** 2, 0, None))
    hy = B * np.sqrt(np.clip(1 - (X / A) ** 2, 0, None))
    # arms to the boundary along each axis, capped at dx
    right = np.minimum(hx - X, dx)
    left = np.minimum(hx + X, dx)
    up = np.minimum(hy - Y, dx)
    down = np.minimum(hy + Y, dx)
    arms = np.stack([right, left, up, down])
    tiny = inside & (arms.min(axis=0) < min_arm * dx)
    if np.any(tiny):
        if strict:
            i, j = np.argwhere(tiny)[0]
            raise DegenerateStencilError(
                f"boundary arm below {min_arm} * spacing at node ({xs[i]:.4f}, {ys[j]:.4f}); "
                f"regrid with a slightly different spacing")
        # snap: nodes hugging the boundary become boundary nodes (u = 0); their
        # neighbours then see a capped arm of one full spacing
        inside = inside & ~tiny
    idx = -np.ones(inside.shape, dtype=np.int64)
    idx[inside] = np.arange(int(inside.sum()))
    rows, cols, vals = [], [], []
    I, J = np.nonzero(inside)
    me = idx[I, J]
    diag = np.zeros(me.size)
    for (di, dj, arm, opp) in ((1, 0, right, left), (-1, 0, left, right),
                               (0, 1, up, down), (0, -1, down, up)):
        a = arm[I, J]
        b = opp[I, J]
        ni, nj = I + di, J + dj
        valid = (ni >= 0) & (ni < inside.shape[0]) & (nj >= 0) & (nj < inside.shape[1])
        nb_inside = np.zeros(me.size, dtype=bool)
        nb_inside[valid] = inside[ni[valid], nj[valid]]
        a = np.where(nb_inside, dx, a)
        coef = 2.0 / (a * (a + b))
        diag += coef
        sel = nb_inside
        rows.append(me[sel])
        cols.append(idx[ni[sel], nj[sel]])
        vals.append(-coef[sel])
    rows.append(me)
    cols.append(me)
    vals.append(diag)
    Lap = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(me.size, me.size))
    return Lap


def ellipse_fd_eigenvalues(A: float, B: float, dx: float, count: int = 6, strict: bool = False):
    """Lowest Dirichlet eigenvalues of the ellipse with semi-axes A, B on one grid."""
    Lap = _ellipse_laplacian(A, B, dx, strict)
    w = eigs(Lap.tocsc(), k=count, sigma=0.0, which="LM", return_eigenvectors=False, tol=1e-12)
    return np.sort(w.real)


@dataclass(frozen=True)
class FDResult:
    h: float
    spacing: float
    coarse: np.ndarray
    fine: np.ndarray
    extrapolated: np.ndarray


def fd_oracle_ellipse(h: float, spacing: float = 0.02, count: int = 6, strict: bool = False) -> FDResult:
    """Dirichlet eigenvalues of (h x)^2 + y^2 < 1, Richardson over spacings d, d/2.

    This ellipse has semi-axes (1/h, 1); its spectrum equals the q_h spectrum
    of the double oval with the circle profile.
    """
    if not 0.2 <= h <= 1.0:
        raise ValueError("fd oracle supports h in [0.2, 1]")
    if spacing > 0.02:
        raise ValueError("grid spacing must be <= 0.02")
    coarse = ellipse_fd_eigenvalues(1.0 / h, 1.0, spacing, count, strict)
    fine = ellipse_fd_eigenvalues(1.0 / h, 1.0, 0.5 * spacing, count, strict)
    return FDResult(h, spacing, coarse, fine, (4.0 * fine - coarse) / 3.0)


# --- diagnostics -----------------------------------------------------------------

def _strip_quadrature(mesh_or_n, lo: float, hi: float, n: int = 400):
    """Gauss-Legendre points/weights on [lo, hi] graded toward whichever end is +-1."""
    t, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, 1.0, n + 1)
    # cluster at the outer end with x = end -+ (width) s^2
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (a + b) + 0.5 * (b - a) * t
        xs.append(s)
        ws.append(0.5 * (b - a) * w)
    s = np.concatenate(xs)
    ws = np.concatenate(ws)
    width = hi - lo
    if hi >= 1.0 - 1e-15:
        x = hi - width * s ** 2
    else:
        x = lo + width * s ** 2
    return x, ws * 2.0 * width * s


def poincare_bound(profile: ProfileFunction, delta: float) -> float:
    """f(delta) = sup over the end strips J_delta of (L / pi)^2."""
    xs = np.concatenate([np.linspace(-1, -1 + delta, 2001), np.linspace(1 - delta, 1, 2001)])
    return float(np.max(profile.L(xs)) ** 2 / math.pi ** 2)


def poincare_ratio(profile: ProfileFunction, delta: float, fields) -> float:
    """Strip mass / strip d_y-energy for a FullDirichlet field.

    ``fields`` maps k >= 1 to callables u_k(x); u = sum u_k sqrt2 sin(k pi y/L).
    Returns 0 for a field vanishing on the strips.
    """
    mass = energy = 0.0
    for lo, hi in ((-1.0, -1.0 + delta), (1.0 - delta, 1.0)):
        x, w = _strip_quadrature(None, lo, hi)
        L = profile.L(x)
        for k, f in fields.items():
            u2 = f(x) ** 2
            mass += float(np.sum(w * L * u2))
            energy += float(np.sum(w * (k * math.pi) ** 2 / L * u2))
    if energy == 0.0:
        return 0.0
    return mass / energy


@dataclass(frozen=True)
class PoincareReport:
    max_ratio: float
    bound: float

    @property
    def passed(self):
        return self.max_ratio <= self.bound * (1 + 1e-6)


def poincare_check(profile: ProfileFunction, delta: float, trials: int = 50, seed: int = 0,
                   modes: int = 6) -> PoincareReport:
    """Worst strip Rayleigh ratio over random FullDirichlet fields vs f(delta)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        fields = {}
        for k in range(1, modes + 1):
            c = rng.standard_normal(4) / k
            fr = rng.uniform(0.5, 6.0, 4)
            ph = rng.uniform(0, 2 * math.pi, 4)
            fields[k] = (lambda x, c=c, fr=fr, ph=ph:
                         (1 - x * x) * (np.cos(np.multiply.outer(x, fr) + ph) @ c))
        worst = max(worst, poincare_ratio(profile, delta, fields))
    return PoincareReport(worst, poincare_bound(profile, delta))


def separation_bound(profile: ProfileFunction, delta: float, h: float) -> float:
    """Analytic bound s (2 + h s), s = sup_{I_delta} |L'|, on the relative gap."""
    xs = np.linspace(-1 + delta, 1 - delta, 4001)
    s = float(np.max(np.abs(profile.dL(xs))))
    return s * (2.0 + h * s)


@dataclass(frozen=True)
class SeparationReport:
    max_ratio: float            # sup over the test family
    max_ratio_diagonal: float   # sup over u = v with u_k even in x
    sampled_ratio: float        # max over random pairs from the family
    bound: float
    h: float


def _separation_family(lo, hi, h, K, centres=4, freqs=(0.5, 1.0, 2.0, 3.0, 4.0)):
    """Fields g(x) e_k: bump envelopes on I_delta times cos/sin(nu x / h), one mode each.

    Returns (x, w, g, dg, mode, even) with g of shape (nfun, npts).
    """
    n = max(400, int(40 * (hi - lo) / h))
    t, gw = np.polynomial.legendre.leggauss(6)
    edges = np.linspace(lo, hi, n + 1)
    x = (0.5 * (edges[:-1] + edges[1:])[:, None] + 0.5 * np.diff(edges)[:, None] * t).ravel()
    w = (0.5 * np.diff(edges)[:, None] * gw).ravel()
    half = 0.25 * (hi - lo)
    mids = np.linspace(lo + half, hi - half, centres)

    def bump(mid):
        z = (x - mid) / half
        inside = np.abs(z) < 1
        return np.where(inside, (1 - z * z) ** 2, 0.0), np.where(inside, -4 * z * (1 - z * z) / half, 0.0)

    gs, dgs, modes, even = [], [], [], []
    for k in range(K):
        for nu in freqs:
            f = nu / h
            for mid in mids:
                e, de = bump(mid)
                for trig, dtrig in ((np.cos, lambda v: -np.sin(v)), (np.sin, np.cos)):
                    gs.append(e * trig(f * x))
                    dgs.append(de * trig(f * x) + e * f * dtrig(f * x))
                    modes.append(k)
                    even.append(False)
            # even-in-x fields: symmetric pair of bumps times cos
            e1, de1 = bump(mids[0])
            e2, de2 = bump(mids[-1])
            e, de = e1 + e2, de1 + de2
            gs.append(e * np.cos(f * x))
            dgs.append(de * np.cos(f * x) - e * f * np.sin(f * x))
            modes.append(k)
            even.append(True)
    return x, w, np.array(gs), np.array(dgs), np.array(modes), np.array(even)


def _separation_forms(profile, h, x, w, g, dg, modes, basis):
    """Matrices of a_h and q_h - a_h on the family."""
    C, G = basis.couplings()
    om2 = basis.frequencies ** 2
    L, dL = profile.L(x), profile.dL(x)
    same = modes[:, None] == modes[None, :]
    kin = (dg * (w * L)) @ dg.T
    pot = (g * (w / L)) @ g.T
    A = same * (h * h * kin + om2[modes][:, None] * pot)
    cross = (dg * (w * dL)) @ g.T  # int L' g_i' g_j
    third = (g * (w * dL * dL / L)) @ g.T
    Ck = C[np.ix_(modes, modes)]
    B = h * h * (-(Ck * cross) - (Ck.T * cross.T) + G[np.ix_(modes, modes)] * third)
    return A, 0.5 * (B + B.T)


def _spectral_radius(B, A):
    # drop the (numerically) null directions of A before solving
    ws, V = np.linalg.eigh(A)
    keep = ws > 1e-12 * ws.max()
    P = V[:, keep] / np.sqrt(ws[keep])
    return float(np.max(np.abs(linalg.eigvalsh(P.T @ B @ P))))


def separation_gap(profile: ProfileFunction, delta: float, h: float, trials: int = 30,
                   seed: int = 0, K: int = 6, modes: int = 3) -> SeparationReport:
    """Estimate C_delta in |q_h(u,v) - a_h(u,v)| <= C_delta h sqrt(a_h(u) a_h(v)) on Omega_delta.

    a_h drops the L'-terms of q_h.  The supremum is taken exactly over a family
    of fields supported in Omega_delta that oscillate at frequency ~ 1/h in x
    (smooth fields would make the ratio O(h) and hide the constant): it is the
    spectral radius of the pencil (q_h - a_h, a_h) on the family, divided by h.
    ``trials`` random pairs from the first ``modes`` modes give a sampled value.
    """
    rng = np.random.default_rng(seed)
    basis = TransversalBasis(BoundarySpec.FULL_DIRICHLET, K, lifting=False)
    lo, hi = -1 + delta, 1 - delta
    x, w, g, dg, mode, even = _separation_family(lo, hi, h, K)
    A, B = _separation_forms(profile, h, x, w, g, dg, mode, basis)
    sup = _spectral_radius(B, A) / h
    ev = np.flatnonzero(even)
    sup_even = _spectral_radius(B[np.ix_(ev, ev)], A[np.ix_(ev, ev)]) / h
    pool = np.flatnonzero(mode < modes)
    sampled = 0.0
    for _ in range(trials):
        cu = np.zeros(len(mode))
        cv = np.zeros(len(mode))
        cu[pool] = rng.standard_normal(pool.size)
        cv[pool] = rng.standard_normal(pool.size)
        r = abs(cu @ B @ cv) / (h * math.sqrt((cu @ A @ cu) * (cv @ A @ cv)))
        sampled = max(sampled, r)
    return SeparationReport(sup, sup_even, sampled, separation_bound(profile, delta, h), h)


def neumann_endpoint_coefficient(x):
    """(1/2) L^(-1/2) (L' L^(-1/2))' = (1/2)(L''/L - (L'/L)^2 / 2) for L = sqrt(x (2 - x))."""
    x = np.asarray(x, float)
    L2 = x * (2.0 - x)
    L = np.sqrt(L2)
    dL = (1.0 - x) / L
    d2L = -1.0 / (L2 * L)
    return 0.5 * (d2L / L - 0.5 * (dL / L) ** 2)


@dataclass(frozen=True)
class ExpansionReport:
    x: np.ndarray
    deviation: np.ndarray  # x^2 * LHS + 3/16
    slope: float  # max |deviation / x|

    @property
    def max_deviation(self):
        return float(np.max(np.abs(self.deviation)))


def neumann_hom_expansion_check(x=None) -> ExpansionReport:
    """x^2 (coefficient) + 3/16 = O(x) near the endpoint, for x in (0, 0.25]."""
    x = np.geomspace(1e-4, 0.25, 60) if x is None else np.asarray(x, float)
    if np.any(x <= 0) or np.any(x > 0.25):
        raise ValueError("samples must lie in (0, 0.25]")
    dev = x * x * neumann_endpoint_coefficient(x) + 3.0 / 16.0
    return ExpansionReport(x, dev, float(np.max(np.abs(dev / x))))


@dataclass(frozen=True)
class MassProfile:
    interior: float           # mass with x in I_delta
    zeroth_strips: float      # k = 0 mode on the end strips J_delta
    transversal_strips: float  # k >= 1 modes on J_delta
    zeroth_bands: float       # k = 0 mode within eps*h of the ends
    transversal_strip_dy_energy: float
    total: float


def _plain(lo, hi, n=400):
    t, gw = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(lo, hi, n + 1)
    x = (0.5 * (edges[:-1] + edges[1:])[:, None] + 0.5 * np.diff(edges)[:, None] * t).ravel()
    return x, (0.5 * np.diff(edges)[:, None] * gw).ravel()


def _interp_nodal(mesh, f, x):
    """Evaluate a finite-element field (linear in arcsin x per cell) at points x."""
    return np.interp(np.arcsin(np.clip(x, -1, 1)), np.arcsin(np.clip(mesh.nodes, -1, 1)), f)


def _segment(lo, hi):
    if hi >= 1 - 1e-15 or lo <= -1 + 1e-15:
        return _strip_quadrature(None, lo, hi, n=200)
    return _plain(lo, hi)


def mode_mass_profile(result: SpectralResult, delta: float, eps: float = 1.0, index: int = 0) -> MassProfile:
    """Where the M-normalised eigenvector ``index`` carries its mass (diagnostic only).

    The zeroth mode is the transversal mean v0(x) = (1/L) int_0^L u dy when the
    basis contains constants (Neumann), and is absent otherwise.
    """
    s = result.system_of(index)
    F = result.mode_fields(index)
    basis = s.basis
    Gm, Dy = basis.gram(), basis.dy_gram()
    means = np.array([moment(basis.terms(k), (("pow", 0, 1.0),), 0) for k in basis.labels])
    has_zero = any(basis.is_constant(k) for k in basis.labels)
    prof = s.profile

    def parts(lo, hi):
        x, w = _segment(lo, hi)
        U = np.stack([_interp_nodal(s.mesh, f, x) for f in F])
        L = prof.L(x)
        total = L * np.einsum("ix,ij,jx->x", U, Gm, U)
        v0 = means @ U if has_zero else np.zeros_like(x)
        zero = L * v0 * v0
        dy = np.einsum("ix,ij,jx->x", U, Dy, U) / L
        return float(w @ total), float(w @ zero), float(w @ dy)

    strips = ((-1.0, -1.0 + delta), (1.0 - delta, 1.0))
    interior = parts(-1 + delta, 1 - delta)[0]
    z_str = r_str = e_str = 0.0
    for a, b in strips:
        t, z, e = parts(a, b)
        z_str += z
        r_str += t - z
        e_str += e
    band = eps * s.h
    z_band = sum(parts(a, b)[1] for a, b in ((-1.0, -1.0 + band), (1.0 - band, 1.0)))
    return MassProfile(interior, z_str, r_str, z_band, e_str, interior + z_str + r_str)

