"""Band-limited differential forms on the flat torus R^n / (2 pi Z)^n.

A field is a finite sum ``sum_k c_k exp(i k.x)`` with ``c_k`` a coefficient
vector in the orthonormal basis of p-forms (lexicographic index tuples).
Exterior derivative and codifferential act mode by mode, so they are exact
on the retained frequencies: ``d = i k ^`` and ``d* = -i i_k``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .exterior import Form, Metric, index_tuples, interior_matrix, star_matrix, wedge_matrix
from .g2 import G2Point, standard_point_float

TWO_PI = 2 * np.pi


@lru_cache(maxsize=None)
def wedge_stack(n: int, p: int) -> np.ndarray:
    """Array ``W[j]`` of shape (n, C(n, p+1), C(n, p)) for ``e^j ^ .``."""
    return np.array([wedge_matrix(Form.basis(n, (j,)), p, "float") for j in range(n)])


@lru_cache(maxsize=None)
def euclidean_star(n: int, p: int) -> np.ndarray:
    return star_matrix(Metric.identity(n, "float"), p).astype(float)


@dataclass(frozen=True, eq=False)
class TorusField:
    """Sparse Fourier representation of a p-form field on T^n.

    ``freqs`` is an (m, n) integer array of distinct frequencies with
    ``|k_i| <= K``; ``coeffs`` is the matching (m, C(n, p)) complex array.
    """

    degree: int
    freqs: np.ndarray
    coeffs: np.ndarray
    K: int
    n: int = 7

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64).reshape(-1, self.n)
        c = np.asarray(self.coeffs, dtype=complex).reshape(len(f), comb(self.n, self.degree))
        if f.size and np.abs(f).max() > self.K:
            raise ValueError(f"frequency exceeds the truncation K = {self.K}")
        if len({tuple(r) for r in f}) != len(f):
            raise ValueError("frequencies must be distinct")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, degree: int, K: int, n: int = 7) -> "TorusField":
        return cls(degree, np.zeros((0, n), dtype=np.int64), np.zeros((0, comb(n, degree))), K, n)

    @classmethod
    def from_modes(cls, degree: int, modes: dict, K: int | None = None, n: int = 7) -> "TorusField":
        """Build from ``{k_tuple: coefficient vector or Form}``."""
        freqs, coeffs = [], []
        for k, c in modes.items():
            if isinstance(c, Form):
                c = c.to_vector("float")
            freqs.append(tuple(int(x) for x in k))
            coeffs.append(np.asarray(c, dtype=complex))
        if K is None:
            K = max((max(abs(x) for x in k) for k in freqs), default=0)
        if not freqs:
            return cls.zero(degree, K, n)
        return cls(degree, np.array(freqs), np.array(coeffs), K, n)

    @classmethod
    def constant(cls, form: Form, K: int = 0) -> "TorusField":
        return cls.from_modes(form.degree, {(0,) * form.n: form}, K, form.n)

    @classmethod
    def random(cls, degree: int, seed: int, n_modes: int = 4, K: int = 2, n: int = 7,
               denominator: int = 8, active: tuple | None = None) -> "TorusField":
        """Seeded real field with rational coefficients of bounded denominator.

        ``active`` restricts the coordinates along which the field varies.
        """
        rng = random.Random(seed)
        dims = tuple(range(n)) if active is None else tuple(active)
        modes = {}
        while len(modes) < 2 * n_modes:
            k = [0] * n
            for d in dims:
                k[d] = rng.randint(-K, K)
            k = tuple(k)
            if not any(k) or k in modes:
                continue
            re = [Fraction(rng.randint(-denominator, denominator), denominator) for _ in range(comb(n, degree))]
            im = [Fraction(rng.randint(-denominator, denominator), denominator) for _ in range(comb(n, degree))]
            c = np.array([float(a) + 1j * float(b) for a, b in zip(re, im)])
            modes[k] = c
            modes[tuple(-x for x in k)] = c.conj()
        return cls.from_modes(degree, modes, K, n)

    # algebra -------------------------------------------------------------
    def _union(self, other: "TorusField"):
        if self.degree != other.degree or self.n != other.n:
            raise ValueError("fields differ in degree or dimension")
        keys = {tuple(k): i for i, k in enumerate(self.freqs)}
        extra = [tuple(k) for k in other.freqs if tuple(k) not in keys]
        freqs = np.array([tuple(k) for k in self.freqs] + extra, dtype=np.int64).reshape(-1, self.n)
        index = {k: i for i, k in enumerate(map(tuple, freqs))}
        a = np.zeros((len(freqs), self.coeffs.shape[1]), dtype=complex)
        b = np.zeros_like(a)
        a[: len(self.freqs)] = self.coeffs
        for k, c in zip(map(tuple, other.freqs), other.coeffs):
            b[index[k]] = c
        return freqs, a, b, max(self.K, other.K)

    def __add__(self, other: "TorusField") -> "TorusField":
        f, a, b, K = self._union(other)
        return TorusField(self.degree, f, a + b, K, self.n)

    def __sub__(self, other: "TorusField") -> "TorusField":
        f, a, b, K = self._union(other)
        return TorusField(self.degree, f, a - b, K, self.n)

    def __mul__(self, s) -> "TorusField":
        return TorusField(self.degree, self.freqs, self.coeffs * s, self.K, self.n)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def apply(self, matrix: np.ndarray, degree: int | None = None) -> "TorusField":
        """Apply a constant pointwise linear map to every mode."""
        degree = self.degree if degree is None else degree
        m = np.asarray(matrix, dtype=float)
        return TorusField(degree, self.freqs, self.coeffs @ m.T, self.K, self.n)

    def inner(self, other: "TorusField") -> complex:
        """L^2 product ``int <f, conj g>`` over the torus of volume (2 pi)^n."""
        _, a, b, _ = self._union(other)
        return complex(np.sum(a * b.conj()) * TWO_PI ** self.n)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * TWO_PI ** self.n))

    def is_real(self, tol: float = 1e-12) -> bool:
        index = {tuple(k): i for i, k in enumerate(self.freqs)}
        scale = max(1.0, float(np.abs(self.coeffs).max(initial=0)))
        for k, c in zip(map(tuple, self.freqs), self.coeffs):
            j = index.get(tuple(-x for x in k))
            other = self.coeffs[j] if j is not None else np.zeros_like(c)
            if np.abs(c - other.conj()).max(initial=0) > tol * scale:
                return False
        return True

    def mode(self, k) -> np.ndarray:
        for kk, c in zip(map(tuple, self.freqs), self.coeffs):
            if kk == tuple(k):
                return c
        return np.zeros(comb(self.n, self.degree), dtype=complex)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Real values at an (npts, n) array of points, shape (npts, C(n, p))."""
        phase = np.exp(1j * np.asarray(points, dtype=float) @ self.freqs.T)
        return (phase @ self.coeffs).real

    def active_dims(self) -> tuple:
        return tuple(int(j) for j in np.flatnonzero(np.any(self.freqs != 0, axis=0)))


def exterior_d(f: TorusField) -> TorusField:
    """Spectral exterior derivative."""
    if f.degree >= f.n:
        raise ValueError("exterior derivative of a top-degree form")
    w = wedge_stack(f.n, f.degree)
    out = 1j * np.einsum("mj,jab,mb->ma", f.freqs.astype(float), w, f.coeffs)
    return TorusField(f.degree + 1, f.freqs, out, f.K, f.n)


def codifferential(f: TorusField) -> TorusField:
    """Formal L^2 adjoint of d; per mode ``-i i_k``."""
    if f.degree == 0:
        raise ValueError("codifferential of a function")
    w = wedge_stack(f.n, f.degree - 1)
    out = -1j * np.einsum("mj,jba,mb->ma", f.freqs.astype(float), w, f.coeffs)
    return TorusField(f.degree - 1, f.freqs, out, f.K, f.n)


def codifferential_by_star(f: TorusField) -> TorusField:
    """``d* = (-1)^(n(p+1)+1) * d *`` on p-forms, an independent route to the adjoint."""
    n, p = f.n, f.degree
    sign = (-1) ** (n * (p + 1) + 1)
    g = exterior_d(f.apply(euclidean_star(n, p), n - p))
    return g.apply(euclidean_star(n, n - p + 1), p - 1) * sign


def laplacian(f: TorusField) -> TorusField:
    """Nonnegative Hodge Laplacian ``d d* + d* d``; multiplication by |k|^2."""
    k2 = np.sum(f.freqs.astype(float) ** 2, axis=1)
    return TorusField(f.degree, f.freqs, f.coeffs * k2[:, None], f.K, f.n)


# ---------------------------------------------------------------------------
# type decomposition and the Proposition 1 identities


@dataclass(frozen=True)
class TypedD:
    d1: TorusField
    d7: TorusField
    d27: TorusField


def _point(g: G2Point | None) -> G2Point:
    return standard_point_float() if g is None else g


def _fmat(m) -> np.ndarray:
    return np.asarray(m, dtype=float)


def typed_d(f: TorusField, g: G2Point | None = None) -> TypedD:
    """Split ``d f`` of a 2-form field into its 1, 7 and 27 components."""
    if f.degree != 2:
        raise ValueError("typed_d expects a 2-form field")
    g = _point(g)
    df = exterior_d(f)
    return TypedD(df.apply(_fmat(g.proj3_1)), df.apply(_fmat(g.proj3_7)), df.apply(_fmat(g.proj3_27)))


def project_field2(f: TorusField, g: G2Point | None = None):
    g = _point(g)
    return f.apply(_fmat(g.proj2_7)), f.apply(_fmat(g.proj2_14))


def chi_field(eta: TorusField, g: G2Point | None = None) -> TorusField:
    return eta.apply(_fmat(_point(g).chi_matrix()), 3)


def _rel(res: TorusField, ref: float) -> float:
    return res.norm() / ref if ref > 0 else res.norm()


@dataclass(frozen=True)
class IdentityReport:
    """Residuals of the first-order identities, relative to the size of ``d f``."""

    d1_on_14: float
    d7_on_14: float
    d7_on_7: float


def two_form_identities(f: TorusField, g: G2Point | None = None) -> IdentityReport:
    """Check d1 = 0 and d7 = chi d*/4 on the 14 part, d7 = -chi d*/2 on the 7 part."""
    g = _point(g)
    f7, f14 = project_field2(f, g)
    t14, t7 = typed_d(f14, g), typed_d(f7, g)
    ref14 = exterior_d(f14).norm()
    ref7 = exterior_d(f7).norm()
    r1 = _rel(t14.d1, ref14)
    r2 = _rel(t14.d7 - chi_field(codifferential(f14), g) * 0.25, ref14)
    r3 = _rel(t7.d7 + chi_field(codifferential(f7), g) * 0.5, ref7)
    return IdentityReport(r1, r2, r3)


@dataclass(frozen=True)
class OneFormReport:
    """``|d*d14 - 2/3 d*d|`` and ``|d*d14 - 2 d*d7|`` relative to ``|d*d eta|``."""

    third: float
    double: float


def one_form_identities(eta: TorusField, g: G2Point | None = None) -> OneFormReport:
    if eta.degree != 1:
        raise ValueError("one_form_identities expects a 1-form field")
    g = _point(g)
    d_eta = exterior_d(eta)
    d7, d14 = project_field2(d_eta, g)
    dd = codifferential(d_eta)
    a = codifferential(d14)
    ref = dd.norm()
    return OneFormReport(_rel(a - dd * (2 / 3), ref), _rel(a - codifferential(d7) * 2, ref))


@dataclass(frozen=True)
class LReport:
    """Both expressions of the linearised operator and their difference."""

    from_types: TorusField
    from_laplacian: TorusField
    residual: float


def operator_L(f: TorusField, g: G2Point | None = None) -> LReport:
    """``d* S d f`` against ``-Delta f14 + 3/2 d14 d* f14``."""
    if f.degree != 2:
        raise ValueError("operator_L expects a 2-form field")
    g = _point(g)
    first = codifferential(exterior_d(f).apply(_fmat(g.smap)))
    _, f14 = project_field2(f, g)
    second = -laplacian(f14) + project_field2(exterior_d(codifferential(f14)), g)[1] * 1.5
    ref = max(first.norm(), second.norm())
    return LReport(first, second, _rel(first - second, ref))


def hitchin_Q(f: TorusField, g: G2Point | None = None) -> tuple[float, float]:
    """``Q = 4/3|d1 f|^2 + |d7 f|^2 - |d27 f|^2`` and ``<L f14, f14>`` on T^n."""
    g = _point(g)
    t = typed_d(f, g)
    q = 4 / 3 * t.d1.norm() ** 2 + t.d7.norm() ** 2 - t.d27.norm() ** 2
    _, f14 = project_field2(f, g)
    lq = operator_L(f14, g).from_types.inner(f14).real
    return q, lq


# ---------------------------------------------------------------------------
# nonlinear torsion residual


class PositivityError(ValueError):
    def __init__(self, message, point, min_eig):
        super().__init__(message)
        self.point = point
        self.min_eig = min_eig


@lru_cache(maxsize=None)
def _positivity_tensors():
    """Interior matrices on 3-forms and the 2x2x3 -> top pairing tensor."""
    n = 7
    inter = np.array([interior_matrix([float(i == j) for i in range(n)], n, 3, "float")
                      for j in range(n)])
    idx2, idx3 = index_tuples(n, 2), index_tuples(n, 3)
    top = tuple(range(n))
    pair = np.zeros((35, 21, 21))
    for c, t3 in enumerate(idx3):
        phi_c = Form.basis(n, t3, 1.0)
        for a, t2 in enumerate(idx2):
            ea = Form.basis(n, t2, 1.0)
            for b, u2 in enumerate(idx2):
                if set(t2) & set(u2) or set(t2 + u2) & set(t3):
                    continue
                pair[c, a, b] = ((ea ^ Form.basis(n, u2, 1.0)) ^ phi_c)[top]
    return inter, pair


@lru_cache(maxsize=None)
def _full_tensor_maps():
    """Maps between sorted 3-index coefficients and full antisymmetric tensors."""
    n = 7
    expand = np.zeros((n, n, n, 35))
    for c, (i, j, k) in enumerate(index_tuples(n, 3)):
        for perm in itertools.permutations(range(3)):
            t = (i, j, k)
            s = 1
            p = list(perm)
            for a in range(3):
                for b in range(a + 1, 3):
                    if p[a] > p[b]:
                        s = -s
            expand[t[perm[0]], t[perm[1]], t[perm[2]], c] = s
    return expand


@lru_cache(maxsize=None)
def _complement_table():
    """For each 4-tuple K: (index of complement triple, sign eps(Kc, K))."""
    n = 7
    pos3 = {t: i for i, t in enumerate(index_tuples(n, 3))}
    rows, signs = [], []
    for K in index_tuples(n, 4):
        kc = tuple(i for i in range(n) if i not in K)
        seq = list(kc) + list(K)
        s = 1
        for a in range(n):
            for b in range(a + 1, n):
                if seq[a] > seq[b]:
                    s = -s
        rows.append(pos3[kc])
        signs.append(s)
    return np.array(rows), np.array(signs, dtype=float)


def theta_batch(phis: np.ndarray):
    """Theta and the positivity Gram matrices for an (npts, 35) batch of 3-forms."""
    inter, pair = _positivity_tensors()
    a = np.einsum("pc,cab->pab", phis, pair)
    u = np.einsum("iac,pc->pia", inter, phis)
    gram = np.einsum("pia,pab,pjb->pij", u, a, u)
    eig = np.linalg.eigvalsh(gram)
    with np.errstate(invalid="ignore"):
        s = (np.linalg.det(gram) / 6 ** 7) ** (1 / 9)
    metric = gram / (6 * s)[:, None, None]
    ginv = np.linalg.inv(metric)
    full = np.einsum("ijkc,pc->pijk", _full_tensor_maps(), phis)
    up = np.einsum("pia,pabc->pibc", ginv, full)
    up = np.einsum("pjb,pibc->pijc", ginv, up)
    up = np.einsum("pkc,pijc->pijk", ginv, up)
    idx3 = index_tuples(7, 3)
    lin = np.array([i * 49 + j * 7 + k for i, j, k in idx3])
    up_sorted = up.reshape(len(phis), -1)[:, lin]
    rows, signs = _complement_table()
    theta = s[:, None] * up_sorted[:, rows] * signs[None, :]
    return theta, gram, eig[:, 0]


def _grid(dims: tuple, n_grid: int):
    axes = [np.arange(n_grid) * TWO_PI / n_grid for _ in dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.zeros((n_grid ** len(dims), 7))
    for j, d in enumerate(dims):
        pts[:, d] = mesh[j].reshape(-1)
    return pts


def _grid_to_field(values: np.ndarray, dims: tuple, n_grid: int, degree: int) -> TorusField:
    """FFT grid samples (npts, C(7,p)) into a TorusField on the symmetric frequency set."""
    shape = (n_grid,) * len(dims) + (values.shape[1],)
    spec = np.fft.fftn(values.reshape(shape), axes=tuple(range(len(dims)))) / n_grid ** len(dims)
    ks = np.fft.fftfreq(n_grid, 1.0 / n_grid).astype(int)
    freqs, coeffs = [], []
    for multi in itertools.product(range(n_grid), repeat=len(dims)):
        k = [0] * 7
        for j, d in enumerate(dims):
            k[d] = ks[multi[j]]
        freqs.append(k)
        coeffs.append(spec[multi])
    return TorusField(degree, np.array(freqs), np.array(coeffs), n_grid // 2)


@dataclass(frozen=True)
class TorsionResult:
    """``W = * d Theta(phi + d alpha)`` with its consistency residuals."""

    W: TorusField
    dstar_norm: float
    type14_residual: float
    min_positivity_eig: float


def torsion_residual(alpha: TorusField, n_grid: int | None = None) -> TorsionResult:
    """Nonlinear torsion residual of ``phi_std + d alpha`` by collocation.

    Theta is evaluated pointwise on a uniform grid over the coordinates along
    which alpha varies, then differentiated spectrally. The 14-type check
    uses the metric-free characterisation ``dTheta ^ i_v phi' = 0`` for all v,
    which says that ``dTheta`` lies in the 14-dimensional summand of
    5-forms at ``phi' = phi + d alpha``.
    """
    if alpha.degree != 2 or alpha.n != 7:
        raise ValueError("torsion_residual expects a 2-form field on T^7")
    dims = alpha.active_dims()
    phi0 = standard_point_float().phi.to_vector("float")
    if not dims:
        zero = TorusField.zero(2, alpha.K)
        return TorsionResult(zero, 0.0, 0.0, float(np.linalg.eigvalsh(theta_batch(phi0[None])[1])[0, 0]))
    if n_grid is None:
        n_grid = 8 * int(np.abs(alpha.freqs).max()) + 7
    pts = _grid(dims, n_grid)
    dphi = exterior_d(alpha).evaluate(pts)
    phis = phi0[None, :] + dphi
    theta, _, min_eig = theta_batch(phis)
    worst = int(np.argmin(min_eig))
    if min_eig[worst] <= 0:
        raise PositivityError(f"phi + d alpha is not positive at x = {pts[worst].tolist()}",
                              pts[worst], float(min_eig[worst]))
    theta_field = _grid_to_field(theta, dims, n_grid, 4)
    theta_field = TorusField(4, theta_field.freqs, theta_field.coeffs, theta_field.K)
    d_theta = exterior_d(theta_field)
    W = d_theta.apply(euclidean_star(7, 5), 2)
    W = TorusField(2, W.freqs, W.coeffs, W.K)

    # type check on the grid: dTheta ^ i_v phi' for each basis vector v
    dt_vals = d_theta.evaluate(pts)
    inter, pair = _positivity_tensors()
    contractions = np.einsum("iac,pc->pia", inter, phis)
    top5 = _five_two_pairing()
    wedge_vals = np.einsum("pf,fa,pia->pi", dt_vals, top5, contractions)
    scale = np.max(np.abs(dt_vals)) * np.max(np.abs(phis)) + 1e-300
    type_res = float(np.max(np.abs(wedge_vals)) / scale)
    dstar = codifferential(W).norm()
    return TorsionResult(W, dstar, type_res, float(min_eig.min()))


@lru_cache(maxsize=None)
def _five_two_pairing() -> np.ndarray:
    """Matrix of ``(beta5 ^ gamma2)[top]`` on basis coefficients."""
    n = 7
    idx5, idx2 = index_tuples(n, 5), index_tuples(n, 2)
    out = np.zeros((21, 21))
    for a, t5 in enumerate(idx5):
        for b, t2 in enumerate(idx2):
            if not set(t5) & set(t2):
                out[a, b] = (Form.basis(n, t5, 1.0) ^ Form.basis(n, t2, 1.0))[tuple(range(n))]
    return out


def linearization_errors(alpha: TorusField, ts=(1e-2, 5e-3, 2.5e-3), sign: int = 1,
                         n_grid: int | None = None) -> list[float]:
    """``|W(t alpha)/t - sign * L(alpha)| / |L(alpha)|`` for each t."""
    lin = operator_L(alpha).from_types * sign
    ref = lin.norm()
    out = []
    for t in ts:
        w = torsion_residual(alpha * t, n_grid).W * (1 / t)
        out.append((w - lin).norm() / ref)
    return out


def sup_norm_d(alpha: TorusField, n_grid: int | None = None) -> float:
    """Largest pointwise Euclidean norm of ``d alpha`` on the collocation grid."""
    dims = alpha.active_dims()
    if not dims:
        return 0.0
    if n_grid is None:
        n_grid = 8 * int(np.abs(alpha.freqs).max()) + 7
    vals = exterior_d(alpha).evaluate(_grid(dims, n_grid))
    return float(np.sqrt((vals ** 2).sum(axis=1)).max())
