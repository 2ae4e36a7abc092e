"""Pointwise G2 linear algebra on the standard model R + C^3.

Everything here acts on a single positive 3-form. Exact results come from
``Fraction`` coefficients; float and mpmath coefficients go through the same
code paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _linalg
from .exterior import (
    STANDARD_BASIS,
    Basis,
    Form,
    Metric,
    form_inner,
    hodge_star,
    index_tuples,
    interior,
    interior_matrix,
    star_matrix,
    wedge,
)

N = 7
X1, Y1, X2, Y2, X3, Y3, T = range(7)


def _e(*idx) -> Form:
    return Form.basis(N, idx)


#: Standard symplectic form on C^3.
OMEGA = _e(X1, Y1) + _e(X2, Y2) + _e(X3, Y3)
#: Im(dz1 dz2 dz3).
RHO = -_e(Y1, Y2, Y3) + _e(Y1, X2, X3) + _e(X1, Y2, X3) + _e(X1, X2, Y3)
#: Re(dz1 dz2 dz3).
RE_OMEGA3 = _e(X1, X2, X3) - _e(X1, Y2, Y3) - _e(Y1, X2, Y3) - _e(Y1, Y2, X3)
DT = _e(T)
PHI_STD = wedge(OMEGA, DT) + RHO


class NotPositiveError(ValueError):
    """Raised when a 3-form is not positive; carries the Gram witness."""

    def __init__(self, message, gram):
        super().__init__(message)
        self.gram = gram


def _like(form: Form) -> str:
    for c in form.terms.values():
        return _linalg.kind(c)
    return "exact"


def _unit(i: int, like: str):
    v = [Fraction(0)] * N if like == "exact" else [0.0] * N
    v[i] = Fraction(1) if like == "exact" else 1.0
    if like == "mp":
        import mpmath
        v = [mpmath.mpf(x) for x in v]
    return v


def positivity_gram(phi: Form, basis: Basis = STANDARD_BASIS) -> np.ndarray:
    """Gram matrix of ``v -> i_v phi ^ i_v phi ^ phi`` read against the orientation."""
    if phi.degree != 3 or phi.n != N:
        raise ValueError("expected a 3-form on a 7-dimensional space")
    like = _like(phi)
    contractions = [interior(_unit(i, like), phi) for i in range(N)]
    gram = _linalg.zeros((N, N), like)
    top = tuple(range(N))
    for i in range(N):
        wi = wedge(contractions[i], phi)
        for j in range(i, N):
            val = wedge(contractions[j], wi)[top] * basis.orientation
            gram[i, j] = gram[j, i] = val if like != "float" else float(val)
    return gram


def is_positive(phi: Form, basis: Basis = STANDARD_BASIS):
    """Return ``(positive, gram)`` for the quadratic form of a 3-form."""
    gram = positivity_gram(phi, basis)
    return _linalg.is_positive_definite(gram), gram


def volume_scalar(phi: Form, basis: Basis = STANDARD_BASIS):
    """Coefficient of vol(phi) against the oriented coordinate volume form."""
    ok, gram = is_positive(phi, basis)
    if not ok:
        raise NotPositiveError("3-form is not positive", gram)
    return _linalg.nth_root(_linalg.det(gram) / 6 ** 7, 9)


def _orth_projector(cols: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Projector onto span(cols), orthogonal for the inner product ``gram``."""
    small = cols.T @ gram @ cols
    return cols @ _linalg.inv(small) @ cols.T @ gram


@dataclass(frozen=True, eq=False)
class G2Point:
    """A positive 3-form with its induced metric, volume, Theta and type projectors."""

    phi: Form
    basis: Basis
    metric: Metric
    vol: Form
    theta: Form
    proj2_7: np.ndarray
    proj2_14: np.ndarray
    proj3_1: np.ndarray
    proj3_7: np.ndarray
    proj3_27: np.ndarray
    kind: str = field(default="exact")

    @property
    def smap(self) -> np.ndarray:
        """Acts as 4/3, 1, -1 on Lambda^3_1, Lambda^3_7, Lambda^3_27."""
        return self.proj3_1 * Fraction(4, 3) + self.proj3_7 - self.proj3_27 if self.kind == "exact" \
            else self.proj3_1 * (4.0 / 3.0) + self.proj3_7 - self.proj3_27

    def star(self, a: Form) -> Form:
        return hodge_star(self.metric, a, self.basis.orientation)

    def star_matrix(self, p: int) -> np.ndarray:
        return star_matrix(self.metric, p, self.basis.orientation)

    def inner(self, a: Form, b: Form):
        return form_inner(self.metric, a, b)

    def chi_matrix(self) -> np.ndarray:
        """35 x 7 matrix of eta -> *(eta ^ phi) on 1-form coefficients."""
        cols = [chi(self, Form.basis(N, (i,))).to_vector(self.kind) for i in range(N)]
        return np.array(cols, dtype=cols[0].dtype).T

    def to_json(self) -> dict:
        def enc(m):
            if self.kind == "exact":
                return [[[int(x.numerator), int(x.denominator)] for x in row] for row in m]
            return [[float(x) for x in row] for row in m]
        return {
            "phi": self.phi.to_json(),
            "kind": self.kind,
            "metric": enc(self.metric.gram),
            "proj2_7": enc(self.proj2_7),
            "proj2_14": enc(self.proj2_14),
            "proj3_1": enc(self.proj3_1),
            "proj3_7": enc(self.proj3_7),
            "proj3_27": enc(self.proj3_27),
        }


def induce(phi: Form, basis: Basis = STANDARD_BASIS) -> G2Point:
    """Induced metric, volume form, Theta and type projectors of a positive 3-form.

    The Gram matrix ``B`` of ``i_v phi ^ i_w phi ^ phi`` equals
    ``6 g(v, w) sqrt(det g)`` once ``g`` is normalised by ``|phi|^2 = 7``,
    which gives ``sqrt(det g) = (det B / 6^7)^(1/9)``. On the exact backend
    that root must be rational.
    """
    ok, gram = is_positive(phi, basis)
    if not ok:
        raise NotPositiveError("3-form is not positive; the Gram matrix is indefinite", gram)
    like = _like(phi)
    s = _linalg.nth_root(_linalg.det(gram) / 6 ** 7, 9)
    g = gram / (6 * s)
    metric = Metric(g, sqrt_det=s)
    orient = basis.orientation
    vol = Form.basis(N, tuple(range(N)), s * orient)
    theta = hodge_star(metric, phi, orient)

    g2 = metric.form_gram(2)
    g3 = metric.form_gram(3)
    cols2 = np.array([interior(_unit(i, like), phi).to_vector(like) for i in range(N)],
                     dtype=g2.dtype).T
    p2_7 = _orth_projector(cols2, g2)
    p2_14 = _linalg.identity(21, like) - p2_7

    f = phi.to_vector(like).reshape(-1, 1)
    p3_1 = _orth_projector(f, g3)
    cols3 = np.array([interior(_unit(i, like), theta).to_vector(like) for i in range(N)],
                     dtype=g3.dtype).T
    p3_7 = _orth_projector(cols3, g3)
    p3_27 = _linalg.identity(35, like) - p3_1 - p3_7
    return G2Point(phi, basis, metric, vol, theta, p2_7, p2_14, p3_1, p3_7, p3_27, like)


@lru_cache(maxsize=None)
def standard_point() -> G2Point:
    """The exact G2Point of the standard model 3-form."""
    return induce(PHI_STD)


@lru_cache(maxsize=None)
def standard_point_float() -> G2Point:
    return induce(PHI_STD.as_float())


def _apply(matrix: np.ndarray, form: Form, like: str) -> Form:
    return Form.from_vector(form.n, form.degree, list(matrix @ form.to_vector(like)))


def project2(g: G2Point, beta: Form):
    """Split a 2-form into its Lambda^2_7 and Lambda^2_14 parts."""
    if beta.degree != 2:
        raise ValueError("project2 expects a 2-form")
    return _apply(g.proj2_7, beta, g.kind), _apply(g.proj2_14, beta, g.kind)


def project3(g: G2Point, gamma: Form):
    """Split a 3-form into its Lambda^3_1, Lambda^3_7, Lambda^3_27 parts."""
    if gamma.degree != 3:
        raise ValueError("project3 expects a 3-form")
    return tuple(_apply(p, gamma, g.kind) for p in (g.proj3_1, g.proj3_7, g.proj3_27))


def chi(g: G2Point, eta: Form) -> Form:
    """``eta -> *(eta ^ phi)``, an isomorphism Lambda^1 -> Lambda^3_7."""
    if eta.degree != 1:
        raise ValueError("chi expects a 1-form")
    return g.star(wedge(eta, g.phi))


def smap_apply(g: G2Point, gamma: Form) -> Form:
    return _apply(g.smap, gamma, g.kind)


def dtheta_linearized(g: G2Point, dphi: Form) -> Form:
    """Directional derivative of phi -> Theta(phi), equal to ``*S(dphi)``."""
    return g.star(smap_apply(g, dphi))


def vol_q(g: G2Point, dphi: Form):
    """The quadratic form 4/3|d1|^2 + |d7|^2 - |d27|^2 of a 3-form variation."""
    g1, g7, g27 = project3(g, dphi)
    return g.inner(g1, g1) * (Fraction(4, 3) if g.kind == "exact" else 4.0 / 3.0) \
        + g.inner(g7, g7) - g.inner(g27, g27)


def theta(phi: Form, basis: Basis = STANDARD_BASIS) -> Form:
    """Theta(phi) = *_phi phi without building projectors."""
    ok, gram = is_positive(phi, basis)
    if not ok:
        raise NotPositiveError("3-form is not positive", gram)
    s = _linalg.nth_root(_linalg.det(gram) / 6 ** 7, 9)
    metric = Metric(gram / (6 * s), sqrt_det=s)
    return hodge_star(metric, phi, basis.orientation)


def pullback(phi: Form, a: np.ndarray) -> Form:
    """Pull a form back along the linear map with matrix ``a`` (x -> a x)."""
    out = Form.zero(N, phi.degree)
    # e^i pulls back to sum_j a[i, j] e^j
    images = [Form.covector([a[i, j] for j in range(N)]) for i in range(N)]
    for idx, c in phi.terms.items():
        term = Form.constant(N, c)
        for i in idx:
            term = wedge(term, images[i])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# boundary algebra


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
    """Boundary data at a point with outward unit normal ``normal``.

    Boundary forms are represented as ambient forms annihilated by
    ``i_normal``. ``chi6`` is the 21 x 7 matrix of the map on ambient 1-form
    coefficients (zero on ``nu_star``); the three projectors act on ambient
    2-forms and sum to the tangential projector ``tangential2``.
    """

    point: G2Point
    normal: tuple
    nu_star: Form
    omega: Form
    rho: Form
    coframe: tuple
    chi6: np.ndarray
    tangential1: np.ndarray
    tangential2: np.ndarray
    proj_1: np.ndarray
    proj_6: np.ndarray
    proj_8: np.ndarray

    @property
    def kind(self) -> str:
        return self.point.kind

    def chi6_gram(self) -> np.ndarray:
        """6 x 6 Gram matrix of chi6 on the boundary coframe."""
        like = self.kind
        cols = np.array([self.chi6 @ c.to_vector(like) for c in self.coframe], dtype=self.chi6.dtype).T
        return cols.T @ self.point.metric.form_gram(2) @ cols


def boundary_frame(g: G2Point, normal: Sequence) -> BoundaryFrame:
    """Build the boundary splitting for the outward unit normal ``normal``."""
    like = g.kind
    nu = np.array(list(normal), dtype=g.metric.gram.dtype)
    norm2 = nu @ g.metric.gram @ nu
    off = norm2 != 1 if like == "exact" else abs(float(norm2) - 1.0) > 1e-12
    if off:
        raise ValueError(f"normal must be a unit vector, |nu|^2 = {norm2}")
    nu_star = g.metric.lower(list(nu))
    omega = interior(list(nu), g.phi)
    rho = g.phi - wedge(omega, nu_star)

    ns = nu_star.to_vector(like)
    # a -> a - a(nu) nu_star
    t1 = _linalg.identity(N, like) - np.outer(ns, nu)
    # beta -> beta - nu_star ^ i_nu beta
    i_nu2 = interior_matrix(list(nu), N, 2, like)
    wedge_ns = np.array([wedge(nu_star, Form.basis(N, (i,))).to_vector(like) for i in range(N)],
                        dtype=ns.dtype).T
    t2 = _linalg.identity(21, like) - wedge_ns @ i_nu2

    # v -> i_v omega, augmented so that it is invertible; i_v rho
    om_map = np.array([interior(_unit(i, like), omega).to_vector(like) for i in range(N)],
                      dtype=ns.dtype).T
    rho_map = np.array([interior(_unit(i, like), rho).to_vector(like) for i in range(N)],
                       dtype=ns.dtype).T
    solve = _linalg.inv(om_map + np.outer(ns, ns))
    chi6 = rho_map @ solve @ t1

    drop = int(np.argmax([abs(float(x)) for x in nu]))
    coframe = tuple(Form.covector(list(t1[:, i])) for i in range(N) if i != drop)

    g2 = g.metric.form_gram(2)
    w = omega.to_vector(like).reshape(-1, 1)
    p1 = _orth_projector(w, g2)
    cols6 = np.array([chi6 @ c.to_vector(like) for c in coframe], dtype=ns.dtype).T
    p6 = _orth_projector(cols6, g2)
    p8 = t2 - p1 - p6
    return BoundaryFrame(g, tuple(nu), nu_star, omega, rho, coframe, chi6, t1, t2, p1, p6, p8)


def standard_frame(top: bool = True, exact: bool = True) -> BoundaryFrame:
    """Frame of the slab faces: outward normal +dt at the top, -dt at the bottom."""
    g = standard_point() if exact else standard_point_float()
    one = Fraction(1) if exact else 1.0
    nu = [0 * one] * 6 + [one if top else -one]
    return boundary_frame(g, nu)


def chi6(frame: BoundaryFrame, a: Form) -> Form:
    """The boundary map determined by ``chi6(i_v omega) = i_v rho``."""
    if a.degree != 1:
        raise ValueError("chi6 expects a boundary 1-form")
    like = frame.kind
    vec = a.to_vector(like)
    resid = vec - frame.tangential1 @ vec
    if _nonzero(resid, like):
        raise ValueError("1-form is not tangent to the boundary")
    return Form.from_vector(N, 2, list(frame.chi6 @ vec))


def _nonzero(vec: np.ndarray, like: str, tol: float = 1e-10) -> bool:
    if like == "exact":
        return any(x != 0 for x in vec.flat)
    return float(np.max(np.abs(np.asarray(vec, dtype=float)), initial=0.0)) > tol


def split14_boundary(frame: BoundaryFrame, alpha14: Form, tol: float = 1e-10):
    """Write ``alpha14 = theta8 + 2 a ^ nu* - chi6(a)`` and return ``(theta8, a)``."""
    like = frame.kind
    g = frame.point
    vec = alpha14.to_vector(like)
    scale = max(1.0, float(np.max(np.abs(np.asarray(vec, dtype=float)), initial=0.0)))
    if _nonzero(vec - g.proj2_14 @ vec, like, tol * scale):
        raise ValueError("2-form does not lie in Lambda^2_14")
    half = Fraction(1, 2) if like == "exact" else 0.5
    a = interior(list(frame.normal), alpha14) * (-half)
    theta8 = alpha14 - wedge(a, frame.nu_star) * 2 + chi6(frame, a)
    t8 = theta8.to_vector(like)
    if _nonzero(t8 - frame.proj_8 @ t8, like, tol * scale):
        raise ValueError("tangential remainder is not in the 8-dimensional summand")
    return theta8, a
