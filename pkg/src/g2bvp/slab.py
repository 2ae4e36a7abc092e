"""Forms on the slab T^6 x [0, L] with phi = omega ^ dt + rho.

Torus directions are Fourier, the t direction is Chebyshev-Gauss-Lobatto
collocation with ``t = L (1 - x) / 2`` so that node 0 is the face t = 0 and
node N is the face t = L. Sections of Lambda^2_14 are stored in the global
chart

    alpha = 2 a ^ dt - chi6(a) - B8 Theta,

with ``a`` a boundary 1-form (6 components), ``Theta`` in the 8-dimensional
summand and ``chi6`` taken from the top face (normal +d/dt). The pointwise
norm in this chart is ``6 |a|^2 + |Theta|^2``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .exterior import Form, index_tuples, wedge_matrix
from .g2 import BoundaryFrame, standard_frame, standard_point_float
from .torus import TorusField, exterior_d, wedge_stack

TWO_PI = 2 * np.pi
N7 = 7
T_INDEX = 6


# ---------------------------------------------------------------------------
# Chebyshev collocation


@lru_cache(maxsize=None)
def chebyshev(n_t: int):
    """Nodes on [-1, 1], differentiation matrix and Clenshaw-Curtis weights."""
    if n_t < 3:
        raise ValueError("need at least 3 collocation nodes")
    N = n_t - 1
    j = np.arange(n_t)
    x = np.cos(np.pi * j / N)
    c = np.where((j == 0) | (j == N), 2.0, 1.0) * (-1.0) ** j
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n_t))
    D -= np.diag(D.sum(axis=1))
    # Clenshaw-Curtis
    w = np.zeros(n_t)
    theta = np.pi * j / N
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N ** 2 - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
        v -= np.cos(N * theta[inner]) / (N ** 2 - 1)
    else:
        w[0] = w[N] = 1.0 / N ** 2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
    w[inner] = 2 * v / N
    return x, D, w


def slab_grid(length: float, n_t: int):
    """Nodes in t, d/dt matrix and quadrature weights on [0, L]."""
    x, D, w = chebyshev(n_t)
    return length * (1 - x) / 2, -(2.0 / length) * D, (length / 2) * w


# ---------------------------------------------------------------------------
# chart data


def _restrict_index() -> dict:
    """Ambient 2-form index -> boundary 2-form index for tuples without t."""
    amb = {t: i for i, t in enumerate(index_tuples(N7, 2))}
    return {amb[t]: i for i, t in enumerate(index_tuples(6, 2))}


@lru_cache(maxsize=None)
def theta8_basis() -> np.ndarray:
    """Orthonormal basis (21 x 8) of the primitive (1,1) summand on the boundary.

    Columns: (dx1dy1 - dx2dy2)/sqrt2, (dx1dy1 + dx2dy2 - 2 dx3dy3)/sqrt6 and,
    for each pair a < b, (dx_a dx_b + dy_a dy_b)/sqrt2 and
    (dx_a dy_b - dy_a dx_b)/sqrt2.
    """
    def e(i, j):
        return Form.basis(N7, (i, j), 1.0)

    x = [0, 2, 4]
    y = [1, 3, 5]
    cols = [(e(x[0], y[0]) - e(x[1], y[1])) * (1 / np.sqrt(2)),
            (e(x[0], y[0]) + e(x[1], y[1]) - e(x[2], y[2]) * 2) * (1 / np.sqrt(6))]
    for a, b in ((0, 1), (0, 2), (1, 2)):
        cols.append((e(x[a], x[b]) + e(y[a], y[b])) * (1 / np.sqrt(2)))
        cols.append((e(x[a], y[b]) - e(y[a], x[b])) * (1 / np.sqrt(2)))
    return np.array([c.to_vector("float") for c in cols]).T


@lru_cache(maxsize=None)
def chart_matrix() -> np.ndarray:
    """21 x 14 matrix sending (a, Theta) to alpha = 2 a ^ dt - chi6(a) - B8 Theta."""
    frame = standard_frame(top=True, exact=False)
    chi6 = np.asarray(frame.chi6, dtype=float)[:, :6]
    wdt = np.zeros((21, 6))
    dt = Form.basis(N7, (T_INDEX,), 1.0)
    for i in range(6):
        wdt[:, i] = (Form.basis(N7, (i,), 1.0) ^ dt).to_vector("float")
    return np.hstack([2 * wdt - chi6, -theta8_basis()])


CHART_WEIGHTS = np.array([6.0] * 6 + [1.0] * 8)


@lru_cache(maxsize=None)
def chart_inverse() -> np.ndarray:
    """Left inverse of the chart on Lambda^2_14 (orthogonal, so C^T / weights)."""
    return chart_matrix().T / CHART_WEIGHTS[:, None]


# ---------------------------------------------------------------------------
# slab forms


@dataclass(frozen=True, eq=False)
class SlabForm:
    """A p-form on the slab: modes (m, 6) and values (m, n_t, C(7, p))."""

    degree: int
    modes: np.ndarray
    values: np.ndarray
    length: float

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=np.int64).reshape(-1, 6)
        v = np.asarray(self.values, dtype=complex)
        if v.shape[0] != len(m) or v.shape[2] != comb(N7, self.degree):
            raise ValueError("values do not match modes and degree")
        if self.length <= 0:
            raise ValueError("slab length must be positive")
        object.__setattr__(self, "modes", m)
        object.__setattr__(self, "values", v)

    @property
    def n_t(self) -> int:
        return self.values.shape[1]

    def grid(self):
        return slab_grid(self.length, self.n_t)

    def apply(self, matrix: np.ndarray, degree: int | None = None) -> "SlabForm":
        degree = self.degree if degree is None else degree
        return SlabForm(degree, self.modes, self.values @ np.asarray(matrix).T, self.length)

    def _like(self, values) -> "SlabForm":
        return SlabForm(self.degree, self.modes, values, self.length)

    def _align(self, other: "SlabForm"):
        """Both value arrays on the union of the two mode sets."""
        if (self.degree != other.degree or self.n_t != other.n_t or self.length != other.length):
            raise ValueError("slab forms differ in degree, grid or length")
        if np.array_equal(self.modes, other.modes):
            return self.modes, self.values, other.values
        keys = [tuple(k) for k in self.modes]
        keys += [k for k in map(tuple, other.modes) if k not in set(keys)]
        index = {k: i for i, k in enumerate(keys)}
        shape = (len(keys),) + self.values.shape[1:]
        u, v = np.zeros(shape, dtype=complex), np.zeros(shape, dtype=complex)
        for k, x in zip(map(tuple, self.modes), self.values):
            u[index[k]] = x
        for k, x in zip(map(tuple, other.modes), other.values):
            v[index[k]] = x
        return np.array(keys), u, v

    def __add__(self, other):
        m, u, v = self._align(other)
        return SlabForm(self.degree, m, u + v, self.length)

    def __sub__(self, other):
        m, u, v = self._align(other)
        return SlabForm(self.degree, m, u - v, self.length)

    def __mul__(self, s):
        return self._like(self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def inner(self, other: "SlabForm") -> complex:
        """``int <u, conj v>`` over T^6 x [0, L]."""
        _, u, v = self._align(other)
        _, _, w = self.grid()
        return complex(TWO_PI ** 6 * np.einsum("mtc,mtc,t->", u, v.conj(), w))

    def norm(self) -> float:
        return float(np.sqrt(abs(self.inner(self))))

    def face(self, top: bool) -> np.ndarray:
        """Values at t = L (top) or t = 0, shape (m, C(7, p))."""
        return self.values[:, -1 if top else 0, :]


def slab_d(f: SlabForm) -> SlabForm:
    _, Dt, _ = f.grid()
    w = wedge_stack(N7, f.degree)
    k = f.modes.astype(float)
    tang = 1j * np.einsum("mj,jab,mtb->mta", k, w[:6], f.values)
    normal = np.einsum("ab,mtb->mta", w[T_INDEX], np.einsum("st,mtb->msb", Dt, f.values))
    return SlabForm(f.degree + 1, f.modes, tang + normal, f.length)


def slab_codifferential(f: SlabForm) -> SlabForm:
    _, Dt, _ = f.grid()
    w = wedge_stack(N7, f.degree - 1)
    k = f.modes.astype(float)
    tang = -1j * np.einsum("mj,jba,mtb->mta", k, w[:6], f.values)
    normal = -np.einsum("ba,mtb->mta", w[T_INDEX], np.einsum("st,mtb->msb", Dt, f.values))
    return SlabForm(f.degree - 1, f.modes, tang + normal, f.length)


def _conjugate_pairs(rng: random.Random, n_modes: int, K: int) -> list:
    seen, out = set(), []
    while len(out) < n_modes:
        k = tuple(rng.randint(-K, K) for _ in range(6))
        if not any(k) or k in seen:
            continue
        seen.update({k, tuple(-x for x in k)})
        out.append(k)
    return out


def _random_poly_values(rng, t, degree, denominator, count):
    """``count`` random polynomials of the given degree in t/L with rational coefficients."""
    L = t[-1] if t[-1] > 0 else 1.0
    s = t / L
    out = np.zeros((len(t), count), dtype=complex)
    for c in range(count):
        re = [Fraction(rng.randint(-denominator, denominator), denominator) for _ in range(degree + 1)]
        im = [Fraction(rng.randint(-denominator, denominator), denominator) for _ in range(degree + 1)]
        out[:, c] = sum((float(r) + 1j * float(i)) * s ** p for p, (r, i) in enumerate(zip(re, im)))
    return out


@dataclass(frozen=True, eq=False)
class SlabField:
    """Section of Lambda^2_14 over the slab in the (a, Theta) chart."""

    length: float
    modes: np.ndarray
    a: np.ndarray
    theta: np.ndarray
    K: int

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=np.int64).reshape(-1, 6)
        a = np.asarray(self.a, dtype=complex)
        th = np.asarray(self.theta, dtype=complex)
        if a.shape[:2] != th.shape[:2] or a.shape[0] != len(m) or a.shape[2] != 6 or th.shape[2] != 8:
            raise ValueError("block shapes must be (m, n_t, 6) and (m, n_t, 8)")
        if m.size and np.abs(m).max() > self.K:
            raise ValueError("mode exceeds the truncation K")
        object.__setattr__(self, "modes", m)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta", th)

    @property
    def n_t(self) -> int:
        return self.a.shape[1]

    @classmethod
    def random(cls, seed: int, length: float = 1.0, n_t: int = 24, n_modes: int = 3, K: int = 2,
               degree: int = 4, denominator: int = 8, include_zero_mode: bool = True,
               modes: list | None = None) -> "SlabField":
        """Seeded real field with polynomial t-profiles; Theta vanishes at both faces.

        ``modes`` fixes the nonzero frequencies (one per conjugate pair);
        otherwise ``n_modes`` pairs are drawn with ``|k_i| <= K``.
        """
        rng = random.Random(seed)
        t, _, _ = slab_grid(length, n_t)
        ks = _conjugate_pairs(rng, n_modes, K) if modes is None else [tuple(k) for k in modes]
        out_modes, a, th = [], [], []
        bump = (t * (length - t) / length ** 2)[:, None]
        for k in ks:
            av = _random_poly_values(rng, t, degree, denominator, 6)
            tv = bump * _random_poly_values(rng, t, degree - 2, denominator, 8)
            out_modes += [k, tuple(-x for x in k)]
            a += [av, av.conj()]
            th += [tv, tv.conj()]
        if include_zero_mode:
            av = _random_poly_values(rng, t, degree, denominator, 6).real
            tv = bump * _random_poly_values(rng, t, degree - 2, denominator, 8).real
            out_modes.append((0,) * 6)
            a.append(av.astype(complex))
            th.append(tv.astype(complex))
        return cls(length, np.array(out_modes), np.array(a), np.array(th), K)

    def mode_keys(self) -> list:
        """Nonzero frequencies, one from each conjugate pair."""
        seen, out = set(), []
        for k in map(tuple, self.modes):
            if any(k) and k not in seen:
                seen.update({k, tuple(-x for x in k)})
                out.append(k)
        return out

    def to_form(self) -> SlabForm:
        blocks = np.concatenate([self.a, self.theta], axis=2)
        return SlabForm(2, self.modes, blocks @ chart_matrix().T, self.length)

    def pointwise_norm2(self) -> np.ndarray:
        return 6 * np.sum(np.abs(self.a) ** 2, axis=2) + np.sum(np.abs(self.theta) ** 2, axis=2)

    def theta_face_defect(self) -> float:
        return float(max(np.abs(self.theta[:, 0]).max(initial=0), np.abs(self.theta[:, -1]).max(initial=0)))


# ---------------------------------------------------------------------------
# boundary pairing and the Green formula


@lru_cache(maxsize=None)
def _face_data(top: bool):
    """chi6 as a 15 x 6 matrix, omega as a 6-dimensional Form, orientation sign."""
    frame = standard_frame(top=top, exact=False)
    return _restrict_frame(frame)


def _restrict_frame(frame: BoundaryFrame):
    nu = [float(x) for x in frame.normal]
    if any(abs(x) > 0 for x in nu[:6]) or abs(abs(nu[6]) - 1) > 1e-12:
        raise ValueError("only the slab faces with normal +-d/dt are supported")
    sigma = 1 if nu[6] > 0 else -1
    rmap = _restrict_index()
    chi = np.asarray(frame.chi6, dtype=float)[:, :6]
    chi15 = np.zeros((15, 6))
    for amb, loc in rmap.items():
        chi15[loc] = chi[amb]
    om = np.zeros(15)
    ov = frame.omega.to_vector("float")
    for amb, loc in rmap.items():
        om[loc] = ov[amb]
    omega = Form.from_vector(6, 2, list(om))
    return chi15, omega, sigma


@lru_cache(maxsize=None)
def _pair_24() -> np.ndarray:
    """``(u2 ^ v4)[top]`` on 6-dimensional basis coefficients."""
    i2, i4 = index_tuples(6, 2), index_tuples(6, 4)
    out = np.zeros((15, 15))
    for a, s in enumerate(i2):
        for b, u in enumerate(i4):
            if not set(s) & set(u):
                out[a, b] = (Form.basis(6, s, 1.0) ^ Form.basis(6, u, 1.0))[tuple(range(6))]
    return out


def boundary_pairing(frame: BoundaryFrame, a: TorusField, b: TorusField) -> complex:
    """``<a, b>_d = - int_face chi6(a) ^ d(conj(b) ^ omega)`` on one face.

    The integral uses the Stokes orientation of the face (outward normal
    first). Real fields give the plain bilinear value.
    """
    if a.n != 6 or b.n != 6 or a.degree != 1 or b.degree != 1:
        raise ValueError("boundary fields must be 1-forms on T^6")
    chi15, omega, sigma = _restrict_frame(frame)
    wom = wedge_matrix(omega, 1, "float").astype(float)
    dbw = exterior_d(b.apply(wom, 3))
    ca = a.apply(chi15, 2)
    _, u, v, _ = _common(ca, dbw)
    return complex(-sigma * TWO_PI ** 6 * np.einsum("ma,ab,mb->", u, _pair_24(), v.conj()))


def _common(x: TorusField, y: TorusField):
    keys = sorted({tuple(k) for k in x.freqs} | {tuple(k) for k in y.freqs})
    index = {k: i for i, k in enumerate(keys)}
    u = np.zeros((len(keys), x.coeffs.shape[1]), dtype=complex)
    v = np.zeros((len(keys), y.coeffs.shape[1]), dtype=complex)
    for k, c in zip(map(tuple, x.freqs), x.coeffs):
        u[index[k]] = c
    for k, c in zip(map(tuple, y.freqs), y.coeffs):
        v[index[k]] = c
    return keys, u, v, max(x.K, y.K)


def boundary_one_form(field: SlabField, top: bool) -> TorusField:
    """``alpha||_{d,6} = chi6^{-1}(alpha pulled back to the face)``."""
    chi15, _, _ = _face_data(top)
    rmap = _restrict_index()
    vals = field.to_form().face(top)
    pulled = np.zeros((len(field.modes), 15), dtype=complex)
    for amb, loc in rmap.items():
        pulled[:, loc] = vals[:, amb]
    # chi6 is injective with chi6^T chi6 = 2 I
    coeffs = pulled @ chi15 / 2.0
    return TorusField(1, np.array(field.modes), coeffs, field.K, n=6)


@lru_cache(maxsize=None)
def _smap_float() -> np.ndarray:
    return np.asarray(standard_point_float().smap, dtype=float)


def slab_L(f: SlabForm) -> SlabForm:
    """``L = d* S d`` on a slab 2-form."""
    return slab_codifferential(slab_d(f).apply(_smap_float()))


def q_pairing(f: SlabForm, g: SlabForm) -> complex:
    """``<f, g>_Q = <S df, dg>``."""
    return slab_d(f).apply(_smap_float()).inner(slab_d(g))


@dataclass(frozen=True)
class GreenResult:
    L_term: complex
    Q_term: complex
    boundary_term: complex
    residual: float


def green_formula_check(alpha: SlabField, beta: SlabField, tol: float = 1e-10) -> GreenResult:
    """Residual of ``<L alpha, beta> = <alpha, beta>_Q + <alpha||_6, beta||_6>_d``."""
    for name, fld in (("alpha", alpha), ("beta", beta)):
        scale = max(1.0, float(np.abs(fld.theta).max(initial=0)))
        if fld.theta_face_defect() > tol * scale:
            raise ValueError(f"{name} has a nonzero 8-component on a face")
    fa, fb = alpha.to_form(), beta.to_form()
    lhs = slab_L(fa).inner(fb)
    q = q_pairing(fa, fb)
    bdry = 0j
    for top in (True, False):
        frame = standard_frame(top=top, exact=False)
        bdry += boundary_pairing(frame, boundary_one_form(alpha, top), boundary_one_form(beta, top))
    scale = max(abs(lhs), abs(q), abs(bdry), 1e-300)
    return GreenResult(lhs, q, bdry, abs(lhs - q - bdry) / scale)


def random_slab_form(seed: int, degree: int = 2, length: float = 1.0, n_t: int = 24, n_modes: int = 3,
                     K: int = 2, poly_degree: int = 4, denominator: int = 8,
                     vanish_on_faces: bool = True) -> SlabForm:
    """Seeded real slab form; its pullback to both faces vanishes when requested."""
    rng = random.Random(seed)
    t, _, _ = slab_grid(length, n_t)
    ks = _conjugate_pairs(rng, n_modes, K)
    idx = index_tuples(N7, degree)
    tangential = np.array([T_INDEX not in i for i in idx])
    bump = t * (length - t) / length ** 2
    modes, vals = [], []
    for k in ks + [(0,) * 6]:
        v = _random_poly_values(rng, t, poly_degree, denominator, len(idx))
        if vanish_on_faces:
            v[:, tangential] *= bump[:, None]
        if not any(k):
            modes.append(k)
            vals.append(v.real.astype(complex))
            continue
        modes += [k, tuple(-x for x in k)]
        vals += [v, v.conj()]
    return SlabForm(degree, np.array(modes), np.array(vals), length)


def pullback_defect(f: SlabForm) -> float:
    idx = index_tuples(N7, f.degree)
    tangential = np.array([T_INDEX not in i for i in idx])
    return float(max(np.abs(f.face(True)[:, tangential]).max(initial=0),
                     np.abs(f.face(False)[:, tangential]).max(initial=0)))


def hitchin_Q_slab(f: SlabForm, tol: float = 1e-10) -> tuple[float, float]:
    """``Q(f) = <S df, df>`` and ``<L f14, f14>`` for a slab 2-form vanishing on the faces."""
    if f.degree != 2:
        raise ValueError("hitchin_Q_slab expects a 2-form")
    scale = max(1.0, float(np.abs(f.values).max(initial=0)))
    if pullback_defect(f) > tol * scale:
        raise ValueError("the pullback of f to the boundary does not vanish")
    q = q_pairing(f, f).real
    f14 = f.apply(np.asarray(standard_point_float().proj2_14, dtype=float))
    return q, slab_L(f14).inner(f14).real
