"""Alternating forms on an oriented inner-product space of dimension n <= 7.

Coefficients are stored sparsely against the lexicographically ordered basis
``e^{i1} ^ ... ^ e^{ip}`` (``i1 < ... < ip``). Any scalar type with field
arithmetic works; in practice that is :class:`fractions.Fraction` for exact
computation, ``float`` for numerics and ``mpmath.mpf`` for high precision
finite differences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import mpmath
import numpy as np

from . import _linalg

__all__ = [
    "Basis",
    "STANDARD_BASIS",
    "Form",
    "Metric",
    "wedge",
    "interior",
    "hodge_star",
    "form_inner",
    "index_tuples",
    "index_position",
    "compound",
    "wedge_matrix",
    "interior_matrix",
    "star_matrix",
    "inner_gram",
]

MAX_DIM = 7


@dataclass(frozen=True)
class Basis:
    """Ordered coordinate labels plus the sign of the top basis form."""

    labels: tuple
    orientation: int = 1

    def __post_init__(self):
        if not 1 <= len(self.labels) <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {len(self.labels)}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("basis labels must be distinct")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def dimension(self) -> int:
        return len(self.labels)


#: x1, y1, x2, y2, x3, y3, t with dx1 dy1 dx2 dy2 dx3 dy3 dt positive.
STANDARD_BASIS = Basis(("x1", "y1", "x2", "y2", "x3", "y3", "t"), 1)


@lru_cache(maxsize=None)
def index_tuples(n: int, p: int) -> tuple:
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def index_position(n: int, p: int) -> Mapping:
    return MappingProxyType({idx: k for k, idx in enumerate(index_tuples(n, p))})


def _sort_sign(seq: Sequence[int]):
    """Sign of the permutation sorting ``seq`` and the sorted tuple (0 on repeats)."""
    if len(set(seq)) != len(seq):
        return 0, None
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


@lru_cache(maxsize=None)
def complement(idx: tuple, n: int) -> tuple:
    return tuple(i for i in range(n) if i not in idx)


@lru_cache(maxsize=None)
def complement_sign(idx: tuple, n: int) -> int:
    """Sign with ``e^idx ^ e^complement = sign * e^{0..n-1}``."""
    return _sort_sign(idx + complement(idx, n))[0]


def _to_mpf(c):
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    return mpmath.mpf(c)


class Form:
    """A degree-``p`` alternating form on an ``n``-dimensional space.

    Instances are immutable. Absent index tuples mean a zero coefficient.
    """

    __slots__ = ("n", "degree", "_terms")

    def __init__(self, n: int, degree: int, terms: Mapping | None = None):
        if not 1 <= n <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}")
        if not 0 <= degree <= n:
            raise ValueError(f"degree {degree} out of range for dimension {n}")
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree:
                raise ValueError(f"index tuple {idx} has length {len(idx)}, expected {degree}")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index tuple {idx} is not strictly increasing")
            if idx and not (0 <= idx[0] and idx[-1] < n):
                raise ValueError(f"index tuple {idx} out of range")
            if c != 0:
                clean[idx] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Form is immutable")

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, n: int, degree: int) -> "Form":
        return cls(n, degree)

    @classmethod
    def constant(cls, n: int, value) -> "Form":
        return cls(n, 0, {(): value})

    @classmethod
    def basis(cls, n: int, idx: Iterable[int], coeff=Fraction(1)) -> "Form":
        """``coeff * e^{i1} ^ ... ^ e^{ip}``; unsorted indices are sorted with sign."""
        sign, key = _sort_sign(tuple(idx))
        if sign == 0:
            return cls(n, len(tuple(idx)))
        return cls(n, len(key), {key: sign * coeff})

    @classmethod
    def covector(cls, coeffs: Sequence) -> "Form":
        return cls(len(coeffs), 1, {(i,): c for i, c in enumerate(coeffs)})

    @classmethod
    def from_vector(cls, n: int, degree: int, vec: Sequence) -> "Form":
        tuples = index_tuples(n, degree)
        if len(vec) != len(tuples):
            raise ValueError(f"expected {len(tuples)} coefficients, got {len(vec)}")
        return cls(n, degree, {idx: c for idx, c in zip(tuples, vec)})

    # access ------------------------------------------------------------
    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def __getitem__(self, idx) -> object:
        return self._terms.get(tuple(idx), 0)

    def to_vector(self, like: str = "exact") -> np.ndarray:
        out = _linalg.zeros(comb(self.n, self.degree), like)
        pos = index_position(self.n, self.degree)
        for idx, c in self._terms.items():
            out[pos[idx]] = float(c) if like == "float" else c
        return out

    def is_zero(self) -> bool:
        return not self._terms

    def max_abs(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def map_coeffs(self, f) -> "Form":
        return Form(self.n, self.degree, {k: f(c) for k, c in self._terms.items()})

    def as_float(self) -> "Form":
        return self.map_coeffs(float)

    def as_mp(self) -> "Form":
        """Coefficients as ``mpmath.mpf`` at the current working precision."""
        return self.map_coeffs(_to_mpf)

    # arithmetic --------------------------------------------------------
    def _check(self, other: "Form"):
        if not isinstance(other, Form):
            return NotImplemented
        if other.n != self.n or other.degree != self.degree:
            raise ValueError(
                f"cannot combine degree {self.degree} (n={self.n}) with degree {other.degree} (n={other.n})")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, 0) + c
        return Form(self.n, self.degree, terms)

    def __neg__(self):
        return self.map_coeffs(lambda c: -c)

    def __sub__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, Form):
            return NotImplemented
        return self.map_coeffs(lambda c: c * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.map_coeffs(lambda c: c / scalar)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.n == other.n and self.degree == other.degree and self._terms == other._terms

    __hash__ = None

    def __repr__(self):
        body = " + ".join(f"{c}*e{list(k)}" for k, c in sorted(self._terms.items())) or "0"
        return f"Form(deg={self.degree}, {body})"

    # serialization -----------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for idx in sorted(self._terms):
            c = self._terms[idx]
            if isinstance(c, (Fraction, int)):
                c = Fraction(c)
                terms.append({"idx": list(idx), "num": c.numerator, "den": c.denominator})
            else:
                terms.append({"idx": list(idx), "val": float(c)})
        return {"degree": self.degree, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping, n: int = MAX_DIM) -> "Form":
        terms = {}
        for t in data["terms"]:
            if "val" in t:
                c = float(t["val"])
            else:
                c = Fraction(int(t["num"]), int(t["den"]))
            terms[tuple(t["idx"])] = c
        return cls(n, int(data["degree"]), terms)


def wedge(a: Form, b: Form) -> Form:
    """Exterior product ``a ^ b``."""
    if a.n != b.n:
        raise ValueError("forms live on different spaces")
    if a.degree + b.degree > a.n:
        raise ValueError(f"wedge of degrees {a.degree} and {b.degree} exceeds dimension {a.n}")
    terms: dict = {}
    for ia, ca in a._terms.items():
        for ib, cb in b._terms.items():
            sign, key = _sort_sign(ia + ib)
            if sign:
                terms[key] = terms.get(key, 0) + sign * ca * cb
    return Form(a.n, a.degree + b.degree, terms)


def interior(v: Sequence, a: Form) -> Form:
    """Contraction ``i_v a`` of a vector (components in the coordinate basis)."""
    if a.degree == 0:
        raise ValueError("interior product of a 0-form is undefined")
    if len(v) != a.n:
        raise ValueError(f"vector has {len(v)} components, space has dimension {a.n}")
    terms: dict = {}
    for idx, c in a._terms.items():
        for pos, i in enumerate(idx):
            if v[i] == 0:
                continue
            key = idx[:pos] + idx[pos + 1:]
            val = c * v[i] if pos % 2 == 0 else -c * v[i]
            terms[key] = terms.get(key, 0) + val
    return Form(a.n, a.degree - 1, terms)


def compound(matrix: np.ndarray, p: int) -> np.ndarray:
    """The ``p``-th exterior power of a square matrix (all p x p minors).

    Rows and columns follow :func:`index_tuples` order.
    """
    n = matrix.shape[0]
    tuples = index_tuples(n, p)
    if p == 0:
        return _linalg.identity(1, _linalg.kind(matrix))
    like = _linalg.kind(matrix)
    out = _linalg.zeros((len(tuples), len(tuples)), like)
    if like == "float":
        rows = np.array(tuples)
        sub = matrix[rows[:, None, :, None], rows[None, :, None, :]]
        return np.linalg.det(sub) if p > 1 else sub[..., 0, 0]
    for a, I in enumerate(tuples):
        for b, J in enumerate(tuples):
            out[a, b] = _linalg.det(matrix[np.ix_(I, J)]) if p > 1 else matrix[I[0], J[0]]
    return out


class Metric:
    """A positive-definite Gram matrix ``g(e_i, e_j)`` on vectors."""

    def __init__(self, gram, sqrt_det=None):
        exact_or_mp = _linalg.kind(np.asarray(gram, dtype=object)) != "float"
        gram = np.array(gram, dtype=object if exact_or_mp else float)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ValueError("gram matrix must be square")
        if not _linalg.is_positive_definite(gram):
            raise ValueError("metric is degenerate or not positive definite")
        self.gram = gram
        self._sqrt_det = sqrt_det
        self._inverse = None
        self._grams: dict = {}

    @classmethod
    def identity(cls, n: int = MAX_DIM, like: str = "exact") -> "Metric":
        return cls(_linalg.identity(n, like), sqrt_det=_linalg.identity(1, like)[0, 0])

    @property
    def dimension(self) -> int:
        return self.gram.shape[0]

    @property
    def kind(self) -> str:
        return _linalg.kind(self.gram)

    @property
    def inverse(self) -> np.ndarray:
        if self._inverse is None:
            self._inverse = _linalg.inv(self.gram)
        return self._inverse

    @property
    def sqrt_det(self):
        if self._sqrt_det is None:
            self._sqrt_det = _linalg.nth_root(_linalg.det(self.gram), 2)
        return self._sqrt_det

    def form_gram(self, p: int) -> np.ndarray:
        """Gram matrix of the induced inner product on p-form coefficient vectors."""
        if p not in self._grams:
            self._grams[p] = compound(self.inverse, p)
        return self._grams[p]

    def lower(self, v: Sequence) -> Form:
        """The 1-form ``g(v, .)``."""
        return Form.covector(list(self.gram @ np.array(v, dtype=self.gram.dtype)))


def _like(metric: Metric) -> str:
    return metric.kind


def inner_gram(metric: Metric, p: int) -> np.ndarray:
    return metric.form_gram(p)


def form_inner(metric: Metric, a: Form, b: Form):
    """Pointwise inner product of two forms of equal degree."""
    if a.degree != b.degree:
        raise ValueError(f"inner product of degree {a.degree} with degree {b.degree}")
    like = _like(metric)
    va, vb = a.to_vector(like), b.to_vector(like)
    return va @ (metric.form_gram(a.degree) @ vb)


def star_matrix(metric: Metric, p: int, orientation: int = 1) -> np.ndarray:
    """Matrix of the Hodge star Lambda^p -> Lambda^(n-p) on coefficient vectors."""
    n = metric.dimension
    raised = metric.form_gram(p)
    src, dst = index_tuples(n, p), index_position(n, n - p)
    out = _linalg.zeros((comb(n, n - p), len(src)), _like(metric))
    s = metric.sqrt_det * orientation
    for k, K in enumerate(src):
        row = dst[complement(K, n)]
        out[row, :] = out[row, :] + raised[k, :] * (complement_sign(K, n) * s)
    return out


def hodge_star(metric: Metric, a: Form, orientation: int = 1) -> Form:
    """Hodge star, defined by ``b ^ *a = <b, a> vol``."""
    n = metric.dimension
    if a.n != n:
        raise ValueError("form and metric dimensions differ")
    like = _like(metric)
    vec = star_matrix(metric, a.degree, orientation) @ a.to_vector(like)
    return Form.from_vector(n, n - a.degree, list(vec))


def wedge_matrix(a: Form, q: int, like: str = "exact") -> np.ndarray:
    """Matrix of ``b -> a ^ b`` from Lambda^q to Lambda^(p+q)."""
    n, p = a.n, a.degree
    src = index_tuples(n, q)
    dst = index_position(n, p + q)
    out = _linalg.zeros((comb(n, p + q), len(src)), like)
    for col, J in enumerate(src):
        for I, c in a._terms.items():
            sign, key = _sort_sign(I + J)
            if sign:
                out[dst[key], col] = out[dst[key], col] + sign * c
    return out


def interior_matrix(v: Sequence, n: int, p: int, like: str = "exact") -> np.ndarray:
    """Matrix of ``b -> i_v b`` from Lambda^p to Lambda^(p-1)."""
    src = index_tuples(n, p)
    dst = index_position(n, p - 1)
    out = _linalg.zeros((comb(n, p - 1), len(src)), like)
    for col, idx in enumerate(src):
        for pos, i in enumerate(idx):
            if v[i] == 0:
                continue
            key = idx[:pos] + idx[pos + 1:]
            out[dst[key], col] = out[dst[key], col] + (v[i] if pos % 2 == 0 else -v[i])
    return out
