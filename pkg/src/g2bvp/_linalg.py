"""Dense linear algebra over the three scalar kinds used in the package.

Matrices are numpy arrays. ``dtype=object`` arrays hold either
:class:`fractions.Fraction` (exact backend) or :class:`mpmath.mpf`
(extended precision, used only by finite-difference oracles); anything
else is treated as float64.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import mpmath
import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix


def kind(a) -> str:
    """Return ``"exact"``, ``"mp"`` or ``"float"`` for an array or scalar."""
    if isinstance(a, np.ndarray):
        if a.dtype != object:
            return "float"
        sample = next(iter(a.flat), Fraction(0))
    else:
        sample = a
    if isinstance(sample, mpmath.mpf):
        return "mp"
    if isinstance(sample, Rational):
        return "exact"
    return "float"


def fraction_array(rows) -> np.ndarray:
    arr = np.array(rows, dtype=object)
    flat = arr.reshape(-1)
    for i, x in enumerate(flat):
        flat[i] = Fraction(x)
    return flat.reshape(arr.shape)


def identity(n: int, like="float") -> np.ndarray:
    if like == "exact":
        return fraction_array(np.eye(n, dtype=int))
    if like == "mp":
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = mpmath.mpf(int(i == j))
        return out
    return np.eye(n)


def zeros(shape, like="float") -> np.ndarray:
    if like == "exact":
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    if like == "mp":
        out = np.empty(shape, dtype=object)
        out.fill(mpmath.mpf(0))
        return out
    return np.zeros(shape)


def _to_domain(a: np.ndarray) -> DomainMatrix:
    rows = [[QQ(int(x.numerator), int(x.denominator)) for x in row] for row in a]
    return DomainMatrix(rows, a.shape, QQ)


def _from_domain(dm: DomainMatrix) -> np.ndarray:
    rows = dm.to_list()
    return fraction_array([[Fraction(int(x.numerator), int(x.denominator)) for x in r] for r in rows]) \
        if rows else np.empty(dm.shape, dtype=object)


def _to_mp(a: np.ndarray) -> mpmath.matrix:
    return mpmath.matrix(a.tolist())


def _from_mp(m: mpmath.matrix) -> np.ndarray:
    out = np.empty((m.rows, m.cols), dtype=object)
    for i in range(m.rows):
        for j in range(m.cols):
            out[i, j] = m[i, j]
    return out


def inv(a: np.ndarray) -> np.ndarray:
    k = kind(a)
    if k == "exact":
        return _from_domain(_to_domain(a).inv())
    if k == "mp":
        return _from_mp(mpmath.inverse(_to_mp(a)))
    return np.linalg.inv(a)


def det(a: np.ndarray):
    k = kind(a)
    if k == "exact":
        d = _to_domain(a).det()
        return Fraction(int(d.numerator), int(d.denominator))
    if k == "mp":
        return mpmath.det(_to_mp(a))
    return float(np.linalg.det(a))


def rank(a: np.ndarray, tol: float = 1e-10) -> int:
    if kind(a) == "exact":
        return _to_domain(a).rank()
    a = np.asarray(a, dtype=float)
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = kind(a)
    if k == "exact":
        return _from_domain(_to_domain(a).inv()) @ b
    if k == "mp":
        return inv(a) @ b
    return np.linalg.solve(a, b)


def ldl_pivots(a: np.ndarray) -> list:
    """Pivots of a symmetric elimination with diagonal pivoting.

    A symmetric matrix is positive definite iff every pivot produced here is
    strictly positive. Elimination stops at the first non-positive pivot,
    which is returned as the last entry.
    """
    a = np.array(a, dtype=object if a.dtype == object else float, copy=True)
    n = a.shape[0]
    order = list(range(n))
    pivots = []
    for step in range(n):
        rest = order[step:]
        best = max(rest, key=lambda i: a[i, i])
        pos = order.index(best)
        order[step], order[pos] = order[pos], order[step]
        p = a[best, best]
        pivots.append(p)
        if not p > 0:
            break
        for i in order[step + 1:]:
            f = a[i, best] / p
            for j in order[step + 1:]:
                a[i, j] = a[i, j] - f * a[best, j]
    return pivots


def is_positive_definite(a: np.ndarray) -> bool:
    if kind(a) == "float":
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            return False
    elif np.any(a != a.T):
        return False
    piv = ldl_pivots(a)
    return len(piv) == a.shape[0] and all(p > 0 for p in piv)


def _int_root(x: int, n: int) -> int | None:
    if x < 0:
        return None
    r = int(round(x ** (1.0 / n))) if x < 2 ** 1000 else int(mpmath.floor(mpmath.root(x, n)))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** n == x:
            return c
    lo, hi = 0, 1
    while hi ** n < x:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** n < x:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** n == x else None


def nth_root(x, n: int):
    """Positive real n-th root; exact for rationals that are perfect powers.

    Raises ``ValueError`` when an exact root is requested but irrational.
    """
    k = kind(x)
    if k == "exact":
        x = Fraction(x)
        num, den = _int_root(x.numerator, n), _int_root(x.denominator, n)
        if num is None or den is None:
            raise ValueError(f"{x} has no rational {n}-th root; use the float backend")
        return Fraction(num, den)
    if k == "mp":
        return mpmath.root(x, n)
    return float(x) ** (1.0 / n)


def to_float(a) -> np.ndarray:
    return np.array(a, dtype=float)
