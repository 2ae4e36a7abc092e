"""Principal symbol of the boundary operator a -> d*_6 chi6(a) on C^3.

Boundary 1-forms use the coordinate order x1, y1, x2, y2, x3, y3. The symbol
at a covector xi is obtained by replacing each derivative d/dx_j with
sqrt(-1) xi_j; with the flat convention d* = -sum_j i_{e_j} d/dx_j this gives
``Sigma(xi) = -sqrt(-1) R(xi)`` where ``R(xi) a = i_xi chi6(a)`` is real and
antisymmetric. Sigma is therefore Hermitian.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import sympy as sp
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

from .exterior import Form, interior

M = 6
X1, Y1, X2, Y2, X3, Y3 = range(6)
_LAM = sp.Symbol("lambda")


def _e(*idx) -> Form:
    return Form.basis(M, idx)


def chi6_formula(a: Form) -> Form:
    """chi6 on the flat boundary, from the closed form

    ``sum_cyclic mu_i (dy_j dy_k - dx_j dx_k) + lambda_i (dy_j dx_k + dx_j dy_k)``
    where ``a = sum lambda_i dy_i + mu_i dx_i``.
    """
    if a.degree != 1 or a.n != M:
        raise ValueError("chi6_formula expects a 1-form on the 6-dimensional boundary")
    out = Form.zero(M, 2)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
        mu, lam = a[(2 * i,)], a[(2 * i + 1,)]
        out = out + (_e(yj, yk) - _e(xj, xk)) * mu + (_e(yj, xk) + _e(xj, yk)) * lam
    return out


@lru_cache(maxsize=None)
def _contraction_tensor():
    """R[j][r][c]: coefficient of e^r in i_{e_j} chi6(e^c)."""
    images = [chi6_formula(_e(c)) for c in range(M)]
    out = []
    for j in range(M):
        v = [Fraction(0)] * M
        v[j] = Fraction(1)
        cols = [interior(v, img).to_vector() for img in images]
        out.append([[cols[c][r] for c in range(M)] for r in range(M)])
    return out


def contraction_matrix(xi: Sequence) -> sp.Matrix:
    """Real 6 x 6 matrix of ``a -> i_xi chi6(a)``."""
    xi = _as_covector(xi)
    tensor = _contraction_tensor()
    return sp.Matrix(M, M, lambda r, c: sum(
        (sp.Rational(x.numerator, x.denominator) * tensor[j][r][c] for j, x in enumerate(xi) if x),
        sp.Integer(0)))


def _as_covector(xi) -> tuple:
    if isinstance(xi, Form):
        if xi.degree != 1 or xi.n != M:
            raise ValueError("xi must be a boundary covector")
        xi = [xi[(i,)] for i in range(M)]
    xi = tuple(Fraction(x) for x in xi)
    if len(xi) != M:
        raise ValueError(f"xi must have {M} components")
    if not any(xi):
        raise ValueError("the symbol is defined only at a nonzero covector")
    return xi


def _norm2(xi: tuple) -> Fraction:
    return sum((x * x for x in xi), Fraction(0))


def _sympy_norm(xi: tuple):
    n2 = _norm2(xi)
    return sp.sqrt(sp.Rational(n2.numerator, n2.denominator))


@dataclass(frozen=True)
class SymbolMatrix:
    """Exact symbol data at one covector."""

    xi: tuple
    matrix: sp.Matrix
    char_poly: tuple
    eigen: dict

    @property
    def norm(self):
        return _sympy_norm(self.xi)

    def eigenvalues(self) -> list:
        """Eigenvalues repeated by multiplicity, ascending."""
        out = []
        for val, mult in sorted(self.eigen.items(), key=lambda kv: float(kv[0])):
            out.extend([val] * mult)
        return out

    def to_json(self) -> dict:
        mins = min(abs(v) for v in self.eigen)
        return {
            "xi": [[x.numerator, x.denominator] for x in self.xi],
            "matrix": [[_complex_json(self.matrix[r, c]) for c in range(M)] for r in range(M)],
            "char_poly": [str(c) for c in self.char_poly],
            "eigenvalues": [{"value": str(v), "multiplicity": m}
                            for v, m in sorted(self.eigen.items(), key=lambda kv: float(kv[0]))],
            "min_abs_eig": str(mins),
            "max_abs_eig": str(max(abs(v) for v in self.eigen)),
        }


def _complex_json(z) -> list:
    re, im = sp.re(z), sp.im(z)
    return [str(re), str(im)]


def _charpoly(matrix: sp.Matrix) -> tuple:
    if all(x.is_rational or (sp.re(x).is_rational and sp.im(x).is_rational) for x in matrix):
        dm = DomainMatrix.from_Matrix(matrix).convert_to(QQ_I)
        return tuple(QQ_I.to_sympy(c) for c in dm.charpoly())
    return tuple(sp.Poly(matrix.charpoly(_LAM).as_expr(), _LAM).all_coeffs())


def _roots(coeffs: tuple) -> dict:
    poly = sp.Poly(list(coeffs), _LAM)
    roots = sp.roots(poly)
    if sum(roots.values()) != poly.degree():
        raise ArithmeticError("characteristic polynomial did not factor exactly")
    return {sp.nsimplify(r) if r.is_rational else sp.simplify(r): m for r, m in roots.items()}


def sigma(xi) -> SymbolMatrix:
    """Symbol of ``a -> d*_6 chi6(a)`` at ``xi``; eigenvalues 0, +|xi|, -|xi|, each twice."""
    xi = _as_covector(xi)
    matrix = -sp.I * contraction_matrix(xi)
    coeffs = _charpoly(matrix)
    return SymbolMatrix(xi, matrix, coeffs, _roots(coeffs))


def p_tilde_symbol(xi) -> SymbolMatrix:
    """Symbol ``2|xi| I - Sigma(xi)`` of ``2 Delta^(1/2) - d*_6 chi6``.

    The eigenvalues are ``2|xi| - s`` for the eigenvalues ``s`` of Sigma,
    i.e. |xi| times 1, 2, 3 with multiplicity two each.
    """
    s = sigma(xi)
    n = s.norm
    matrix = 2 * n * sp.eye(M) - s.matrix
    coeffs = _charpoly(matrix)
    shifted = {}
    for v, m in s.eigen.items():
        key = sp.simplify(2 * n - v)
        shifted[key] = shifted.get(key, 0) + m
    # the shifted spectrum must agree with the roots of the shifted polynomial
    check = sp.expand(sp.prod([(_LAM - v) ** m for v, m in shifted.items()]))
    if sp.expand(sp.Poly(list(coeffs), _LAM).as_expr() - check) != 0:
        raise ArithmeticError("shifted spectrum disagrees with the characteristic polynomial")
    return SymbolMatrix(s.xi, matrix, coeffs, shifted)


def random_unit_covector(rng: random.Random, height: int = 12) -> tuple:
    """Rational point on the unit 5-sphere by inverse stereographic projection."""
    while True:
        u = [Fraction(rng.randint(-height, height), rng.randint(1, height)) for _ in range(M - 1)]
        n2 = sum(x * x for x in u)
        xi = tuple([2 * x / (n2 + 1) for x in u] + [(n2 - 1) / (n2 + 1)])
        if any(xi):
            order = list(range(M))
            rng.shuffle(order)
            return tuple(xi[i] for i in order)


CANONICAL = (Fraction(1),) + (Fraction(0),) * 5

TRANSITIVITY_NOTE = (
    "SU(3) preserves omega, rho and the flat metric on the boundary, so it commutes "
    "with chi6 and d*; it acts transitively on the unit sphere in R^6, hence the "
    "spectrum of Sigma at every unit covector equals the spectrum at dx1."
)


def modulus_bound_certificate(samples: int = 100, seed: int = 0, bound: int = 2) -> dict:
    """Certify ``max |eig Sigma(xi)| = 1 < bound`` at dx1 and at rational unit samples."""
    rng = random.Random(seed)
    points = [CANONICAL] + [random_unit_covector(rng) for _ in range(samples)]
    entries = []
    max_mod = sp.Integer(0)
    min_ptilde = None
    for xi in points:
        s = sigma(xi)
        p = p_tilde_symbol(xi)
        rec = s.to_json()
        rec["p_tilde_eigenvalues"] = p.to_json()["eigenvalues"]
        rec["p_tilde_min_abs_eig"] = p.to_json()["min_abs_eig"]
        entries.append(rec)
        max_mod = max(max_mod, max(abs(v) for v in s.eigen))
        m = min(abs(v) for v in p.eigen)
        min_ptilde = m if min_ptilde is None else min(min_ptilde, m)
    return {
        "samples": entries,
        "sample_count": samples,
        "seed": seed,
        "max_abs_eig": str(max_mod),
        "min_abs_p_tilde_eig": str(min_ptilde),
        "bound": bound,
        "bound_satisfied": bool(max_mod < bound),
        "argument": TRANSITIVITY_NOTE,
    }
