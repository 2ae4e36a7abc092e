"""Finite-difference oracles for the first and second variation of vol and Theta.

Differences are taken in extended precision (mpmath) so that rounding does
not pollute the truncation error at the smallest steps.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .exterior import Form, _to_mpf, wedge
from .g2 import PHI_STD, G2Point, dtheta_linearized, standard_point, theta, volume_scalar

DEFAULT_STEPS = tuple(Fraction(1, 100) / 2 ** j for j in range(11))


def random_three_form(seed: int, denominator: int = 8) -> Form:
    rng = random.Random(seed)
    return Form.from_vector(7, 3, [Fraction(rng.randint(-denominator, denominator), denominator)
                                   for _ in range(35)])


def _norm(form: Form):
    return mpmath.sqrt(sum(c * c for c in form.terms.values()))


def first_variation_errors(delta: Form, steps: Sequence = DEFAULT_STEPS, dps: int = 40,
                           point: G2Point | None = None) -> list[float]:
    """Relative error of the central difference of vol against ``delta ^ Theta / 3``."""
    g = point or standard_point()
    top = tuple(range(7))
    out = []
    with mpmath.workdps(dps):
        exact = _to_mpf(wedge(delta, g.theta)[top]) / 3
        phi, d = g.phi.as_mp(), delta.as_mp()
        for h in steps:
            h = _to_mpf(h)
            fd = (volume_scalar(phi + d * h) - volume_scalar(phi - d * h)) / (2 * h)
            out.append(float(abs(fd - exact) / abs(exact)))
    return out


def theta_linearization_errors(delta: Form, steps: Sequence = DEFAULT_STEPS, dps: int = 40,
                               point: G2Point | None = None) -> list[float]:
    """Relative error of the central difference of Theta against ``*S(delta)``."""
    g = point or standard_point()
    out = []
    with mpmath.workdps(dps):
        lin = dtheta_linearized(g, delta).as_mp()
        scale = _norm(lin)
        phi, d = g.phi.as_mp(), delta.as_mp()
        for h in steps:
            h = _to_mpf(h)
            fd = (theta(phi + d * h) - theta(phi - d * h)) / (2 * h)
            out.append(float(_norm(fd - lin) / scale))
    return out


def second_difference(delta: Form, h, dps: int = 40) -> float:
    """``(vol(phi+h delta) + vol(phi-h delta) - 2 vol(phi)) / h^2`` at the standard point."""
    with mpmath.workdps(dps):
        phi, d = PHI_STD.as_mp(), delta.as_mp()
        h = _to_mpf(h)
        val = (volume_scalar(phi + d * h) + volume_scalar(phi - d * h) - 2 * volume_scalar(phi)) / h ** 2
        return float(val)


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """log_ratio of successive error quotients."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)
