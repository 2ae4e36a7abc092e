"""Verification suites shared by the command line front end.

Each check yields a :class:`Verdict`. A verdict passes when the measured
defect is at most its tolerance, so exact checks use tolerance 0 and report
an integer mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .exterior import Form, index_tuples, wedge
from .g2 import PHI_STD, chi, project2, standard_frame, standard_point, standard_point_float
from .modes import (
    TORUS_T6,
    predict_slab_kernel,
    spectrum_report,
    symmetry_defects,
)
from .slab import SlabField, boundary_one_form, boundary_pairing, green_formula_check
from .symbol import modulus_bound_certificate, sigma
from .torus import (
    TorusField,
    linearization_errors,
    one_form_identities,
    sup_norm_d,
    two_form_identities,
)
from .variation import (
    DEFAULT_STEPS,
    first_variation_errors,
    observed_orders,
    random_three_form,
    theta_linearization_errors,
)

SUITES = ("all", "algebra", "spectral")


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check."""

    id: str
    anchor: str
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.tolerance)

    def to_json(self) -> dict:
        return {"id": self.id, "anchor": self.anchor, "measured": float(self.measured),
                "tolerance": float(self.tolerance), "pass": self.passed}


# default tolerances, keyed by check id
TOLERANCES = {
    "symbol.eigenvalues": 0.0,
    "symbol.p_tilde_min": 0.0,
    "algebra.ranks": 0.0,
    "algebra.eigen_identities": 0.0,
    "algebra.chi_norm": 0.0,
    "variation.order": 0.0,
    "variation.final_error": 1e-6,
    "torus.two_form_identities": 1e-11,
    "torus.one_form_identities": 1e-11,
    "torus.linearization": 1e-3,
    "torus.linearization_order": 0.0,
    "slab.symmetry": 1e-10,
    "slab.kernel_dim": 0.0,
    "slab.positive_count": 0.0,
    "slab.theta_block": 1e-3,
    "slab.kernel_dstar": 1e-6,
    "slab.green": 1e-7,
    "slab.pairing_symmetry": 1e-12,
    "slab.prediction": 0.0,
}

ANCHORS = {
    "symbol.eigenvalues": "eigenvalues 0, +-1",
    "symbol.p_tilde_min": "the symbol of P~ is invertible",
    "algebra.ranks": "Lambda^2 = Lambda^2_7 + Lambda^2_14, Lambda^3 = Lambda^3_1 + Lambda^3_7 + Lambda^3_27",
    "algebra.eigen_identities": "alpha ^ alpha ^ phi = 2|alpha|^2 vol on Lambda^2_7, -|alpha|^2 vol on Lambda^2_14",
    "algebra.chi_norm": "|chi(eta)|^2 = 4|eta|^2",
    "variation.order": "dV = 1/3 int delta ^ Theta; dTheta = *S(delta)",
    "variation.final_error": "dV = 1/3 int delta ^ Theta; dTheta = *S(delta)",
    "torus.two_form_identities": "d1 vanishes on Omega^2_14; d7 = 1/4 chi d* on Omega^2_14, -1/2 chi d* on Omega^2_7",
    "torus.one_form_identities": "d*d14 = 2 d*d7 = 2/3 d*d on Omega^1",
    "torus.linearization": "W(alpha) = *dTheta(phi + d alpha), derivative -L(alpha) with d* = -*d* on 3-forms",
    "torus.linearization_order": "W(alpha) = *dTheta(phi + d alpha)",
    "slab.symmetry": "self-adjoint elliptic boundary value problem",
    "slab.kernel_dim": "For this phi on M_L we have H_phi = 0",
    "slab.positive_count": "there are only finitely many positive eigenvalues",
    "slab.theta_block": "Delta alpha = rho, alpha||_8 = 0, d*alpha|_dM = 0",
    "slab.kernel_dstar": "any solution mu satisfies d*mu = 0",
    "slab.green": "<L a14, b14> = <a14, b14>_Q + <a14||_6, b14||_6>_d",
    "slab.pairing_symmetry": "<,>_d is symmetric",
    "slab.prediction": "E: K_phi -> H_phi is an isomorphism",
}


class _Collector:
    def __init__(self, overrides: dict):
        self.overrides = overrides
        self.out: list[Verdict] = []

    def add(self, cid: str, measured: float):
        tol = self.overrides.get(cid, TOLERANCES[cid])
        self.out.append(Verdict(cid, ANCHORS[cid], float(measured), float(tol)))


def algebra_checks(backend: str = "exact", seed: int = 0, samples: int = 100,
                   overrides: dict | None = None) -> list[Verdict]:
    """Exact algebraic identities (or their float counterparts on the float backend)."""
    c = _Collector(dict(overrides or {}))
    exact = backend == "exact"
    g = standard_point() if exact else standard_point_float()
    if not exact:
        # a float backend cannot produce exact zeros; allow rounding
        for cid in ("algebra.ranks", "algebra.eigen_identities", "algebra.chi_norm"):
            c.overrides.setdefault(cid, 1e-12)

    c.add("symbol.eigenvalues", int(sigma([1, 0, 0, 0, 0, 0]).eigenvalues() != [-1, -1, 0, 0, 1, 1]))
    cert = modulus_bound_certificate(samples=samples, seed=seed)
    c.add("symbol.p_tilde_min", int(cert["min_abs_p_tilde_eig"] != "1") + int(not cert["bound_satisfied"]))

    traces = [sum(getattr(g, name)[i, i] for i in range(len(getattr(g, name))))
              for name in ("proj2_7", "proj2_14", "proj3_1", "proj3_7", "proj3_27")]
    c.add("algebra.ranks", max(abs(float(t) - r) for t, r in zip(traces, (7, 14, 1, 7, 27))))

    top = tuple(range(7))
    phi = PHI_STD if exact else PHI_STD.as_float()
    worst = 0.0
    for idx in index_tuples(7, 2):
        e = Form.basis(7, idx) if exact else Form.basis(7, idx, 1.0)
        a7, a14 = project2(g, e)
        worst = max(worst,
                    abs(float(wedge(wedge(a7, a7), phi)[top] - 2 * g.inner(a7, a7) * g.vol[top])),
                    abs(float(wedge(wedge(a14, a14), phi)[top] + g.inner(a14, a14) * g.vol[top])))
    c.add("algebra.eigen_identities", worst)

    worst = 0.0
    for i in range(7):
        eta = Form.basis(7, (i,)) if exact else Form.basis(7, (i,), 1.0)
        x = chi(g, eta)
        worst = max(worst, abs(float(g.inner(x, x) - 4 * g.inner(eta, eta))))
    c.add("algebra.chi_norm", worst)

    delta = random_three_form(seed + 3)
    e1 = first_variation_errors(delta, DEFAULT_STEPS)
    e2 = theta_linearization_errors(delta, DEFAULT_STEPS)
    orders = np.concatenate([observed_orders(e1), observed_orders(e2)])
    c.add("variation.order", max(0.0, 1.99 - float(orders.min())))
    c.add("variation.final_error", max(e1[-1], e2[-1]))
    return c.out


def spectral_checks(length: float = 1.0, K: int = 3, n_t: int = 100, seed: int = 0,
                    overrides: dict | None = None, pairs: int = 10, fields: int = 20) -> list[Verdict]:
    """Floating-point suites on the torus and the slab."""
    c = _Collector(dict(overrides or {}))

    worst2 = worst1 = 0.0
    for s in range(seed, seed + fields):
        r = two_form_identities(TorusField.random(2, s))
        worst2 = max(worst2, r.d1_on_14, r.d7_on_14, r.d7_on_7)
        q = one_form_identities(TorusField.random(1, 100 + s))
        worst1 = max(worst1, q.third, q.double)
    c.add("torus.two_form_identities", worst2)
    c.add("torus.one_form_identities", worst1)

    alpha = TorusField.random(2, seed + 5, n_modes=3, K=1, active=(0, 3, 6))
    alpha = alpha * (1 / sup_norm_d(alpha))
    errs = linearization_errors(alpha, sign=-1)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    c.add("torus.linearization", errs[-1])
    c.add("torus.linearization_order", max(0.0, 0.95 - float(orders.min())))

    c.add("slab.symmetry", float(symmetry_defects(K, length, n_t).max()))
    rep = spectrum_report(length, K, n_t)
    c.add("slab.kernel_dim", abs(rep.kernel_dim - 6))
    c.add("slab.positive_count", rep.positive_count)
    c.add("slab.theta_block", rep.theta_error)
    c.add("slab.kernel_dstar", rep.kernel.dstar_residual)

    green = sym = 0.0
    top = standard_frame(top=True, exact=False)
    for s in range(seed, seed + pairs):
        a = SlabField.random(s, length=length)
        b = SlabField.random(s + 1000, length=length, modes=a.mode_keys())
        green = max(green, green_formula_check(a, b).residual)
        ua, ub = boundary_one_form(a, True), boundary_one_form(b, True)
        ab, ba = boundary_pairing(top, ua, ub), boundary_pairing(top, ub, ua)
        sym = max(sym, abs(ab - ba) / max(abs(ab), 1.0))
    c.add("slab.green", green)
    c.add("slab.pairing_symmetry", sym)

    pred = predict_slab_kernel(TORUS_T6)
    c.add("slab.prediction", abs(rep.kernel_dim - (pred["dim_H_phi"] + pred["relative_cohomology"])))
    return c.out


def run_suites(suite: str = "all", backend: str = "exact", length: float = 1.0, K: int = 3, n_t: int = 100,
               seed: int = 0, samples: int = 100, overrides: dict | None = None) -> list[Verdict]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    out = []
    if suite in ("all", "algebra"):
        out += algebra_checks(backend, seed, samples, overrides)
    if suite in ("all", "spectral"):
        out += spectral_checks(length, K, n_t, seed, overrides)
    return out
