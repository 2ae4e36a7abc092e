"""Acceptance criteria, one test each, at the contract tolerances.

Every test records a PASS/FAIL line that is also printed in the pytest
terminal summary.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from g2bvp.exterior import Form, index_tuples, wedge
from g2bvp.g2 import PHI_STD, chi, induce, project2
from g2bvp.modes import (
    TORUS_T6,
    assemble_mode,
    ball_modes,
    predict_slab_kernel,
    spectrum_report,
    total_kernel,
)
from g2bvp.slab import SlabField, boundary_one_form, boundary_pairing, green_formula_check
from g2bvp.g2 import standard_frame
from g2bvp.symbol import modulus_bound_certificate, sigma
from g2bvp.torus import (
    TorusField,
    linearization_errors,
    one_form_identities,
    sup_norm_d,
    two_form_identities,
)
from g2bvp.variation import (
    DEFAULT_STEPS,
    first_variation_errors,
    observed_orders,
    random_three_form,
    theta_linearization_errors,
)

TOP = tuple(range(7))


@pytest.fixture(scope="module")
def exact_point():
    return induce(PHI_STD)


def test_criterion_1_symbol_certificate(record_criterion):
    start = time.perf_counter()
    eig = sigma([1, 0, 0, 0, 0, 0]).eigenvalues()
    cert = modulus_bound_certificate(samples=100, seed=0)
    elapsed = time.perf_counter() - start
    ok = (eig == [-1, -1, 0, 0, 1, 1] and cert["min_abs_p_tilde_eig"] == "1"
          and cert["sample_count"] == 100 and elapsed < 5)
    record_criterion(1, "symbol eigenvalues at dx1 and min |eig P~| = 1 on 100 unit covectors", ok,
                     f"eig {[str(x) for x in eig]}, min |eig P~| {cert['min_abs_p_tilde_eig']}, {elapsed:.2f}s < 5s")
    assert ok


def test_criterion_2_type_decompositions(record_criterion):
    start = time.perf_counter()
    g = induce(PHI_STD)
    ranks = {}
    for name, expected in (("proj2_7", 7), ("proj2_14", 14), ("proj3_1", 1), ("proj3_7", 7), ("proj3_27", 27)):
        p = getattr(g, name)
        assert np.all(p @ p == p)
        ranks[name] = (sum(p[i, i] for i in range(len(p))), expected)
    identities = True
    for idx in index_tuples(7, 2):
        a7, a14 = project2(g, Form.basis(7, idx))
        identities &= wedge(wedge(a7, a7), PHI_STD)[TOP] == 2 * g.inner(a7, a7) * g.vol[TOP]
        identities &= wedge(wedge(a14, a14), PHI_STD)[TOP] == -g.inner(a14, a14) * g.vol[TOP]
    elapsed = time.perf_counter() - start
    ok = all(r == e for r, e in ranks.values()) and bool(identities) and elapsed < 5
    record_criterion(2, "projector ranks 7/14 and 1/7/27, quadratic identities on all basis 2-forms", ok,
                     f"ranks {[int(r) for r, _ in ranks.values()]}, identities exact {bool(identities)}, "
                     f"{elapsed:.2f}s < 5s")
    assert ok


def test_criterion_3_chi_normalisation(record_criterion, exact_point):
    g = exact_point
    defects = []
    for i in range(7):
        eta = Form.basis(7, (i,))
        x = chi(g, eta)
        defects.append(g.inner(x, x) - 4 * g.inner(eta, eta))
    ok = all(d == 0 for d in defects)
    record_criterion(3, "|chi(eta)|^2 = 4|eta|^2 on every basis covector", ok,
                     f"max exact defect {max(abs(Fraction(d)) for d in defects)}")
    assert ok


def test_criterion_4_derivative_formulas(record_criterion):
    delta = random_three_form(3)
    e1 = first_variation_errors(delta, DEFAULT_STEPS)
    e2 = theta_linearization_errors(delta, DEFAULT_STEPS)
    o1, o2 = observed_orders(e1), observed_orders(e2)
    ok = o1.min() >= 2 and o2.min() >= 2 and max(e1[-1], e2[-1]) <= 1e-6
    record_criterion(4, "first variation of vol and linearised Theta against central differences", ok,
                     f"h from {float(DEFAULT_STEPS[0]):.0e} to {float(DEFAULT_STEPS[-1]):.1e}, min orders "
                     f"{o1.min():.6f}/{o2.min():.6f} >= 2, final errors {e1[-1]:.1e}/{e2[-1]:.1e} <= 1e-6")
    assert ok


def test_criterion_5_first_order_identities(record_criterion):
    start = time.perf_counter()
    two = [two_form_identities(TorusField.random(2, s)) for s in range(20)]
    one = [one_form_identities(TorusField.random(1, 100 + s)) for s in range(20)]
    elapsed = time.perf_counter() - start
    worst = {
        "d1 on 14": max(r.d1_on_14 for r in two),
        "d7 on 14": max(r.d7_on_14 for r in two),
        "d7 on 7": max(r.d7_on_7 for r in two),
        "one-forms": max(max(r.third, r.double) for r in one),
    }
    ok = max(worst.values()) <= 1e-11 and elapsed < 30
    record_criterion(5, "three first-order identities on 20 random fields each", ok,
                     ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" <= 1e-11, {elapsed:.2f}s < 30s")
    assert ok


@pytest.fixture(scope="module")
def torsion_alpha():
    a = TorusField.random(2, 5, n_modes=3, K=1, active=(0, 3, 6))
    return a * (1 / sup_norm_d(a))


@pytest.mark.xfail(strict=True, reason="W(t alpha)/t tends to -L(alpha): with d* = -*d* on 3-forms in "
                                       "dimension 7 the torsion residual linearises to -L, so the literal "
                                       "comparison with +L cannot reach 1e-3")
def test_criterion_6_torsion_linearisation_literal(record_criterion, torsion_alpha):
    errs = linearization_errors(torsion_alpha, sign=1)
    ok = errs[-1] <= 1e-3
    record_criterion(6, "|W(t alpha)/t - L(alpha)| / |L(alpha)| <= 1e-3 at t = 2.5e-3 (literal sign)", ok,
                     f"errors {[f'{e:.3f}' for e in errs]}")
    assert ok


def test_criterion_6_torsion_linearisation_sign_corrected(record_criterion, torsion_alpha):
    errs = linearization_errors(torsion_alpha, sign=-1)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = errs[-1] <= 1e-3 and orders.min() >= 0.95
    record_criterion("6 (companion)", "|W(t alpha)/t + L(alpha)| / |L(alpha)| at t = 2.5e-3 with O(t) decay",
                     ok, f"errors {[f'{e:.2e}' for e in errs]}, orders {[f'{o:.3f}' for o in orders]}")
    assert ok


def test_criterion_7_self_adjointness(record_criterion):
    modes = ball_modes(3)
    defects = np.array([assemble_mode(k, 1.0, 100).symmetry_defect() for k in modes])
    ok = defects.max() <= 1e-10
    record_criterion(7, "weighted symmetry of every mode operator with |k| <= 3 at n_t = 100", ok,
                     f"{len(modes)} modes, max defect {defects.max():.1e} <= 1e-10")
    assert ok


def test_criterion_8_slab_spectrum(record_criterion):
    start = time.perf_counter()
    rows, ok = [], True
    for L in (0.5, 1.0, 2.0, 4.0):
        rep = spectrum_report(L, 3, 200)
        doubled = total_kernel(L, 3, 400).dimension
        good = (rep.positive_count == 0 and rep.kernel_dim == 6 and rep.theta_error <= 1e-3 and doubled == 6)
        ok &= good
        rows.append(f"L={L}: positive {rep.positive_count}, kernel {rep.kernel_dim}/{doubled}, "
                    f"theta err {rep.theta_error:.1e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    record_criterion(8, "slab spectrum for L in {1/2, 1, 2, 4}, K = 3, n_t = 200 (and 400)", ok,
                     "; ".join(rows) + f"; {elapsed:.1f}s < 120s")
    assert ok


def test_criterion_9_green_formula(record_criterion):
    top = standard_frame(top=True, exact=False)
    bottom = standard_frame(top=False, exact=False)
    residuals, sym = [], 0.0
    for s in range(10):
        a = SlabField.random(s, length=1.0)
        b = SlabField.random(s + 1000, length=1.0, modes=a.mode_keys())
        residuals.append(green_formula_check(a, b).residual)
        for face, frame in ((True, top), (False, bottom)):
            ua, ub = boundary_one_form(a, face), boundary_one_form(b, face)
            ab, ba = boundary_pairing(frame, ua, ub), boundary_pairing(frame, ub, ua)
            sym = max(sym, abs(ab - ba) / max(abs(ab), 1.0))
    ok = max(residuals) <= 1e-7 and sym <= 1e-12
    record_criterion(9, "Green formula on 10 slab field pairs and symmetry of the boundary pairing", ok,
                     f"max residual {max(residuals):.1e} <= 1e-7, symmetry defect {sym:.1e} <= 1e-12")
    assert ok


def test_criterion_10_cohomological_consistency(record_criterion):
    pred = predict_slab_kernel(TORUS_T6)
    kern = total_kernel(1.0, 3, 100)
    ok = (pred["dim_K_phi"] == 0 and pred["dim_H_phi"] == 0
          and kern.dimension == pred["relative_cohomology"] == 6 and kern.by_mode == {0: 6})
    record_criterion(10, "predicted K_phi = H_phi = 0 and the discrete kernel is the 6 relative classes", ok,
                     f"K_phi {pred['dim_K_phi']}, H_phi {pred['dim_H_phi']}, kernel {kern.dimension} "
                     f"(all at k = 0), relative cohomology {pred['relative_cohomology']}")
    assert ok
