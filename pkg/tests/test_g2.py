import random
from fractions import Fraction

import numpy as np
import pytest

from g2bvp import _linalg
from g2bvp.exterior import Form, compound, index_tuples, interior, wedge
from g2bvp.g2 import (
    DT,
    OMEGA,
    PHI_STD,
    RE_OMEGA3,
    NotPositiveError,
    boundary_frame,
    chi,
    chi6,
    dtheta_linearized,
    induce,
    is_positive,
    project2,
    project3,
    pullback,
    split14_boundary,
    standard_frame,
    standard_point,
    standard_point_float,
    vol_q,
)
from g2bvp.variation import (
    first_variation_errors,
    observed_orders,
    random_three_form,
    second_difference,
    theta_linearization_errors,
)

N = 7
TOP = tuple(range(7))
X1, Y1, X2, Y2, X3, Y3, T = range(7)


def e(*idx):
    return Form.basis(N, idx)


def unit(i):
    v = [Fraction(0)] * N
    v[i] = Fraction(1)
    return v


@pytest.fixture(scope="module")
def g():
    return standard_point()


@pytest.fixture(scope="module")
def top():
    return standard_frame(top=True)


def rational_matrix(rng, spread=Fraction(1, 4)):
    a = np.empty((N, N), dtype=object)
    for i in range(N):
        for j in range(N):
            a[i, j] = Fraction(int(i == j)) + spread * Fraction(rng.randint(-4, 4), 4)
    return a


class TestPositivity:
    def test_standard(self):
        ok, gram = is_positive(PHI_STD)
        assert ok
        assert np.all(gram == 6 * _linalg.identity(N, "exact"))

    def test_negated(self):
        ok, gram = is_positive(-PHI_STD)
        assert not ok
        assert np.all(gram == -6 * _linalg.identity(N, "exact"))

    def test_stretched(self):
        a = np.diag([Fraction(2)] + [Fraction(1)] * 6)
        assert is_positive(pullback(PHI_STD, a))[0]

    def test_induce_rejects_with_witness(self):
        with pytest.raises(NotPositiveError) as info:
            induce(-PHI_STD)
        assert info.value.gram[0, 0] == -6

    def test_degenerate_form(self):
        assert not is_positive(e(0, 1, 2))[0]


class TestInduce:
    def test_metric_is_identity(self, g):
        assert np.all(g.metric.gram == _linalg.identity(N, "exact"))
        assert g.vol == e(*TOP)
        assert g.inner(g.phi, g.phi) == 7

    def test_theta_closed_form(self, g):
        assert g.theta == wedge(OMEGA, OMEGA) / 2 - wedge(RE_OMEGA3, DT)

    def test_ranks(self, g):
        assert [_linalg.rank(p) for p in (g.proj2_7, g.proj2_14)] == [7, 14]
        assert [_linalg.rank(p) for p in (g.proj3_1, g.proj3_7, g.proj3_27)] == [1, 7, 27]

    def test_resolution_of_identity(self, g):
        assert np.all(g.proj2_7 + g.proj2_14 == _linalg.identity(21, "exact"))
        assert np.all(g.proj3_1 + g.proj3_7 + g.proj3_27 == _linalg.identity(35, "exact"))

    @pytest.mark.parametrize("name", ["proj2_7", "proj2_14", "proj3_1", "proj3_7", "proj3_27"])
    def test_idempotent_symmetric(self, g, name):
        p = getattr(g, name)
        assert np.all(p @ p == p)
        assert np.all(p == p.T)

    def test_mutually_annihilating(self, g):
        ps = [g.proj3_1, g.proj3_7, g.proj3_27]
        for i in range(3):
            for j in range(3):
                if i != j:
                    assert not np.any(ps[i] @ ps[j])

    def test_smap_spectrum(self, g):
        s = g.smap.astype(float)
        ev = np.round(np.linalg.eigvalsh(s), 10)
        vals, counts = np.unique(ev, return_counts=True)
        assert dict(zip(vals.tolist(), counts.tolist())) == {-1.0: 27, 1.0: 7, round(4 / 3, 10): 1}

    def test_stretched_metric_exact(self):
        a = np.diag([Fraction(2)] + [Fraction(1)] * 6)
        h = induce(pullback(PHI_STD, a))
        assert h.metric.gram[0, 0] == 4
        assert h.metric.sqrt_det == 2
        assert h.inner(h.phi, h.phi) == 7

    def test_float_backend(self, g):
        f = standard_point_float()
        assert np.allclose(f.proj3_27, g.proj3_27.astype(float), atol=1e-12)
        assert np.allclose(f.theta.to_vector("float"), g.theta.to_vector("float"), atol=1e-12)

    def test_json(self, g):
        data = g.to_json()
        assert data["kind"] == "exact"
        assert data["metric"][0][0] == [1, 1]
        assert len(data["proj3_27"]) == 35


class TestEquivariance:
    @pytest.mark.parametrize("seed", range(5))
    def test_pullback_conjugates_projectors(self, g, seed):
        rng = random.Random(seed)
        a = rational_matrix(rng)
        while _linalg.det(a) <= 0:
            a = rational_matrix(rng)
        h = induce(pullback(PHI_STD, a))
        assert np.all(h.metric.gram == a.T @ a)
        for p, names in ((2, ("proj2_7", "proj2_14")), (3, ("proj3_1", "proj3_7", "proj3_27"))):
            m = compound(a, p).T
            m_inv = _linalg.inv(m)
            for name in names:
                assert np.all(getattr(h, name) == m @ getattr(g, name) @ m_inv)


class TestProjections:
    def test_contractions_are_type_seven(self, g):
        for i in range(N):
            b7, b14 = project2(g, interior(unit(i), PHI_STD))
            assert b14.is_zero()

    def test_eq6_omega(self, g):
        assert wedge(wedge(OMEGA, OMEGA), PHI_STD) == 6 * g.vol
        assert 2 * g.inner(OMEGA, OMEGA) == 6

    def test_eq7_example(self, g):
        alpha = e(X1, Y1) - e(X2, Y2)
        assert project2(g, alpha)[0].is_zero()
        assert wedge(wedge(alpha, alpha), PHI_STD) == -2 * g.vol

    def test_eigen_identities_on_all_basis_projections(self, g):
        for idx in index_tuples(N, 2):
            a7, a14 = project2(g, e(*idx))
            assert wedge(wedge(a7, a7), PHI_STD)[TOP] == 2 * g.inner(a7, a7)
            assert wedge(wedge(a14, a14), PHI_STD)[TOP] == -g.inner(a14, a14)

    def test_phi_is_type_one(self, g):
        g1, g7, g27 = project3(g, PHI_STD)
        assert g1 == PHI_STD and g7.is_zero() and g27.is_zero()

    def test_theta_contractions_are_type_seven(self, g):
        for i in range(N):
            g1, g7, g27 = project3(g, interior(unit(i), g.theta))
            assert g1.is_zero() and g27.is_zero()

    def test_reassembly(self, g):
        gamma = random_three_form(11)
        assert sum(project3(g, gamma), Form.zero(N, 3)) == gamma

    def test_degree_checks(self, g):
        with pytest.raises(ValueError):
            project2(g, PHI_STD)
        with pytest.raises(ValueError):
            project3(g, OMEGA)


class TestChi:
    @pytest.mark.parametrize("i", range(N))
    def test_norm(self, g, i):
        eta = e(i)
        assert g.inner(chi(g, eta), chi(g, eta)) == 4 * g.inner(eta, eta)

    def test_zero(self, g):
        assert chi(g, Form.zero(N, 1)).is_zero()

    def test_lands_in_seven(self, g):
        rng = random.Random(5)
        eta = Form.covector([Fraction(rng.randint(-8, 8), 8) for _ in range(N)])
        g1, _, g27 = project3(g, chi(g, eta))
        assert g1.is_zero() and g27.is_zero()


class TestBoundary:
    def test_chi6_formula(self, top):
        assert chi6(top, e(X1)) == e(Y2, Y3) - e(X2, X3)
        assert chi6(top, e(Y1)) == e(Y2, X3) + e(X2, Y3)

    def test_chi6_cyclic(self, top):
        assert chi6(top, e(X2)) == e(Y3, Y1) - e(X3, X1)
        assert chi6(top, e(Y3)) == e(Y1, X2) + e(X1, Y2)

    def test_chi6_invertible(self, top):
        assert _linalg.det(top.chi6_gram()) == 64

    def test_bottom_face_flips(self, top):
        bottom = standard_frame(top=False)
        assert bottom.omega == -top.omega
        assert bottom.rho == top.rho
        assert np.all(bottom.chi6 == -top.chi6)

    def test_omega_nondegenerate_on_face(self, top):
        assert not wedge(wedge(top.omega, top.omega), top.omega).is_zero()

    def test_boundary_projectors(self, top):
        assert np.all(top.proj_1 + top.proj_6 + top.proj_8 == top.tangential2)
        assert [_linalg.rank(p) for p in (top.proj_1, top.proj_6, top.proj_8)] == [1, 6, 8]

    def test_split_of_six_part(self, g, top):
        alpha = 2 * wedge(e(X1), DT) - chi6(top, e(X1))
        assert np.all(g.proj2_14 @ alpha.to_vector() == alpha.to_vector())
        theta8, a = split14_boundary(top, alpha)
        assert theta8.is_zero()
        assert a == e(X1)

    def test_split_of_eight_part(self, top):
        theta8, a = split14_boundary(top, e(X1, Y1) - e(X2, Y2))
        assert a.is_zero()
        assert theta8 == e(X1, Y1) - e(X2, Y2)

    def test_seven_part(self, g, top):
        beta = wedge(e(Y2), DT) + chi6(top, e(Y2))
        assert project2(g, beta)[1].is_zero()

    def test_split_rejects_type_seven(self, top):
        with pytest.raises(ValueError, match="Lambda\\^2_14"):
            split14_boundary(top, OMEGA)

    def test_chi6_rejects_normal(self, top):
        with pytest.raises(ValueError):
            chi6(top, DT)

    def test_non_unit_normal(self, g):
        with pytest.raises(ValueError):
            boundary_frame(g, [0] * 6 + [2])

    def test_tilted_normal(self, g):
        # unit normal along (3/5) dx1 + (4/5) dt
        nu = [Fraction(3, 5)] + [Fraction(0)] * 5 + [Fraction(4, 5)]
        f = boundary_frame(g, nu)
        assert np.all(f.proj_1 + f.proj_6 + f.proj_8 == f.tangential2)
        assert _linalg.rank(f.proj_8) == 8
        assert _linalg.det(f.chi6_gram()) != 0
        rng = random.Random(2)
        a = Form.covector(list(f.tangential1 @ np.array([Fraction(rng.randint(-3, 3)) for _ in range(N)],
                                                         dtype=object)))
        alpha = 2 * wedge(a, f.nu_star) - chi6(f, a)
        theta8, back = split14_boundary(f, alpha)
        assert back == a and theta8.is_zero()


class TestVariation:
    def test_scaling_branch(self, g):
        assert dtheta_linearized(g, PHI_STD * 3) == g.theta * 4

    def test_27_branch(self, g):
        gamma = project3(g, random_three_form(4))[2]
        assert dtheta_linearized(g, gamma) == -g.star(gamma)

    def test_q_of_phi(self, g):
        assert vol_q(g, PHI_STD) == Fraction(28, 3)

    def test_q_unit_27(self, g):
        gamma = e(X1, Y1, T) - e(X2, Y2, T)
        assert project3(g, gamma)[2] == gamma
        assert vol_q(g, gamma / 2) * 4 == -g.inner(gamma, gamma)

    def test_second_difference_is_third_of_q(self, g):
        delta = random_three_form(3)
        d2 = second_difference(delta, Fraction(1, 1000))
        assert d2 == pytest.approx(float(vol_q(g, delta)) / 3, rel=1e-6)

    def test_second_difference_scaling_oracle(self):
        # vol((1+c) phi) = (1+c)^(7/3) vol(phi) gives 28/9 = q(phi)/3
        assert second_difference(PHI_STD, Fraction(1, 1000)) == pytest.approx(28 / 9, rel=1e-6)

    def test_first_variation_order(self):
        steps = [Fraction(1, 100) / 2 ** j for j in range(4)]
        orders = observed_orders(first_variation_errors(random_three_form(3), steps))
        assert np.all(orders > 1.9)

    def test_theta_linearization_order(self):
        steps = [Fraction(1, 100) / 2 ** j for j in range(4)]
        orders = observed_orders(theta_linearization_errors(random_three_form(3), steps))
        assert np.all(orders > 1.9)
