import csv
import io
import json

import numpy as np
import pytest

from g2bvp.modes import (
    TORUS_T6,
    HodgeData,
    assemble_mode,
    ball_modes,
    exponential_mode,
    mode_classes,
    mode_spectrum,
    predict_slab_kernel,
    probe_refinement,
    probe_trial_quotient,
    question2_probe,
    robin_matrix,
    robin_residual,
    spectrum_report,
    theta_analytic,
    theta_convergence,
    theta_relative_errors,
    total_kernel,
)
from g2bvp.symbol import sigma

E1 = (1, 0, 0, 0, 0, 0)
ZERO = (0,) * 6


@pytest.fixture(scope="module")
def report():
    return spectrum_report(1.0, 2, 60)


# ---------------------------------------------------------------------------
# assembly


def test_robin_matrix_vanishes_at_zero():
    assert np.abs(robin_matrix(ZERO)).max() == 0


def test_robin_matrix_at_e1_matches_symbol():
    exact = np.array(sigma([1, 0, 0, 0, 0, 0]).matrix.evalf(), dtype=complex)
    assert np.abs(robin_matrix(E1) - exact).max() < 1e-15
    assert np.allclose(np.linalg.eigvalsh(robin_matrix(E1)), [-1, -1, 0, 0, 1, 1])


@pytest.mark.parametrize("k", [(1, 2, 0, -1, 0, 3), (0, 0, 2, 0, -2, 1), (3, 0, 0, 0, 0, 0)])
def test_robin_matrix_hermitian_spectrum(k):
    M = robin_matrix(k)
    n = np.sqrt(sum(x * x for x in k))
    assert np.abs(M - M.conj().T).max() == 0
    assert np.allclose(np.linalg.eigvalsh(M), [-n, -n, 0, 0, n, n])


def test_k0_rows_are_neumann():
    mp = assemble_mode(ZERO, 1.0, 12)
    h = mp.h
    row = mp.matrix.getrow(0).toarray().ravel()
    expected = np.zeros_like(row)
    expected[0], expected[1] = 2 / h ** 2, -2 / h ** 2
    assert np.allclose(row, expected)


@pytest.mark.parametrize("k", [ZERO, E1, (1, -1, 2, 0, 0, 1), (0, 3, 0, 0, 0, 0)])
@pytest.mark.parametrize("n_t", [8, 33])
def test_weighted_symmetry(k, n_t):
    assert assemble_mode(k, 1.7, n_t).symmetry_defect() <= 1e-10


@pytest.mark.parametrize("length, n_t", [(1.0, 7), (0.0, 20), (-1.0, 20)])
def test_degenerate_grid_rejected(length, n_t):
    with pytest.raises(ValueError):
        assemble_mode(E1, length, n_t)


def test_block_sizes():
    mp = assemble_mode(E1, 1.0, 20)
    assert mp.size == 6 * 20 + 8 * 18
    a, th = mp.split(np.arange(mp.size, dtype=complex))
    assert a.shape == (6, 20) and th.shape == (8, 20)
    assert np.all(th[:, 0] == 0) and np.all(th[:, -1] == 0)


# ---------------------------------------------------------------------------
# spectra


@pytest.mark.parametrize("k", [ZERO, E1, (1, 1, 0, -1, 0, 0)])
def test_decoupled_matches_dense(k):
    mp = assemble_mode(k, 1.3, 24)
    a = mode_spectrum(mp).eigenvalues
    b = mode_spectrum(mp, method="dense").eigenvalues
    assert np.abs(a - b).max() <= 1e-9 * np.abs(b).max()


def test_unknown_method():
    with pytest.raises(ValueError):
        mode_spectrum(assemble_mode(E1, 1.0, 10), method="lanczos")


def test_theta_block_k0():
    spec = mode_spectrum(assemble_mode(ZERO, 1.0, 200))
    assert np.all(theta_relative_errors(spec, 1.0, 3) <= 1e-3)
    assert np.allclose(theta_analytic(0, 1.0, 2), [-np.pi ** 2, -4 * np.pi ** 2])


def test_neumann_spectrum_k0():
    L = 2.0
    spec = mode_spectrum(assemble_mode(ZERO, L, 200))
    assert spec.zero_count == 6
    for mu, vals in spec.a_blocks:
        assert mu == 0
        top = vals[::-1][:4]
        exact = -(np.arange(4) * np.pi / L) ** 2
        assert np.abs(top - exact).max() <= 1e-3 * (1 + np.abs(exact).max())


@pytest.mark.parametrize("k", [E1, (1, 1, 0, 0, 1, 0), (2, 0, -1, 0, 0, 1)])
def test_nonzero_mode_negative_with_exponential_channel(k):
    k2 = sum(x * x for x in k)
    spec = mode_spectrum(assemble_mode(k, 4.0, 400))
    assert spec.eigenvalues.max() < -spec.threshold
    assert spec.zero_count == 0
    assert spec.eigenvalues[-1] == pytest.approx(exponential_mode(k2), rel=1e-4)
    # the channel sits in the mu = +|k| and mu = -|k| blocks, two of each
    tops = sorted(vals[-1] for mu, vals in spec.a_blocks if abs(mu) > 0.5)
    assert np.allclose(tops, exponential_mode(k2), rtol=1e-4)


def test_exponential_channel_satisfies_robin_rows():
    mp = assemble_mode(E1, 3.0, 300)
    mus, U = np.linalg.eigh(mp.robin)
    t = mp.nodes()
    a = np.outer(U[:, -1], np.exp(mus[-1] * t / 2))
    vec = np.concatenate([a.ravel(), np.zeros(8 * (mp.n_t - 2))])
    assert robin_residual(mp, vec) <= 1e-3


@pytest.mark.parametrize("k", [ZERO, E1])
def test_theta_convergence_order(k):
    orders = theta_convergence(k, 1.0)
    assert np.all(orders >= 1.95)


# ---------------------------------------------------------------------------
# mode sets and kernel


def test_ball_modes_count():
    assert len(ball_modes(1)) == 13
    assert sum(c.multiplicity for c in mode_classes(2)) == len(ball_modes(2))


def test_orbit_members_share_spectrum(report):
    assert report.member_discrepancy <= 1e-9


def test_total_kernel_is_six():
    kern = total_kernel(1.0, 3, 100)
    assert kern.dimension == 6
    assert kern.by_mode == {0: 6}
    assert kern.theta_zero
    assert kern.dstar_residual <= 1e-6
    assert kern.robin_residual <= 1e-6


def test_kernel_grid_independent():
    assert total_kernel(1.0, 2, 50).dimension == total_kernel(1.0, 2, 100).dimension == 6


@pytest.mark.parametrize("length", [0.5, 4.0])
def test_kernel_independent_of_length(length):
    assert total_kernel(length, 1, 60).dimension == 6


def test_kernel_rejects_zero_truncation():
    with pytest.raises(ValueError):
        total_kernel(1.0, 0, 50)


def test_nonnegative_count_stable_in_K():
    counts = [spectrum_report(1.0, K, 40, member_samples=0).nonnegative_count for K in (2, 3, 4)]
    assert counts == [6, 6, 6]


def test_report_no_positive_eigenvalues(report):
    assert report.positive_count == 0
    assert report.kernel_dim == 6
    assert report.max_eigenvalue <= 1e-8


def test_report_json_and_csv(report):
    data = report.to_json()
    assert data["schema"] == 1
    assert data["kernel_dim"] == 6
    text = json.dumps(data, sort_keys=True)
    assert json.loads(text)["truncation"]["modes"] == len(ball_modes(2))
    rows = list(csv.reader(io.StringIO("\n".join(",".join(r) for r in report.csv_rows()))))
    assert rows[0] == ["mode_k", "eig_index", "eigenvalue"]
    assert rows[1][0] == "0;0;0;0;0;0"


# ---------------------------------------------------------------------------
# cohomological prediction


def test_prediction_for_torus():
    p = predict_slab_kernel(TORUS_T6)
    assert p["dim_V"] == 7 and p["dim_V_phi"] == 14 and p["dim_ker_p"] == 7
    assert p["dim_K_phi"] == 0 and p["dim_H_phi"] == 0


def test_prediction_without_holomorphic_forms():
    p = predict_slab_kernel(HodgeData(h11=1, h20=0, b1=0))
    assert p["dim_V"] == 1 and p["dim_K_phi"] == 0


def test_prediction_rejects_negative():
    with pytest.raises(ValueError):
        HodgeData(h11=-1, h20=0, b1=0)


def test_prediction_matches_kernel():
    p = predict_slab_kernel(TORUS_T6)
    assert total_kernel(1.0, 2, 60).dimension == p["dim_H_phi"] + p["relative_cohomology"]


# ---------------------------------------------------------------------------
# probe


@pytest.mark.parametrize("k, comp", [(ZERO, 0), (E1, 3), (E1, 7), ((1, 1, 0, 1, 0, 0), 5)])
def test_probe_trial_two_routes(k, comp):
    discrete, direct = probe_trial_quotient(k, 1.0, 200, comp)
    assert discrete == pytest.approx(direct, rel=1e-3)


def test_probe_trial_component_range():
    with pytest.raises(ValueError):
        probe_trial_quotient(E1, 1.0, 20, 8)


def test_probe_reports_without_sign_assertion():
    res = question2_probe(1.0, 1, 30)
    data = res.to_json()
    assert np.isfinite(data["value"]) and data["n_t"] == 30 and data["scale"] > 0
    assert set(data["per_k2"]) == {"0", "1"}


def test_probe_refinement_logged():
    results = probe_refinement(1.0, 1, grids=(20, 40))
    assert [r.n_t for r in results] == [20, 40]
