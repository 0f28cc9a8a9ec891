import numpy as np
import pytest

from eigenbench.core.chart_calculus import (
    AnalyticMetricFamily,
    check_htilde,
    check_lemma1,
    check_lemma2,
    check_P1_P2_P3,
    check_prop3,
    christoffel,
    div_tensor,
    divergence,
    fit_order,
    hessian,
    laplacian,
    laplacian_divergence_form,
    run_suite,
    standard_fixtures,
    tangential_trace,
)
from eigenbench.core.mesh import generate_square
from eigenbench.errors import DegenerateNormalError, DomainError, InputError

STEPS = [1e-3, 5e-4, 2.5e-4]


@pytest.fixture
def flat():
    return AnalyticMetricFamily.static(lambda x, y: np.eye(2))


@pytest.fixture
def fixtures():
    return standard_fixtures()


def test_christoffel_of_conformal_metric():
    family = AnalyticMetricFamily.static(lambda x, y: np.exp(2.0 * x) * np.eye(2))
    gamma = christoffel(family, (0.3, 0.4))
    assert gamma[0, 0, 0] == pytest.approx(1.0, abs=1e-6)
    assert gamma[0, 1, 1] == pytest.approx(-1.0, abs=1e-6)
    assert gamma[1, 0, 1] == pytest.approx(1.0, abs=1e-6)
    assert gamma[1, 1, 0] == pytest.approx(1.0, abs=1e-6)
    assert gamma[1, 0, 0] == pytest.approx(0.0, abs=1e-6)


def test_christoffel_is_symmetric(fixtures):
    gamma = christoffel(fixtures["family"], (0.3, 0.4))
    np.testing.assert_allclose(gamma, np.swapaxes(gamma, 1, 2), atol=1e-12)


def test_flat_hessian(flat):
    np.testing.assert_allclose(hessian(lambda x, y: 2.0 * x - y, flat, (0.4, 0.6)), 0.0, atol=1e-6)
    np.testing.assert_allclose(hessian(lambda x, y: x * x + y * y, flat, (0.4, 0.6)), 2.0 * np.eye(2), atol=1e-5)


def test_div_tensor(flat, fixtures):
    point = (0.3, 0.4)
    np.testing.assert_allclose(div_tensor(lambda x, y: np.array([[1.0, 2.0], [2.0, 3.0]]), flat, point), 0.0,
                               atol=1e-10)
    scaled = div_tensor(lambda x, y: np.sin(x) * np.exp(y) * np.eye(2), flat, point)
    np.testing.assert_allclose(scaled, [np.cos(0.3) * np.exp(0.4), np.sin(0.3) * np.exp(0.4)], rtol=1e-6)
    family = fixtures["family"]
    np.testing.assert_allclose(div_tensor(family.at(0.0), family, point), 0.0, atol=1e-8)


def test_flat_calculus(flat):
    np.testing.assert_allclose(christoffel(flat, (0.5, 0.5)), 0.0, atol=1e-12)
    assert laplacian(lambda x, y: x * x + 3.0 * y * y, flat, (0.2, 0.6)) == pytest.approx(8.0, abs=1e-5)
    assert divergence(lambda x, y: np.array([x * x, x * y]), flat, (0.3, 0.4)) == pytest.approx(0.9, abs=1e-6)


def test_laplacian_forms_agree(fixtures):
    family = fixtures["family"]
    for point in [(0.3, 0.4), (1.2, -0.3)]:
        assert laplacian(fixtures["f"], family, point) == pytest.approx(
            laplacian_divergence_form(fixtures["f"], family, point), abs=1e-5
        )


def test_points_near_chart_edge_are_rejected(flat):
    with pytest.raises(DomainError):
        christoffel(flat, (-1.0, 0.5))
    with pytest.raises(DomainError):
        check_lemma2(flat, lambda x, y: x, (0.5, 2.0))


def test_degenerate_normal(flat):
    with pytest.raises(DegenerateNormalError):
        check_lemma2(flat, lambda x, y: 1.0, (0.5, 0.5))


def test_steps_must_be_positive():
    with pytest.raises(InputError):
        AnalyticMetricFamily.static(lambda x, y: np.eye(2), hx=0.0)


def test_pointwise_identities_hold(fixtures):
    family = fixtures["family"].with_steps(1e-4, 1e-4)
    point = (0.3, 0.4)
    assert check_lemma1(fixtures["T"], fixtures["phi"], fixtures["Z"], family, point) < 1e-6
    assert check_lemma2(family, fixtures["f"], point) < 1e-6
    residuals = check_P1_P2_P3(family, fixtures["X"], fixtures["Y"], fixtures["f"], fixtures["l"], point,
                               l_t=fixtures["l_t"])
    assert max(residuals) < 1e-6


def test_tangential_trace():
    g = np.array([[2.0, 0.3], [0.3, 1.0]])
    H = np.array([[0.5, -0.2], [-0.2, 1.5]])
    nu = np.array([1.0, 0.0]) / np.sqrt(2.0)
    assert tangential_trace(H, g, nu) + nu @ H @ nu == pytest.approx(np.trace(np.linalg.solve(g, H)))


def test_htilde_identity(fixtures):
    assert check_htilde(fixtures["family"], (0.5, 0.9), fixtures["f"]) < 1e-12
    assert check_htilde(fixtures["family"], (0.5, 0.9), fixtures["f"], H=np.eye(2)) < 1e-12


def test_prop3_for_conformal_family():
    family = AnalyticMetricFamily.linear(lambda x, y: np.eye(2), lambda x, y: np.eye(2))
    residual = check_prop3(family, lambda x, y: np.sin(x) * np.cos(2.0 * y), lambda x, y: 1.0, generate_square(2))
    assert residual < 1e-5


def test_fit_order():
    steps = np.array([1e-2, 5e-3, 2.5e-3])
    assert fit_order(steps, 3.0 * steps**2) == pytest.approx(2.0)
    assert fit_order(steps, [0.0, 0.0, 0.0]) == float("inf")


@pytest.mark.parametrize("suite", ["lemma1", "lemma2", "props"])
def test_suite_converges_at_second_order(suite):
    rows = run_suite(suite, STEPS)
    assert {row["step"] for row in rows} == set(STEPS)
    finest = [row for row in rows if row["step"] == STEPS[-1]]
    assert max(row["residual"] for row in finest) <= 1e-5
    for row in finest:
        if row["residual"] > 1e-11:
            assert row["order"] >= 1.9, row


def test_props_suite_reports_moving_l():
    identities = {row["identity"] for row in run_suite("props", STEPS[:2], points=[(0.3, 0.4)])}
    assert identities == {"P1", "P2", "P3", "P3_moving_l"}


def test_htilde_suite_has_no_order():
    rows = run_suite("htilde", STEPS[:2])
    assert all(np.isnan(row["order"]) for row in rows)
    assert max(row["residual"] for row in rows) < 1e-12


@pytest.mark.slow
def test_prop3_suite():
    rows = run_suite("prop3", STEPS)
    assert len(rows) == len(STEPS)
    assert rows[-1]["residual"] <= 1e-5
    assert rows[-1]["order"] >= 1.9


def test_unknown_suite():
    with pytest.raises(InputError):
        run_suite("lemma9", STEPS)
