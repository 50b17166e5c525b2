"""Tests for pressure laws, truncations and the potential split"""
import math

import numpy as np
import pytest

from torusflux.core.errors import DomainError
from torusflux.laws import (
    IsentropicLaw,
    NonMonotonePerturbedLaw,
    TabulatedLaw,
    build_split,
    builtin_laws,
    certify_law,
    eval_potential,
    eval_pressure,
    get_law,
    law_from_dict,
    renorm_L,
    smoothstep,
    truncation_T,
)
from torusflux.laws.certify import check_identity, richardson_derivative
from torusflux.laws.split import DEFAULT_SAMPLES
from torusflux.laws.truncation import truncation_T_derivative


@pytest.fixture
def regularized_law():
    """Isentropic law with the regularizing term switched on"""
    return IsentropicLaw(gamma=2.0, Gamma=4.0, mu=1.0)


def test_isentropic_pressure_and_potential():
    """Test closed-form pressure and potential of aρ^γ"""
    law = IsentropicLaw(gamma=2.0)

    assert eval_pressure(law, 2.0) == pytest.approx(4.0)
    # Π(ρ) = ρ² - ρ for γ = 2
    assert eval_potential(law, 2.0) == pytest.approx(2.0)
    assert eval_potential(law, 1.0) == 0.0


def test_regularizing_term_added(regularized_law):
    """Test that μρ^Γ enters the pressure and its derivative"""
    law = IsentropicLaw(gamma=2.0, Gamma=4.0, mu=0.5)

    assert law.pressure(2.0) == pytest.approx(4.0 + 0.5 * 16.0)
    assert law.pressure(2.0, 1) == pytest.approx(4.0 + 0.5 * 4.0 * 8.0)


def test_pressure_accepts_arrays():
    """Test that array input gives array output of the same shape"""
    law = IsentropicLaw(gamma=1.4)
    rho = np.array([[0.0, 1.0], [2.0, 3.0]])

    values = law.pressure(rho)

    assert isinstance(values, np.ndarray)
    assert values.shape == rho.shape
    assert values[0, 0] == 0.0


def test_negative_density_rejected():
    """Test that negative densities raise DomainError"""
    law = IsentropicLaw()

    with pytest.raises(DomainError):
        law.pressure(-0.1)
    with pytest.raises(DomainError):
        law.potential(np.array([1.0, -1.0]))


def test_invalid_law_parameters():
    """Test parameter validation of the constructors"""
    with pytest.raises(DomainError):
        IsentropicLaw(gamma=1.0)
    with pytest.raises(DomainError):
        IsentropicLaw(mu=-1.0)
    with pytest.raises(DomainError):
        NonMonotonePerturbedLaw(support=0.0)


def test_potential_identity_closed_forms():
    """Test ρΠ' - Π = π through the Richardson derivative"""
    for law in (IsentropicLaw(gamma=1.4, Gamma=3.5, mu=0.1), NonMonotonePerturbedLaw()):
        result = check_identity(law)
        assert result.passed, result.detail


def test_potential_derivative_orders(regularized_law):
    """Test Π'' = π'/ρ against a numerical derivative of Π'"""
    rho = np.array([0.5, 1.0, 2.0, 5.0])

    second = regularized_law.potential_derivative(rho, 2)
    numeric = richardson_derivative(lambda r: regularized_law.potential_derivative(r, 1), rho)

    np.testing.assert_allclose(second, numeric, rtol=1e-8)


def test_perturbed_law_is_non_monotone():
    """Test that the default perturbation makes π decrease near ρ = 1.4"""
    law = NonMonotonePerturbedLaw()

    assert law.pressure(1.4, 1) < 0
    assert law.pressure(0.0) == 0.0
    # the bump vanishes beyond its support
    assert law.perturbation(np.array([2.5]))[0] == 0.0
    assert law.pressure(3.0) == pytest.approx(9.0)


def test_perturbed_potential_continuous_at_support():
    """Test that Π stays smooth across ρ = M_q"""
    law = NonMonotonePerturbedLaw()
    below = law.potential(2.0 - 1e-9)
    above = law.potential(2.0 + 1e-9)

    assert above == pytest.approx(below, abs=1e-7)


def test_tabulated_law_reproduces_quadratic():
    """Test that a table of ρ² matches the isentropic law"""
    rho = np.linspace(0.0, 4.0, 41)
    law = TabulatedLaw(rho, rho ** 2, gamma=2.0)
    reference = IsentropicLaw(gamma=2.0)

    assert law.pressure(1.55) == pytest.approx(1.55 ** 2, rel=1e-10)
    # power-law tail beyond the last row
    assert law.pressure(8.0) == pytest.approx(64.0)
    assert law.potential(2.0) == pytest.approx(reference.potential(2.0), rel=1e-9)
    assert law.potential(0.5) == pytest.approx(reference.potential(0.5), rel=1e-9)


def test_tabulated_law_from_file(tmp_path):
    """Test loading a comma separated table with comments"""
    table = tmp_path / "pressure.csv"
    table.write_text("# rho, pi\n0, 0\n1, 1\n2, 4\n3, 9\n4, 16\n")

    law = get_law("tabulated", table=str(table), gamma=2.0)

    assert isinstance(law, TabulatedLaw)
    assert law.params() == {"table": str(table)}
    assert law.pressure(2.0) == pytest.approx(4.0)


def test_tabulated_law_validation():
    """Test rejection of malformed tables"""
    with pytest.raises(DomainError):
        TabulatedLaw([0.0, 2.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(DomainError):
        TabulatedLaw([0.0, 1.0], [0.5, 1.0])
    with pytest.raises(DomainError):
        TabulatedLaw([0.0], [0.0])


def test_tabulated_params_serializable():
    """Test that inline tables serialize as plain lists"""
    law = TabulatedLaw([0.0, 1.0, 2.0], [0.0, 1.0, 4.0])

    data = law.to_dict()

    assert data["kind"] == "tabulated"
    assert data["rho_table"] == [0.0, 1.0, 2.0]
    assert law_from_dict(data).pressure(1.0) == pytest.approx(1.0)


def test_get_law_unknown_kind():
    """Test that unknown kinds raise DomainError"""
    with pytest.raises(DomainError):
        get_law("polytropic")
    with pytest.raises(DomainError):
        get_law("isentropic", exponent=2.0)


def test_law_from_dict_ignores_none():
    """Test that unset optional keys fall back to constructor defaults"""
    law = law_from_dict({"kind": "perturbed", "gamma": 2.0, "Gamma": 4.0, "mu": 0.0, "amplitude": None, "support": None})

    assert law.amplitude == 2.0
    assert law.support == 2.0


def test_with_mu_keeps_parameters():
    """Test that with_mu only changes μ"""
    law = NonMonotonePerturbedLaw(amplitude=1.0).with_mu(0.3)

    assert law.mu == 0.3
    assert law.amplitude == 1.0


def test_with_mu_on_tabulated_law():
    """Test that with_mu keeps the table and adds the regularizing term"""
    rho = np.linspace(0.0, 4.0, 41)
    law = TabulatedLaw(rho, rho ** 2, gamma=2.0)

    regularized = law.with_mu(0.5)

    assert type(regularized) is TabulatedLaw
    assert law.mu == 0.0
    assert regularized.pressure(2.0) == pytest.approx(law.pressure(2.0) + 0.5 * 2.0 ** 4, rel=1e-12)
    np.testing.assert_array_equal(regularized.rho_table, law.rho_table)
    with pytest.raises(DomainError):
        law.with_mu(-0.1)


def test_truncation_values():
    """Test T_k on each branch"""
    assert truncation_T(1.0, 0.5) == 0.5
    assert truncation_T(1.0, 2.5) == pytest.approx(1.9375)
    assert truncation_T(1.0, 5.0) == 2.0
    assert truncation_T(2.0, 5.0) == pytest.approx(2.0 * 1.9375)


def test_truncation_is_concave_and_c1():
    """Test that T_k' is continuous and nonincreasing"""
    x = np.linspace(0.0, 10.0, 2001)
    slope = truncation_T_derivative(2.0, x)

    assert np.all(np.diff(slope) <= 1e-15)
    np.testing.assert_allclose(richardson_derivative(lambda y: truncation_T(2.0, y), x[1:]), slope[1:], atol=5e-4)


def test_truncation_is_one_lipschitz():
    """Test |T_k(a) - T_k(b)| <= |a - b| on random pairs"""
    rng = np.random.default_rng(3)
    for k in (1.0, 2.0, 8.0):
        a = rng.uniform(0.0, 5.0 * k, size=1000)
        b = rng.uniform(0.0, 5.0 * k, size=1000)

        gap = np.abs(truncation_T(k, a) - truncation_T(k, b))

        assert np.all(gap <= np.abs(a - b) + 1e-12)


def test_truncation_domain():
    """Test that k < 1 and negative arguments are rejected"""
    with pytest.raises(DomainError):
        truncation_T(0.5, 1.0)
    with pytest.raises(DomainError):
        truncation_T(1.0, -1.0)
    with pytest.raises(DomainError):
        renorm_L(0.0, 1.0)


def test_renormalization_closed_form():
    """Test L_k against ρ log ρ and the value beyond 3k"""
    assert renorm_L(1.0, 8.0) == pytest.approx(8.0 * (1.5 * math.log(3.0) - 0.25))
    assert renorm_L(4.0, 2.0) == pytest.approx(2.0 * math.log(2.0))
    assert renorm_L(1.0, 0.0) == 0.0


def test_renormalization_identity():
    """Test ρL_k' - L_k = T_k on every branch"""
    k = 1.5
    rho = np.array([0.3, 1.0, 2.0, 3.0, 4.0, 6.0, 20.0])

    derivative = richardson_derivative(lambda r: renorm_L(k, r), rho)
    residual = rho * derivative - renorm_L(k, rho) - truncation_T(k, rho)

    assert np.abs(residual).max() < 1e-8


def test_smoothstep_endpoints():
    """Test the degree-7 smoothstep and its flat ends"""
    t = np.array([0.0, 0.5, 1.0])

    np.testing.assert_allclose(smoothstep(t), [0.0, 0.5, 1.0], atol=1e-15)
    for order in (1, 2, 3):
        ends = smoothstep(np.array([0.0, 1.0]), order)
        np.testing.assert_allclose(ends, 0.0, atol=1e-12)


def test_smoothstep_derivative_matches():
    """Test S' against a numerical derivative"""
    t = np.linspace(0.1, 0.9, 9)

    numeric = richardson_derivative(smoothstep, t)

    np.testing.assert_allclose(smoothstep(t, 1), numeric, rtol=1e-7)


def test_split_requires_regularization():
    """Test that the split needs μ > 0 and Γ > 3"""
    with pytest.raises(DomainError):
        build_split(IsentropicLaw(mu=0.0))
    with pytest.raises(DomainError):
        build_split(IsentropicLaw(Gamma=3.0, mu=1.0))


def test_split_parts(regularized_law):
    """Test P_μ + Q = Π_μ, compact support of Q and monotone P_μ"""
    split = build_split(regularized_law)
    rho = DEFAULT_SAMPLES

    np.testing.assert_allclose(
        split.P_mu(rho) + split.Q(rho), regularized_law.potential(rho), rtol=1e-10, atol=1e-10
    )
    beyond = rho[rho > split.support_bound]
    assert beyond.size > 0
    assert np.all(split.Q(beyond) == 0.0)
    for order in range(4):
        assert split.P_mu(rho, order).min() >= -1e-10
    assert split.M >= split.R
    assert split.support_bound == pytest.approx(2.0 * split.M)
    assert split.lambda_q > 0
    assert split.C1 > 0


def test_split_pressure_identity(regularized_law):
    """Test p_μ + q = π_μ"""
    split = build_split(regularized_law)
    rho = DEFAULT_SAMPLES

    pi_mu = regularized_law.pressure(rho)
    residual = np.abs(split.p_mu(rho) + split.q(rho) - pi_mu) / (1.0 + np.abs(pi_mu))

    assert residual.max() < 1e-8


def test_split_serialization(regularized_law):
    """Test the reported constants"""
    data = build_split(regularized_law).to_dict()

    assert set(data) == {"M", "R", "support_bound", "lambda_q", "C_q", "C1", "C2", "scan_steps"}
    assert isinstance(data["scan_steps"], int)


def test_certify_builtin_family():
    """Test that every built-in law passes the full invariant suite"""
    laws = builtin_laws()

    assert len(laws) == 9
    for law in laws:
        report = certify_law(law)
        assert report.passed, [(c.name, c.detail, c.worst) for c in report.failures()]
        assert report.split is not None


def test_certify_without_regularization():
    """Test that μ = 0 laws skip the split checks"""
    report = certify_law(IsentropicLaw(gamma=2.0))

    assert report.passed
    assert report.split is None
    assert {c.name for c in report.checks} == {"identity", "positivity", "envelope", "derivatives"}


def test_certify_report_to_dict():
    """Test the JSON form of a certification report"""
    report = certify_law(NonMonotonePerturbedLaw(mu=1.0))

    data = report.to_dict()

    assert data["law"]["kind"] == "perturbed"
    assert data["passed"] == report.passed
    assert all("name" in check for check in data["checks"])
