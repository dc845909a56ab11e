import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ridgelimits.exceptions import (
    DomainError,
    NormalizationViolationError,
    OrderViolationError,
    SourceMismatchError,
)
from ridgelimits.risk import (
    asymptotic_risk,
    closed_form_corollary1,
    golden_section,
    interpolation_optimality,
    optimal_lambda,
    oracle_risk_reference,
    risk_derivative,
    strong_weak_risk,
)
from ridgelimits.spectral import (
    ProblemSpec,
    SourceFunction,
    make_atomic_spectrum,
    strong_weak_model,
)

TWO_ATOM = make_atomic_spectrum([(4.0, 0.5), (1.0, 0.5)])


def isotropic(gamma: float, noise_var: float = 1.0, signal_var: float = 1.0) -> ProblemSpec:
    sp = make_atomic_spectrum([(1.0, 1.0)])
    return ProblemSpec(sp, SourceFunction.constant(sp), gamma, noise_var, signal_var)


def test_reference_risk_identity_gamma2_lam1():
    br = asymptotic_risk(isotropic(2.0), 1.0)
    v = math.sqrt(2.0) - 1.0
    vp = (math.sqrt(2.0) - 1.0) / 2.0
    assert br.variance == pytest.approx(vp / v**2 - 1.0, rel=1e-10)
    assert br.bias == pytest.approx(vp / v**2 * 0.5 / (1.0 + v) ** 2 * 2.0, rel=1e-6)
    assert br.total == pytest.approx(br.variance + br.bias, abs=1e-15)


def test_reference_risk_two_atom_ridgeless():
    # gamma = 2, equal masses, constant source: frozen reference values.
    src = SourceFunction.constant(TWO_ATOM)
    problem = ProblemSpec(TWO_ATOM, src, 2.0, 1.0, 1.0)
    br = asymptotic_risk(problem, 0.0)
    assert br.variance == pytest.approx(1.25, rel=1e-9)
    assert br.bias == pytest.approx(1.0, rel=1e-9)
    assert br.total == pytest.approx(2.25, rel=1e-9)


def test_closed_form_bias_all_variants_reference_grid():
    cases = {
        "one": SourceFunction.constant(TWO_ATOM),
        "x": SourceFunction.power(TWO_ATOM, 1.0),
        "inv": SourceFunction.power(TWO_ATOM, -1.0),
    }
    for gamma in (0.5, 1.0, 2.0, 3.5):
        for lam in (0.05, 0.5, 2.0):
            for variant, src in cases.items():
                problem = ProblemSpec(TWO_ATOM, src, gamma, 0.3, 1.7)
                direct = asymptotic_risk(problem, lam)
                closed = closed_form_corollary1(problem, lam, variant)
                assert closed.total == pytest.approx(direct.total, rel=1e-9), (
                    gamma,
                    lam,
                    variant,
                )
                assert closed.bias == pytest.approx(direct.bias, rel=1e-9, abs=1e-12)


def test_closed_form_bias_rejects_wrong_source():
    problem = ProblemSpec(TWO_ATOM, SourceFunction.constant(TWO_ATOM), 2.0, 1.0, 1.0)
    with pytest.raises(SourceMismatchError):
        closed_form_corollary1(problem, 1.0, "x")
    with pytest.raises(DomainError):
        closed_form_corollary1(problem, 0.0, "one")
    with pytest.raises(DomainError):
        closed_form_corollary1(problem, 1.0, "cubic")


def test_strong_weak_risk_matches_general_path():
    rho1, rho2, psi1, phi1, phi2 = 5.0, 0.5, 0.3, 2.0, 0.5
    sp, src = strong_weak_model(rho1, rho2, psi1, phi1, phi2)
    for lam in (0.0, 0.2, 3.0):
        gamma = 2.4
        problem = ProblemSpec(sp, src, gamma, 0.7, 1.3)
        direct = asymptotic_risk(problem, lam)
        two = strong_weak_risk(rho1, rho2, psi1, phi1, phi2, gamma, 0.7, 1.3, lam)
        assert two.total == pytest.approx(direct.total, rel=1e-11), lam


def test_risk_scaling_invariance():
    """Rescaling all eigenvalues by c with lam -> c*lam rescales bias by
    keeping signal fixed; compensating signal_var by 1/c leaves the total
    risk composed of the same variance plus bias/c."""
    c = 3.0
    sp1 = TWO_ATOM
    sp2 = make_atomic_spectrum([(c * t, w) for t, w in sp1.atoms])
    for lam in (0.1, 1.0):
        p1 = ProblemSpec(sp1, SourceFunction.constant(sp1), 2.0, 1.0, 1.0)
        p2 = ProblemSpec(sp2, SourceFunction.constant(sp2), 2.0, 1.0, 1.0 / c)
        b1 = asymptotic_risk(p1, lam)
        b2 = asymptotic_risk(p2, c * lam)
        assert b2.variance == pytest.approx(b1.variance, rel=1e-10)
        assert b2.bias == pytest.approx(b1.bias, rel=1e-10)


def test_risk_derivative_zero_at_isotropic_optimum():
    problem = isotropic(2.0, noise_var=0.5, signal_var=2.0)
    lam_star = 0.5 * 2.0 / 2.0
    assert abs(risk_derivative(problem, lam_star)) < 1e-10
    assert risk_derivative(problem, lam_star / 2.0) < 0.0
    assert risk_derivative(problem, lam_star * 2.0) > 0.0


def test_risk_derivative_finite_difference_spot():
    src = SourceFunction.power(TWO_ATOM, 1.0)
    problem = ProblemSpec(TWO_ATOM, src, 1.7, 0.4, 1.1)
    lam, h = 0.8, 1e-5
    fd = (
        asymptotic_risk(problem, lam + h).total - asymptotic_risk(problem, lam - h).total
    ) / (2.0 * h)
    assert risk_derivative(problem, lam) == pytest.approx(fd, rel=1e-6)


def test_golden_section_finds_parabola_minimum():
    x, fx = golden_section(lambda t: (t - 1.3) ** 2 + 0.25, 0.0, 10.0)
    assert x == pytest.approx(1.3, abs=1e-5)
    assert fx == pytest.approx(0.25, abs=1e-9)


def test_optimal_lambda_isotropic_closed_form():
    for gamma, s2, r2 in ((0.5, 1.0, 1.0), (2.0, 0.3, 1.5), (3.5, 2.0, 0.5)):
        problem = isotropic(gamma, s2, r2)
        lam_star, br = optimal_lambda(problem)
        target = s2 * gamma / r2
        assert lam_star == pytest.approx(target, rel=1e-4)
        assert br.total <= asymptotic_risk(problem, target * 1.1).total + 1e-12


def test_optimal_lambda_boundary_interpolation():
    # Strongly aligned prior, overparameterized, low noise: lam* = 0.
    sp, src = strong_weak_model(25.0, 1.0, 0.5, 2.0, 0.0)
    problem = ProblemSpec(sp, src, 2.0, 0.05, 10.0)
    lam_star, br = optimal_lambda(problem)
    assert lam_star == 0.0
    assert risk_derivative(problem, 0.0) >= 0.0
    assert br.total == pytest.approx(asymptotic_risk(problem, 0.0).total, rel=0)


def test_interpolation_optimality_closed_form_value():
    # rho = (4, 1), phi = (2, 0): lhs = 4*snr/27.
    for snr in (1.0, 6.0, 6.75, 7.0, 20.0):
        lhs, optimal = interpolation_optimality(4.0, 1.0, 2.0, 0.0, snr)
        assert lhs == pytest.approx(4.0 * snr / 27.0, rel=1e-12)
        assert optimal == (lhs >= 1.0)


def test_interpolation_optimality_validates_inputs():
    with pytest.raises(OrderViolationError):
        interpolation_optimality(1.0, 4.0, 2.0, 0.0, 1.0)
    with pytest.raises(NormalizationViolationError):
        interpolation_optimality(4.0, 1.0, 1.5, 0.0, 1.0)


def test_oracle_reference_constant_source():
    problem = isotropic(2.0, noise_var=0.5, signal_var=2.0)
    ref = oracle_risk_reference(problem)
    assert ref.is_ridge_equivalent
    assert ref.lam_equiv == pytest.approx(0.5 * 2.0 / 2.0, rel=1e-12)
    assert ref.risk.total == pytest.approx(
        asymptotic_risk(problem, ref.lam_equiv).total, rel=1e-12
    )


def test_oracle_reference_general_source_has_no_equivalent():
    src = SourceFunction.power(TWO_ATOM, 1.0)
    problem = ProblemSpec(TWO_ATOM, src, 2.0, 1.0, 1.0)
    ref = oracle_risk_reference(problem)
    assert not ref.is_ridge_equivalent


sw_strategy = st.tuples(
    st.floats(min_value=1.0, max_value=30.0),   # rho1/rho2 ratio
    st.floats(min_value=0.05, max_value=5.0),   # rho2
    st.floats(min_value=0.1, max_value=0.9),    # psi1
    st.floats(min_value=0.0, max_value=4.0),    # phi1
    st.floats(min_value=0.0, max_value=4.0),    # phi2
)


@settings(max_examples=80, deadline=None)
@given(
    sw_strategy,
    st.floats(min_value=0.3, max_value=4.0),
    st.floats(min_value=1e-3, max_value=8.0),
)
def test_strong_weak_risk_property(sw, gamma, lam):
    ratio, rho2, psi1, phi1, phi2 = sw
    rho1 = ratio * rho2
    sp, src = strong_weak_model(rho1, rho2, psi1, phi1, phi2)
    problem = ProblemSpec(sp, src, gamma, 0.5, 1.0)
    direct = asymptotic_risk(problem, lam)
    two = strong_weak_risk(rho1, rho2, psi1, phi1, phi2, gamma, 0.5, 1.0, lam)
    assert two.variance == pytest.approx(direct.variance, rel=1e-10, abs=1e-12)
    assert two.bias == pytest.approx(direct.bias, rel=1e-10, abs=1e-12)
    assert direct.total >= 0.0


@settings(max_examples=40, deadline=None)
@given(
    st.floats(min_value=1.5, max_value=12.0),
    st.floats(min_value=0.2, max_value=12.0),
)
def test_interpolation_flag_agrees_with_derivative_sign(rho1, snr):
    """The closed-form boolean and the analytic derivative at 0 agree for
    the symmetric two-atom setup it covers."""
    rho2 = 1.0
    phi1, phi2 = 1.4, 0.6
    lhs, optimal = interpolation_optimality(rho1, rho2, phi1, phi2, snr)
    sp, src = strong_weak_model(rho1, rho2, 0.5, phi1, phi2)
    problem = ProblemSpec(sp, src, 2.0, 1.0, snr)
    deriv = risk_derivative(problem, 0.0)
    if abs(lhs - 1.0) > 1e-7:  # keep clear of the knife edge
        assert optimal == (deriv >= 0.0)
