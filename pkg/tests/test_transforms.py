import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ridgelimits.exceptions import DomainError
from ridgelimits.spectral import SourceFunction, make_atomic_spectrum
from ridgelimits.transforms import (
    bias_integrand,
    companion_second_derivative,
    solve_companion,
    solve_companion_ridgeless,
    stieltjes_from_companion,
    theta_phi,
    two_atom_ridgeless_closed_form,
)

IDENTITY = make_atomic_spectrum([(1.0, 1.0)])
TWO_ATOM = make_atomic_spectrum([(4.0, 0.5), (1.0, 0.5)])


def quadratic_root(gamma: float, lam: float, tau: float) -> float:
    """Single-atom oracle: the positive root of
    lam*tau*v^2 + (lam + gamma*tau - tau)*v - 1 = 0."""
    a, b, c = lam * tau, lam + gamma * tau - tau, -1.0
    disc = math.sqrt(b * b - 4.0 * a * c)
    return (-b + disc) / (2.0 * a)


def test_identity_spectrum_reference_point():
    ce = solve_companion(IDENTITY, 2.0, 1.0)
    assert ce.v == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-12)
    # v' = 1/(1/v^2 - 2/(1+v)^2) = (sqrt(2)-1)/2 at this point.
    assert ce.v_prime == pytest.approx((math.sqrt(2.0) - 1.0) / 2.0, abs=1e-10)


def test_single_atom_matches_quadratic_root():
    for gamma in (0.5, 1.0, 2.0, 3.5):
        for lam in (0.01, 0.1, 1.0, 10.0):
            for tau in (0.5, 1.0, 4.0):
                sp = make_atomic_spectrum([(tau, 1.0)])
                ce = solve_companion(sp, gamma, lam)
                assert ce.v == pytest.approx(
                    quadratic_root(gamma, lam, tau), abs=1e-10
                ), (gamma, lam, tau)


def test_defining_equation_residual_is_tiny():
    ce = solve_companion(TWO_ATOM, 0.7, 0.3)
    rhs = 0.3 + 0.7 * sum(
        w * t / (1.0 + t * ce.v) for t, w in TWO_ATOM.atoms
    )
    assert 1.0 / ce.v == pytest.approx(rhs, rel=1e-12)


def test_stieltjes_positive_and_consistent():
    gamma, lam = 2.0, 1.0
    ce = solve_companion(IDENTITY, gamma, lam)
    m = stieltjes_from_companion(gamma, lam, ce.v)
    assert m == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
    # The two transforms satisfy lam*v = 1 - gamma*(1 - lam*m).
    assert lam * ce.v == pytest.approx(1.0 - gamma * (1.0 - lam * m), abs=1e-12)
    assert m > 0.0


def test_ridgeless_needs_overparameterization():
    with pytest.raises(DomainError):
        solve_companion_ridgeless(IDENTITY, 0.8)
    with pytest.raises(DomainError):
        solve_companion(IDENTITY, 1.0, 0.0)
    with pytest.raises(DomainError):
        solve_companion(IDENTITY, 2.0, -0.5)


def test_two_atom_ridgeless_closed_form_agrees_with_solver():
    for gamma in (1.5, 2.0, 3.0, 6.0):
        v_closed = two_atom_ridgeless_closed_form(4.0, 1.0, 0.5, gamma)
        ce = solve_companion_ridgeless(TWO_ATOM, gamma)
        assert ce.v == pytest.approx(v_closed, rel=1e-9), gamma


def test_symmetric_two_atom_ridgeless_value():
    # gamma = 2 with equal masses: v(0) = 1/sqrt(rho1*rho2).
    rho1, rho2 = 4.0, 1.0
    sp = make_atomic_spectrum([(rho1, 0.5), (rho2, 0.5)])
    ce = solve_companion_ridgeless(sp, 2.0)
    assert ce.v == pytest.approx(1.0 / math.sqrt(rho1 * rho2), rel=1e-9)


def test_second_derivative_collapses_for_single_atom():
    # Equal atoms collapse to one atom; the inner bracket becomes
    # 2 * (1 - 1/8) ... for rho: with gamma=2, equal masses at rho the
    # bracket is 2*(1 - (tau v)^3/(1+tau v)^3) evaluated at tau*v = 1.
    sp = make_atomic_spectrum([(2.0, 1.0)])
    ce = solve_companion_ridgeless(sp, 2.0, with_second=True)
    assert ce.v == pytest.approx(0.5, rel=1e-12)  # 1/sqrt(rho^2) = 1/rho
    expected = 2.0 * (1.0 - 2.0 * (1.0 / 8.0)) * (ce.v_prime / ce.v) ** 3
    assert ce.v_second == pytest.approx(expected, rel=1e-9)


def test_bisection_method_agrees_with_iteration():
    for lam in (1e-3, 0.1, 2.0):
        auto = solve_companion(TWO_ATOM, 1.3, lam)
        bis = solve_companion(TWO_ATOM, 1.3, lam, method="bisection")
        assert bis.v == pytest.approx(auto.v, abs=1e-9)


def test_theta_phi_needs_positive_penalty():
    src = SourceFunction.constant(TWO_ATOM)
    with pytest.raises(DomainError):
        theta_phi(TWO_ATOM, src, 0.0, 0.5)


def test_bias_integrand_matches_direct_sum():
    src = SourceFunction.power(TWO_ATOM, 1.0)
    v = 0.37
    direct = sum(
        w * p * t / (1.0 + t * v) ** 2
        for (t, w), p in zip(TWO_ATOM.atoms, src.values_on(TWO_ATOM))
    )
    assert bias_integrand(TWO_ATOM, src, v) == pytest.approx(direct, rel=1e-14)


atoms_strategy = st.lists(
    st.tuples(
        st.floats(min_value=0.1, max_value=20.0),
        st.integers(min_value=1, max_value=4),
    ),
    min_size=1,
    max_size=3,
    unique_by=lambda tw: tw[0],
)


@settings(max_examples=120, deadline=None)
@given(
    atoms_strategy,
    st.floats(min_value=0.2, max_value=5.0),
    st.floats(min_value=1e-4, max_value=20.0),
)
def test_companion_properties(raw, gamma, lam):
    total = sum(k for _, k in raw)
    sp = make_atomic_spectrum([(t, k / total) for t, k in raw])
    ce = solve_companion(sp, gamma, lam)
    assert ce.v > 0.0
    assert ce.v_prime > 0.0
    # Defining equation holds to scale-aware tolerance.
    rhs = lam + gamma * sum(w * t / (1.0 + t * ce.v) for t, w in sp.atoms)
    assert abs(1.0 / ce.v - rhs) <= 1e-9 * max(1.0, rhs)
    # v decreases in lam.
    ce2 = solve_companion(sp, gamma, lam * 1.5)
    assert ce2.v < ce.v


@settings(max_examples=60, deadline=None)
@given(
    atoms_strategy,
    st.floats(min_value=1.05, max_value=8.0),
)
def test_ridgeless_continuity(raw, gamma):
    """v(-lam) -> v(0) as lam -> 0 for overparameterized aspect ratios."""
    total = sum(k for _, k in raw)
    sp = make_atomic_spectrum([(t, k / total) for t, k in raw])
    v0 = solve_companion_ridgeless(sp, gamma).v
    v_small = solve_companion(sp, gamma, 1e-9).v
    assert v_small == pytest.approx(v0, rel=1e-5)


@settings(max_examples=60, deadline=None)
@given(
    atoms_strategy,
    st.floats(min_value=0.2, max_value=5.0),
    st.floats(min_value=0.05, max_value=10.0),
)
def test_derivative_matches_finite_difference(raw, gamma, lam):
    total = sum(k for _, k in raw)
    sp = make_atomic_spectrum([(t, k / total) for t, k in raw])
    h = 1e-6 * max(lam, 1.0)
    ce = solve_companion(sp, gamma, lam, with_second=True)
    lo = solve_companion(sp, gamma, lam - h, with_second=False)
    hi = solve_companion(sp, gamma, lam + h, with_second=False)
    # dv/dlam = -v'(-lam); the solver reports v'(z) at z = -lam.
    vp_fd = (hi.v - lo.v) / (2.0 * h)
    assert vp_fd == pytest.approx(-ce.v_prime, rel=5e-5)
    # Difference the analytic first derivative rather than double-difference
    # v itself, which would lose too many digits.
    vs_fd = (lo.v_prime - hi.v_prime) / (2.0 * h)
    assert vs_fd == pytest.approx(ce.v_second, rel=1e-4, abs=1e-10)


def test_companion_second_derivative_direct_call():
    ce = solve_companion(TWO_ATOM, 2.0, 1.0, with_second=True)
    again = companion_second_derivative(TWO_ATOM, 2.0, ce.v, ce.v_prime)
    assert again == pytest.approx(ce.v_second, rel=1e-14)
