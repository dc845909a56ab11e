"""Asymptotic excess prediction risk of ridge and ridgeless regression.

With companion transform ``v = v(-lam)`` and derivative ``v'`` for the
problem's spectrum and aspect ratio, the limiting excess risk splits exactly
into

    variance = noise_var * (v'/v^2 - 1)
    bias     = signal_var * (v'/v^2) * sum_i psi_i phi_i tau_i / (1 + tau_i v)^2

and ``lam = 0`` (minimum-norm interpolation, aspect_ratio > 1) is the same
expression at the ridgeless root.  The lam-derivative of the total risk is
also available in closed form, which makes boundary optimality at lam = 0
decidable without finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import (
    DomainError,
    NonFiniteRiskError,
    NormalizationViolationError,
    OrderViolationError,
    SourceMismatchError,
)
from .spectral import AtomicSpectrum, ProblemSpec, SourceFunction, strong_weak_model
from .transforms import CompanionEval, bias_integrand, solve_companion

#: Tolerance for matching tabulated source values against a closed-form variant.
VARIANT_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class RiskBreakdown:
    """Asymptotic risk at one penalty: variance + bias = total, with the
    companion evaluation that produced it."""

    lam: float
    variance: float
    bias: float
    total: float
    companion: CompanionEval


def asymptotic_risk(problem: ProblemSpec, lam: float) -> RiskBreakdown:
    """Limiting excess risk of ridge regression at penalty ``lam``.

    ``lam = 0`` is the minimum-norm interpolator and needs aspect_ratio > 1.

    Raises:
        DomainError: invalid (lam, aspect_ratio) combination.
        NonFiniteRiskError: a non-finite variance or bias (should not occur
            for valid inputs; guards against overflow).
    """
    ce = solve_companion(problem.spectrum, problem.aspect_ratio, lam)
    ratio = ce.v_prime / ce.v**2
    variance = problem.noise_var * (ratio - 1.0)
    s1 = bias_integrand(problem.spectrum, problem.source, ce.v)
    bias = problem.signal_var * ratio * s1
    total = variance + bias
    if not (math.isfinite(variance) and math.isfinite(bias)):
        raise NonFiniteRiskError(
            f"risk is not finite at lam={lam}: variance={variance}, bias={bias}"
        )
    return RiskBreakdown(lam=lam, variance=variance, bias=bias, total=total, companion=ce)


_VARIANTS: dict[str, Callable[[float], float]] = {
    "x": lambda t: t,
    "one": lambda t: 1.0,
    "inv": lambda t: 1.0 / t,
}


def closed_form_corollary1(problem: ProblemSpec, lam: float, variant: str) -> RiskBreakdown:
    """Closed-form bias for the three canonical sources, same variance term.

    variant "x"   (phi(tau) = tau):    bias = r2 * (v'/(g v^4) - 1/(g v^2))
    variant "one" (phi(tau) = 1):      bias = r2 * (1/(g v) - lam v'/(g v^2))
    variant "inv" (phi(tau) = 1/tau):  bias = r2 * (2 lam v'/(g v) + (1 - 1/g) v'/v^2 - 1/g)

    with g the aspect ratio.  Requires lam > 0 and a source whose tabulated
    values equal the variant on every atom (tolerance 1e-12).

    Raises:
        SourceMismatchError: the problem's source is not the requested variant.
        DomainError: lam <= 0 or unknown variant name.
    """
    if variant not in _VARIANTS:
        raise DomainError(f"unknown variant {variant!r}, expected one of {sorted(_VARIANTS)}")
    if lam <= 0.0:
        raise DomainError(f"closed forms hold for lam > 0, got {lam}")
    expected = _VARIANTS[variant]
    phis = problem.source.values_on(problem.spectrum)
    for t, p in zip(problem.spectrum.eigenvalues, phis):
        if abs(p - expected(t)) > VARIANT_MATCH_TOL:
            raise SourceMismatchError(
                f"source value {p} at eigenvalue {t} does not match variant "
                f"{variant!r} (expected {expected(t)})"
            )
    ce = solve_companion(problem.spectrum, problem.aspect_ratio, lam)
    g = problem.aspect_ratio
    v, vp = ce.v, ce.v_prime
    r2 = problem.signal_var
    if variant == "x":
        bias = r2 * (vp / (g * v**4) - 1.0 / (g * v**2))
    elif variant == "one":
        bias = r2 * (1.0 / (g * v) - lam * vp / (g * v**2))
    else:
        bias = r2 * (2.0 * lam * vp / (g * v) + (1.0 - 1.0 / g) * vp / v**2 - 1.0 / g)
    variance = problem.noise_var * (vp / v**2 - 1.0)
    total = variance + bias
    return RiskBreakdown(lam=lam, variance=variance, bias=bias, total=total, companion=ce)


def strong_weak_risk(
    rho1: float,
    rho2: float,
    psi1: float,
    phi1: float,
    phi2: float,
    aspect_ratio: float,
    noise_var: float,
    signal_var: float,
    lam: float,
) -> RiskBreakdown:
    """Risk for the two-atom strong/weak model, written out explicitly:

        total = (v'/v^2) * (noise_var
                            + signal_var * sum_i phi_i psi_i rho_i/(rho_i v + 1)^2)
                - noise_var.

    Same algebra as :func:`asymptotic_risk` on the two-atom problem; kept as
    an independent expression so the general path can be cross-checked.
    """
    spectrum, source = strong_weak_model(rho1, rho2, psi1, phi1, phi2)
    ce = solve_companion(spectrum, aspect_ratio, lam)
    v, vp = ce.v, ce.v_prime
    psi2 = 1.0 - psi1
    if len(spectrum) == 1:
        phi_bar = psi1 * phi1 + psi2 * phi2
        rho = spectrum.atoms[0][0]
        signal_sum = phi_bar * rho / (rho * v + 1.0) ** 2
    else:
        signal_sum = (
            phi1 * psi1 * rho1 / (rho1 * v + 1.0) ** 2
            + phi2 * psi2 * rho2 / (rho2 * v + 1.0) ** 2
        )
    ratio = vp / v**2
    total = ratio * (noise_var + signal_var * signal_sum) - noise_var
    variance = noise_var * (ratio - 1.0)
    bias = signal_var * ratio * signal_sum
    return RiskBreakdown(lam=lam, variance=variance, bias=bias, total=total, companion=ce)


def risk_derivative(problem: ProblemSpec, lam: float) -> float:
    """d(total risk)/d(lam) in closed form.

    With v, v', v'' at -lam and the source-weighted sums
    S1 = sum psi phi tau/(1+tau v)^2,  S2 = sum psi phi tau^2/(1+tau v)^3:

        R'(lam) = (2 v'^2/v^3 - v''/v^2) * (noise_var + signal_var * S1)
                  + 2 (v'/v)^2 * signal_var * S2.

    ``lam = 0`` gives the one-sided derivative at the interpolation boundary
    (aspect_ratio > 1 required there).
    """
    ce = solve_companion(problem.spectrum, problem.aspect_ratio, lam, with_second=True)
    v, vp, vpp = ce.v, ce.v_prime, ce.v_second
    taus = problem.spectrum.eigenvalues
    weights = problem.spectrum.weights
    phis = problem.source_values
    s1 = float(np.sum(weights * phis * taus / (1.0 + taus * v) ** 2))
    s2 = float(np.sum(weights * phis * taus**2 / (1.0 + taus * v) ** 3))
    lead = 2.0 * vp**2 / v**3 - vpp / v**2
    return lead * (problem.noise_var + problem.signal_var * s1) + (
        2.0 * (vp / v) ** 2 * problem.signal_var * s2
    )


def golden_section(
    f: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-6
) -> tuple[float, float]:
    """Golden-section minimization of a unimodal f on [a, b].

    Returns (argmin, min).  Terminates when the bracket is relatively
    smaller than ``rel_tol``.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_tol * (abs(a) + abs(b)) / 2.0 + 1e-15:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return (x, min(fc, fd))


def optimal_lambda(
    problem: ProblemSpec, lam_max: float | None = None
) -> tuple[float, RiskBreakdown]:
    """Risk-minimizing penalty and the risk there.

    For aspect_ratio > 1 the boundary lam = 0 is checked first through the
    analytic derivative; a nonnegative R'(0) means interpolation is optimal
    and no interior search runs.  Otherwise a coarse log-spaced scan brackets
    the minimum and golden-section refines it to relative tolerance 1e-6.
    Default search ceiling: 10 * max(1, noise_var * aspect_ratio /
    signal_var) * max(tau).
    """
    if lam_max is None:
        if problem.signal_var > 0.0:
            scale = max(1.0, problem.noise_var * problem.aspect_ratio / problem.signal_var)
        else:
            scale = 1.0
        lam_max = 10.0 * scale * problem.spectrum.max_eigenvalue
    if problem.aspect_ratio > 1.0:
        lo = 0.0
        if risk_derivative(problem, 0.0) >= 0.0:
            return 0.0, asymptotic_risk(problem, 0.0)
    else:
        lo = 1e-9

    def total(lam: float) -> float:
        return asymptotic_risk(problem, lam).total

    # Coarse bracket first: golden-section alone assumes unimodality on the
    # whole interval, the scan reduces that to a local assumption.
    grid = np.geomspace(max(lo, 1e-9 * lam_max), lam_max, 25)
    values = [total(x) for x in grid]
    k = int(np.argmin(values))
    left = lo if k == 0 else float(grid[k - 1])
    right = lam_max if k == len(grid) - 1 else float(grid[k + 1])
    lam_star, _ = golden_section(total, left, right)
    return lam_star, asymptotic_risk(problem, lam_star)


def interpolation_optimality(
    rho1: float, rho2: float, phi1: float, phi2: float, snr: float
) -> tuple[float, bool]:
    """Closed-form test for lam = 0 being optimal in the symmetric two-atom
    model (aspect ratio 2, equal atom masses 1/2, norm normalization
    phi1/2 + phi2/2 = 1).

    Returns ``(lhs, lhs >= 1)`` with

        lhs = snr * rho1 rho2 / (sqrt(rho1)+sqrt(rho2))^2
                  * ( (phi1 sqrt(rho1) + phi2 sqrt(rho2))
                      / (sqrt(rho1)+sqrt(rho2)) - 1 ),

    the sign of which matches the analytic risk derivative at zero.

    Raises:
        OrderViolationError: rho1 < rho2 or rho2 <= 0.
        NormalizationViolationError: phi1/2 + phi2/2 != 1 within 1e-12.
        ValueError: negative snr or phi.
    """
    if rho2 <= 0.0 or rho1 < rho2:
        raise OrderViolationError(f"need rho1 >= rho2 > 0, got rho1={rho1}, rho2={rho2}")
    if snr < 0.0:
        raise ValueError(f"snr must be >= 0, got {snr}")
    if phi1 < 0.0 or phi2 < 0.0:
        raise ValueError(f"phi values must be >= 0, got ({phi1}, {phi2})")
    if abs(0.5 * phi1 + 0.5 * phi2 - 1.0) > 1e-12:
        raise NormalizationViolationError(
            f"norm normalization phi1/2 + phi2/2 = 1 violated: {0.5 * phi1 + 0.5 * phi2}"
        )
    s1, s2 = math.sqrt(rho1), math.sqrt(rho2)
    alignment = (phi1 * s1 + phi2 * s2) / (s1 + s2) - 1.0
    lhs = snr * (rho1 * rho2 / (s1 + s2) ** 2) * alignment
    return lhs, lhs >= 1.0


@dataclass(frozen=True)
class OracleReference:
    """How the best linear (posterior-mean) estimator relates to ridge.

    For a constant source the oracle IS ridge at lam = noise_var *
    aspect_ratio / (signal_var * phi); then ``lam_equiv`` and ``risk`` are
    filled.  For non-constant sources there is no fixed-penalty equivalent
    and only the note is returned.
    """

    is_ridge_equivalent: bool
    lam_equiv: float | None
    risk: RiskBreakdown | None
    note: str


def oracle_risk_reference(problem: ProblemSpec) -> OracleReference:
    """Reference point for oracle-vs-ridge comparisons.

    The posterior-mean estimator under the problem's Gaussian prior equals
    ridge regression with penalty noise_var * aspect_ratio / (signal_var *
    phi) whenever the source is constant (phi folds into the prior scale);
    its asymptotic risk is then computable here.  Requires signal_var > 0
    for the equivalence (a zero-signal prior shrinks everything to zero).
    """
    values = [p for _, p in problem.source.values]
    const = values[0]
    is_const = all(abs(p - const) <= VARIANT_MATCH_TOL for p in values) and const > 0.0
    if not is_const or problem.signal_var <= 0.0:
        return OracleReference(
            is_ridge_equivalent=False,
            lam_equiv=None,
            risk=None,
            note=(
                "oracle equals ridge only for constant sources with positive "
                "signal; no fixed-penalty equivalent here"
            ),
        )
    lam_equiv = problem.noise_var * problem.aspect_ratio / (problem.signal_var * const)
    if lam_equiv == 0.0 and problem.aspect_ratio <= 1.0:
        return OracleReference(
            is_ridge_equivalent=True,
            lam_equiv=0.0,
            risk=None,
            note=(
                "noise-free oracle is the minimum-norm interpolator; its "
                "asymptotic risk formula needs aspect_ratio > 1"
            ),
        )
    risk = asymptotic_risk(problem, lam_equiv)
    return OracleReference(
        is_ridge_equivalent=True,
        lam_equiv=lam_equiv,
        risk=risk,
        note="constant source: oracle coincides with ridge at lam_equiv",
    )
