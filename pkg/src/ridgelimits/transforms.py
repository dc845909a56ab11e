"""Companion Stieltjes transform machinery on the negative real axis.

For an atomic spectral measure with atoms ``(tau_i, psi_i)`` and aspect ratio
``gamma = lim d/n``, the companion transform evaluated at ``z = -lam``
(written plain ``v`` below, always > 0 for ``lam >= 0``) is the unique
positive root of the fixed-point equation

    1/v = lam + gamma * sum_i psi_i * tau_i / (1 + tau_i * v).

``v`` is the Stieltjes transform of the limiting spectrum of the n x n Gram
matrix ``X X^T / n``; the d x d sample covariance's transform ``m`` follows
from the exact companion relation ``gamma * (m - 1/lam) = v - 1/lam``.  All
risk formulas are rational in ``v`` and its z-derivatives, so this module is
the only place any equation gets solved numerically.

Solver strategy: plain fixed-point iteration on the display above converges
globally here (the map is increasing with a single crossing and slope < 1 at
the root wherever the derivative below is finite); a bracketed bisection
fallback covers slow regimes near ``lam = 0``, ``gamma = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DomainError,
    NoConvergenceError,
    NonFiniteValueError,
    SingularDerivativeError,
)
from .spectral import AtomicSpectrum, SourceFunction

#: Convergence tolerance on successive fixed-point iterates.
ITERATION_TOL = 1e-12
#: Residual the returned root must satisfy: |v - G(v)| <= RESIDUAL_TOL * max(1, v)
#: (absolute for v <= 1; relative beyond, where absolute 1e-10 would sit under
#: machine precision -- v grows like (1-gamma)/lam as lam -> 0 for gamma < 1).
RESIDUAL_TOL = 1e-10
MAX_ITERATIONS = 10_000
_BISECTION_STEPS = 200
_STALL_WINDOW = 16


@dataclass(frozen=True)
class CompanionEval:
    """One solved point: v(-lam), its first (and optionally second)
    z-derivative, the fixed-point residual, and the iteration count."""

    lam: float
    v: float
    v_prime: float
    residual: float
    iterations: int
    v_second: float | None = None


def _fixed_point_map(taus: np.ndarray, weights: np.ndarray, aspect_ratio: float,
                     lam: float, v: float) -> float:
    return 1.0 / (lam + aspect_ratio * float(np.sum(weights * taus / (1.0 + taus * v))))


def _solve_value(
    spectrum: AtomicSpectrum, aspect_ratio: float, lam: float
) -> tuple[float, float, int]:
    """Root of the fixed-point equation; returns (v, residual, iterations)."""
    taus = spectrum.eigenvalues
    weights = spectrum.weights
    mean_tau = float(np.sum(weights * taus))

    v = 1.0 / (lam + aspect_ratio * mean_tau)
    iterations = 0
    best_step = math.inf
    stalled = 0
    for _ in range(MAX_ITERATIONS):
        v_next = _fixed_point_map(taus, weights, aspect_ratio, lam, v)
        iterations += 1
        step = abs(v_next - v)
        v = v_next
        if step <= ITERATION_TOL:
            break
        # Steps bottom out at machine precision of v long before the absolute
        # tolerance when v is huge; hand over to bisection instead of spinning.
        if step < best_step:
            best_step = step
            stalled = 0
        else:
            stalled += 1
            if stalled >= _STALL_WINDOW:
                break
    residual = abs(v - _fixed_point_map(taus, weights, aspect_ratio, lam, v))
    if residual <= RESIDUAL_TOL * max(1.0, v):
        return v, residual, iterations

    v = _solve_bisection(spectrum, aspect_ratio, lam)
    residual = abs(v - _fixed_point_map(taus, weights, aspect_ratio, lam, v))
    if residual > RESIDUAL_TOL * max(1.0, v):
        raise NoConvergenceError(
            f"companion solve failed at lam={lam}, gamma={aspect_ratio}: "
            f"residual {residual:.3e} after bisection fallback"
        )
    return v, residual, iterations + _BISECTION_STEPS


def _solve_bisection(spectrum: AtomicSpectrum, aspect_ratio: float, lam: float) -> float:
    """Bracketed bisection on g(v) = v - G(v); g < 0 near zero, g > 0 at the
    upper end (1/lam for lam > 0; a doubled cap when lam = 0)."""
    taus = spectrum.eigenvalues
    weights = spectrum.weights

    def g(v: float) -> float:
        return v - _fixed_point_map(taus, weights, aspect_ratio, lam, v)

    lo = 1e-15
    if lam > 0.0:
        hi = 1.0 / lam
    else:
        hi = 1.0 / (aspect_ratio * float(np.sum(weights * taus)))
        doublings = 0
        while g(hi) < 0.0:
            hi *= 2.0
            doublings += 1
            if doublings > 200:
                raise NoConvergenceError(
                    f"no sign change while expanding the ridgeless bracket "
                    f"(gamma={aspect_ratio})"
                )
    if g(lo) > 0.0:
        return lo
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def companion_derivative(
    spectrum: AtomicSpectrum, aspect_ratio: float, v: float
) -> float:
    """z-derivative of the companion transform at a solved point:

        v' = 1 / ( 1/v^2 - gamma * sum_i psi_i * tau_i^2 / (1 + tau_i v)^2 ).

    Raises SingularDerivativeError when the denominator is not strictly
    positive (the spectral edge has reached the evaluation point).
    """
    taus = spectrum.eigenvalues
    weights = spectrum.weights
    denom = 1.0 / v**2 - aspect_ratio * float(
        np.sum(weights * taus**2 / (1.0 + taus * v) ** 2)
    )
    if not math.isfinite(denom) or denom <= 0.0:
        raise SingularDerivativeError(
            f"derivative denominator {denom!r} at v={v}, gamma={aspect_ratio}"
        )
    return 1.0 / denom


def companion_second_derivative(
    spectrum: AtomicSpectrum, aspect_ratio: float, v: float, v_prime: float
) -> float:
    """Second z-derivative in terms of the solved pair (v, v'):

        v'' = 2 * (1 - gamma * sum_i psi_i * tau_i^3 v^3 / (1 + tau_i v)^3)
                * (v'/v)^3.
    """
    taus = spectrum.eigenvalues
    weights = spectrum.weights
    bracket = 1.0 - aspect_ratio * float(
        np.sum(weights * (taus * v) ** 3 / (1.0 + taus * v) ** 3)
    )
    return 2.0 * bracket * (v_prime / v) ** 3


def solve_companion(
    spectrum: AtomicSpectrum,
    aspect_ratio: float,
    lam: float,
    *,
    with_second: bool = False,
    method: str = "auto",
) -> CompanionEval:
    """Solve for v(-lam) and its derivative(s).

    ``lam = 0`` requires ``aspect_ratio > 1`` (the ridgeless/interpolation
    regime); see :func:`solve_companion_ridgeless`.  ``method`` selects the
    root finder: "auto" (iteration with bisection fallback, the default),
    "bisection" (forced, kept as a cross-check).

    Raises:
        DomainError: lam < 0, or lam = 0 with aspect_ratio <= 1.
        NoConvergenceError: no root to tolerance by either method.
    """
    if not (math.isfinite(aspect_ratio) and aspect_ratio > 0.0):
        raise DomainError(f"aspect_ratio must be > 0, got {aspect_ratio}")
    if not math.isfinite(lam) or lam < 0.0:
        raise DomainError(f"lam must be >= 0, got {lam}")
    if lam == 0.0 and aspect_ratio <= 1.0:
        raise DomainError(
            "lam = 0 needs aspect_ratio > 1 (interpolation exists only in the "
            f"overparameterized regime), got aspect_ratio={aspect_ratio}"
        )
    if method == "auto":
        v, residual, iterations = _solve_value(spectrum, aspect_ratio, lam)
    elif method == "bisection":
        v = _solve_bisection(spectrum, aspect_ratio, lam)
        residual = abs(
            v - _fixed_point_map(spectrum.eigenvalues, spectrum.weights,
                                 aspect_ratio, lam, v)
        )
        iterations = _BISECTION_STEPS
        if residual > RESIDUAL_TOL * max(1.0, v):
            raise NoConvergenceError(
                f"bisection residual {residual:.3e} at lam={lam}, gamma={aspect_ratio}"
            )
    else:
        raise ValueError(f"unknown method {method!r}")
    v_prime = companion_derivative(spectrum, aspect_ratio, v)
    v_second = (
        companion_second_derivative(spectrum, aspect_ratio, v, v_prime)
        if with_second
        else None
    )
    return CompanionEval(
        lam=lam, v=v, v_prime=v_prime, residual=residual,
        iterations=iterations, v_second=v_second,
    )


def solve_companion_ridgeless(
    spectrum: AtomicSpectrum, aspect_ratio: float, *, with_second: bool = False
) -> CompanionEval:
    """v(0) for the minimum-norm interpolator; only defined for gamma > 1."""
    if aspect_ratio <= 1.0:
        raise DomainError(
            f"ridgeless limit needs aspect_ratio > 1, got {aspect_ratio}"
        )
    return solve_companion(spectrum, aspect_ratio, 0.0, with_second=with_second)


def two_atom_ridgeless_closed_form(
    rho1: float, rho2: float, psi1: float, aspect_ratio: float
) -> float:
    """Explicit v(0) for a two-atom spectrum, used as a solver oracle.

    Clearing denominators in the fixed-point equation at lam = 0 gives

        (1-gamma) rho1 rho2 v^2 + (rho1 + rho2 - gamma psi1 rho1
                                   - gamma psi2 rho2) v + 1 = 0,

    whose roots have opposite signs for gamma > 1 (product = 1/((1-gamma)
    rho1 rho2) < 0); both are computed and the positive one returned.
    """
    if aspect_ratio <= 1.0:
        raise DomainError(f"ridgeless limit needs aspect_ratio > 1, got {aspect_ratio}")
    psi2 = 1.0 - psi1
    a = (1.0 - aspect_ratio) * rho1 * rho2
    b = rho1 + rho2 - aspect_ratio * (psi1 * rho1 + psi2 * rho2)
    c = 1.0
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        raise NoConvergenceError("quadratic discriminant is negative")
    roots = ((-b + math.sqrt(disc)) / (2.0 * a), (-b - math.sqrt(disc)) / (2.0 * a))
    positive = [r for r in roots if r > 0.0]
    if len(positive) != 1:
        raise NoConvergenceError(f"expected exactly one positive root, got {roots}")
    return positive[0]


def stieltjes_from_companion(aspect_ratio: float, lam: float, v: float) -> float:
    """Stieltjes transform of the sample covariance spectrum at -lam:

        m = (v + (gamma - 1)/lam) / gamma,

    equivalently the exact relation lam * v = 1 - gamma * (1 - lam * m).
    Requires lam > 0 (the relation divides by lam).
    """
    if lam <= 0.0:
        raise DomainError(f"stieltjes_from_companion needs lam > 0, got {lam}")
    return (v + (aspect_ratio - 1.0) / lam) / aspect_ratio


def bias_integrand(spectrum: AtomicSpectrum, source: SourceFunction, v: float) -> float:
    """Source-weighted resolvent moment sum_i psi_i phi_i tau_i / (1 + tau_i v)^2.

    Multiplied by v'/v^2 and the signal strength this is exactly the
    asymptotic bias; it also equals theta + lam * d(theta)/d(lam) for the
    theta of :func:`theta_phi`.
    """
    taus = spectrum.eigenvalues
    weights = spectrum.weights
    phis = source.values_on(spectrum)
    val = float(np.sum(weights * phis * taus / (1.0 + taus * v) ** 2))
    if not math.isfinite(val):
        raise NonFiniteValueError(f"bias integrand is not finite: {val}")
    return val


def theta_phi(
    spectrum: AtomicSpectrum, source: SourceFunction, lam: float, v: float
) -> tuple[float, float]:
    """Source-weighted transform and its lam-compensated combination.

    Returns ``(theta, integrand)`` where

        theta     = sum_i psi_i phi_i / (lam * (1 + tau_i v)),
        integrand = sum_i psi_i phi_i tau_i / (1 + tau_i v)^2,

    and ``theta + lam * d(theta)/d(lam) = v' * integrand`` links the two.
    ``theta`` itself diverges at lam = 0, hence the lam > 0 requirement;
    use :func:`bias_integrand` alone in the ridgeless limit.
    """
    if lam <= 0.0:
        raise DomainError(f"theta_phi needs lam > 0, got {lam}")
    taus = spectrum.eigenvalues
    weights = spectrum.weights
    phis = source.values_on(spectrum)
    theta = float(np.sum(weights * phis / (lam * (1.0 + taus * v))))
    return theta, bias_integrand(spectrum, source, v)
