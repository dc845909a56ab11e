"""Atomic spectral measures, source functions, and problem descriptions.

The population covariance enters every limit formula only through its
spectral measure, represented here as finitely many weighted atoms: eigenvalue
``tau_i > 0`` carrying mass ``psi_i > 0`` with the masses summing to one.  A
source function assigns each atom a nonnegative prior weight ``phi(tau_i)``;
the regression parameter then has independent coordinates with variance
``signal_var * phi(tau_j) / d`` in the eigenbasis, so ``phi`` encodes how the
signal aligns with the covariance.  ``phi`` constant recovers the isotropic
prior, ``phi(tau) = tau`` puts signal on strong directions, ``phi(tau) = 1/tau``
on weak ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    LengthMismatchError,
    NonFiniteValueError,
    NonPositiveEigenvalueError,
    OrderViolationError,
    WeightsDoNotSumToOneError,
)

WEIGHT_SUM_TOL = 1e-12
#: Atoms closer than SNAP_TOL * max(tau) are merged into one.
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class AtomicSpectrum:
    """Finite atomic spectral measure, atoms sorted by descending eigenvalue.

    Construct through :func:`make_atomic_spectrum`, which validates, snaps
    near-duplicate eigenvalues together, and normalizes ordering.
    """

    atoms: tuple[tuple[float, float], ...]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def max_eigenvalue(self) -> float:
        return self.atoms[0][0]

    def __len__(self) -> int:
        return len(self.atoms)


def make_atomic_spectrum(
    pairs: Iterable[tuple[float, float]], snap_tol: float = SNAP_TOL
) -> AtomicSpectrum:
    """Build an :class:`AtomicSpectrum` from (eigenvalue, weight) pairs.

    Eigenvalues within ``snap_tol * max(tau)`` of each other are merged into a
    single atom (located at the largest member, an exact input value) carrying
    the summed weight.

    Raises:
        NonPositiveEigenvalueError: some eigenvalue is <= 0 or not finite.
        WeightsDoNotSumToOneError: weights do not sum to 1 within 1e-12.
        ValueError: empty input or a nonpositive weight.
    """
    items = [(float(t), float(w)) for t, w in pairs]
    if not items:
        raise ValueError("spectrum needs at least one atom")
    for t, w in items:
        if not math.isfinite(t) or t <= 0.0:
            raise NonPositiveEigenvalueError(f"eigenvalue must be finite and > 0, got {t}")
        if not math.isfinite(w) or w <= 0.0:
            raise ValueError(f"atom weight must be finite and > 0, got {w}")
    total = math.fsum(w for _, w in items)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightsDoNotSumToOneError(f"atom weights sum to {total!r}, expected 1")

    items.sort(key=lambda tw: -tw[0])
    snap = snap_tol * items[0][0]
    merged: list[tuple[float, float]] = []
    for t, w in items:
        if merged and merged[-1][0] - t <= snap:
            t0, w0 = merged[-1]
            merged[-1] = (t0, w0 + w)
        else:
            merged.append((t, w))
    return AtomicSpectrum(atoms=tuple(merged))


@dataclass(frozen=True)
class SourceFunction:
    """Nonnegative prior weights tabulated on the atoms of a spectrum.

    ``family`` records how the table was produced ("constant", "power", or
    "tabulated"); numerics only ever read the tabulated values.
    """

    values: tuple[tuple[float, float], ...]
    family: str = "tabulated"
    alpha: float | None = None

    @staticmethod
    def constant(spectrum: AtomicSpectrum, value: float = 1.0) -> "SourceFunction":
        _check_source_value(value)
        return SourceFunction(
            values=tuple((t, float(value)) for t, _ in spectrum.atoms), family="constant"
        )

    @staticmethod
    def power(spectrum: AtomicSpectrum, alpha: float) -> "SourceFunction":
        """phi(tau) = tau ** alpha evaluated exactly on the atoms."""
        vals = tuple((t, t**alpha) for t, _ in spectrum.atoms)
        for _, p in vals:
            _check_source_value(p)
        return SourceFunction(values=vals, family="power", alpha=float(alpha))

    @staticmethod
    def tabulated(
        table: Mapping[float, float] | Iterable[tuple[float, float]]
    ) -> "SourceFunction":
        items = table.items() if isinstance(table, Mapping) else table
        vals = sorted(((float(t), float(p)) for t, p in items), key=lambda tp: -tp[0])
        if not vals:
            raise ValueError("source table needs at least one entry")
        for _, p in vals:
            _check_source_value(p)
        return SourceFunction(values=tuple(vals), family="tabulated")

    def value_at(self, eigenvalue: float) -> float:
        for t, p in self.values:
            if t == eigenvalue:
                return p
        raise KeyError(f"source has no value at eigenvalue {eigenvalue!r}")

    def values_on(self, spectrum: AtomicSpectrum) -> np.ndarray:
        """Source values aligned with ``spectrum.atoms``; the table must cover
        exactly the atoms of the spectrum."""
        table = dict(self.values)
        missing = [t for t, _ in spectrum.atoms if t not in table]
        if missing or len(table) != len(spectrum):
            raise ValueError(
                "source is tabulated on "
                f"{sorted(table)} but the spectrum has atoms at "
                f"{sorted(t for t, _ in spectrum.atoms)}"
            )
        return np.array([table[t] for t, _ in spectrum.atoms])


def _check_source_value(p: float) -> None:
    if not math.isfinite(p):
        raise NonFiniteValueError(f"source value must be finite, got {p}")
    if p < 0.0:
        raise ValueError(f"source value must be >= 0, got {p}")


@dataclass(frozen=True)
class ProblemSpec:
    """Everything the limit formulas need: spectrum, source, aspect ratio
    ``gamma = lim d/n``, noise variance, and total signal strength
    ``signal_var = E ||beta||^2``."""

    spectrum: AtomicSpectrum
    source: SourceFunction
    aspect_ratio: float
    noise_var: float
    signal_var: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.aspect_ratio) and self.aspect_ratio > 0.0):
            raise ValueError(f"aspect_ratio must be > 0, got {self.aspect_ratio}")
        if not (math.isfinite(self.noise_var) and self.noise_var >= 0.0):
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        if not (math.isfinite(self.signal_var) and self.signal_var >= 0.0):
            raise ValueError(f"signal_var must be >= 0, got {self.signal_var}")
        self.source.values_on(self.spectrum)  # alignment check

    @property
    def source_values(self) -> np.ndarray:
        return self.source.values_on(self.spectrum)


def spectral_integral(spectrum: AtomicSpectrum, g: Callable[[float], float]) -> float:
    """Integral of ``g`` against the spectral measure: sum_i psi_i * g(tau_i).

    Raises NonFiniteValueError if ``g`` is not finite on some atom.
    """
    acc = 0.0
    for t, w in spectrum.atoms:
        val = g(t)
        if not math.isfinite(val):
            raise NonFiniteValueError(f"g({t}) = {val} is not finite")
        acc += w * val
    return acc


def strong_weak_model(
    rho1: float,
    rho2: float,
    psi1: float,
    phi1: float,
    phi2: float,
) -> tuple[AtomicSpectrum, SourceFunction]:
    """Two-atom spectrum: strong eigenvalue rho1 with mass psi1, weak rho2
    with mass 1 - psi1, and prior weights (phi1, phi2) on the two blocks.

    Equal eigenvalues merge to a single atom whose source value is the
    weight-averaged ``psi1*phi1 + (1-psi1)*phi2``.

    Raises:
        OrderViolationError: rho1 < rho2.
        NonPositiveEigenvalueError: rho2 <= 0.
        ValueError: psi1 outside (0, 1) or a negative phi.
    """
    if rho2 <= 0.0:
        raise NonPositiveEigenvalueError(f"rho2 must be > 0, got {rho2}")
    if rho1 < rho2:
        raise OrderViolationError(f"need rho1 >= rho2, got rho1={rho1}, rho2={rho2}")
    if not 0.0 < psi1 < 1.0:
        raise ValueError(f"psi1 must lie strictly inside (0, 1), got {psi1}")
    for p in (phi1, phi2):
        _check_source_value(p)
    psi2 = 1.0 - psi1
    spectrum = make_atomic_spectrum([(rho1, psi1), (rho2, psi2)])
    if len(spectrum) == 1:
        merged = psi1 * phi1 + psi2 * phi2
        source = SourceFunction.tabulated({spectrum.atoms[0][0]: merged})
    else:
        source = SourceFunction.tabulated({rho1: phi1, rho2: phi2})
    return spectrum, source


def caption_normalized_source(rho1: float, rho2: float, psi1: float) -> tuple[float, float]:
    """Solve the two figure-caption normalizations for (phi1, phi2):

        psi1*rho1*phi1 + psi2*rho2*phi2 = 1   (unit signal)
        psi1*phi1      + psi2*phi2      = 1   (unit parameter norm)

    Requires rho1 != rho2 (otherwise the linear system is singular) and
    rho2 < 1 < rho1 for the solution to be nonnegative.
    """
    if not 0.0 < psi1 < 1.0:
        raise ValueError(f"psi1 must lie strictly inside (0, 1), got {psi1}")
    psi2 = 1.0 - psi1
    det = psi1 * psi2 * (rho1 - rho2)
    if det == 0.0:
        raise ValueError("normalization system is singular when rho1 == rho2")
    phi1 = (1.0 - rho2) / (psi1 * (rho1 - rho2))
    phi2 = (rho1 - 1.0) / (psi2 * (rho1 - rho2))
    if phi1 < 0.0 or phi2 < 0.0:
        raise ValueError(
            "normalizations give a negative phi; they need rho2 < 1 < rho1 "
            f"(got rho1={rho1}, rho2={rho2})"
        )
    return phi1, phi2


def spectrum_from_eigenvalues(eigenvalues: Sequence[float]) -> AtomicSpectrum:
    """Empirical atomic measure of a finite eigenvalue list (weights = multiplicities / d)."""
    eigs = np.asarray(eigenvalues, dtype=float)
    if eigs.ndim != 1 or eigs.size == 0:
        raise ValueError("eigenvalues must be a nonempty 1-d sequence")
    d = eigs.size
    return make_atomic_spectrum([(t, 1.0 / d) for t in eigs])


def source_from_parameter(
    beta: Sequence[float], eigenvalues: Sequence[float]
) -> SourceFunction:
    """Source induced by a deterministic parameter vector.

    For each distinct eigenvalue tau with index set J(tau),

        phi(tau) = (d / |J(tau)|) * sum_{j in J(tau)} beta_j^2,

    so a prior with per-coordinate variance phi(tau_j)/d reproduces the
    parameter's second moments blockwise (signal_var = 1 convention; fold any
    overall scale into phi or signal_var).

    Raises LengthMismatchError when the two sequences disagree in length.
    """
    b = np.asarray(beta, dtype=float)
    eigs = np.asarray(eigenvalues, dtype=float)
    if b.shape != eigs.shape or b.ndim != 1:
        raise LengthMismatchError(
            f"beta has shape {b.shape} but eigenvalues has shape {eigs.shape}"
        )
    spectrum = spectrum_from_eigenvalues(eigs)
    d = eigs.size
    order = np.argsort(-eigs, kind="stable")
    # Same merge walk as make_atomic_spectrum, so the table lands exactly on
    # the spectrum's atoms (group representative = largest member).
    snap = SNAP_TOL * float(eigs[order[0]])
    table: dict[float, float] = {}
    rep = float(eigs[order[0]])
    group: list[int] = []
    for j in order:
        t = float(eigs[j])
        if group and rep - t <= snap:
            group.append(j)
        else:
            if group:
                table[rep] = float(d / len(group) * np.sum(b[group] ** 2))
            rep = t
            group = [j]
    table[rep] = float(d / len(group) * np.sum(b[group] ** 2))
    got = sorted(table)
    expected = sorted(t for t, _ in spectrum.atoms)
    if got != expected:  # pragma: no cover - guarded by shared merge logic
        raise RuntimeError(f"grouping drifted from spectrum atoms: {got} vs {expected}")
    return SourceFunction.tabulated(table)
