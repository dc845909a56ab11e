"""Finite-sample Gaussian simulation for cross-checking the limit formulas.

A simulated problem realizes the atomic spectrum as a diagonal covariance
with blocks of repeated eigenvalues (rotation invariance of the Gaussian
design makes the diagonal choice lossless), apportioning dimensions to atoms
by largest remainder.  The workhorse is the exact conditional expectation of
excess risk over (parameter, noise) given one design X, computed from trace
identities through a single symmetric eigendecomposition that is reused
across any penalty grid:

    variance = noise_var * (d/n) * [t1(lam) - lam * t2(lam)]
    bias     = lam^2 * signal_var * t3(lam)

    t1 = (1/d) tr((S+lam)^-1 Sigma)
    t2 = (1/d) tr((S+lam)^-2 Sigma)
    t3 = (1/d) tr((S+lam)^-1 Sigma (S+lam)^-1 Phi(Sigma))

with S = X^T X / n.  At lam = 0 the same expectations for the minimum-norm
interpolator use the pseudoinverse and the kernel projector instead.
Replications own independent RNG streams keyed by (seed, replication_index),
so parallel execution is bit-identical to sequential.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import (
    DecompositionFailureError,
    DomainError,
    LengthMismatchError,
    SingularPriorError,
)
from .spectral import AtomicSpectrum, SourceFunction
from .transforms import bias_integrand, solve_companion


def apportion(weights: Sequence[float], total: int) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` slots to ``weights``.

    Returns integer counts summing to ``total``; ties in the remainders are
    broken by position (earlier weight wins), so the result is deterministic.
    """
    w = np.asarray(weights, dtype=float)
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    quotas = w * total
    base = np.floor(quotas).astype(int)
    leftover = total - int(base.sum())
    if leftover:
        order = np.argsort(-(quotas - base), kind="stable")
        base[order[:leftover]] += 1
    return base


@dataclass(frozen=True)
class SimConfig:
    """One simulation setting: dimension, aspect ratio (n = round(d/gamma)),
    the population model, penalty, and replication bookkeeping."""

    dim: int
    aspect_ratio: float
    spectrum: AtomicSpectrum
    source: SourceFunction
    noise_var: float
    signal_var: float
    lam: float
    replications: int
    seed: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not (math.isfinite(self.aspect_ratio) and self.aspect_ratio > 0.0):
            raise ValueError(f"aspect_ratio must be > 0, got {self.aspect_ratio}")
        if self.lam < 0.0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.replications < 0:
            raise ValueError(f"replications must be >= 0, got {self.replications}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.noise_var < 0.0 or self.signal_var < 0.0:
            raise ValueError("noise_var and signal_var must be >= 0")
        self.source.values_on(self.spectrum)

    @property
    def n_samples(self) -> int:
        return max(1, int(round(self.dim / self.aspect_ratio)))

    @property
    def block_dims(self) -> np.ndarray:
        """Per-atom dimension counts (largest-remainder rounding of psi_i * d)."""
        return apportion(self.spectrum.weights, self.dim)

    @property
    def eigenvalue_vector(self) -> np.ndarray:
        """Realized covariance diagonal: tau_i repeated block_dims[i] times."""
        return np.repeat(self.spectrum.eigenvalues, self.block_dims)

    @property
    def source_vector(self) -> np.ndarray:
        """Per-coordinate source values aligned with eigenvalue_vector."""
        return np.repeat(self.source.values_on(self.spectrum), self.block_dims)


@dataclass(frozen=True)
class Dataset:
    """One replication: design X (n x d), responses y, the drawn parameter,
    and the raw noise vector (before scaling by the noise std)."""

    design: np.ndarray
    responses: np.ndarray
    parameter: np.ndarray
    noise: np.ndarray


def _rng(config: SimConfig, replication_index: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, replication_index])


def sample_design(config: SimConfig, replication_index: int) -> np.ndarray:
    """Design matrix only; consumes the same leading stream block as
    :func:`sample_dataset`, so both agree on X for a given replication."""
    rng = _rng(config, replication_index)
    n, d = config.n_samples, config.dim
    return rng.standard_normal((n, d)) * np.sqrt(config.eigenvalue_vector)


def sample_dataset(config: SimConfig, replication_index: int) -> Dataset:
    """Draw (X, beta, noise) for one replication; y = X beta + sigma * noise.

    Draw order is fixed (X, then beta, then noise) and the stream is keyed by
    (seed, replication_index), so every replication is reproducible in
    isolation.  beta coordinates are independent centered Gaussians with
    variance signal_var * phi(tau_j) / d.
    """
    rng = _rng(config, replication_index)
    n, d = config.n_samples, config.dim
    design = rng.standard_normal((n, d)) * np.sqrt(config.eigenvalue_vector)
    parameter = rng.standard_normal(d) * np.sqrt(
        config.signal_var * config.source_vector / d
    )
    noise = rng.standard_normal(n)
    responses = design @ parameter + math.sqrt(config.noise_var) * noise
    return Dataset(design=design, responses=responses, parameter=parameter, noise=noise)


def _ridge_solve(X: np.ndarray, responses: np.ndarray, lam: float) -> np.ndarray:
    """Ridge solve shared by every response column (the design factorization
    is the expensive part, so batch the right-hand sides)."""
    if lam < 0.0:
        raise DomainError(f"lam must be >= 0, got {lam}")
    n, d = X.shape
    if lam == 0.0:
        rcond = d * np.finfo(X.dtype).eps
        return np.linalg.pinv(X, rcond=rcond) @ responses
    gram = X.T @ X / n + lam * np.eye(d)
    return np.linalg.solve(gram, X.T @ responses / n)


def ridge_fit(dataset: Dataset, lam: float) -> np.ndarray:
    """Ridge estimate (X^T X/n + lam I)^-1 X^T y / n; lam = 0 is the
    minimum-norm interpolator via the pseudoinverse (singular values below
    d * machine_eps * s_max are treated as zero)."""
    return _ridge_solve(dataset.design, dataset.responses, lam)


def oracle_fit(
    dataset: Dataset,
    source_vector: np.ndarray,
    noise_var: float,
    signal_var: float,
) -> np.ndarray:
    """Posterior-mean (best linear) estimate under the Gaussian prior with
    per-coordinate variances signal_var * phi_j / d:

        (X^T X/n + (noise_var/signal_var) (d/n) diag(1/phi))^-1 X^T y / n.

    Raises SingularPriorError when some phi_j = 0 (the prior precision needs
    1/phi), ValueError when signal_var <= 0.
    """
    if signal_var <= 0.0:
        raise ValueError(f"signal_var must be > 0 for the oracle, got {signal_var}")
    phis = np.asarray(source_vector, dtype=float)
    if np.any(phis == 0.0):
        raise SingularPriorError("oracle needs strictly positive source values")
    X, y = dataset.design, dataset.responses
    n, d = X.shape
    if phis.shape != (d,):
        raise LengthMismatchError(f"source_vector has shape {phis.shape}, expected ({d},)")
    penalty = (noise_var / signal_var) * (d / n) / phis
    gram = X.T @ X / n + np.diag(penalty)
    return np.linalg.solve(gram, X.T @ y / n)


def excess_risk(
    beta_hat: np.ndarray, beta: np.ndarray, eigenvalue_vector: np.ndarray
) -> float:
    """Out-of-sample excess risk ||Sigma^(1/2)(beta_hat - beta)||^2 for the
    diagonal realized covariance."""
    diff = beta_hat - beta
    return float(np.sum(eigenvalue_vector * diff * diff))


class DesignConditional:
    """Exact conditional expectations given one design, any penalty.

    Performs the O(d^3) eigendecomposition of S = X^T X / n once;
    per-penalty evaluations afterwards are O(d^2) (plus one lazy O(d^3)
    rotation each for the Sigma and Phi(Sigma) congruences).
    """

    def __init__(
        self,
        X: np.ndarray,
        eigenvalue_vector: np.ndarray,
        source_vector: np.ndarray,
    ) -> None:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-d, got shape {X.shape}")
        n, d = X.shape
        sigma = np.asarray(eigenvalue_vector, dtype=float)
        phi = np.asarray(source_vector, dtype=float)
        if sigma.shape != (d,) or phi.shape != (d,):
            raise LengthMismatchError(
                f"eigenvalue_vector {sigma.shape} and source_vector {phi.shape} "
                f"must both have shape ({d},)"
            )
        self.n, self.d = n, d
        self._sigma, self._phi = sigma, phi
        try:
            evals, Q = np.linalg.eigh(X.T @ X / n)
        except np.linalg.LinAlgError as exc:
            raise DecompositionFailureError(f"eigh failed: {exc}") from exc
        self._evals, self._Q = evals, Q
        # diag of Q^T Sigma Q, enough for t1/t2/variance
        self._sigma_diag_rot = np.einsum("j,jk,jk->k", sigma, Q, Q)
        self._sigma_rot: np.ndarray | None = None
        self._phi_rot: np.ndarray | None = None

    def _full_rotations(self) -> tuple[np.ndarray, np.ndarray]:
        if self._sigma_rot is None:
            Q = self._Q
            self._sigma_rot = Q.T @ (self._sigma[:, None] * Q)
            self._phi_rot = Q.T @ (self._phi[:, None] * Q)
        return self._sigma_rot, self._phi_rot

    def traces(self, lam: float) -> tuple[float, float, float]:
        """(t1, t2, t3) as defined in the module docstring; lam > 0."""
        if lam <= 0.0:
            raise DomainError(f"traces need lam > 0, got {lam}")
        res = 1.0 / (self._evals + lam)
        t1 = float(self._sigma_diag_rot @ res) / self.d
        t2 = float(self._sigma_diag_rot @ res**2) / self.d
        sig_rot, phi_rot = self._full_rotations()
        t3 = float(np.einsum("kl,kl,k,l->", sig_rot, phi_rot, res, res)) / self.d
        return t1, t2, t3

    def _kernel_mask(self) -> np.ndarray:
        cutoff = self.d * np.finfo(float).eps * float(np.max(self._evals, initial=0.0))
        return self._evals <= cutoff

    def risk(self, lam: float, noise_var: float, signal_var: float) -> tuple[float, float]:
        """(variance, bias) of ridge at ``lam`` (minimum-norm when lam = 0),
        conditionally on the design."""
        if lam < 0.0:
            raise DomainError(f"lam must be >= 0, got {lam}")
        if lam > 0.0:
            t1, t2, t3 = self.traces(lam)
            variance = noise_var * (self.d / self.n) * (t1 - lam * t2)
            bias = lam**2 * signal_var * t3
            return variance, bias
        dropped = self._kernel_mask()
        kept = ~dropped
        variance = noise_var / self.n * float(
            np.sum(self._sigma_diag_rot[kept] / self._evals[kept])
        )
        sig_rot, phi_rot = self._full_rotations()
        block = sig_rot[np.ix_(dropped, dropped)] * phi_rot[np.ix_(dropped, dropped)]
        bias = signal_var / self.d * float(np.sum(block))
        return variance, bias

    def risk_fixed_parameter(
        self, lam: float, beta: np.ndarray, noise_var: float
    ) -> tuple[float, float]:
        """(variance, bias) for a deterministic parameter vector: the noise
        expectation is taken, the bias is the exact shrinkage error of beta."""
        if lam < 0.0:
            raise DomainError(f"lam must be >= 0, got {lam}")
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.d,):
            raise LengthMismatchError(f"beta has shape {beta.shape}, expected ({self.d},)")
        u = self._Q.T @ beta
        sig_rot, _ = self._full_rotations()
        if lam > 0.0:
            res = 1.0 / (self._evals + lam)
            t1 = float(self._sigma_diag_rot @ res) / self.d
            t2 = float(self._sigma_diag_rot @ res**2) / self.d
            variance = noise_var * (self.d / self.n) * (t1 - lam * t2)
            w = u * res
            bias = lam**2 * float(w @ sig_rot @ w)
            return variance, bias
        dropped = self._kernel_mask()
        kept = ~dropped
        variance = noise_var / self.n * float(
            np.sum(self._sigma_diag_rot[kept] / self._evals[kept])
        )
        w = np.where(dropped, u, 0.0)
        bias = float(w @ sig_rot @ w)
        return variance, bias


def conditional_expected_risk(
    X: np.ndarray,
    lam: float,
    eigenvalue_vector: np.ndarray,
    source_vector: np.ndarray,
    noise_var: float,
    signal_var: float,
) -> tuple[float, float]:
    """(variance, bias) of ridge at ``lam`` given the design; see
    :class:`DesignConditional` for the formulas and reuse across a grid."""
    dc = DesignConditional(X, eigenvalue_vector, source_vector)
    return dc.risk(lam, noise_var, signal_var)


def oracle_conditional_risk(
    X: np.ndarray,
    eigenvalue_vector: np.ndarray,
    source_vector: np.ndarray,
    noise_var: float,
    signal_var: float,
) -> tuple[float, float]:
    """(variance, bias) of the posterior-mean estimator given the design.

    With A = (S + c diag(1/phi))^-1, c = (noise_var/signal_var)(d/n):

        variance = (noise_var/n) tr(A Sigma A S)
        bias     = (signal_var c^2/d) sum_j (A Sigma A)_jj / phi_j.
    """
    if signal_var <= 0.0:
        raise ValueError(f"signal_var must be > 0 for the oracle, got {signal_var}")
    phis = np.asarray(source_vector, dtype=float)
    if np.any(phis == 0.0):
        raise SingularPriorError("oracle needs strictly positive source values")
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    sigma = np.asarray(eigenvalue_vector, dtype=float)
    S = X.T @ X / n
    c = (noise_var / signal_var) * (d / n)
    A = np.linalg.solve(S + np.diag(c / phis), np.eye(d))
    M = (A * sigma) @ A  # A Sigma A, A symmetric
    variance = noise_var / n * float(np.sum(M * S))
    bias = signal_var * c**2 / d * float(np.sum(np.diag(M) / phis))
    return variance, bias


def empirical_trace_limits(
    X: np.ndarray,
    lam: float,
    eigenvalue_vector: np.ndarray,
    source_vector: np.ndarray,
) -> tuple[float, float, float]:
    """Finite-d resolvent traces (t1, t2, t3) for one design; lam > 0."""
    return DesignConditional(X, eigenvalue_vector, source_vector).traces(lam)


def trace_limits_theory(
    spectrum: AtomicSpectrum,
    source: SourceFunction,
    aspect_ratio: float,
    lam: float,
) -> tuple[float, float, float]:
    """Almost-sure limits of the three traces, written in the companion
    transform (g = aspect_ratio, v = v(-lam), v' its derivative):

        t1 -> (1 - lam v) / (g lam v)
        t2 -> (v - lam v') / (g (lam v)^2)
        t3 -> v' * sum_i psi_i phi_i tau_i/(1 + tau_i v)^2 / (lam v)^2
    """
    if lam <= 0.0:
        raise DomainError(f"trace limits need lam > 0, got {lam}")
    ce = solve_companion(spectrum, aspect_ratio, lam)
    v, vp = ce.v, ce.v_prime
    g = aspect_ratio
    t1 = (1.0 - lam * v) / (g * lam * v)
    t2 = (v - lam * vp) / (g * (lam * v) ** 2)
    t3 = vp * bias_integrand(spectrum, source, v) / (lam * v) ** 2
    return t1, t2, t3


@dataclass(frozen=True)
class McEstimate:
    """Replication average with its standard error (0.0 when only one
    replication exists; a sample standard deviation needs two)."""

    mean: float
    stderr: float
    replications: int


_QUANTITIES = (
    "risk",
    "variance",
    "bias",
    "risk-realized",
    "variance-realized",
    "bias-realized",
    "decomposition-realized",
    "traces",
    "estimator-comparison",
)


def replicate(
    config: SimConfig,
    quantity: str = "risk",
    max_workers: int = 1,
) -> McEstimate | tuple[McEstimate, McEstimate, McEstimate]:
    """Replication driver; every replication owns stream (seed, index).

    quantity:
      "risk" / "variance" / "bias": conditional expected risk of ridge at
          config.lam (minimum-norm when lam = 0), averaged over designs.
          Integrating out (parameter, noise) analytically makes these very
          tight; their spread does not reflect a full experiment.
      "risk-realized" / "variance-realized" / "bias-realized": one drawn
          dataset per replication; the bias is the excess risk of the
          noise-free fit, the variance the quadratic form of the fit minus
          its noise-free counterpart.  Unbiased for the same expectations
          with the scatter of an actual experiment, which is what error
          bars on a simulation overlay should show.
      "decomposition-realized": (variance, bias, total) from the same drawn
          datasets; returns three estimates.  total is measured directly,
          so it differs from variance + bias by the sampled cross term.
      "traces": the triple (t1, t2, t3) at config.lam; returns three
          estimates.
      "estimator-comparison": conditional risk of ridge at config.lam minus
          conditional risk of the oracle (nonnegative in expectation).

    Results are independent of max_workers: replication i's value depends
    only on (seed, i), and aggregation runs in index order with numpy's
    pairwise summation.
    """
    if quantity not in _QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}, expected one of {_QUANTITIES}")
    if config.replications < 1:
        raise ValueError("replicate needs at least one replication")
    sigma_vec = config.eigenvalue_vector
    phi_vec = config.source_vector

    def one(index: int) -> tuple[float, ...]:
        if quantity.endswith("-realized"):
            data = sample_dataset(config, index)
            pair = np.column_stack((data.responses, data.design @ data.parameter))
            fitted, centre = _ridge_solve(data.design, pair, config.lam).T
            variance = excess_risk(fitted, centre, sigma_vec)
            bias = excess_risk(centre, data.parameter, sigma_vec)
            total = excess_risk(fitted, data.parameter, sigma_vec)
            if quantity == "bias-realized":
                return (bias,)
            if quantity == "variance-realized":
                return (variance,)
            if quantity == "decomposition-realized":
                return (variance, bias, total)
            return (total,)
        X = sample_design(config, index)
        dc = DesignConditional(X, sigma_vec, phi_vec)
        if quantity == "traces":
            return dc.traces(config.lam)
        if quantity == "estimator-comparison":
            variance, bias = dc.risk(config.lam, config.noise_var, config.signal_var)
            o_var, o_bias = oracle_conditional_risk(
                X, sigma_vec, phi_vec, config.noise_var, config.signal_var
            )
            return ((variance + bias) - (o_var + o_bias),)
        variance, bias = dc.risk(config.lam, config.noise_var, config.signal_var)
        if quantity == "variance":
            return (variance,)
        if quantity == "bias":
            return (bias,)
        return (variance + bias,)

    indices = range(config.replications)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(one, indices))
    else:
        rows = [one(i) for i in indices]
    table = np.asarray(rows, dtype=float)

    def estimate(col: np.ndarray) -> McEstimate:
        r = col.size
        stderr = float(np.std(col, ddof=1) / math.sqrt(r)) if r > 1 else 0.0
        return McEstimate(mean=float(np.mean(col)), stderr=stderr, replications=r)

    estimates = tuple(estimate(table[:, j]) for j in range(table.shape[1]))
    if quantity in ("traces", "decomposition-realized"):
        return estimates
    return estimates[0]
