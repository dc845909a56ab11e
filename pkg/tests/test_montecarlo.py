import math

import numpy as np
import pytest

from ridgelimits.exceptions import (
    DomainError,
    LengthMismatchError,
    SingularPriorError,
)
from ridgelimits.montecarlo import (
    DesignConditional,
    SimConfig,
    apportion,
    conditional_expected_risk,
    empirical_trace_limits,
    excess_risk,
    oracle_conditional_risk,
    oracle_fit,
    replicate,
    ridge_fit,
    sample_dataset,
    sample_design,
    trace_limits_theory,
)
from ridgelimits.risk import asymptotic_risk
from ridgelimits.spectral import (
    ProblemSpec,
    SourceFunction,
    make_atomic_spectrum,
    source_from_parameter,
    strong_weak_model,
)

SP, SRC = strong_weak_model(4.0, 1.0, 0.5, 1.6, 0.4)


def config(**overrides) -> SimConfig:
    base = dict(
        dim=64,
        aspect_ratio=2.0,
        spectrum=SP,
        source=SRC,
        noise_var=1.0,
        signal_var=1.0,
        lam=0.5,
        replications=6,
        seed=11,
    )
    base.update(overrides)
    return SimConfig(**base)


def test_apportion_sums_and_orders():
    counts = apportion([0.5, 0.3, 0.2], 10)
    assert counts.tolist() == [5, 3, 2]
    counts = apportion([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 10)
    assert counts.sum() == 10
    # Deterministic tie-break: earlier weight wins the leftover slot.
    assert counts.tolist() == [4, 3, 3]


def test_config_derived_quantities():
    cfg = config(dim=100, aspect_ratio=2.5)
    assert cfg.n_samples == 40
    assert cfg.block_dims.sum() == 100
    assert cfg.eigenvalue_vector.shape == (100,)
    assert cfg.source_vector.shape == (100,)
    # Blocks carry the atom values in descending-eigenvalue order.
    assert cfg.eigenvalue_vector[0] == 4.0
    assert cfg.source_vector[0] == 1.6


def test_replications_are_deterministic_and_parallel_safe():
    cfg = config()
    seq = replicate(cfg, "risk", max_workers=1)
    par = replicate(cfg, "risk", max_workers=4)
    assert seq == par
    again = replicate(cfg, "risk", max_workers=2)
    assert again == seq


def test_design_stream_is_shared_with_dataset():
    cfg = config()
    ds = sample_dataset(cfg, 3)
    X = sample_design(cfg, 3)
    assert np.array_equal(ds.design, X)


def test_ridge_fit_interpolates_at_zero_penalty():
    cfg = config(dim=48, aspect_ratio=2.0)  # n = 24 < d
    ds = sample_dataset(cfg, 0)
    beta_hat = ridge_fit(ds, 0.0)
    assert np.allclose(ds.design @ beta_hat, ds.responses, atol=1e-8)
    with pytest.raises(DomainError):
        ridge_fit(ds, -1.0)


def test_ridge_fit_solves_normal_equations():
    cfg = config()
    ds = sample_dataset(cfg, 0)
    lam = 0.7
    beta_hat = ridge_fit(ds, lam)
    n, d = ds.design.shape
    lhs = ds.design.T @ ds.design / n @ beta_hat + lam * beta_hat
    rhs = ds.design.T @ ds.responses / n
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_excess_risk_quadratic_form():
    sigma = np.array([2.0, 1.0])
    assert excess_risk(np.array([1.0, 0.0]), np.array([0.0, 1.0]), sigma) == 3.0


def test_oracle_fit_rejects_zero_source_and_bad_shape():
    cfg = config()
    ds = sample_dataset(cfg, 0)
    with pytest.raises(SingularPriorError):
        oracle_fit(ds, np.zeros(cfg.dim), 1.0, 1.0)
    with pytest.raises(LengthMismatchError):
        oracle_fit(ds, np.ones(3), 1.0, 1.0)


def test_conditional_risk_matches_double_sampling():
    """The analytic conditional expectation over (parameter, noise) agrees
    with brute-force resampling on a fixed small design."""
    cfg = config(dim=24, aspect_ratio=1.5, lam=0.3)
    X = sample_design(cfg, 0)
    variance, bias = conditional_expected_risk(
        X, cfg.lam, cfg.eigenvalue_vector, cfg.source_vector, 1.0, 1.0
    )
    rng = np.random.default_rng(7)
    n, d = X.shape
    draws = 4000
    total = np.empty(draws)
    for i in range(draws):
        beta = rng.standard_normal(d) * np.sqrt(cfg.source_vector / d)
        eps = rng.standard_normal(n)
        y = X @ beta + eps
        gram = X.T @ X / n + cfg.lam * np.eye(d)
        bh = np.linalg.solve(gram, X.T @ y / n)
        total[i] = excess_risk(bh, beta, cfg.eigenvalue_vector)
    se = total.std(ddof=1) / math.sqrt(draws)
    assert abs(total.mean() - (variance + bias)) <= 4.0 * se


def test_conditional_risk_zero_penalty_branch():
    cfg = config(dim=32, aspect_ratio=2.0, lam=0.0)
    X = sample_design(cfg, 1)
    variance, bias = conditional_expected_risk(
        X, 0.0, cfg.eigenvalue_vector, cfg.source_vector, 1.0, 1.0
    )
    assert variance > 0.0 and bias > 0.0
    rng = np.random.default_rng(5)
    n, d = X.shape
    draws = 4000
    total = np.empty(draws)
    pinv = np.linalg.pinv(X, rcond=d * np.finfo(float).eps)
    for i in range(draws):
        beta = rng.standard_normal(d) * np.sqrt(cfg.source_vector / d)
        eps = rng.standard_normal(n)
        bh = pinv @ (X @ beta + eps)
        total[i] = excess_risk(bh, beta, cfg.eigenvalue_vector)
    se = total.std(ddof=1) / math.sqrt(draws)
    assert abs(total.mean() - (variance + bias)) <= 4.0 * se


def test_realized_estimators_match_conditional_means():
    cfg = config(dim=64, replications=60, lam=0.4)
    cond_v = replicate(cfg, "variance")
    cond_b = replicate(cfg, "bias")
    real_v, real_b, real_t = replicate(cfg, "decomposition-realized")
    for real, cond in ((real_v, cond_v), (real_b, cond_b)):
        gap = abs(real.mean - cond.mean)
        assert gap <= 4.0 * math.hypot(real.stderr, cond.stderr)
    assert real_t.mean == pytest.approx(
        real_v.mean + real_b.mean, abs=6.0 * (real_v.stderr + real_b.stderr)
    )


def test_fixed_parameter_risk_agrees_with_source_average():
    """A deterministic parameter and its induced source give the same
    design-averaged risk (paired designs, statistical tolerance)."""
    cfg = config(dim=32, replications=80, lam=0.5)
    rng = np.random.default_rng(123)
    beta = rng.standard_normal(cfg.dim) * np.sqrt(cfg.source_vector / cfg.dim)
    src = source_from_parameter(beta, cfg.eigenvalue_vector)
    phi_vec = np.repeat(
        src.values_on(cfg.spectrum), cfg.block_dims
    )
    diffs = np.empty(cfg.replications)
    for i in range(cfg.replications):
        X = sample_design(cfg, i)
        dc = DesignConditional(X, cfg.eigenvalue_vector, phi_vec)
        v1, b1 = dc.risk_fixed_parameter(cfg.lam, beta, cfg.noise_var)
        v2, b2 = dc.risk(cfg.lam, cfg.noise_var, 1.0)
        diffs[i] = (v1 + b1) - (v2 + b2)
    se = diffs.std(ddof=1) / math.sqrt(cfg.replications)
    assert abs(diffs.mean()) <= 4.0 * max(se, 1e-12)


def test_oracle_never_beaten_by_ridge_per_design():
    cfg = config(dim=48, lam=0.25)
    for i in range(4):
        X = sample_design(cfg, i)
        ov, ob = oracle_conditional_risk(
            X, cfg.eigenvalue_vector, cfg.source_vector, 1.0, 1.0
        )
        rv, rb = conditional_expected_risk(
            X, cfg.lam, cfg.eigenvalue_vector, cfg.source_vector, 1.0, 1.0
        )
        assert ov + ob <= rv + rb + 1e-12


def test_oracle_equals_ridge_for_flat_source():
    cfg = config(source=SourceFunction.constant(SP), lam=0.0)
    X = sample_design(cfg, 2)
    d, n = cfg.dim, cfg.n_samples
    lam_match = (1.0 / 1.0) * (d / n)  # noise_var/signal_var * d/n, phi = 1
    ov, ob = oracle_conditional_risk(
        X, cfg.eigenvalue_vector, np.ones(d), 1.0, 1.0
    )
    rv, rb = conditional_expected_risk(
        X, lam_match, cfg.eigenvalue_vector, np.ones(d), 1.0, 1.0
    )
    assert ov == pytest.approx(rv, rel=1e-10)
    assert ob == pytest.approx(rb, rel=1e-10)


def test_estimator_comparison_quantity_nonnegative_mean():
    cfg = config(replications=10)
    est = replicate(cfg, "estimator-comparison")
    assert est.mean >= 0.0


def test_trace_limits_reference_point():
    # Identity spectrum, gamma = 2, lam = 1: (1/sqrt(2), limit, limit) with
    # t2 = t3 for a constant source.
    sp = make_atomic_spectrum([(1.0, 1.0)])
    src = SourceFunction.constant(sp)
    t1, t2, t3 = trace_limits_theory(sp, src, 2.0, 1.0)
    assert t1 == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-10)
    assert t2 == pytest.approx(t3, rel=1e-10)
    v = math.sqrt(2.0) - 1.0
    vp = (math.sqrt(2.0) - 1.0) / 2.0
    assert t2 == pytest.approx((v - vp) / (2.0 * v * v), rel=1e-10)
    with pytest.raises(DomainError):
        trace_limits_theory(sp, src, 2.0, 0.0)


def test_empirical_traces_near_limits_small_scale():
    cfg = config(dim=200, lam=1.0, replications=8)
    t_theory = trace_limits_theory(SP, SRC, cfg.aspect_ratio, cfg.lam)
    est = replicate(cfg, "traces")
    for e, t in zip(est, t_theory):
        assert e.mean == pytest.approx(t, rel=0.05)


def test_mc_estimate_stderr_zero_for_single_replication():
    cfg = config(replications=1)
    est = replicate(cfg, "risk")
    assert est.stderr == 0.0
    assert est.replications == 1


def test_replicate_rejects_unknown_quantity():
    with pytest.raises(ValueError):
        replicate(config(), "median")


def test_mc_mean_approaches_asymptotic_risk():
    cfg = config(dim=256, replications=10, lam=0.5)
    problem = ProblemSpec(SP, SRC, cfg.aspect_ratio, 1.0, 1.0)
    theory = asymptotic_risk(problem, cfg.lam).total
    est = replicate(cfg, "risk")
    assert est.mean == pytest.approx(theory, rel=0.05)


def test_empirical_trace_limits_wrapper_matches_class():
    cfg = config(dim=96, lam=0.8)
    X = sample_design(cfg, 0)
    direct = empirical_trace_limits(X, 0.8, cfg.eigenvalue_vector, cfg.source_vector)
    via_class = DesignConditional(
        X, cfg.eigenvalue_vector, cfg.source_vector
    ).traces(0.8)
    assert direct == via_class
