import numpy as np
import pytest

from mccm.errors import DomainError, WalkLimitExceeded
from mccm.model import Assortment, ModelParams, generate_random
from mccm.oracle import exact_choice_probs, exact_table
from mccm.plan import build_plan
from mccm.simulate import (
    SampleConfig,
    error_vs_samples,
    estimate_table,
    sample_purchase,
    simulate_walks,
)


def test_full_assortment_draws_lambda():
    model = generate_random(4, 0.2, seed=1)
    N = Assortment(range(1, 5))
    out, steps = simulate_walks(model, N, 200_000, np.random.default_rng(0))
    assert np.all(steps == 1)
    freq = np.bincount(out, minlength=5) / out.size
    np.testing.assert_allclose(freq, model.lam, atol=4 * np.sqrt(0.25 / out.size))


def test_sample_purchase_full_assortment_is_first_state():
    model = generate_random(4, 0.2, seed=1)
    rng = np.random.default_rng(3)
    draws = [sample_purchase(model, Assortment(range(1, 5)), rng) for _ in range(5000)]
    freq = np.bincount(draws, minlength=5) / len(draws)
    np.testing.assert_allclose(freq, model.lam, atol=4 * np.sqrt(0.25 / len(draws)))


def test_symmetric_pair_frequency(sym3):
    out, _ = simulate_walks(sym3, Assortment([1, 2]), 10**6, np.random.default_rng(11))
    assert abs(np.mean(out == 1) - 0.5) <= 0.002


def test_sample_purchase_matches_exact():
    model = generate_random(5, 0.3, seed=2)
    S = Assortment([2, 4])
    rng = np.random.default_rng(8)
    m = 20_000
    draws = np.array([sample_purchase(model, S, rng) for _ in range(m)])
    exact = exact_choice_probs(model, S)
    for p, j in zip(exact, S.outcomes):
        assert abs(np.mean(draws == j) - p) <= 4 * np.sqrt(p * (1 - p) / m)


def test_sample_purchase_deterministic(sym3):
    S = Assortment([2])
    a = [sample_purchase(sym3, S, np.random.default_rng(5)) for _ in range(3)]
    rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
    seq1 = [sample_purchase(sym3, Assortment([1]), rng1) for _ in range(50)]
    seq2 = [sample_purchase(sym3, Assortment([1]), rng2) for _ in range(50)]
    assert seq1 == seq2
    assert len(set(a)) == 1


def test_walk_limit():
    # 1 and 2 bounce between each other; offering 3 is reached with tiny odds
    rho = [[1, 0, 0, 0], [0, 0, 1 - 1e-9, 1e-9], [0, 1, 0, 0], [0, 0.5, 0.5, 0]]
    model = ModelParams(3, [0, 1, 0, 0], rho)
    with pytest.raises(WalkLimitExceeded):
        sample_purchase(model, Assortment([3]), np.random.default_rng(0), max_steps=50)
    with pytest.raises(WalkLimitExceeded):
        simulate_walks(model, Assortment([3]), 100, np.random.default_rng(0), max_steps=50)


def test_max_steps_at_least_n():
    model = generate_random(6, 0.1, seed=0)
    with pytest.raises(DomainError):
        sample_purchase(model, Assortment([1]), np.random.default_rng(0), max_steps=3)


def test_estimate_converges():
    model = generate_random(6, 0.2, seed=5)
    assortments = [Assortment([1, 2]), Assortment([3, 5, 6]), Assortment([4])]
    m = 10**6
    est = estimate_table(model, assortments, SampleConfig(m, seed=3))
    exact = exact_table(model, assortments)
    for S in assortments:
        p = exact[S]
        tol = 4 * np.sqrt(p * (1 - p) / m)
        assert np.all(np.abs(est[S] - p) <= tol + 1e-15)
        assert abs(est[S].sum() - 1) <= 1e-12


def test_single_sample_is_point_mass():
    model = generate_random(5, 0.2, seed=5)
    plan = build_plan(5, 2)
    est = estimate_table(model, plan.required_assortments, SampleConfig(1, seed=0))
    for S in est:
        assert sorted(est[S].tolist()).count(1.0) == 1
        assert est[S].sum() == 1.0


def test_order_independent():
    model = generate_random(5, 0.2, seed=5)
    sets = build_plan(5, 2).required_assortments
    cfg = SampleConfig(2000, seed=42)
    a = estimate_table(model, sets, cfg)
    b = estimate_table(model, list(reversed(sets)), cfg)
    c = estimate_table(model, sets[::3], cfg)
    for S in sets:
        np.testing.assert_array_equal(a[S], b[S])
    for S in sets[::3]:
        np.testing.assert_array_equal(a[S], c[S])


def test_laplace_smoothing():
    model = generate_random(4, 0.0, seed=0)
    S = Assortment([1, 2])
    est = estimate_table(model, [S], SampleConfig(10, seed=0, laplace=1.0))
    # no-purchase is impossible, but smoothing gives it 1 / 13
    assert est[S][0] == pytest.approx(1 / 13)


def test_sample_config_validation():
    with pytest.raises(DomainError):
        SampleConfig(0)
    with pytest.raises(DomainError):
        SampleConfig(10, laplace=-1)


def test_error_vs_samples_exact_substitute():
    model = generate_random(5, 0.2, seed=0)
    plan = build_plan(5, 2)
    pts = error_vs_samples(
        model, plan, [10, 10**6], seed=1,
        estimator=lambda mdl, sets, cfg: exact_table(mdl, sets),
    )
    assert [p.m for p in pts] == [10, 10**6]
    assert all(p.failure is None and p.max_param_error <= 1e-8 for p in pts)


def test_error_vs_samples_records_failures():
    model = generate_random(5, 0.2, seed=0)
    pts = error_vs_samples(model, build_plan(5, 2), [1], seed=0)
    # one sample per assortment leaves most denominators at zero
    assert pts[0].failure == "ZeroDenominator"
    assert np.isnan(pts[0].max_param_error)


def test_error_vs_samples_trend():
    model = generate_random(5, 0.2, seed=0)
    plan = build_plan(5, 2)
    good = 0
    for seed in range(20):
        errs = [p.max_param_error for p in error_vs_samples(model, plan, [10**3, 10**4, 10**5], seed)]
        good += errs[0] > errs[1] > errs[2]
    assert good >= 16


def test_error_vs_samples_rejects_empty():
    with pytest.raises(DomainError):
        error_vs_samples(generate_random(5, 0.2, 0), build_plan(5, 2), [], seed=0)


@pytest.mark.slow
def test_walks_terminate_quickly():
    """10^7 walks on assortments of the sizes the recovery uses (2 and 3)."""
    total = 0
    for seed in range(10):
        n = 3 + 2 * seed
        model = generate_random(n, 0.1 * (seed % 3), seed)
        rng = np.random.default_rng(seed)
        S = Assortment(rng.choice(np.arange(1, n + 1), size=2 + seed % 2, replace=False))
        _, steps = simulate_walks(model, S, 10**6, np.random.default_rng(seed), max_steps=10**4)
        assert steps.mean() < n
        assert steps.max() < 10**4
        total += steps.size
    assert total == 10**7
