import itertools
import math

import pytest

from mccm.errors import DomainError
from mccm.model import Assortment
from mccm.plan import build_full_plan, build_plan, count_required

A = Assortment


def test_n4_r2_fan():
    plan = build_plan(4, 2)
    assert plan.per_product_fans[2] == [A([1, 3]), A([1, 4])]
    assert plan.per_product_fans[1] == [A([2, 3]), A([2, 4])]


def test_n4_r2_counts_by_hand():
    # size 2: {1,2} {1,3} {1,4} {2,3} {2,4}; size 3: every triple
    plan = build_plan(4, 2)
    assert count_required(plan) == (5, 4)
    assert set(plan.required_assortments) == {
        A([1, 2]), A([1, 3]), A([1, 4]), A([2, 3]), A([2, 4]),
        A([1, 2, 3]), A([1, 2, 4]), A([1, 3, 4]), A([2, 3, 4]),
    }


def test_n10_r2_quadratic_budget():
    # cores {1} and {2}: 17 pairs and 36 + 36 - 8 = 64 triples
    plan = build_plan(10, 2)
    assert count_required(plan) == (17, 64)
    assert sum(count_required(plan)) <= 4 * 10**2


def test_large_r_uses_per_product_cores():
    plan = build_plan(4, 3)
    for i, fan in plan.per_product_fans.items():
        assert fan and all(len(S) == 3 and i not in S for S in fan)


def _fan_ok(plan):
    n, r = plan.n, plan.r
    for i, fan in plan.per_product_fans.items():
        assert len(fan) == n - r
        assert all(len(S) == r and i not in S for S in fan)
        if len(fan) > 1:
            common = set(fan[0]) & set(fan[1])
            assert len(common) == r - 1
            for S, T in itertools.combinations(fan, 2):
                assert set(S) & set(T) == common


@pytest.mark.parametrize("n", range(3, 13))
def test_fan_invariants(n):
    for r in range(2, n):
        plan = build_plan(n, r)
        _fan_ok(plan)
        assert all(len(S) in (r, r + 1) for S in plan.required_assortments)
        # closure under the conditional-probability requirement
        req = set(plan.required_assortments)
        for S in plan.system_assortments:
            assert S in req
            for j in range(1, n + 1):
                if j not in S:
                    assert S.with_product(j) in req
        assert any(1 in S for S in plan.lambda_assortments)
        c_r, c_r1 = count_required(plan)
        assert c_r <= math.comb(n, r) and c_r1 <= math.comb(n, r + 1)


def test_deterministic():
    assert build_plan(9, 3) == build_plan(9, 3)


@pytest.mark.parametrize("n,r", [(2, 1), (5, 1), (5, 5), (5, 7)])
def test_rejects_out_of_range(n, r):
    with pytest.raises(DomainError):
        build_plan(n, r)


@pytest.mark.parametrize("n", range(4, 31))
def test_r2_count_closed_form(n):
    # pairs: (n-1) + (n-2); triples: all containing 1 or 2 -> 2*C(n-1,2) - (n-2)
    c_r, c_r1 = count_required(build_plan(n, 2))
    assert c_r == 2 * n - 3
    assert c_r1 == (n - 2) ** 2
    assert c_r + c_r1 == (n - 1) ** 2 <= 4 * n * n


def test_full_plan_counts():
    plan = build_full_plan(5, 2)
    assert count_required(plan) == (10, 10)
    assert plan.per_product_fans[3] == [S for S in map(A, itertools.combinations(range(1, 6), 2)) if 3 not in S]
