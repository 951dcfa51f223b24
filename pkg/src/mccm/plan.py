"""Which assortments the recovery needs choice probabilities for.

For each product ``i`` the recovery solves a linear system built from a
*fan*: size-``r`` assortments that all avoid ``i`` and pairwise intersect in
one fixed ``(r-1)``-set.  A fan over ``n - r`` assortments already pins down
row ``i`` of the transition matrix, so a plan only needs ``O(n^2)``
assortments when ``r <= n/2`` instead of every subset of size ``r`` and
``r + 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from mccm.errors import DomainError
from mccm.model import Assortment


@dataclass(frozen=True)
class RecoveryPlan:
    """Assortments consumed by one run of the recovery.

    Attributes
    ----------
    n, r : int
        Number of products and size of the assortments the systems use.
    per_product_fans : dict[int, list[Assortment]]
        Assortments whose conditional probabilities form product ``i``'s
        system.
    lambda_assortments : list[Assortment]
        Assortments used for the initial-distribution system.
    required_assortments : list[Assortment]
        Every assortment (size ``r`` or ``r + 1``) whose choice
        probabilities must be supplied, sorted.
    mode : str
        ``"minimal"`` for the fan construction, ``"all"`` for every subset.
    """

    n: int
    r: int
    per_product_fans: dict[int, list[Assortment]]
    lambda_assortments: list[Assortment]
    required_assortments: list[Assortment]
    mode: str = "minimal"

    @property
    def system_assortments(self) -> list[Assortment]:
        """The size-``r`` assortments that need conditional tables."""
        seen = set(self.lambda_assortments)
        for fan in self.per_product_fans.values():
            seen.update(fan)
        return sorted(seen)


def _check(n: int, r: int) -> None:
    if n < 3:
        raise DomainError(f"n must be at least 3, got {n}")
    if not 2 <= r <= n - 1:
        raise DomainError(f"r must lie in [2, {n - 1}] for n={n}, got {r}")


def fan(n: int, i: int, core: tuple[int, ...]) -> list[Assortment]:
    """``{core + {k} : k not in core, k != i}``."""
    return [Assortment(core + (k,)) for k in range(1, n + 1) if k != i and k not in core]


def _close(n: int, assortments) -> list[Assortment]:
    """Add ``S + {j}`` for every ``j`` outside each ``S``."""
    out = set()
    for S in assortments:
        out.add(S)
        for j in range(1, n + 1):
            if j not in S:
                out.add(S.with_product(j))
    return sorted(out)


def build_plan(n: int, r: int) -> RecoveryPlan:
    """Fan-based plan for ``n`` products and assortment size ``r``.

    With ``r <= n/2`` two disjoint cores serve every product: ``{1..r-1}``
    for products outside it and ``{r..2r-2}`` for products inside it.  For
    larger ``r`` no disjoint second core exists and each product gets the
    ``r - 1`` smallest other products as its own core.
    """
    _check(n, r)
    fans: dict[int, list[Assortment]] = {}
    if 2 * r <= n:
        core = tuple(range(1, r))
        alt_core = tuple(range(r, 2 * r - 1))
        for i in range(1, n + 1):
            fans[i] = fan(n, i, alt_core if i in core else core)
    else:
        for i in range(1, n + 1):
            core = tuple(k for k in range(1, n + 1) if k != i)[: r - 1]
            fans[i] = fan(n, i, core)

    # Product 1's fan leaves the initial distribution free along one
    # direction; any assortment containing 1 removes it.
    lam_sets = list(fans[1])
    anchor = Assortment(range(1, r + 1))
    if anchor not in lam_sets:
        lam_sets.append(anchor)

    used = set(lam_sets)
    for f in fans.values():
        used.update(f)
    return RecoveryPlan(n, r, fans, lam_sets, _close(n, used), "minimal")


def build_full_plan(n: int, r: int) -> RecoveryPlan:
    """Plan using every assortment of size ``r`` for every system."""
    _check(n, r)
    all_r = [Assortment(c) for c in itertools.combinations(range(1, n + 1), r)]
    fans = {i: [S for S in all_r if i not in S] for i in range(1, n + 1)}
    all_r1 = [Assortment(c) for c in itertools.combinations(range(1, n + 1), r + 1)]
    return RecoveryPlan(n, r, fans, list(all_r), sorted(all_r + all_r1), "all")


def count_required(plan: RecoveryPlan) -> tuple[int, int]:
    """Number of distinct required assortments of size ``r`` and ``r + 1``."""
    count_r = sum(1 for S in plan.required_assortments if len(S) == plan.r)
    count_r1 = sum(1 for S in plan.required_assortments if len(S) == plan.r + 1)
    return count_r, count_r1
