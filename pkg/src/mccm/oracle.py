"""Exact and derived choice probabilities of a Markov chain choice model.

``absorption_probabilities`` is the ground-truth computation: with the offered
products and the no-purchase state made absorbing, the probability of ending
in each outcome is the solution of a small dense linear system.  Everything
else in this module is either a projection of that matrix (the direct
oracle) or algebra over unconditional tables (the indirect route
the recovery algorithm has to use).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from mccm.errors import (
    DomainError,
    MissingAssortment,
    SingularSystem,
    ZeroDenominator,
)
from mccm.model import Assortment, ModelParams

EXACT_DENOM_TOL = 1e-12
NOISY_DENOM_TOL = 1e-6
NORMALIZATION_TOL = 1e-10


class ChoiceTable(Mapping[Assortment, NDArray[np.float64]]):
    """Choice probabilities ``pi(j, S)`` keyed by assortment.

    The vector stored for ``S`` is indexed like ``S.outcomes``: no purchase
    first, then the products of ``S`` in increasing order.
    """

    def __init__(self, n: int, entries: Mapping[Assortment, Iterable[float]] = ()):
        self.n = int(n)
        self._entries: dict[Assortment, NDArray[np.float64]] = {}
        for S, vec in dict(entries).items():
            self[S] = vec

    def __setitem__(self, S: Assortment, vec) -> None:
        S.check_bounds(self.n)
        arr = np.array(vec, dtype=np.float64)
        if arr.shape != (len(S) + 1,):
            raise DomainError(
                f"choice vector for {S} must have length {len(S) + 1}, got {arr.shape}"
            )
        if np.any(arr < 0) or abs(arr.sum() - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"choice vector for {S} is not a distribution: {arr}")
        arr.setflags(write=False)
        self._entries[S] = arr

    def __getitem__(self, S: Assortment) -> NDArray[np.float64]:
        try:
            return self._entries[S]
        except KeyError:
            raise MissingAssortment(
                f"choice table has no entry for {list(S)}", [(S, None)]
            ) from None

    def __contains__(self, S: object) -> bool:
        return S in self._entries

    def __iter__(self) -> Iterator[Assortment]:
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def prob(self, j: int, S: Assortment) -> float:
        """``pi(j, S)`` for ``j`` in ``S.outcomes``."""
        return float(self[S][_outcome_index(S, j)])


@dataclass
class ConditionalTable:
    """Conditional choice probabilities ``pi(j, S | i)``.

    For each assortment ``S`` the table holds an ``(n+1) x (|S|+1)`` matrix:
    row ``i`` is the origin state, columns follow ``S.outcomes``.
    """

    n: int
    entries: dict[Assortment, NDArray[np.float64]] = field(default_factory=dict)

    def __contains__(self, S: object) -> bool:
        return S in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Assortment]:
        return iter(sorted(self.entries))

    def matrix(self, S: Assortment) -> NDArray[np.float64]:
        return self.entries[S]

    def get(self, S: Assortment, i: int, j: int) -> float:
        return float(self.entries[S][i, _outcome_index(S, j)])


def _outcome_index(S: Assortment, j: int) -> int:
    if j == 0:
        return 0
    try:
        return S.products.index(j) + 1
    except ValueError:
        raise DomainError(f"outcome {j} is not in {list(S.outcomes)}") from None


def absorption_probabilities(model: ModelParams, S: Assortment) -> NDArray[np.float64]:
    """Probability of absorbing at each outcome of ``S`` from every start state.

    Returns
    -------
    P : ndarray, shape (n+1, |S|+1)
        ``P[i, c]`` is the probability that a walk started at state ``i``
        ends at outcome ``S.outcomes[c]``.
    """
    S.check_bounds(model.n)
    n = model.n
    outcomes = list(S.outcomes)
    transient = [k for k in range(1, n + 1) if k not in S]

    P = np.zeros((n + 1, len(outcomes)))
    P[outcomes, np.arange(len(outcomes))] = 1.0
    if not transient:
        return P

    rho = model.rho
    A = np.eye(len(transient)) - rho[np.ix_(transient, transient)]
    R = rho[np.ix_(transient, outcomes)]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
            X = scipy.linalg.lu_solve((lu, piv), R)
    except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularSystem(f"absorption solve failed for {S}: {exc}") from exc
    diag = np.abs(np.diag(lu))
    if not np.all(np.isfinite(X)) or diag.min() <= 1e-14 * max(diag.max(), 1.0):
        raise SingularSystem(f"absorption system for {S} is singular")
    P[transient] = X
    return P


def exact_choice_probs(model: ModelParams, S: Assortment) -> NDArray[np.float64]:
    """``(pi(j, S))`` over ``S.outcomes``, averaging absorption over ``lam``."""
    return model.lam @ absorption_probabilities(model, S)


def exact_table(model: ModelParams, assortments: Iterable[Assortment]) -> ChoiceTable:
    table = ChoiceTable(model.n)
    for S in assortments:
        table[S] = exact_choice_probs(model, S)
    return table


def conditional_direct(model: ModelParams, S: Assortment, i: int, j: int) -> float:
    """``pi(j, S | i)`` evaluated from the definition (the direct oracle)."""
    col = _outcome_index(S, j)
    if not 0 <= i <= model.n:
        raise DomainError(f"state {i} is outside 0..{model.n}")
    return float(absorption_probabilities(model, S)[i, col])


def _conditional_rows(
    table: ChoiceTable, S: Assortment, i: int, denom_tol: float, clamp: bool
) -> NDArray[np.float64]:
    """Row ``i`` of the conditional matrix of ``S`` for ``i`` not in ``S_+``."""
    Si = S.with_product(i)
    base = table[S]
    bigger = table[Si]
    # drop i's slot so the bigger vector lines up with S.outcomes
    pos = Si.products.index(i) + 1
    denom = float(bigger[pos])
    if denom <= denom_tol:
        raise ZeroDenominator(
            f"pi({i}, {list(Si)}) = {denom!r} is below tolerance {denom_tol}",
            [(S, i)],
        )
    row = (base - np.delete(bigger, pos)) / denom
    if clamp:
        # the row sums to 1 algebraically; keep that after clipping noise
        row = np.clip(row, 0.0, None)
        row /= row.sum()
    return row


def conditional_from_tables(
    table: ChoiceTable,
    S: Assortment,
    i: int,
    j: int,
    denom_tol: float = EXACT_DENOM_TOL,
    clamp: bool = True,
) -> float:
    """``pi(j, S | i)`` from unconditional choice probabilities.

    Uses ``(pi(j, S) - pi(j, S + {i})) / pi(i, S + {i})`` when ``i`` is a
    product outside ``S``; the value is 1 when ``i == j`` and 0 for any other
    ``i`` in ``S_+``.
    """
    col = _outcome_index(S, j)
    if not 0 <= i <= table.n:
        raise DomainError(f"state {i} is outside 0..{table.n}")
    if i == j:
        return 1.0
    if i == 0 or i in S:
        return 0.0
    return float(_conditional_rows(table, S, i, denom_tol, clamp)[col])


def build_conditional_table(
    table: ChoiceTable,
    assortments: Iterable[Assortment],
    denom_tol: float = EXACT_DENOM_TOL,
    clamp: bool = True,
) -> ConditionalTable:
    """Fill ``pi(j, S | i)`` for every listed ``S``, origin ``i`` and outcome ``j``.

    Raises
    ------
    MissingAssortment
        If any needed ``S`` or ``S + {i}`` is absent; lists every such pair.
    ZeroDenominator
        If any ``pi(i, S + {i})`` is below ``denom_tol``; lists every pair.
    """
    n = table.n
    cond = ConditionalTable(n)
    missing: list[tuple[Assortment, int | None]] = []
    zero: list[tuple[Assortment, int]] = []

    for S in sorted(set(assortments)):
        S.check_bounds(n)
        if S not in table:
            missing.append((S, None))
            continue
        M = np.zeros((n + 1, len(S) + 1))
        M[list(S.outcomes), np.arange(len(S) + 1)] = 1.0
        for i in range(1, n + 1):
            if i in S:
                continue
            if S.with_product(i) not in table:
                missing.append((S, i))
                continue
            try:
                M[i] = _conditional_rows(table, S, i, denom_tol, clamp)
            except ZeroDenominator:
                zero.append((S, i))
        cond.entries[S] = M

    if missing:
        names = ", ".join(_describe(S, i) for S, i in missing)
        raise MissingAssortment(f"choice table is missing: {names}", missing)
    if zero:
        names = ", ".join(f"({list(S)}, {i})" for S, i in zero)
        raise ZeroDenominator(f"vanishing denominators for (S, i): {names}", zero)
    return cond


def _describe(S: Assortment, i: int | None) -> str:
    if i is None:
        return str(list(S))
    return f"{list(S.with_product(i))} (needed for S={list(S)}, i={i})"
