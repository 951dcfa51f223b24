"""Parameter recovery from choice probabilities of small assortments.

Each transition row ``rho_i`` and the initial distribution ``lam`` solve a
linear system whose coefficients are conditional choice probabilities
``pi(j, S | k)``.  The true parameters satisfy every such system exactly; the
assortment plan guarantees the systems have full column rank so that the
solution is unique.  With noisy tables the systems become inconsistent and
are solved in the least-squares sense.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np
from numpy.typing import NDArray

from mccm.errors import (
    DomainError,
    MissingConditional,
    UnderdeterminedSystem,
    ZeroDenominator,
)
from mccm.model import Assortment, ModelParams, is_irreducible
from mccm.oracle import (
    EXACT_DENOM_TOL,
    ChoiceTable,
    ConditionalTable,
    build_conditional_table,
)
from mccm.plan import RecoveryPlan

logger = logging.getLogger(__name__)

SystemKey = Union[int, str]
LAMBDA = "lambda"


@dataclass
class LinearSystem:
    """Equations ``coefficients @ x = rhs`` over unknowns indexed by ``columns``.

    ``fixed_zero`` lists columns forced to zero (eliminated before solving);
    ``sum_to_one`` appends the equation ``sum(x) = 1`` with unit weight.
    ``row_labels[r]`` is the ``(j, S)`` pair row ``r`` came from.
    """

    columns: list[int]
    coefficients: NDArray[np.float64]
    rhs: NDArray[np.float64]
    row_labels: list[tuple[int, Assortment]] = field(default_factory=list)
    fixed_zero: list[int] = field(default_factory=list)
    sum_to_one: bool = True

    @property
    def free_columns(self) -> list[int]:
        return [c for c in self.columns if c not in self.fixed_zero]


@dataclass
class SolveResult:
    solution: NDArray[np.float64]
    residual: float
    rank: int
    threshold: float
    unknowns: int


@dataclass
class RecoveryOptions:
    rank_tolerance: float = 1e-9
    denom_tolerance: float = EXACT_DENOM_TOL
    clamp: bool = True
    # entries below -projection_tol (or row sums off by more) trigger projection
    projection_tol: float = 1e-9
    strict: bool = True


@dataclass
class RecoveryReport:
    """Recovered parameters plus per-system diagnostics.

    ``per_system_rank`` maps each system key (product number or
    ``"lambda"``) to ``(rank, singular_value_threshold)``.  ``projected``
    lists the systems whose raw solutions were clipped and renormalized;
    ``failures`` is only populated by non-strict runs.
    """

    recovered: ModelParams
    per_system_residual: dict[SystemKey, float]
    per_system_rank: dict[SystemKey, tuple[int, float]]
    max_param_error: float | None = None
    projected: list[SystemKey] = field(default_factory=list)
    irreducible: bool = True
    failures: dict[SystemKey, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "recovered": self.recovered.to_dict(),
            "per_system_residual": {str(k): v for k, v in self.per_system_residual.items()},
            "per_system_rank": {
                str(k): {"rank": rk, "threshold": thr}
                for k, (rk, thr) in self.per_system_rank.items()
            },
            "max_param_error": self.max_param_error,
            "projected": [str(k) for k in self.projected],
            "irreducible": self.irreducible,
            "failures": {str(k): v for k, v in self.failures.items()},
        }


def _rows(cond: ConditionalTable, assortments: Iterable[Assortment]):
    for S in assortments:
        if S not in cond:
            raise MissingConditional(f"conditional table has no entry for {list(S)}")
        M = cond.matrix(S)
        for c, j in enumerate(S.outcomes):
            yield j, S, M[:, c]


def h_matrix(cond: ConditionalTable, assortments: Iterable[Assortment]) -> NDArray[np.float64]:
    """Stack the coefficient vectors ``(pi(j, S | k))_k`` for ``S`` and ``j`` in ``S_+``."""
    rows = [h for _, _, h in _rows(cond, assortments)]
    if not rows:
        return np.zeros((0, cond.n + 1))
    return np.vstack(rows)


def build_rho_system(
    cond: ConditionalTable, i: int, fan: Iterable[Assortment]
) -> LinearSystem:
    """Equations ``sum_k pi(j, S | k) rho_{i,k} = pi(j, S | i)`` over the fan."""
    n = cond.n
    if not 1 <= i <= n:
        raise DomainError(f"product {i} is outside 1..{n}")
    fan = list(fan)
    for S in fan:
        if i in S:
            raise DomainError(f"fan assortment {list(S)} contains product {i}")
    labels, coef, rhs = [], [], []
    for j, S, h in _rows(cond, fan):
        labels.append((j, S))
        coef.append(h)
        rhs.append(h[i])
    return LinearSystem(
        columns=list(range(n + 1)),
        coefficients=np.array(coef).reshape(len(coef), n + 1),
        rhs=np.array(rhs, dtype=np.float64),
        row_labels=labels,
        fixed_zero=[i],
        sum_to_one=True,
    )


def build_lambda_system(
    cond: ConditionalTable, table: ChoiceTable, assortments: Iterable[Assortment]
) -> LinearSystem:
    """Equations ``sum_k pi(j, S | k) lam_k = pi(j, S)``."""
    n = cond.n
    labels, coef, rhs = [], [], []
    for j, S, h in _rows(cond, assortments):
        labels.append((j, S))
        coef.append(h)
        rhs.append(table.prob(j, S))
    return LinearSystem(
        columns=list(range(n + 1)),
        coefficients=np.array(coef).reshape(len(coef), n + 1),
        rhs=np.array(rhs, dtype=np.float64),
        row_labels=labels,
        fixed_zero=[],
        sum_to_one=True,
    )


def solve_system(sys: LinearSystem, rank_tolerance: float = 1e-9) -> SolveResult:
    """Minimum-norm least-squares solution via a truncated SVD.

    Singular values at or below ``rank_tolerance`` times the largest one are
    treated as zero.  Raises :class:`UnderdeterminedSystem` (carrying the
    diagnostics) when the numerical rank is below the number of free
    unknowns.
    """
    free = sys.free_columns
    idx = [sys.columns.index(c) for c in free]
    A = sys.coefficients[:, idx]
    b = sys.rhs
    if sys.sum_to_one:
        A = np.vstack([A, np.ones((1, len(free)))])
        b = np.append(b, 1.0)

    x_free = np.zeros(len(free))
    rank, thr = 0, 0.0
    if A.shape[0] > 0 and len(free) > 0:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        thr = rank_tolerance * s[0]
        rank = int(np.sum(s > thr))
        if rank:
            x_free = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
    residual = float(np.max(np.abs(A @ x_free - b))) if A.shape[0] else 0.0

    x = np.zeros(len(sys.columns))
    x[idx] = x_free
    if rank < len(free):
        raise UnderdeterminedSystem(
            f"rank {rank} < {len(free)} free unknowns", x, residual, rank
        )
    return SolveResult(x, residual, rank, float(thr), len(free))


def _tidy(vec: NDArray[np.float64], tol: float) -> tuple[NDArray[np.float64], bool]:
    """Turn a raw solution into a distribution; report whether that took
    more than round-off cleanup."""
    projected = bool(vec.min() < -tol or abs(vec.sum() - 1.0) > tol)
    vec = np.clip(vec, 0.0, None)
    total = vec.sum()
    if total <= 0:
        raise ZeroDenominator("recovered vector has no positive mass")
    return vec / total, projected


def recover(
    table: ChoiceTable,
    plan: RecoveryPlan,
    options: RecoveryOptions | None = None,
    truth: ModelParams | None = None,
) -> RecoveryReport:
    """Recover ``lam`` and ``rho`` from the choice probabilities a plan lists.

    Raises
    ------
    MissingAssortment, ZeroDenominator
        When the conditional table cannot be built.
    UnderdeterminedSystem
        When a system is rank-deficient and ``options.strict`` is set.
    """
    opts = options or RecoveryOptions()
    n = plan.n
    if table.n != n:
        raise DomainError(f"table has n={table.n}, plan has n={n}")

    cond = build_conditional_table(
        table, plan.system_assortments, opts.denom_tolerance, opts.clamp
    )

    residuals: dict[SystemKey, float] = {}
    ranks: dict[SystemKey, tuple[int, float]] = {}
    failures: dict[SystemKey, str] = {}
    projected: list[SystemKey] = []

    def run(key: SystemKey, sys: LinearSystem) -> NDArray[np.float64]:
        try:
            res = solve_system(sys, opts.rank_tolerance)
        except UnderdeterminedSystem as exc:
            residuals[key] = exc.residual
            ranks[key] = (exc.rank, float("nan"))
            if opts.strict:
                raise UnderdeterminedSystem(
                    f"system {key}: {exc}", exc.solution, exc.residual, exc.rank
                ) from exc
            failures[key] = str(exc)
            logger.warning("system %s is underdetermined: %s", key, exc)
            return exc.solution
        residuals[key] = res.residual
        ranks[key] = (res.rank, res.threshold)
        return res.solution

    rho = np.zeros((n + 1, n + 1))
    rho[0, 0] = 1.0
    for i in range(1, n + 1):
        sol = run(i, build_rho_system(cond, i, plan.per_product_fans[i]))
        try:
            row, was_projected = _tidy(sol, opts.projection_tol)
        except ZeroDenominator as exc:
            if opts.strict:
                raise
            failures[i] = str(exc)
            row, was_projected = sol, False
        row[i] = 0.0
        rho[i] = row
        if was_projected:
            projected.append(i)

    sol = run(LAMBDA, build_lambda_system(cond, table, plan.lambda_assortments))
    lam, was_projected = _tidy(sol, opts.projection_tol)
    if was_projected:
        projected.append(LAMBDA)

    recovered = ModelParams(n, lam, rho)
    report = RecoveryReport(
        recovered=recovered,
        per_system_residual=residuals,
        per_system_rank=ranks,
        projected=projected,
        irreducible=is_irreducible(rho[1:, 1:]),
        failures=failures,
    )
    if truth is not None:
        report.max_param_error = recovered.max_abs_diff(truth)
    return report


def recover_full_assortment(
    table: ChoiceTable, tolerance: float = EXACT_DENOM_TOL
) -> ModelParams:
    """Closed-form recovery from the all-products and all-but-one assortments.

    ``lam_j = pi(j, N)`` and ``rho_{i,j} = (pi(j, N - {i}) - pi(j, N)) / pi(i, N)``.
    """
    n = table.n
    full = Assortment(range(1, n + 1))
    base = table[full]
    lam = base.copy()
    rho = np.zeros((n + 1, n + 1))
    rho[0, 0] = 1.0
    for i in range(1, n + 1):
        denom = float(base[i])
        if denom <= tolerance:
            raise ZeroDenominator(
                f"pi({i}, N) = {denom!r} is below tolerance {tolerance}", [(full, i)]
            )
        smaller = table[Assortment(k for k in range(1, n + 1) if k != i)]
        # base without i's slot lines up with the outcomes of N - {i}
        others = [j for j in range(n + 1) if j != i]
        rho[i, others] = (smaller - base[others]) / denom
    return ModelParams(n, lam, rho)

