"""Monte Carlo simulation of the purchase process and table estimation.

Walks are simulated literally: draw a start state from ``lam``, then follow
``rho`` until an offered product or the no-purchase state is hit.  Random
streams come from Philox generators keyed by ``(seed, assortment)`` so an
estimated table does not depend on the order in which assortments are
processed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from mccm.errors import DomainError, MCCMError, WalkLimitExceeded
from mccm.model import Assortment, ModelParams
from mccm.oracle import NOISY_DENOM_TOL, ChoiceTable
from mccm.plan import RecoveryPlan
from mccm.recovery import RecoveryOptions, recover

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10_000
CHUNK = 1 << 20
_MASK64 = 0xFFFF_FFFF_FFFF_FFFF


@dataclass(frozen=True)
class SampleConfig:
    samples_per_assortment: int
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    laplace: float = 0.0

    def __post_init__(self):
        if self.samples_per_assortment < 1:
            raise DomainError("samples_per_assortment must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be positive")
        if self.laplace < 0:
            raise DomainError("laplace smoothing must be nonnegative")


def stream(seed: int, S: Assortment) -> np.random.Generator:
    """Independent generator for one ``(seed, assortment)`` pair."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=S.products)
    return np.random.Generator(np.random.Philox(ss))


def _cdf_rows(P: NDArray[np.float64]) -> NDArray[np.float64]:
    """Row-wise CDFs with everything from the last positive entry on set to
    +inf, so a uniform draw can never fall past the support."""
    P = np.atleast_2d(P)
    cdf = np.cumsum(P, axis=1)
    for r in range(P.shape[0]):
        pos = np.flatnonzero(P[r] > 0)
        if pos.size:
            cdf[r, pos[-1]:] = np.inf
    return cdf


class _Walker:
    def __init__(self, model: ModelParams, S: Assortment, max_steps: int):
        if max_steps < model.n:
            raise DomainError(f"max_steps must be at least n={model.n}")
        S.check_bounds(model.n)
        self.max_steps = max_steps
        self.S = S
        self.lam_cdf = _cdf_rows(model.lam)[0]
        self.rho_cdf = _cdf_rows(model.rho)
        self.absorbing = np.zeros(model.n + 1, dtype=bool)
        self.absorbing[list(S.outcomes)] = True
        self.slot = np.full(model.n + 1, -1)
        self.slot[list(S.outcomes)] = np.arange(len(S) + 1)

    def one(self, rng: np.random.Generator) -> int:
        state = int(np.argmax(rng.random() < self.lam_cdf))
        steps = 1
        while not self.absorbing[state]:
            if steps >= self.max_steps:
                raise WalkLimitExceeded(
                    f"walk on {list(self.S)} exceeded {self.max_steps} steps"
                )
            state = int(np.argmax(rng.random() < self.rho_cdf[state]))
            steps += 1
        return state

    def many(self, rng: np.random.Generator, m: int) -> tuple[NDArray, NDArray]:
        """Outcome slots (indices into ``S.outcomes``) and walk lengths."""
        state = np.argmax(rng.random(m)[:, None] < self.lam_cdf[None, :], axis=1)
        steps = np.ones(m, dtype=np.int64)
        active = np.flatnonzero(~self.absorbing[state])
        while active.size:
            if steps[active[0]] >= self.max_steps:
                raise WalkLimitExceeded(
                    f"{active.size} walks on {list(self.S)} exceeded {self.max_steps} steps"
                )
            u = rng.random(active.size)
            state[active] = np.argmax(u[:, None] < self.rho_cdf[state[active]], axis=1)
            steps[active] += 1
            active = active[~self.absorbing[state[active]]]
        return self.slot[state], steps


def sample_purchase(
    model: ModelParams,
    S: Assortment,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> int:
    """Simulate one customer facing ``S``; returns the outcome state."""
    return _Walker(model, S, max_steps).one(rng)


def simulate_walks(
    model: ModelParams,
    S: Assortment,
    m: int,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[NDArray, NDArray]:
    """Simulate ``m`` customers; returns outcome states and walk lengths."""
    walker = _Walker(model, S, max_steps)
    outcomes = np.empty(m, dtype=np.int64)
    lengths = np.empty(m, dtype=np.int64)
    for lo in range(0, m, CHUNK):
        hi = min(m, lo + CHUNK)
        slots, steps = walker.many(rng, hi - lo)
        outcomes[lo:hi] = np.asarray(S.outcomes)[slots]
        lengths[lo:hi] = steps
    return outcomes, lengths


def estimate_counts(model: ModelParams, S: Assortment, cfg: SampleConfig) -> NDArray:
    walker = _Walker(model, S, cfg.max_steps)
    rng = stream(cfg.seed, S)
    counts = np.zeros(len(S) + 1, dtype=np.int64)
    m = cfg.samples_per_assortment
    for lo in range(0, m, CHUNK):
        slots, _ = walker.many(rng, min(CHUNK, m - lo))
        counts += np.bincount(slots, minlength=len(S) + 1)
    return counts


def estimate_table(
    model: ModelParams, assortments: Iterable[Assortment], cfg: SampleConfig
) -> ChoiceTable:
    """Empirical outcome frequencies from ``cfg.samples_per_assortment``
    simulated customers per assortment (plus optional Laplace smoothing)."""
    table = ChoiceTable(model.n)
    for S in sorted(set(assortments)):
        counts = estimate_counts(model, S, cfg) + cfg.laplace
        table[S] = counts / counts.sum()
    return table


@dataclass(frozen=True)
class StudyPoint:
    m: int
    max_param_error: float
    failure: str | None = None


def _derived_seed(seed: int, m: int) -> int:
    ss = np.random.SeedSequence([int(seed) & _MASK64, int(m)])
    return int(ss.generate_state(1, np.uint64)[0])


def error_vs_samples(
    model: ModelParams,
    plan: RecoveryPlan,
    m_values: Sequence[int],
    seed: int,
    options: RecoveryOptions | None = None,
    laplace: float = 0.0,
    estimator: Callable[[ModelParams, list[Assortment], SampleConfig], ChoiceTable]
    | None = None,
) -> list[StudyPoint]:
    """Recovery error as a function of the per-assortment sample size.

    Each ``m`` gets its own sampling seed derived from ``(seed, m)``.  A
    failed recovery produces a point with ``nan`` error and the error class
    name in ``failure`` rather than aborting the sweep.
    """
    if not m_values:
        raise DomainError("m_values must be nonempty")
    opts = options or RecoveryOptions(denom_tolerance=NOISY_DENOM_TOL)
    estimator = estimator or estimate_table
    out = []
    for m in m_values:
        cfg = SampleConfig(int(m), _derived_seed(seed, m), laplace=laplace)
        try:
            table = estimator(model, plan.required_assortments, cfg)
            report = recover(table, plan, opts, truth=model)
            out.append(StudyPoint(int(m), float(report.max_param_error)))
        except MCCMError as exc:
            logger.info("recovery failed at m=%d: %s", m, exc)
            out.append(StudyPoint(int(m), float("nan"), type(exc).__name__))
    return out
