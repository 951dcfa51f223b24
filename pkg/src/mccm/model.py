"""Markov chain choice model parameters: representation, validation, generation.

States are indexed ``0, 1, ..., n`` where ``0`` is the no-purchase option and
``1..n`` are products.  A model is a pair ``(lam, rho)``: the distribution of
the customer's initial state and the row-stochastic transition matrix.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numpy.typing import NDArray
from scipy.sparse.csgraph import connected_components

from mccm.errors import DomainError

STOCHASTIC_TOL = 1e-12
ZERO_PATTERN_TOL = 1e-15


@functools.total_ordering
@dataclass(frozen=True)
class Assortment:
    """A nonempty set of offered products, stored in canonical sorted form.

    Assortments order by size first and lexicographically second, which is
    the record order used by the choice-table file format.
    """

    products: tuple[int, ...]

    def __init__(self, products: Iterable[int]):
        items = [int(p) for p in products]
        canon = tuple(sorted(set(items)))
        if not canon:
            raise DomainError("an assortment must be nonempty")
        if len(canon) != len(items):
            raise DomainError(f"duplicate products in assortment {items}")
        if canon[0] < 1:
            raise DomainError(f"products are numbered from 1, got {items}")
        object.__setattr__(self, "products", canon)

    def check_bounds(self, n: int) -> None:
        if self.products[-1] > n:
            raise DomainError(f"assortment {list(self.products)} exceeds n={n}")

    @property
    def outcomes(self) -> tuple[int, ...]:
        """Possible outcomes ``S_+``: no purchase followed by the products."""
        return (0,) + self.products

    def with_product(self, i: int) -> Assortment:
        return Assortment(self.products + (i,))

    def __len__(self) -> int:
        return len(self.products)

    def __iter__(self) -> Iterator[int]:
        return iter(self.products)

    def __contains__(self, i: object) -> bool:
        return i in self.products

    def __lt__(self, other: Assortment) -> bool:
        if not isinstance(other, Assortment):
            return NotImplemented
        return (len(self.products), self.products) < (
            len(other.products),
            other.products,
        )

    def __repr__(self) -> str:
        return f"Assortment({list(self.products)})"


class ViolationCode(str, enum.Enum):
    NON_STOCHASTIC_ROW = "NonStochasticRow"
    SELF_LOOP = "SelfLoop"
    NO_PURCHASE_NOT_ABSORBING = "NoPurchaseNotAbsorbing"
    REDUCIBLE_SUBMATRIX = "ReducibleSubmatrix"
    BAD_LAMBDA = "BadLambda"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    message: str


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Parameters of a Markov chain choice model over ``n`` products.

    Attributes
    ----------
    n : int
        Number of products.
    lam : ndarray, shape (n+1,)
        Initial-state distribution; entry 0 is the no-purchase state.
    rho : ndarray, shape (n+1, n+1)
        Transition matrix; row ``i`` is the next-state distribution from ``i``.

    Only shapes are checked on construction; use :func:`validate` for the
    model properties.  The arrays are copied and made read-only.
    """

    n: int
    lam: NDArray[np.float64]
    rho: NDArray[np.float64]

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        lam = np.array(self.lam, dtype=np.float64)
        rho = np.array(self.rho, dtype=np.float64)
        if lam.shape != (n + 1,):
            raise DomainError(f"lambda must have shape ({n + 1},), got {lam.shape}")
        if rho.shape != (n + 1, n + 1):
            raise DomainError(
                f"rho must have shape ({n + 1}, {n + 1}), got {rho.shape}"
            )
        lam.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "rho", rho)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.lam, other.lam)
            and np.array_equal(self.rho, other.rho)
        )

    __hash__ = None

    @property
    def products(self) -> range:
        return range(1, self.n + 1)

    def max_abs_diff(self, other: ModelParams) -> float:
        """Largest entrywise gap between two models' ``lam`` and ``rho``."""
        if other.n != self.n:
            raise DomainError(f"models differ in size: {self.n} vs {other.n}")
        return float(
            max(
                np.max(np.abs(self.lam - other.lam)),
                np.max(np.abs(self.rho - other.rho)),
            )
        )

    def to_dict(self) -> dict:
        return {"n": self.n, "lambda": self.lam.tolist(), "rho": self.rho.tolist()}

    @classmethod
    def from_dict(cls, data: dict, renormalize: bool = False) -> ModelParams:
        try:
            n = int(data["n"])
            lam = np.asarray(data["lambda"], dtype=np.float64)
            rho = np.asarray(data["rho"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed model object: {exc}") from exc
        if renormalize:
            lam, rho = _renormalize(lam, rho)
        return cls(n, lam, rho)


def _renormalize(lam, rho):
    lam = lam / lam.sum()
    rho = rho / rho.sum(axis=1, keepdims=True)
    return lam, rho


def is_irreducible(sub: NDArray[np.float64], tol: float = ZERO_PATTERN_TOL) -> bool:
    """Whether the digraph with edges ``i -> j`` for ``sub[i, j] > tol`` is
    strongly connected."""
    sub = np.asarray(sub)
    if sub.shape[0] <= 1:
        return True
    n_comp, _ = connected_components(sub > tol, directed=True, connection="strong")
    return n_comp == 1


def validate(model: ModelParams) -> list[Violation]:
    """Check the model properties; an empty list means the model is valid."""
    out: list[Violation] = []
    lam, rho = model.lam, model.rho

    if not np.all(np.isfinite(lam)) or np.any(lam < 0) or abs(lam.sum() - 1) > STOCHASTIC_TOL:
        out.append(
            Violation(
                ViolationCode.BAD_LAMBDA,
                f"lambda must be a probability vector (sum={lam.sum()!r})",
            )
        )

    row_sums = rho.sum(axis=1)
    bad_rows = [
        i
        for i in range(model.n + 1)
        if not np.all(np.isfinite(rho[i]))
        or np.any(rho[i] < 0)
        or abs(row_sums[i] - 1) > STOCHASTIC_TOL
    ]
    if bad_rows:
        out.append(
            Violation(
                ViolationCode.NON_STOCHASTIC_ROW,
                f"rows {bad_rows} are not probability vectors",
            )
        )

    if rho[0, 0] != 1.0 or np.any(rho[0, 1:] != 0.0):
        out.append(
            Violation(
                ViolationCode.NO_PURCHASE_NOT_ABSORBING,
                "row 0 must be (1, 0, ..., 0)",
            )
        )

    diag = np.diag(rho)[1:]
    loops = [i + 1 for i in np.flatnonzero(diag != 0.0)]
    if loops:
        out.append(
            Violation(ViolationCode.SELF_LOOP, f"products {loops} have self-loops")
        )

    if not is_irreducible(rho[1:, 1:]):
        out.append(
            Violation(
                ViolationCode.REDUCIBLE_SUBMATRIX,
                "product-to-product transitions are not strongly connected",
            )
        )
    return out


def violation_codes(model: ModelParams) -> list[str]:
    return [v.code.value for v in validate(model)]


def generate_random(n: int, no_purchase_mass: float, seed: int) -> ModelParams:
    """Draw a random valid model with strictly positive product transitions.

    Each product row puts ``no_purchase_mass`` on state 0 and spreads the
    rest over the other products with normalized exponential weights.  The
    initial distribution is zero on state 0 and strictly positive on
    products.  Output is a deterministic function of the arguments.
    """
    if int(n) != n or n < 3:
        raise DomainError(f"n must be an integer >= 3, got {n}")
    if not 0.0 <= no_purchase_mass < 1.0:
        raise DomainError(f"no_purchase_mass must lie in [0, 1), got {no_purchase_mass}")
    n = int(n)
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)

    rho = np.zeros((n + 1, n + 1))
    rho[0, 0] = 1.0
    for i in range(1, n + 1):
        w = rng.exponential(size=n - 1)
        others = [j for j in range(1, n + 1) if j != i]
        rho[i, others] = (1.0 - no_purchase_mass) * w / w.sum()
        rho[i, 0] = no_purchase_mass
        # absorb summation round-off so the row sums to 1 as closely as possible
        rho[i, others[-1]] = 1.0 - no_purchase_mass - rho[i, others[:-1]].sum()

    w = rng.exponential(size=n)
    lam = np.zeros(n + 1)
    lam[1:] = w / w.sum()
    return ModelParams(n, lam, rho)


def symmetric_model(n: int) -> ModelParams:
    """Uniform model: uniform initial distribution over products, uniform
    off-diagonal transitions, no no-purchase mass."""
    lam = np.zeros(n + 1)
    lam[1:] = 1.0 / n
    rho = np.zeros((n + 1, n + 1))
    rho[0, 0] = 1.0
    rho[1:, 1:] = 1.0 / (n - 1)
    np.fill_diagonal(rho[1:, 1:], 0.0)
    return ModelParams(n, lam, rho)
