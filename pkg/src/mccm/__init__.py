"""Markov chain choice model: exact and simulated choice probabilities, and
parameter recovery from small assortments."""

from mccm.errors import (
    DomainError,
    MCCMError,
    MissingAssortment,
    MissingConditional,
    SingularSystem,
    UnderdeterminedSystem,
    WalkLimitExceeded,
    ZeroDenominator,
)
from mccm.model import Assortment, ModelParams, generate_random, validate
from mccm.oracle import (
    ChoiceTable,
    ConditionalTable,
    absorption_probabilities,
    build_conditional_table,
    conditional_direct,
    conditional_from_tables,
    exact_choice_probs,
    exact_table,
)
from mccm.plan import RecoveryPlan, build_full_plan, build_plan, count_required
from mccm.recovery import (
    RecoveryOptions,
    RecoveryReport,
    recover,
    recover_full_assortment,
    solve_system,
)
from mccm.simulate import SampleConfig, error_vs_samples, estimate_table, sample_purchase

__version__ = "0.1.0"
