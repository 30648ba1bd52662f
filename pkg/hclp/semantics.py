"""Satisfaction semantics for HCLP models.

A model compares two alternatives level by level: within a level the
costs of its evaluations are merged with the table's combiner, and the
first level on which the alternatives differ decides.
"""

from fractions import Fraction
from typing import Iterable, Optional

from hclp.models import (
    Combiner,
    ComparisonOutcome,
    CostTable,
    EquivalenceClasses,
    HclpModel,
    LevelConstraint,
    LevelSizeAtMost,
    ModelViolation,
    PreferenceStatement,
    Unrestricted,
)


def combine(combiner: Combiner, values: Iterable[Fraction]) -> Fraction:
    """Fold the values with the combiner.

    Args:
        combiner: Sum or Max.
        values: Non-negative rationals.

    Returns:
        The combined value; 0 for an empty collection.
    """
    return combiner.combine(values)


def _compare_values(left: Fraction, right: Fraction) -> ComparisonOutcome:
    if left < right:
        return ComparisonOutcome.STRICTLY_BETTER
    if left == right:
        return ComparisonOutcome.EQUIVALENT
    return ComparisonOutcome.STRICTLY_WORSE


def level_compare(
    table: CostTable, level: Iterable[str], a: str, b: str
) -> ComparisonOutcome:
    """Compare two alternatives on a single level.

    Args:
        table: The cost table.
        level: The evaluations of the level.
        a: The first alternative.
        b: The second alternative.

    Returns:
        STRICTLY_BETTER when ``a`` has the lower combined cost.
    """
    rows = [table.costs[table.evaluation_index(name)] for name in level]
    i, j = table.alternative_index(a), table.alternative_index(b)
    return _compare_values(
        table.combiner.combine(row[i] for row in rows),
        table.combiner.combine(row[j] for row in rows),
    )


def model_compare(
    table: CostTable, model: HclpModel, a: str, b: str
) -> ComparisonOutcome:
    """Compare two alternatives lexicographically under a model.

    The first level that does not find them equivalent decides; a model
    with no such level (including the empty model) finds them equivalent.
    """
    table.alternative_index(a)
    table.alternative_index(b)
    for level in model.levels:
        outcome = level_compare(table, level, a, b)
        if outcome is not ComparisonOutcome.EQUIVALENT:
            return outcome
    return ComparisonOutcome.EQUIVALENT


def satisfies(table: CostTable, model: HclpModel, stmt: PreferenceStatement) -> bool:
    """Whether the model satisfies the preference statement."""
    outcome = model_compare(table, model, stmt.left, stmt.right)
    if stmt.strict:
        return outcome is ComparisonOutcome.STRICTLY_BETTER
    return outcome.better_or_equivalent


def satisfies_all(
    table: CostTable, model: HclpModel, gamma: Iterable[PreferenceStatement]
) -> bool:
    """Whether the model satisfies every statement of gamma."""
    return all(satisfies(table, model, stmt) for stmt in gamma)


def violated_statements(
    table: CostTable, model: HclpModel, gamma: Iterable[PreferenceStatement]
) -> list[PreferenceStatement]:
    """The statements of gamma the model does not satisfy, in order."""
    return [stmt for stmt in gamma if not satisfies(table, model, stmt)]


def negate(stmt: PreferenceStatement) -> PreferenceStatement:
    """``a <= b`` becomes ``b < a``; ``a < b`` becomes ``b <= a``."""
    return stmt.negate()


def validate_model(
    table: CostTable,
    model: HclpModel,
    constraint: Optional[LevelConstraint] = None,
) -> Optional[ModelViolation]:
    """Check that a model is a valid ordered partition under a constraint.

    Args:
        table: The cost table whose evaluations the model uses.
        model: The model to check.
        constraint: A level-size bound, an equivalence partition, or None.

    Returns:
        None when the model is valid, otherwise the first violation.
    """
    seen: set[str] = set()
    for position, level in enumerate(model.levels, start=1):
        if not level:
            return ModelViolation("non-empty", f"Level {position} is empty")
        for name in level:
            if not table.has_evaluation(name):
                return ModelViolation("known-evaluation", f"Unknown evaluation {name}")
        shared = seen & level
        if shared:
            return ModelViolation(
                "disjoint",
                f"Level {position} repeats {','.join(sorted(shared))}",
            )
        seen |= level

    if constraint is None or isinstance(constraint, Unrestricted):
        return None
    if isinstance(constraint, LevelSizeAtMost):
        for position, level in enumerate(model.levels, start=1):
            if len(level) > constraint.t:
                return ModelViolation(
                    "level-size",
                    f"Level {position} has {len(level)} evaluations "
                    f"(bound {constraint.t})",
                )
        return None
    if isinstance(constraint, EquivalenceClasses):
        classes = set(constraint.partition)
        for position, level in enumerate(model.levels, start=1):
            if level not in classes:
                return ModelViolation(
                    "equivalence-class",
                    f"Level {position} is not an equivalence class",
                )
        return None
    raise TypeError(f"Unsupported constraint: {constraint!r}")
