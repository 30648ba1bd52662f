"""Exhaustive ground truth: enumerate models and check every one of them.

Nothing here prunes the search; the point is to be obviously correct, and
the engine is tested against it.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Iterator, Optional, Sequence

from hclp.engine import DeductionBackend, classify
from hclp.errors import ConfigurationError, PreconditionError, SizeGuardError
from hclp.models import (
    Combiner,
    CostTable,
    EquivalenceClasses,
    EquivalenceQuery,
    HclpModel,
    InconsistencyBase,
    LevelConstraint,
    LevelSizeAtMost,
    PreferenceStatement,
    Query,
    Unrestricted,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_EVALUATIONS = 8
DEFAULT_MAX_STATEMENTS = 12


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer (got {value!r})") from None


@dataclass(frozen=True)
class OracleSettings:
    """Size caps for the exponential oracle.

    Attributes:
        max_evaluations: Refuse tables with more evaluations than this.
        max_statements: Refuse inconsistency-base enumeration over more
            statements than this.
    """

    max_evaluations: int = DEFAULT_MAX_EVALUATIONS
    max_statements: int = DEFAULT_MAX_STATEMENTS

    @classmethod
    def from_env(cls) -> "OracleSettings":
        """Read the caps from HCLP_ORACLE_MAX_EVALUATIONS/_STATEMENTS."""
        return cls(
            max_evaluations=_env_int(
                "HCLP_ORACLE_MAX_EVALUATIONS", DEFAULT_MAX_EVALUATIONS
            ),
            max_statements=_env_int("HCLP_ORACLE_MAX_STATEMENTS", DEFAULT_MAX_STATEMENTS),
        )


@dataclass(frozen=True)
class ModelClassSpec:
    """Which models the oracle ranges over.

    Attributes:
        constraint: Level-size bound, equivalence classes, or unrestricted.
        require_full_sigma: Only models that use every evaluation.
    """

    constraint: LevelConstraint = field(default_factory=Unrestricted)
    require_full_sigma: bool = False

    @classmethod
    def sequences(cls, full_sigma: bool = False) -> "ModelClassSpec":
        """Models with one evaluation per level."""
        return cls(LevelSizeAtMost(1), full_sigma)

    @classmethod
    def level_size(cls, t: int, full_sigma: bool = False) -> "ModelClassSpec":
        return cls(LevelSizeAtMost(t), full_sigma)

    @classmethod
    def equivalence(cls, partition: Iterable[Iterable[str]]) -> "ModelClassSpec":
        return cls(EquivalenceClasses(tuple(frozenset(b) for b in partition)))


def _check_cap(table: CostTable, settings: OracleSettings) -> None:
    if len(table.evaluations) > settings.max_evaluations:
        raise SizeGuardError(
            f"Oracle refuses {len(table.evaluations)} evaluations "
            f"(cap {settings.max_evaluations})"
        )


Block = tuple[int, ...]


def _ordered_partitions(
    remaining: tuple[int, ...], blocks_for: Callable[[tuple[int, ...]], Iterable[Block]]
) -> Iterator[tuple[Block, ...]]:
    """Every ordered partition of ``remaining`` into allowed blocks.

    The first block is chosen among the allowed blocks in the order
    ``blocks_for`` yields them, then the rest is partitioned recursively.
    """
    if not remaining:
        yield ()
        return
    for block in blocks_for(remaining):
        chosen = set(block)
        rest = tuple(x for x in remaining if x not in chosen)
        for tail in _ordered_partitions(rest, blocks_for):
            yield (block, *tail)


def _blocks_for(
    table: CostTable, constraint: LevelConstraint
) -> Callable[[tuple[int, ...]], Iterable[Block]]:
    if isinstance(constraint, EquivalenceClasses):
        classes = [
            tuple(sorted(table.evaluation_index(name) for name in block))
            for block in constraint.partition
        ]
        covered = sorted(i for block in classes for i in block)
        if covered != list(range(len(table.evaluations))):
            raise PreconditionError("Equivalence partition must cover every evaluation once")
        classes.sort()

        def class_blocks(remaining: tuple[int, ...]) -> Iterable[Block]:
            present = set(remaining)
            return [block for block in classes if present.issuperset(block)]

        return class_blocks

    bound = constraint.t if isinstance(constraint, LevelSizeAtMost) else None

    def sized_blocks(remaining: tuple[int, ...]) -> Iterable[Block]:
        largest = len(remaining) if bound is None else min(bound, len(remaining))
        for size in range(1, largest + 1):
            yield from combinations(remaining, size)

    return sized_blocks


def enumerate_models(
    table: CostTable,
    spec: Optional[ModelClassSpec] = None,
    settings: Optional[OracleSettings] = None,
) -> Iterator[HclpModel]:
    """Yield every model of the class, each exactly once.

    Subsets of the evaluations come by size, then lexicographically by
    declaration index; each subset's ordered partitions follow the
    recursive first-block order.

    Args:
        table: The cost table.
        spec: The model class; defaults to unrestricted models.
        settings: Size caps; defaults to OracleSettings.from_env().

    Returns:
        An iterator of HclpModel objects.
    """
    spec = spec or ModelClassSpec()
    settings = settings or OracleSettings.from_env()
    _check_cap(table, settings)
    blocks_for = _blocks_for(table, spec.constraint)
    n = len(table.evaluations)
    sizes = [n] if spec.require_full_sigma else list(range(n + 1))
    logger.info("Enumerating models over %d evaluations (%s)", n, spec)

    def generate() -> Iterator[HclpModel]:
        for size in sizes:
            for subset in combinations(range(n), size):
                for partition in _ordered_partitions(subset, blocks_for):
                    yield HclpModel(
                        tuple(
                            frozenset(table.evaluations[i] for i in block)
                            for block in partition
                        )
                    )

    return generate()


def count_models(n: int, t: Optional[int] = None, full_sigma: bool = False) -> int:
    """Closed-form count of level-bounded ordered partitions of subsets.

    Args:
        n: Number of evaluations.
        t: Level-size bound; None for unrestricted.
        full_sigma: Count only partitions of the full set.

    Returns:
        The number of models enumerate_models yields for that class.
    """
    bound = n if t is None else t
    partitions = [1]
    for m in range(1, n + 1):
        partitions.append(
            sum(
                math.comb(m, k) * partitions[m - k]
                for k in range(1, min(bound, m) + 1)
            )
        )
    if full_sigma:
        return partitions[n]
    return sum(math.comb(n, m) * partitions[m] for m in range(n + 1))


class _ModelEvaluator:
    """Checks statements against models with exact integer arithmetic.

    Every cost is multiplied by the same positive integer, which leaves all
    combined-cost comparisons unchanged for both combiners.
    """

    def __init__(self, table: CostTable) -> None:
        self.table = table
        scale = math.lcm(*(value.denominator for row in table.costs for value in row))
        self.rows = {
            name: [int(value * scale) for value in row]
            for name, row in zip(table.evaluations, table.costs)
        }
        self.fold: Callable[[Iterable[int]], int] = (
            sum if table.combiner is Combiner.SUM else lambda xs: max(xs, default=0)
        )

    def level_vectors(self, model: HclpModel) -> list[list[int]]:
        vectors = []
        for level in model.levels:
            rows = [self.rows[name] for name in level]
            vectors.append([self.fold(column) for column in zip(*rows)])
        return vectors

    def satisfies(
        self, vectors: list[list[int]], stmt: PreferenceStatement
    ) -> bool:
        i = self.table.alternative_index(stmt.left)
        j = self.table.alternative_index(stmt.right)
        for vector in vectors:
            if vector[i] < vector[j]:
                return True
            if vector[i] > vector[j]:
                return False
        return not stmt.strict


def brute_find_model(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    spec: Optional[ModelClassSpec] = None,
    settings: Optional[OracleSettings] = None,
) -> Optional[HclpModel]:
    """The first enumerated model satisfying all of gamma, if any."""
    for stmt in gamma:
        table.check_statement(stmt)
    evaluator = _ModelEvaluator(table)
    for model in enumerate_models(table, spec, settings):
        vectors = evaluator.level_vectors(model)
        if all(evaluator.satisfies(vectors, stmt) for stmt in gamma):
            return model
    return None


def brute_consistent(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    spec: Optional[ModelClassSpec] = None,
    settings: Optional[OracleSettings] = None,
) -> bool:
    """Whether some model of the class satisfies all of gamma."""
    return brute_find_model(table, gamma, spec, settings) is not None


def brute_countermodel(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    query: PreferenceStatement,
    spec: Optional[ModelClassSpec] = None,
    settings: Optional[OracleSettings] = None,
) -> Optional[HclpModel]:
    """The first enumerated model satisfying gamma but not the query."""
    return brute_find_model(table, [*gamma, query.negate()], spec, settings)


def brute_deduce(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    query: PreferenceStatement,
    spec: Optional[ModelClassSpec] = None,
    settings: Optional[OracleSettings] = None,
) -> bool:
    """Whether every model of gamma in the class satisfies the query.

    Vacuously true when no model satisfies gamma.
    """
    return brute_countermodel(table, gamma, query, spec, settings) is None


def brute_strong_deduce(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    query: Query,
    settings: Optional[OracleSettings] = None,
) -> bool:
    """Deduction over sequences that use every evaluation."""
    spec = ModelClassSpec.sequences(full_sigma=True)
    if isinstance(query, EquivalenceQuery):
        forward = PreferenceStatement(query.left, query.right)
        backward = PreferenceStatement(query.right, query.left)
        return brute_deduce(table, gamma, forward, spec, settings) and brute_deduce(
            table, gamma, backward, spec, settings
        )
    return brute_deduce(table, gamma, query, spec, settings)


def _subsets(items: Sequence[int]) -> Iterator[tuple[int, ...]]:
    for size in range(len(items) + 1):
        yield from combinations(items, size)


def inconsistency_bases(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    settings: Optional[OracleSettings] = None,
) -> Iterator[tuple[tuple[int, ...], frozenset[str]]]:
    """Every inconsistency base, as (statement indices, evaluation names).

    A pair qualifies when each chosen statement's supporters and opposers
    all lie in the chosen evaluations, and each chosen evaluation opposes
    some chosen statement.
    """
    settings = settings or OracleSettings.from_env()
    _check_cap(table, settings)
    if len(gamma) > settings.max_statements:
        raise SizeGuardError(
            f"Oracle refuses {len(gamma)} statements (cap {settings.max_statements})"
        )
    classes = [classify(table, stmt) for stmt in gamma]
    evaluations = table.evaluations
    for statement_part in _subsets(range(len(gamma))):
        for chosen in _subsets(range(len(evaluations))):
            c_part = frozenset(evaluations[i] for i in chosen)
            covers = all(
                classes[k].supp | classes[k].opp <= c_part for k in statement_part
            )
            if not covers:
                continue
            if all(any(c in classes[k].opp for k in statement_part) for c in c_part):
                yield statement_part, c_part


def brute_mib(
    table: CostTable,
    gamma: Sequence[PreferenceStatement],
    settings: Optional[OracleSettings] = None,
) -> InconsistencyBase:
    """The union of all inconsistency bases."""
    statement_union: set[int] = set()
    c_union: set[str] = set()
    for statement_part, c_part in inconsistency_bases(table, gamma, settings):
        statement_union.update(statement_part)
        c_union |= c_part
    return InconsistencyBase(
        tuple(gamma[k] for k in sorted(statement_union)), frozenset(c_union)
    )


@dataclass
class BruteForceOracle(DeductionBackend):
    """The exhaustive backend over any model class.

    Attributes:
        spec: The model class.
        settings: Size caps.
    """

    spec: ModelClassSpec = field(default_factory=ModelClassSpec)
    settings: OracleSettings = field(default_factory=OracleSettings.from_env)

    def find_model(
        self, table: CostTable, gamma: Sequence[PreferenceStatement]
    ) -> Optional[HclpModel]:
        return brute_find_model(table, gamma, self.spec, self.settings)
