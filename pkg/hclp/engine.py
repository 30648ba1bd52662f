"""Polynomial inference over sequence models (one evaluation per level).

The central routine is Cons-check: it greedily emits evaluations whose
opposed statements are all already supported by earlier evaluations. The
emitted sequence satisfies the non-strict closure of Γ, and what it leaves
behind is the maximal inconsistency base.
"""

import heapq
import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from hclp.errors import InvalidModelError, PreconditionError
from hclp.models import (
    CostTable,
    EquivalenceQuery,
    HclpModel,
    InconsistencyBase,
    PreferenceStatement,
    Query,
    StatementClassification,
    normalize_partition,
)

logger = logging.getLogger(__name__)

TieOrder = Sequence[str]

# Statements classified per numpy batch; bounds the temporary difference matrix.
_CHUNK = 512


def _scaled_values(table: CostTable) -> np.ndarray:
    """Integer cost matrix ``[evaluation, alternative]``.

    Each row is multiplied by the lcm of its denominators, which keeps the
    sign of every within-row difference.
    """
    rows = []
    for row in table.costs:
        scale = math.lcm(*(value.denominator for value in row))
        rows.append([value.numerator * (scale // value.denominator) for value in row])
    bound = max((abs(x) for row in rows for x in row), default=0)
    dtype = np.int64 if bound < 2**62 else object
    values = np.array(rows, dtype=dtype)
    return values.reshape(len(table.evaluations), len(table.alternatives))


@dataclass(frozen=True)
class StatementProfile:
    """Supp/Opp of every statement of Γ against every evaluation.

    Attributes:
        sign: ``sign[phi, c]`` is +1 when evaluation ``c`` opposes statement
            ``phi``, -1 when it supports it and 0 when indifferent.
        strict: Whether each statement is strict.
    """

    sign: np.ndarray
    strict: np.ndarray

    @classmethod
    def build(
        cls, table: CostTable, gamma: Sequence[PreferenceStatement]
    ) -> "StatementProfile":
        for stmt in gamma:
            table.check_statement(stmt)
        values = _scaled_values(table)
        lefts = np.array([table.alternative_index(s.left) for s in gamma], dtype=np.intp)
        rights = np.array(
            [table.alternative_index(s.right) for s in gamma], dtype=np.intp
        )
        sign = np.zeros((len(gamma), len(table.evaluations)), dtype=np.int8)
        for start in range(0, len(gamma), _CHUNK):
            stop = start + _CHUNK
            diff = values[:, lefts[start:stop]] - values[:, rights[start:stop]]
            block = (diff > 0).astype(np.int8) - (diff < 0).astype(np.int8)
            sign[start:stop] = block.T
        strict = np.array([s.strict for s in gamma], dtype=bool)
        return cls(sign, strict)

    @property
    def n_statements(self) -> int:
        return self.sign.shape[0]

    @property
    def n_evaluations(self) -> int:
        return self.sign.shape[1]

    def supported_by(self, evaluation: int) -> np.ndarray:
        """Indices of statements the evaluation supports."""
        return np.flatnonzero(self.sign[:, evaluation] < 0)

    def opposed_by(self, evaluation: int) -> np.ndarray:
        """Indices of statements the evaluation opposes."""
        return np.flatnonzero(self.sign[:, evaluation] > 0)

    def has_support(self) -> np.ndarray:
        """Per statement, whether any evaluation supports it."""
        return (self.sign < 0).any(axis=1)


@dataclass
class EngineState:
    """Mutable state of one Cons-check run.

    ``residual_opposition[c]`` is the number of statements opposed by ``c``
    that no emitted evaluation supports yet. An evaluation sits in the ready
    heap exactly when it is unemitted and that count is zero.
    """

    profile: StatementProfile
    ranks: Sequence[int]
    residual_opposition: np.ndarray = field(init=False)
    supported: np.ndarray = field(init=False)
    emitted: np.ndarray = field(init=False)
    sequence: list[int] = field(init=False, default_factory=list)
    ready: list[tuple[int, int]] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        opposes = self.profile.sign > 0
        self.residual_opposition = opposes.sum(axis=0, dtype=np.int64)
        self.supported = np.zeros(self.profile.n_statements, dtype=bool)
        self.emitted = np.zeros(self.profile.n_evaluations, dtype=bool)
        self.ready = [
            (self.ranks[c], int(c)) for c in np.flatnonzero(self.residual_opposition == 0)
        ]
        heapq.heapify(self.ready)

    def emit_next(self) -> Optional[int]:
        """Emit the ready evaluation of smallest rank, or None when stuck."""
        if not self.ready:
            return None
        _, evaluation = heapq.heappop(self.ready)
        self.emitted[evaluation] = True
        self.sequence.append(evaluation)

        newly = np.flatnonzero((self.profile.sign[:, evaluation] < 0) & ~self.supported)
        if newly.size:
            self.supported[newly] = True
            opposes = self.profile.sign[newly] > 0
            self.residual_opposition -= opposes.sum(axis=0, dtype=np.int64)
            unlocked = np.flatnonzero(
                (self.residual_opposition == 0) & ~self.emitted & opposes.any(axis=0)
            )
            for c in unlocked:
                heapq.heappush(self.ready, (self.ranks[c], int(c)))
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(
                "Emitted evaluation %d; %d statements newly supported",
                evaluation,
                newly.size,
            )
        return evaluation


@dataclass(frozen=True)
class ConsCheckResult:
    """The outcome of a Cons-check run.

    Attributes:
        table: The cost table the run used.
        gamma: The statements, in the order given.
        sequence: The emitted evaluations, in order.
        supported: Per statement of gamma, whether some emitted
            evaluation supports it.
    """

    table: CostTable
    gamma: tuple[PreferenceStatement, ...]
    sequence: tuple[str, ...]
    supported: tuple[bool, ...]

    @property
    def model(self) -> HclpModel:
        return HclpModel.from_sequence(self.sequence)

    @property
    def sigma(self) -> frozenset[str]:
        return frozenset(self.sequence)

    @property
    def base(self) -> InconsistencyBase:
        """The maximal inconsistency base: what the run left behind."""
        gamma_part = tuple(
            stmt for stmt, ok in zip(self.gamma, self.supported) if not ok
        )
        c_part = frozenset(self.table.evaluations) - self.sigma
        return InconsistencyBase(gamma_part, c_part)

    @property
    def consistent(self) -> bool:
        """Whether every strict statement is supported."""
        return all(ok for stmt, ok in zip(self.gamma, self.supported) if stmt.strict)


def _tie_ranks(table: CostTable, tie: Optional[TieOrder]) -> list[int]:
    if tie is None:
        return list(range(len(table.evaluations)))
    if sorted(tie) != sorted(table.evaluations):
        raise PreconditionError("Tie order must be a permutation of the evaluations")
    ranks = [0] * len(table.evaluations)
    for rank, name in enumerate(tie):
        ranks[table.evaluation_index(name)] = rank
    return ranks


def _run_incremental(profile: StatementProfile, ranks: Sequence[int]) -> EngineState:
    state = EngineState(profile, ranks)
    while state.emit_next() is not None:
        pass
    return state


def _run_naive(
    profile: StatementProfile, ranks: Sequence[int]
) -> tuple[list[int], set[int]]:
    """The straightforward O(|Γ||C|²) scan, kept for differential testing."""
    opposed = [set(profile.opposed_by(c).tolist()) for c in range(profile.n_evaluations)]
    supports = [
        set(profile.supported_by(c).tolist()) for c in range(profile.n_evaluations)
    ]
    remaining = sorted(range(profile.n_evaluations), key=lambda c: ranks[c])
    supported: set[int] = set()
    sequence: list[int] = []
    while True:
        chosen = next((c for c in remaining if opposed[c] <= supported), None)
        if chosen is None:
            break
        remaining.remove(chosen)
        sequence.append(chosen)
        supported |= supports[chosen]
    return sequence, supported


def run_cons_check(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    tie: Optional[TieOrder] = None,
    naive: bool = False,
) -> ConsCheckResult:
    """Run Cons-check and keep everything derived from the run.

    Args:
        table: The cost table.
        gamma: The statements (a multiset; order is kept).
        tie: Evaluation order used to break ties; defaults to declaration
            order.
        naive: Use the quadratic scan instead of the incremental engine.

    Returns:
        A ConsCheckResult.
    """
    gamma = tuple(gamma)
    ranks = _tie_ranks(table, tie)
    logger.info(
        "Running Cons-check over %d evaluations and %d statements",
        len(table.evaluations),
        len(gamma),
    )
    profile = StatementProfile.build(table, gamma)
    if naive:
        order, supported_set = _run_naive(profile, ranks)
        supported = tuple(i in supported_set for i in range(len(gamma)))
    else:
        state = _run_incremental(profile, ranks)
        order = state.sequence
        supported = tuple(bool(x) for x in state.supported)
    sequence = tuple(table.evaluations[c] for c in order)
    return ConsCheckResult(table, gamma, sequence, supported)


def classify(table: CostTable, stmt: PreferenceStatement) -> StatementClassification:
    """Split the evaluations by how they judge ``stmt.left`` against ``stmt.right``.

    Args:
        table: The cost table.
        stmt: The statement to classify.

    Returns:
        Evaluations with a lower cost on the left alternative (supp), a
        higher one (opp), and equal costs (ind).
    """
    i, j = table.alternative_index(stmt.left), table.alternative_index(stmt.right)
    supp, opp, ind = set(), set(), set()
    for name, row in zip(table.evaluations, table.costs):
        if row[i] < row[j]:
            supp.add(name)
        elif row[i] > row[j]:
            opp.add(name)
        else:
            ind.add(name)
    return StatementClassification(frozenset(supp), frozenset(opp), frozenset(ind))


def seq_satisfies(
    table: CostTable, seq: Sequence[str], stmt: PreferenceStatement
) -> bool:
    """Whether a sequence of evaluations satisfies the statement.

    The first evaluation of the sequence that is not indifferent decides;
    when there is none, only non-strict statements hold.
    """
    if len(set(seq)) != len(seq):
        raise InvalidModelError(f"Sequence repeats an evaluation: {list(seq)}")
    i, j = table.alternative_index(stmt.left), table.alternative_index(stmt.right)
    rows = [table.costs[table.evaluation_index(name)] for name in seq]
    for row in rows:
        if row[i] < row[j]:
            return True
        if row[i] > row[j]:
            return False
    return not stmt.strict


def cons_check(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    tie: Optional[TieOrder] = None,
    naive: bool = False,
) -> tuple[str, ...]:
    """The Cons-check sequence for gamma (see run_cons_check)."""
    return run_cons_check(table, gamma, tie, naive).sequence


def mib(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    tie: Optional[TieOrder] = None,
) -> InconsistencyBase:
    """The maximal inconsistency base of (gamma, evaluations).

    It does not depend on the tie order.
    """
    return run_cons_check(table, gamma, tie).base


def is_consistent(table: CostTable, gamma: Iterable[PreferenceStatement]) -> bool:
    """Whether some sequence model satisfies all of gamma."""
    return run_cons_check(table, gamma).consistent


def find_model(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    tie: Optional[TieOrder] = None,
) -> Optional[HclpModel]:
    """A sequence model satisfying gamma, or None when gamma is inconsistent."""
    result = run_cons_check(table, gamma, tie)
    return result.model if result.consistent else None


def deduce(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    query: PreferenceStatement,
) -> bool:
    """Whether every sequence model of gamma satisfies the query."""
    return not is_consistent(table, [*gamma, query.negate()])


def countermodel(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    query: PreferenceStatement,
    tie: Optional[TieOrder] = None,
) -> Optional[HclpModel]:
    """A sequence model of gamma violating the query, if one exists."""
    return find_model(table, [*gamma, query.negate()], tie)


def nonstrict_closure(
    gamma: Iterable[PreferenceStatement],
) -> list[PreferenceStatement]:
    """Gamma with every strict statement weakened to its non-strict form."""
    return [stmt.nonstrict() for stmt in gamma]


def repair(
    table: CostTable, gamma: Iterable[PreferenceStatement]
) -> list[PreferenceStatement]:
    """Drop the inconsistency base and add the non-strict closure.

    The result is always consistent: the Cons-check sequence of gamma
    satisfies it.

    Returns:
        ``(gamma - base) + closure`` without duplicates, base remainder
        first.
    """
    result = run_cons_check(table, gamma)
    kept = [stmt for stmt, ok in zip(result.gamma, result.supported) if ok]
    return list(dict.fromkeys([*kept, *nonstrict_closure(result.gamma)]))


def strong_is_consistent(
    table: CostTable, gamma: Iterable[PreferenceStatement]
) -> bool:
    """Whether some sequence using every evaluation satisfies gamma.

    That holds when the inconsistency base has no evaluations and every
    strict statement has at least one supporter.
    """
    gamma = tuple(gamma)
    result = run_cons_check(table, gamma)
    if result.base.c_part:
        return False
    profile = StatementProfile.build(table, gamma)
    has_support = profile.has_support()
    return all(has_support[i] for i, stmt in enumerate(gamma) if stmt.strict)


def strong_deduce(
    table: CostTable, gamma: Iterable[PreferenceStatement], query: Query
) -> bool:
    """Deduction over sequences that use every evaluation.

    Args:
        table: The cost table.
        gamma: The statements; must be strongly consistent.
        query: A non-strict, strict or equivalence query.

    Returns:
        Whether every full sequence satisfying gamma satisfies the query.
    """
    gamma = tuple(gamma)
    if not strong_is_consistent(table, gamma):
        raise PreconditionError(
            "Statements are not strongly consistent; strong deduction is undefined"
        )
    i, j = table.alternative_index(query.left), table.alternative_index(query.right)
    agree = all(row[i] == row[j] for row in table.costs)
    if isinstance(query, EquivalenceQuery):
        return agree
    if not query.strict:
        return deduce(table, gamma, query)
    return deduce(table, gamma, query.nonstrict()) and not agree


def reduce_evaluations(
    table: CostTable, gamma: Iterable[PreferenceStatement]
) -> CostTable:
    """The table without the evaluations of the inconsistency base.

    Deduction from a consistent gamma gives the same answers on the result.
    """
    result = run_cons_check(table, gamma)
    if not result.consistent:
        raise PreconditionError("Statements are inconsistent; cannot reduce evaluations")
    return table.restrict(result.sigma)


def equivalence_classes(
    table: CostTable, partition: Iterable[Iterable[str]]
) -> dict[str, tuple[str, ...]]:
    """Name every class of a partition of the evaluations.

    Singleton classes keep their member's name. A larger class is named by
    joining its members with ``+`` in declaration order, unless that name is
    already an evaluation or another class; then it gets the first free
    ``class#{n}``.

    Args:
        table: The cost table.
        partition: Classes covering every evaluation exactly once.

    Returns:
        Class name to members in declaration order, classes ordered by
        their first member.
    """
    blocks = normalize_partition(partition)
    covered: list[str] = [name for block in blocks for name in block]
    if any(not block for block in blocks):
        raise PreconditionError("Malformed partition: empty class")
    if len(covered) != len(set(covered)):
        raise PreconditionError("Malformed partition: classes overlap")
    if set(covered) != set(table.evaluations):
        raise PreconditionError("Malformed partition: does not cover the evaluations")

    ordered = sorted(
        (table.order_evaluations(block) for block in blocks),
        key=lambda members: table.evaluation_index(members[0]),
    )
    taken = set(table.evaluations)
    counter = itertools.count()
    classes: dict[str, tuple[str, ...]] = {}
    for members in ordered:
        if len(members) == 1:
            classes[members[0]] = tuple(members)
            continue
        name = "+".join(members)
        while name in taken:
            name = f"class#{next(counter)}"
        taken.add(name)
        classes[name] = tuple(members)
    return classes


def equiv_reduce(table: CostTable, partition: Iterable[Iterable[str]]) -> CostTable:
    """Merge each class of a partition into one synthetic evaluation.

    A class's cost on an alternative is the combined cost of its members;
    classes are named by equivalence_classes.
    """
    classes = equivalence_classes(table, partition)
    rows = tuple(
        tuple(
            table.combiner.combine(table.cost(member, alternative) for member in members)
            for alternative in table.alternatives
        )
        for members in classes.values()
    )
    return CostTable(table.alternatives, tuple(classes), rows, table.combiner)


def equivalence_is_consistent(
    table: CostTable,
    partition: Iterable[Iterable[str]],
    gamma: Iterable[PreferenceStatement],
) -> bool:
    """Consistency over models whose levels are classes of the partition."""
    return is_consistent(equiv_reduce(table, partition), gamma)


def equivalence_deduce(
    table: CostTable,
    partition: Iterable[Iterable[str]],
    gamma: Iterable[PreferenceStatement],
    query: PreferenceStatement,
) -> bool:
    """Deduction over models whose levels are classes of the partition."""
    return deduce(equiv_reduce(table, partition), gamma, query)


class DeductionBackend(ABC):
    """An interface for deciding consistency and entailment."""

    @abstractmethod
    def find_model(
        self, table: CostTable, gamma: Sequence[PreferenceStatement]
    ) -> Optional[HclpModel]:
        """Find a model satisfying gamma.

        Args:
            table: The cost table.
            gamma: The statements to satisfy.

        Returns:
            A satisfying model, or None when gamma is inconsistent.
        """
        ...

    def is_consistent(
        self, table: CostTable, gamma: Sequence[PreferenceStatement]
    ) -> bool:
        """Whether some model in the backend's class satisfies gamma."""
        return self.find_model(table, gamma) is not None

    def countermodel(
        self,
        table: CostTable,
        gamma: Sequence[PreferenceStatement],
        query: PreferenceStatement,
    ) -> Optional[HclpModel]:
        """A model of gamma that violates the query, if any."""
        return self.find_model(table, [*gamma, query.negate()])

    def deduce(
        self,
        table: CostTable,
        gamma: Sequence[PreferenceStatement],
        query: PreferenceStatement,
    ) -> bool:
        """Whether every model of gamma satisfies the query."""
        return self.countermodel(table, gamma, query) is None


@dataclass
class LexEngine(DeductionBackend):
    """The polynomial backend over sequence models.

    Attributes:
        tie: Evaluation order for Cons-check tie breaking.
        naive: Use the quadratic scan (differential testing only).
    """

    tie: Optional[TieOrder] = None
    naive: bool = False

    def find_model(
        self, table: CostTable, gamma: Sequence[PreferenceStatement]
    ) -> Optional[HclpModel]:
        result = run_cons_check(table, gamma, self.tie, self.naive)
        return result.model if result.consistent else None
