import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

from hclp.errors import (
    InvalidStatementError,
    InvalidTableError,
    NameResolutionError,
    QueryParseError,
)

CostValue = Union[int, Fraction]

NAME_PATTERN = r"[A-Za-z0-9_+#^-]+"
_QUERY_RE = re.compile(rf"^\s*({NAME_PATTERN})\s*(<=|<|==)\s*({NAME_PATTERN})\s*$")


class Combiner(str, Enum):
    """The operation that merges costs within one importance level.

    Both members are associative, commutative and monotonic, with
    identity 0 over the non-negative rationals.
    """

    SUM = "sum"
    MAX = "max"

    def combine(self, values: Iterable[Fraction]) -> Fraction:
        """Fold the values with this combiner (0 for an empty collection)."""
        if self is Combiner.SUM:
            return sum(values, Fraction(0))
        return max(values, default=Fraction(0))


class ComparisonOutcome(Enum):
    """The outcome of comparing alternative ``a`` against ``b``."""

    STRICTLY_BETTER = "strictly-better"
    EQUIVALENT = "equivalent"
    STRICTLY_WORSE = "strictly-worse"

    def flipped(self) -> "ComparisonOutcome":
        """The outcome of the same comparison with the sides swapped."""
        if self is ComparisonOutcome.STRICTLY_BETTER:
            return ComparisonOutcome.STRICTLY_WORSE
        if self is ComparisonOutcome.STRICTLY_WORSE:
            return ComparisonOutcome.STRICTLY_BETTER
        return self

    @property
    def better_or_equivalent(self) -> bool:
        return self is not ComparisonOutcome.STRICTLY_WORSE


@dataclass(frozen=True)
class PreferenceStatement:
    """A statement ``left <= right`` (or ``left < right`` when strict).

    Lower cost is better, so ``left <= right`` reads "left is at least as
    good as right".

    Attributes:
        left: The alternative claimed to be preferred.
        right: The alternative it is compared against.
        strict: Whether the preference is strict.
    """

    left: str
    right: str
    strict: bool = False

    @classmethod
    def from_string(cls, value: str) -> "PreferenceStatement":
        """Create a statement from a string such as ``"alpha <= beta"``.

        Args:
            value: The string to parse. It must match
                ``NAME (<=|<) NAME``, whitespace tolerant.

        Returns:
            A PreferenceStatement object.
        """
        query = parse_query(value)
        if isinstance(query, EquivalenceQuery):
            raise QueryParseError(f"Expected '<=' or '<' in statement: {value!r}")
        return query

    @property
    def relation(self) -> str:
        return "<" if self.strict else "<="

    def negate(self) -> "PreferenceStatement":
        """The negation: ``a <= b`` becomes ``b < a`` and vice versa."""
        return PreferenceStatement(self.right, self.left, not self.strict)

    def nonstrict(self) -> "PreferenceStatement":
        """The non-strict form of this statement."""
        return PreferenceStatement(self.left, self.right, False)

    def to_string(self) -> str:
        return f"{self.left} {self.relation} {self.right}"

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class EquivalenceQuery:
    """A query ``left == right``: both non-strict directions hold."""

    left: str
    right: str

    def to_string(self) -> str:
        return f"{self.left} == {self.right}"

    def __str__(self) -> str:
        return self.to_string()


Query = Union[PreferenceStatement, EquivalenceQuery]


def parse_query(value: str) -> Query:
    """Parse ``NAME (<=|<|==) NAME`` into a statement or equivalence query.

    Args:
        value: The query text.

    Returns:
        A PreferenceStatement for ``<=``/``<`` and an EquivalenceQuery for
        ``==``.
    """
    match = _QUERY_RE.match(value)
    if match is None:
        raise QueryParseError(f"Malformed query: {value!r}")
    left, relation, right = match.groups()
    if relation == "==":
        return EquivalenceQuery(left, right)
    return PreferenceStatement(left, right, strict=relation == "<")


def parse_statement(value: str) -> PreferenceStatement:
    """Parse ``NAME (<=|<) NAME`` into a statement."""
    return PreferenceStatement.from_string(value)


@dataclass(frozen=True)
class CostTable:
    """An HCLP structure: alternatives, evaluations and their costs.

    Attributes:
        alternatives: Distinct alternative names, in declaration order.
        evaluations: Distinct evaluation names, in declaration order.
        costs: Cost matrix indexed ``costs[evaluation][alternative]``.
        combiner: The operation merging costs within a level.
    """

    alternatives: tuple[str, ...]
    evaluations: tuple[str, ...]
    costs: tuple[tuple[Fraction, ...], ...]
    combiner: Combiner = Combiner.SUM
    _alternative_index: dict[str, int] = field(
        init=False, repr=False, compare=False, hash=False
    )
    _evaluation_index: dict[str, int] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        alternatives = tuple(self.alternatives)
        evaluations = tuple(self.evaluations)
        for axis, names in (("alternative", alternatives), ("evaluation", evaluations)):
            seen: set[str] = set()
            for name in names:
                if name in seen:
                    raise InvalidTableError(f"Duplicate {axis} name: {name}")
                seen.add(name)

        if len(self.costs) != len(evaluations):
            raise InvalidTableError(
                f"Expected {len(evaluations)} cost rows, got {len(self.costs)}"
            )
        costs = []
        for evaluation, row in zip(evaluations, self.costs):
            if len(row) != len(alternatives):
                raise InvalidTableError(
                    f"Cost row for {evaluation} has {len(row)} cells, "
                    f"expected {len(alternatives)}"
                )
            converted = tuple(Fraction(value) for value in row)
            for alternative, value in zip(alternatives, converted):
                if value < 0:
                    raise InvalidTableError(
                        f"Negative cost {evaluation}/{alternative}: {value}"
                    )
            costs.append(converted)

        object.__setattr__(self, "alternatives", alternatives)
        object.__setattr__(self, "evaluations", evaluations)
        object.__setattr__(self, "costs", tuple(costs))
        object.__setattr__(self, "combiner", Combiner(self.combiner))
        object.__setattr__(
            self, "_alternative_index", {n: i for i, n in enumerate(alternatives)}
        )
        object.__setattr__(
            self, "_evaluation_index", {n: i for i, n in enumerate(evaluations)}
        )

    @classmethod
    def from_mapping(
        cls,
        alternatives: Sequence[str],
        costs: Mapping[str, Mapping[str, CostValue]],
        combiner: Combiner = Combiner.SUM,
    ) -> "CostTable":
        """Create a table from ``{evaluation: {alternative: cost}}``.

        Args:
            alternatives: The alternative names, in order.
            costs: Costs per evaluation; evaluations keep mapping order.
            combiner: The level combiner.

        Returns:
            A CostTable object.
        """
        rows = []
        for evaluation, row in costs.items():
            missing = [a for a in alternatives if a not in row]
            if missing:
                raise InvalidTableError(f"Missing cost {evaluation}/{missing[0]}")
            rows.append(tuple(Fraction(row[a]) for a in alternatives))
        return cls(tuple(alternatives), tuple(costs), tuple(rows), combiner)

    def alternative_index(self, name: str) -> int:
        try:
            return self._alternative_index[name]
        except KeyError:
            raise NameResolutionError(f"Unknown alternative: {name}") from None

    def evaluation_index(self, name: str) -> int:
        try:
            return self._evaluation_index[name]
        except KeyError:
            raise NameResolutionError(f"Unknown evaluation: {name}") from None

    def has_alternative(self, name: str) -> bool:
        return name in self._alternative_index

    def has_evaluation(self, name: str) -> bool:
        return name in self._evaluation_index

    def cost(self, evaluation: str, alternative: str) -> Fraction:
        """The cost ``evaluation(alternative)``."""
        return self.costs[self.evaluation_index(evaluation)][
            self.alternative_index(alternative)
        ]

    @cached_property
    def columns(self) -> tuple[tuple[Fraction, ...], ...]:
        """Costs transposed: ``columns[alternative][evaluation]``."""
        return tuple(zip(*self.costs)) if self.costs else tuple(
            () for _ in self.alternatives
        )

    def order_evaluations(self, names: Iterable[str]) -> list[str]:
        """Sort evaluation names into table declaration order."""
        return sorted(names, key=self.evaluation_index)

    def restrict(self, evaluations: Iterable[str]) -> "CostTable":
        """A table keeping only the given evaluations (declaration order)."""
        keep = self.order_evaluations(set(evaluations))
        rows = tuple(self.costs[self.evaluation_index(e)] for e in keep)
        return CostTable(self.alternatives, tuple(keep), rows, self.combiner)

    def with_alternatives(
        self, columns: Mapping[str, Sequence[CostValue]]
    ) -> "CostTable":
        """A table with extra alternatives appended.

        Args:
            columns: New alternative name to its cost column (one value
                per evaluation, in declaration order).
        """
        for name, column in columns.items():
            if len(column) != len(self.evaluations):
                raise InvalidTableError(
                    f"Column for {name} has {len(column)} cells, "
                    f"expected {len(self.evaluations)}"
                )
        names = self.alternatives + tuple(columns)
        rows = tuple(
            row + tuple(Fraction(column[i]) for column in columns.values())
            for i, row in enumerate(self.costs)
        )
        return CostTable(names, self.evaluations, rows, self.combiner)

    def scaled(self, factor: CostValue) -> "CostTable":
        """A table with every cost multiplied by a positive rational."""
        factor = Fraction(factor)
        if factor <= 0:
            raise InvalidTableError(f"Scale factor must be positive, got {factor}")
        rows = tuple(tuple(value * factor for value in row) for row in self.costs)
        return CostTable(self.alternatives, self.evaluations, rows, self.combiner)

    def check_statement(self, stmt: PreferenceStatement) -> None:
        """Raise NameResolutionError if the statement names are unknown."""
        self.alternative_index(stmt.left)
        self.alternative_index(stmt.right)


@dataclass(frozen=True)
class HclpModel:
    """An ordered partition of a subset of the evaluations.

    Earlier levels are more important. The empty model is allowed.

    Attributes:
        levels: The levels, most important first.
    """

    levels: tuple[frozenset[str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "levels", tuple(frozenset(level) for level in self.levels)
        )

    @classmethod
    def from_sequence(cls, sequence: Iterable[str]) -> "HclpModel":
        """The model with one singleton level per evaluation, in order."""
        return cls(tuple(frozenset([name]) for name in sequence))

    @property
    def sigma(self) -> frozenset[str]:
        """All evaluations used by the model."""
        return frozenset().union(*self.levels)

    @property
    def is_sequence(self) -> bool:
        return all(len(level) == 1 for level in self.levels)

    def to_sequence(self) -> tuple[str, ...]:
        """The evaluations of a sequence model, in order."""
        if not self.is_sequence:
            raise ValueError(f"Not a sequence model: {self}")
        return tuple(next(iter(level)) for level in self.levels)

    def to_lists(self, table: Optional[CostTable] = None) -> list[list[str]]:
        """Levels as lists, each sorted by table order (or by name)."""
        if table is None:
            return [sorted(level) for level in self.levels]
        return [table.order_evaluations(level) for level in self.levels]

    def to_string(self, table: Optional[CostTable] = None) -> str:
        inner = ",".join("{" + ",".join(level) + "}" for level in self.to_lists(table))
        return f"({inner})"

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class LevelSizeAtMost:
    """Every level has at most ``t`` evaluations."""

    t: int

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError(f"Level-size bound must be at least 1, got {self.t}")


@dataclass(frozen=True)
class EquivalenceClasses:
    """Every level is exactly one class of the given partition."""

    partition: tuple[frozenset[str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "partition", tuple(frozenset(block) for block in self.partition)
        )


@dataclass(frozen=True)
class Unrestricted:
    """No constraint beyond being an ordered partition."""


LevelConstraint = Union[LevelSizeAtMost, EquivalenceClasses, Unrestricted]


@dataclass(frozen=True)
class ModelViolation:
    """The first invariant a model fails.

    Attributes:
        invariant: Short name of the violated invariant.
        detail: Human-readable description.
    """

    invariant: str
    detail: str


@dataclass(frozen=True)
class StatementClassification:
    """Evaluations supporting, opposing and indifferent to a statement."""

    supp: frozenset[str]
    opp: frozenset[str]
    ind: frozenset[str]


@dataclass(frozen=True)
class InconsistencyBase:
    """A pair of statements and evaluations that no model of Γ can use.

    Attributes:
        gamma_part: Statements of Γ, in Γ order (duplicates kept).
        c_part: Evaluation names.
    """

    gamma_part: tuple[PreferenceStatement, ...]
    c_part: frozenset[str]

    def to_dict(self, table: Optional[CostTable] = None) -> dict:
        evaluations = (
            table.order_evaluations(self.c_part) if table else sorted(self.c_part)
        )
        return {
            "statements": [stmt.to_string() for stmt in self.gamma_part],
            "evaluations": evaluations,
        }


@dataclass(frozen=True)
class OrderingStatement:
    """A disjunctive precedence ``left < right`` (or ``<=``) over evaluations.

    Satisfied by a sequence when some evaluation of ``left`` appears before
    every evaluation of ``right``.
    """

    left: frozenset[str]
    right: frozenset[str]
    strict: bool = False

    def __post_init__(self) -> None:
        left, right = frozenset(self.left), frozenset(self.right)
        if left & right:
            overlap = ",".join(sorted(left & right))
            raise InvalidStatementError(
                f"Ordering statement sides must be disjoint (shared: {overlap})"
            )
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def relation(self) -> str:
        return "<" if self.strict else "<="

    def to_string(self) -> str:
        left = "{" + ",".join(sorted(self.left)) + "}"
        right = "{" + ",".join(sorted(self.right)) + "}"
        return f"{left} {self.relation} {right}"

    def __str__(self) -> str:
        return self.to_string()


def normalize_partition(
    partition: Iterable[Iterable[str]],
) -> tuple[frozenset[str], ...]:
    return tuple(frozenset(block) for block in partition)
