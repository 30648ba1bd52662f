import json
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from dataclasses_json import DataClassJsonMixin, dataclass_json
from marshmallow import ValidationError

from hclp.errors import HclpError, ProblemParseError
from hclp.models import (
    Combiner,
    CostTable,
    OrderingStatement,
    PreferenceStatement,
    normalize_partition,
)
from hclp.ordering import merge_orderings

logger = logging.getLogger(__name__)

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(-?\d+)\s*)?$")
_RELATIONS = {"<=": False, "<": True}


def parse_rational(literal: Any, location: Optional[str] = None) -> Fraction:
    """Parse a cost literal: a JSON integer or an ``"n/d"`` string.

    Args:
        literal: The raw JSON value.
        location: Field path used in error messages.

    Returns:
        The non-negative rational.
    """
    if isinstance(literal, bool):
        raise ProblemParseError(
            "malformed-rational", f"Malformed rational {literal!r}", location
        )
    if isinstance(literal, int):
        value = Fraction(literal)
    elif isinstance(literal, str):
        match = _RATIONAL_RE.match(literal)
        if match is None:
            raise ProblemParseError(
                "malformed-rational", f"Malformed rational {literal!r}", location
            )
        numerator, denominator = match.groups()
        if denominator is not None and int(denominator) == 0:
            raise ProblemParseError("zero-denominator", "zero denominator", location)
        value = Fraction(int(numerator), int(denominator or 1))
    else:
        raise ProblemParseError(
            "malformed-rational", f"Malformed rational {literal!r}", location
        )
    if value < 0:
        raise ProblemParseError("negative-cost", f"negative cost {literal!r}", location)
    return value


def format_rational(value: Fraction) -> Union[int, str]:
    """A JSON integer when integral, otherwise ``"n/d"``."""
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


def _reject_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    result: dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise ProblemParseError("duplicate-name", f"duplicate name {key}", key)
        result[key] = value
    return result


@dataclass(frozen=True)
class Problem:
    """A parsed problem: a cost table, statements and model options.

    Attributes:
        table: The cost table.
        statements: Preference statements, in file order.
        orderings: Ordering statements over evaluations, in file order.
        equivalence: Optional partition of the evaluations.
        max_level_size: Optional level-size bound.
    """

    table: CostTable
    statements: tuple[PreferenceStatement, ...] = ()
    orderings: tuple[OrderingStatement, ...] = ()
    equivalence: Optional[tuple[frozenset[str], ...]] = None
    max_level_size: Optional[int] = None

    def merged(self) -> tuple[CostTable, list[PreferenceStatement]]:
        """Table and statements with the orderings embedded as statements."""
        return merge_orderings(self.table, self.statements, self.orderings)


@dataclass_json
@dataclass
class ProblemFile(DataClassJsonMixin):
    """The JSON layout of a problem file.

    Attributes:
        operator: ``"sum"`` or ``"max"``.
        alternatives: Alternative names.
        evaluations: Evaluation name to ``{alternative: cost}``.
        statements: ``{"left", "rel", "right"}`` records; string sides for
            preference statements, list sides for ordering statements.
        equivalence: Optional partition of the evaluations.
        max_level_size: Optional level-size bound.
    """

    operator: str
    alternatives: list[str]
    evaluations: dict[str, dict[str, Any]]
    statements: list[dict[str, Any]] = field(default_factory=list)
    equivalence: Optional[list[list[str]]] = None
    max_level_size: Optional[int] = None

    @classmethod
    def from_parts(
        cls,
        table: CostTable,
        statements: Iterable[PreferenceStatement] = (),
        orderings: Iterable[OrderingStatement] = (),
        equivalence: Optional[Sequence[Iterable[str]]] = None,
        max_level_size: Optional[int] = None,
    ) -> "ProblemFile":
        records: list[dict[str, Any]] = [
            {"left": s.left, "rel": s.relation, "right": s.right} for s in statements
        ]
        records += [
            {
                "left": table.order_evaluations(o.left),
                "rel": o.relation,
                "right": table.order_evaluations(o.right),
            }
            for o in orderings
        ]
        return cls(
            operator=table.combiner.value,
            alternatives=list(table.alternatives),
            evaluations={
                evaluation: {
                    alternative: format_rational(value)
                    for alternative, value in zip(table.alternatives, row)
                }
                for evaluation, row in zip(table.evaluations, table.costs)
            },
            statements=records,
            equivalence=(
                [table.order_evaluations(block) for block in equivalence]
                if equivalence is not None
                else None
            ),
            max_level_size=max_level_size,
        )

    @classmethod
    def from_problem(cls, problem: Problem) -> "ProblemFile":
        return cls.from_parts(
            problem.table,
            problem.statements,
            problem.orderings,
            problem.equivalence,
            problem.max_level_size,
        )

    def dumps(self) -> str:
        """JSON text with two-space indent.

        Keys are not sorted: evaluation order is the default tie order and
        must survive a round trip.
        """
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_problem(self) -> Problem:
        """Validate the file and build the domain objects."""
        try:
            combiner = Combiner(self.operator)
        except ValueError:
            raise ProblemParseError(
                "invalid-operator", f"Unknown operator {self.operator!r}", "operator"
            ) from None

        seen: set[str] = set()
        for name in self.alternatives:
            if name in seen:
                raise ProblemParseError(
                    "duplicate-name", f"duplicate name {name}", "alternatives"
                )
            seen.add(name)

        rows = []
        for evaluation, cells in self.evaluations.items():
            for alternative in cells:
                if alternative not in seen:
                    raise ProblemParseError(
                        "unknown-name",
                        f"unknown alternative {alternative}",
                        f"evaluations.{evaluation}.{alternative}",
                    )
            row = []
            for alternative in self.alternatives:
                location = f"evaluations.{evaluation}.{alternative}"
                if alternative not in cells:
                    raise ProblemParseError(
                        "missing-cost", f"missing cost {evaluation}/{alternative}", location
                    )
                row.append(parse_rational(cells[alternative], location))
            rows.append(tuple(row))
        try:
            table = CostTable(
                tuple(self.alternatives), tuple(self.evaluations), tuple(rows), combiner
            )
        except HclpError as error:
            raise ProblemParseError("schema", error.message) from None

        statements: list[PreferenceStatement] = []
        orderings: list[OrderingStatement] = []
        for position, record in enumerate(self.statements):
            parsed = _parse_statement_record(table, record, f"statements[{position}]")
            if isinstance(parsed, OrderingStatement):
                orderings.append(parsed)
            else:
                statements.append(parsed)

        if self.equivalence is not None and self.max_level_size is not None:
            raise ProblemParseError(
                "conflicting-options",
                "equivalence and max_level_size are mutually exclusive",
            )
        equivalence = None
        if self.equivalence is not None:
            equivalence = normalize_partition(self.equivalence)
            members = [name for block in self.equivalence for name in block]
            if (
                any(not block for block in self.equivalence)
                or len(members) != len(set(members))
                or set(members) != set(table.evaluations)
            ):
                raise ProblemParseError(
                    "invalid-partition",
                    "equivalence must split the evaluations into disjoint non-empty classes",
                    "equivalence",
                )
        if self.max_level_size is not None and self.max_level_size < 1:
            raise ProblemParseError(
                "schema", "max_level_size must be at least 1", "max_level_size"
            )

        return Problem(
            table=table,
            statements=tuple(statements),
            orderings=tuple(orderings),
            equivalence=equivalence,
            max_level_size=self.max_level_size,
        )


def _parse_statement_record(
    table: CostTable, record: dict[str, Any], location: str
) -> Union[PreferenceStatement, OrderingStatement]:
    if set(record) != {"left", "rel", "right"}:
        raise ProblemParseError(
            "invalid-statement", "statement needs exactly left, rel and right", location
        )
    relation = record["rel"]
    if relation not in _RELATIONS:
        raise ProblemParseError(
            "invalid-statement", f"unknown relation {relation!r}", location
        )
    strict = _RELATIONS[relation]
    left, right = record["left"], record["right"]

    if isinstance(left, str) and isinstance(right, str):
        for name in (left, right):
            if not table.has_alternative(name):
                raise ProblemParseError(
                    "unknown-name", f"unknown alternative {name}", location
                )
        return PreferenceStatement(left, right, strict)

    if isinstance(left, list) and isinstance(right, list):
        for name in [*left, *right]:
            if not isinstance(name, str) or not table.has_evaluation(name):
                raise ProblemParseError(
                    "unknown-name", f"unknown evaluation {name}", location
                )
        try:
            return OrderingStatement(frozenset(left), frozenset(right), strict)
        except HclpError as error:
            raise ProblemParseError("invalid-statement", error.message, location) from None

    raise ProblemParseError(
        "invalid-statement",
        "sides must both be alternative names or both be evaluation lists",
        location,
    )


def parse_problem(data: Union[bytes, str]) -> Problem:
    """Parse and validate a problem file.

    Args:
        data: The JSON text of the problem file.

    Returns:
        A Problem object.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as error:
            raise ProblemParseError(
                "invalid-encoding", "problem file is not UTF-8", f"byte {error.start}"
            ) from None
    else:
        text = data
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as error:
        raise ProblemParseError(
            "invalid-json", error.msg, f"line {error.lineno}"
        ) from None
    if not isinstance(raw, dict):
        raise ProblemParseError("schema", "problem file must be a JSON object")
    try:
        problem_file = ProblemFile.schema().load(raw)
    except ValidationError as error:
        messages = error.normalized_messages()
        first = next(iter(messages), None) if isinstance(messages, dict) else None
        raise ProblemParseError("schema", str(messages), first) from None
    problem = problem_file.to_problem()
    logger.info(
        "Parsed problem with %d alternatives, %d evaluations, %d statements",
        len(problem.table.alternatives),
        len(problem.table.evaluations),
        len(problem.statements) + len(problem.orderings),
    )
    return problem


def load_problem(path: Union[str, Path]) -> Problem:
    """Read and parse a problem file from disk."""
    return parse_problem(Path(path).read_bytes())


def serialize_problem(problem: Problem) -> str:
    """Canonical JSON text for a problem."""
    return ProblemFile.from_problem(problem).dumps()
