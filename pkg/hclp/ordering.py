"""Disjunctive ordering statements over evaluations.

``C1 < C2`` holds in a sequence when some evaluation of ``C1`` appears
before every evaluation of ``C2``. On sequence models these statements
express exactly what preference statements express, and Cons-check over
them generalizes topological sorting (singleton sides give the classical
case).
"""

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from hclp.engine import TieOrder, classify, run_cons_check
from hclp.errors import InvalidModelError, NameResolutionError, NamingError
from hclp.models import (
    Combiner,
    CostTable,
    OrderingStatement,
    PreferenceStatement,
)


def ord_satisfies(
    seq: Sequence[str],
    stmt: OrderingStatement,
    universe: Optional[Iterable[str]] = None,
) -> bool:
    """Whether a sequence of evaluations satisfies an ordering statement.

    Args:
        seq: Distinct evaluations, most important first.
        stmt: The ordering statement.
        universe: The known evaluations; when given, every name in ``seq``
            and ``stmt`` must belong to it.

    Returns:
        True when the earliest evaluation of ``left | right`` in the
        sequence belongs to ``left``; for non-strict statements also when
        neither side appears.
    """
    if len(set(seq)) != len(seq):
        raise InvalidModelError(f"Sequence repeats an evaluation: {list(seq)}")
    if universe is not None:
        known = set(universe)
        unknown = (set(seq) | stmt.left | stmt.right) - known
        if unknown:
            raise NameResolutionError(f"Unknown evaluation: {sorted(unknown)[0]}")
    for name in seq:
        if name in stmt.left:
            return True
        if name in stmt.right:
            return False
    return not stmt.strict


def statement_to_ordering(
    table: CostTable, stmt: PreferenceStatement
) -> OrderingStatement:
    """The ordering ``Supp < Opp`` equivalent to a preference statement."""
    classification = classify(table, stmt)
    return OrderingStatement(classification.supp, classification.opp, stmt.strict)


@dataclass
class FreshNames:
    """Hands out ``lhs#ord{n}``/``rhs#ord{n}`` name pairs from a counter.

    Attributes:
        taken: Names already in use; generated names must avoid them.
    """

    taken: set[str] = field(default_factory=set)
    _counter: Iterator[int] = field(default_factory=itertools.count, repr=False)

    def next_pair(self) -> tuple[str, str]:
        n = next(self._counter)
        pair = (f"lhs#ord{n}", f"rhs#ord{n}")
        for name in pair:
            if name in self.taken:
                raise NamingError(f"Generated alternative name already in use: {name}")
        self.taken.update(pair)
        return pair


@dataclass(frozen=True)
class OrderingEmbedding:
    """Two synthetic alternatives whose comparison mirrors an ordering.

    Attributes:
        statement: ``lhs < rhs`` (or ``<=``) matching the ordering.
        columns: Cost column per synthetic alternative, one 0/1 value per
            evaluation of the universe, in universe order.
    """

    statement: PreferenceStatement
    columns: dict[str, tuple[int, ...]]


def ordering_to_statement(
    stmt: OrderingStatement,
    base_names: Sequence[str],
    names: Optional[FreshNames] = None,
) -> OrderingEmbedding:
    """Embed an ordering statement as a preference over fresh alternatives.

    The left alternative costs 1 on the right-side evaluations, the right
    alternative costs 1 on the left-side evaluations, and everything else
    is 0; so the supporters are exactly ``stmt.left`` and the opposers
    exactly ``stmt.right``.

    Args:
        stmt: The ordering statement.
        base_names: The evaluation universe, in order.
        names: Fresh-name source; a new one is used when omitted.

    Returns:
        An OrderingEmbedding.
    """
    universe = set(base_names)
    unknown = (stmt.left | stmt.right) - universe
    if unknown:
        raise NameResolutionError(f"Unknown evaluation: {sorted(unknown)[0]}")
    names = names or FreshNames()
    lhs, rhs = names.next_pair()
    columns = {
        lhs: tuple(int(c in stmt.right) for c in base_names),
        rhs: tuple(int(c in stmt.left) for c in base_names),
    }
    return OrderingEmbedding(PreferenceStatement(lhs, rhs, stmt.strict), columns)


def merge_orderings(
    table: CostTable,
    gamma: Iterable[PreferenceStatement],
    orderings: Iterable[OrderingStatement],
) -> tuple[CostTable, list[PreferenceStatement]]:
    """Add ordering statements to a preference problem.

    Every ordering becomes a pair of synthetic alternatives appended to the
    table and a statement appended to gamma.

    Returns:
        The extended table and statements.
    """
    names = FreshNames(taken=set(table.alternatives))
    statements = list(gamma)
    columns: dict[str, tuple[int, ...]] = {}
    for ordering in orderings:
        embedding = ordering_to_statement(ordering, table.evaluations, names)
        statements.append(embedding.statement)
        columns.update(embedding.columns)
    if not columns:
        return table, statements
    return table.with_alternatives(columns), statements


def _synthetic_table(
    universe: Sequence[str], stmts: Iterable[OrderingStatement]
) -> tuple[CostTable, list[PreferenceStatement]]:
    empty = CostTable((), tuple(universe), tuple(() for _ in universe), Combiner.SUM)
    return merge_orderings(empty, [], stmts)


def ord_cons_check(
    universe: Sequence[str],
    stmts: Iterable[OrderingStatement],
    tie: Optional[TieOrder] = None,
) -> tuple[str, ...]:
    """Cons-check over ordering statements.

    Args:
        universe: The evaluation names.
        stmts: The ordering statements.
        tie: Tie-breaking order; defaults to universe order.

    Returns:
        The emitted sequence. With singleton sides forming a DAG this is a
        topological order of the DAG.
    """
    table, gamma = _synthetic_table(universe, stmts)
    return run_cons_check(table, gamma, tie).sequence


def ord_is_consistent(
    universe: Sequence[str], stmts: Iterable[OrderingStatement]
) -> bool:
    """Whether some sequence satisfies every ordering statement."""
    table, gamma = _synthetic_table(universe, stmts)
    return run_cons_check(table, gamma).consistent


def is_topological_order(
    sequence: Sequence[str], edges: Iterable[tuple[str, str]]
) -> bool:
    """Whether every edge ``(u, v)`` has ``u`` before ``v`` in the sequence.

    Every endpoint must appear in the sequence.
    """
    position = {name: index for index, name in enumerate(sequence)}
    for u, v in edges:
        if u not in position or v not in position or position[u] >= position[v]:
            return False
    return True
