"""Reduction from 3-SAT to non-entailment of ``alpha <= beta``.

A 3-CNF formula over r variables is satisfiable exactly when the generated
statements fail to entail ``alpha <= beta`` over models whose levels hold
at most t evaluations (t >= 2). Satisfying assignments and countermodels
convert into each other.
"""

import io
import logging
from dataclasses import dataclass
from itertools import product
from typing import TYPE_CHECKING, Mapping, Optional, Union

from dataclasses_json import DataClassJsonMixin, dataclass_json
from pysat.formula import CNF

from hclp.errors import (
    CnfParseError,
    IncompleteAssignmentError,
    InvalidModelError,
    NotACountermodelError,
    ReductionParameterError,
)
from hclp.models import (
    Combiner,
    CostTable,
    HclpModel,
    LevelSizeAtMost,
    PreferenceStatement,
)
from hclp.oracle import ModelClassSpec, OracleSettings, brute_deduce
from hclp.semantics import satisfies, satisfies_all, validate_model

if TYPE_CHECKING:
    from hclp.problem import ProblemFile

logger = logging.getLogger(__name__)

Clause = tuple[int, int, int]
Assignment = dict[int, bool]

C_STAR = "cstar"
ALPHA = "alpha"
BETA = "beta"


def positive(i: int) -> str:
    """Evaluation standing for the literal ``p_i``."""
    return f"q+{i}"


def negative(i: int) -> str:
    """Evaluation standing for the literal ``not p_i``."""
    return f"q-{i}"


def auxiliaries(i: int, t: int) -> list[str]:
    """The t - 1 auxiliary evaluations grouped with ``p_i``'s literal."""
    return [f"a{i}^{k}" for k in range(1, t)]


def literal_evaluation(literal: int) -> str:
    return positive(literal) if literal > 0 else negative(-literal)


@dataclass(frozen=True)
class Cnf3:
    """A 3-CNF formula.

    Attributes:
        num_vars: Number of variables, numbered 1..num_vars.
        clauses: Clauses of exactly three literals (repeats allowed);
            literal ``-i`` is the negation of variable ``i``.
    """

    num_vars: int
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self) -> None:
        if self.num_vars < 0:
            raise CnfParseError(f"Negative variable count: {self.num_vars}")
        clauses = tuple(tuple(clause) for clause in self.clauses)
        for position, clause in enumerate(clauses, start=1):
            if len(clause) != 3:
                raise CnfParseError(
                    f"Clause {position} has {len(clause)} literals, expected 3"
                )
            for literal in clause:
                if literal == 0 or abs(literal) > self.num_vars:
                    raise CnfParseError(
                        f"Clause {position} references unknown variable {literal}"
                    )
        object.__setattr__(self, "clauses", clauses)

    @classmethod
    def from_dimacs(cls, data: Union[bytes, str]) -> "Cnf3":
        """Parse DIMACS CNF text.

        Clauses end at a ``0`` and may span several lines. A line starting
        with ``%`` ends the clause section. Clauses with one or two literals
        are padded by repeating their last literal.

        Args:
            data: The DIMACS text (``p cnf`` header, zero-terminated clauses).

        Returns:
            A Cnf3 object.
        """
        if isinstance(data, bytes):
            try:
                data = data.decode("utf-8")
            except UnicodeDecodeError as error:
                raise CnfParseError(
                    "DIMACS file is not UTF-8", f"byte {error.start}"
                ) from None
        header: Optional[tuple[int, int]] = None
        clauses: list[list[int]] = []
        pending: list[int] = []
        for number, line in enumerate(data.splitlines(), start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("c"):
                continue
            if tokens[0].startswith("%"):
                break
            if tokens[0] == "p":
                if header is not None or len(tokens) != 4 or tokens[1] != "cnf":
                    raise CnfParseError(f"Malformed header on line {number}", f"line {number}")
                try:
                    header = (int(tokens[2]), int(tokens[3]))
                except ValueError:
                    raise CnfParseError(
                        f"Malformed header on line {number}", f"line {number}"
                    ) from None
                continue
            if header is None:
                raise CnfParseError("Clause before the 'p cnf' header", f"line {number}")
            for token in tokens:
                try:
                    literal = int(token)
                except ValueError:
                    raise CnfParseError(
                        f"Malformed literal {token!r} on line {number}", f"line {number}"
                    ) from None
                if literal == 0:
                    clauses.append(pending)
                    pending = []
                else:
                    pending.append(literal)
        if header is None:
            raise CnfParseError("Missing 'p cnf' header")
        if pending:
            raise CnfParseError("Last clause is not zero-terminated")

        num_vars, num_clauses = header
        if len(clauses) != num_clauses:
            raise CnfParseError(
                f"Header declares {num_clauses} clauses, found {len(clauses)}"
            )
        padded = []
        for position, clause in enumerate(clauses, start=1):
            if not clause:
                raise CnfParseError(f"Clause {position} is empty")
            if len(clause) > 3:
                raise CnfParseError(
                    f"Clause {position} has {len(clause)} literals, expected at most 3"
                )
            padded.append(tuple(clause + [clause[-1]] * (3 - len(clause))))
        logger.info("Parsed DIMACS formula with %d variables, %d clauses", num_vars, num_clauses)
        return cls(num_vars, tuple(padded))

    def to_dimacs(self) -> str:
        """Serialize to DIMACS CNF text."""
        formula = CNF(from_clauses=[list(clause) for clause in self.clauses])
        formula.nv = self.num_vars
        buffer = io.StringIO()
        formula.to_fp(buffer)
        return buffer.getvalue()

    def is_satisfied_by(self, assignment: Mapping[int, bool]) -> bool:
        return all(
            any(assignment[abs(l)] == (l > 0) for l in clause) for clause in self.clauses
        )


def brute_sat(cnf: Cnf3) -> Optional[Assignment]:
    """A satisfying assignment found by truth table, or None."""
    for values in product((False, True), repeat=cnf.num_vars):
        assignment = {i: value for i, value in enumerate(values, start=1)}
        if cnf.is_satisfied_by(assignment):
            return assignment
    return None


@dataclass(frozen=True)
class ReductionInstance:
    """The entailment instance built from a 3-CNF formula.

    Attributes:
        cnf: The source formula.
        t: The level-size bound the instance targets.
        table: Alternatives, evaluations and 0/1 costs.
        gamma: All non-strict statements (variable gadgets, variable
            coverage and clause statements, in that order).
        query: ``alpha <= beta``.
        clause_evals: Per clause, the evaluations of its literals.
    """

    cnf: Cnf3
    t: int
    table: CostTable
    gamma: tuple[PreferenceStatement, ...]
    query: PreferenceStatement
    clause_evals: tuple[frozenset[str], ...]

    def to_problem(self) -> "ProblemFile":
        """The instance as a problem file with ``max_level_size = t``."""
        from hclp.problem import ProblemFile

        return ProblemFile.from_parts(self.table, self.gamma, max_level_size=self.t)


def build_instance(cnf: Cnf3, t: int, combiner: Combiner = Combiner.SUM) -> ReductionInstance:
    """Build the entailment instance for a formula.

    Args:
        cnf: The 3-CNF formula.
        t: Level-size bound, at least 2.
        combiner: The level combiner; both Sum and Max keep the reduction
            sound.

    Returns:
        A ReductionInstance.
    """
    if t < 2:
        raise ReductionParameterError(f"Level-size bound must be at least 2, got {t}")
    r, s = cnf.num_vars, len(cnf.clauses)
    logger.info("Building reduction for r=%d, s=%d, t=%d", r, s, t)

    evaluations = [C_STAR]
    for i in range(1, r + 1):
        evaluations += [positive(i), negative(i)]
    for i in range(1, r + 1):
        evaluations += auxiliaries(i, t)

    alternatives = [ALPHA, BETA]
    for i in range(1, r + 1):
        alternatives += [f"alpha{i}", f"beta{i}", f"delta{i}"]
        alternatives += [f"gamma{i}^{k}" for k in range(1, t)]
    for j in range(1, s + 1):
        alternatives += [f"theta{j}", f"tau{j}"]

    costs: dict[str, dict[str, int]] = {
        e: {a: 0 for a in alternatives} for e in evaluations
    }
    costs[C_STAR][ALPHA] = 1

    gamma_one: list[PreferenceStatement] = []
    gamma_two: list[PreferenceStatement] = []
    for i in range(1, r + 1):
        delta = f"delta{i}"
        costs[positive(i)][delta] = costs[negative(i)][delta] = 1
        for k, aux in enumerate(auxiliaries(i, t), start=1):
            gamma_ik = f"gamma{i}^{k}"
            costs[aux][gamma_ik] = 1
            gamma_one += [
                PreferenceStatement(delta, gamma_ik),
                PreferenceStatement(gamma_ik, delta),
            ]
        costs[C_STAR][f"alpha{i}"] = 1
        costs[positive(i)][f"beta{i}"] = costs[negative(i)][f"beta{i}"] = 1
        gamma_two.append(PreferenceStatement(f"alpha{i}", f"beta{i}"))

    gamma_three: list[PreferenceStatement] = []
    clause_evals = []
    for j, clause in enumerate(cnf.clauses, start=1):
        members = frozenset(literal_evaluation(literal) for literal in clause)
        clause_evals.append(members)
        costs[C_STAR][f"theta{j}"] = 1
        for name in members:
            costs[name][f"tau{j}"] = 1
        gamma_three.append(PreferenceStatement(f"theta{j}", f"tau{j}"))

    table = CostTable.from_mapping(alternatives, costs, combiner)
    return ReductionInstance(
        cnf=cnf,
        t=t,
        table=table,
        gamma=tuple(gamma_one + gamma_two + gamma_three),
        query=PreferenceStatement(ALPHA, BETA),
        clause_evals=tuple(clause_evals),
    )


def model_from_assignment(
    instance: ReductionInstance, assignment: Mapping[int, bool]
) -> HclpModel:
    """The countermodel built from a truth assignment.

    One level per variable holding its auxiliaries and the evaluation of
    its true literal, then a final level ``{cstar}``.
    """
    missing = [i for i in range(1, instance.cnf.num_vars + 1) if i not in assignment]
    if missing:
        raise IncompleteAssignmentError(f"Assignment misses variable {missing[0]}")
    levels = []
    for i in range(1, instance.cnf.num_vars + 1):
        literal = positive(i) if assignment[i] else negative(i)
        levels.append(frozenset([*auxiliaries(i, instance.t), literal]))
    levels.append(frozenset([C_STAR]))
    return HclpModel(tuple(levels))


def assignment_from_model(instance: ReductionInstance, model: HclpModel) -> Assignment:
    """Read a satisfying assignment off a countermodel.

    Variable ``i`` is true exactly when ``q+i`` is used by the model.
    """
    violation = validate_model(instance.table, model, LevelSizeAtMost(instance.t))
    if violation is not None:
        raise InvalidModelError(violation.detail)
    if not satisfies_all(instance.table, model, instance.gamma):
        raise NotACountermodelError("Model does not satisfy the reduction statements")
    if not satisfies(instance.table, model, instance.query.negate()):
        raise NotACountermodelError("Model does not satisfy beta < alpha")
    sigma = model.sigma
    return {i: positive(i) in sigma for i in range(1, instance.cnf.num_vars + 1)}


def gamma_one_case(instance: ReductionInstance, model: HclpModel, i: int) -> Optional[int]:
    """Which shape a model takes on variable ``i``'s gadget.

    Returns:
        1 when it uses none of the gadget's evaluations, 2 when the
        auxiliaries and ``q+i`` form one level without ``q-i``, 3 for the
        symmetric case with ``q-i``, and None otherwise.
    """
    gadget_aux = frozenset(auxiliaries(i, instance.t))
    plus, minus = positive(i), negative(i)
    sigma = model.sigma
    if not sigma & (gadget_aux | {plus, minus}):
        return 1
    if gadget_aux | {plus} in model.levels and minus not in sigma:
        return 2
    if gadget_aux | {minus} in model.levels and plus not in sigma:
        return 3
    return None


@dataclass_json
@dataclass
class ReductionReport(DataClassJsonMixin):
    """Both sides of the reduction's biconditional for one formula.

    Attributes:
        sat: Whether the formula is satisfiable (truth table).
        entailed: Whether the statements entail ``alpha <= beta`` (oracle).
        agree: Whether ``sat`` equals ``not entailed``.
    """

    sat: bool
    entailed: bool
    agree: bool


def verify_reduction(
    cnf: Cnf3,
    t: int,
    settings: Optional[OracleSettings] = None,
    combiner: Combiner = Combiner.SUM,
) -> ReductionReport:
    """Decide both sides by brute force and compare them."""
    instance = build_instance(cnf, t, combiner)
    sat = brute_sat(cnf) is not None
    entailed = brute_deduce(
        instance.table,
        instance.gamma,
        instance.query,
        ModelClassSpec.level_size(t),
        settings,
    )
    report = ReductionReport(sat=sat, entailed=entailed, agree=sat == (not entailed))
    logger.info("Reduction check: %s", report)
    return report
