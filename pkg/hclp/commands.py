"""Subcommand orchestration and the result envelope printed by the CLI."""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import pandas as pd
from dataclasses_json import DataClassJsonMixin, dataclass_json

from hclp.engine import (
    DeductionBackend,
    LexEngine,
    TieOrder,
    equiv_reduce,
    equivalence_classes,
    find_model,
    repair,
    run_cons_check,
    strong_deduce,
    strong_is_consistent,
)
from hclp.errors import HclpError, PreconditionError
from hclp.models import (
    Combiner,
    CostTable,
    HclpModel,
    LevelSizeAtMost,
    PreferenceStatement,
    Query,
)
from hclp.oracle import (
    BruteForceOracle,
    ModelClassSpec,
    OracleSettings,
    count_models,
    enumerate_models,
)
from hclp.ordering import is_topological_order, ord_cons_check, statement_to_ordering
from hclp.problem import Problem, ProblemFile
from hclp.reduction import (
    Cnf3,
    brute_sat,
    build_instance,
    model_from_assignment,
    verify_reduction,
)
from hclp.semantics import violated_statements

logger = logging.getLogger(__name__)

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_ERROR = 2


@dataclass_json
@dataclass
class ErrorDetail(DataClassJsonMixin):
    """The error part of a failed command's envelope."""

    code: str
    message: str
    location: Optional[str] = None


@dataclass_json
@dataclass
class ResultEnvelope(DataClassJsonMixin):
    """What a command prints on standard output.

    Attributes:
        command: The subcommand name.
        arguments: The options the command ran with.
        verdict: A boolean or a structured answer.
        witness: A model, inconsistency base or other evidence, if any.
        timing: Wall time of the command in seconds.
        error: Set only when the command failed.
    """

    command: str
    arguments: dict[str, Any] = field(default_factory=dict)
    verdict: Any = None
    witness: Any = None
    timing: Optional[float] = None
    error: Optional[ErrorDetail] = None

    @classmethod
    def failure(
        cls, command: str, error: HclpError, arguments: Optional[dict[str, Any]] = None
    ) -> "ResultEnvelope":
        return cls(
            command=command,
            arguments=arguments or {},
            error=ErrorDetail(error.code, error.message, error.location),
        )

    def canonical(self, include_timing: bool = True) -> dict[str, Any]:
        """The envelope as a dict; error envelopes carry only command and error."""
        data = self.to_dict()
        if self.error is not None:
            return {"command": data["command"], "error": data["error"]}
        del data["error"]
        if not include_timing:
            del data["timing"]
        return data

    def dumps(self, include_timing: bool = True) -> str:
        return json.dumps(self.canonical(include_timing), sort_keys=True, indent=2)


@dataclass
class Outcome:
    """A command's answer before it is wrapped in an envelope."""

    verdict: Any
    witness: Any = None
    exit_code: int = EXIT_TRUE


@dataclass
class CommandResult:
    """An envelope together with the process exit code."""

    envelope: ResultEnvelope
    exit_code: int

    def summary(self) -> pd.DataFrame:
        """A two-column table for the human-readable standard error echo."""
        envelope = self.envelope
        rows: list[tuple[str, str]] = [("command", envelope.command)]
        if envelope.error is not None:
            rows += [
                ("error", envelope.error.code),
                ("message", envelope.error.message),
                ("location", envelope.error.location or "-"),
            ]
        else:
            rows.append(("verdict", _compact(envelope.verdict)))
            if envelope.witness is not None:
                rows.append(("witness", _compact(envelope.witness)))
            if envelope.timing is not None:
                rows.append(("timing", f"{envelope.timing:.6f}s"))
        rows.append(("exit code", str(self.exit_code)))
        return pd.DataFrame(rows, columns=["field", "value"])


def _compact(value: Any) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def _verdict_exit(verdict: bool) -> int:
    return EXIT_TRUE if verdict else EXIT_FALSE


@dataclass(frozen=True)
class _Workload:
    """The table and statements a sequence-model command runs on.

    With an equivalence partition the table is the reduced one, and
    ``classes`` maps each reduced evaluation back to its members.
    """

    table: CostTable
    gamma: tuple[PreferenceStatement, ...]
    classes: Optional[dict[str, tuple[str, ...]]] = None

    def levels(self, model: HclpModel) -> list[list[str]]:
        if self.classes is None:
            return model.to_lists(self.table)
        return [list(self.classes[name]) for name in model.to_sequence()]


@dataclass
class CommandRunner:
    """Run subcommands against a deduction backend.

    Attributes:
        tie: Evaluation order for Cons-check tie breaking.
        settings: Size caps for the exhaustive oracle.
        engine: Backend for consistency and deduction over sequence models;
            a LexEngine using ``tie`` when omitted.
    """

    tie: Optional[TieOrder] = None
    settings: OracleSettings = field(default_factory=OracleSettings.from_env)
    engine: Optional[DeductionBackend] = None

    def __post_init__(self) -> None:
        if self.engine is None:
            self.engine = LexEngine(tie=self.tie)

    @property
    def backend(self) -> DeductionBackend:
        assert self.engine is not None
        return self.engine

    def run(
        self,
        command: str,
        action: Callable[[], Outcome],
        arguments: Optional[dict[str, Any]] = None,
    ) -> CommandResult:
        """Time an action and wrap its outcome, or its error, in an envelope."""
        arguments = arguments or {}
        logger.info("Running command %s", command)
        start = time.perf_counter()
        try:
            outcome = action()
        except HclpError as error:
            logger.warning("Command %s failed: [%s] %s", command, error.code, error)
            return CommandResult(
                ResultEnvelope.failure(command, error, arguments), EXIT_ERROR
            )
        elapsed = round(time.perf_counter() - start, 6)
        envelope = ResultEnvelope(
            command=command,
            arguments=arguments,
            verdict=outcome.verdict,
            witness=outcome.witness,
            timing=elapsed,
        )
        return CommandResult(envelope, outcome.exit_code)

    def _sequence_workload(
        self, problem: Problem, allow_equivalence: bool = False
    ) -> _Workload:
        t = problem.max_level_size
        if t is not None and t > 1:
            raise PreconditionError(
                f"max_level_size {t} has no polynomial procedure; use brute-deduce"
            )
        table, gamma = problem.merged()
        if problem.equivalence is None:
            return _Workload(table, tuple(gamma))
        if not allow_equivalence:
            raise PreconditionError(
                "This command works on sequence models; drop the equivalence option"
            )
        if self.tie is not None:
            raise PreconditionError("--tie cannot be combined with an equivalence partition")
        reduced = equiv_reduce(table, problem.equivalence)
        classes = equivalence_classes(table, problem.equivalence)
        return _Workload(reduced, tuple(gamma), classes)

    def check(self, problem: Problem) -> Outcome:
        """Consistency, with the Cons-check model or the inconsistency base."""
        work = self._sequence_workload(problem, allow_equivalence=True)
        model = self.backend.find_model(work.table, work.gamma)
        if model is not None:
            return Outcome(True, {"model": work.levels(model)}, EXIT_TRUE)
        base = run_cons_check(work.table, work.gamma).base
        return Outcome(False, {"base": base.to_dict(work.table)}, EXIT_FALSE)

    def deduce(self, problem: Problem, query: PreferenceStatement) -> Outcome:
        """Entailment of a query, with a countermodel when it fails."""
        problem.table.check_statement(query)
        work = self._sequence_workload(problem, allow_equivalence=True)
        counter = self.backend.countermodel(work.table, work.gamma, query)
        if counter is None:
            return Outcome(True, None, EXIT_TRUE)
        witness = {
            "countermodel": work.levels(counter),
            "violated": [
                s.to_string()
                for s in violated_statements(work.table, counter, [query])
            ],
        }
        return Outcome(False, witness, EXIT_FALSE)

    def mib(self, problem: Problem) -> Outcome:
        work = self._sequence_workload(problem)
        result = run_cons_check(work.table, work.gamma, self.tie)
        return Outcome(
            result.consistent,
            {"base": result.base.to_dict(work.table)},
            _verdict_exit(result.consistent),
        )

    def repair(self, problem: Problem) -> Outcome:
        """The repaired statement set and a model satisfying it."""
        work = self._sequence_workload(problem)
        repaired = repair(work.table, work.gamma)
        model = find_model(work.table, repaired, self.tie)
        assert model is not None
        return Outcome(
            [s.to_string() for s in repaired],
            {"model": model.to_lists(work.table)},
            EXIT_TRUE,
        )

    def strong_check(self, problem: Problem) -> Outcome:
        work = self._sequence_workload(problem)
        if strong_is_consistent(work.table, work.gamma):
            model = find_model(work.table, work.gamma, self.tie)
            assert model is not None
            return Outcome(True, {"model": model.to_lists(work.table)}, EXIT_TRUE)
        base = run_cons_check(work.table, work.gamma, self.tie).base
        return Outcome(False, {"base": base.to_dict(work.table)}, EXIT_FALSE)

    def strong_deduce(self, problem: Problem, query: Query) -> Outcome:
        problem.table.alternative_index(query.left)
        problem.table.alternative_index(query.right)
        work = self._sequence_workload(problem)
        verdict = strong_deduce(work.table, work.gamma, query)
        return Outcome(verdict, None, _verdict_exit(verdict))

    def _model_class(
        self,
        problem: Problem,
        max_level_size: Optional[int],
        full_sigma: bool,
        equivalence: bool,
    ) -> ModelClassSpec:
        if equivalence:
            if problem.equivalence is None:
                raise PreconditionError("--equivalence needs an equivalence partition in the problem file")
            if max_level_size is not None or full_sigma:
                raise PreconditionError(
                    "--equivalence cannot be combined with --max-level-size or --full-sigma"
                )
            return ModelClassSpec.equivalence(problem.equivalence)
        t = max_level_size if max_level_size is not None else problem.max_level_size
        if t is None:
            return ModelClassSpec(require_full_sigma=full_sigma)
        if t < 1:
            raise PreconditionError(f"--max-level-size must be at least 1, got {t}")
        return ModelClassSpec.level_size(t, full_sigma)

    def brute_deduce(
        self,
        problem: Problem,
        query: PreferenceStatement,
        max_level_size: Optional[int] = None,
        full_sigma: bool = False,
        equivalence: bool = False,
    ) -> Outcome:
        """Entailment decided by the exhaustive oracle over any model class."""
        problem.table.check_statement(query)
        spec = self._model_class(problem, max_level_size, full_sigma, equivalence)
        oracle = BruteForceOracle(spec, self.settings)
        table, gamma = problem.merged()
        counter = oracle.countermodel(table, gamma, query)
        if counter is None:
            return Outcome(True, None, EXIT_TRUE)
        return Outcome(False, {"countermodel": counter.to_lists(table)}, EXIT_FALSE)

    def enumerate(
        self,
        problem: Problem,
        max_level_size: Optional[int] = None,
        full_sigma: bool = False,
        equivalence: bool = False,
        count_only: bool = False,
    ) -> Outcome:
        """Enumerate the model class, or just count it."""
        spec = self._model_class(problem, max_level_size, full_sigma, equivalence)
        table = problem.table
        models = enumerate_models(table, spec, self.settings)
        verdict: dict[str, Any] = {}
        witness = None
        if count_only:
            verdict["count"] = sum(1 for _ in models)
        else:
            witness = [model.to_lists(table) for model in models]
            verdict["count"] = len(witness)
        if not equivalence:
            t = (
                spec.constraint.t
                if isinstance(spec.constraint, LevelSizeAtMost)
                else None
            )
            verdict["expected"] = count_models(
                len(table.evaluations), t, spec.require_full_sigma
            )
        return Outcome(verdict, witness, EXIT_TRUE)

    def translate(self, problem: Problem, to_ordering: bool) -> Outcome:
        """Convert between preference statements and ordering statements.

        ``to_ordering`` turns every preference statement into ``Supp < Opp``
        and reports the Cons-check sequence of the result; otherwise the
        ordering statements are embedded and the merged problem returned.
        """
        table = problem.table
        if not to_ordering:
            merged_table, gamma = problem.merged()
            merged = ProblemFile.from_parts(
                merged_table,
                gamma,
                equivalence=problem.equivalence,
                max_level_size=problem.max_level_size,
            )
            return Outcome(merged.to_dict(), None, EXIT_TRUE)

        orderings = [statement_to_ordering(table, s) for s in problem.statements]
        orderings += problem.orderings
        sequence = ord_cons_check(table.evaluations, orderings, self.tie)
        witness: dict[str, Any] = {"sequence": list(sequence)}
        singleton = [o for o in orderings if len(o.left) == 1 and len(o.right) == 1]
        if len(singleton) == len(orderings):
            edges = [(next(iter(o.left)), next(iter(o.right))) for o in orderings]
            witness["topological"] = is_topological_order(sequence, edges)
        verdict = [
            {
                "left": table.order_evaluations(o.left),
                "rel": o.relation,
                "right": table.order_evaluations(o.right),
            }
            for o in orderings
        ]
        return Outcome(verdict, witness, EXIT_TRUE)

    def reduce_3sat(
        self,
        cnf: Cnf3,
        t: int,
        combiner: Combiner = Combiner.SUM,
        emit: Optional[Path] = None,
    ) -> Outcome:
        """Build the entailment instance for a formula, optionally writing it."""
        instance = build_instance(cnf, t, combiner)
        problem_file = instance.to_problem()
        verdict = {
            "alternatives": len(instance.table.alternatives),
            "evaluations": len(instance.table.evaluations),
            "statements": len(instance.gamma),
            "query": instance.query.to_string(),
            "t": t,
        }
        if emit is not None:
            emit.write_text(problem_file.dumps())
            logger.info("Wrote reduction instance to %s", emit)
            return Outcome(verdict, {"emitted": str(emit)}, EXIT_TRUE)
        return Outcome(verdict, {"problem": problem_file.to_dict()}, EXIT_TRUE)

    def verify_reduction(
        self, cnf: Cnf3, t: int, combiner: Combiner = Combiner.SUM
    ) -> Outcome:
        """Compare satisfiability with non-entailment on the built instance."""
        report = verify_reduction(cnf, t, self.settings, combiner)
        witness = None
        assignment = brute_sat(cnf)
        if assignment is not None:
            instance = build_instance(cnf, t, combiner)
            model = model_from_assignment(instance, assignment)
            witness = {
                "assignment": {str(i): value for i, value in assignment.items()},
                "countermodel": model.to_lists(instance.table),
            }
        return Outcome(report.to_dict(), witness, _verdict_exit(report.agree))

