import pytest
from pysat.solvers import Solver

from hclp.errors import (
    CnfParseError,
    IncompleteAssignmentError,
    InvalidModelError,
    NotACountermodelError,
    ReductionParameterError,
)
from hclp.models import Combiner, HclpModel, LevelSizeAtMost
from hclp.oracle import ModelClassSpec, brute_deduce, enumerate_models
from hclp.problem import parse_problem
from hclp.reduction import (
    C_STAR,
    Cnf3,
    assignment_from_model,
    brute_sat,
    build_instance,
    gamma_one_case,
    model_from_assignment,
    verify_reduction,
)
from hclp.semantics import satisfies, satisfies_all, validate_model
from tests.generators import all_formulas

SINGLE = Cnf3(1, ((1, 1, 1),))
CONTRADICTION = Cnf3(1, ((1, 1, 1), (-1, -1, -1)))
EMPTY = Cnf3(0)


def level(*names):
    return frozenset(names)


def gadget_statements(instance, i):
    delta = f"delta{i}"
    return [stmt for stmt in instance.gamma if delta in (stmt.left, stmt.right)]


def countermodels(instance, settings):
    required = [*instance.gamma, instance.query.negate()]
    spec = ModelClassSpec.level_size(instance.t)
    for model in enumerate_models(instance.table, spec, settings):
        if satisfies_all(instance.table, model, required):
            yield model


class TestCnf3:
    def test_from_dimacs(self, data_path):
        assert Cnf3.from_dimacs(data_path("single_positive.cnf").read_text()) == SINGLE

    def test_short_clauses_are_padded(self, data_path):
        cnf = Cnf3.from_dimacs(data_path("contradiction.cnf").read_text())
        assert cnf == CONTRADICTION

    def test_mixed_literals(self, data_path):
        cnf = Cnf3.from_dimacs(data_path("two_vars.cnf").read_text())
        assert cnf == Cnf3(2, ((1, -2, 2), (-1, -2, -2)))

    def test_clauses_spanning_lines(self):
        text = "c split clauses\np cnf 2 2\n1 -2\n2 0 -1\n-2 -2 0\n"
        assert Cnf3.from_dimacs(text) == Cnf3(2, ((1, -2, 2), (-1, -2, -2)))

    def test_satlib_trailer(self):
        text = "p cnf 1 1\n1 1 1 0\n%\n0\n\n"
        assert Cnf3.from_dimacs(text) == SINGLE

    def test_bytes(self, data_path):
        assert Cnf3.from_dimacs(data_path("single_positive.cnf").read_bytes()) == SINGLE
        with pytest.raises(CnfParseError) as info:
            Cnf3.from_dimacs(b"p cnf 1 1\n\xff 0\n")
        assert info.value.location == "byte 10"

    @pytest.mark.parametrize(
        "text",
        [
            "1 2 3 0\n",
            "p cnf 1 2\n1 0\n",
            "p cnf 4 1\n1 2 3 4 0\n",
            "p cnf 2 1\n1 2\n",
            "p cnf 1 1\n2 0\n",
            "p dnf 1 1\n1 0\n",
            "p cnf 1 1\n1 x 0\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(CnfParseError):
            Cnf3.from_dimacs(text)

    def test_to_dimacs(self):
        text = Cnf3(2, ((1, -2, 2),)).to_dimacs()
        assert "p cnf 2 1" in text
        assert Cnf3.from_dimacs(text) == Cnf3(2, ((1, -2, 2),))

    def test_brute_sat_agrees_with_solver(self):
        for cnf in all_formulas(2, 2):
            with Solver(bootstrap_with=[list(c) for c in cnf.clauses]) as solver:
                expected = solver.solve()
            assignment = brute_sat(cnf)
            assert (assignment is not None) == expected
            if assignment is not None:
                assert cnf.is_satisfied_by(assignment)


class TestBuildInstance:
    def test_sizes(self):
        instance = build_instance(SINGLE, 2)
        assert set(instance.table.evaluations) == {C_STAR, "q+1", "q-1", "a1^1"}
        assert len(instance.table.alternatives) == 8
        assert len(build_instance(Cnf3(2, ((1, 2, -1),)), 3).table.evaluations) == 9

    def test_empty_formula(self, oracle_settings):
        instance = build_instance(EMPTY, 2)
        assert instance.table.evaluations == (C_STAR,)
        assert instance.table.alternatives == ("alpha", "beta")
        assert instance.gamma == ()
        assert not brute_deduce(
            instance.table,
            instance.gamma,
            instance.query,
            ModelClassSpec.level_size(2),
            oracle_settings,
        )

    def test_statements_are_nonstrict(self):
        instance = build_instance(CONTRADICTION, 3)
        assert not any(stmt.strict for stmt in instance.gamma)
        assert instance.query.to_string() == "alpha <= beta"
        assert instance.clause_evals == (level("q+1"), level("q-1"))

    def test_level_bound(self):
        with pytest.raises(ReductionParameterError):
            build_instance(SINGLE, 1)

    def test_to_problem(self):
        instance = build_instance(CONTRADICTION, 2)
        problem_file = instance.to_problem()
        assert problem_file.max_level_size == 2
        problem = parse_problem(problem_file.dumps())
        assert problem.table == instance.table
        assert problem.statements == instance.gamma


class TestWitnesses:
    def test_model_from_assignment(self):
        instance = build_instance(SINGLE, 2)
        assert model_from_assignment(instance, {1: True}) == HclpModel(
            (level("a1^1", "q+1"), level(C_STAR))
        )
        assert model_from_assignment(instance, {1: False}) == HclpModel(
            (level("a1^1", "q-1"), level(C_STAR))
        )
        assert model_from_assignment(build_instance(EMPTY, 2), {}) == HclpModel(
            (level(C_STAR),)
        )

    def test_incomplete_assignment(self):
        with pytest.raises(IncompleteAssignmentError):
            model_from_assignment(build_instance(SINGLE, 2), {})

    @pytest.mark.parametrize("combiner", list(Combiner))
    def test_forward_witness_is_a_countermodel(self, combiner):
        instance = build_instance(Cnf3(2, ((1, -2, 2), (-1, -2, -2))), 3, combiner)
        model = model_from_assignment(instance, {1: True, 2: False})
        assert validate_model(instance.table, model, LevelSizeAtMost(3)) is None
        assert satisfies_all(instance.table, model, instance.gamma)
        assert satisfies(instance.table, model, instance.query.negate())

    def test_assignment_from_model(self):
        instance = build_instance(SINGLE, 2)
        model = HclpModel((level("a1^1", "q+1"), level(C_STAR)))
        assignment = assignment_from_model(instance, model)
        assert assignment == {1: True}
        assert SINGLE.is_satisfied_by(assignment)
        assert assignment_from_model(build_instance(EMPTY, 2), HclpModel((level(C_STAR),))) == {}

    def test_model_without_cstar_is_rejected(self):
        instance = build_instance(SINGLE, 2)
        with pytest.raises(NotACountermodelError):
            assignment_from_model(instance, HclpModel((level("a1^1", "q+1"),)))

    def test_oversized_level_is_rejected(self):
        instance = build_instance(SINGLE, 2)
        with pytest.raises(InvalidModelError):
            assignment_from_model(
                instance, HclpModel((level("a1^1", "q+1", "q-1"), level(C_STAR)))
            )

    def test_gamma_one_case(self):
        instance = build_instance(SINGLE, 2)
        assert gamma_one_case(instance, HclpModel((level(C_STAR),)), 1) == 1
        positive = model_from_assignment(instance, {1: True})
        negative = model_from_assignment(instance, {1: False})
        assert gamma_one_case(instance, positive, 1) == 2
        assert gamma_one_case(instance, negative, 1) == 3
        mixed = HclpModel((level("a1^1"), level("q+1"), level(C_STAR)))
        assert gamma_one_case(instance, mixed, 1) is None


class TestVerifyReduction:
    def test_satisfiable(self, oracle_settings):
        report = verify_reduction(SINGLE, 2, oracle_settings)
        assert (report.sat, report.entailed, report.agree) == (True, False, True)

    def test_unsatisfiable(self, oracle_settings):
        report = verify_reduction(CONTRADICTION, 2, oracle_settings)
        assert (report.sat, report.entailed, report.agree) == (False, True, True)

    def test_empty(self, oracle_settings):
        report = verify_reduction(EMPTY, 2, oracle_settings)
        assert report.to_dict() == {"sat": True, "entailed": False, "agree": True}

    def test_max_combiner(self, oracle_settings):
        report = verify_reduction(CONTRADICTION, 2, oracle_settings, Combiner.MAX)
        assert report.agree


class TestGadgetShapes:
    @pytest.mark.parametrize("combiner", list(Combiner))
    @pytest.mark.parametrize("t", [2, 3])
    def test_every_gadget_model_has_a_known_shape(self, t, combiner, oracle_settings):
        instance = build_instance(SINGLE, t, combiner)
        gadget = gadget_statements(instance, 1)
        assert len(gadget) == 2 * (t - 1)
        spec = ModelClassSpec.level_size(t)
        shapes = set()
        for model in enumerate_models(instance.table, spec, oracle_settings):
            if satisfies_all(instance.table, model, gadget):
                shape = gamma_one_case(instance, model, 1)
                assert shape is not None, model.to_string(instance.table)
                shapes.add(shape)
        assert shapes == {1, 2, 3}

    @pytest.mark.slow
    def test_two_variables(self, oracle_settings):
        instance = build_instance(Cnf3(2, ((1, -2, 2),)), 2)
        spec = ModelClassSpec.level_size(2)
        models = list(enumerate_models(instance.table, spec, oracle_settings))
        for i in (1, 2):
            gadget = gadget_statements(instance, i)
            for model in models:
                if satisfies_all(instance.table, model, gadget):
                    assert gamma_one_case(instance, model, i) is not None


class TestBackwardExtraction:
    @pytest.mark.parametrize("t", [2, 3])
    def test_every_countermodel_gives_an_assignment(self, t, oracle_settings):
        for cnf in all_formulas(1, 2):
            instance = build_instance(cnf, t)
            found = list(countermodels(instance, oracle_settings))
            assert bool(found) == (brute_sat(cnf) is not None), cnf.to_dimacs()
            for model in found:
                assert cnf.is_satisfied_by(assignment_from_model(instance, model))
