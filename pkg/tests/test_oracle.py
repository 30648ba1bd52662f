import pytest

from hclp.engine import mib, strong_deduce
from hclp.errors import ConfigurationError, PreconditionError, SizeGuardError
from hclp.models import (
    EquivalenceQuery,
    HclpModel,
    InconsistencyBase,
    parse_statement,
)
from hclp.oracle import (
    BruteForceOracle,
    ModelClassSpec,
    OracleSettings,
    brute_consistent,
    brute_countermodel,
    brute_deduce,
    brute_find_model,
    brute_mib,
    brute_strong_deduce,
    count_models,
    enumerate_models,
    inconsistency_bases,
)
from hclp.semantics import satisfies_all, validate_model
from tests.generators import all_statements, make_table, random_instances

S = parse_statement
T1 = ModelClassSpec.sequences()
T3 = ModelClassSpec.level_size(3)


def models_as_strings(table, spec, settings):
    return [model.to_string(table) for model in enumerate_models(table, spec, settings)]


class TestEnumerateModels:
    def test_two_evaluations_sequences(self, oracle_settings):
        table = make_table([[0], [1]])
        assert models_as_strings(table, T1, oracle_settings) == [
            "()",
            "({c1})",
            "({c2})",
            "({c1},{c2})",
            "({c2},{c1})",
        ]

    def test_two_evaluations_pairs(self, oracle_settings):
        table = make_table([[0], [1]])
        models = models_as_strings(table, ModelClassSpec.level_size(2), oracle_settings)
        assert len(models) == 6
        assert "({c1,c2})" in models

    def test_no_evaluations(self, oracle_settings):
        table = make_table([])
        assert list(enumerate_models(table, T1, oracle_settings)) == [HclpModel()]

    def test_full_sigma(self, oracle_settings):
        table = make_table([[0], [1], [2]])
        spec = ModelClassSpec.sequences(full_sigma=True)
        models = list(enumerate_models(table, spec, oracle_settings))
        assert len(models) == 6
        assert all(model.sigma == frozenset(table.evaluations) for model in models)

    @pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
    def test_counts_match_closed_form(self, n, oracle_settings):
        table = make_table([[0]] * n)
        for t in range(1, n + 1):
            for full_sigma in (False, True):
                spec = ModelClassSpec.level_size(t, full_sigma)
                models = list(enumerate_models(table, spec, oracle_settings))
                assert len(models) == count_models(n, t, full_sigma)
                assert len(set(models)) == len(models)
                assert all(validate_model(table, m, spec.constraint) is None for m in models)
        assert count_models(n) == sum(1 for _ in enumerate_models(table, None, oracle_settings))

    def test_equivalence_classes(self, oracle_settings):
        table = make_table([[0], [1], [2]])
        spec = ModelClassSpec.equivalence([["c1", "c2"], ["c3"]])
        assert models_as_strings(table, spec, oracle_settings) == [
            "()",
            "({c3})",
            "({c1,c2})",
            "({c1,c2},{c3})",
            "({c3},{c1,c2})",
        ]

    def test_equivalence_must_cover(self, oracle_settings):
        table = make_table([[0], [1], [2]])
        with pytest.raises(PreconditionError):
            enumerate_models(table, ModelClassSpec.equivalence([["c1"]]), oracle_settings)

    def test_size_guard(self):
        table = make_table([[0]] * 3)
        with pytest.raises(SizeGuardError):
            enumerate_models(table, T1, OracleSettings(max_evaluations=2))


class TestModelClasses:
    @pytest.mark.parametrize("t", [2, 3])
    def test_sequences_are_level_bounded_models(self, t, oracle_settings):
        table = make_table([[0], [1], [2]])
        bounded = set(enumerate_models(table, ModelClassSpec.level_size(t), oracle_settings))
        assert set(enumerate_models(table, T1, oracle_settings)) <= bounded

    def test_full_sigma_models_are_contained(self, oracle_settings):
        table = make_table([[0], [1], [2]])
        unrestricted = set(enumerate_models(table, None, oracle_settings))
        for t in (1, 2, 3):
            full = ModelClassSpec.level_size(t, full_sigma=True)
            bounded = ModelClassSpec.level_size(t)
            full_models = set(enumerate_models(table, full, oracle_settings))
            bounded_models = set(enumerate_models(table, bounded, oracle_settings))
            assert full_models <= bounded_models <= unrestricted

    def test_entailment_shrinks_as_the_class_grows(self, oracle_settings):
        full = ModelClassSpec.sequences(full_sigma=True)
        for table, gamma in random_instances(17, 100, 3, 3, 3):
            for query in all_statements(table.alternatives):
                by_sequences = brute_deduce(table, gamma, query, T1, oracle_settings)
                if brute_deduce(table, gamma, query, T3, oracle_settings):
                    assert by_sequences, f"{gamma} |= {query}"
                if brute_deduce(table, gamma, query, None, oracle_settings):
                    assert by_sequences
                if by_sequences:
                    assert brute_deduce(table, gamma, query, full, oracle_settings)

    def test_streams_repeat(self, unsupported_table, unsupported_gamma, oracle_settings):
        for spec in (None, T1, T3, ModelClassSpec.sequences(full_sigma=True)):
            first = list(enumerate_models(unsupported_table, spec, oracle_settings))
            assert first == list(enumerate_models(unsupported_table, spec, oracle_settings))
        bases = list(inconsistency_bases(unsupported_table, unsupported_gamma, oracle_settings))
        assert bases
        assert bases == list(
            inconsistency_bases(unsupported_table, unsupported_gamma, oracle_settings)
        )


class TestBruteDecisions:
    def test_consistency(self, example_table, oracle_settings):
        assert brute_consistent(example_table, [S("alpha <= beta")], T3, oracle_settings)
        gamma = [S("alpha < beta"), S("gamma <= alpha")]
        assert not brute_consistent(example_table, gamma, T1, oracle_settings)
        assert brute_consistent(example_table, [], T1, oracle_settings)

    def test_entailment_with_three_evaluation_levels(self, example_table, oracle_settings):
        assert brute_deduce(
            example_table, [S("alpha <= beta")], S("alpha <= gamma"), T3, oracle_settings
        )
        assert brute_deduce(
            example_table, [S("alpha < beta")], S("gamma < beta"), T3, oracle_settings
        )
        assert not brute_deduce(
            example_table, [S("alpha <= beta")], S("beta <= gamma"), T3, oracle_settings
        )
        assert not brute_deduce(
            example_table, [S("alpha <= beta")], S("gamma <= beta"), T3, oracle_settings
        )

    def test_countermodel_witnesses(self, example_table, oracle_settings):
        gamma = [S("alpha <= beta")]
        first = brute_countermodel(
            example_table, gamma, S("beta <= gamma"), T3, oracle_settings
        )
        assert first == HclpModel((frozenset({"c1"}),))
        second = brute_countermodel(
            example_table, gamma, S("gamma <= beta"), T3, oracle_settings
        )
        assert second == HclpModel((frozenset({"c1", "c2"}),))

    def test_find_model_satisfies_gamma(self, example_table, oracle_settings):
        gamma = [S("alpha <= beta"), S("gamma < beta")]
        model = brute_find_model(example_table, gamma, T1, oracle_settings)
        assert model is not None
        assert satisfies_all(example_table, model, gamma)

    def test_oracle_backend(self, example_table, oracle_settings):
        oracle = BruteForceOracle(T3, oracle_settings)
        assert oracle.deduce(example_table, [S("alpha <= beta")], S("alpha <= gamma"))
        assert oracle.countermodel(
            example_table, [S("alpha <= beta")], S("alpha <= gamma")
        ) is None

    def test_strong_deduce(self, example_table, oracle_settings):
        gamma = [S("alpha <= beta")]
        for query in [
            S("alpha < gamma"),
            S("alpha <= gamma"),
            S("beta < gamma"),
            EquivalenceQuery("alpha", "beta"),
            EquivalenceQuery("gamma", "gamma"),
        ]:
            assert brute_strong_deduce(
                example_table, gamma, query, oracle_settings
            ) == strong_deduce(example_table, gamma, query)


class TestInconsistencyBases:
    def test_worked_example(self, example_table, oracle_settings):
        assert brute_mib(example_table, [S("alpha <= beta")], oracle_settings) == (
            InconsistencyBase((), frozenset())
        )
        gamma = [S("alpha <= beta"), S("gamma < alpha")]
        expected = InconsistencyBase(tuple(gamma), frozenset({"c1", "c2", "c3"}))
        assert brute_mib(example_table, gamma, oracle_settings) == expected
        assert brute_mib(example_table, [], oracle_settings) == InconsistencyBase(
            (), frozenset()
        )

    def test_every_base_lies_inside_the_maximal_one(self, unsupported_table, unsupported_gamma):
        maximal = mib(unsupported_table, unsupported_gamma)
        maximal_indices = {
            k for k, stmt in enumerate(unsupported_gamma) if stmt in maximal.gamma_part
        }
        for statement_part, c_part in inconsistency_bases(unsupported_table, unsupported_gamma):
            assert set(statement_part) <= maximal_indices
            assert c_part <= maximal.c_part

    def test_statement_cap(self, example_table):
        gamma = [S("alpha <= beta")] * 3
        with pytest.raises(SizeGuardError):
            list(
                inconsistency_bases(
                    example_table, gamma, OracleSettings(max_statements=2)
                )
            )


class TestOracleSettings:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("HCLP_ORACLE_MAX_EVALUATIONS", raising=False)
        monkeypatch.delenv("HCLP_ORACLE_MAX_STATEMENTS", raising=False)
        assert OracleSettings.from_env() == OracleSettings(8, 12)

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("HCLP_ORACLE_MAX_EVALUATIONS", "5")
        monkeypatch.setenv("HCLP_ORACLE_MAX_STATEMENTS", "")
        assert OracleSettings.from_env() == OracleSettings(5, 12)

    def test_malformed_value(self, monkeypatch):
        monkeypatch.setenv("HCLP_ORACLE_MAX_EVALUATIONS", "eight")
        with pytest.raises(ConfigurationError, match="HCLP_ORACLE_MAX_EVALUATIONS"):
            OracleSettings.from_env()
