import pickle

import pytest

from core.errors import ParseError, StrategyError
from core.fixtures import MIXING_ROBBER
from core.strategies import (
    CopPolicy,
    PolicyKind,
    RobberKind,
    RobberStrategy,
    dump_cop_policy,
    dump_robber_strategy,
    load_cop_policy,
    load_robber_strategy,
    robber_move_distribution,
    validate_policy,
)


class TestRobberStrategy:
    def test_mixing_robber_document(self, mix_graph):
        sigma3 = load_robber_strategy(MIXING_ROBBER, mix_graph)
        assert sigma3.kind is RobberKind.STATE
        assert sigma3.is_deterministic
        assert robber_move_distribution(sigma3, 2, 6, 1) == {4: 1.0}
        assert robber_move_distribution(sigma3, 3, 5, 4) == {3: 1.0}
        # unlisted: stay
        assert robber_move_distribution(sigma3, 1, 1, 5) == {5: 1.0}

    def test_empty_oblivious_is_identity(self, mix_graph):
        sigma3 = load_robber_strategy("robber oblivious\n", mix_graph)
        for x in mix_graph.vertices:
            assert sigma3.oblivious_move(x) == x
            assert robber_move_distribution(sigma3, 1, 2, x) == {x: 1.0}

    def test_illegal_move_names_state_and_destination(self, mix_graph):
        with pytest.raises(StrategyError, match=r"\(2, 6, 1\).*6 is not in N\[1\]"):
            load_robber_strategy("robber state\nm 2 6 1 6\n", mix_graph)

    def test_markov_law_is_echoed(self, path3):
        text = "robber markov\np 1 1 2 1 0.25\np 1 1 2 2 0.5\np 1 1 2 3 0.25\n"
        sigma3 = load_robber_strategy(text, path3)
        assert robber_move_distribution(sigma3, 1, 1, 2) == {1: 0.25, 2: 0.5, 3: 0.25}
        assert robber_move_distribution(sigma3, 1, 1, 3) == {3: 1.0}
        assert not sigma3.is_deterministic

    def test_markov_sum_checked(self, path3):
        with pytest.raises(StrategyError, match="sums to"):
            load_robber_strategy("robber markov\np 1 1 2 1 0.5\np 1 1 2 3 0.4\n", path3)

    def test_zero_probabilities_are_dropped(self, path3):
        sigma3 = load_robber_strategy("robber markov\np 1 1 2 1 0\np 1 1 2 3 1\n", path3)
        assert robber_move_distribution(sigma3, 1, 1, 2) == {3: 1.0}

    def test_negative_probability(self, path3):
        with pytest.raises(StrategyError):
            load_robber_strategy("robber markov\np 1 1 2 1 -0.5\np 1 1 2 3 1.5\n", path3)

    @pytest.mark.parametrize("text", [
        "",
        "robber sneaky\n",
        "robber oblivious\nm 1\n",
        "robber state\np 1 1 2 1 1.0\n",
    ])
    def test_parse_errors(self, path3, text):
        with pytest.raises(ParseError):
            load_robber_strategy(text, path3)

    def test_duplicate_entry(self, path3):
        with pytest.raises(ParseError, match="line 3: duplicate"):
            load_robber_strategy("robber oblivious\nm 2 1\nm 2 3\n", path3)

    def test_validate_accepts_legal_tables(self, path3):
        sigma3 = RobberStrategy(RobberKind.MARKOV, distribution_map={(1, 1, 2): {1: 0.5, 3: 0.5}})
        assert sigma3.validate(path3) is sigma3

    @pytest.mark.parametrize("sigma3, pattern", [
        (RobberStrategy(RobberKind.OBLIVIOUS, oblivious_map={1: 3}), r"3 is not in N\[1\]"),
        (RobberStrategy(RobberKind.STATE, state_map={(1, 2, 3): 1}), r"\(1, 2, 3\)"),
        (RobberStrategy(RobberKind.STATE, state_map={(1, 2, 4): 3}), "outside 1..3"),
        (RobberStrategy(RobberKind.MARKOV, distribution_map={(1, 1, 2): {1: 0.5, 2: 0.4}}), "sums to"),
        (RobberStrategy(RobberKind.MARKOV, distribution_map={(1, 1, 2): {1: 1.5, 3: -0.5}}), "outside"),
        (RobberStrategy(RobberKind.MARKOV, distribution_map={(1, 1, 2): {}}), "empty"),
    ])
    def test_validate_rejects_tables_built_in_code(self, path3, sigma3, pattern):
        with pytest.raises(StrategyError, match=pattern):
            sigma3.validate(path3)

    def test_oblivious_move_needs_oblivious_kind(self, mix_graph, mix_robber):
        with pytest.raises(StrategyError, match="not oblivious"):
            mix_robber.oblivious_move(1)

    def test_dump_reloads(self, mix_graph, mix_robber):
        assert load_robber_strategy(dump_robber_strategy(mix_robber), mix_graph) == mix_robber

    def test_pickles(self, mix_robber):
        assert pickle.loads(pickle.dumps(mix_robber)) == mix_robber


class TestCopPolicy:
    def test_stay_policy_is_valid(self, mix_graph):
        assert validate_policy(CopPolicy.stay(1), mix_graph, "concurrent") == []
        assert CopPolicy.stay(2).distribution(1, 5, 3) == {5: 1.0}

    def test_illegal_move_reported(self, mix_graph):
        policy = CopPolicy.deterministic(1, {(2, 6, 1): 5})
        errors = validate_policy(policy, mix_graph, "concurrent")
        assert len(errors) == 1
        assert "2->5" in errors[0] and "5 not in N[2]" in errors[0]

    def test_overweight_mixture_reported(self, mix_graph):
        policy = CopPolicy(1, PolicyKind.MIXED, {(2, 6, 1): {2: 0.6, 3: 0.6}})
        errors = validate_policy(policy, mix_graph, "sequential")
        assert any("sums to" in e for e in errors)
        assert "(2,6,1,1)" in errors[0]

    def test_every_violation_is_listed(self, mix_graph):
        policy = CopPolicy(2, PolicyKind.DETERMINISTIC, {(2, 6, 1): {4: 1.0}, (2, 5, 1): {1: 0.5, 5: 0.5}})
        assert len(validate_policy(policy, mix_graph, "concurrent")) == 3

    def test_player_checked(self):
        with pytest.raises(StrategyError):
            CopPolicy(3, PolicyKind.DETERMINISTIC)

    def test_mixed_file_reloads(self, mix_graph):
        policy = CopPolicy(2, PolicyKind.MIXED, {(2, 6, 1): {5: 0.5, 6: 0.5}})
        text = dump_cop_policy(policy)
        assert text.startswith("cop 2 mixed\n")
        assert load_cop_policy(text, mix_graph) == policy

    def test_deterministic_file(self, mix_graph):
        policy = load_cop_policy("cop 1 deterministic\nm 2 6 1 3\n", mix_graph)
        assert policy.distribution(2, 6, 1) == {3: 1.0}
        assert dump_cop_policy(policy) == "cop 1 deterministic\nm 2 6 1 3\n"

    def test_illegal_file_rejected(self, mix_graph):
        with pytest.raises(StrategyError, match="illegal"):
            load_cop_policy("cop 1 deterministic\nm 2 6 1 6\n", mix_graph)

    def test_bad_header(self, mix_graph):
        with pytest.raises(ParseError):
            load_cop_policy("cop 3 mixed\n", mix_graph)
