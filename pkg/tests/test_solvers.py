import logging

import numpy as np
import pytest

from core.errors import IllegalActionError
from core.fixtures import MIXING_COLS, MIXING_ROWS
from core.strategies import CopPolicy, PolicyKind, RobberStrategy, robber_move_distribution, validate_policy
from engines.game_engine import TAU, ConcPosition, SeqPosition, StateClass, classify
from engines.matrix_game import matrix_game_value
from engines.solvers import (
    DEFAULT_TOL,
    best_response,
    certify,
    evaluate_policies,
    one_turn_matrix,
    sequential_one_turn_matrix,
    solve_concurrent,
    solve_sequential,
)
from graph_helpers import connected_graphs, path_graph, random_markov_robber, random_oblivious, random_state_robber

TIGHT = 1e-12


def sequential_oracle(g, sigma3):
    """Depth-capped backward induction over the deterministic sequential game tree."""
    n = g.vertex_count
    positions = [(a, b, c, u) for a in g.vertices for b in g.vertices for c in g.vertices for u in (1, 2)]

    def successor(x1, x2, x3, u, a):
        if u == 1:
            return (a, x2, x3, 2)
        if a == x3:
            return (x1, a, x3, 1)
        (r,) = robber_move_distribution(sigma3, x1, a, x3)
        return (x1, a, r, 1)

    value = {s: 0.0 for s in positions}
    for s in positions:
        if s[0] == s[2]:
            value[s] = 1.0
    for _ in range(2 * n ** 3):
        nxt = dict(value)
        for s in positions:
            x1, x2, x3, u = s
            if x1 == x3 or x2 == x3:
                continue
            own = x1 if u == 1 else x2
            options = [value[successor(x1, x2, x3, u, a)] for a in g.closed_neighborhood(own)]
            nxt[s] = max(options) if u == 1 else min(options)
        value = nxt
    return value


class TestSequential:
    def test_c1_steps_onto_the_robber(self, path3, stay):
        report = solve_sequential(path3, stay)
        assert report.values[SeqPosition(2, 1, 3, 1)] == 1.0
        assert report.policy1.distribution(2, 1, 3) == {3: 1.0}

    def test_capture_states(self, path3, stay):
        report = solve_sequential(path3, stay)
        assert report.values[SeqPosition(1, 3, 3, 1)] == 0.0
        assert report.values[SeqPosition(3, 1, 3, 2)] == 1.0
        assert report.values[TAU] == 0.0

    def test_report_is_converged_and_policies_valid(self, mix_graph, mix_robber):
        report = solve_sequential(mix_graph, mix_robber)
        assert report.converged
        assert report.optimality_residual <= 10 * 1e-10
        assert validate_policy(report.policy1, mix_graph, "sequential") == []
        assert validate_policy(report.policy2, mix_graph, "sequential") == []
        assert report.values.echo.is_monotone()

    def test_matches_exhaustive_oracle_on_small_graphs(self):
        rng = np.random.default_rng(7)
        for g in connected_graphs(4, min_n=2):
            for sigma3 in (RobberStrategy.stay(), random_oblivious(g, rng), random_state_robber(g, rng)):
                report = solve_sequential(g, sigma3)
                oracle = sequential_oracle(g, sigma3)
                for s, v in report.values.items():
                    if s is not TAU:
                        assert v == pytest.approx(oracle[tuple(s)], abs=1e-9), (s, sigma3)

    def test_one_column_reduction(self, mix_graph, mix_robber):
        report = solve_sequential(mix_graph, mix_robber)
        for s in [SeqPosition(2, 6, 1, 1), SeqPosition(3, 5, 4, 1), SeqPosition(1, 2, 6, 2)]:
            _, _, matrix = sequential_one_turn_matrix(mix_graph, mix_robber, report.values, s)
            assert min(matrix.shape) == 1
            assert matrix_game_value(matrix) == pytest.approx(report.values[s], abs=1e-9)

    def test_values_in_unit_interval_for_stochastic_robber(self):
        g = path_graph(4)
        sigma3 = random_markov_robber(g, np.random.default_rng(3))
        report = solve_sequential(g, sigma3)
        assert np.all(report.values.values >= 0) and np.all(report.values.values <= 1)
        assert report.values.echo.is_monotone()

    def test_non_convergence_is_flagged(self, mix_graph, mix_robber, caplog):
        with caplog.at_level(logging.WARNING):
            report = solve_sequential(mix_graph, mix_robber, max_iter=1)
        assert not report.converged
        assert report.values.iterations == 1
        assert "max_iter" in caplog.text

    def test_rejects_bad_parameters(self, path3, stay):
        with pytest.raises(ValueError):
            solve_sequential(path3, stay, tol=0.0)
        with pytest.raises(ValueError):
            solve_sequential(path3, stay, max_iter=0)


class TestConcurrent:
    def test_mixing_value_and_mixed_policies(self, mix_graph, mix_robber):
        report = solve_concurrent(mix_graph, mix_robber)
        start = ConcPosition(2, 6, 1)
        assert report.values[start] == pytest.approx(0.5, abs=1e-8)
        p1 = report.policy1.distribution(2, 6, 1)
        p2 = report.policy2.distribution(2, 6, 1)
        assert sorted(p1) == [2, 3] and sorted(p2) == [5, 6]
        assert all(p == pytest.approx(0.5, abs=1e-9) for p in p1.values())
        assert all(p == pytest.approx(0.5, abs=1e-9) for p in p2.values())
        assert report.policy1.kind is PolicyKind.MIXED

    def test_mixing_one_turn_matrix(self, mix_graph, mix_robber):
        report = solve_concurrent(mix_graph, mix_robber)
        rows, cols, matrix = one_turn_matrix(mix_graph, mix_robber, report.values, ConcPosition(2, 6, 1),
                                             MIXING_ROWS, MIXING_COLS)
        assert rows == (2, 3) and cols == (6, 5)
        np.testing.assert_allclose(matrix, [[1.0, 0.0], [0.0, 1.0]], atol=1e-9)

    def test_capture_state_and_tie_break(self, path3, stay):
        report = solve_concurrent(path3, stay)
        assert report.values[ConcPosition(2, 1, 2)] == 1.0
        # both cops one step from the robber: C₁ wins the tie
        assert report.values[ConcPosition(1, 1, 2)] == 1.0
        assert report.values[ConcPosition(1, 2, 3)] == 0.0

    def test_monotone_iterates_and_residual(self, mix_graph, mix_robber):
        report = solve_concurrent(mix_graph, mix_robber)
        assert report.values.echo.is_monotone()
        assert report.optimality_residual <= 10 * 1e-10
        assert validate_policy(report.policy1, mix_graph, "concurrent") == []
        assert validate_policy(report.policy2, mix_graph, "concurrent") == []

    def test_c1_rows_are_optimal_at_the_first_sweep_within_tol(self):
        g = path_graph(3)
        sigma3 = random_markov_robber(g, np.random.default_rng(3))
        report = solve_concurrent(g, sigma3)
        final = report.values
        iterates = [{s: (1.0 if classify(s) is StateClass.C1_CAPTURE else 0.0) for s, _ in final.items()}]
        for k in range(1, final.iterations + 1):
            iterates.append(dict(solve_concurrent(g, sigma3, max_iter=k).values.items()))
        for s, v in final.items():
            if classify(s) is not StateClass.ORDINARY:
                continue
            k = next(k for k in range(1, len(iterates)) if iterates[k][s] >= v - DEFAULT_TOL)
            rows, _, matrix = one_turn_matrix(g, sigma3, iterates[k - 1], s)
            dist = report.policy1.distribution(s.x1, s.x2, s.x3)
            weights = np.array([dist.get(a, 0.0) for a in rows])
            assert weights.sum() == pytest.approx(1.0)
            assert (weights @ matrix).min() >= matrix_game_value(matrix) - 1e-9

    def test_unconverged_solve_still_covers_every_state(self, mix_graph, mix_robber):
        report = solve_concurrent(mix_graph, mix_robber, max_iter=1)
        assert not report.converged
        for s, _ in report.values.items():
            if classify(s) is StateClass.ORDINARY:
                assert (s.x1, s.x2, s.x3) in report.policy1.moves
                assert (s.x1, s.x2, s.x3) in report.policy2.moves
        assert validate_policy(report.policy1, mix_graph, "concurrent") == []

    def test_stochastic_robber(self):
        g = path_graph(3)
        sigma3 = random_markov_robber(g, np.random.default_rng(11))
        report = solve_concurrent(g, sigma3)
        assert report.converged
        assert report.values.echo.is_monotone()
        assert np.all(report.values.values <= 1.0 + TIGHT)


class TestFrozenPolicies:
    @pytest.mark.parametrize("variant", ["sequential", "concurrent"])
    def test_best_response_to_idle_c2(self, path3, stay, variant):
        values = best_response(path3, stay, CopPolicy.stay(2), variant)
        for s, v in values.items():
            if s is not TAU and classify(s) is StateClass.ORDINARY:
                assert v == 1.0

    def test_best_response_at_capture_state(self, mix_graph, mix_robber):
        values = best_response(mix_graph, mix_robber, CopPolicy.stay(1), "concurrent")
        assert values[ConcPosition(4, 2, 4)] == 1.0
        assert values[ConcPosition(1, 4, 4)] == 0.0

    @pytest.mark.parametrize("variant", ["sequential", "concurrent"])
    def test_idle_cops_never_capture(self, path3, stay, variant):
        values = evaluate_policies(path3, stay, CopPolicy.stay(1), CopPolicy.stay(2), variant)
        for s, v in values.items():
            if s is not TAU:
                assert v == (1.0 if s.x1 == s.x3 else 0.0)

    def test_evaluation_of_mixing_policies(self, mix_graph, mix_robber):
        report = solve_concurrent(mix_graph, mix_robber)
        values = evaluate_policies(mix_graph, mix_robber, report.policy1, report.policy2, "concurrent")
        assert values[ConcPosition(2, 6, 1)] == pytest.approx(0.5, abs=1e-8)

    def test_illegal_frozen_policy(self, mix_graph, mix_robber):
        policy = CopPolicy.deterministic(2, {(2, 6, 1): 4})
        with pytest.raises(IllegalActionError):
            best_response(mix_graph, mix_robber, policy, "concurrent")

    @pytest.mark.slow
    def test_sequential_certificates(self):
        rng = np.random.default_rng(2024)
        graphs = list(connected_graphs(6, min_n=2))
        for k in range(50):
            g = graphs[int(rng.integers(len(graphs)))]
            sigma3 = random_markov_robber(g, rng)
            report = certify(g, sigma3, solve_sequential(g, sigma3, tol=TIGHT), tol=TIGHT)
            assert report.certified
            assert report.epsilon <= 10 * TIGHT, (k, report.epsilon)
            evaluated = evaluate_policies(g, sigma3, report.policy1, report.policy2, "sequential", tol=TIGHT)
            assert np.all(np.abs(evaluated.values - report.values.values) <= 1e-9)

    def test_concurrent_certificates(self, mix_graph, mix_robber):
        rng = np.random.default_rng(5)
        instances = [(mix_graph, mix_robber)] + [(g, random_state_robber(g, rng)) for g in connected_graphs(3, min_n=2)]
        for g, sigma3 in instances:
            report = certify(g, sigma3, solve_concurrent(g, sigma3))
            assert report.epsilon <= 10 * DEFAULT_TOL

    @pytest.mark.slow
    def test_concurrent_certificates_stochastic_robber(self):
        rng = np.random.default_rng(31)
        graphs = list(connected_graphs(4, min_n=2))
        for k in range(25):
            g = graphs[int(rng.integers(len(graphs)))]
            sigma3 = random_markov_robber(g, rng)
            report = certify(g, sigma3, solve_concurrent(g, sigma3))
            assert report.certified
            assert report.epsilon <= 10 * DEFAULT_TOL, (k, report.epsilon)
            evaluated = evaluate_policies(g, sigma3, report.policy1, report.policy2, "concurrent")
            assert np.all(np.abs(evaluated.values - report.values.values) <= 10 * DEFAULT_TOL)
