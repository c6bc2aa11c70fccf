import random

import pytest

from amazons_hybrid import arena, board, datagen
from amazons_hybrid.arena import (
    AgentFailure,
    AgentSpec,
    LlmAgent,
    RandomAgent,
    build_agent,
    emit_report,
    play_game,
    run_match,
    win_rate_ci,
)
from amazons_hybrid.board import BLACK, WHITE


class TestWinRateCi:
    def test_159_of_200_interval(self):
        p, lo, hi = win_rate_ci(159, 200)
        assert p == pytest.approx(0.795, abs=1e-12)
        half = 1.96 * (0.795 * 0.205 / 200) ** 0.5
        assert hi - p == pytest.approx(half, abs=1e-12)
        assert abs(half - 0.0560) < 1e-4

    def test_117_of_200(self):
        p, _, _ = win_rate_ci(117, 200)
        assert p == 0.585

    def test_degenerate_zero(self):
        assert win_rate_ci(0, 50) == (0.0, 0.0, 0.0)

    def test_degenerate_full(self):
        assert win_rate_ci(50, 50) == (1.0, 1.0, 1.0)

    def test_clamped_to_unit_interval(self):
        p, lo, hi = win_rate_ci(1, 2)
        assert 0.0 <= lo <= p <= hi <= 1.0

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            win_rate_ci(5, 0)
        with pytest.raises(ValueError):
            win_rate_ci(7, 5)


class TestPlayGame:
    def test_random_vs_random_terminates(self):
        a, b = RandomAgent(), RandomAgent()
        for seed in range(25):
            rec = play_game(a, b, WHITE, seed=seed)
            assert rec.plies <= board.MAX_PLIES
            assert rec.winner in ("a", "b")
            assert rec.failure is None

    def test_fixed_seed_reproducible(self):
        a, b = RandomAgent(), RandomAgent()
        r1 = play_game(a, b, WHITE, seed=11)
        r2 = play_game(a, b, WHITE, seed=11)
        assert r1.moves == r2.moves
        assert r1.winner == r2.winner

    def test_move_log_replays_to_terminal_state(self):
        rec = play_game(RandomAgent(), RandomAgent(), WHITE, seed=3)
        state = board.initial_state()
        for notation in rec.moves:
            state = board.apply_move(state, board.parse_move(notation))
        assert board.status(state) is not board.GameStatus.ONGOING
        winner_color = ("white" if board.status(state) is board.GameStatus.WHITE_WINS
                        else "black")
        assert rec.winner_color == winner_color

    def test_failing_agent_forfeits_with_flag(self):
        class Broken:
            name = "broken"

            def choose(self, state, rng):
                raise RuntimeError("boom")

        rec = play_game(Broken(), RandomAgent(), WHITE, seed=0)
        assert rec.winner == "b"
        assert "boom" in rec.failure

    def test_illegal_agent_move_forfeits(self):
        class Cheater:
            name = "cheater"

            def choose(self, state, rng):
                return board.Move(board.Square(0, 0), board.Square(9, 9),
                                  board.Square(5, 5)), "cheat"

        rec = play_game(RandomAgent(), Cheater(), WHITE, seed=0)
        assert rec.winner == "a"
        assert "illegal" in rec.failure


class TestRunMatch:
    def test_summary_bookkeeping(self):
        records, summary = run_match(RandomAgent(), RandomAgent(), 20, seed=5)
        assert summary.n_games == 20
        assert summary.wins_a + summary.wins_b == 20
        assert summary.wins_a == sum(1 for r in records if r.winner == "a")
        assert len(summary.curve) == 20
        assert summary.curve[-1] == summary.win_rate_a

    def test_colors_alternate(self):
        records, _ = run_match(RandomAgent(), RandomAgent(), 9, seed=6)
        whites = sum(1 for r in records if r.a_color == "white")
        assert abs(whites - (9 - whites)) <= 1
        assert [r.a_color for r in records[:4]] == ["white", "black",
                                                    "white", "black"]

    def test_zero_games_rejected(self):
        with pytest.raises(ValueError):
            run_match(RandomAgent(), RandomAgent(), 0)

    def test_deterministic_under_seed(self):
        r1, s1 = run_match(RandomAgent(), RandomAgent(), 6, seed=7)
        r2, s2 = run_match(RandomAgent(), RandomAgent(), 6, seed=7)
        assert s1.wins_a == s2.wins_a
        assert [r.moves for r in r1] == [r.moves for r in r2]


class TestEmitReport:
    def test_report_files_and_stability(self, tmp_path):
        records, summary = run_match(RandomAgent(), RandomAgent(), 8, seed=8)
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        paths1 = emit_report(records, summary, out1, "random", "random")
        emit_report(records, summary, out2, "random", "random")
        for p1 in paths1:
            name = p1.split("/")[-1]
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        curve_rows = (out1 / "win_curve.csv").read_text().strip().splitlines()
        assert len(curve_rows) == 1 + 8
        assert (out1 / "ci_summary.csv").exists()
        assert (out1 / "games.csv").exists()

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report([], None, tmp_path)


class ScriptedCompleter:
    def __init__(self, replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, prompt):
        self.prompts.append(prompt)
        return self.replies.pop(0)


class TestLlmAgent:
    def test_legal_reply_accepted_first_try(self):
        state = board.initial_state()
        legal = board.format_move(board.legal_moves(state)[0])
        agent = LlmAgent(ScriptedCompleter([legal]))
        mv, source = agent.choose(state, random.Random(0))
        assert board.format_move(mv) == legal
        assert source == "llm"

    def test_illegal_reply_triggers_reprompt_with_feedback(self):
        state = board.initial_state()
        legal = board.format_move(board.legal_moves(state)[5])
        completer = ScriptedCompleter(["a1-j9/a1", legal])
        agent = LlmAgent(completer)
        mv, source = agent.choose(state, random.Random(0))
        assert board.format_move(mv) == legal
        assert source == "llm"
        assert "illegal" in completer.prompts[1]

    def test_persistent_garbage_falls_back_to_guard(self):
        state = board.initial_state()
        completer = ScriptedCompleter(["nonsense", "more nonsense", "still no"])
        agent = LlmAgent(completer)
        mv, source = agent.choose(state, random.Random(0))
        assert source == "llm-guard"
        assert board.is_legal(state, mv)
        assert len(completer.prompts) == 3

    def test_guard_move_maximizes_adjacency_territory(self):
        from amazons_hybrid.measures import KING_MOVE, territory
        state = board.initial_state()
        mv = LlmAgent._guard_move(state)
        after = board.apply_move(state, mv)
        got = territory(after, WHITE, KING_MOVE)
        rng = random.Random(1)
        for _ in range(40):
            other = board.random_move(state, rng)
            other_after = board.apply_move(state, other)
            assert got >= territory(other_after, WHITE, KING_MOVE) - 1e-12


class TestBuildAgent:
    def test_all_search_kinds_play_a_legal_move(self, models):
        state = board.initial_state()
        for kind in ("hybrid", "uct-ae", "genetic", "gat-ae"):
            agent = build_agent(AgentSpec(kind=kind, node_budget=8), models=models)
            mv, _ = agent.choose(state, random.Random(2))
            assert board.is_legal(state, mv)

    def test_random_kind(self):
        agent = build_agent(AgentSpec(kind="random"))
        assert isinstance(agent, RandomAgent)

    def test_unknown_kind_rejected(self, models):
        with pytest.raises(ValueError):
            build_agent(AgentSpec(kind="alphabeta"), models=models)

    def test_llm_kind_uses_injected_completer(self):
        state = board.initial_state()
        legal = board.format_move(board.legal_moves(state)[0])
        agent = build_agent(AgentSpec(kind="llm"),
                            completer=ScriptedCompleter([legal]))
        mv, _ = agent.choose(state, random.Random(0))
        assert board.format_move(mv) == legal


def test_search_agents_differ_from_random_on_average(models):
    # hybrid should comfortably beat uniform random even with fresh models
    spec = AgentSpec(kind="hybrid", node_budget=10)
    agent = build_agent(spec, models=models)
    _, summary = run_match(agent, RandomAgent(), 6, seed=9)
    assert summary.wins_a >= 4
