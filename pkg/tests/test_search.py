import copy
import math
import random

import pytest

from amazons_hybrid import board, search
from amazons_hybrid.board import GameStatus
from amazons_hybrid.config import EngineConfig
from amazons_hybrid.search import (
    HEAD,
    MOVE,
    AlreadyPropagated,
    NoLegalMoves,
    SearchNode,
    SearchTree,
    exploration_term,
    model_value,
    node_value,
    propagate_values,
    run_search,
    select_child,
    ucb,
)

import oracles
from test_board import grid_with


def tree_from_dict(spec: dict) -> SearchTree:
    """Synthetic tree for propagation fixtures; board states are dummies."""
    state = board.initial_state()
    tree = SearchTree(state)

    def add(node_spec, height, parent):
        node = SearchNode(id=-1, kind=HEAD if height == 1 else MOVE,
                          height=height, state=state, parent=parent,
                          obj=node_spec["obj"])
        nid = tree.add_node(node)
        if parent is not None:
            tree.node(parent).children.append(nid)
        else:
            tree.heads.append(nid)
        for child in node_spec["children"]:
            add(child, height + 1, nid)

    add(spec, 1, None)
    return tree


def T(obj, *children):
    return {"obj": obj, "children": list(children)}


# Expected values frozen from the reference two-pass oracle in oracles.py.
PROPAGATION_FIXTURES = [
    (T(0.7), [0.7]),
    (T(0.5, T(0.2), T(0.4)),
     [0.6561261981781177, 0.2, 0.4]),
    (T(0.1, T(0.9), T(0.3), T(0.6)),
     [0.37987697769322354, 0.9, 0.3, 0.6]),
    (T(0.5, T(0.2, T(0.4), T(0.8)), T(0.6, T(0.1))),
     [0.36486785250045345, 0.4, 0.4, 0.8, 0.35, 0.1]),
    (T(0.3, T(0.5, T(0.2, T(0.6), T(0.4)), T(0.7)), T(0.9)),
     [0.19148558225865436, 0.43451779686442454, 0.4535533905932738,
      0.6, 0.4, 0.35, 0.3]),
]


class TestExplorationTerm:
    def test_single_visit_total_gives_zero(self):
        assert exploration_term(1, 0) == 0.0

    def test_e_squared_total_gives_two(self):
        assert exploration_term(math.e ** 2, 0) == pytest.approx(2.0, abs=1e-12)

    def test_strictly_decreasing_in_visits(self):
        values = [exploration_term(100, nj) for nj in range(20)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_matches_formula_on_grid(self):
        for n in (1, 2, 5, 10, 100, 10_000):
            for nj in (0, 1, 3, 7, 50):
                expected = math.sqrt(2.0 * math.log(n) / (nj + 1))
                assert abs(exploration_term(n, nj) - expected) < 1e-12


class TestNodeValue:
    def _leaf(self, models):
        state = board.initial_state()
        mv = board.legal_moves(state)[0]
        after = board.apply_move(state, mv)
        from amazons_hybrid.measures import action_measures
        return SearchNode(id=0, kind=MOVE, height=2, state=after, move=mv,
                          measures=action_measures(state, mv, after))

    def test_alpha_one_is_pure_movement_score(self, models):
        node = self._leaf(models)
        from amazons_hybrid.nets import score, squash
        expected = squash(score(models.ae_move, models.head_move,
                                node.measures.to_array()))
        val = node_value(node, models, alpha=1.0, total_visits=1)
        assert node.obj == pytest.approx(float(expected), abs=1e-12)
        assert val == pytest.approx(node.obj + exploration_term(1, 0))

    def test_alpha_zero_is_pure_placement_score(self, models):
        node = self._leaf(models)
        from amazons_hybrid.nets import score, squash
        expected = squash(score(models.ae_place, models.head_place,
                                node.measures.to_array()))
        node_value(node, models, alpha=0.0, total_visits=1)
        assert node.obj == pytest.approx(float(expected), abs=1e-12)

    def test_equal_scores_mix_to_same_value(self, models):
        node = self._leaf(models)
        half = model_value(node.measures, models, 0.5)
        lo = model_value(node.measures, models, 0.0)
        hi = model_value(node.measures, models, 1.0)
        assert min(lo, hi) <= half <= max(lo, hi)

    def test_model_part_always_in_unit_interval(self, models):
        node = self._leaf(models)
        for alpha in (0.0, 0.3, 0.5, 0.9, 1.0):
            val = model_value(node.measures, models, alpha)
            assert 0.0 < val < 1.0

    def test_ucb_is_raw_score_plus_exploration(self, models):
        node = self._leaf(models)
        node.visits = 3
        from amazons_hybrid.nets import score
        raw = score(models.ae_move, models.head_move, node.measures.to_array())
        assert ucb(node, 50, models) == pytest.approx(
            raw + exploration_term(50, 3), abs=1e-12)


class TestSelectChild:
    def _toy_tree(self, objs, models):
        state = board.initial_state()
        moves = board.legal_moves(state)
        from amazons_hybrid.measures import action_measures
        tree = SearchTree(state)
        parent = SearchNode(id=-1, kind=HEAD, height=1, state=state, piece_index=0)
        pid = tree.add_node(parent)
        tree.heads.append(pid)
        for i, _ in enumerate(objs):
            mv = moves[i]
            after = board.apply_move(state, mv)
            child = SearchNode(id=-1, kind=MOVE, height=2, state=after, move=mv,
                               parent=pid,
                               measures=action_measures(state, mv, after))
            cid = tree.add_node(child)
            parent.children.append(cid)
        tree.total_visits = 10
        return tree, parent

    def test_single_child_always_chosen(self, models):
        tree, parent = self._toy_tree([0.5], models)
        rng = random.Random(0)
        for _ in range(20):
            assert select_child(tree, parent, models, 1.0, rng) == parent.children[0]

    def test_equal_ucb_splits_evenly(self, models, monkeypatch):
        tree, parent = self._toy_tree([0.5, 0.5], models)
        monkeypatch.setattr(search, "ucb", lambda node, total, m: 1.0)
        rng = random.Random(1)
        n = 10_000
        first = sum(select_child(tree, parent, models, 1.0, rng) == parent.children[0]
                    for _ in range(n))
        # 3 sigma around n/2 for a fair coin
        sigma = math.sqrt(n * 0.25)
        assert abs(first - n / 2) < 3 * sigma

    def test_tiny_temperature_is_argmax(self, models, monkeypatch):
        tree, parent = self._toy_tree([0.5, 0.5, 0.5], models)
        scores = {parent.children[0]: 0.2, parent.children[1]: 0.9,
                  parent.children[2]: 0.4}
        monkeypatch.setattr(search, "ucb",
                            lambda node, total, m: scores[node.id])
        rng = random.Random(2)
        picks = {select_child(tree, parent, models, 1e-6, rng) for _ in range(10_000)}
        assert picks == {parent.children[1]}


class TestRunSearch:
    def test_budget_one_creates_single_move_node(self, models):
        tree = run_search(board.initial_state(), 1, models,
                          EngineConfig(budget=1), random.Random(3))
        move_nodes = tree.move_nodes()
        assert len(move_nodes) == 1
        assert move_nodes[0].height == 2
        assert tree.node(move_nodes[0].parent).kind == HEAD

    def test_budget_twenty_structure(self, models, engine_config):
        tree = run_search(board.initial_state(), 20, models,
                          engine_config.replace(budget=20), random.Random(4))
        assert len(tree.nodes) <= 24
        assert len(tree.heads) == 4
        assert len(tree.move_nodes()) <= 20
        for node in tree.move_nodes():
            board.check_invariants(node.state)
            parent = tree.node(node.parent)
            assert node.height == parent.height + 1
            assert board.is_legal(parent.state, node.move)

    def test_fixed_seed_reproducible(self, models, engine_config):
        t1 = run_search(board.initial_state(), 16, models, engine_config,
                        random.Random(99))
        t2 = run_search(board.initial_state(), 16, models, engine_config,
                        random.Random(99))
        assert [n.move for n in t1.move_nodes()] == [n.move for n in t2.move_nodes()]
        assert [n.visits for n in t1.nodes] == [n.visits for n in t2.nodes]
        assert [n.obj for n in t1.nodes] == [n.obj for n in t2.nodes]

    def test_terminal_position_raises(self, models, engine_config):
        state = grid_with([(0, 0), (0, 9), (9, 9), (9, 0)],
                          [(4, 4), (5, 4), (4, 5), (5, 5)],
                          arrows=[(0, 1), (1, 0), (1, 1), (0, 8), (1, 8), (1, 9),
                                  (8, 9), (8, 8), (9, 8), (8, 0), (8, 1), (9, 1)])
        with pytest.raises(NoLegalMoves):
            run_search(state, 5, models, engine_config, random.Random(0))

    def test_visits_dominate_children_sums(self, models, engine_config):
        tree = run_search(board.initial_state(), 24, models,
                          engine_config.replace(budget=24), random.Random(7))
        for node in tree.nodes:
            child_sum = sum(tree.node(c).visits for c in node.children)
            assert node.visits >= child_sum

    def test_winning_leaf_scores_one(self, models, engine_config):
        # white can seal black's last piece this turn
        state = grid_with([(4, 4), (0, 0), (9, 0), (5, 5)],
                          [(0, 9), (1, 9), (0, 8), (7, 7)],
                          arrows=[(2, 9), (2, 8), (2, 7), (1, 7), (0, 7), (1, 8),
                                  (6, 6), (7, 6), (8, 6), (8, 7), (6, 8), (7, 8),
                                  (8, 8), (6, 7)])
        tree = run_search(state, 40, models, engine_config.replace(budget=40),
                          random.Random(1))
        winners = [n for n in tree.move_nodes()
                   if board.status(n.state) is not GameStatus.ONGOING]
        assert winners
        assert all(n.obj == 1.0 for n in winners)

    def test_rollout_mode_runs(self, models):
        config = EngineConfig(budget=6, rollout="random", rollout_cap=10)
        tree = run_search(board.initial_state(), 6, models, config, random.Random(5))
        assert all(n.obj in (0.0, 0.5, 1.0) for n in tree.move_nodes())


class TestPropagation:
    @pytest.mark.parametrize("spec,expected", PROPAGATION_FIXTURES)
    def test_fixtures_match_frozen_values(self, spec, expected):
        tree = tree_from_dict(copy.deepcopy(spec))
        propagate_values(tree)
        got = [n.obj for n in tree.nodes]   # preorder: construction order
        assert got == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("spec,expected", PROPAGATION_FIXTURES)
    def test_fixtures_match_reference_oracle(self, spec, expected):
        reference = oracles.reference_two_pass(copy.deepcopy(spec))
        assert oracles.flatten_objs(reference) == pytest.approx(expected, abs=1e-12)

    def test_worked_three_node_example(self):
        tree = tree_from_dict(T(0.5, T(0.2), T(0.4)))
        propagate_values(tree)
        root, a, b = tree.nodes
        assert root.obj == pytest.approx((0.5 + 2 ** -0.3) / 2, abs=1e-9)
        assert (a.obj, b.obj) == (0.2, 0.4)

    def test_zero_mean_at_odd_parent_adds_full_reward(self):
        tree = tree_from_dict(T(0.25, T(0.0), T(0.0)))
        propagate_values(tree)
        # mean child value 0 folds to 2**0 = 1 before halving
        assert tree.nodes[0].obj == pytest.approx((0.25 + 1.0) / 2)

    def test_single_node_identity(self):
        tree = tree_from_dict(T(0.42))
        propagate_values(tree)
        assert tree.nodes[0].obj == 0.42

    def test_double_propagation_guarded(self):
        tree = tree_from_dict(T(0.5, T(0.2)))
        propagate_values(tree)
        with pytest.raises(AlreadyPropagated):
            propagate_values(tree)

    def test_pass_counters(self):
        tree = tree_from_dict(T(0.5, T(0.2, T(0.4), T(0.8)), T(0.6, T(0.1))))
        propagate_values(tree)
        internal = sum(1 for n in tree.nodes if n.children)
        assert tree.propagation_stats == {"pass1_updates": internal,
                                          "pass2_updates": len(tree.nodes)}

    def test_depth_two_values_stay_in_unit_interval(self, models):
        config = EngineConfig(budget=18, descend_bias=0.0)  # flat tree, h_max 2
        tree = run_search(board.initial_state(), 18, models, config,
                          random.Random(21))
        assert tree.h_max == 2
        propagate_values(tree)
        for node in tree.nodes:
            assert 0.0 <= node.obj <= 1.0

    def test_dump_format(self, models, engine_config):
        tree = run_search(board.initial_state(), 8, models, engine_config,
                          random.Random(2))
        propagate_values(tree)
        records = tree.dump()
        assert len(records) == len(tree.nodes)
        for rec in records:
            assert set(rec) == {"id", "parent", "kind", "move", "height",
                                "visits", "obj", "measures"}
            if rec["kind"] == "move":
                assert isinstance(rec["move"], str)
                assert len(rec["measures"]) == 5
