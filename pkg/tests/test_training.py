import csv
import math
import random

import numpy as np
import pytest
from scipy import stats

from amazons_hybrid.datagen import DatasetRecord, GraphRecord
from amazons_hybrid.measures import MeasureVector
from amazons_hybrid.nets import GatNetwork, mse_loss, smooth_l1_loss
from amazons_hybrid.training import (
    EmptyDataset,
    GraphScorer,
    InsufficientData,
    ScoredAutoencoder,
    f_survival,
    moving_average,
    regularized_incomplete_beta,
    train_gat_ae,
    train_uct_ae,
    variance_and_ftest,
    write_loss_csv,
)

from test_nets import assert_grads_close, finite_difference_grads


def synthetic_records(n, seed=0, move_label=None, place_label=None):
    rng = random.Random(seed)
    records = []
    for i in range(n):
        vec = MeasureVector(*(rng.random() for _ in range(5)))
        records.append(DatasetRecord(
            game=0, ply=i, mover="white", move="a1-a2/a1", grid="",
            measures=vec,
            move_score=move_label if move_label is not None else vec.adjacency_territory,
            place_score=place_label if place_label is not None else vec.line_mobility))
    return records


class TestTrainUctAe:
    def test_constant_labels_converge_fast(self):
        records = synthetic_records(256, seed=1, move_label=0.5, place_label=0.5)
        result = train_uct_ae(records, epochs=70, seed=0)
        assert len(result.move_losses) <= 600
        assert min(result.move_losses[:500]) < 1e-3
        assert min(result.place_losses[:500]) < 1e-3

    def test_series_length_equals_iterations(self):
        records = synthetic_records(100, seed=2)
        result = train_uct_ae(records, epochs=3, seed=0)
        iterations = 3 * math.ceil(100 / 32)
        assert len(result.move_losses) == iterations
        assert len(result.place_losses) == iterations

    def test_seeded_rerun_is_identical(self):
        records = synthetic_records(80, seed=3)
        a = train_uct_ae(records, epochs=2, seed=7)
        b = train_uct_ae(records, epochs=2, seed=7)
        assert a.move_losses == b.move_losses
        assert a.place_losses == b.place_losses
        assert np.array_equal(a.head_move.w, b.head_move.w)

    def test_empty_dataset_rejected(self):
        with pytest.raises(EmptyDataset):
            train_uct_ae([], epochs=1, seed=0)

    def test_learns_feature_aligned_labels(self):
        # labels equal the first measure: loss should fall well below variance
        records = synthetic_records(512, seed=4)
        result = train_uct_ae(records, epochs=40, seed=1)
        assert moving_average(result.move_losses, 20)[-1] < 0.01


def single_node_graphs(n, label=0.5):
    return [GraphRecord(x=[[0.1, 0.2, 0.3, 0.4, 0.5]], edges=[],
                        labels={0: label}, visited=[0])
            for _ in range(n)]


class TestTrainGatAe:
    def test_zero_init_on_matching_labels_starts_at_zero_loss(self):
        gat = GatNetwork(np.random.default_rng(0))
        gat.zero_init()
        # zero parameters output exactly 0.5, matching the 0.5 labels
        trained, losses = train_gat_ae(single_node_graphs(5), epochs=1, seed=0,
                                       gat=gat)
        assert losses[0] == 0.0

    def test_gradient_check_before_and_after_training(self):
        rng = np.random.default_rng(1)
        graphs = [GraphRecord(x=rng.uniform(-1, 1, (4, 5)).tolist(),
                              edges=[[0, 1], [1, 2], [2, 3]],
                              labels={0: 0.4, 2: 0.7}, visited=[0])
                  for _ in range(10)]

        def check(gat):
            scorer = GraphScorer(gat)
            g = graphs[0]
            a = np.eye(4)
            for i, j in g.edges:
                a[i, j] = a[j, i] = 1.0
            rows = sorted(g.labels)
            targets = np.array([g.labels[r] for r in rows])
            inputs = (np.asarray(g.x), a, rows)
            preds = scorer.forward_batch(inputs)
            _, d = smooth_l1_loss(preds, targets)
            analytic = scorer.backward_batch(d)
            numeric = finite_difference_grads(scorer, inputs, targets, smooth_l1_loss)
            assert_grads_close(analytic, numeric)

        gat = GatNetwork(np.random.default_rng(2))
        check(gat)
        trained, _ = train_gat_ae(graphs, epochs=10, seed=3, gat=gat)
        check(trained)

    def test_loss_trend_non_increasing_on_synthetic_data(self):
        rng = np.random.default_rng(4)
        graphs = []
        for _ in range(40):
            x = rng.uniform(0, 1, (3, 5))
            # target follows the mean feature, a learnable structural signal
            labels = {i: float(np.clip(x[i].mean(), 0, 1)) for i in range(3)}
            graphs.append(GraphRecord(x=x.tolist(), edges=[[0, 1], [0, 2]],
                                      labels=labels, visited=[0, 1, 2]))
        _, losses = train_gat_ae(graphs, epochs=10, seed=5)
        smooth = moving_average(losses, 10)
        assert smooth[-1] <= smooth[10]
        # and the tail never rises above the early plateau
        assert max(smooth[-20:]) <= max(smooth[10:30]) + 1e-6

    def test_unlabeled_graphs_rejected(self):
        graphs = [GraphRecord(x=[[0.0] * 5], edges=[], labels={}, visited=[])]
        with pytest.raises(EmptyDataset):
            train_gat_ae(graphs, epochs=1, seed=0)


class TestMovingAverage:
    def test_constant_series_unchanged(self):
        series = [0.3] * 20
        assert moving_average(series, 5) == pytest.approx(series)

    def test_window_one_is_identity(self):
        series = [0.1, 0.9, 0.4, 0.2]
        assert moving_average(series, 1) == pytest.approx(series)

    def test_step_series_ramps_at_slope_one_over_window(self):
        window = 4
        series = [0.0] * 8 + [1.0] * 8
        smoothed = moving_average(series, window)
        ramp = smoothed[8:12]
        diffs = [b - a for a, b in zip(ramp, ramp[1:])]
        assert diffs == pytest.approx([1 / window] * len(diffs))
        assert smoothed[12:] == pytest.approx([1.0] * 4)

    def test_length_preserved_and_prefix_uses_partial_window(self):
        series = [1.0, 2.0, 3.0]
        assert moving_average(series, 50) == pytest.approx([1.0, 1.5, 2.0])

    def test_commutes_with_affine_transform(self):
        rng = random.Random(0)
        series = [rng.random() for _ in range(40)]
        scaled = [3.0 * x + 2.0 for x in series]
        lhs = moving_average(scaled, 7)
        rhs = [3.0 * x + 2.0 for x in moving_average(series, 7)]
        assert lhs == pytest.approx(rhs)


class TestIncompleteBeta:
    def test_matches_scipy_on_grid(self):
        for a in (0.5, 1.0, 3.0, 10.0, 74.5):
            for b in (0.5, 2.0, 7.5, 74.5):
                for x in (0.01, 0.2, 0.5, 0.8, 0.99):
                    assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                        stats.beta.cdf(x, a, b), abs=1e-10)

    def test_f_survival_matches_scipy(self):
        for x in (0.3, 1.0, 1.7, 2.6, 5.0):
            for d1, d2 in ((3, 5), (10, 10), (149, 149), (40, 80)):
                assert f_survival(x, d1, d2) == pytest.approx(
                    stats.f.sf(x, d1, d2), abs=1e-10)


class TestVarianceAndFtest:
    def test_identical_series_give_unit_f_and_p_one(self):
        rng = random.Random(1)
        series = [rng.gauss(0, 1) for _ in range(100)]
        var_a, var_b, f_value, p = variance_and_ftest(series, series, 10)
        assert var_a == var_b
        assert f_value == 1.0
        assert p == pytest.approx(1.0, abs=1e-9)

    def test_constant_series_rejected(self):
        with pytest.raises(InsufficientData):
            variance_and_ftest([1.0] * 50, [1.0, 2.0] * 25, 0)

    def test_short_tails_rejected(self):
        with pytest.raises(InsufficientData):
            variance_and_ftest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 2)

    def test_variance_ratio_2p6_is_significant_at_n150(self):
        rng = random.Random(2)
        sigma_ratio = math.sqrt(2.1e-5 / 8.0e-6)
        a = [rng.gauss(0, 1) for _ in range(150)]
        b = [rng.gauss(0, sigma_ratio) for _ in range(150)]
        _, _, _, p = variance_and_ftest(a, b, 0)
        assert p < 0.05

    def test_swap_symmetry(self):
        rng = random.Random(3)
        a = [rng.gauss(0, 1.0) for _ in range(80)]
        b = [rng.gauss(0, 1.6) for _ in range(90)]
        var_a, var_b, f_ab, p_ab = variance_and_ftest(a, b, 5)
        var_b2, var_a2, f_ba, p_ba = variance_and_ftest(b, a, 5)
        assert (var_a, var_b) == (var_a2, var_b2)
        assert f_ba == pytest.approx(1.0 / f_ab, rel=1e-12)
        assert p_ab == pytest.approx(p_ba, abs=1e-12)

    def test_p_value_matches_scipy_two_sided(self):
        rng = random.Random(4)
        a = [rng.gauss(0, 1.0) for _ in range(60)]
        b = [rng.gauss(0, 1.4) for _ in range(70)]
        var_a, var_b, f_value, p = variance_and_ftest(a, b, 0)
        big = max(f_value, 1 / f_value)
        if var_a >= var_b:
            dfn, dfd = len(a) - 1, len(b) - 1
        else:
            dfn, dfd = len(b) - 1, len(a) - 1
        assert p == pytest.approx(min(1.0, 2 * stats.f.sf(big, dfn, dfd)), abs=1e-10)


class TestLossCsv:
    def test_columns_and_smoothing(self, tmp_path):
        series = [0.5, 0.4, 0.3, 0.2]
        path = tmp_path / "loss.csv"
        write_loss_csv(path, series, window=2)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "raw", "smoothed"]
        assert [float(r[1]) for r in rows[1:]] == pytest.approx(series)
        assert [float(r[2]) for r in rows[1:]] == pytest.approx(
            moving_average(series, 2))
