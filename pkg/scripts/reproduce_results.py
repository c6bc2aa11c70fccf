#!/usr/bin/env python3
"""Desk-scale evaluation run: loss analysis plus the ablation matches.

Builds models offline (or reuses --models), then plays the hybrid engine
against each ablation baseline under the requested node budgets, printing
win rates with binomial confidence intervals and writing CSV reports.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from amazons_hybrid import datagen, training
from amazons_hybrid.arena import AgentSpec, build_agent, run_match, emit_report
from amazons_hybrid.config import EngineConfig
from amazons_hybrid.model_io import ModelBundle


def build_bundle(out: Path, games: int, seed: int) -> ModelBundle:
    client = datagen.RatingClient(datagen.MockProvider(seed=seed, noise=0.1))
    config = EngineConfig(budget=12)
    datagen.generate_dataset(games, config, client, out / "dataset.jsonl",
                             seed=seed)
    records = datagen.read_dataset(out / "dataset.jsonl")
    uct = training.train_uct_ae(records, epochs=6, seed=seed)
    scorers = training.assemble_bundle(uct, ModelBundle.fresh(seed).gat)
    datagen.generate_dataset(max(games // 2, 1), config, client,
                             out / "dataset_stage2.jsonl", models=scorers,
                             seed=seed + 1_000_000,
                             graphs_path=out / "graphs.jsonl")
    graphs = datagen.read_graphs(out / "graphs.jsonl")
    gat, _ = training.train_gat_ae(graphs, epochs=10, seed=seed)

    move_tail, place_tail = uct.move_losses, uct.place_losses
    plateau = min(500, len(move_tail) - 3)
    var_move, var_place, f_value, p = training.variance_and_ftest(
        move_tail, place_tail, plateau)
    print(f"plateau loss variance: movement {var_move:.2e} vs placement "
          f"{var_place:.2e} (F={f_value:.2f}, p={p:.4f})")

    bundle = training.assemble_bundle(uct, gat)
    bundle.save(out / "bundle.bin")
    return bundle


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="runs/eval")
    parser.add_argument("--models", default=None, help="existing bundle to reuse")
    parser.add_argument("--games", type=int, default=100, help="games per pairing")
    parser.add_argument("--data-games", type=int, default=200)
    parser.add_argument("--budgets", type=int, nargs="+", default=[20, 30])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.models:
        bundle = ModelBundle.load(args.models)
    else:
        bundle = build_bundle(out, args.data_games, args.seed)

    for budget in args.budgets:
        for opponent in ("uct-ae", "genetic", "gat-ae", "random"):
            hybrid = build_agent(AgentSpec(kind="hybrid", node_budget=budget,
                                           seed=args.seed), models=bundle)
            rival = build_agent(AgentSpec(kind=opponent, node_budget=budget,
                                          seed=args.seed + 1), models=bundle)
            records, summary = run_match(hybrid, rival, args.games,
                                         seed=args.seed + budget)
            print(f"budget {budget}: hybrid vs {opponent}: "
                  f"{summary.wins_a}/{summary.n_games} "
                  f"(rate {summary.win_rate_a:.3f}, "
                  f"95% CI [{summary.ci_lo:.3f}, {summary.ci_hi:.3f}])")
            emit_report(records, summary, out / f"b{budget}_{opponent}",
                        label_a="hybrid", label_b=opponent)
    return 0


if __name__ == "__main__":
    sys.exit(main())
