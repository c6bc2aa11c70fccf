#!/usr/bin/env python3
"""End-to-end model build in two stages.

Stage 1 labels bootstrap self-play and trains the movement/placement
scorers.  Stage 2 replays self-play WITH the trained scorers to collect
re-ranker subgraphs whose features and values match what play time
produces, then trains the attention re-ranker on them.

Writes datasets, loss CSVs, and the final model bundle into --out-dir.
Offline by default (mock labeler); pass --provider api to label through a
chat endpoint (needs OPENAI_API_KEY).
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from amazons_hybrid import datagen, training
from amazons_hybrid.config import EngineConfig, ProviderConfig
from amazons_hybrid.model_io import ModelBundle


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="runs/models")
    parser.add_argument("--games", type=int, default=200)
    parser.add_argument("--graph-games", type=int, default=100)
    parser.add_argument("--budget", type=int, default=12)
    parser.add_argument("--uct-epochs", type=int, default=6)
    parser.add_argument("--gat-epochs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise", type=float, default=0.1)
    parser.add_argument("--provider", choices=["mock", "api"], default="mock")
    parser.add_argument("--cache", default=None, help="rating cache directory")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / "dataset.jsonl"
    graphs_path = out / "graphs.jsonl"

    if args.provider == "mock":
        provider = datagen.MockProvider(seed=args.seed, noise=args.noise)
    else:
        provider = datagen.HttpChatProvider(ProviderConfig())
    client = datagen.RatingClient(provider, cache_dir=args.cache)
    config = EngineConfig(budget=args.budget)

    t0 = time.perf_counter()
    written = datagen.generate_dataset(args.games, config, client, data_path,
                                       seed=args.seed)
    print(f"stage 1: labeled {written} plies over {args.games} games "
          f"in {time.perf_counter() - t0:.0f}s")

    records = datagen.read_dataset(data_path)
    t0 = time.perf_counter()
    uct = training.train_uct_ae(records, epochs=args.uct_epochs, seed=args.seed)
    scorers = training.assemble_bundle(uct, ModelBundle.fresh(args.seed).gat)
    print(f"stage 1: scorers trained in {time.perf_counter() - t0:.0f}s "
          f"({len(uct.move_losses)} iterations)")

    t0 = time.perf_counter()
    datagen.generate_dataset(args.graph_games, config, client,
                             out / "dataset_stage2.jsonl", models=scorers,
                             seed=args.seed + 1_000_000,
                             graphs_path=graphs_path)
    graphs = datagen.read_graphs(graphs_path)
    gat, gat_losses = training.train_gat_ae(graphs, epochs=args.gat_epochs,
                                            seed=args.seed)
    print(f"stage 2: re-ranker trained on {len(graphs)} graphs "
          f"in {time.perf_counter() - t0:.0f}s ({len(gat_losses)} iterations)")

    training.write_loss_csv(out / "movement_loss.csv", uct.move_losses)
    training.write_loss_csv(out / "placement_loss.csv", uct.place_losses)
    training.write_loss_csv(out / "gat_loss.csv", gat_losses)

    bundle = training.assemble_bundle(uct, gat)
    bundle_path = out / "bundle.bin"
    bundle.save(bundle_path)
    print(f"bundle saved to {bundle_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
