"""Command-line entry points.

Every subcommand accepts --config FILE (plain ``key = value`` lines) whose
entries fill any flag not given explicitly; built-in defaults apply last.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import arena as arena_mod
from . import board, datagen, engine, server, training
from .config import EngineConfig, ProviderConfig, parse_config_file
from .model_io import ModelBundle

DEFAULTS = {
    "datagen": {"games": 200, "provider": "mock", "seed": 0, "budget": 12,
                "noise": 0.1, "graphs": None, "cache": None, "models": None,
                "movement": "genetic", "placement": "weighted-random",
                "graphs_per_game": 8},
    "train-uct-ae": {"epochs": 2, "seed": 0, "loss_dir": None},
    "train-gat-ae": {"epochs": 2, "seed": 0, "loss_dir": None},
    "arena": {"games": 200, "budget": 20, "seed": 0, "models": None,
              "out": None},
    "serve": {"port": 8000, "models": None, "journal": None, "static": None},
    "selfplay": {"budget": 20, "seed": 0, "games": 1, "models": None},
    "analyze": {"side": "white", "turn": None, "budget": 20, "seed": 0,
                "models": None, "dump": False},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliUsageError(message)


class CliUsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="amazons-hybrid",
                     description="Hybrid search engine for the Game of the Amazons.")
    sub = parser.add_subparsers(dest="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value config file merged under explicit flags")
        p.add_argument("--seed", type=int)
        return p

    p = add("datagen", "generate a labeled self-play dataset")
    p.add_argument("--games", type=int)
    p.add_argument("--provider", choices=["mock", "api"])
    p.add_argument("--out", required=True)
    p.add_argument("--graphs")
    p.add_argument("--budget", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--cache")
    p.add_argument("--models")
    p.add_argument("--movement", choices=["genetic", "uct"])
    p.add_argument("--placement", choices=["weighted-random", "tree"])
    p.add_argument("--graphs-per-game", type=int, dest="graphs_per_game")

    p = add("train-uct-ae", "train the movement/placement scorers")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="bundle file to write")
    p.add_argument("--epochs", type=int)
    p.add_argument("--loss-dir", dest="loss_dir")

    p = add("train-gat-ae", "train the graph re-ranker into a bundle")
    p.add_argument("--graphs", required=True)
    p.add_argument("--models", required=True, help="bundle file to update")
    p.add_argument("--epochs", type=int)
    p.add_argument("--loss-dir", dest="loss_dir")

    p = add("arena", "agent-vs-agent match")
    p.add_argument("--a", dest="agent_a", choices=arena_mod.AGENT_KINDS, required=True)
    p.add_argument("--b", dest="agent_b", choices=arena_mod.AGENT_KINDS, required=True)
    p.add_argument("--games", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--models")
    p.add_argument("--out", help="directory for CSV reports")

    p = add("serve", "run the HTTP JSON service")
    p.add_argument("--port", type=int)
    p.add_argument("--models")
    p.add_argument("--journal")
    p.add_argument("--static", help="directory of UI files to serve at /")

    p = add("selfplay", "engine-vs-engine games, move log on stdout")
    p.add_argument("--budget", type=int)
    p.add_argument("--games", type=int)
    p.add_argument("--models")

    p = add("analyze", "one engine turn for a given position")
    p.add_argument("--grid", required=True, help="file holding the 10-line digit grid")
    p.add_argument("--side", choices=["white", "black"])
    p.add_argument("--turn", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--models")
    p.add_argument("--dump", action="store_true", default=None,
                   help="include the full tree dump in the output")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    file_values = {}
    if getattr(args, "config", None):
        file_values = parse_config_file(args.config)
    defaults = dict(DEFAULTS.get(args.command, {}))
    defaults.setdefault("seed", 0)
    for key, value in vars(args).items():
        if value is not None:
            continue
        if key in file_values:
            default = defaults.get(key)
            raw = file_values[key]
            if isinstance(default, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            else:
                value = raw
        elif key in defaults:
            value = defaults[key]
        setattr(args, key, value)
    return args


def _load_models(path, seed: int) -> ModelBundle:
    if path:
        return ModelBundle.load(path)
    return ModelBundle.fresh(seed)


def _cmd_datagen(args) -> int:
    if args.games < 1:
        raise CliUsageError("--games must be >= 1")
    if args.provider == "mock":
        provider = datagen.MockProvider(seed=args.seed, noise=args.noise)
    else:
        provider = datagen.HttpChatProvider(ProviderConfig())
    client = datagen.RatingClient(provider, cache_dir=args.cache)
    models = _load_models(args.models, args.seed)
    config = EngineConfig(budget=args.budget)
    written = datagen.generate_dataset(
        args.games, config, client, args.out, models=models, seed=args.seed,
        graphs_path=args.graphs, graphs_per_game=args.graphs_per_game,
        movement=args.movement, placement=args.placement)
    print(f"wrote {written} records to {args.out}")
    return 0


def _cmd_train_uct_ae(args) -> int:
    records = datagen.read_dataset(args.data)
    result = training.train_uct_ae(records, epochs=args.epochs, seed=args.seed)
    bundle = training.assemble_bundle(result, ModelBundle.fresh(args.seed).gat)
    bundle.save(args.out)
    if args.loss_dir:
        out = Path(args.loss_dir)
        out.mkdir(parents=True, exist_ok=True)
        training.write_loss_csv(out / "movement_loss.csv", result.move_losses)
        training.write_loss_csv(out / "placement_loss.csv", result.place_losses)
    print(f"trained on {len(records)} records "
          f"({len(result.move_losses)} iterations); bundle saved to {args.out}")
    return 0


def _cmd_train_gat_ae(args) -> int:
    graphs = datagen.read_graphs(args.graphs)
    bundle = ModelBundle.load(args.models)
    gat, losses = training.train_gat_ae(graphs, epochs=args.epochs, seed=args.seed)
    bundle.gat = gat
    bundle.save(args.models)
    if args.loss_dir:
        out = Path(args.loss_dir)
        out.mkdir(parents=True, exist_ok=True)
        training.write_loss_csv(out / "gat_loss.csv", losses)
    print(f"trained re-ranker on {len(graphs)} graphs "
          f"({len(losses)} iterations); bundle updated at {args.models}")
    return 0


def _cmd_arena(args) -> int:
    if args.games < 1:
        raise CliUsageError("--games must be >= 1")
    models = _load_models(args.models, args.seed)
    spec_a = arena_mod.AgentSpec(kind=args.agent_a, node_budget=args.budget, seed=args.seed)
    spec_b = arena_mod.AgentSpec(kind=args.agent_b, node_budget=args.budget, seed=args.seed)
    agent_a = arena_mod.build_agent(spec_a, models=models)
    agent_b = arena_mod.build_agent(spec_b, models=models)
    records, summary = arena_mod.run_match(agent_a, agent_b, args.games, seed=args.seed)
    print(f"{args.agent_a} vs {args.agent_b}: {summary.wins_a}/{summary.n_games} "
          f"(win rate {summary.win_rate_a:.3f}, 95% CI "
          f"[{summary.ci_lo:.3f}, {summary.ci_hi:.3f}])")
    if args.out:
        paths = arena_mod.emit_report(records, summary, args.out,
                                      label_a=args.agent_a, label_b=args.agent_b)
        for path in paths:
            print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    models = _load_models(args.models, args.seed)
    server.serve_forever(args.port, models, args.journal, args.static)
    return 0


def _cmd_selfplay(args) -> int:
    models = _load_models(args.models, args.seed)
    config = EngineConfig(budget=args.budget)
    for game in range(args.games):
        rng = random.Random(f"selfplay:{args.seed}:{game}")
        state = board.initial_state()
        ply = 0
        while board.status(state) is board.GameStatus.ONGOING:
            decision = engine.play_turn(state, models, config, rng)
            mover = "white" if state.side_to_move == board.WHITE else "black"
            print(f"game {game} ply {ply} {mover} "
                  f"{board.format_move(decision.chosen)} [{decision.source}]")
            state = board.apply_move(state, decision.chosen)
            ply += 1
        print(f"game {game} result {board.status(state).value} after {ply} plies")
    return 0


def _cmd_analyze(args) -> int:
    grid_text = Path(args.grid).read_text(encoding="utf-8")
    side = board.WHITE if args.side == "white" else board.BLACK
    state = board.state_from_grid(grid_text, side_to_move=side, turn=args.turn)
    models = _load_models(args.models, args.seed)
    config = EngineConfig(budget=args.budget)
    decision = engine.play_turn(state, models, config, random.Random(args.seed))
    payload = {
        "move": board.format_move(decision.chosen),
        "source": decision.source,
        "uct": {"move": board.format_move(decision.uct.move),
                "value": decision.uct.value},
        "genetic": None if decision.genetic is None else {
            "move": board.format_move(decision.genetic.move),
            "value": decision.genetic.value},
    }
    if args.dump:
        payload["nodes"] = engine.analysis_payload(decision)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "datagen": _cmd_datagen,
    "train-uct-ae": _cmd_train_uct_ae,
    "train-gat-ae": _cmd_train_gat_ae,
    "arena": _cmd_arena,
    "serve": _cmd_serve,
    "selfplay": _cmd_selfplay,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 2
        args = _merge_config(args)
        return _COMMANDS[args.command](args)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
