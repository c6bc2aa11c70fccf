#!/usr/bin/env python3
"""Optional online experiment: the hybrid engine versus an LLM opponent.

Needs a chat-completion endpoint and OPENAI_API_KEY in the environment;
results depend on the remote model and are NOT part of the test suite.
Every LLM move goes through the legality guard with re-prompting, and a
rating cache directory avoids re-billing identical prompts.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from amazons_hybrid.arena import AgentSpec, build_agent, emit_report, run_match
from amazons_hybrid.config import ProviderConfig
from amazons_hybrid.datagen import HttpChatProvider
from amazons_hybrid.model_io import ModelBundle


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--models", required=True, help="trained bundle file")
    parser.add_argument("--games", type=int, default=200)
    parser.add_argument("--budgets", type=int, nargs="+", default=[30, 50])
    parser.add_argument("--model-name", default="gpt-4o-mini")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="runs/llm_match")
    args = parser.parse_args()

    bundle = ModelBundle.load(args.models)
    provider = HttpChatProvider(ProviderConfig(model_name=args.model_name))
    out = Path(args.out_dir)

    for budget in args.budgets:
        hybrid = build_agent(AgentSpec(kind="hybrid", node_budget=budget,
                                       seed=args.seed), models=bundle)
        llm = build_agent(AgentSpec(kind="llm"), completer=provider)
        records, summary = run_match(hybrid, llm, args.games,
                                     seed=args.seed + budget)
        print(f"budget {budget}: hybrid vs {args.model_name}: "
              f"{summary.wins_a}/{summary.n_games} "
              f"(rate {summary.win_rate_a:.3f}, "
              f"95% CI [{summary.ci_lo:.3f}, {summary.ci_hi:.3f}])")
        emit_report(records, summary, out / f"b{budget}",
                    label_a="hybrid", label_b=args.model_name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
