// Three-click turn state machine: pick a piece, pick its destination,
// pick the arrow square.  The flow only stages a move; the server remains
// the sole authority and a 409 resets the phase via reset().

import { pieceColorAt, rayTargets, sameSquare } from "./board.js";
import type { Color, MovePayload, SquareJson, StateJson } from "./types.js";

export type Phase = "pick-piece" | "pick-destination" | "pick-arrow";

export interface FlowView {
  phase: Phase;
  from: SquareJson | null;
  to: SquareJson | null;
  highlights: SquareJson[];
}

export type ClickOutcome =
  | { kind: "ignored" }
  | { kind: "updated" }
  | { kind: "submit"; move: MovePayload };

export class TurnFlow {
  private phase: Phase = "pick-piece";
  private from: SquareJson | null = null;
  private to: SquareJson | null = null;

  constructor(private readonly humanColor: Color) {}

  reset(): void {
    this.phase = "pick-piece";
    this.from = null;
    this.to = null;
  }

  view(state: StateJson | null): FlowView {
    let highlights: SquareJson[] = [];
    if (state) {
      if (this.phase === "pick-destination" && this.from) {
        highlights = rayTargets(state, this.from);
      } else if (this.phase === "pick-arrow" && this.from && this.to) {
        highlights = rayTargets(state, this.to, this.from);
      }
    }
    return { phase: this.phase, from: this.from, to: this.to, highlights };
  }

  /** Handle a board click; clicking an invalid square is a no-op. */
  click(state: StateJson, sq: SquareJson): ClickOutcome {
    if (state.status !== "ongoing" || state.side_to_move !== this.humanColor) {
      return { kind: "ignored" };
    }
    if (this.phase === "pick-piece") {
      if (pieceColorAt(state, sq) !== this.humanColor) {
        return { kind: "ignored" };
      }
      this.from = sq;
      this.phase = "pick-destination";
      return { kind: "updated" };
    }
    if (this.phase === "pick-destination") {
      if (pieceColorAt(state, sq) === this.humanColor) {
        // reselect a different piece
        this.from = sq;
        return { kind: "updated" };
      }
      if (!this.from || !rayTargets(state, this.from).some((t) => sameSquare(t, sq))) {
        return { kind: "ignored" };
      }
      this.to = sq;
      this.phase = "pick-arrow";
      return { kind: "updated" };
    }
    // pick-arrow: the vacated origin square is a valid target
    if (!this.from || !this.to) {
      this.reset();
      return { kind: "ignored" };
    }
    const targets = rayTargets(state, this.to, this.from);
    if (!targets.some((t) => sameSquare(t, sq))) {
      return { kind: "ignored" };
    }
    const move = { from: this.from, to: this.to, arrow: sq };
    this.reset();
    return { kind: "submit", move };
  }
}

export function describePhase(phase: Phase): string {
  switch (phase) {
    case "pick-piece": return "Select one of your amazons";
    case "pick-destination": return "Select its destination";
    case "pick-arrow": return "Select the arrow square";
  }
}
