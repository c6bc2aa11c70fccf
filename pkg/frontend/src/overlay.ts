// Analysis overlay: one entry per first-layer candidate of the last
// search, anchored at the origin square of its action.  Values come from
// the payload verbatim; nothing is recomputed client-side.

import { parseMoveNotation } from "./board.js";
import type { AnalysisNode, SquareJson } from "./types.js";

export interface OverlayEntry {
  nodeId: number;
  square: SquareJson;       // origin of the candidate action
  move: string;
  visits: number;
  obj: number;
  gatScore: number | null;
}

export function overlayEntries(nodes: AnalysisNode[]): OverlayEntry[] {
  const out: OverlayEntry[] = [];
  for (const node of nodes) {
    if (node.kind !== "move" || node.height !== 2 || !node.move) {
      continue;
    }
    out.push({
      nodeId: node.id,
      square: parseMoveNotation(node.move).from,
      move: node.move,
      visits: node.visits,
      obj: node.obj,
      gatScore: node.gat_score,
    });
  }
  return out;
}

/** Pick the strongest entry per destination square for compact rendering. */
export function bestBySquare(entries: OverlayEntry[]): Map<string, OverlayEntry> {
  const best = new Map<string, OverlayEntry>();
  for (const entry of entries) {
    const key = `${entry.square.file},${entry.square.rank}`;
    const seen = best.get(key);
    if (!seen || entry.obj > seen.obj) {
      best.set(key, entry);
    }
  }
  return best;
}

export function formatEntry(entry: OverlayEntry): string {
  const gat = entry.gatScore === null ? "-" : entry.gatScore.toFixed(2);
  return `${entry.move} n=${entry.visits} obj=${entry.obj.toFixed(2)} gat=${gat}`;
}
