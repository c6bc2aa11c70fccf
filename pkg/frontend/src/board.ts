// Board geometry helpers shared by the turn flow and the renderer.
// The server grid is indexed grid[rank][file]; all access funnels through
// these functions so the convention lives in one place.

import { EMPTY, WHITE, BLACK } from "./types.js";
import type { Color, SquareJson, StateJson } from "./types.js";

export const FILES = "abcdefghij";

export function sameSquare(a: SquareJson, b: SquareJson): boolean {
  return a.file === b.file && a.rank === b.rank;
}

export function cellAt(state: StateJson, sq: SquareJson): number {
  return state.grid[sq.rank][sq.file];
}

export function squareName(sq: SquareJson): string {
  return `${FILES[sq.file]}${sq.rank + 1}`;
}

export function parseSquareName(text: string): SquareJson {
  const file = FILES.indexOf(text[0]);
  const rank = parseInt(text.slice(1), 10) - 1;
  if (file < 0 || !(rank >= 0 && rank <= 9)) {
    throw new Error(`bad square ${text}`);
  }
  return { file, rank };
}

// "d1-d7/g7" -> from, to, arrow
export function parseMoveNotation(notation: string): {
  from: SquareJson; to: SquareJson; arrow: SquareJson;
} {
  const [fromTo, arrow] = notation.split("/");
  const [from, to] = fromTo.split("-");
  return {
    from: parseSquareName(from),
    to: parseSquareName(to),
    arrow: parseSquareName(arrow),
  };
}

export function pieceColorAt(state: StateJson, sq: SquareJson): Color | null {
  const cell = cellAt(state, sq);
  if (cell === WHITE) return "white";
  if (cell === BLACK) return "black";
  return null;
}

const DIRECTIONS: Array<[number, number]> = [
  [0, 1], [1, 1], [1, 0], [1, -1], [0, -1], [-1, -1], [-1, 0], [-1, 1],
];

/**
 * Queen-reachable squares from `from` on the server grid; `ignore` is
 * treated as empty (the vacated square during arrow selection).  These are
 * exactly the rules the server validates with, so highlights derived here
 * never exceed the server's legal targets.
 */
export function rayTargets(
  state: StateJson, from: SquareJson, ignore?: SquareJson,
): SquareJson[] {
  const out: SquareJson[] = [];
  for (const [df, dr] of DIRECTIONS) {
    let f = from.file + df;
    let r = from.rank + dr;
    while (f >= 0 && f < 10 && r >= 0 && r < 10) {
      const sq = { file: f, rank: r };
      const blocked = state.grid[r][f] !== EMPTY && !(ignore && sameSquare(sq, ignore));
      if (blocked) break;
      out.push(sq);
      f += df;
      r += dr;
    }
  }
  return out;
}
