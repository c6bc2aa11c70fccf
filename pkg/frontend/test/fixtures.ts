// Test fixtures mirroring the server's JSON wire format.

import type { SquareJson, StateJson } from "../src/types.js";

export function emptyGrid(): number[][] {
  return Array.from({ length: 10 }, () => Array.from({ length: 10 }, () => 0));
}

export function stateFromPieces(
  white: SquareJson[], black: SquareJson[], arrows: SquareJson[] = [],
  sideToMove: "white" | "black" = "white", turn = 0,
): StateJson {
  const grid = emptyGrid();
  for (const sq of white) grid[sq.rank][sq.file] = 1;
  for (const sq of black) grid[sq.rank][sq.file] = 2;
  for (const sq of arrows) grid[sq.rank][sq.file] = 3;
  return {
    grid, white, black, arrows,
    side_to_move: sideToMove, turn, status: "ongoing",
  };
}

export function initialState(): StateJson {
  return stateFromPieces(
    [{ file: 3, rank: 0 }, { file: 6, rank: 0 }, { file: 0, rank: 3 }, { file: 9, rank: 3 }],
    [{ file: 0, rank: 6 }, { file: 9, rank: 6 }, { file: 3, rank: 9 }, { file: 6, rank: 9 }],
  );
}

export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  } as unknown as Response;
}
