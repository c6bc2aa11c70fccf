import assert from "node:assert/strict";
import { test } from "node:test";

import {
  parseMoveNotation,
  parseSquareName,
  pieceColorAt,
  rayTargets,
  squareName,
} from "../src/board.js";
import { initialState, stateFromPieces } from "./fixtures.js";

test("square names round-trip, including rank 10", () => {
  assert.equal(squareName({ file: 0, rank: 0 }), "a1");
  assert.equal(squareName({ file: 9, rank: 9 }), "j10");
  assert.deepEqual(parseSquareName("j10"), { file: 9, rank: 9 });
  assert.deepEqual(parseSquareName("d1"), { file: 3, rank: 0 });
  assert.throws(() => parseSquareName("k3"));
});

test("move notation parses into three squares", () => {
  const mv = parseMoveNotation("d1-d7/g7");
  assert.deepEqual(mv.from, { file: 3, rank: 0 });
  assert.deepEqual(mv.to, { file: 3, rank: 6 });
  assert.deepEqual(mv.arrow, { file: 6, rank: 6 });
});

test("piece colors read from the grid", () => {
  const state = initialState();
  assert.equal(pieceColorAt(state, { file: 3, rank: 0 }), "white");
  assert.equal(pieceColorAt(state, { file: 0, rank: 6 }), "black");
  assert.equal(pieceColorAt(state, { file: 5, rank: 5 }), null);
});

test("a lone centred piece reaches 35 squares", () => {
  // the single black piece on a10 sits on none of the queen rays from e5
  const state = stateFromPieces([{ file: 4, rank: 4 }], [{ file: 0, rank: 9 }]);
  const targets = rayTargets(state, { file: 4, rank: 4 });
  assert.equal(targets.length, 35);
});

test("rays stop at arrows and pieces", () => {
  const state = stateFromPieces(
    [{ file: 0, rank: 0 }], [{ file: 0, rank: 3 }], [{ file: 2, rank: 0 }],
  );
  const names = rayTargets(state, { file: 0, rank: 0 }).map(squareName);
  assert.ok(names.includes("a2"));
  assert.ok(names.includes("a3"));
  assert.ok(!names.includes("a4"));   // black piece
  assert.ok(names.includes("b1"));
  assert.ok(!names.includes("c1"));   // arrow
});

test("ignore square is traversable during arrow selection", () => {
  const state = stateFromPieces([{ file: 4, rank: 4 }], [{ file: 9, rank: 9 }]);
  const withIgnore = rayTargets(state, { file: 4, rank: 6 }, { file: 4, rank: 4 });
  assert.ok(withIgnore.some((t) => t.file === 4 && t.rank === 4));
  assert.ok(withIgnore.some((t) => t.file === 4 && t.rank === 2));
});
