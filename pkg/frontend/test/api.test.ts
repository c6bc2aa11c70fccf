import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient, ApiError } from "../src/api.js";
import { initialState, jsonResponse } from "./fixtures.js";

function recordingFetch(responses: Array<[number, unknown]>) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const queue = [...responses];
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const [status, body] = queue.shift() ?? [500, { code: 500, message: "empty" }];
    return jsonResponse(status, body);
  };
  return { calls, fetchFn };
}

test("createGame posts the configuration and returns the state", async () => {
  const { calls, fetchFn } = recordingFetch([
    [200, { id: "abc", state: initialState(), human_color: "white" }],
  ]);
  const api = new ApiClient("", fetchFn);
  const created = await api.createGame("hybrid", 20, "white", 7);
  assert.equal(created.id, "abc");
  assert.equal(calls[0].url, "/games");
  assert.equal(calls[0].init?.method, "POST");
  assert.deepEqual(JSON.parse(String(calls[0].init?.body)), {
    engine: "hybrid", budget: 20, human_color: "white", seed: 7,
  });
});

test("postMove sends square objects on the wire", async () => {
  const { calls, fetchFn } = recordingFetch([[200, { state: initialState() }]]);
  const api = new ApiClient("", fetchFn);
  await api.postMove("abc", {
    from: { file: 3, rank: 0 }, to: { file: 3, rank: 6 }, arrow: { file: 6, rank: 6 },
  });
  assert.equal(calls[0].url, "/games/abc/move");
  const body = JSON.parse(String(calls[0].init?.body));
  assert.deepEqual(body.from, { file: 3, rank: 0 });
  assert.deepEqual(body.arrow, { file: 6, rank: 6 });
});

test("server errors surface as ApiError with code and message", async () => {
  const { fetchFn } = recordingFetch([
    [409, { code: 409, message: "illegal move d1-d8/a1" }],
  ]);
  const api = new ApiClient("", fetchFn);
  await assert.rejects(
    () => api.postMove("abc", {
      from: { file: 3, rank: 0 }, to: { file: 3, rank: 7 }, arrow: { file: 0, rank: 0 },
    }),
    (err: unknown) => {
      assert.ok(err instanceof ApiError);
      assert.equal(err.status, 409);
      assert.match(err.message, /illegal/);
      return true;
    },
  );
});

test("engineMove and analysis hit the documented endpoints", async () => {
  const decision = {
    move: "d10-d5/d1", source: "genetic-gat",
    from: { file: 3, rank: 9 }, to: { file: 3, rank: 4 }, arrow: { file: 3, rank: 0 },
  };
  const { calls, fetchFn } = recordingFetch([
    [200, { decision, state: initialState() }],
    [200, { nodes: [] }],
  ]);
  const api = new ApiClient("", fetchFn);
  const resp = await api.engineMove("xyz");
  assert.equal(resp.decision.source, "genetic-gat");
  await api.analysis("xyz");
  assert.deepEqual(calls.map((c) => c.url),
    ["/games/xyz/engine-move", "/games/xyz/analysis"]);
});

test("base prefix is prepended to every path", async () => {
  const { calls, fetchFn } = recordingFetch([[200, {
    id: "1", engine: "hybrid", budget: 20, human_color: "white",
    state: initialState(), history: [], status: "ongoing",
  }]]);
  const api = new ApiClient("http://localhost:8000", fetchFn);
  await api.getGame("1");
  assert.equal(calls[0].url, "http://localhost:8000/games/1");
});
