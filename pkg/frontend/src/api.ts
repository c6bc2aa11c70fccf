// Thin JSON client over the engine service; fetch is injectable for tests.

import type {
  AnalysisResponse,
  CreateGameResponse,
  EngineMoveResponse,
  GameSnapshot,
  MovePayload,
  StateJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    const data = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, data?.message ?? `HTTP ${resp.status}`);
    }
    return data as T;
  }

  createGame(engine: string, budget: number, humanColor: string, seed: number) {
    return this.call<CreateGameResponse>("POST", "/games", {
      engine, budget, human_color: humanColor, seed,
    });
  }

  getGame(id: string) {
    return this.call<GameSnapshot>("GET", `/games/${id}`);
  }

  postMove(id: string, move: MovePayload) {
    return this.call<{ state: StateJson }>("POST", `/games/${id}/move`, move);
  }

  engineMove(id: string) {
    return this.call<EngineMoveResponse>("POST", `/games/${id}/engine-move`);
  }

  analysis(id: string) {
    return this.call<AnalysisResponse>("GET", `/games/${id}/analysis`);
  }
}
