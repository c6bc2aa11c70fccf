// Wire types for the engine's HTTP JSON API.

export interface SquareJson {
  file: number;
  rank: number;
}

export type Color = "white" | "black";
export type GameState = "ongoing" | "white_wins" | "black_wins";

// Cell codes in state.grid[rank][file]: 0 empty, 1 white, 2 black, 3 arrow.
export const EMPTY = 0;
export const WHITE = 1;
export const BLACK = 2;
export const ARROW = 3;

export interface StateJson {
  grid: number[][];
  white: SquareJson[];
  black: SquareJson[];
  arrows: SquareJson[];
  side_to_move: Color;
  turn: number;
  status: GameState;
}

export interface CreateGameResponse {
  id: string;
  state: StateJson;
  human_color: Color;
}

export interface GameSnapshot {
  id: string;
  engine: string;
  budget: number;
  human_color: Color;
  state: StateJson;
  history: string[];
  status: GameState;
}

export interface MovePayload {
  from: SquareJson;
  to: SquareJson;
  arrow: SquareJson;
}

export interface EngineDecision {
  move: string;
  source: string;
  from: SquareJson;
  to: SquareJson;
  arrow: SquareJson;
  uct_value?: number;
  genetic_value?: number;
}

export interface EngineMoveResponse {
  decision: EngineDecision;
  state: StateJson;
}

export interface AnalysisNode {
  id: number;
  parent: number | null;
  kind: "head" | "move";
  move: string | null;
  height: number;
  visits: number;
  obj: number;
  measures: number[] | null;
  gat_score: number | null;
}

export interface AnalysisResponse {
  nodes: AnalysisNode[];
}

export interface ApiErrorBody {
  code: number;
  message: string;
}
