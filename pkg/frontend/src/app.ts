// DOM wiring: renders server state, drives the three-click turn flow, and
// paints the analysis overlay.  All game state comes from the last server
// response; the client never advances a position on its own.

import { ApiClient, ApiError } from "./api.js";
import { cellAt, sameSquare, squareName } from "./board.js";
import { bestBySquare, formatEntry, overlayEntries } from "./overlay.js";
import { TurnFlow, describePhase } from "./turnFlow.js";
import { ARROW, BLACK, WHITE } from "./types.js";
import type {
  AnalysisNode, Color, EngineDecision, SquareJson, StateJson,
} from "./types.js";

const api = new ApiClient("");

interface Ui {
  gameId: string | null;
  humanColor: Color;
  state: StateJson | null;
  flow: TurnFlow;
  lastDecision: EngineDecision | null;
  analysis: AnalysisNode[];
  overlayOn: boolean;
  pending: boolean;
}

const ui: Ui = {
  gameId: null,
  humanColor: "white",
  state: null,
  flow: new TurnFlow("white"),
  lastDecision: null,
  analysis: [],
  overlayOn: false,
  pending: false,
};

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 2600);
}

function setPending(pending: boolean): void {
  ui.pending = pending;
  el<HTMLButtonElement>("new-game").disabled = pending;
  el<HTMLButtonElement>("engine-move").disabled = pending;
}

function statusLine(): string {
  if (!ui.state) return "No game yet.";
  if (ui.state.status === "white_wins") return "White wins.";
  if (ui.state.status === "black_wins") return "Black wins.";
  const turn = ui.state.side_to_move === ui.humanColor
    ? describePhase(ui.flow.view(ui.state).phase)
    : "Engine to move";
  return `Turn ${ui.state.turn} | ${ui.state.side_to_move} to move | ${turn}`;
}

function render(): void {
  const boardEl = el<HTMLDivElement>("board");
  boardEl.textContent = "";
  el<HTMLDivElement>("status").textContent = statusLine();
  const source = ui.lastDecision
    ? `${ui.lastDecision.move} [${ui.lastDecision.source}]`
    : "-";
  el<HTMLSpanElement>("last-engine").textContent = source;
  if (!ui.state) return;
  const view = ui.flow.view(ui.state);
  const last = ui.lastDecision;
  const overlay = ui.overlayOn
    ? bestBySquare(overlayEntries(ui.analysis))
    : new Map();
  for (let rank = 9; rank >= 0; rank--) {
    for (let file = 0; file < 10; file++) {
      const sq: SquareJson = { file, rank };
      const cell = document.createElement("div");
      cell.className = "cell " + ((file + rank) % 2 === 0 ? "dark" : "light");
      const value = cellAt(ui.state, sq);
      if (value === WHITE) cell.classList.add("white-piece");
      if (value === BLACK) cell.classList.add("black-piece");
      if (value === ARROW) cell.classList.add("arrow");
      if (view.from && sameSquare(view.from, sq)) cell.classList.add("selected");
      if (view.to && sameSquare(view.to, sq)) cell.classList.add("selected");
      if (view.highlights.some((t) => sameSquare(t, sq))) {
        cell.classList.add("highlight");
      }
      if (last) {
        if (sameSquare(last.from, sq)) cell.classList.add("last-from");
        if (sameSquare(last.to, sq)) cell.classList.add("last-to");
        if (sameSquare(last.arrow, sq)) cell.classList.add("last-arrow");
      }
      const entry = overlay.get(`${file},${rank}`);
      if (entry) {
        const tag = document.createElement("span");
        tag.className = "overlay-tag";
        tag.textContent = `${entry.visits}|${entry.obj.toFixed(2)}`;
        tag.title = formatEntry(entry);
        cell.appendChild(tag);
      }
      cell.dataset.square = squareName(sq);
      cell.addEventListener("click", () => onCellClick(sq));
      boardEl.appendChild(cell);
    }
  }
}

async function refreshAnalysis(): Promise<void> {
  if (!ui.gameId) return;
  try {
    const payload = await api.analysis(ui.gameId);
    ui.analysis = payload.nodes;
  } catch {
    ui.analysis = [];
  }
}

async function onCellClick(sq: SquareJson): Promise<void> {
  if (!ui.state || !ui.gameId || ui.pending) return;
  const outcome = ui.flow.click(ui.state, sq);
  if (outcome.kind === "updated") {
    render();
    return;
  }
  if (outcome.kind !== "submit") return;
  setPending(true);
  try {
    const resp = await api.postMove(ui.gameId, outcome.move);
    ui.state = resp.state;
    render();
    await engineReply();
  } catch (err) {
    ui.flow.reset();
    toast(err instanceof ApiError ? err.message : `network error: ${err}`);
  } finally {
    setPending(false);
    render();
  }
}

async function engineReply(): Promise<void> {
  if (!ui.gameId || !ui.state || ui.state.status !== "ongoing") return;
  if (ui.state.side_to_move === ui.humanColor) return;
  const resp = await api.engineMove(ui.gameId);
  ui.lastDecision = resp.decision;
  ui.state = resp.state;
  await refreshAnalysis();
}

async function newGame(): Promise<void> {
  const engine = el<HTMLSelectElement>("engine-kind").value;
  const budget = parseInt(el<HTMLSelectElement>("budget").value, 10);
  const seed = parseInt(el<HTMLInputElement>("seed").value, 10) || 0;
  ui.humanColor = el<HTMLSelectElement>("human-color").value as Color;
  ui.flow = new TurnFlow(ui.humanColor);
  ui.lastDecision = null;
  ui.analysis = [];
  setPending(true);
  try {
    const created = await api.createGame(engine, budget, ui.humanColor, seed);
    ui.gameId = created.id;
    ui.state = created.state;
    render();
    await engineReply();
  } catch (err) {
    toast(err instanceof ApiError ? err.message : `network error: ${err}`);
  } finally {
    setPending(false);
    render();
  }
}

export function start(): void {
  el<HTMLButtonElement>("new-game").addEventListener("click", () => void newGame());
  el<HTMLButtonElement>("engine-move").addEventListener("click", async () => {
    if (!ui.gameId || ui.pending) return;
    setPending(true);
    try {
      await engineReply();
    } catch (err) {
      toast(err instanceof ApiError ? err.message : `network error: ${err}`);
    } finally {
      setPending(false);
      render();
    }
  });
  el<HTMLInputElement>("overlay-toggle").addEventListener("change", (ev) => {
    ui.overlayOn = (ev.target as HTMLInputElement).checked;
    render();
  });
  render();
}

start();
