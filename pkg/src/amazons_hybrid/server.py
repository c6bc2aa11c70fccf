"""Small HTTP JSON service for interactive play and search inspection.

Stdlib http.server only; one lock per session serializes requests against
the same game while distinct sessions run concurrently.  Squares travel as
{"file": int, "rank": int}; errors as {"code": int, "message": str}.  An
optional append-only journal replays sessions after a crash.
"""

from __future__ import annotations

import json
import random
import secrets
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from . import arena, board, engine
from .board import WHITE, BoardState, GameStatus, Move, Square
from .model_io import ModelBundle


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def square_json(sq: Square) -> dict:
    return {"file": sq.file, "rank": sq.rank}


def square_from_json(obj) -> Square:
    try:
        f, r = int(obj["file"]), int(obj["rank"])
    except (TypeError, KeyError, ValueError):
        raise ApiError(422, "square must be {file, rank} integers") from None
    if not (0 <= f <= 9 and 0 <= r <= 9):
        raise ApiError(422, "square coordinates must be in 0..9")
    return Square(f, r)


def state_json(state: BoardState) -> dict:
    return {
        "grid": [[state.grid[r * 10 + f] for f in range(10)] for r in range(10)],
        "white": [square_json(sq) for sq in state.white],
        "black": [square_json(sq) for sq in state.black],
        "arrows": [square_json(sq) for sq in sorted(state.arrows)],
        "side_to_move": "white" if state.side_to_move == WHITE else "black",
        "turn": state.turn,
        "status": board.status(state).value,
    }


@dataclass
class GameSession:
    id: str
    state: BoardState
    agent: object
    engine_kind: str
    budget: int
    human_color: str
    seed: int
    history: list = field(default_factory=list)   # move notation strings
    lock: threading.Lock = field(default_factory=threading.Lock)
    rng: random.Random = None
    last_analysis: Optional[list] = None

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "engine": self.engine_kind,
            "budget": self.budget,
            "human_color": self.human_color,
            "state": state_json(self.state),
            "history": list(self.history),
            "status": board.status(self.state).value,
        }


class SessionStore:
    def __init__(self, models: ModelBundle, journal_path=None):
        self.models = models
        self.sessions: dict[str, GameSession] = {}
        self.lock = threading.Lock()
        self.journal_path = Path(journal_path) if journal_path else None
        self.journal_lock = threading.Lock()

    def _journal(self, event: dict) -> None:
        if not self.journal_path:
            return
        with self.journal_lock:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def create(self, engine_kind: str, budget: int, human_color: str,
               seed: int, session_id: Optional[str] = None,
               journal: bool = True) -> GameSession:
        if engine_kind not in arena.AGENT_KINDS or engine_kind == "llm":
            raise ApiError(422, f"unsupported engine kind {engine_kind!r}")
        if human_color not in ("white", "black"):
            raise ApiError(422, "human_color must be 'white' or 'black'")
        if budget < 1:
            raise ApiError(422, "budget must be >= 1")
        spec = arena.AgentSpec(kind=engine_kind, node_budget=budget, seed=seed)
        agent = arena.build_agent(spec, models=self.models)
        session = GameSession(
            id=session_id or secrets.token_hex(8),
            state=board.initial_state(), agent=agent, engine_kind=engine_kind,
            budget=budget, human_color=human_color, seed=seed,
            rng=random.Random(seed),
        )
        with self.lock:
            self.sessions[session.id] = session
        if journal:
            self._journal({"event": "create", "id": session.id,
                           "engine": engine_kind, "budget": budget,
                           "human_color": human_color, "seed": seed})
        return session

    def get(self, session_id: str) -> GameSession:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise ApiError(404, f"unknown game {session_id!r}")
        return session

    def apply_human_move(self, session: GameSession, mv: Move,
                         journal: bool = True) -> None:
        if board.status(session.state) is not GameStatus.ONGOING:
            raise ApiError(409, "game is already over")
        if not board.is_legal(session.state, mv):
            raise ApiError(409, f"illegal move {board.format_move(mv)}")
        session.state = board.apply_move(session.state, mv)
        session.history.append(board.format_move(mv))
        if journal:
            self._journal({"event": "move", "id": session.id,
                           "move": board.format_move(mv)})

    def engine_move(self, session: GameSession, journal: bool = True) -> dict:
        if board.status(session.state) is not GameStatus.ONGOING:
            raise ApiError(409, "game is already over")
        mv, source = session.agent.choose(session.state, session.rng)
        decision = getattr(session.agent, "last_decision", None)
        tree = getattr(session.agent, "last_tree", None)
        if decision is not None:
            session.last_analysis = engine.analysis_payload(decision)
        elif tree is not None:
            session.last_analysis = [dict(rec, gat_score=None) for rec in tree.dump()]
        session.state = board.apply_move(session.state, mv)
        session.history.append(board.format_move(mv))
        if journal:
            self._journal({"event": "engine-move", "id": session.id,
                           "move": board.format_move(mv)})
        summary = {
            "move": board.format_move(mv),
            "source": source,
            "from": square_json(mv.frm), "to": square_json(mv.to),
            "arrow": square_json(mv.arrow),
        }
        if decision is not None:
            summary["uct_value"] = decision.uct.value
            if decision.genetic is not None:
                summary["genetic_value"] = decision.genetic.value
        return summary

    def replay_journal(self) -> int:
        """Rebuild sessions from the journal file; returns events replayed."""
        if not self.journal_path or not self.journal_path.exists():
            return 0
        count = 0
        with open(self.journal_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                event = json.loads(line)
                count += 1
                if event["event"] == "create":
                    self.create(event["engine"], event["budget"],
                                event["human_color"], event["seed"],
                                session_id=event["id"], journal=False)
                else:
                    session = self.get(event["id"])
                    mv = board.parse_move(event["move"])
                    session.state = board.apply_move(session.state, mv)
                    session.history.append(event["move"])
        return count


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore = None
    static_dir: Optional[Path] = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._send(status, {"code": status, "message": message})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw)
        except ValueError:
            raise ApiError(422, "request body is not valid JSON") from None
        if not isinstance(data, dict):
            raise ApiError(422, "request body must be a JSON object")
        return data

    def do_OPTIONS(self):
        self._send(204, {})

    def do_GET(self):
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if parts[:1] == ["games"] and len(parts) == 2:
                session = self.store.get(parts[1])
                with session.lock:
                    self._send(200, session.snapshot())
                return
            if parts[:1] == ["games"] and len(parts) == 3 and parts[2] == "analysis":
                session = self.store.get(parts[1])
                with session.lock:
                    self._send(200, {"nodes": session.last_analysis or []})
                return
            if self._serve_static(parts):
                return
            raise ApiError(404, f"no route for GET {self.path}")
        except ApiError as exc:
            self._error(exc.status, exc.message)

    def _serve_static(self, parts) -> bool:
        if self.static_dir is None:
            return False
        rel = "/".join(parts) or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            return False
        body = target.read_bytes()
        ctype = {"html": "text/html", "js": "text/javascript", "css": "text/css",
                 "map": "application/json"}.get(target.suffix.lstrip("."),
                                                "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        return True

    def do_POST(self):
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if parts == ["games"]:
                data = self._body()
                session = self.store.create(
                    engine_kind=data.get("engine", "hybrid"),
                    budget=int(data.get("budget", 20)),
                    human_color=data.get("human_color", "white"),
                    seed=int(data.get("seed", 0)))
                self._send(200, {"id": session.id, "state": state_json(session.state),
                                 "human_color": session.human_color})
                return
            if parts[:1] == ["games"] and len(parts) == 3:
                session = self.store.get(parts[1])
                if parts[2] == "move":
                    data = self._body()
                    for key in ("from", "to", "arrow"):
                        if key not in data:
                            raise ApiError(422, f"missing field {key!r}")
                    mv = Move(square_from_json(data["from"]),
                              square_from_json(data["to"]),
                              square_from_json(data["arrow"]))
                    with session.lock:
                        self.store.apply_human_move(session, mv)
                        self._send(200, {"state": state_json(session.state)})
                    return
                if parts[2] == "engine-move":
                    with session.lock:
                        summary = self.store.engine_move(session)
                        self._send(200, {"decision": summary,
                                         "state": state_json(session.state)})
                    return
            raise ApiError(404, f"no route for POST {self.path}")
        except ApiError as exc:
            self._error(exc.status, exc.message)
        except (ValueError, TypeError) as exc:
            self._error(422, f"malformed request: {exc}")


def make_server(port: int, models: Optional[ModelBundle] = None,
                journal_path=None, static_dir=None,
                host: str = "127.0.0.1") -> ThreadingHTTPServer:
    store = SessionStore(models or ModelBundle.fresh(0), journal_path)
    store.replay_journal()
    handler = type("BoundHandler", (_Handler,), {
        "store": store,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    server = ThreadingHTTPServer((host, port), handler)
    server.store = store
    return server


def serve_forever(port: int, models: Optional[ModelBundle] = None,
                  journal_path=None, static_dir=None) -> None:
    server = make_server(port, models, journal_path, static_dir)
    print(f"serving on http://127.0.0.1:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
