"""HTTP game service.

Exposes the two refutation games over a small JSON API so that a browser
client (or curl) can play against the engine.  Sessions live in process
memory; every rational number crosses the wire as a string "p/q".

Endpoints:

* ``POST /api/sessions``            create a session, returns a snapshot
* ``GET  /api/sessions``            list session summaries
* ``GET  /api/sessions/{id}``       snapshot
* ``POST /api/sessions/{id}/moves`` submit a move (422 carries slack rows)
* ``GET  /api/sessions/{id}/hint``  engine-suggested move for the human
* ``GET  /api/sessions/{id}/history`` full event log
* ``GET  /api/sessions/{id}/events`` server-sent event stream
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .classical import behavioural_equivalence
from .games import (
    BudgetDefender,
    ClassicalFormulaSpoiler,
    ClosureDefender,
    Concede,
    Game,
    IllegalMove,
    MetricFormulaSpoiler,
    RandomClassicalDefender,
    RandomClassicalSpoiler,
    RandomMetricDefender,
    RandomMetricSpoiler,
    Step1,
    Step2,
    Step3,
    Step4,
)
from .metric import MetricStep2Check, behavioural_distance
from .classical import Step2Check
from .model import RefusalError, System
from .parser import ParseError, parse_rational, parse_system

SPOILER_PHASES = ("step1", "step3")
DEFENDER_PHASES = ("step2", "step4")


class SessionCreate(BaseModel):
    system: str
    kind: str = "classical"
    x: str
    y: str
    eps: str | None = None
    role: str = "both"
    mode: str = "perlam"
    seed: int = 0
    params: dict[str, str] | None = None
    name: str = ""


class MoveIn(BaseModel):
    type: str
    s: str | None = None
    state: str | None = None
    pick: int | None = None
    by: str | None = None
    p1: dict[str, str] | None = None
    p2: dict[str, str] | None = None


@dataclass
class Session:
    id: str
    sys: System
    game: Game
    role: str
    spoiler: Any
    defender: Any
    seed: int
    events: list[dict] = field(default_factory=list)
    cond: threading.Condition = field(default_factory=threading.Condition)

    def push(self, event: dict) -> None:
        with self.cond:
            event = dict(event, seq=len(self.events))
            self.events.append(event)
            self.cond.notify_all()


SESSIONS: dict[str, Session] = {}
_LOCK = threading.Lock()


def _rational(text: str, what: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail={"message": f"bad {what}: {exc}"}) from exc


def _decode_predicate(raw: dict[str, str] | None, kind: str, what: str) -> dict:
    if raw is None:
        raise HTTPException(status_code=422, detail={"message": f"move needs {what}"})
    out = {}
    for state, text in raw.items():
        value = _rational(text, f"{what}[{state}]")
        if kind == "classical":
            if value not in (0, 1):
                raise HTTPException(
                    status_code=422,
                    detail={"message": f"{what}[{state}] must be 0 or 1"},
                )
            out[state] = int(value)
        else:
            out[state] = value
    return out


def _encode_predicate(p: dict | None) -> dict[str, str] | None:
    if p is None:
        return None
    return {state: str(value) for state, value in p.items()}


def _whose_turn(phase: str) -> str | None:
    if phase in SPOILER_PHASES:
        return "spoiler"
    if phase in DEFENDER_PHASES:
        return "defender"
    return None


def snapshot(session: Session) -> dict:
    game = session.game
    turn = _whose_turn(game.phase)
    return {
        "id": session.id,
        "name": session.sys.name,
        "kind": game.kind,
        "mode": game.mode,
        "role": session.role,
        "states": list(game.sys.states),
        "top": str(game.sys.top),
        "phase": game.phase,
        "turn": turn,
        "your_move": game.phase != "over" and (session.role == "both" or turn == session.role),
        "round": game.round,
        "x": game.x,
        "y": game.y,
        "eps": str(game.eps) if game.eps is not None else None,
        "s": game.s,
        "t": game.t,
        "p1": _encode_predicate(game.p1),
        "p2": _encode_predicate(game.p2),
        "pick": game.pick,
        "challenge": game.challenge,
        "winner": game.winner,
        "reason": game.reason,
        "moves": len(session.events),
    }


def _engine_sides(role: str) -> set[str]:
    if role == "both":
        return set()
    return {"spoiler", "defender"} - {role}


def _strategy_move(session: Session, side: str):
    game = session.game
    strat = session.spoiler if side == "spoiler" else session.defender
    if game.phase == "step1":
        return strat.step1(game)
    if game.phase == "step2":
        return strat.step2(game)
    if game.phase == "step3":
        return strat.step3(game)
    return strat.step4(game)


def _record(session: Session, by: str, move) -> None:
    game = session.game
    entry = {
        "round": game.round,
        "phase": game.phase,
        "by": by,
        "move": _move_json(move),
    }
    game_over_before = game.phase == "over"
    game.apply(move)
    if not game_over_before:
        if isinstance(move, Step4) and hasattr(session.spoiler, "observe_step4"):
            session.spoiler.observe_step4(game)
        entry["snapshot"] = snapshot(session)
        session.push(entry)


def _move_json(move) -> dict:
    if isinstance(move, Step1):
        return {"type": "step1", "s": move.s, "p1": _encode_predicate(move.p1)}
    if isinstance(move, Step2):
        return {"type": "step2", "p2": _encode_predicate(move.p2)}
    if isinstance(move, Step3):
        return {"type": "step3", "pick": move.pick, "state": move.state}
    if isinstance(move, Step4):
        return {"type": "step4", "state": move.state}
    return {"type": "concede", "by": move.by}


def _advance_engine(session: Session) -> None:
    """Let engine-controlled sides move until it is a human's turn."""
    game = session.game
    engine = _engine_sides(session.role)
    guard = 0
    while game.phase != "over" and _whose_turn(game.phase) in engine and guard < 64:
        guard += 1
        side = _whose_turn(game.phase)
        if game.phase == "step2" and not game.defender_can_reply():
            game.declare("spoiler", "defender has no admissible reply")
            session.push({"round": game.round, "phase": "over", "by": "engine", "move": None,
                          "snapshot": snapshot(session)})
            return
        if game.phase == "step3" and not game.step3_options():
            game.declare("defender", "spoiler cannot challenge")
            session.push({"round": game.round, "phase": "over", "by": "engine", "move": None,
                          "snapshot": snapshot(session)})
            return
        if game.phase == "step4" and not game.step4_options():
            game.declare("spoiler", "no admissible answer")
            session.push({"round": game.round, "phase": "over", "by": "engine", "move": None,
                          "snapshot": snapshot(session)})
            return
        move = _strategy_move(session, side)
        if move is None:
            move = Concede(by=side)
        _record(session, side, move)


def _build_strategies(sys_: System, body: SessionCreate):
    if body.kind == "classical":
        eq = behavioural_equivalence(sys_)
        if eq.equivalent(body.x, body.y):
            spoiler = RandomClassicalSpoiler(sys_, body.seed)
        else:
            spoiler = ClassicalFormulaSpoiler(sys_, body.x, body.y)
        defender = ClosureDefender(sys_, equivalence=eq)
    else:
        dist = behavioural_distance(sys_)
        if dist.value(body.x, body.y) > 0:
            spoiler = MetricFormulaSpoiler(sys_, body.x, body.y, distance=dist)
        else:
            spoiler = RandomMetricSpoiler(sys_, body.seed)
        defender = BudgetDefender(sys_, distance=dist)
    return spoiler, defender


def create_app(frontend: str | None = None) -> FastAPI:
    app = FastAPI(title="coalgame service")

    @app.post("/api/sessions")
    def create_session(body: SessionCreate):
        if body.kind not in ("classical", "metric"):
            raise HTTPException(status_code=422, detail={"message": "kind must be classical or metric"})
        if body.role not in ("spoiler", "defender", "both"):
            raise HTTPException(status_code=422, detail={"message": "role must be spoiler, defender or both"})
        params = {}
        for name, text in (body.params or {}).items():
            params[name] = _rational(text, f"param {name}")
        try:
            sys_ = parse_system(body.system, params=params, name=body.name)
        except ParseError as exc:
            raise HTTPException(status_code=422, detail={"message": str(exc)}) from exc
        for state in (body.x, body.y):
            if state not in sys_.alpha:
                raise HTTPException(status_code=422, detail={"message": f"unknown state '{state}'"})
        eps = None
        if body.kind == "metric":
            if body.eps is None:
                raise HTTPException(status_code=422, detail={"message": "quantitative game needs eps"})
            eps = _rational(body.eps, "eps")
        try:
            game = Game(sys_, body.kind, body.x, body.y, eps=eps, mode=body.mode)
            spoiler, defender = _build_strategies(sys_, body)
        except RefusalError as exc:
            raise HTTPException(status_code=422, detail={"message": str(exc)}) from exc
        session = Session(
            id=uuid.uuid4().hex[:12],
            sys=sys_,
            game=game,
            role=body.role,
            spoiler=spoiler,
            defender=defender,
            seed=body.seed,
        )
        with _LOCK:
            SESSIONS[session.id] = session
        session.push({"round": 1, "phase": "step1", "by": "service", "move": None,
                      "snapshot": snapshot(session)})
        with session.cond:
            _advance_engine(session)
        return snapshot(session)

    @app.get("/api/sessions")
    def list_sessions():
        with _LOCK:
            sessions = list(SESSIONS.values())
        return [
            {
                "id": s.id,
                "name": s.sys.name,
                "kind": s.game.kind,
                "role": s.role,
                "phase": s.game.phase,
                "round": s.game.round,
                "winner": s.game.winner,
            }
            for s in sessions
        ]

    def _get(session_id: str) -> Session:
        with _LOCK:
            session = SESSIONS.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail={"message": "no such session"})
        return session

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return snapshot(_get(session_id))

    @app.post("/api/sessions/{session_id}/moves")
    def post_move(session_id: str, body: MoveIn):
        session = _get(session_id)
        game = session.game
        if game.phase == "over":
            raise HTTPException(status_code=409, detail={"message": "game is over"})
        turn = _whose_turn(game.phase)
        if session.role != "both" and turn != session.role:
            raise HTTPException(status_code=409, detail={"message": f"it is the {turn}'s turn"})
        move = _decode_move(body, game)
        try:
            _record(session, turn, move)
        except IllegalMove as exc:
            raise HTTPException(status_code=422, detail=_illegal_detail(exc)) from exc
        _advance_engine(session)
        return snapshot(session)

    @app.get("/api/sessions/{session_id}/hint")
    def get_hint(session_id: str):
        session = _get(session_id)
        game = session.game
        if game.phase == "over":
            raise HTTPException(status_code=409, detail={"message": "game is over"})
        turn = _whose_turn(game.phase)
        if session.role != "both" and turn != session.role:
            raise HTTPException(status_code=409, detail={"message": f"it is the {turn}'s turn"})
        move = _strategy_move(session, turn)
        if move is None:
            return {"move": None, "note": "the engine would concede here"}
        return {"move": _move_json(move), "note": None}

    @app.get("/api/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = _get(session_id)
        with session.cond:
            return {"events": list(session.events)}

    @app.get("/api/sessions/{session_id}/events")
    def get_events(session_id: str, since: int = 0):
        session = _get(session_id)

        def stream():
            index = since
            yield "retry: 2000\n\n"
            while True:
                with session.cond:
                    while index >= len(session.events):
                        over = session.game.phase == "over"
                        if over:
                            return
                        notified = session.cond.wait(timeout=15.0)
                        if not notified:
                            break
                    batch = session.events[index:]
                if not batch:
                    yield ": keepalive\n\n"
                    continue
                for event in batch:
                    index += 1
                    yield f"event: update\ndata: {json.dumps(event)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    if frontend:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend, html=True), name="frontend")

    return app


def _decode_move(body: MoveIn, game: Game):
    kind = game.kind
    if body.type == "step1":
        if body.s is None:
            raise HTTPException(status_code=422, detail={"message": "step1 needs s"})
        return Step1(s=body.s, p1=_decode_predicate(body.p1, kind, "p1"))
    if body.type == "step2":
        return Step2(p2=_decode_predicate(body.p2, kind, "p2"))
    if body.type == "step3":
        if body.pick not in (1, 2) or body.state is None:
            raise HTTPException(status_code=422, detail={"message": "step3 needs pick (1 or 2) and state"})
        return Step3(pick=body.pick, state=body.state)
    if body.type == "step4":
        if body.state is None:
            raise HTTPException(status_code=422, detail={"message": "step4 needs state"})
        return Step4(state=body.state)
    if body.type == "concede":
        by = body.by or _whose_turn(game.phase) or "spoiler"
        return Concede(by=by)
    raise HTTPException(status_code=422, detail={"message": f"unknown move type {body.type!r}"})


def _illegal_detail(exc: IllegalMove) -> dict:
    detail: dict = {"message": str(exc)}
    check = exc.check
    if isinstance(check, MetricStep2Check):
        detail["slack"] = [
            {"gamma": row.gamma, "lhs": str(row.lhs), "rhs": str(row.rhs), "slack": str(row.slack)}
            for row in check.rows
        ]
    elif isinstance(check, Step2Check):
        detail["failures"] = list(check.failures)
    return detail


app = create_app()


def run_server(host: str = "127.0.0.1", port: int = 8000, frontend: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(frontend=frontend), host=host, port=port, log_level="warning")
