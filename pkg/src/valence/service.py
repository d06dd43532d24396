"""Session-oriented HTTP API for live training sessions.

Sessions are persisted as append-only event logs (one `<id>.events.jsonl`
file per session under the data directory) and are fully reconstructable by
replaying those logs: the random stream is derived from the stored seed, so
seed + action list determines every state.  Solved fronts are cached in
memory and on disk per (scenario hash, gamma, horizon).
"""

from __future__ import annotations

import json
import os
import random
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .assessment import (StepRecord, Trajectory, build_report,
                         report_to_document)
from .model import ScenarioModel, available_actions, is_terminal, step
from .scenario_io import BUILTIN_SCENARIOS, scenario_hash
from .solver import (SolveConfig, SolutionFront, pmovi, solution_from_document,
                     solution_to_json)

ACTIVE = "active"
FINISHED = "finished"

DEFAULT_GAMMA = 1.0
DEFAULT_HORIZON = 50


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _error(status: int, code: str, message: str, **details):
    raise HTTPException(status, {"code": code, "message": message,
                                 "details": details})


class Session:
    def __init__(self, sid: str, scenario: ScenarioModel, sha: str,
                 seed: int, gamma: float, horizon: int, reveal: bool,
                 created_at: str):
        self.id = sid
        self.scenario = scenario
        self.scenario_hash = sha
        self.seed = seed
        self.gamma = gamma
        self.horizon = horizon
        self.reveal = reveal
        self.created_at = created_at
        self.updated_at = created_at
        self.state = scenario.initial_state
        self.steps: list[StepRecord] = []
        self.status = ACTIVE
        self.outcome: Optional[str] = None
        self.rng = random.Random(seed)
        self.seq = 0
        self.idempotency: dict[str, dict] = {}
        self.report_cache: dict[str, str] = {}
        self.lock = threading.Lock()

    def apply(self, action: str) -> StepRecord:
        """Advance one step; caller holds the lock and has validated."""
        out = step(self.scenario, self.state, action, self.rng)
        record = StepRecord(len(self.steps), self.state, action,
                            out.alignment, out.next_state)
        self.steps.append(record)
        self.state = out.next_state
        if out.terminal is not None:
            self.status, self.outcome = FINISHED, out.terminal
        elif len(self.steps) >= self.horizon:
            self.status, self.outcome = FINISHED, "truncated"
        return record

    def available(self) -> list[str]:
        if self.status != ACTIVE:
            return []
        return available_actions(self.scenario, self.state)

    def trajectory(self) -> Trajectory:
        return Trajectory(self.scenario.name, self.scenario_hash, self.seed,
                          self.gamma, tuple(self.steps),
                          self.outcome or "truncated")


class FrontCache:
    """Solved fronts shared read-only, keyed by (hash, gamma, horizon)."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self._memory: dict[tuple, SolutionFront] = {}
        self._lock = threading.Lock()

    def get(self, scenario: ScenarioModel, sha: str, gamma: float,
            horizon: int) -> SolutionFront:
        key = (sha, gamma, horizon)
        with self._lock:
            if key in self._memory:
                return self._memory[key]
            path = self.directory / f"{sha[:16]}-g{gamma}-h{horizon}.front.json"
            if path.exists():
                solution = solution_from_document(
                    json.loads(path.read_text(encoding="utf-8")), scenario)
            else:
                solution = pmovi(scenario,
                                 SolveConfig(gamma=gamma, horizon=horizon),
                                 scenario_hash=sha)
                tmp = path.with_suffix(".tmp")
                tmp.write_text(solution_to_json(solution, scenario),
                               encoding="utf-8")
                os.replace(tmp, path)
            self._memory[key] = solution
            return solution


class SessionStore:
    """In-memory sessions backed by per-session append-only event logs."""

    def __init__(self, data_dir: Path, scenarios: dict[str, ScenarioModel],
                 hashes: dict[str, str]):
        self.data_dir = data_dir
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.scenarios = scenarios
        self.hashes = hashes
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        for path in sorted(self.data_dir.glob("*.events.jsonl")):
            session = self._replay(path)
            if session is not None:
                self.sessions[session.id] = session

    # -- persistence ---------------------------------------------------------

    def _log_path(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.events.jsonl"

    def _append_events(self, session: Session, events: list[dict]) -> None:
        """Write events for one session, flushed to disk before returning."""
        with open(self._log_path(session.id), "a", encoding="utf-8") as f:
            for event in events:
                session.seq += 1
                f.write(json.dumps({"session": session.id,
                                    "seq": session.seq, **event}) + "\n")
            f.flush()
            os.fsync(f.fileno())
        session.updated_at = events[-1]["at"]

    def _replay(self, path: Path) -> Optional[Session]:
        session = None
        last_seq = 0
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                break  # torn tail write from a crash; keep the prefix
            if event["seq"] <= last_seq:
                break
            last_seq = event["seq"]
            kind = event["kind"]
            payload = event["payload"]
            if kind == "created":
                scenario = self.scenarios.get(payload["scenario"])
                if scenario is None:
                    return None
                session = Session(
                    event["session"], scenario,
                    self.hashes[payload["scenario"]], payload["seed"],
                    payload["gamma"], payload["horizon"], payload["reveal"],
                    event["at"])
            elif kind == "action" and session is not None:
                record = session.apply(payload["action"])
                key = payload.get("idempotency_key")
                if key:
                    session.idempotency[key] = _step_view(session, record)
            # `finished` events carry no extra state: status is derived
            if session is not None:
                session.seq = last_seq
                session.updated_at = event["at"]
        return session

    # -- operations ----------------------------------------------------------

    def scenario(self, name: str) -> ScenarioModel:
        model = self.scenarios.get(name)
        if model is None:
            _error(404, "unknown-scenario", f"no scenario named {name!r}",
                   available=sorted(self.scenarios))
        return model

    def create(self, name: str, seed: Optional[int], gamma: float,
               horizon: int, reveal: bool) -> Session:
        scenario = self.scenario(name)
        try:
            SolveConfig(gamma=gamma, horizon=horizon)
        except ValueError as exc:
            _error(422, "bad-config", str(exc))
        if seed is None:
            seed = secrets.randbits(31)
        sid = secrets.token_urlsafe(16)
        session = Session(sid, scenario, self.hashes[name], seed, gamma,
                          horizon, reveal, _now())
        with self._lock:
            self.sessions[sid] = session
        self._append_events(session, [{
            "kind": "created", "at": session.created_at,
            "payload": {"scenario": name, "seed": seed, "gamma": gamma,
                        "horizon": horizon, "reveal": reveal}}])
        return session

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            _error(404, "unknown-session", f"no session {sid!r}")
        return session


def _step_view(session: Session, record: StepRecord) -> dict:
    view = {
        "session": session.id,
        "index": record.index,
        "action": record.action,
        "state": session.scenario.levels_of(record.next_state),
        "status": session.status,
        "outcome": session.outcome,
        "actions": session.available(),
    }
    if session.reveal or session.status == FINISHED:
        view["alignment"] = dict(zip(session.scenario.value_names,
                                     record.alignment))
    return view


def _session_view(session: Session) -> dict:
    scenario = session.scenario
    reveal_scores = session.reveal or session.status == FINISHED
    steps = []
    for record in session.steps:
        item = {"index": record.index, "action": record.action,
                "state": scenario.levels_of(record.state)}
        if reveal_scores:
            item["alignment"] = dict(zip(scenario.value_names,
                                         record.alignment))
        steps.append(item)
    return {
        "id": session.id,
        "scenario": scenario.name,
        "scenario_hash": session.scenario_hash,
        "seed": session.seed,
        "gamma": session.gamma,
        "horizon": session.horizon,
        "reveal": session.reveal,
        "status": session.status,
        "outcome": session.outcome,
        "state": scenario.levels_of(session.state),
        "actions": session.available(),
        "values": list(scenario.value_names),
        "steps": steps,
        "step_count": len(session.steps),
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }


class CreateSessionRequest(BaseModel):
    scenario: str
    seed: Optional[int] = None
    gamma: float = DEFAULT_GAMMA
    horizon: int = DEFAULT_HORIZON
    reveal: bool = False


class ActionRequest(BaseModel):
    action: str
    idempotency_key: Optional[str] = None
    # optimistic concurrency: reject unless this is the next step index
    expected_index: Optional[int] = None


def create_app(data_dir) -> FastAPI:
    data_dir = Path(data_dir)
    scenarios = {name: factory() for name, factory in
                 BUILTIN_SCENARIOS.items()}
    hashes = {name: scenario_hash(model)
              for name, model in scenarios.items()}
    store = SessionStore(data_dir, scenarios, hashes)
    fronts = FrontCache(data_dir / "fronts")
    app = FastAPI(title="valence", version="0.1.0")

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail), "details": {}}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request,
                               exc: RequestValidationError):
        return JSONResponse(status_code=422, content={
            "code": "invalid-request", "message": "request body is invalid",
            "details": {"errors": exc.errors()}})

    @app.get("/api/v1/scenarios")
    def list_scenarios():
        return [{
            "name": model.name,
            "hash": hashes[name],
            "variables": [{"name": v.name, "levels": list(v.levels)}
                          for v in model.variables],
            "actions": [a.name for a in model.actions],
            "values": list(model.value_names),
            "initial_state": model.levels_of(model.initial_state),
        } for name, model in sorted(scenarios.items())]

    @app.get("/api/v1/scenarios/{name}/front")
    def scenario_front(name: str, gamma: float = DEFAULT_GAMMA,
                       horizon: int = DEFAULT_HORIZON):
        model = store.scenario(name)
        try:
            SolveConfig(gamma=gamma, horizon=horizon)
        except ValueError as exc:
            _error(422, "bad-config", str(exc))
        solution = fronts.get(model, hashes[name], gamma, horizon)
        front = solution.front_at(model.initial_state)
        return {
            "scenario": model.name,
            "hash": hashes[name],
            "gamma": gamma,
            "horizon": horizon,
            "converged": solution.converged,
            "approximate": solution.approximate,
            "sweeps": solution.sweeps,
            "values": list(model.value_names),
            "front": [list(v) for v in front],
            "per_value_max": {
                value: max(v[k] for v in front)
                for k, value in enumerate(model.value_names)},
        }

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        session = store.create(body.scenario, body.seed, body.gamma,
                               body.horizon, body.reveal)
        return _session_view(session)

    @app.get("/api/v1/sessions/{sid}")
    def get_view(sid: str):
        return _session_view(store.get(sid))

    @app.post("/api/v1/sessions/{sid}/actions")
    def apply_action(sid: str, body: ActionRequest):
        session = store.get(sid)
        with session.lock:
            if body.idempotency_key and \
                    body.idempotency_key in session.idempotency:
                return session.idempotency[body.idempotency_key]
            if session.status != ACTIVE:
                _error(409, "session-finished",
                       f"session is finished ({session.outcome})")
            if body.expected_index is not None and \
                    body.expected_index != len(session.steps):
                _error(409, "step-conflict",
                       f"expected step {body.expected_index} but the next "
                       f"step is {len(session.steps)}",
                       next_index=len(session.steps))
            available = session.available()
            if body.action not in available:
                _error(422, "action-unavailable",
                       f"action {body.action!r} is not available",
                       available=available)
            record = session.apply(body.action)
            events = [{"kind": "action", "at": _now(), "payload": {
                "index": record.index, "action": record.action,
                "idempotency_key": body.idempotency_key}}]
            if session.status == FINISHED:
                events.append({"kind": "finished", "at": _now(),
                               "payload": {"outcome": session.outcome}})
            view = _step_view(session, record)
            store._append_events(session, events)
            if body.idempotency_key:
                session.idempotency[body.idempotency_key] = view
            return view

    @app.get("/api/v1/sessions/{sid}/report")
    def get_report(sid: str, weights: Optional[str] = None):
        session = store.get(sid)
        with session.lock:
            if session.status != FINISHED:
                _error(409, "session-active",
                       "report is only available once the session finishes")
            cache_key = weights or ""
            cached = session.report_cache.get(cache_key)
            if cached is None:
                preference = None
                if weights is not None:
                    try:
                        preference = tuple(float(w)
                                           for w in weights.split(","))
                    except ValueError:
                        _error(422, "bad-weights",
                               f"weights must be comma-separated numbers, "
                               f"got {weights!r}")
                    if len(preference) != len(session.scenario.value_names):
                        _error(422, "bad-weights",
                               f"expected "
                               f"{len(session.scenario.value_names)} weights")
                solution = fronts.get(session.scenario,
                                      session.scenario_hash, session.gamma,
                                      session.horizon)
                report = build_report(session.scenario, session.trajectory(),
                                      solution, preference=preference,
                                      expected_hash=session.scenario_hash)
                cached = json.dumps(
                    report_to_document(session.scenario, report))
                session.report_cache[cache_key] = cached
        return Response(content=cached, media_type="application/json")

    return app
