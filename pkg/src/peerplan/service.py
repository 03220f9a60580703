"""Session-oriented HTTP API for running a live recruitment intervention.

A coordinator drives each session through three repeating activities:
interviewing roster members (queries), planning invitation stages, and
recording who attended. Every session is an append-only JSONL event file
under a data directory; the in-memory view is a pure fold over those events,
and each mutating handler persists (and fsyncs) its event before folding it
through the same code path replay uses. A restart therefore replays every
session to exactly the state clients already saw. Stage planning runs
solvers, but the chosen invitation set is part of the recorded event, so
replay never re-solves anything.

Only opaque tokens cross this API; any mapping to real people lives outside
the system.
"""
from __future__ import annotations

import os
import re
import secrets
import threading
import time
from dataclasses import dataclass, replace
from typing import Mapping

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import planner, sampler
from .events import event_line, make_event, parse_jsonl
from .harness import config_overrides_from_json
from .netgraph import ObservedNetwork, Roster
from .rng import stream_label, substream

DATA_DIR_ENV = "PEERPLAN_DATA_DIR"
HOST_ENV = "PEERPLAN_HOST"
PORT_ENV = "PEERPLAN_PORT"
ALLOW_ORIGINS_ENV = "PEERPLAN_ALLOW_ORIGINS"
DEFAULT_DATA_DIR = "./peerplan-data"

# creation-time fallbacks for the Monte Carlo budgets; an explicit config
# document always wins, and the resolved values are frozen into the session
# header so later environment changes cannot perturb a replay
_ENV_BUDGETS = (
    ("eval_samples", "PEERPLAN_EVAL_SAMPLES"),
    ("opt_samples", "PEERPLAN_OPT_SAMPLES"),
)

_SESSION_ID = re.compile(r"^[0-9a-f]{16}$")

STATUSES = ("collecting", "planning", "awaiting-attendance", "complete")


class ApiError(Exception):
    """Error carrying the wire shape {code, message, details[]}."""

    def __init__(self, http_status: int, code: str, message: str, details=()):
        super().__init__(message)
        self.http_status = http_status
        self.code = code
        self.message = message
        self.details = list(details)


class CreateSessionRequest(BaseModel):
    roster: list[str] = Field(min_length=1)
    config: dict = Field(default_factory=dict)


class QueryResultRequest(BaseModel):
    respondent: str
    neighbors: list[str] = Field(default_factory=list)


class AttendanceRequest(BaseModel):
    attended: list[str] = Field(default_factory=list)


@dataclass(frozen=True)
class SessionView:
    """One session's state, reconstructed purely by folding its event log.

    `pending_query` is the issued-but-unanswered interview target;
    `last_plan` caches the response of the stage plan whose attendance has
    not been posted yet (both make the corresponding endpoints idempotent).
    """

    session_id: str
    config: planner.InterventionConfig
    query: sampler.QuerySession
    pending_query: str | None = None
    plan: planner.InterventionState | None = None
    last_plan: dict | None = None
    status: str = "collecting"


def _now_ms() -> int:
    return int(time.time() * 1000)


def _settle_collection(view: SessionView) -> SessionView:
    """Move to planning the moment the interview campaign can go no further
    (budget spent, or nobody left to interview)."""
    if view.status != "collecting" or not view.query.exhausted:
        return view
    return replace(
        view, plan=planner.initial_state(view.query.observed), status="planning"
    )


def _session_from_header(session_id: str, header: Mapping) -> SessionView:
    try:
        roster = Roster(header["roster"])
    except ValueError as exc:
        raise ApiError(
            422, "invalid-config", str(exc),
            [{"field": "roster", "problem": str(exc)}],
        ) from exc
    try:
        overrides = config_overrides_from_json(header["config"])
        config = planner.default_config(
            len(roster),
            strategy=header["strategy"],
            seed=int(header["seed"]),
            **overrides,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ApiError(
            422, "invalid-config", f"bad config: {exc}",
            [{"field": "config", "problem": str(exc)}],
        ) from exc
    view = SessionView(
        session_id=session_id,
        config=config,
        query=sampler.new_session(roster, config.query_budget),
    )
    return _settle_collection(view)


def _plan_payload(event: Mapping) -> dict:
    return {
        "stage": event["stage"],
        "invited": list(event["invited"]),
        "result": event["result"],
        "worst_value": event["worst_value"],
        "worst_scenario": event["worst_scenario"],
        "scenario_values": event["scenario_values"],
    }


def _apply_event(view: SessionView, event: Mapping) -> SessionView:
    """The single state-transition function used by live handlers and replay."""
    kind = event.get("kind")
    if kind == "query":
        return replace(view, pending_query=event["node"])
    if kind == "query-result":
        node = view.query.observed.roster.index_of(event["node"])
        query = sampler.record(view.query, node, event["neighbors"])
        return _settle_collection(replace(view, query=query, pending_query=None))
    if kind == "plan":
        roster = view.plan.observed.roster
        invited = frozenset(roster.index_of(t) for t in event["invited"])
        plan = planner.apply_invitation(
            view.plan, invited, event["result"], event["stream"]
        )
        status = "complete" if event["result"] == "empty-pool" else "awaiting-attendance"
        return replace(view, plan=plan, last_plan=_plan_payload(event), status=status)
    if kind == "attendance":
        roster = view.plan.observed.roster
        plan = planner.record_attendance(
            view.plan, [roster.index_of(t) for t in event["attended"]]
        )
        status = "planning" if plan.stage <= view.config.num_stages else "complete"
        return replace(view, plan=plan, last_plan=None, status=status)
    raise ValueError(f"unknown event kind {kind!r}")


def _observed_payload(observed: ObservedNetwork) -> dict:
    roster = observed.roster
    return {
        "nodes": len(roster),
        "edges": len(observed.revealed),
        "queried": sorted(roster.token_of(v) for v in observed.queried),
    }


def _state_payload(view: SessionView) -> dict:
    plan = view.plan
    roster = view.query.observed.roster
    stage = plan.stage if plan is not None else 1
    if view.status == "complete":
        stages_left = 0
    else:
        stages_left = max(0, view.config.num_stages - (stage - 1))
    return {
        "session_id": view.session_id,
        "status": view.status,
        "strategy": view.config.strategy,
        "stage": stage,
        "num_stages": view.config.num_stages,
        "stage_budgets": list(view.config.stage_budgets),
        "committed_stages": [
            sorted(roster.token_of(v) for v in s)
            for s in (plan.committed_stages if plan else ())
        ],
        "invited_stages": [
            sorted(roster.token_of(v) for v in s)
            for s in (plan.invited_stages if plan else ())
        ],
        "pending": sorted(roster.token_of(v) for v in plan.pending) if plan else [],
        "observed": _observed_payload(view.query.observed),
        "remaining": {
            "queries": (
                max(0, view.query.budget - view.query.issued)
                if view.status == "collecting"
                else 0
            ),
            "stages": stages_left,
        },
    }


class SessionStore:
    """Disk-backed registry: one JSONL file and one writer lock per session."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._views: dict[str, SessionView] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.jsonl")

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def ids(self) -> list[str]:
        on_disk = (
            name[: -len(".jsonl")]
            for name in os.listdir(self.data_dir)
            if name.endswith(".jsonl")
        )
        return sorted(set(on_disk) | set(self._views))

    def create(self, roster: list[str], config_doc: Mapping) -> SessionView:
        config_doc = dict(config_doc)
        strategy = config_doc.pop("strategy", "change")
        seed = config_doc.pop("seed", 0)
        for key, env in _ENV_BUDGETS:
            raw = os.environ.get(env)
            if raw is not None and key not in config_doc:
                config_doc[key] = int(raw)
        session_id = secrets.token_hex(8)
        header = {
            "roster": list(roster),
            "strategy": strategy,
            "seed": seed,
            "config": config_doc,
        }
        view = _session_from_header(session_id, header)
        event = make_event("session-created", _now_ms(), **header)
        with self.lock(session_id):
            self._persist(session_id, event)
            self._views[session_id] = view
        return view

    def load(self, session_id: str) -> SessionView:
        """Cached view, or a full replay of the session's event log. Call
        with the session lock held."""
        view = self._views.get(session_id)
        if view is not None:
            return view
        for event in self.read_events(session_id):
            if view is None:
                if event.get("kind") != "session-created":
                    raise ApiError(
                        500, "corrupt-log",
                        f"session {session_id!r} log does not start with its creation event",
                    )
                view = _session_from_header(session_id, event)
            else:
                view = _apply_event(view, event)
        if view is None:
            raise ApiError(404, "not-found", f"no session {session_id!r}")
        self._views[session_id] = view
        return view

    def read_events(self, session_id: str) -> list[dict]:
        if not _SESSION_ID.match(session_id):
            raise ApiError(404, "not-found", f"no session {session_id!r}")
        try:
            with open(self._path(session_id), "r", encoding="utf-8") as fh:
                return parse_jsonl(fh.read())
        except OSError as exc:
            raise ApiError(404, "not-found", f"no session {session_id!r}") from exc

    def append(self, view: SessionView, event: dict) -> SessionView:
        # fold first so a bad event persists nothing; publish to the cache
        # only after the line is safely on disk
        new_view = _apply_event(view, event)
        self._persist(view.session_id, event)
        self._views[view.session_id] = new_view
        return new_view

    def _persist(self, session_id: str, event: dict) -> None:
        with open(self._path(session_id), "a", encoding="utf-8") as fh:
            fh.write(event_line(event) + "\n")
            fh.flush()
            os.fsync(fh.fileno())


def create_app(data_dir: str | None = None) -> FastAPI:
    resolved = data_dir or os.environ.get(DATA_DIR_ENV) or DEFAULT_DATA_DIR
    store = SessionStore(resolved)
    app = FastAPI(title="peerplan session service")
    app.state.store = store

    origins = os.environ.get(ALLOW_ORIGINS_ENV, "*")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[o.strip() for o in origins.split(",") if o.strip()],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    def _api_error(request, exc: ApiError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    def _body_error(request, exc: RequestValidationError):
        details = [
            {
                "field": ".".join(
                    str(loc) for loc in err.get("loc", ()) if loc != "body"
                ),
                "problem": err.get("msg", "invalid"),
            }
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=422,
            content={
                "code": "validation",
                "message": "invalid request body",
                "details": details,
            },
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        view = store.create(body.roster, body.config)
        return {"session_id": view.session_id, "status": view.status}

    @app.get("/sessions")
    def list_sessions():
        sessions = []
        for session_id in store.ids():
            with store.lock(session_id):
                try:
                    view = store.load(session_id)
                except ApiError:
                    continue
            state = _state_payload(view)
            sessions.append(
                {
                    "session_id": session_id,
                    "status": state["status"],
                    "strategy": state["strategy"],
                    "stage": state["stage"],
                    "num_stages": state["num_stages"],
                    "nodes": state["observed"]["nodes"],
                }
            )
        return {"sessions": sessions}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        with store.lock(session_id):
            return _state_payload(store.load(session_id))

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str):
        with store.lock(session_id):
            store.load(session_id)  # 404 on unknown ids
            return {"events": store.read_events(session_id)}

    @app.get("/sessions/{session_id}/next-query")
    def next_query(session_id: str):
        with store.lock(session_id):
            view = store.load(session_id)
            if view.status == "planning":
                # interview campaign is over; steer the coordinator onward
                return {
                    "done": True,
                    "node": None,
                    "phase": None,
                    "status": view.status,
                    "remaining": 0,
                }
            if view.status != "collecting":
                raise ApiError(
                    409, "conflict", f"cannot issue queries while {view.status}"
                )
            if view.pending_query is None:
                rng = substream(view.config.seed, "query", view.query.issued)
                target = sampler.next_query(view.query, rng)
                token = view.query.observed.roster.token_of(target)
                event = make_event(
                    "query", _now_ms(), node=token, phase=view.query.phase
                )
                view = store.append(view, event)
            return {
                "done": False,
                "node": view.pending_query,
                "phase": view.query.phase,
                "status": view.status,
                "remaining": view.query.budget - view.query.issued,
            }

    @app.post("/sessions/{session_id}/query-result")
    def post_query_result(session_id: str, body: QueryResultRequest):
        with store.lock(session_id):
            view = store.load(session_id)
            if view.status != "collecting":
                raise ApiError(
                    409, "conflict", f"cannot record interviews while {view.status}"
                )
            if view.pending_query is None:
                raise ApiError(
                    409, "conflict", "no outstanding query; call next-query first"
                )
            if body.respondent != view.pending_query:
                raise ApiError(
                    409,
                    "respondent-mismatch",
                    f"expected a result for {view.pending_query!r}, "
                    f"got {body.respondent!r}",
                    [{"field": "respondent", "problem": f"expected {view.pending_query!r}"}],
                )
            known_before = len(view.query.observed.roster)
            event = make_event(
                "query-result",
                _now_ms(),
                node=body.respondent,
                neighbors=list(body.neighbors),
            )
            view = store.append(view, event)
            roster = view.query.observed.roster
            return {
                "status": view.status,
                "new_members": list(roster.tokens[known_before:]),
                "observed": _observed_payload(view.query.observed),
                "remaining": (
                    view.query.budget - view.query.issued
                    if view.status == "collecting"
                    else 0
                ),
            }

    @app.post("/sessions/{session_id}/plan-stage")
    def plan_stage(session_id: str):
        with store.lock(session_id):
            view = store.load(session_id)
            if view.last_plan is not None:
                return {**view.last_plan, "status": view.status}
            if view.status != "planning":
                raise ApiError(409, "conflict", f"cannot plan while {view.status}")
            t = view.plan.stage
            stream = stream_label(view.config.seed, "plan", t)
            rng = substream(view.config.seed, "plan", t)
            result = planner.plan_stage(view.plan, view.config, rng, stream)
            worst_value = worst_scenario = scenario_values = None
            solution = result.diagnostics.get("solution")
            if solution is not None:
                worst_value = float(solution.worst_value)
                worst_scenario = float(solution.worst_scenario)
                scenario_values = [float(v) for v in solution.scenario_values]
            roster = view.plan.observed.roster
            event = make_event(
                "plan",
                _now_ms(),
                stage=t,
                invited=sorted(roster.token_of(v) for v in result.invited),
                result=result.status,
                worst_value=worst_value,
                worst_scenario=worst_scenario,
                scenario_values=scenario_values,
                stream=stream,
            )
            view = store.append(view, event)
            return {**view.last_plan, "status": view.status}

    @app.post("/sessions/{session_id}/attendance")
    def post_attendance(session_id: str, body: AttendanceRequest):
        with store.lock(session_id):
            view = store.load(session_id)
            if view.status != "awaiting-attendance":
                raise ApiError(
                    409, "conflict", f"cannot record attendance while {view.status}"
                )
            roster = view.plan.observed.roster
            invited = {roster.token_of(v) for v in view.plan.pending}
            attended = sorted(set(body.attended))
            offenders = sorted(set(attended) - invited)
            if offenders:
                raise ApiError(
                    422,
                    "not-invited",
                    f"attendance recorded for ids never invited this stage: {offenders}",
                    [{"field": "attended", "problem": f"{t!r} was not invited"}
                     for t in offenders],
                )
            event = make_event(
                "attendance", _now_ms(), stage=view.plan.stage, attended=attended
            )
            view = store.append(view, event)
            return _state_payload(view)

    return app
