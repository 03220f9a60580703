import numpy as np
import pytest
from fastapi.testclient import TestClient

from peerplan import service

STAR = {
    "h": ["a", "b", "c", "d"],
    "a": ["h"], "b": ["h"], "c": ["h"], "d": ["h"],
}
TWO_TRIANGLES = {
    "a": ["b", "c"], "b": ["a", "c"], "c": ["a", "b"],
    "d": ["e", "f"], "e": ["d", "f"], "f": ["d", "e"],
}


@pytest.fixture
def app_factory(tmp_path):
    def make(subdir="data"):
        return service.create_app(data_dir=str(tmp_path / subdir))
    return make


@pytest.fixture
def client(app_factory):
    return TestClient(app_factory())


def create(client, roster, **config):
    r = client.post("/sessions", json={"roster": roster, "config": config})
    assert r.status_code == 201, r.text
    return r.json()["session_id"]


def answer_all(client, sid, graph):
    while True:
        nq = client.get(f"/sessions/{sid}/next-query").json()
        if nq["done"]:
            return
        node = nq["node"]
        r = client.post(
            f"/sessions/{sid}/query-result",
            json={"respondent": node, "neighbors": graph.get(node, [])},
        )
        assert r.status_code == 200, r.text


def dc_star_session(client, **config):
    base = dict(strategy="dc", stage_budgets=[1, 1], query_budget=2, q=1.0, seed=7)
    base.update(config)
    sid = create(client, ["h", "a", "b", "c", "d"], **base)
    answer_all(client, sid, STAR)
    return sid


class TestCreate:
    def test_fresh_session_is_collecting(self, client):
        sid = create(client, ["a", "b", "c", "d", "e"])
        state = client.get(f"/sessions/{sid}").json()
        assert state["status"] == "collecting"
        assert state["stage"] == 1
        assert state["committed_stages"] == []
        assert state["observed"] == {"nodes": 5, "edges": 0, "queried": []}
        assert state["remaining"]["queries"] == 1  # ceil(0.2 * 5)

    def test_duplicate_roster_tokens(self, client):
        r = client.post("/sessions", json={"roster": ["a", "b", "a"]})
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "invalid-config"
        assert body["details"]

    def test_missing_roster(self, client):
        r = client.post("/sessions", json={})
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "validation"
        assert any(d["field"] == "roster" for d in body["details"])

    def test_unknown_strategy(self, client):
        r = client.post(
            "/sessions", json={"roster": ["a", "b"], "config": {"strategy": "psychic"}}
        )
        assert r.status_code == 422
        assert r.json()["code"] == "invalid-config"

    def test_unknown_config_key(self, client):
        r = client.post(
            "/sessions", json={"roster": ["a", "b"], "config": {"wat": 1}}
        )
        assert r.status_code == 422

    def test_oversized_stage_budgets(self, client):
        r = client.post(
            "/sessions", json={"roster": ["a", "b"], "config": {"stage_budgets": [3]}}
        )
        assert r.status_code == 422

    def test_env_budget_defaults(self, app_factory, monkeypatch):
        monkeypatch.setenv("PEERPLAN_EVAL_SAMPLES", "123")
        app = app_factory("env")
        c = TestClient(app)
        sid = create(c, list("abcde"))
        view = app.state.store.load(sid)
        assert view.config.eval_samples == 123
        # explicit config still wins
        sid2 = create(c, list("abcde"), eval_samples=77)
        assert app.state.store.load(sid2).config.eval_samples == 77


class TestStateMachine:
    def test_unknown_session(self, client):
        r = client.get("/sessions/0123456789abcdef")
        assert r.status_code == 404
        assert r.json()["code"] == "not-found"

    def test_malformed_session_id(self, client):
        assert client.get("/sessions/not-a-session").status_code == 404

    def test_plan_while_collecting(self, client):
        sid = create(client, list("abcde"))
        r = client.post(f"/sessions/{sid}/plan-stage")
        assert r.status_code == 409
        assert r.json()["code"] == "conflict"

    def test_attendance_while_collecting(self, client):
        sid = create(client, list("abcde"))
        assert client.post(f"/sessions/{sid}/attendance",
                           json={"attended": []}).status_code == 409

    def test_result_without_outstanding_query(self, client):
        sid = create(client, list("abcde"))
        r = client.post(f"/sessions/{sid}/query-result",
                        json={"respondent": "a", "neighbors": []})
        assert r.status_code == 409

    def test_bad_body_shape(self, client):
        sid = create(client, list("abcde"))
        r = client.post(f"/sessions/{sid}/query-result", json={"neighbors": []})
        assert r.status_code == 422
        assert r.json()["code"] == "validation"


class TestQueryFlow:
    def test_next_query_idempotent(self, client):
        sid = create(client, list("abcde"), query_budget=3)
        n1 = client.get(f"/sessions/{sid}/next-query").json()
        n2 = client.get(f"/sessions/{sid}/next-query").json()
        assert n1 == n2
        assert n1["done"] is False and n1["phase"] == 1
        assert n1["node"] in list("abcde")

    def test_respondent_mismatch_then_recovery(self, client):
        sid = create(client, list("abcde"), query_budget=2)
        node = client.get(f"/sessions/{sid}/next-query").json()["node"]
        wrong = next(t for t in "abcde" if t != node)
        r = client.post(f"/sessions/{sid}/query-result",
                        json={"respondent": wrong, "neighbors": []})
        assert r.status_code == 409
        assert r.json()["code"] == "respondent-mismatch"
        r = client.post(f"/sessions/{sid}/query-result",
                        json={"respondent": node, "neighbors": []})
        assert r.status_code == 200

    def test_result_reports_new_members(self, client):
        sid = create(client, ["a", "b"], query_budget=2)
        node = client.get(f"/sessions/{sid}/next-query").json()["node"]
        r = client.post(f"/sessions/{sid}/query-result",
                        json={"respondent": node, "neighbors": ["z", "q"]})
        body = r.json()
        assert body["new_members"] == ["z", "q"]
        assert body["observed"]["nodes"] == 4
        assert body["observed"]["edges"] == 2
        assert body["observed"]["queried"] == [node]

    def test_budget_exhaustion_moves_to_planning(self, client):
        sid = create(client, list("abcde"), query_budget=2, stage_budgets=[1])
        answer_all(client, sid, {})
        state = client.get(f"/sessions/{sid}").json()
        assert state["status"] == "planning"
        assert state["observed"]["queried"] and len(state["observed"]["queried"]) == 2
        nq = client.get(f"/sessions/{sid}/next-query").json()
        assert nq == {"done": True, "node": None, "phase": None,
                      "status": "planning", "remaining": 0}
        r = client.post(f"/sessions/{sid}/query-result",
                        json={"respondent": "a", "neighbors": []})
        assert r.status_code == 409

    def test_roster_exhaustion_ends_collection_early(self, client):
        sid = create(client, ["a", "b"], query_budget=5, stage_budgets=[1])
        answer_all(client, sid, {"a": ["b"], "b": ["a"]})
        state = client.get(f"/sessions/{sid}").json()
        assert state["status"] == "planning"
        assert state["observed"]["queried"] == ["a", "b"]


class TestPlanFlow:
    def test_dc_invites_hub(self, client):
        sid = dc_star_session(client)
        r = client.post(f"/sessions/{sid}/plan-stage")
        assert r.status_code == 200
        body = r.json()
        assert body["invited"] == ["h"]
        assert body["result"] == "ok"
        assert body["status"] == "awaiting-attendance"
        assert body["worst_value"] is None
        assert body["worst_scenario"] is None

    def test_plan_idempotent_until_attendance(self, client):
        sid = dc_star_session(client)
        p1 = client.post(f"/sessions/{sid}/plan-stage")
        count = len(client.get(f"/sessions/{sid}/events").json()["events"])
        p2 = client.post(f"/sessions/{sid}/plan-stage")
        assert p1.content == p2.content
        assert len(client.get(f"/sessions/{sid}/events").json()["events"]) == count

    def test_attendance_advances_then_completes(self, client):
        sid = dc_star_session(client)
        invited = client.post(f"/sessions/{sid}/plan-stage").json()["invited"]
        r = client.post(f"/sessions/{sid}/attendance", json={"attended": invited})
        assert r.status_code == 200
        state = r.json()
        assert state["status"] == "planning"
        assert state["stage"] == 2
        assert state["committed_stages"] == [["h"]]
        second = client.post(f"/sessions/{sid}/plan-stage").json()["invited"]
        assert second != ["h"]  # hub already recruited
        r = client.post(f"/sessions/{sid}/attendance", json={"attended": []})
        state = r.json()
        assert state["status"] == "complete"
        assert state["committed_stages"] == [["h"], []]
        assert state["remaining"] == {"queries": 0, "stages": 0}
        assert client.post(f"/sessions/{sid}/plan-stage").status_code == 409
        assert client.get(f"/sessions/{sid}/next-query").status_code == 409
        assert client.post(f"/sessions/{sid}/attendance",
                           json={"attended": []}).status_code == 409

    def test_attendance_offenders_listed(self, client):
        sid = dc_star_session(client)
        client.post(f"/sessions/{sid}/plan-stage")
        r = client.post(f"/sessions/{sid}/attendance", json={"attended": ["zz", "h"]})
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "not-invited"
        assert "zz" in body["message"]
        assert body["details"] == [{"field": "attended", "problem": "'zz' was not invited"}]
        assert client.post(f"/sessions/{sid}/attendance",
                           json={"attended": ["h"]}).status_code == 200

    def test_no_show_returns_to_pool(self, client):
        sid = dc_star_session(client)
        first = client.post(f"/sessions/{sid}/plan-stage").json()["invited"]
        client.post(f"/sessions/{sid}/attendance", json={"attended": []})
        second = client.post(f"/sessions/{sid}/plan-stage").json()["invited"]
        assert second == first  # re-invited by default

    def test_change_strategy_reports_scenarios(self, client):
        sid = create(
            client, ["a", "b", "c", "d", "e", "f"],
            strategy="change", stage_budgets=[2], query_budget=4, seed=3,
            solver_iters=10, samples_per_iter=10, loss_samples=4,
            num_candidate_sets=3, eval_samples=400, opt_samples=400,
            scenarios={"lo": 0.3, "hi": 0.7, "count": 2},
        )
        answer_all(client, sid, TWO_TRIANGLES)
        body = client.post(f"/sessions/{sid}/plan-stage").json()
        assert len(body["invited"]) == 2
        assert body["worst_scenario"] in (0.3, 0.7)
        assert 0.0 <= body["worst_value"] <= 1.5
        assert len(body["scenario_values"]) == 2
        assert min(body["scenario_values"]) == pytest.approx(body["worst_value"])

    def test_empty_pool_event_completes_session(self):
        # not reachable through the API (configs cap invites at the roster
        # size) but the fold must still honor a recorded empty plan
        header = {"roster": ["a"], "strategy": "dc", "seed": 0,
                  "config": {"query_budget": 0, "stage_budgets": [1]}}
        view = service._session_from_header("0" * 16, header)
        assert view.status == "planning"
        event = service.make_event(
            "plan", 0, stage=1, invited=[], result="empty-pool",
            worst_value=None, worst_scenario=None, scenario_values=None,
            stream="plan",
        )
        out = service._apply_event(view, event)
        assert out.status == "complete"
        assert out.last_plan["invited"] == []


class TestEvents:
    def test_timestamps_nondecreasing(self, client):
        sid = dc_star_session(client)
        client.post(f"/sessions/{sid}/plan-stage")
        events = client.get(f"/sessions/{sid}/events").json()["events"]
        kinds = [e["kind"] for e in events]
        assert kinds[0] == "session-created"
        assert "query" in kinds and "query-result" in kinds and "plan" in kinds
        ts = [e["ts"] for e in events]
        assert ts == sorted(ts)

    def test_errors_append_nothing(self, client):
        sid = create(client, list("abcde"))
        before = client.get(f"/sessions/{sid}/events").content
        client.post(f"/sessions/{sid}/plan-stage")
        client.post(f"/sessions/{sid}/query-result",
                    json={"respondent": "a", "neighbors": []})
        assert client.get(f"/sessions/{sid}/events").content == before


class TestReplay:
    def test_restart_reproduces_state_bytes(self, app_factory):
        app1 = app_factory("replay")
        c1 = TestClient(app1)
        sid = dc_star_session(c1)
        c1.post(f"/sessions/{sid}/plan-stage")
        c1.post(f"/sessions/{sid}/attendance", json={"attended": ["h"]})
        c1.post(f"/sessions/{sid}/plan-stage")
        c1.post(f"/sessions/{sid}/attendance", json={"attended": []})
        snap = c1.get(f"/sessions/{sid}")
        events = c1.get(f"/sessions/{sid}/events")

        c2 = TestClient(app_factory("replay"))
        assert c2.get(f"/sessions/{sid}").content == snap.content
        assert c2.get(f"/sessions/{sid}/events").content == events.content

    def test_restart_keeps_pending_query(self, app_factory):
        c1 = TestClient(app_factory("pending"))
        sid = create(c1, list("abcde"), query_budget=2)
        issued = c1.get(f"/sessions/{sid}/next-query").json()

        c2 = TestClient(app_factory("pending"))
        again = c2.get(f"/sessions/{sid}/next-query").json()
        assert again == issued
        r = c2.post(f"/sessions/{sid}/query-result",
                    json={"respondent": issued["node"], "neighbors": []})
        assert r.status_code == 200

    def test_restart_keeps_unanswered_plan(self, app_factory):
        c1 = TestClient(app_factory("plan"))
        sid = dc_star_session(c1)
        p1 = c1.post(f"/sessions/{sid}/plan-stage")

        c2 = TestClient(app_factory("plan"))
        assert c2.post(f"/sessions/{sid}/plan-stage").content == p1.content
        assert c2.post(f"/sessions/{sid}/attendance",
                       json={"attended": ["h"]}).status_code == 200

    def test_list_sessions(self, app_factory):
        app = app_factory("listing")
        c = TestClient(app)
        a = create(c, list("abc"), query_budget=0, stage_budgets=[1])
        b = create(c, list("abcde"))
        listing = TestClient(app_factory("listing")).get("/sessions").json()
        summary = {s["session_id"]: s["status"] for s in listing["sessions"]}
        assert summary == {a: "planning", b: "collecting"}


def _random_adjacency(roster, rng, p=0.35):
    adj = {t: [] for t in roster}
    for i, u in enumerate(roster):
        for v in roster[i + 1:]:
            if rng.random() < p:
                adj[u].append(v)
                adj[v].append(u)
    return adj


def _random_walk(client, sid, rng, roster, graph, steps=40):
    """Fire a random mix of valid and out-of-order calls; errors must leave
    the observable state untouched."""
    pending = None
    invited = []
    for _ in range(steps):
        op = ("next", "result", "plan", "attend", "state")[int(rng.integers(5))]
        before = client.get(f"/sessions/{sid}").content
        if op == "next":
            r = client.get(f"/sessions/{sid}/next-query")
            if r.status_code == 200 and not r.json()["done"]:
                pending = r.json()["node"]
        elif op == "result":
            if pending is not None and rng.random() < 0.8:
                target = pending
            else:
                target = roster[int(rng.integers(len(roster)))]
            r = client.post(f"/sessions/{sid}/query-result",
                            json={"respondent": target, "neighbors": graph[target]})
            if r.status_code == 200:
                pending = None
        elif op == "plan":
            r = client.post(f"/sessions/{sid}/plan-stage")
            if r.status_code == 200:
                invited = r.json()["invited"]
        elif op == "attend":
            pool = list(invited)
            if rng.random() < 0.2:
                pool.append(roster[int(rng.integers(len(roster)))])
            take = [t for t in pool if rng.random() < 0.6]
            r = client.post(f"/sessions/{sid}/attendance", json={"attended": take})
            if r.status_code == 200:
                invited = []
        else:
            r = client.get(f"/sessions/{sid}")
        assert r.status_code in (200, 409, 422), r.text
        if r.status_code >= 400:
            assert client.get(f"/sessions/{sid}").content == before


def test_random_call_sequences_survive_replay(tmp_path):
    for seed in range(5):
        rng = np.random.default_rng(seed)
        data = str(tmp_path / f"rand{seed}")
        client = TestClient(service.create_app(data_dir=data))
        roster = [f"n{i}" for i in range(8)]
        graph = _random_adjacency(roster, rng)
        sid = create(client, roster, strategy="dc", stage_budgets=[1, 1],
                     query_budget=3, seed=seed)
        _random_walk(client, sid, rng, roster, graph)
        snap = client.get(f"/sessions/{sid}").content

        fresh = TestClient(service.create_app(data_dir=data))
        assert fresh.get(f"/sessions/{sid}").content == snap
