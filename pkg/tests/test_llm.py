import logging
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopplan.harness import RunConfig, run_benchmark
from coopplan.llm import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    DEFAULT_TOP_P,
    BackendFailure,
    BackendSpec,
    CompletionRequest,
    HttpBackend,
    ReplayBackend,
    ScriptedBackend,
    UnboundPlaceholder,
    UnknownBinding,
    backoff_delays,
    load_template,
    render_template,
    transcript_tap,
)
from coopplan.world import suite
from helpers import GOLDEN_BINDINGS, StubServer, golden_mismatches, scripted_reply

GOLDEN = Path(__file__).parent / "golden"
TOKEN = "sk-test-0123456789abcdef-SECRET"


@pytest.fixture
def stub():
    s = StubServer(scripted_reply)
    yield s
    s.close()


@pytest.fixture
def token(monkeypatch):
    monkeypatch.setenv("COOPPLAN_TEST_KEY", TOKEN)
    return TOKEN


def http_spec(url, **kw):
    base = dict(kind="http", endpoint=url, model="stub-model", api_key_env="COOPPLAN_TEST_KEY",
                timeout=5.0, max_retries=3, backoff_base=0.01, backoff_ceiling=0.05)
    base.update(kw)
    return BackendSpec(**base)


def test_templates_match_golden_files():
    assert golden_mismatches(GOLDEN) == []


def test_sampling_defaults_follow_settings():
    assert (DEFAULT_TEMPERATURE, DEFAULT_TOP_P, DEFAULT_MAX_TOKENS) == (0.7, 1.0, 256)


def test_planner_render_mentions_choice():
    t = load_template("planner")
    out = render_template(t, {k: GOLDEN_BINDINGS[k] for k in t.required})
    assert "choose the best available action" in out
    assert "$" not in out.replace("$GOAL$", "")


def test_missing_and_unknown_bindings():
    t = load_template("planner")
    b = {k: "x" for k in t.required if k != "PROGRESS"}
    with pytest.raises(UnboundPlaceholder) as e:
        render_template(t, b)
    assert e.value.name == "PROGRESS"
    with pytest.raises(UnknownBinding):
        render_template(t, {**{k: "x" for k in t.required}, "EXTRA": "y"}, strict=True)


def test_substitution_is_literal():
    t = load_template("planner")
    b = {k: "x" for k in t.required}
    b["PROGRESS"] = "see $GOAL$ above"
    out = render_template(t, b)
    assert "see $GOAL$ above" in out


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("p", temperature=-0.1)
    with pytest.raises(ValueError):
        CompletionRequest("p", max_tokens=0)
    with pytest.raises(ValueError):
        BackendSpec(kind="http", endpoint="not a url")
    with pytest.raises(ValueError):
        BackendSpec(max_retries=-1)


@settings(max_examples=30, deadline=None)
@given(st.text(max_size=200), st.none() | st.integers(0, 100))
def test_scripted_backend_is_pure(prompt, seed):
    b = ScriptedBackend()
    assert b.complete(CompletionRequest(prompt, seed=seed)) == b.complete(CompletionRequest(prompt, seed=seed))


def test_tap_is_transparent_and_counts():
    prompt = render_template(load_template("message_generator"),
                             {k: GOLDEN_BINDINGS[k] for k in load_template("message_generator").required})
    tap = transcript_tap(ScriptedBackend())
    assert tap.complete(CompletionRequest(prompt)) == ScriptedBackend().complete(CompletionRequest(prompt))
    assert len(tap.drain()) == 1


def test_replay_backend_order_and_exhaustion():
    r = ReplayBackend(["a", None])
    assert r.complete(CompletionRequest("x")) == "a"
    with pytest.raises(BackendFailure):
        r.complete(CompletionRequest("x"))
    with pytest.raises(BackendFailure) as e:
        r.complete(CompletionRequest("x"))
    assert e.value.cause == "replay_exhausted"


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 60.0), st.integers(0, 10))
def test_backoff_within_ceiling(base, ceiling, retries):
    d = backoff_delays(base, ceiling, retries)
    assert len(d) <= retries
    assert sum(d) <= ceiling + 1e-9
    assert all(x > 0 for x in d)


def test_http_body_and_reply(stub, token):
    stub.script.append((200, {"choices": [{"message": {"content": "grasp <plate> (141)"}}]}))
    b = HttpBackend(http_spec(stub.url))
    assert b.complete(CompletionRequest("hello", seed=3)) == "grasp <plate> (141)"
    body = stub.bodies[0]
    assert body["temperature"] == 0.7 and body["top_p"] == 1.0 and body["max_tokens"] == 256
    assert body["messages"] == [{"role": "user", "content": "hello"}] and body["model"] == "stub-model"
    assert stub.headers[0]["Authorization"] == f"Bearer {TOKEN}"


def test_http_retries_follow_backoff(stub, token):
    stub.script += [(500, {}), (429, {}), (503, {})]
    slept = []
    tap = transcript_tap(HttpBackend(http_spec(stub.url, backoff_base=0.5, backoff_ceiling=2.0), sleep=slept.append))
    assert tap.complete(CompletionRequest("x")) == ""  # scripted answer to an unknown prompt
    assert slept == [0.5, 1.0, 0.5]
    assert sum(slept) <= 2.0
    assert tap.drain()[0].retries == 3


def test_http_gives_up_after_max_retries(stub, token):
    stub.script += [(500, {})] * 5
    slept = []
    b = HttpBackend(http_spec(stub.url, max_retries=2), sleep=slept.append)
    with pytest.raises(BackendFailure) as e:
        b.complete(CompletionRequest("x"))
    assert e.value.cause == "server_error" and e.value.retries == 2
    assert len(stub.bodies) == 3 and len(slept) == 2


def test_http_auth_failures(stub, token, monkeypatch):
    stub.script.append((401, {"error": f"bad key {TOKEN}"}))
    b = HttpBackend(http_spec(stub.url), sleep=lambda s: None)
    with pytest.raises(BackendFailure) as e:
        b.complete(CompletionRequest("x"))
    assert e.value.cause == "auth" and TOKEN not in str(e.value)
    monkeypatch.delenv("COOPPLAN_TEST_KEY")
    with pytest.raises(BackendFailure) as e:
        b.complete(CompletionRequest("x"))
    assert e.value.cause == "auth"


def test_http_bad_response(stub, token):
    stub.script.append((200, {"nothing": True}))
    with pytest.raises(BackendFailure) as e:
        HttpBackend(http_spec(stub.url)).complete(CompletionRequest("x"))
    assert e.value.cause == "bad_response"


def test_http_transport_error_is_retried(token):
    slept = []
    b = HttpBackend(http_spec("http://127.0.0.1:9/none", max_retries=1, timeout=0.5), sleep=slept.append)
    with pytest.raises(BackendFailure) as e:
        b.complete(CompletionRequest("x"))
    assert e.value.cause in ("transport", "timeout") and len(slept) == 1


def test_token_never_emitted(stub, token, tmp_path, caplog):
    stub.script += [(500, {"detail": TOKEN}), (401, {"detail": TOKEN})]
    config = RunConfig(suite="wash_dishes", seeds=(0,), backend=http_spec(stub.url), out=str(tmp_path / "run"),
                       utility="oracle")
    with caplog.at_level(logging.DEBUG):
        report = run_benchmark(config)
    assert report.aggregate.backend_failures == 1
    files = [p for p in (tmp_path / "run").rglob("*") if p.is_file()]
    assert any(p.name.endswith(".calls.jsonl") for p in files)
    for p in files:
        assert TOKEN.encode() not in p.read_bytes(), p
    assert TOKEN not in caplog.text
    assert "COOPPLAN_TEST_KEY" in (tmp_path / "run" / "episodes" / "wash_dishes__seed0.jsonl").read_text()
