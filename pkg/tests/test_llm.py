import json
import logging

import pytest

from litreview.llm import (
    BackendError,
    BackendKind,
    BackendProfile,
    BudgetExceededError,
    ChatMessage,
    ChatRequest,
    LLMClient,
    RecordingTransport,
    RetriesExhaustedError,
    RetryPolicy,
    Script,
    ScriptMissError,
    TransportError,
    complete,
    estimate_tokens,
    named_transform,
)

REMOTE = BackendProfile(
    kind=BackendKind.REMOTE, model_id="m", endpoint="http://example.invalid/v1/chat",
    retry=RetryPolicy(max_attempts=3, backoff_base=0.5),
)


def ok_body(content="hello", finish="stop"):
    return {"choices": [{"message": {"content": content}, "finish_reason": finish}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 2}}


class Sequenced:
    def __init__(self, *replies):
        self.replies = list(replies)

    def __call__(self, url, headers, payload):
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def test_estimate_tokens_is_ceiling():
    assert [estimate_tokens("x" * n) for n in (0, 1, 4, 5, 8)] == [0, 1, 1, 2, 2]


def test_request_validation_and_digest():
    profile = BackendProfile(model_id="m")
    a = ChatRequest.for_prompt(profile, "hi", "sys")
    b = ChatRequest.for_prompt(profile, "hi", "sys")
    assert a.digest() == b.digest()
    assert a.digest() != ChatRequest.for_prompt(profile, "hi!").digest()
    assert a.payload()["messages"][0] == {"role": "system", "content": "sys"}
    with pytest.raises(ValueError):
        ChatRequest("m", (ChatMessage("system", "only"),))
    with pytest.raises(ValueError):
        ChatRequest("m", (ChatMessage("assistant", "x"),))


def test_retries_then_succeeds():
    waits = []
    transport = RecordingTransport(Sequenced((503, {}), TransportError("reset"), (200, ok_body())))
    client = LLMClient(REMOTE, transport=transport, sleep=waits.append)
    response = client.complete(client.request("q"))
    assert response.content == "hello" and response.attempts == 3
    assert waits == [0.5, 1.0]
    assert client.log.records[0].attempts == 3
    assert (response.input_token_count, response.output_token_count) == (7, 2)


def test_retries_exhausted():
    transport = Sequenced((429, {"error": "slow"}), (429, {}), (429, {}))
    client = LLMClient(REMOTE, transport=transport, sleep=lambda s: None)
    with pytest.raises(RetriesExhaustedError) as info:
        client.complete(client.request("q"))
    assert info.value.attempts == 3 and info.value.last_status == 429


def test_permanent_error_not_retried():
    transport = RecordingTransport(Sequenced((401, {"error": "bad key"})))
    client = LLMClient(REMOTE, transport=transport, sleep=lambda s: None)
    with pytest.raises(BackendError, match="401"):
        client.complete(client.request("q"))
    assert len(transport.calls) == 1


def test_truncation_warns(caplog):
    client = LLMClient(REMOTE, transport=Sequenced((200, ok_body("partial", "length"))))
    with caplog.at_level(logging.WARNING):
        response = client.complete(client.request("q"))
    assert response.truncated
    assert "truncated" in caplog.text


def test_malformed_body():
    client = LLMClient(REMOTE, transport=Sequenced((200, {"nope": 1})))
    with pytest.raises(BackendError, match="malformed"):
        client.complete(client.request("q"))


def test_credentials_from_environment(monkeypatch):
    profile = BackendProfile(
        kind=BackendKind.REMOTE, model_id="m", endpoint="http://x", credential_env="LITREVIEW_TEST_KEY"
    )
    seen = {}

    def transport(url, headers, payload):
        seen.update(headers)
        return 200, ok_body()

    client = LLMClient(profile, transport=transport)
    monkeypatch.delenv("LITREVIEW_TEST_KEY", raising=False)
    with pytest.raises(BackendError, match="LITREVIEW_TEST_KEY"):
        client.complete(client.request("q"))
    monkeypatch.setenv("LITREVIEW_TEST_KEY", "secret")
    client.complete(client.request("q"))
    assert seen["Authorization"] == "Bearer secret"


def test_budget_gate_blocks_scripted_too():
    profile = BackendProfile(model_id="m", input_token_budget=2)
    client = LLMClient(profile, script=Script(default=named_transform("echo:5")))
    with pytest.raises(BudgetExceededError):
        client.complete(client.request("123456789"))
    assert client.complete(client.request("12345678")).content == "12345"


def test_script_lookup_and_miss(tmp_path):
    profile = BackendProfile(model_id="m")
    request = ChatRequest.for_prompt(profile, "question")
    path = tmp_path / "script.json"
    path.write_text(json.dumps({"responses": {request.digest(): "answer"}}))
    script = Script.from_file(path)
    assert complete(request, profile, script=script).content == "answer"
    with pytest.raises(ScriptMissError):
        complete(ChatRequest.for_prompt(profile, "other"), profile, script=script)


def test_profile_from_dict():
    profile = BackendProfile.from_dict(
        {"kind": "remote", "model_id": "x", "endpoint": "http://e", "retry": {"max_attempts": 5}}
    )
    assert profile.kind is BackendKind.REMOTE and profile.retry.max_attempts == 5
    assert RetryPolicy(backoff_base=2).delay(3) == 8
    with pytest.raises(ValueError):
        BackendProfile(kind=BackendKind.REMOTE, model_id="x")
    with pytest.raises(ValueError):
        named_transform("bogus")
