from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from t2bm.llm import (
    API_KEY_ENV,
    ChatMessage,
    ChatRequest,
    GenerationFailed,
    HttpChatTransport,
    PromptBundle,
    RecordedTransport,
    TransportError,
    assemble_generation_prompt,
    assemble_refinement_prompt,
    generate_interlayer,
    refine_prompt,
    request_fingerprint,
)

WOODEN_HOUSE_PROMPT = "A wooden house with windows"


@dataclass
class SequenceTransport:
    """Scripted transport: pops canned replies in order."""

    replies: list[str]
    kind: str = "recorded"
    requests: list[ChatRequest] = field(default_factory=list)

    def complete(self, request: ChatRequest) -> "ChatResponse":
        from t2bm.llm import ChatResponse

        self.requests.append(request)
        if not self.replies:
            raise TransportError("script exhausted")
        return ChatResponse(content=self.replies.pop(0))


@dataclass
class FailingTransport:
    kind: str = "live"

    def complete(self, request: ChatRequest):
        raise TransportError("endpoint unreachable")


def simple_request(content: str = "hello") -> ChatRequest:
    return ChatRequest(model="gpt-4", messages=(ChatMessage("user", content),))


class TestPromptBundle:
    def test_bundled_templates_load(self):
        bundle = PromptBundle.load()
        assert bundle.refinement_context.strip()
        assert bundle.format_spec.strip()
        assert bundle.background.strip()

    def test_load_from_directory(self, tmp_path):
        for name in ("refinement_context", "format_spec", "background"):
            (tmp_path / f"{name}.txt").write_text(f"{name} text", encoding="utf-8")
        bundle = PromptBundle.load(tmp_path)
        assert bundle.background == "background text"

    def test_empty_part_rejected(self):
        with pytest.raises(ValueError):
            PromptBundle(refinement_context="x", format_spec=" ", background="y")


class TestFingerprint:
    def test_stable(self):
        assert request_fingerprint(simple_request()) == request_fingerprint(
            simple_request()
        )

    def test_sensitive_to_content(self):
        assert request_fingerprint(simple_request("a")) != request_fingerprint(
            simple_request("b")
        )

    def test_sensitive_to_temperature(self):
        hot = ChatRequest(
            model="gpt-4", messages=(ChatMessage("user", "x"),), temperature=0.2
        )
        assert request_fingerprint(hot) != request_fingerprint(simple_request("x"))


class TestRecordedTransport:
    def test_record_then_replay(self, tmp_path):
        transport = RecordedTransport(tmp_path)
        request = simple_request()
        transport.record(request, "canned reply")
        assert transport.complete(request).content == "canned reply"

    def test_missing_fixture_is_transport_error(self, tmp_path):
        with pytest.raises(TransportError):
            RecordedTransport(tmp_path).complete(simple_request())


class TestPromptAssembly:
    def test_refinement_assembly_golden(self, golden_dir):
        bundle = PromptBundle.load()
        text = assemble_refinement_prompt(WOODEN_HOUSE_PROMPT, bundle)
        golden = (golden_dir / "refinement_prompt.txt").read_text(encoding="utf-8")
        assert text == golden

    def test_generation_assembly_golden(self, golden_dir):
        bundle = PromptBundle.load()
        refined = "A refined wooden house description used to pin prompt assembly."
        text = assemble_generation_prompt(refined, bundle)
        golden = (golden_dir / "generation_prompt.txt").read_text(encoding="utf-8")
        assert text == golden

    def test_generation_assembly_is_exact_concatenation(self):
        bundle = PromptBundle.load()
        text = assemble_generation_prompt("REFINED", bundle)
        assert text == "REFINED\n" + bundle.format_spec + "\n" + bundle.background


class TestRefinePrompt:
    def test_canned_reply_returned_verbatim(self, tmp_path):
        bundle = PromptBundle.load()
        transport = RecordedTransport(tmp_path)
        request = ChatRequest(
            model="gpt-4",
            messages=(
                ChatMessage("user", assemble_refinement_prompt("A hut", bundle)),
            ),
        )
        transport.record(request, "A very detailed hut.")
        result = refine_prompt("A hut", bundle, transport)
        assert result.text == "A very detailed hut."
        assert result.fallback is False

    def test_transport_failure_falls_back_to_raw(self):
        bundle = PromptBundle.load()
        result = refine_prompt("A hut", bundle, FailingTransport())
        assert result.text == "A hut"
        assert result.fallback is True

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            refine_prompt("  ", PromptBundle.load(), FailingTransport())


class TestGenerateInterlayer:
    def test_wooden_house_fixture_parses_first_try(
        self, tmp_path, wooden_house_text
    ):
        bundle = PromptBundle.load()
        transport = RecordedTransport(tmp_path)
        request = ChatRequest(
            model="gpt-4",
            messages=(
                ChatMessage(
                    "user", assemble_generation_prompt("refined text", bundle)
                ),
            ),
        )
        transport.record(request, wooden_house_text)
        doc, trace = generate_interlayer(
            "refined text", bundle, transport, raw_input=WOODEN_HOUSE_PROMPT
        )
        assert len(doc.sections) == 13
        assert trace.attempts == 1
        assert trace.transport == "recorded"
        assert trace.raw_input == WOODEN_HOUSE_PROMPT
        assert trace.interlayer_text == wooden_house_text

    def test_prose_wrapped_reply_parsed_via_extraction(self, wooden_house_text):
        bundle = PromptBundle.load()
        transport = SequenceTransport(
            replies=[f"Here you go!\n```json\n{wooden_house_text}\n```\nEnjoy."]
        )
        doc, trace = generate_interlayer("refined", bundle, transport)
        assert len(doc.sections) == 13
        assert trace.attempts == 1

    def test_retry_until_valid(self, wooden_house_text):
        bundle = PromptBundle.load()
        transport = SequenceTransport(
            replies=["garbage", "still garbage", wooden_house_text]
        )
        doc, trace = generate_interlayer("refined", bundle, transport, max_attempts=3)
        assert trace.attempts == 3
        assert len(doc.sections) == 13
        # Retry appends the failed reply and the parse error to the chat.
        final_request = transport.requests[-1]
        assert len(final_request.messages) == 5
        assert final_request.messages[1].content == "garbage"
        assert "could not be parsed" in final_request.messages[2].content

    def test_generation_failed_carries_responses(self):
        bundle = PromptBundle.load()
        transport = SequenceTransport(replies=["nope", "nada"])
        with pytest.raises(GenerationFailed) as info:
            generate_interlayer("refined", bundle, transport, max_attempts=2)
        assert info.value.responses == ["nope", "nada"]

    def test_transport_errors_count_as_attempts(self):
        bundle = PromptBundle.load()
        with pytest.raises(GenerationFailed):
            generate_interlayer("refined", bundle, FailingTransport(), max_attempts=2)

    def test_bad_attempt_budget_rejected(self):
        with pytest.raises(ValueError):
            generate_interlayer(
                "refined", PromptBundle.load(), FailingTransport(), max_attempts=0
            )


class _FakeCompletionsHandler(BaseHTTPRequestHandler):
    server_version = "FakeOpenAI/1"

    def log_message(self, *args):
        pass

    def do_POST(self):
        server = self.server
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length))
        server.seen.append(
            {"path": self.path, "auth": self.headers.get("Authorization"), "body": body}
        )
        if server.fail_remaining > 0:
            server.fail_remaining -= 1
            self.send_response(500)
            self.end_headers()
            return
        payload = {
            "choices": [
                {
                    "message": {"role": "assistant", "content": server.reply},
                    "finish_reason": "stop",
                }
            ],
            "usage": {"prompt_tokens": 7, "completion_tokens": 3},
        }
        data = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class FakeCompletionsServer:
    def __init__(self, reply: str, fail_first: int = 0):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _FakeCompletionsHandler)
        self.server.reply = reply
        self.server.fail_remaining = fail_first
        self.server.seen = []
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    @property
    def base_url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1"

    @property
    def seen(self):
        return self.server.seen


class TestHttpTransport:
    def test_posts_wire_format_and_parses_reply(self, monkeypatch):
        monkeypatch.setenv(API_KEY_ENV, "sk-test-123")
        with FakeCompletionsServer("hello back") as server:
            transport = HttpChatTransport(server.base_url, timeout=5)
            response = transport.complete(simple_request("hi there"))
            assert response.content == "hello back"
            assert response.prompt_tokens == 7
            request_seen = server.seen[0]
            assert request_seen["path"] == "/v1/chat/completions"
            assert request_seen["auth"] == "Bearer sk-test-123"
            assert request_seen["body"]["model"] == "gpt-4"
            assert request_seen["body"]["messages"][0]["content"] == "hi there"

    def test_retries_then_succeeds(self, monkeypatch):
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        with FakeCompletionsServer("eventually", fail_first=1) as server:
            transport = HttpChatTransport(server.base_url, timeout=5, retries=2)
            assert transport.complete(simple_request()).content == "eventually"
            assert len(server.seen) == 2

    def test_unreachable_raises_transport_error(self, monkeypatch):
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        transport = HttpChatTransport("http://127.0.0.1:1/v1", timeout=0.2, retries=0)
        with pytest.raises(TransportError):
            transport.complete(simple_request())

    def test_api_key_never_in_repr(self, monkeypatch):
        monkeypatch.setenv(API_KEY_ENV, "sk-secret")
        transport = HttpChatTransport("http://example.invalid/v1")
        assert "sk-secret" not in repr(transport)
