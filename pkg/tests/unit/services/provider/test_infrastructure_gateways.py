import asyncio
import json

import httpx
import pytest

from src.settings import ProviderConfig
from src.shared.errors import AuthError, ConfigError, EmptyText, MalformedPayload, ProviderUnavailable, UnscriptedPrompt
from src.services.provider.domain.entities import CompletionRequest
from src.services.provider.infrastructure.http_gateway import HttpProviderGateway
from src.services.provider.infrastructure.mock_gateway import MockProviderGateway, hashed_embedding


def _request(template_id: str = "custom", user: str = "hello") -> CompletionRequest:
    return CompletionRequest(model="m", system_prompt="system", user_prompt=user, template_id=template_id)


async def _no_sleep(_delay: float) -> None:
    return None


@pytest.mark.unit
class TestMockProviderGateway:
    async def test_scripted_prompt_returns_scripted_response(self):
        # Arrange
        request = _request()
        gateway = MockProviderGateway(script={request.prompt_hash(): '{"summary": "x"}'})

        # Act
        response = await gateway.complete(request)

        # Assert
        assert response == '{"summary": "x"}'
        assert gateway.calls == [request]

    async def test_scripted_list_is_served_in_turn_then_repeats(self):
        request = _request()
        gateway = MockProviderGateway(script={request.prompt_hash(): ["a", "b"]})
        assert [await gateway.complete(request) for _ in range(3)] == ["a", "b", "b"]

    async def test_unscripted_prompt_in_strict_mode_raises_error(self):
        gateway = MockProviderGateway(strict=True)
        with pytest.raises(UnscriptedPrompt):
            await gateway.complete(_request(template_id="judge_coverage"))

    async def test_unknown_template_without_script_raises_error(self):
        with pytest.raises(UnscriptedPrompt):
            await MockProviderGateway().complete(_request(template_id="custom"))

    async def test_load_script_merges_file_entries(self, tmp_path):
        # Arrange
        request = _request()
        script = tmp_path / "script.json"
        script.write_text(json.dumps({request.prompt_hash(): "scripted"}), encoding="utf-8")
        gateway = MockProviderGateway()

        # Act
        gateway.load_script(script)

        # Assert
        assert await gateway.complete(request) == "scripted"

    def test_load_script_rejects_non_mapping(self, tmp_path):
        script = tmp_path / "script.json"
        script.write_text("[]", encoding="utf-8")
        with pytest.raises(ConfigError):
            MockProviderGateway().load_script(script)

    async def test_complete_json_reprompts_on_malformed_payload(self):
        # Arrange
        request = _request()
        gateway = MockProviderGateway(script={request.prompt_hash(): ["oops", '{"ok": 1}']}, max_retries=3)

        # Act
        payload = await gateway.complete_json(request)

        # Assert
        assert payload == {"ok": 1}
        assert len(gateway.calls) == 2

    async def test_complete_json_gives_up_after_max_retries(self):
        request = _request()
        gateway = MockProviderGateway(script={request.prompt_hash(): "never json"}, max_retries=2)
        with pytest.raises(MalformedPayload):
            await gateway.complete_json(request)
        assert len(gateway.calls) == 3

    async def test_embeddings_are_deterministic_and_normalized(self):
        # Arrange
        gateway = MockProviderGateway(embedding_dim=16)

        # Act
        first = await gateway.embed_batch(["Great room", "great room!", "dirty towels"])

        # Assert
        assert first[0] == first[1]
        assert first[0].dim == 16
        assert first[2].norm() == pytest.approx(1.0)
        assert hashed_embedding("Great room", 16) == first[0]

    async def test_empty_text_raises_error_with_position(self):
        with pytest.raises(EmptyText) as exc:
            await MockProviderGateway().embed_batch(["fine", " "])
        assert exc.value.index == 1


def _config(**overrides) -> ProviderConfig:
    values = {"base_url": "http://adapter", "max_retries": 3, "backoff_base_ms": 1, "max_parallel": 2}
    values.update(overrides)
    return ProviderConfig(**values)


@pytest.mark.unit
class TestHttpProviderGateway:
    async def test_transient_failures_are_retried_until_success(self):
        # Arrange
        attempts = []

        def handler(request: httpx.Request) -> httpx.Response:
            attempts.append(json.loads(request.content))
            if len(attempts) < 3:
                return httpx.Response(503)
            return httpx.Response(200, json={"text": "fine"})

        gateway = HttpProviderGateway(_config(), "key", transport=httpx.MockTransport(handler), sleep=_no_sleep)

        # Act
        text = await gateway.complete(_request())
        await gateway.aclose()

        # Assert
        assert text == "fine"
        assert len(attempts) == 3
        assert attempts[0]["system"] == "system"
        assert "template_id" not in attempts[0]

    async def test_exhausted_retries_raise_provider_unavailable(self):
        transport = httpx.MockTransport(lambda request: httpx.Response(429))
        gateway = HttpProviderGateway(_config(max_retries=1), "key", transport=transport, sleep=_no_sleep)
        with pytest.raises(ProviderUnavailable) as exc:
            await gateway.complete(_request())
        assert exc.value.attempts == 2

    async def test_rejected_credentials_raise_auth_error_without_retry(self):
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(request.headers["Authorization"])
            return httpx.Response(401)

        gateway = HttpProviderGateway(_config(), "secret", transport=httpx.MockTransport(handler), sleep=_no_sleep)
        with pytest.raises(AuthError):
            await gateway.complete(_request())
        assert calls == ["Bearer secret"]

    async def test_embed_normalizes_vectors_in_input_order(self):
        # Arrange
        def handler(request: httpx.Request) -> httpx.Response:
            inputs = json.loads(request.content)["inputs"]
            return httpx.Response(200, json={"vectors": [[float(len(t)), 0.0] for t in inputs]})

        gateway = HttpProviderGateway(_config(), "key", transport=httpx.MockTransport(handler), sleep=_no_sleep)

        # Act
        vectors = await gateway.embed_batch(["a", "bbb"])

        # Assert
        assert [v.values for v in vectors] == [(1.0, 0.0), (1.0, 0.0)]

    @pytest.mark.parametrize("bad", [[0.0, 0.0], [], ["x", 1.0]])
    async def test_unusable_embedding_is_requested_again(self, bad):
        # Arrange
        answers = [{"vectors": [[1.0, 0.0], bad]}, {"vectors": [[1.0, 0.0], [0.0, 2.0]]}]
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(request)
            return httpx.Response(200, json=answers[min(len(calls), len(answers)) - 1])

        gateway = HttpProviderGateway(_config(), "key", transport=httpx.MockTransport(handler), sleep=_no_sleep)

        # Act
        vectors = await gateway.embed_batch(["a", "b"])

        # Assert
        assert [v.values for v in vectors] == [(1.0, 0.0), (0.0, 1.0)]
        assert len(calls) == 2

    async def test_persistently_zero_embedding_raises_provider_unavailable(self):
        transport = httpx.MockTransport(lambda request: httpx.Response(200, json={"vectors": [[0.0, 0.0, 0.0]]}))
        gateway = HttpProviderGateway(_config(max_retries=2), "key", transport=transport, sleep=_no_sleep)
        with pytest.raises(ProviderUnavailable) as exc:
            await gateway.embed_batch(["silent"])
        assert exc.value.attempts == 3

    async def test_in_flight_requests_are_capped_by_max_parallel(self):
        # Arrange
        active, peak = 0, 0

        class SlowTransport(httpx.AsyncBaseTransport):
            async def handle_async_request(self, request: httpx.Request) -> httpx.Response:
                nonlocal active, peak
                active += 1
                peak = max(peak, active)
                await asyncio.sleep(0.005)
                active -= 1
                return httpx.Response(200, json={"text": "ok"})

        gateway = HttpProviderGateway(_config(max_parallel=2), "key", transport=SlowTransport(), sleep=_no_sleep)

        # Act
        await asyncio.gather(*(gateway.complete(_request(user=f"u{i}")) for i in range(6)))

        # Assert
        assert peak <= 2
