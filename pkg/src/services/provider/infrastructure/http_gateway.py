import asyncio
import logging
import random
from typing import Any, Awaitable, Callable, Dict, List, Optional, Sequence

import httpx
import numpy as np

from src.settings import ProviderConfig
from src.shared.errors import AuthError, DimensionMismatch, EmptyText, ProviderUnavailable
from src.services.corpus.domain.value_objects import EmbeddingVector
from ..domain.entities import CompletionRequest
from ..domain.gateway import ProviderGateway

logger = logging.getLogger(__name__)

TRANSIENT_STATUS = {408, 425, 429, 500, 502, 503, 504}
EMBED_CHUNK = 128


class _TransientStatus(Exception):
    pass


class HttpProviderGateway(ProviderGateway):
    """httpx implementation of ProviderGateway for the /chat and /embed adapter"""

    def __init__(
        self,
        config: ProviderConfig,
        api_key: str,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        sleep: Callable[[float], Awaitable[Any]] = asyncio.sleep,
        jitter: Optional[random.Random] = None,
    ):
        self.config = config
        self.max_retries = config.max_retries
        self._client = httpx.AsyncClient(
            base_url=config.base_url,
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=config.timeout_seconds,
            transport=transport,
        )
        self._semaphore = asyncio.Semaphore(config.max_parallel)
        self._sleep = sleep
        self._jitter = jitter or random.Random()

    async def aclose(self) -> None:
        await self._client.aclose()

    def _backoff(self, attempt: int) -> float:
        base = self.config.backoff_base_ms / 1000.0 * (2 ** (attempt - 1))
        return base + self._jitter.uniform(0, base)

    async def _post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        attempt = 0
        while True:
            attempt += 1
            logger.debug(f"POST {path} attempt {attempt}")
            try:
                async with self._semaphore:
                    response = await self._client.post(path, json=payload)
                if response.status_code in (401, 403):
                    raise AuthError(f"Provider rejected credentials (HTTP {response.status_code})")
                if response.status_code in TRANSIENT_STATUS:
                    raise _TransientStatus(f"HTTP {response.status_code}")
                if response.is_error:
                    raise ProviderUnavailable(
                        f"POST {path} failed with HTTP {response.status_code}", attempts=attempt
                    )
                try:
                    return response.json()
                except ValueError as e:
                    raise ProviderUnavailable(f"POST {path} returned non-JSON body", attempts=attempt) from e
            except (httpx.TransportError, _TransientStatus) as e:
                if attempt > self.max_retries:
                    logger.error(f"Failed to reach provider at {path} after {attempt} attempts: {e}")
                    raise ProviderUnavailable(
                        f"POST {path} failed after {attempt} attempts: {e}", attempts=attempt
                    ) from e
                delay = self._backoff(attempt)
                logger.warning(f"Attempt {attempt} for {path} failed ({e}); retrying in {delay:.2f}s")
                await self._sleep(delay)

    async def complete(self, request: CompletionRequest) -> str:
        data = await self._post("/chat", request.to_wire())
        text = data.get("text")
        if not isinstance(text, str):
            raise ProviderUnavailable("chat response has no text field")
        return text

    @staticmethod
    def _vectors_from(data: Any, count: int) -> List[EmbeddingVector]:
        """One normalized vector per input, or ProviderUnavailable when any vector is unusable"""
        vectors = data.get("vectors") if isinstance(data, dict) else None
        if not isinstance(vectors, list) or len(vectors) != count:
            raise ProviderUnavailable("embed response does not hold one vector per input")
        result = []
        for index, raw in enumerate(vectors):
            try:
                array = np.asarray(raw, dtype=np.float64)
            except (TypeError, ValueError) as e:
                raise ProviderUnavailable(f"embed vector {index} is not numeric") from e
            if array.ndim != 1 or array.size == 0 or not np.all(np.isfinite(array)) or not np.any(array):
                raise ProviderUnavailable(f"embed vector {index} is empty, non-finite or all zeros")
            result.append(EmbeddingVector.from_array(array).normalized())
        return result

    async def _embed_chunk(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        attempt = 0
        while True:
            attempt += 1
            data = await self._post("/embed", {"model": self.config.embedding_model, "inputs": list(texts)})
            try:
                return self._vectors_from(data, len(texts))
            except ProviderUnavailable as e:
                if attempt > self.max_retries:
                    logger.error(f"Unusable embeddings after {attempt} attempts: {e}")
                    raise ProviderUnavailable(str(e), attempts=attempt) from e
                delay = self._backoff(attempt)
                logger.warning(f"Attempt {attempt} for /embed gave unusable vectors ({e}); retrying in {delay:.2f}s")
                await self._sleep(delay)

    async def embed_batch(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        for index, text in enumerate(texts):
            if not text or not text.strip():
                raise EmptyText(index)
        chunks = [texts[i:i + EMBED_CHUNK] for i in range(0, len(texts), EMBED_CHUNK)]
        results = await asyncio.gather(*(self._embed_chunk(c) for c in chunks))
        vectors = [v for chunk in results for v in chunk]
        if vectors:
            dim = vectors[0].dim
            for vector in vectors:
                if vector.dim != dim:
                    raise DimensionMismatch(dim, vector.dim)
        return vectors
