import logging
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Sequence, Tuple, Type, TypeVar

from src.shared.errors import MalformedDecimal, MalformedPayload, MalformedVerdict
from src.services.corpus.domain.value_objects import EmbeddingVector
from .entities import CompletionRequest
from .payloads import parse_json_payload

logger = logging.getLogger(__name__)

T = TypeVar("T")

PARSE_ERRORS: Tuple[Type[Exception], ...] = (MalformedPayload, MalformedVerdict, MalformedDecimal)


class ProviderGateway(ABC):
    """Chat-completion and embedding gateway interface"""

    max_retries: int = 3

    @abstractmethod
    async def complete(self, request: CompletionRequest) -> str:
        """Return the raw text of the model response"""
        pass

    @abstractmethod
    async def embed_batch(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        """Embed texts, one L2-normalized vector per input, order preserved"""
        pass

    async def complete_parsed(self, request: CompletionRequest, parser: Callable[[str], T]) -> T:
        """Complete and parse, re-prompting unchanged up to max_retries on parse errors"""
        last_error: Exception
        attempt = 0
        while True:
            attempt += 1
            raw = await self.complete(request)
            try:
                return parser(raw)
            except PARSE_ERRORS as e:
                last_error = e
                if attempt > self.max_retries:
                    break
                logger.warning(
                    f"Unparseable response for {request.template_id or 'prompt'} "
                    f"(attempt {attempt}): {e}"
                )
        logger.error(f"Failed to parse response for {request.template_id or 'prompt'}: {last_error}")
        raise last_error

    async def complete_json(self, request: CompletionRequest) -> Dict[str, Any]:
        return await self.complete_parsed(request, parse_json_payload)

    async def aclose(self) -> None:
        """Release transport resources"""
        return None
