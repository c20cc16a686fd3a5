import hashlib
import logging
import re
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from src.shared.errors import ConfigError, EmptyText, UnscriptedPrompt
from src.shared.jsonl import read_json
from src.services.corpus.domain.value_objects import EmbeddingVector
from ..domain.entities import CompletionRequest
from ..domain.gateway import ProviderGateway
from .offline_responder import OfflineResponder

logger = logging.getLogger(__name__)

ScriptEntry = Union[str, Sequence[str]]
Responder = Callable[[CompletionRequest], Optional[str]]

_PUNCT = re.compile(r"[^\w\s]")


def hashed_embedding(text: str, dim: int = 32) -> EmbeddingVector:
    """Bag of hashed tokens, L2-normalized.

    Tokens are the case-folded whitespace-separated words with punctuation
    removed; each adds 1.0 to the bucket sha256(token) mod dim.
    """
    tokens = _PUNCT.sub(" ", text.casefold()).split() or [text.strip()]
    vector = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        vector[int.from_bytes(digest[:8], "big") % dim] += 1.0
    return EmbeddingVector.from_array(vector).normalized()


class MockProviderGateway(ProviderGateway):
    """Deterministic offline provider.

    Completions resolve in order: the script table (prompt hash to one response
    or a list served in turn), then the responder callable, then the offline
    heuristic unless strict mode is on.
    """

    def __init__(
        self,
        script: Optional[Mapping[str, ScriptEntry]] = None,
        strict: bool = False,
        responder: Optional[Responder] = None,
        embedding_dim: int = 32,
        max_retries: int = 3,
    ):
        self.script: Dict[str, ScriptEntry] = dict(script or {})
        self.strict = strict
        self.responder = responder
        self.embedding_dim = embedding_dim
        self.max_retries = max_retries
        self.offline = OfflineResponder()
        self.calls: List[CompletionRequest] = []
        self.embed_calls: List[List[str]] = []
        self._served: Dict[str, int] = {}

    def load_script(self, path: Union[str, Path]) -> None:
        """Add scripted responses from a JSON file of {prompt_hash: response(s)}"""
        script = read_json(path)
        if not isinstance(script, dict):
            raise ConfigError(f"Mock script {path} must map prompt hashes to responses")
        self.script.update(script)
        logger.info(f"Loaded {len(script)} scripted responses from {path}")

    def _scripted(self, prompt_hash: str) -> Optional[str]:
        entry = self.script.get(prompt_hash)
        if entry is None:
            return None
        if isinstance(entry, str):
            return entry
        served = self._served.get(prompt_hash, 0)
        self._served[prompt_hash] = served + 1
        # the last scripted answer repeats once the list is exhausted
        return entry[min(served, len(entry) - 1)]

    async def complete(self, request: CompletionRequest) -> str:
        self.calls.append(request)
        prompt_hash = request.prompt_hash()
        response = self._scripted(prompt_hash)
        if response is None and self.responder is not None:
            response = self.responder(request)
        if response is None:
            if self.strict or not self.offline.supports(request):
                logger.error(f"Failed to answer unscripted prompt {prompt_hash} ({request.template_id})")
                raise UnscriptedPrompt(prompt_hash)
            response = self.offline(request)
        logger.debug(f"Mock answered {request.template_id or prompt_hash[:12]}")
        return response

    async def embed_batch(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        for index, text in enumerate(texts):
            if not text or not text.strip():
                raise EmptyText(index)
        self.embed_calls.append(list(texts))
        return [hashed_embedding(text, self.embedding_dim) for text in texts]

    def calls_for(self, template_prefix: str) -> List[CompletionRequest]:
        return [c for c in self.calls if c.template_id.startswith(template_prefix)]
