from dataclasses import dataclass
from typing import Any, Dict, Optional

from src.shared.seeding import sha256_text


@dataclass(frozen=True)
class CompletionRequest:
    """Chat-completion request"""
    model: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024
    seed: Optional[int] = None
    template_id: str = ""  # local bookkeeping, never sent

    def __post_init__(self):
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise ValueError("system and user prompts must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def prompt_hash(self) -> str:
        """Key of the mock script table"""
        return sha256_text(self.system_prompt + "\x00" + self.user_prompt)

    def to_wire(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "system": self.system_prompt,
            "user": self.user_prompt,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }
