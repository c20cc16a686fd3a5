from typing import Any, Optional


class PipelineError(Exception):
    """Base class for all pipeline errors"""


# Domain model

class InvalidRecord(PipelineError, ValueError):
    """A stored or constructed record violates its schema"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownSentiment(InvalidRecord):
    def __init__(self, label: Any):
        self.label = label
        super().__init__(f"Unknown sentiment label: {label!r}")


class EmptyReview(InvalidRecord):
    def __init__(self, review_id: str):
        self.review_id = review_id
        super().__init__(f"Review {review_id!r} has empty text")


class MissingProduct(PipelineError, KeyError):
    def __init__(self, review_id: str):
        self.review_id = review_id
        super().__init__(f"No product known for review {review_id!r}")

    def __str__(self) -> str:
        return self.args[0]


class DimensionMismatch(PipelineError, ValueError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Embedding dimension mismatch: expected {expected}, got {actual}")


# Provider gateway

class ProviderUnavailable(PipelineError):
    def __init__(self, message: str, attempts: int = 0):
        self.attempts = attempts
        super().__init__(message)


class AuthError(PipelineError):
    """Credentials were rejected by the provider"""


class UnscriptedPrompt(PipelineError):
    def __init__(self, prompt_hash: str):
        self.prompt_hash = prompt_hash
        super().__init__(f"No scripted response for prompt {prompt_hash}")


class EmptyText(PipelineError, ValueError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Text at position {index} is empty")


class MalformedPayload(PipelineError, ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (offset {offset})")


# Refinement

class UnknownTheme(PipelineError, ValueError):
    def __init__(self, theme_id: str):
        self.theme_id = theme_id
        super().__init__(f"Unknown theme: {theme_id!r}")


class ConflictingDecision(PipelineError, ValueError):
    def __init__(self, theme_id: str, reason: str = "appears in more than one decision"):
        self.theme_id = theme_id
        super().__init__(f"Conflicting decision for {theme_id!r}: {reason}")


# Extraction

class MalformedVerdict(PipelineError, ValueError):
    def __init__(self, response: str):
        self.response = response
        super().__init__(f"Verdict does not start with Yes or No: {response[:80]!r}")


# Summarization

class EmptyInput(PipelineError, ValueError):
    """A summary was requested over no input items"""


# Benchmark

class InsufficientOpinions(PipelineError, ValueError):
    def __init__(self, group: Any, available: int, target: int):
        self.group = group
        self.available = available
        self.target = target
        super().__init__(f"Group {group} has {available} candidate opinions, {target} required")


class BaseSizeMismatch(PipelineError, ValueError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Base set must hold {expected} opinions, got {actual}")


# Evaluation

class EmptySource(PipelineError, ValueError):
    """Source theme set is empty"""


class MalformedDecimal(PipelineError, ValueError):
    def __init__(self, response: str):
        self.response = response
        super().__init__(f"Expected a decimal in [0, 1], got {response[:80]!r}")


class OutOfRange(PipelineError, ValueError):
    def __init__(self, value: Any, low: float, high: float):
        self.value = value
        super().__init__(f"Value {value!r} outside [{low}, {high}]")


class EmptyTally(PipelineError, ValueError):
    """Percentages requested from a tally with no verdicts"""


# CLI

class ConfigError(PipelineError):
    """Configuration file is missing or invalid"""


class MissingInput(PipelineError):
    def __init__(self, path: Any, stage: str = ""):
        self.path = path
        self.stage = stage
        prefix = f"{stage}: " if stage else ""
        super().__init__(f"{prefix}missing input file {path}")


class UsageError(PipelineError):
    """Command line could not be understood"""
