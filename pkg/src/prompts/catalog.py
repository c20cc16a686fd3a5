import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src.shared.errors import ConfigError
from src.shared.jsonl import iter_jsonl, read_json

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent / "templates"
THEME_DIR = Path(__file__).parent / "themes"
BUILTIN_PREFIX = "builtin:"

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


@dataclass(frozen=True)
class FewShotExample:
    """Input/output pair shown to the model before the real input"""
    input: str
    output: str


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt template with {{name}} placeholders"""
    template_id: str
    body: str

    def placeholders(self) -> List[str]:
        return sorted(set(_PLACEHOLDER.findall(self.body)))

    def render(self, variables: Dict[str, Any]) -> str:
        """Render template with variables in a single pass"""
        missing = [name for name in self.placeholders() if name not in variables]
        if missing:
            raise ConfigError(f"Template {self.template_id} needs values for: {', '.join(missing)}")
        rendered = _PLACEHOLDER.sub(lambda m: str(variables[m.group(1)]), self.body)
        return rendered.rstrip() + "\n"


def format_examples(examples: List[FewShotExample]) -> str:
    if not examples:
        return ""
    blocks = [
        f"Example {i}\nInput: {ex.input}\nOutput: {ex.output}"
        for i, ex in enumerate(examples, start=1)
    ]
    return "\n" + "\n\n".join(blocks)


class PromptCatalog:
    """Shipped prompt templates plus optional few-shot examples"""

    def __init__(
        self,
        template_dir: Path = TEMPLATE_DIR,
        examples: Optional[Dict[str, List[FewShotExample]]] = None,
    ):
        self.template_dir = Path(template_dir)
        self.examples = examples or {}
        self._cache: Dict[str, PromptTemplate] = {}

    @classmethod
    def with_examples_file(cls, path: Optional[Union[str, Path]]) -> "PromptCatalog":
        """Load few-shot examples from {template_id: [{input, output}]}"""
        if path is None:
            return cls()
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise ConfigError(f"Examples file {path} must map template ids to lists")
        examples = {
            template_id: [FewShotExample(str(e["input"]), str(e["output"])) for e in items]
            for template_id, items in raw.items()
        }
        return cls(examples=examples)

    def ids(self) -> List[str]:
        return sorted(p.stem for p in self.template_dir.glob("*.txt"))

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self._cache:
            path = self.template_dir / f"{template_id}.txt"
            if not path.is_file():
                raise ConfigError(f"Unknown prompt template: {template_id}")
            self._cache[template_id] = PromptTemplate(template_id, path.read_text(encoding="utf-8"))
        return self._cache[template_id]

    def render(self, template_id: str, **variables: Any) -> str:
        template = self.get(template_id)
        variables.setdefault("examples", format_examples(self.examples.get(template_id, [])))
        return template.render(variables)


def load_builtin_theme_records(name: str) -> List[Dict[str, Any]]:
    """Theme records of a shipped catalog ("space" or "peersum")"""
    path = THEME_DIR / f"{name}.jsonl"
    if not path.is_file():
        raise ConfigError(f"Unknown builtin theme set: {name}")
    return list(iter_jsonl(path))
