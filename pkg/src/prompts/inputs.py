"""User-prompt layouts shared by the prompt builders and the offline responder."""
import json
import re
from typing import Any, Dict, List, Sequence, Tuple

REVIEW_HEADER = "User review:\n"
THEME_HEADER = "\n\nTheme label: "
DEFINITION_HEADER = "\nDefinition: "
OUTPUT_HEADER = "\n\nModel output:\n"

INPUT_HEADER = "Input text:\n"
SUMMARY1_HEADER = "\n\nsummary1:\n"
SUMMARY2_HEADER = "\n\nsummary2:\n"

REVIEWS_HEADER = "Source reviews:\n"
CANDIDATE_HEADER = "\n\nCandidate summary:\n"

_THEME_LINE = re.compile(r"^- \*\*(.+?)\*\*: ", re.MULTILINE)
_OPINION_LINE = re.compile(r"^- (?:\[([^\]]+)\] )?(.*)$")


def theme_definitions_block(themes: Sequence[Tuple[str, str]]) -> str:
    return "\n\n".join(f"- **{theme_id}**: {definition}" for theme_id, definition in themes)


def theme_names_in(system_prompt: str) -> List[str]:
    """Theme names in the order the definitions block lists them"""
    return _THEME_LINE.findall(system_prompt)


def validation_input(review_text: str, theme_id: str, definition: str, model_output: Dict[str, Any]) -> str:
    return (
        f"{REVIEW_HEADER}{review_text}{THEME_HEADER}{theme_id}{DEFINITION_HEADER}{definition}"
        f"{OUTPUT_HEADER}{json.dumps(model_output, ensure_ascii=False, sort_keys=True)}"
    )


def split_validation_input(text: str) -> Tuple[str, str, Dict[str, Any]]:
    """Inverse of validation_input: (review text, theme label, model output)"""
    body = text[len(REVIEW_HEADER):] if text.startswith(REVIEW_HEADER) else text
    review, _, rest = body.rpartition(THEME_HEADER)
    theme_and_def, _, output = rest.rpartition(OUTPUT_HEADER)
    theme, _, _definition = theme_and_def.partition(DEFINITION_HEADER)
    return review, theme, json.loads(output)


def opinion_lines(items: Sequence[Tuple[str, str]]) -> str:
    """Bullet list, one ``- [label] text`` line per item; empty label omits the tag"""
    return "\n".join(f"- [{label}] {text}" if label else f"- {text}" for label, text in items)


def parse_opinion_lines(text: str) -> List[Tuple[str, str]]:
    items = []
    for line in text.splitlines():
        match = _OPINION_LINE.match(line.strip())
        if match and line.strip().startswith("- "):
            items.append((match.group(1) or "", match.group(2)))
    return items


def judge_input(input_text: str, summary1: str, summary2: str) -> str:
    return f"{INPUT_HEADER}{input_text}{SUMMARY1_HEADER}{summary1}{SUMMARY2_HEADER}{summary2}"


def split_judge_input(text: str) -> Tuple[str, str, str]:
    body = text[len(INPUT_HEADER):] if text.startswith(INPUT_HEADER) else text
    head, _, summary2 = body.rpartition(SUMMARY2_HEADER)
    input_text, _, summary1 = head.rpartition(SUMMARY1_HEADER)
    return input_text, summary1, summary2


def geval_input(reviews_text: str, summary: str) -> str:
    return f"{REVIEWS_HEADER}{reviews_text}{CANDIDATE_HEADER}{summary}"


def split_geval_input(text: str) -> Tuple[str, str]:
    body = text[len(REVIEWS_HEADER):] if text.startswith(REVIEWS_HEADER) else text
    reviews, _, summary = body.rpartition(CANDIDATE_HEADER)
    return reviews, summary
