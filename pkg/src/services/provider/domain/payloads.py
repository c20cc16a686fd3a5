import json
from typing import Any, Dict, Optional

from src.shared.errors import MalformedPayload


def _byte_offset(raw: str, index: int) -> int:
    return len(raw[:index].encode("utf-8"))


def _balanced_end(raw: str, start: int) -> Optional[int]:
    """Index of the brace closing the object opened at ``start``"""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None


def parse_json_payload(raw: str) -> Dict[str, Any]:
    """Parse the first balanced top-level JSON object in a model response.

    Code fences and leading prose are skipped; the object itself is never
    rewritten. Raises MalformedPayload with the byte offset of the failure.
    """
    first_error: Optional[MalformedPayload] = None
    start = raw.find("{")
    while start != -1:
        end = _balanced_end(raw, start)
        if end is None:
            error = MalformedPayload("unbalanced JSON object", _byte_offset(raw, len(raw)))
            raise first_error or error
        try:
            value = json.loads(raw[start:end + 1])
        except json.JSONDecodeError as e:
            if first_error is None:
                first_error = MalformedPayload(f"invalid JSON: {e.msg}", _byte_offset(raw, start + e.pos))
            start = raw.find("{", end + 1)
            continue
        return value
    if first_error is not None:
        raise first_error
    raise MalformedPayload("no JSON object found", _byte_offset(raw, len(raw)))


def require_field(payload: Dict[str, Any], name: str) -> Any:
    if name not in payload:
        raise MalformedPayload(f"missing field {name!r}", 0)
    return payload[name]
