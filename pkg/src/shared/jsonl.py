import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Union

from .errors import InvalidRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def dumps_line(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def _atomic_write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: PathLike, records: Iterable[Dict[str, Any]]) -> int:
    """Write records atomically, one sorted-key JSON object per line"""
    lines = [dumps_line(r) for r in records]
    _atomic_write(Path(path), "".join(line + "\n" for line in lines))
    logger.debug(f"Wrote {len(lines)} records to {path}")
    return len(lines)


def iter_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    """Yield one object per non-blank line; bad UTF-8 or JSON raises InvalidRecord with the line number"""
    with open(path, "rb") as fh:
        for number, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise InvalidRecord(f"invalid UTF-8 in {path} at byte {e.start}", line=number) from e
            if not line.strip():
                continue
            try:
                value = json.loads(line)
            except json.JSONDecodeError as e:
                raise InvalidRecord(f"invalid JSON in {path}: {e.msg}", line=number) from e
            if not isinstance(value, dict):
                raise InvalidRecord(f"expected an object in {path}", line=number)
            yield value


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    return list(iter_jsonl(path))


def write_json(path: PathLike, value: Any) -> None:
    _atomic_write(Path(path), json.dumps(value, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise InvalidRecord(f"invalid JSON in {path}: {e.msg}", line=e.lineno) from e
        except UnicodeDecodeError as e:
            raise InvalidRecord(f"invalid UTF-8 in {path} at byte {e.start}") from e
