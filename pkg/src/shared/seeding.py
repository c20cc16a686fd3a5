import hashlib
import json
from pathlib import Path
from typing import Any, Union


def derive_seed(master_seed: int, *parts: Any) -> int:
    """Derive a 63-bit seed from a master seed and entity identifiers (sha256 based)"""
    material = "\x1f".join([str(master_seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def short_id(*parts: Any) -> str:
    """Stable 16 hex char identifier for a tuple of values"""
    return sha256_text(canonical_json([list(p) if isinstance(p, tuple) else p for p in parts]))[:16]
