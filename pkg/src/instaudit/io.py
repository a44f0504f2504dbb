"""File-level dataset reading: canonical documents or the authors' layout."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .data_model import Dataset, Schema, load_authors_layout, load_dataset
from .errors import DataError, MalformedInput, SchemaViolation


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"malformed input: cannot read {path}: {exc}") from None


def read_dataset(paths: str | Path | Sequence[str | Path],
                 schema: Schema | str | None = None) -> Dataset:
    """Load one canonical document, or one/several authors'-layout files.

    A canonical document carries its own schema; the authors' files are
    bare arrays, so ``schema`` is required for them.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    paths = [Path(p) for p in paths]
    texts = [_read_text(p) for p in paths]
    source = ",".join(str(p) for p in paths)
    try:
        first = json.loads(texts[0])
    except json.JSONDecodeError as exc:
        raise MalformedInput(
            f"malformed input: {paths[0]}: {exc.msg} at line {exc.lineno}, column {exc.colno}"
        ) from None
    if isinstance(first, list):
        if schema is None:
            raise SchemaViolation("schema violation: --schema is required for the authors' layout")
        return load_authors_layout(texts, schema, source=source)
    if len(paths) > 1:
        raise MalformedInput("malformed input: only the authors' layout spans several files")
    if schema is None:
        if not isinstance(first, dict) or first.get("schema") not in ("fake", "automated"):
            raise SchemaViolation('schema violation: document has no valid "schema" field')
        schema = first["schema"]
    return load_dataset(texts[0], schema, source=source)
