from __future__ import annotations

import json
from pathlib import Path
from typing import Any


def canonicalize(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): canonicalize(value[k]) for k in sorted(value, key=str)}
    if isinstance(value, (list, tuple)):
        return [canonicalize(v) for v in value]
    return value


def dumps_stable(data: Any, *, indent: int | None = 2) -> str:
    """Serialize with sorted keys; compact separators when ``indent`` is None."""

    if indent is None:
        return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return json.dumps(data, indent=indent, sort_keys=True, ensure_ascii=False)


def read_json(path: str | Path) -> Any:
    p = Path(path)
    return json.loads(p.read_text(encoding="utf-8"))


def write_json(
    path: str | Path,
    data: Any,
    *,
    make_parents: bool = False,
    indent: int = 2,
) -> Path:
    """Write JSON deterministically (UTF-8, sorted keys, LF newlines, trailing newline).

    Two calls with equal ``data`` produce byte-identical files, which is what run
    manifests, checkpoints and reports rely on.
    """

    p = Path(path)
    if make_parents:
        p.parent.mkdir(parents=True, exist_ok=True)

    p.write_text(dumps_stable(data, indent=indent) + "\n", encoding="utf-8", newline="\n")
    return p


def write_jsonl(path: str | Path, rows: list[Any], *, make_parents: bool = False) -> Path:
    p = Path(path)
    if make_parents:
        p.parent.mkdir(parents=True, exist_ok=True)

    with p.open("w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(dumps_stable(row, indent=None))
            f.write("\n")
    return p
