from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Any

from temppnet.evidence.stable_json import canonicalize, dumps_stable

MANIFEST_NAME = "manifest.sha256"
# Wall-clock provenance; never part of the reproducible manifest.
EXECUTION_LOG_NAME = "execution_log.json"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    file_path = Path(path)
    digest = hashlib.sha256()
    with file_path.open("rb") as f:
        for chunk in iter(lambda: f.read(1024 * 1024), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fingerprint_payload(payload: dict[str, Any]) -> str:
    """sha256 of the canonical compact JSON form of ``payload``."""

    canonical = canonicalize(payload)
    return sha256_bytes(dumps_stable(canonical, indent=None).encode("utf-8"))


def write_manifest_sha256(run_dir: str | Path, exclude: set[str] | None = None) -> Path:
    run_path = Path(run_dir)
    exclude_set = {MANIFEST_NAME, EXECUTION_LOG_NAME} if exclude is None else set(exclude)

    entries: list[tuple[str, str]] = []
    for child in run_path.rglob("*"):
        if not child.is_file():
            continue

        rel_name = child.relative_to(run_path).as_posix()
        if rel_name in exclude_set or child.name in exclude_set:
            continue

        entries.append((rel_name, sha256_file(child)))

    entries.sort(key=lambda t: t[0])

    manifest_path = run_path / MANIFEST_NAME
    with manifest_path.open("w", encoding="utf-8", newline="\n") as f:
        for rel_name, digest in entries:
            f.write(f"{digest}  {rel_name}\n")

    return manifest_path
