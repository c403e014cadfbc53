from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from temppnet.evidence.hash_utils import EXECUTION_LOG_NAME, MANIFEST_NAME, sha256_file

RESOLVED_CONFIG_NAME = "resolved_config.json"


@dataclass(frozen=True, slots=True)
class ValidationResult:
    ok: bool
    errors: list[str]
    warnings: list[str]


def _parse_manifest_lines(text: str) -> list[tuple[str, str]]:
    entries: list[tuple[str, str]] = []
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        parts = line.split(maxsplit=1)
        if len(parts) < 2:
            raise ValueError(f"Invalid manifest line: {raw_line!r}")
        entries.append((parts[0], parts[1].strip()))
    return entries


def validate_bundle(run_dir: str | Path) -> ValidationResult:
    """Check a run directory: resolved config present, every manifest hash matching."""

    run_path = Path(run_dir)
    errors: list[str] = []
    warnings: list[str] = []

    if not run_path.exists():
        return ValidationResult(False, [f"Run path does not exist: {run_path}"], [])
    if not run_path.is_dir():
        return ValidationResult(False, [f"Run path is not a directory: {run_path}"], [])

    manifest_path = run_path / MANIFEST_NAME
    if not manifest_path.exists():
        errors.append(f"Missing required file: {MANIFEST_NAME}")
        return ValidationResult(False, errors, warnings)

    if not (run_path / RESOLVED_CONFIG_NAME).exists():
        errors.append(f"Missing required file: {RESOLVED_CONFIG_NAME}")
    if not (run_path / EXECUTION_LOG_NAME).exists():
        warnings.append(f"Missing recommended file: {EXECUTION_LOG_NAME}")

    try:
        entries = _parse_manifest_lines(manifest_path.read_text(encoding="utf-8", errors="strict"))
    except (UnicodeDecodeError, ValueError) as exc:
        errors.append(f"Failed to parse {MANIFEST_NAME}: {exc.__class__.__name__}: {exc}")
        return ValidationResult(False, errors, warnings)

    if not entries:
        errors.append(f"{MANIFEST_NAME} contains no entries")
        return ValidationResult(False, errors, warnings)

    listed = set()
    for expected_digest, rel_path in entries:
        rel = Path(rel_path)
        if rel.is_absolute():
            errors.append(f"Manifest entry must be relative, got absolute path: {rel_path}")
            continue
        file_path = (run_path / rel).resolve()
        try:
            file_path.relative_to(run_path.resolve())
        except ValueError:
            errors.append(f"Manifest entry escapes run dir: {rel_path}")
            continue
        if not file_path.is_file():
            errors.append(f"Missing file listed in manifest: {rel_path}")
            continue
        listed.add(rel.as_posix())
        actual_digest = sha256_file(file_path)
        if actual_digest != expected_digest:
            errors.append(
                f"SHA256 mismatch for {rel_path}: expected={expected_digest} actual={actual_digest}"
            )

    for child in sorted(run_path.rglob("*")):
        rel_name = child.relative_to(run_path).as_posix()
        if child.is_file() and rel_name not in listed | {MANIFEST_NAME, EXECUTION_LOG_NAME}:
            warnings.append(f"File not covered by manifest: {rel_name}")

    return ValidationResult(ok=not errors, errors=errors, warnings=warnings)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python scripts/validate_run_bundle.py",
        description="Validate a temppnet run directory against its manifest.sha256.",
    )
    parser.add_argument("run_dir", type=str, help="Path to a run output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    result = validate_bundle(args.run_dir)

    for w in result.warnings:
        print(f"WARN: {w}")

    if result.ok:
        print("PASS: run bundle is valid")
        return 0

    print("FAIL: run bundle is invalid")
    for e in result.errors:
        print(f"- {e}")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
