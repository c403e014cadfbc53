from __future__ import annotations

import importlib
from importlib import metadata

# (import name, distribution name)
REQUIRED = [
    ("numpy", "numpy"),
    ("scipy", "scipy"),
    ("scipy.signal", "scipy"),
    ("scipy.special", "scipy"),
]


def _check(module_name: str, distribution: str) -> bool:
    try:
        importlib.import_module(module_name)
    except Exception as exc:
        print(f"FAIL: {module_name} ({exc.__class__.__name__}: {exc})")
        return False
    try:
        version = metadata.version(distribution)
    except metadata.PackageNotFoundError:
        version = "unknown"
    print(f"PASS: {module_name} ({distribution} {version})")
    return True


def main() -> int:
    ok = True
    for name, distribution in REQUIRED:
        ok = _check(name, distribution) and ok

    if not ok:
        print("\nOne or more numerical dependencies are missing.")
        print("Install with: pip install -r requirements-methods.txt")
        return 1

    print("\nAll numerical dependencies present; temppnet can train and evaluate.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
