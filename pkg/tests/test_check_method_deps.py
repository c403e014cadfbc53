from __future__ import annotations

import pytest

from scripts import check_method_deps


def test_all_numerical_dependencies_pass(capsys: pytest.CaptureFixture[str]) -> None:
    assert check_method_deps.main() == 0

    out = capsys.readouterr().out
    assert out.count("PASS:") == len(check_method_deps.REQUIRED)
    assert "FAIL" not in out


def test_missing_module_is_reported(
    monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    monkeypatch.setattr(
        check_method_deps, "REQUIRED", [*check_method_deps.REQUIRED, ("no_such_module", "x")]
    )

    assert check_method_deps.main() == 1
    assert "FAIL: no_such_module (ModuleNotFoundError" in capsys.readouterr().out
