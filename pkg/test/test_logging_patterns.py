"""Tests for scripts/check_logging_patterns.py."""

import importlib.util
from pathlib import Path
from types import ModuleType

import pytest

ROOT = Path(__file__).resolve().parent.parent
PACKAGES = [
    "bv-shared",
    "voxel-core",
    "entropy-coding",
    "attribute-codec",
    "geometry-codec",
    "pcc-tools",
]


def _load_checker() -> ModuleType:
    path = ROOT / "scripts" / "check_logging_patterns.py"
    spec = importlib.util.spec_from_file_location("check_logging_patterns", path)
    assert spec is not None and spec.loader is not None
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


checker_module = _load_checker()


def _codes(root: Path) -> list[str]:
    checker = checker_module.LoggingPatternChecker(root)
    checker.scan_directory()
    return sorted(message.split(":")[0] for _, _, message in checker.errors)


@pytest.mark.parametrize("package", PACKAGES)
def test_packages_follow_logging_rules(package: str) -> None:
    assert _codes(ROOT / package) == []


class TestViolations:
    """Test cases for each rule."""

    def test_direct_logging_import(self, tmp_path: Path) -> None:
        source = tmp_path / "pkg" / "src" / "pkg" / "module.py"
        source.parent.mkdir(parents=True)
        source.write_text("import logging\nfrom logging import getLogger\n")

        assert _codes(tmp_path) == ["LOG001", "LOG001"]

    def test_print_outside_cli(self, tmp_path: Path) -> None:
        package = tmp_path / "pkg" / "src" / "pkg"
        package.mkdir(parents=True)
        (package / "codec.py").write_text("print('hello')\n")
        (package / "cli.py").write_text("print('{}')\n")

        assert _codes(tmp_path) == ["LOG002"]

    def test_fstring_in_logger_calls(self, tmp_path: Path) -> None:
        source = tmp_path / "tool.py"
        source.write_text(
            "n = 1\n"
            "logger.info(f'encoded {n}')\n"
            "log_stage(logger, f'level {n}')\n"
            "logger.info('Encoded', count=n)\n"
        )

        assert _codes(tmp_path) == ["LOG003", "LOG003"]

    def test_main_exit_code(self, tmp_path: Path) -> None:
        (tmp_path / "clean.py").write_text("x = 1\n")

        assert checker_module.main([str(tmp_path)]) == 0
