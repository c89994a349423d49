#!/usr/bin/env python3
"""Check the codec packages for logging pattern violations.

Rules:
1. LOG001: no direct 'import logging' outside bv_shared's logging module
2. LOG002: no print() under src/, except the bvpc command line, whose
   standard output carries the JSON summaries
3. LOG003: logger calls take keyword context, not f-string messages
"""

import ast
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

LOGGER_METHODS = {"debug", "info", "warning", "error", "critical", "exception"}
HELPERS = {"log_error", "log_stage", "log_rate", "log_duration"}

EXCLUDED_PARTS = {
    ".venv",
    "venv",
    "__pycache__",
    ".pytest_cache",
    ".mypy_cache",
    "build",
    "dist",
    ".git",
    "examples",
}
# The logging configuration itself may import logging.
LOGGING_MODULES = {"logging.py"}
PRINT_ALLOWED = {"cli.py"}


class LoggingPatternChecker:
    """Collect LOG001-LOG003 violations under a directory."""

    def __init__(self, root_dir: Path):
        self.root_dir = root_dir
        self.errors: List[Tuple[Path, int, str]] = []

    def check_file(self, file_path: Path) -> None:
        if any(part in EXCLUDED_PARTS for part in file_path.parts):
            return
        try:
            tree = ast.parse(file_path.read_text(encoding="utf-8"), str(file_path))
        except SyntaxError as e:
            print(f"Syntax error in {file_path}: {e}", file=sys.stderr)
            return
        self._check_imports(tree, file_path)
        self._check_prints(tree, file_path)
        self._check_logger_calls(tree, file_path)

    def _add(self, file_path: Path, node: ast.AST, message: str) -> None:
        self.errors.append((file_path, getattr(node, "lineno", 0), message))

    def _check_imports(self, tree: ast.AST, file_path: Path) -> None:
        if file_path.name in LOGGING_MODULES or "scripts" in file_path.parts:
            return
        message = (
            "LOG001: Direct 'import logging' is not allowed - "
            "use 'from bv_shared import configure_logging'"
        )
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                if any(alias.name == "logging" for alias in node.names):
                    self._add(file_path, node, message)
            elif isinstance(node, ast.ImportFrom):
                # relative imports such as "from .logging import ..." are fine
                if node.module == "logging" and node.level == 0:
                    self._add(file_path, node, message)

    def _check_prints(self, tree: ast.AST, file_path: Path) -> None:
        if "src" not in file_path.parts or file_path.name in PRINT_ALLOWED:
            return
        for node in ast.walk(tree):
            if (
                isinstance(node, ast.Call)
                and isinstance(node.func, ast.Name)
                and node.func.id == "print"
            ):
                self._add(
                    file_path,
                    node,
                    "LOG002: print() is not allowed in src/ directories "
                    "- use logger instead",
                )

    def _check_logger_calls(self, tree: ast.AST, file_path: Path) -> None:
        for node in ast.walk(tree):
            if not isinstance(node, ast.Call) or not self._is_logging_call(node):
                continue
            values = list(node.args) + [keyword.value for keyword in node.keywords]
            if any(isinstance(value, ast.JoinedStr) for value in values):
                self._add(
                    file_path,
                    node,
                    "LOG003: Logger calls must use structured logging with "
                    "keyword arguments, not f-strings",
                )

    @staticmethod
    def _is_logging_call(node: ast.Call) -> bool:
        func = node.func
        if isinstance(func, ast.Name):
            return func.id in HELPERS
        return (
            isinstance(func, ast.Attribute)
            and isinstance(func.value, ast.Name)
            and func.value.id == "logger"
            and func.attr in LOGGER_METHODS
        )

    def scan_directory(self, directory: Optional[Path] = None) -> None:
        for py_file in sorted((directory or self.root_dir).rglob("*.py")):
            self.check_file(py_file)

    def report(self) -> int:
        """Print violations; 0 when there are none, 1 otherwise."""
        if not self.errors:
            print("No logging pattern violations found")
            return 0

        print(f"Found {len(self.errors)} logging pattern violation(s):\n")
        for file_path, line_no, message in sorted(
            self.errors, key=lambda x: (str(x[0]), x[1])
        ):
            try:
                rel_path = file_path.relative_to(self.root_dir)
            except ValueError:
                rel_path = file_path
            print(f"{rel_path}:{line_no}: {message}")
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Scan the given directory, the repository root by default."""
    args = list(sys.argv[1:] if argv is None else argv)
    root_dir = Path(args[0]) if args else Path(__file__).parent.parent

    print(f"Checking logging patterns in {root_dir}...\n")
    checker = LoggingPatternChecker(root_dir)
    checker.scan_directory()
    return checker.report()


if __name__ == "__main__":
    sys.exit(main())
