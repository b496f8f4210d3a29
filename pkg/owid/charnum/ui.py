"""Console helpers: coloured progress on stderr, JSON documents and error reports."""

import json
import sys
from typing import Any, NoReturn

import click


def log(action: str, message: str) -> None:
    """Print a progress line to stderr."""
    action = f"{action:20s}"
    click.echo(f"{blue(action)}{message}", err=True)


def warn(action: str, message: str) -> None:
    """Print a highlighted problem line to stderr."""
    action = f"{action:20s}"
    click.echo(f"{red(action)}{message}", err=True)


def emit(payload: Any) -> None:
    """Print a JSON document to stdout, keys in insertion order."""
    click.echo(json.dumps(payload, indent=2, allow_nan=True))


def bail(message: str, exit_code: int = 1, error: str = "CharnumError") -> NoReturn:
    """Print a machine-readable error report to stderr, then exit."""
    report = {"error": error, "message": message, "exit_code": exit_code}
    click.echo(json.dumps(report), err=True)
    sys.exit(exit_code)


def blue(s: str) -> str:
    """Add click style (blue color)."""
    return _colorize(s, fg="blue")


def red(s: str) -> str:
    """Add click style (red color)."""
    return _colorize(s, fg="red")


def _colorize(s: str, fg: str) -> str:
    return click.style(s, fg=fg)
