# File Summary: Console rendering helpers for styled and boxed output on stderr.

"""
Output formatting utilities for the kgdbw experiment runner.

Everything here writes to stderr so that CSV sent to stdout stays clean.
Colors are disabled when NO_COLOR is set or stderr is not a terminal.
"""

import os
import re
import shutil
import sys
import textwrap
from typing import Dict, List, Mapping

ANSI_ESCAPE_RE = re.compile(r"\x1b\[[0-?]*[ -/]*[@-~]")


def _supports_color() -> bool:
    if os.environ.get("NO_COLOR"):
        return False
    try:
        return sys.stderr.isatty()
    except Exception:
        return False


USE_COLOR = _supports_color()


def _color(code: str) -> str:
    return code if USE_COLOR else ""


class Color:
    """ANSI color codes for terminal output."""

    RESET = _color("\033[0m")
    BOLD = _color("\033[1m")
    BORDER = _color("\033[38;5;244m")
    TITLE = _color("\033[38;5;81m")
    SUCCESS = _color("\033[38;5;82m")
    ERROR = _color("\033[38;5;203m")
    KEYWORD = _color("\033[38;5;208m")
    TEXT = _color("\033[38;5;252m")
    ACCENT = _color("\033[38;5;141m")


MIN_BOX_WIDTH = 48
MAX_BOX_WIDTH = 110

BOX_STYLES: Dict[str, Dict[str, str]] = {
    "info": {"border": Color.BORDER, "title": Color.TITLE + Color.BOLD},
    "error": {"border": Color.ERROR, "title": Color.ERROR + Color.BOLD},
    "success": {"border": Color.SUCCESS, "title": Color.SUCCESS + Color.BOLD},
}


def _emit(text: str = "") -> None:
    print(text, file=sys.stderr)


def _visible_len(text: str) -> int:
    return len(ANSI_ESCAPE_RE.sub("", text))


def _current_box_width() -> int:
    env_width = os.environ.get("KGDBW_BOX_WIDTH")
    if env_width:
        try:
            forced = int(env_width)
            if forced >= 40:
                return min(forced, MAX_BOX_WIDTH)
        except ValueError:
            pass

    columns = shutil.get_terminal_size(fallback=(96, 24)).columns
    return min(max(columns - 4, MIN_BOX_WIDTH), MAX_BOX_WIDTH)


def _wrap_lines(text: str, width: int) -> List[str]:
    """Wrap plain lines to width; styled lines are kept whole."""
    lines: List[str] = []
    for raw in text.splitlines() or [""]:
        if ANSI_ESCAPE_RE.search(raw) or len(raw) <= width:
            lines.append(raw)
        else:
            lines.extend(textwrap.wrap(raw, width=width, subsequent_indent="  "))
    return lines


def _render_panel(title: str, content: str, style: str) -> str:
    width = _current_box_width()
    inner = width - 4
    palette = BOX_STYLES[style]
    border = palette["border"]
    rule = "─" * (width - 2)

    parts = [
        f"{border}╭{rule}╮{Color.RESET}",
        f"{border}│{Color.RESET} {palette['title']}{title.upper().center(inner)}{Color.RESET} {border}│{Color.RESET}",
        f"{border}├{rule}┤{Color.RESET}",
    ]
    for line in _wrap_lines(content, inner):
        pad = " " * max(0, inner - _visible_len(line))
        text_color = "" if ANSI_ESCAPE_RE.search(line) else Color.TEXT
        parts.append(f"{border}│{Color.RESET} {text_color}{line}{Color.RESET}{pad} {border}│{Color.RESET}")
    parts.append(f"{border}╰{rule}╯{Color.RESET}")
    return "\n".join(parts)


def format_summary(values: Mapping[str, object]) -> str:
    """Align "key  value" lines for a summary box."""
    if not values:
        return ""
    pad = max(len(k) for k in values)
    out = []
    for key, value in values.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        out.append(f"{key.ljust(pad)}  {value}")
    return "\n".join(out)


def print_boxed(title: str, content: str, *, style: str = "info"):
    """Display content in a box with title."""
    _emit()
    _emit(_render_panel(title, content, style))


def print_summary(title: str, values: Mapping[str, object], *, style: str = "success"):
    print_boxed(title, format_summary(values), style=style)


def print_error(message: str):
    """Display error message - COMPACT."""
    _emit(f"{Color.ERROR}✗ Error: {message}{Color.RESET}")


def print_info(message: str):
    """Display informational text - COMPACT."""
    _emit(f"{Color.TITLE}[{message}]{Color.RESET}")


def print_warning(message: str):
    """Display warnings - COMPACT."""
    _emit(f"{Color.KEYWORD}⚠ {message}{Color.RESET}")
