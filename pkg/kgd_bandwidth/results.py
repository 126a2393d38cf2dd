# File Summary: CSV emission with a trailing version/seed metadata line.

"""
Result files.

Every CSV has a header row, rows in input-index order and a final comment
line `# version=<semver> seed=<seed>`, so identical flags and seed produce
byte-identical files.
"""

import sys
from pathlib import Path
from typing import Optional

import pandas as pd

from . import __version__
from .errors import InvalidArgumentError


def package_version() -> str:
    try:
        import importlib.metadata as _m
        return _m.version("kgd-bandwidth")
    except Exception:
        return __version__


def render_csv(frame: pd.DataFrame, seed: int) -> str:
    body = frame.to_csv(index=False, lineterminator="\n", float_format="%.17g")
    return f"{body}# version={package_version()} seed={seed}\n"


def write_csv(frame: pd.DataFrame, path: Optional[str], seed: int) -> Optional[Path]:
    """Write frame to path, or to stdout when path is None or "-"."""
    text = render_csv(frame, seed)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    target = Path(path)
    try:
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise InvalidArgumentError(f"Cannot write {target}: {e}")
    return target


def sibling_path(path: Optional[str], suffix: str) -> Optional[str]:
    """<stem>.<suffix>.csv next to path; None when writing to stdout."""
    if path is None or path == "-":
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{suffix}.csv"))
