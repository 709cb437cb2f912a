"""Block-structured delimited output and the matching parser.

One file holds one or more named blocks.  A block is a ``# block: NAME``
marker, a comma-separated header line, and data rows.  Comment lines before
the first block form the file preamble.  Numbers are written with %.17g so
a parse-rewrite cycle is lossless for doubles; non-numeric cells (framework
tags, flags) pass through as strings.
"""

from __future__ import annotations

import json
import time
from typing import Sequence

import numpy as np

from .core import FdtlabError

__all__ = ["write_blocks", "read_blocks", "write_manifest", "format_cell"]


def format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (complex, np.complexfloating)):
        raise FdtlabError("complex columns must be split into re/im before writing")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_blocks(path, blocks, preamble: Sequence[str] = ()) -> None:
    """blocks: sequence of (name, columns) with columns a dict of equal-length
    sequences.  Column order is the dict order."""
    lines = []
    for text in preamble:
        lines.append(f"# {text}")
    for name, columns in blocks:
        if not columns:
            raise FdtlabError(f"block {name!r} has no columns")
        lengths = {len(v) for v in columns.values()}
        if len(lengths) != 1:
            raise FdtlabError(f"block {name!r} columns differ in length")
        lines.append(f"# block: {name}")
        lines.append(",".join(columns.keys()))
        cols = list(columns.values())
        for row in zip(*cols):
            lines.append(",".join(format_cell(v) for v in row))
        # two blank lines so each block is a gnuplot index dataset
        lines.append("")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines).rstrip("\n") + "\n")


def read_blocks(path):
    """Parse a block file back into (preamble, {name: {column: array-or-list}}).

    Columns whose cells all parse as floats come back as float arrays,
    anything else as a list of strings.
    """
    preamble: list[str] = []
    out: dict[str, dict] = {}
    name = None
    header: list[str] | None = None
    rows: list[list[str]] = []

    def flush():
        nonlocal header, rows
        if name is None:
            return
        if header is None:
            raise FdtlabError(f"block {name!r} has no header line")
        cols: dict = {}
        for j, col in enumerate(header):
            cells = [r[j] for r in rows]
            try:
                cols[col] = np.array([float(c) for c in cells])
            except ValueError:
                cols[col] = cells
        out[name] = cols
        header, rows = None, []

    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("# block:"):
                flush()
                name = line.split(":", 1)[1].strip()
                continue
            if line.startswith("#"):
                if name is None:
                    preamble.append(line[1:].strip())
                continue
            if not line.strip():
                continue
            cells = line.split(",")
            if name is None:
                raise FdtlabError("data row before any block marker")
            if header is None:
                header = cells
            else:
                if len(cells) != len(header):
                    raise FdtlabError(f"ragged row in block {name!r}")
                rows.append(cells)
    flush()
    return preamble, out


def write_manifest(path, entries: dict) -> None:
    """JSON manifest; generated_at is the only run-dependent field."""
    doc = {
        "tool": "fdtlab",
        "units": "hbar = 1, hopping = 1",
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    doc.update(entries)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
