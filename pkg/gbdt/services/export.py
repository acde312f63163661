"""
Export Service

Writes sampled grids as CSV and seeds, realizations and reports as JSON.
Output is deterministic: floats use the shortest round-trip repr, JSON keys
are sorted, and every file is replaced atomically through a temp file in the
same directory.
"""

import csv
import io
import json
import logging
import math
import os
import re
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from ..core.solution import SolutionGrid
from ..models import GridSpec

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """Shortest round-trip decimal; 'nan' for flagged samples, no negative zero."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if value == 0.0:
        return "0.0"
    return repr(value)


def to_plain(obj: Any) -> Any:
    """JSON-ready copy: complex as [re, im], arrays as lists, NaN as null."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_plain(obj.real), to_plain(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return value + 0.0
    return obj


def atomic_write(path: str | Path, text: str) -> Path:
    """Write text to path through a temp file and os.replace."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug("Wrote %s (%d bytes)", target, len(text))
    return target


def write_json(path: str | Path, data: Any) -> Path:
    return atomic_write(path, json.dumps(to_plain(data), sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


ENTRY_LABEL = re.compile(r"(re|im)_(?:(\d+)_(\d+)|(\d)(\d))")


def entry_label(part: str, i: int, j: int, wide: bool) -> str:
    """re_ij / im_ij with 1-based indices; re_i_j once a dimension reaches 10."""
    return f"{part}_{i + 1}_{j + 1}" if wide else f"{part}_{i + 1}{j + 1}"


def parse_entry_label(label: str) -> tuple[str, int, int] | None:
    """(part, i, j) with 0-based indices, or None for x, t and component columns."""
    m = ENTRY_LABEL.fullmatch(label)
    if m is None:
        return None
    i, j = (m.group(2), m.group(3)) if m.group(2) is not None else (m.group(4), m.group(5))
    return m.group(1), int(i) - 1, int(j) - 1


def solution_header(solution: SolutionGrid) -> list[str]:
    rows, cols = solution.entry_shape
    wide = max(rows, cols) >= 10
    header = ["x", "t"] if solution.is_2d else ["x"]
    for i in range(rows):
        for j in range(cols):
            header += [entry_label("re", i, j, wide), entry_label("im", i, j, wide)]
    return header + list(solution.components)


def solution_rows(solution: SolutionGrid) -> list[list[str]]:
    """One row per sample, t-major on 2-D grids."""
    grid = solution.grid
    values = solution.values if solution.is_2d else solution.values[None]
    comps = {k: (v if solution.is_2d else v[None]) for k, v in solution.components.items()}
    out = []
    for it, t in enumerate(grid.ts):
        for ix, x in enumerate(grid.xs):
            row = [format_float(x), format_float(t)] if solution.is_2d else [format_float(x)]
            for z in values[it, ix].reshape(-1):
                row += [format_float(z.real), format_float(z.imag)]
            row += [format_float(c[it, ix]) for c in comps.values()]
            out.append(row)
    return out


def write_solution(solution: SolutionGrid, path: str | Path) -> Path:
    """CSV of the grid plus a sibling .json with the metadata."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(solution_header(solution))
    writer.writerows(solution_rows(solution))
    target = atomic_write(path, buf.getvalue())
    write_json(
        Path(target).with_suffix(".json"),
        {"system": solution.system, "grid": solution.grid.model_dump(exclude_none=True), "metadata": solution.metadata},
    )
    return target


def read_solution(path: str | Path, system: str, grid: GridSpec) -> SolutionGrid:
    """
    Rebuild a SolutionGrid from a CSV written by write_solution.

    Raises:
        ValueError: no entry columns, or a sample count that does not match the grid
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    entries = {k: parsed for k, h in enumerate(header) if (parsed := parse_entry_label(h)) is not None}
    if not entries:
        raise ValueError(f"{path} has no re_/im_ entry columns")
    rows = 1 + max(i for _, i, _ in entries.values())
    cols = 1 + max(j for _, _, j in entries.values())
    expected = grid.nx * (grid.nt or 1)
    if data.shape[0] != expected:
        raise ValueError(f"{path} has {data.shape[0]} samples, the grid has {expected}")
    values = np.zeros((data.shape[0], rows, cols), dtype=np.complex128)
    for k, (part, i, j) in entries.items():
        values[:, i, j] += data[:, k] if part == "re" else 1j * data[:, k]
    shape = (grid.nt, grid.nx) if grid.is_2d else (grid.nx,)
    return SolutionGrid(system=system, grid=grid, values=values.reshape(*shape, rows, cols))
