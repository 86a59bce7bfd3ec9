"""Small fixed-layout tables, rendered as aligned text or CSV."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Table:
    title: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    cells: tuple[tuple, ...]  # row-major; ints, floats, or strings


def _fmt(cell, float_fmt: str) -> str:
    if isinstance(cell, str):
        return cell
    if isinstance(cell, bool):
        return str(cell)
    if isinstance(cell, int):
        return str(cell)
    if cell is None:
        return "n/a"
    return float_fmt % float(cell)


def render_text(table: Table, float_fmt: str = "%.2f") -> str:
    """Human-aligned layout: row labels left, one right-justified column per BT."""
    if not table.row_labels or not table.col_labels:
        return ""
    grid = [[_fmt(c, float_fmt) for c in row] for row in table.cells]
    label_w = max(len(r) for r in table.row_labels)
    col_w = [
        max(len(table.col_labels[j]), max(len(row[j]) for row in grid))
        for j in range(len(table.col_labels))
    ]
    lines = [
        " " * label_w
        + "  "
        + "  ".join(h.rjust(col_w[j]) for j, h in enumerate(table.col_labels))
    ]
    for label, row in zip(table.row_labels, grid):
        lines.append(
            label.ljust(label_w)
            + "  "
            + "  ".join(cell.rjust(col_w[j]) for j, cell in enumerate(row))
        )
    return "\n".join(lines) + "\n"


def render_csv(table: Table, float_fmt: str = "%.9f") -> str:
    """Machine layout: metric column plus one column per BT."""
    if not table.row_labels or not table.col_labels:
        return ""
    lines = ["metric," + ",".join(table.col_labels)]
    for label, row in zip(table.row_labels, table.cells):
        lines.append(label + "," + ",".join(_fmt(c, float_fmt) for c in row))
    return "\n".join(lines) + "\n"
