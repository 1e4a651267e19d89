"""Dependency-free SVG emission for the two batch reports: per-class sequence
heatmaps (row = sequence, column = minute, color = major activity category)
and the similarity scatter plot."""

from __future__ import annotations

from pathlib import Path

from .diary import MINUTES_PER_DAY, major_category_of

_PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
)


def _color_for(major: int) -> str:
    return _PALETTE[major % len(_PALETTE)]


def sequence_heatmap_svg(minute_arrays, path, row_height: int = 3) -> None:
    """Run-length encoded raster of per-minute major categories."""
    rows = list(minute_arrays)
    width = MINUTES_PER_DAY
    height = max(1, len(rows)) * row_height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for r, minutes in enumerate(rows):
        y = r * row_height
        start = 0
        current = major_category_of(int(minutes[0]))
        for m in range(1, MINUTES_PER_DAY + 1):
            major = major_category_of(int(minutes[m])) if m < MINUTES_PER_DAY else None
            if major != current:
                parts.append(
                    f'<rect x="{start}" y="{y}" width="{m - start}" height="{row_height}" '
                    f'fill="{_color_for(current)}"/>'
                )
                start = m
                current = major
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def similarity_scatter_svg(reports, path, size: int = 480) -> None:
    """Mode similarity (x) against Gini correlation (y) with the 0.6 and 0.8
    threshold guides."""
    margin = 40
    span = size - 2 * margin

    def sx(v: float) -> float:
        return margin + max(0.0, min(1.0, v)) * span

    def sy(v: float) -> float:
        return size - margin - max(0.0, min(1.0, v)) * span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="#ffffff"/>',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" '
        'fill="none" stroke="#333333"/>',
    ]
    for threshold, color in ((0.6, "#bbbbbb"), (0.8, "#888888")):
        parts.append(
            f'<line x1="{sx(threshold)}" y1="{margin}" x2="{sx(threshold)}" y2="{size - margin}" '
            f'stroke="{color}" stroke-dasharray="4 3"/>'
        )
        parts.append(
            f'<line x1="{margin}" y1="{sy(threshold)}" x2="{size - margin}" y2="{sy(threshold)}" '
            f'stroke="{color}" stroke-dasharray="4 3"/>'
        )
    parts.append(
        f'<text x="{size / 2:.0f}" y="{size - 8}" font-size="12" text-anchor="middle" '
        'font-family="sans-serif">mode similarity</text>'
    )
    parts.append(
        f'<text x="12" y="{size / 2:.0f}" font-size="12" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 12 {size / 2:.0f})">Gini correlation</text>'
    )
    for r in reports:
        parts.append(
            f'<circle cx="{sx(r.mode_similarity):.2f}" cy="{sy(r.gini_r):.2f}" r="4" '
            'fill="#4e79a7" fill-opacity="0.75" stroke="#2f4b6e"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
