"""Minimal deterministic SVG line charts for curve artifacts.

The charts are static presentation files: fixed canvas, fixed decimal
formatting, no timestamps or random ids, so identical data always produces
byte-identical SVG. Non-finite x values (the +inf ROC threshold guard, for
example) are dropped before plotting.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import IoError, ValidationError

_WIDTH = 640
_HEIGHT = 440
_MARGIN_LEFT = 64
_MARGIN_RIGHT = 24
_MARGIN_TOP = 40
_MARGIN_BOTTOM = 52

_COLORS = ("#1f6fb2", "#c0392b", "#1e8449", "#7d3c98")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _axis_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def svg_line_chart(
    path,
    series: list[tuple[str, list[float], list[float]]],
    title: str,
    x_label: str,
    y_label: str,
) -> None:
    """Write one chart with any number of named (xs, ys) polylines."""
    finite: list[tuple[str, list[float], list[float]]] = []
    for name, xs, ys in series:
        pts = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
        ]
        if len(xs) != len(ys):
            raise ValidationError(f"series {name!r}: x and y lengths differ")
        if pts:
            finite.append((name, [p[0] for p in pts], [p[1] for p in pts]))
    if not finite:
        raise ValidationError("nothing to plot: no finite points in any series")

    x_min = min(min(xs) for _, xs, _ in finite)
    x_max = max(max(xs) for _, xs, _ in finite)
    y_min = min(min(ys) for _, _, ys in finite)
    y_max = max(max(ys) for _, _, ys in finite)
    if x_max == x_min:
        x_min, x_max = x_min - 0.5, x_max + 0.5
    if y_max == y_min:
        y_min, y_max = y_min - 0.5, y_max + 0.5

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x: float) -> float:
        return _MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
        f'<text x="{_WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_esc(title)}</text>',
    ]

    for tx in _axis_ticks(x_min, x_max):
        px = sx(tx)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_MARGIN_TOP}" x2="{_fmt(px)}" '
            f'y2="{_MARGIN_TOP + plot_h}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{_MARGIN_TOP + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tx)}</text>'
        )
    for ty in _axis_ticks(y_min, y_max):
        py = sy(ty)
        out.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{_fmt(py)}" x2="{_MARGIN_LEFT + plot_w}" '
            f'y2="{_fmt(py)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>'
        )

    out.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444444" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{_MARGIN_LEFT + plot_w // 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{_esc(x_label)}</text>'
    )
    out.append(
        f'<text x="18" y="{_MARGIN_TOP + plot_h // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {_MARGIN_TOP + plot_h // 2})">{_esc(y_label)}</text>'
    )

    for i, (name, xs, ys) in enumerate(finite):
        color = _COLORS[i % len(_COLORS)]
        points = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, ys))
        out.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT + plot_w - 6}" y="{_MARGIN_TOP + 16 + 14 * i}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="{color}">{_esc(name)}</text>'
        )

    out.append("</svg>")
    try:
        Path(path).write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write chart {path}: {exc}") from exc
