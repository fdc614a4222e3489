"""Tiny deterministic SVG writers for the CLI's plot artifacts.

Hand-rolled on purpose: output bytes depend only on the data, so rerunning
a command with the same inputs reproduces identical files.
"""

from __future__ import annotations

import numpy as np

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
    "#bcbd22",
    "#e377c2",
)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def polyline(self, points, color: str, width: float = 1.2, dash: str | None = None):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash_attr} points="{pts}"/>'
        )

    def line(self, x1, y1, x2, y2, color: str, width: float = 1.0):
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def rect(self, x, y, w, h, fill: str):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="{fill}"/>'
        )

    def text(self, x, y, content: str, size: int = 11, anchor: str = "start"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="{anchor}">{content}</text>'
        )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n{body}\n</svg>\n'
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span <= 0:
        span = 1.0
    return out_lo + (np.asarray(values, dtype=np.float64) - lo) * (out_hi - out_lo) / span


def line_chart(path, curves, title: str = "", width: int = 820, height: int = 320):
    """Overlayed 1-D curves; each curve is (values, color, stroke_width, dash|None, label)."""
    margin = 42
    canvas = Canvas(width, height)
    all_vals = np.concatenate([np.asarray(c[0], dtype=np.float64) for c in curves])
    lo, hi = float(all_vals.min()), float(all_vals.max())
    max_n = max(len(c[0]) for c in curves)
    canvas.rect(0, 0, width, height, "#ffffff")
    canvas.line(margin, height - margin, width - 12, height - margin, "#333333")
    canvas.line(margin, 12, margin, height - margin, "#333333")
    if title:
        canvas.text(width / 2, 24, title, size=13, anchor="middle")
    canvas.text(margin - 4, height - margin + 14, "0", size=9, anchor="end")
    canvas.text(width - 12, height - margin + 14, str(max_n - 1), size=9, anchor="end")
    canvas.text(margin - 6, height - margin, f"{lo:.3g}", size=9, anchor="end")
    canvas.text(margin - 6, 20, f"{hi:.3g}", size=9, anchor="end")
    for k, (values, color, stroke, dash, label) in enumerate(curves):
        values = np.asarray(values, dtype=np.float64)
        xs = _scale(np.arange(len(values)), 0, max(max_n - 1, 1), margin, width - 12)
        ys = _scale(values, lo, hi, height - margin, 12)
        canvas.polyline(zip(xs, ys), color, stroke, dash)
        if label:
            canvas.text(width - 150, 36 + 14 * k, label, size=10)
            canvas.line(width - 168, 32 + 14 * k, width - 154, 32 + 14 * k, color, 2.0)
    canvas.save(path)


def heatmap(path, matrix, title: str = "", max_cells: int = 160, width: int = 520):
    """Grayscale heatmap of a matrix, block-averaged down to max_cells per side."""
    m = np.asarray(matrix, dtype=np.float64)
    n_r, n_c = m.shape
    step_r = max(1, int(np.ceil(n_r / max_cells)))
    step_c = max(1, int(np.ceil(n_c / max_cells)))
    rr = (n_r // step_r) * step_r
    cc = (n_c // step_c) * step_c
    blocks = m[:rr, :cc].reshape(rr // step_r, step_r, cc // step_c, step_c).mean(axis=(1, 3))
    finite = blocks[np.isfinite(blocks)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 1.0
    span = hi - lo if hi > lo else 1.0
    header = 30
    cell = max(2.0, (width - 20) / blocks.shape[1])
    height = int(header + cell * blocks.shape[0] + 12)
    canvas = Canvas(width, height)
    canvas.rect(0, 0, width, height, "#ffffff")
    if title:
        canvas.text(width / 2, 20, title, size=13, anchor="middle")
    for i in range(blocks.shape[0]):
        for j in range(blocks.shape[1]):
            v = blocks[i, j]
            shade = 255 if not np.isfinite(v) else int(round(245 * (1.0 - (v - lo) / span)))
            canvas.rect(10 + j * cell, header + i * cell, cell, cell, f"rgb({shade},{shade},{255 if shade > 245 else shade})")
    canvas.save(path)


def dendrogram_svg(path, merges, n_leaves: int, title: str = "", width: int = 820, height: int = 420):
    """Merge-tree plot: leaves along the x axis, merge heights on the y axis."""
    children: dict[int, tuple[int, int]] = {}
    height_of: dict[int, float] = {i: 0.0 for i in range(n_leaves)}
    for t, (left, right, h) in enumerate(merges):
        children[n_leaves + t] = (int(left), int(right))
        height_of[n_leaves + t] = float(h)

    order: list[int] = []

    def walk(node: int):
        if node < n_leaves:
            order.append(node)
            return
        left, right = children[node]
        walk(left)
        walk(right)

    root = n_leaves + len(merges) - 1 if merges else 0
    walk(root)
    slot = {leaf: k for k, leaf in enumerate(order)}

    margin = 40
    max_h = max((h for h in height_of.values()), default=1.0) or 1.0

    def x_of(node: int) -> float:
        if node < n_leaves:
            return margin + slot[node] * (width - 2 * margin) / max(1, n_leaves - 1)
        left, right = children[node]
        return (x_of(left) + x_of(right)) / 2.0

    def y_of(node: int) -> float:
        return (height - margin) - height_of[node] * (height - 2 * margin) / max_h

    canvas = Canvas(width, height)
    canvas.rect(0, 0, width, height, "#ffffff")
    if title:
        canvas.text(width / 2, 22, title, size=13, anchor="middle")
    for t, (left, right, h) in enumerate(merges):
        node = n_leaves + t
        y = y_of(node)
        xl, xr = x_of(int(left)), x_of(int(right))
        canvas.line(xl, y, xr, y, "#1f77b4", 1.2)
        canvas.line(xl, y, xl, y_of(int(left)), "#1f77b4", 1.2)
        canvas.line(xr, y, xr, y_of(int(right)), "#1f77b4", 1.2)
    for leaf in range(n_leaves):
        canvas.text(x_of(leaf), height - margin + 14, str(leaf), size=8, anchor="middle")
    canvas.save(path)


def stacked_bars(path, groups: dict, title: str = "", width: int = 820, bar_height: int = 26):
    """One horizontal stacked bar per group; groups map name -> {label: fraction}."""
    labels = sorted({lab for fracs in groups.values() for lab in fracs})
    color_of = {lab: PALETTE[k % len(PALETTE)] for k, lab in enumerate(labels)}
    margin = 90
    height = 50 + (bar_height + 10) * len(groups) + 20
    canvas = Canvas(width, height)
    canvas.rect(0, 0, width, height, "#ffffff")
    if title:
        canvas.text(width / 2, 22, title, size=13, anchor="middle")
    for k, lab in enumerate(labels):
        canvas.rect(margin + 120 * k, 30, 12, 12, color_of[lab])
        canvas.text(margin + 120 * k + 16, 40, str(lab), size=10)
    y = 56
    for name in sorted(groups):
        canvas.text(margin - 8, y + bar_height / 2 + 4, str(name), size=10, anchor="end")
        x = float(margin)
        for lab in labels:
            frac = groups[name].get(lab, 0.0)
            if frac <= 0:
                continue
            w = frac * (width - margin - 20)
            canvas.rect(x, y, w, bar_height, color_of[lab])
            x += w
        y += bar_height + 10
    canvas.save(path)
