"""Box-and-whisker charts rendered directly as SVG text.

Output depends only on the input numbers, so the same summary always
produces byte-identical files.
"""

from __future__ import annotations

from .errors import DataError

__all__ = ["box_plot_svg"]

WIDTH = 640
HEIGHT = 400
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 60


def _escape(text):
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _fmt(v):
    return f"{v:.2f}"


def _check(agg):
    keys = ("min", "q1", "median", "q3", "max")
    try:
        vals = [float(agg[k]) for k in keys]
    except (KeyError, TypeError, ValueError):
        raise DataError(f"summary entry {agg!r} lacks min/q1/median/q3/max") from None
    if any(a > b for a, b in zip(vals, vals[1:])):
        raise DataError(f"setting {agg.get('setting')!r}: quartiles out of order")
    return vals


def box_plot_svg(aggregates, title="", xlabel="setting", ylabel="accuracy"):
    """One box per aggregate dict (keys ``setting``, ``min``, ``q1``, ``median``, ``q3``, ``max``)."""
    if not aggregates:
        raise DataError("nothing to plot: summary has no settings")
    stats = [_check(a) for a in aggregates]
    lo = min(s[0] for s in stats)
    hi = max(s[-1] for s in stats)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.05, hi + 0.05
    pad = (hi - lo) * 0.05
    lo, hi = lo - pad, hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    slot = plot_w / len(stats)
    box_w = min(40.0, slot * 0.6)

    def y(v):
        return MARGIN_TOP + plot_h * (hi - v) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_escape(title)}</text>'
        )
    x0, y0 = MARGIN_LEFT, MARGIN_TOP + plot_h
    out.append(f'<line x1="{x0}" y1="{MARGIN_TOP}" x2="{x0}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - MARGIN_RIGHT}" y2="{y0}" stroke="black"/>')
    for i in range(6):
        v = lo + (hi - lo) * i / 5
        out.append(f'<line x1="{x0 - 4}" y1="{y(v):.2f}" x2="{x0}" y2="{y(v):.2f}" stroke="black"/>')
        out.append(
            f'<text x="{x0 - 6}" y="{y(v) + 4:.2f}" text-anchor="end">{_fmt(v)}</text>'
        )

    for i, (agg, (mn, q1, med, q3, mx)) in enumerate(zip(aggregates, stats)):
        cx = MARGIN_LEFT + slot * (i + 0.5)
        left = cx - box_w / 2
        label = _escape(agg.get("setting"))
        out.append(f'<g class="box" data-setting="{label}">')
        out.append(f'<line x1="{cx:.2f}" y1="{y(mx):.2f}" x2="{cx:.2f}" y2="{y(q3):.2f}" stroke="black"/>')
        out.append(f'<line x1="{cx:.2f}" y1="{y(q1):.2f}" x2="{cx:.2f}" y2="{y(mn):.2f}" stroke="black"/>')
        for v in (mn, mx):
            out.append(
                f'<line x1="{cx - box_w / 4:.2f}" y1="{y(v):.2f}" x2="{cx + box_w / 4:.2f}" '
                f'y2="{y(v):.2f}" stroke="black"/>'
            )
        out.append(
            f'<rect x="{left:.2f}" y="{y(q3):.2f}" width="{box_w:.2f}" '
            f'height="{max(y(q1) - y(q3), 0.5):.2f}" fill="#9ecae1" stroke="black"/>'
        )
        out.append(
            f'<line x1="{left:.2f}" y1="{y(med):.2f}" x2="{left + box_w:.2f}" y2="{y(med):.2f}" '
            f'stroke="black" stroke-width="2"/>'
        )
        out.append(f'<text x="{cx:.2f}" y="{y0 + 16}" text-anchor="middle">{label}</text>')
        out.append("</g>")

    out.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{_escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_TOP + plot_h / 2:.1f})">{_escape(ylabel)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
