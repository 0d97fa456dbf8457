"""Standalone SVG emitters (no plotting dependency).

Every chart the CLI writes is also duplicated as CSV, so these stay
deliberately small: grouped bars for per-mode power and per-scenario
energy, and a two-panel timeline (deadlines and power) for simulation
traces.
"""

from __future__ import annotations

from typing import Sequence


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


_PALETTE = ["#4878CF", "#EE854A", "#6ACC64", "#D65F5F", "#956CB4", "#8C613C"]


def grouped_bar_svg(
    path,
    categories: Sequence[str],
    series: dict[str, Sequence[float]],
    title: str = "",
    y_label: str = "",
    width: int = 900,
    height: int = 360,
) -> None:
    """Grouped bar chart; one bar group per category, one color per series."""
    margin_l, margin_r, margin_t, margin_b = 60, 10, 34, 46
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    y_max = max((max(vals) for vals in series.values() if len(vals)), default=1.0)
    y_max = y_max * 1.08 or 1.0
    n_cat = max(1, len(categories))
    n_ser = max(1, len(series))
    group_w = plot_w / n_cat
    bar_w = group_w * 0.8 / n_ser

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2}" y="16" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="#333"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="#333"/>',
        f'<text x="14" y="{margin_t + plot_h / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {margin_t + plot_h / 2})">{_esc(y_label)}</text>',
    ]
    for k in range(5):
        y_val = y_max * k / 4
        y_px = margin_t + plot_h * (1 - k / 4)
        parts.append(
            f'<line x1="{margin_l - 3}" y1="{y_px:.1f}" x2="{margin_l + plot_w}" '
            f'y2="{y_px:.1f}" stroke="#ddd"/>'
            f'<text x="{margin_l - 6}" y="{y_px + 4:.1f}" text-anchor="end">{y_val:.3g}</text>'
        )
    for s_idx, (name, vals) in enumerate(series.items()):
        color = _PALETTE[s_idx % len(_PALETTE)]
        for c_idx, v in enumerate(vals):
            x = margin_l + c_idx * group_w + group_w * 0.1 + s_idx * bar_w
            h = plot_h * (v / y_max)
            y = margin_t + plot_h - h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                f'fill="{color}"><title>{_esc(name)}: {v:.4g}</title></rect>'
            )
        lx = margin_l + plot_w - 130
        ly = margin_t + 14 * s_idx
        parts.append(
            f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{color}"/>'
            f'<text x="{lx + 14}" y="{ly + 9}">{_esc(name)}</text>'
        )
    step = max(1, n_cat // 24)
    for c_idx, cat in enumerate(categories):
        if c_idx % step:
            continue
        x = margin_l + c_idx * group_w + group_w / 2
        parts.append(
            f'<text x="{x:.1f}" y="{margin_t + plot_h + 14}" text-anchor="middle">'
            f'{_esc(str(cat))}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def _polyline(points, color, width=1.5, dash=None) -> str:
    pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in points)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'


def timeline_svg(
    path,
    horizon_ns: int,
    requirement: Sequence[tuple[int, int]],
    guaranteed: Sequence[tuple[int, int]],
    transient: Sequence[tuple[int, int, int]],
    power_mw: Sequence[tuple[int, float]],
    title: str = "",
    width: int = 1000,
    height: int = 480,
) -> None:
    """Two panels: deadline lines over time (top) and power draw (bottom).

    requirement/guaranteed are (t_ns, deadline_ns) step samples;
    transient holds (start_ns, end_ns, bound_ns) bars for shrinking
    transitions; power_mw holds (t_ns, mw) bin averages.
    """
    margin_l, margin_r = 64, 12
    plot_w = width - margin_l - margin_r
    top_y, top_h = 34, 240
    bot_y, bot_h = top_y + top_h + 40, height - (top_y + top_h + 40) - 30

    def x_of(t):
        return margin_l + plot_w * (t / horizon_ns)

    d_values = [d for _, d in requirement] + [d for _, d in guaranteed]
    d_values += [b for _, _, b in transient]
    d_max = max(d_values, default=1) * 1.1

    def y_top(d):
        return top_y + top_h * (1 - d / d_max)

    p_max = max((p for _, p in power_mw), default=1.0) * 1.1 or 1.0

    def y_bot(p):
        return bot_y + bot_h * (1 - p / p_max)

    def steps(samples, y_fn):
        pts = []
        prev = None
        for t, v in samples:
            if prev is not None:
                pts.append((x_of(t), y_fn(prev)))
            pts.append((x_of(t), y_fn(v)))
            prev = v
        if prev is not None:
            pts.append((x_of(horizon_ns), y_fn(prev)))
        return pts

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2}" y="16" text-anchor="middle" font-size="13">{_esc(title)}</text>',
    ]
    for y0, h, label in ((top_y, top_h, "deadline (s)"), (bot_y, bot_h, "power (mW)")):
        parts.append(
            f'<rect x="{margin_l}" y="{y0}" width="{plot_w}" height="{h}" '
            f'fill="none" stroke="#999"/>'
            f'<text x="16" y="{y0 + h / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {y0 + h / 2})">{label}</text>'
        )
    for k in range(5):
        d_val = d_max * k / 4
        parts.append(
            f'<text x="{margin_l - 6}" y="{y_top(d_val) + 4:.1f}" text-anchor="end">'
            f"{d_val / 1e9:.2f}</text>"
        )
        p_val = p_max * k / 4
        parts.append(
            f'<text x="{margin_l - 6}" y="{y_bot(p_val) + 4:.1f}" text-anchor="end">'
            f"{p_val:.0f}</text>"
        )
    for s_ns, e_ns, bound in transient:
        parts.append(
            f'<rect x="{x_of(s_ns):.1f}" y="{y_top(bound):.1f}" '
            f'width="{max(1.0, x_of(e_ns) - x_of(s_ns)):.1f}" '
            f'height="{max(1.0, y_top(0) - y_top(bound)):.1f}" fill="#D65F5F" opacity="0.35"/>'
        )
    if requirement:
        parts.append(_polyline(steps(requirement, y_top), "#6ACC64", 1.5, dash="5,3"))
    if guaranteed:
        parts.append(_polyline(steps(guaranteed, y_top), "#4878CF", 2.0))
    if power_mw:
        parts.append(_polyline(steps(power_mw, y_bot), "#EE854A", 1.5))
    lx = margin_l + 8
    for name, color, dy in (("instantaneous requirement", "#6ACC64", 0),
                            ("guaranteed (mode)", "#4878CF", 14),
                            ("transient bound", "#D65F5F", 28)):
        parts.append(
            f'<rect x="{lx}" y="{top_y + 6 + dy}" width="10" height="10" fill="{color}"/>'
            f'<text x="{lx + 14}" y="{top_y + 15 + dy}">{name}</text>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">time (s), '
        f"0 to {horizon_ns / 1e9:.0f}</text>"
    )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
