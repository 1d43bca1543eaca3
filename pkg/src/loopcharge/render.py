"""SVG rendering of workspaces, working loops, recharger paths and recharge events."""

from __future__ import annotations

from typing import Optional

from .kinematics import MotionPrimitive
from .scenario import PlanBundle, Scenario
from .workspace import Cell

_CELL = 26
_WORKER_COLORS = ["#c0392b", "#2471a3", "#1e8449", "#af601a", "#6c3483", "#148f77"]
_RECHARGER_COLORS = ["#f1c40f", "#e67e22", "#16a085"]


def _center(c: Cell) -> tuple[float, float]:
    return (c.x + 0.5) * _CELL, (c.y + 0.5) * _CELL


def render_svg(scenario: Scenario, bundle: Optional[PlanBundle] = None) -> str:
    """Workspace grid with loops; recharger trajectories and recharge markers
    are added when a bundle is given."""
    ws = scenario.workspace
    width, height = ws.width * _CELL, ws.height * _CELL
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#fdfefe"/>',
    ]
    for obs in sorted(ws.obstacles):
        parts.append(
            f'<rect x="{obs.x * _CELL}" y="{obs.y * _CELL}" width="{_CELL}" '
            f'height="{_CELL}" fill="#2c3e50"/>'
        )
    for k in range(ws.width + 1):
        parts.append(f'<line x1="{k * _CELL}" y1="0" x2="{k * _CELL}" y2="{height}" '
                     'stroke="#d5d8dc" stroke-width="1"/>')
    for k in range(ws.height + 1):
        parts.append(f'<line x1="0" y1="{k * _CELL}" x2="{width}" y2="{k * _CELL}" '
                     'stroke="#d5d8dc" stroke-width="1"/>')

    for i, spec in enumerate(scenario.workers):
        color = _WORKER_COLORS[i % len(_WORKER_COLORS)]
        ring = list(spec.loop.cells) + [spec.loop.home]
        points = " ".join(f"{_center(c)[0]},{_center(c)[1]}" for c in ring)
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" '
                     'stroke-width="3" opacity="0.8"/>')
        hx, hy = _center(spec.loop.home)
        parts.append(f'<circle cx="{hx}" cy="{hy}" r="6" fill="{color}"/>')
        parts.append(f'<text x="{hx + 8}" y="{hy - 8}" font-size="11" '
                     f'fill="{color}">{spec.id}</text>')

    for p in scenario.potential_starts:
        px, py = _center(p)
        parts.append(
            f'<path d="M {px} {py - 6} L {px - 6} {py + 5} L {px + 6} {py + 5} Z" '
            'fill="none" stroke="#2e86c1" stroke-width="1.5"/>'
        )

    if bundle is not None:
        for j, spec in enumerate(scenario.rechargers):
            color = _RECHARGER_COLORS[j % len(_RECHARGER_COLORS)]
            cell = bundle.recharger_initial[spec.id]
            trail = [cell]
            for action in bundle.plans.get(spec.id, ()):
                if isinstance(action, MotionPrimitive):
                    cell = Cell(cell.x + action.dx, cell.y + action.dy)
                    trail.append(cell)
            points = " ".join(f"{_center(c)[0]},{_center(c)[1]}" for c in trail)
            parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" '
                         'stroke-width="2" stroke-dasharray="5 3"/>')
            sx, sy = _center(trail[0])
            parts.append(f'<rect x="{sx - 6}" y="{sy - 6}" width="12" height="12" '
                         f'fill="{color}" opacity="0.9"/>')
            parts.append(f'<text x="{sx + 8}" y="{sy + 4}" font-size="11" '
                         f'fill="{color}">{spec.id}</text>')
        for ev in bundle.recharge_events:
            ex, ey = _center(ev.cell)
            parts.append(f'<circle cx="{ex}" cy="{ey}" r="4" fill="none" '
                         'stroke="#27ae60" stroke-width="2"/>')
            parts.append(f'<text x="{ex - 4}" y="{ey - 6}" font-size="8" '
                         f'fill="#27ae60">{ev.t}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart_svg(rows: list[dict], x_key: str, title: str) -> str:
    """Stacked work/recharge efficiency bars, one per sweep row."""
    bar_w, gap, h, base = 46, 24, 220, 40
    width = base * 2 + len(rows) * (bar_w + gap)
    height = h + 90
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{base}" y="20" font-size="13" font-weight="bold">{title}</text>',
        f'<line x1="{base}" y1="{30 + h}" x2="{width - base}" y2="{30 + h}" '
        'stroke="black"/>',
    ]
    for frac in (0, 25, 50, 75, 100):
        y = 30 + h - frac / 100 * h
        parts.append(f'<line x1="{base - 4}" y1="{y}" x2="{width - base}" y2="{y}" '
                     'stroke="#eaecee"/>')
        parts.append(f'<text x="4" y="{y + 4}" font-size="10">{frac}%</text>')
    for idx, row in enumerate(rows):
        x = base + idx * (bar_w + gap)
        work = row["work_pct"] / 100 * h
        rech = row["recharge_pct"] / 100 * h
        y_work = 30 + h - work
        y_rech = y_work - rech
        parts.append(f'<rect x="{x}" y="{y_work}" width="{bar_w}" height="{work}" '
                     'fill="#2471a3"/>')
        parts.append(f'<rect x="{x}" y="{y_rech}" width="{bar_w}" height="{rech}" '
                     'fill="#f1c40f"/>')
        parts.append(f'<text x="{x}" y="{y_rech - 6}" font-size="10">'
                     f'{row["efficiency"]:.1f}</text>')
        parts.append(f'<text x="{x}" y="{30 + h + 16}" font-size="10">'
                     f'{row[x_key]}</text>')
    parts.append(f'<rect x="{base}" y="{height - 26}" width="10" height="10" fill="#2471a3"/>')
    parts.append(f'<text x="{base + 14}" y="{height - 17}" font-size="10">work</text>')
    parts.append(f'<rect x="{base + 70}" y="{height - 26}" width="10" height="10" fill="#f1c40f"/>')
    parts.append(f'<text x="{base + 84}" y="{height - 17}" font-size="10">recharge</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
