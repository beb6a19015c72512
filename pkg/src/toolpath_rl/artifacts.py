"""Result emission: toolpath text export and standalone SVG renderings.

The toolpath format is a G-code-like line protocol:

    SECTION <name>
    START <row> <col>
    MOVE <U|D|L|R> <ON|OFF>
    ...
    END <dense_score>

SVG output is dependency-free text: section pixels as light-grey squares, the
path as gradient-colored segments (dashed while deposition is off), plus
distinct start/end markers. The learning-curve renderer draws score-vs-steps
polylines with axes, a legend, an optional episode-scaled top axis, and an
optional horizontal baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import env as genv
from .env import DIRECTION_NAMES, StepKind, action_deposit, action_direction, action_index
from .sections import Section


@dataclass(frozen=True)
class Move:
    direction: int
    deposit: bool
    position: tuple[int, int]  # nozzle cell after the move


@dataclass(frozen=True)
class Toolpath:
    section_name: str
    start: tuple[int, int]
    moves: tuple[Move, ...]
    correct_deposits: int
    wrong_deposits: int
    idle_moves: int
    dense_score: float


def toolpath_from_actions(section: Section, start: tuple[int, int], actions,
                          horizon: int | None = None) -> Toolpath:
    """Replay an action log through the environment to build a Toolpath."""
    if horizon is None:
        horizon = max(genv.DEFAULT_HORIZON, len(actions))
    state = genv.EnvState(
        section=section,
        filled=np.zeros_like(section.mask),
        nozzle=tuple(start),
        step_count=0,
        action_history=(),
        wrong_deposits=0,
        horizon=horizon,
    )
    moves = []
    idle = 0
    score = 0.0
    for action in actions:
        if state.done:
            break
        state, outcome = genv.step(state, action)
        score += outcome.reward_dense
        if outcome.kind in (StepKind.MOVE_ONLY, StepKind.BLOCKED_MOVE):
            idle += 1
        moves.append(Move(action_direction(action), action_deposit(action), state.nozzle))
    return Toolpath(
        section_name=section.name,
        start=tuple(start),
        moves=tuple(moves),
        correct_deposits=state.correct_deposits,
        wrong_deposits=state.wrong_deposits,
        idle_moves=idle,
        dense_score=score,
    )


def export_toolpath(toolpath: Toolpath) -> str:
    lines = [
        f"SECTION {toolpath.section_name}",
        f"START {toolpath.start[0]} {toolpath.start[1]}",
    ]
    for move in toolpath.moves:
        status = "ON" if move.deposit else "OFF"
        lines.append(f"MOVE {DIRECTION_NAMES[move.direction]} {status}")
    lines.append(f"END {toolpath.dense_score!r}")
    return "\n".join(lines) + "\n"


def parse_toolpath(text: str, section: Section) -> Toolpath:
    """Parse exported text back into a Toolpath (replayed over the section)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("SECTION "):
        raise ValueError("missing SECTION header")
    name = lines[0].split(" ", 1)[1]
    if name != section.name:
        raise ValueError(f"section name mismatch: {name!r} vs {section.name!r}")
    if not lines[1].startswith("START "):
        raise ValueError("missing START line")
    _, row, col = lines[1].split()
    actions = []
    for ln in lines[2:]:
        if ln.startswith("END "):
            break
        if not ln.startswith("MOVE "):
            raise ValueError(f"unexpected line {ln!r}")
        _, d, status = ln.split()
        actions.append(action_index(DIRECTION_NAMES.index(d), status == "ON"))
    return toolpath_from_actions(section, (int(row), int(col)), actions,
                                 horizon=max(genv.DEFAULT_HORIZON, len(actions)))


# --- SVG ---------------------------------------------------------------------

_START_COLOR = (40, 80, 230)  # blue
_END_COLOR = (235, 80, 190)  # pink


def _lerp_color(t: float) -> str:
    r, g, b = (
        round(a + (b_ - a) * t) for a, b_ in zip(_START_COLOR, _END_COLOR)
    )
    return f"rgb({r},{g},{b})"


def _esc(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def render_toolpath_svg(toolpath: Toolpath, section: Section, cell: int = 16) -> str:
    """Section plus gradient-colored path trace as a standalone SVG document."""
    width = section.width * cell
    height = section.height * cell
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for r, c in zip(*np.nonzero(section.mask)):
        parts.append(
            f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
            f'fill="#d8d8d8"/>'
        )

    def center(pos):
        return (pos[1] * cell + cell / 2, pos[0] * cell + cell / 2)

    pos = toolpath.start
    n_moves = max(1, len(toolpath.moves))
    for i, move in enumerate(toolpath.moves):
        if move.position == pos:  # blocked move, no segment
            continue
        x1, y1 = center(pos)
        x2, y2 = center(move.position)
        color = _lerp_color(i / n_moves)
        dash = '' if move.deposit else ' stroke-dasharray="4 3"'
        parts.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
            f'stroke="{color}" stroke-width="2"{dash}/>'
        )
        pos = move.position
    sx, sy = center(toolpath.start)
    half = cell * 0.35
    parts.append(
        f'<polygon points="{sx},{sy - half} {sx + half},{sy} {sx},{sy + half} '
        f'{sx - half},{sy}" fill="{_lerp_color(0.0)}"/>'
    )
    ex, ey = center(pos)
    parts.append(
        f'<polygon points="{ex},{ey - half} {ex + half},{ey + half} '
        f'{ex - half},{ey + half}" fill="{_lerp_color(1.0)}"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_learning_curve_svg(
    series: list[tuple[list[float], list[float]]],
    labels: list[str],
    baseline: float | None = None,
    episode_axis_labels: list[str] | None = None,
    width: int = 640,
    height: int = 420,
    title: str = "learning curve",
) -> str:
    """Score-vs-steps polylines.

    ``series`` is a list of (x_values, y_values) pairs, one per label. A
    series may carry its own x scale (e.g. PPO episode counts); pass
    ``episode_axis_labels`` to draw a secondary top axis for those series.
    """
    if not series:
        raise ValueError("at least one series is required")
    for xs, ys in series:
        if len(xs) == 0 or len(xs) != len(ys):
            raise ValueError("series must be nonempty and aligned")
    margin = 60
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    all_y = [y for _, ys in series for y in ys]
    if baseline is not None:
        all_y.append(baseline)
    y_lo, y_hi = min(all_y), max(all_y)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x, xs):
        x_lo, x_hi = min(xs), max(xs)
        span = (x_hi - x_lo) or 1.0
        return margin + (x - x_lo) / span * plot_w

    def sy(y):
        return margin + (y_hi - y) / (y_hi - y_lo) * plot_h

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_esc(title)}</text>',
        # axes
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin - 8}" y="{sy(y_hi) + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{y_hi:.2f}</text>',
        f'<text x="{margin - 8}" y="{sy(y_lo) + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{y_lo:.2f}</text>',
    ]
    if episode_axis_labels:
        parts.append(
            f'<line x1="{margin}" y1="{margin}" x2="{width - margin}" '
            f'y2="{margin}" stroke="black" stroke-dasharray="2 2"/>'
        )
        for i, lab in enumerate(episode_axis_labels):
            x = margin + (plot_w * i / max(1, len(episode_axis_labels) - 1))
            parts.append(
                f'<text x="{x}" y="{margin - 6}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{_esc(lab)}</text>'
            )
    if baseline is not None:
        parts.append(
            f'<line x1="{margin}" y1="{sy(baseline)}" x2="{width - margin}" '
            f'y2="{sy(baseline)}" stroke="#555555" stroke-dasharray="6 4"/>'
        )
    for i, ((xs, ys), label) in enumerate(zip(series, labels)):
        color = palette[i % len(palette)]
        points = " ".join(f"{sx(x, xs):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{points}"/>'
        )
        ly = margin + 16 + 14 * i
        parts.append(
            f'<line x1="{width - margin - 90}" y1="{ly - 4}" '
            f'x2="{width - margin - 70}" y2="{ly - 4}" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin - 64}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{_esc(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
