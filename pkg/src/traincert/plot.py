"""Static SVG rendering of a run log: loss trajectory over the bound cloud.

The output is plain text assembled with fixed float formatting, so the
same log always renders to the same bytes and tests can parse the file
back with an XML parser. No plotting dependency.
"""

from __future__ import annotations

import math

WIDTH = 860
HEIGHT = 520
MARGIN_LEFT = 70
MARGIN_RIGHT = 24
MARGIN_TOP = 24
MARGIN_BOTTOM = 48

COLOR_RED = "#f2b8b5"
COLOR_YELLOW = "#f7e7a4"
COLOR_GREEN = "#bfe3c0"
COLOR_LOSS = "#1f3fbf"
COLOR_YES0 = "#b3261e"
COLOR_YES_BEST = "#146c2e"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Scale:
    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float, log: bool):
        self.log = log
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        span = hi - lo
        pad = 0.04 * span
        self.lo = lo - pad
        self.hi = hi + pad
        self.px_lo = px_lo
        self.px_hi = px_hi

    def to_px(self, v: float) -> float:
        t = math.log10(v) if self.log else v
        frac = (t - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)

    def ticks(self, count: int = 5):
        for i in range(count):
            t = self.lo + (self.hi - self.lo) * i / (count - 1)
            yield (10.0 ** t if self.log else t), self.to_px(10.0 ** t if self.log else t)


def bound_envelope(records: list) -> list:
    """Running minimum of the strongest bound over epochs.

    Computed at read time from the raw records; the log itself always keeps
    the per-epoch values auditable.
    """
    env = []
    best = math.inf
    for r in records:
        bounds = r.get("bounds")
        if bounds is not None:
            best = min(best, bounds["cloud_bottom"])
            env.append((r["epoch"], best))
    return env


def _step_points(pairs: list, last_epoch: int) -> list:
    """Hold each value forward until the next change; close at last_epoch."""
    pts = []
    for i, (e, v) in enumerate(pairs):
        if i:
            pts.append((e, pairs[i - 1][1]))
        pts.append((e, v))
    if pairs and pairs[-1][0] < last_epoch:
        pts.append((last_epoch, pairs[-1][1]))
    return pts


def _polyline(elem_id: str, pts: list, color: str, sx, sy) -> str:
    coords = " ".join(f"{_fmt(sx.to_px(e))},{_fmt(sy.to_px(v))}" for e, v in pts)
    return (
        f'<polyline id="{elem_id}" fill="none" stroke="{color}" '
        f'stroke-width="1.5" points="{coords}" />'
    )


def _polygon(elem_id: str, pts_px: list, color: str) -> str:
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts_px)
    return f'<polygon id="{elem_id}" fill="{color}" stroke="none" points="{coords}" />'


def render_cloud_svg(
    records: list, log_scale: bool = True, envelope: bool = False
) -> str:
    """Render epoch records (dict form, as stored in the JSONL log)."""
    loss_pts = [(r["epoch"], r["loss"]) for r in records if r["loss"] is not None]
    bound_pts = [
        (r["epoch"], r["bounds"]["yes0"], r["bounds"]["cloud_bottom"])
        for r in records
        if r.get("bounds") is not None
    ]

    values = [v for _, v in loss_pts]
    values += [t for _, t, _ in bound_pts] + [b for _, _, b in bound_pts]
    use_log = log_scale and bool(values) and min(values) > 0

    body = []
    body.append(
        f'<rect id="bg" x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff" />'
    )

    if loss_pts:
        epochs = [e for e, _ in loss_pts]
        sx = _Scale(min(epochs), max(epochs), MARGIN_LEFT, WIDTH - MARGIN_RIGHT, False)
        sy = _Scale(min(values), max(values), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP, use_log)
        last_epoch = max(epochs)

        if bound_pts:
            top_steps = _step_points([(e, t) for e, t, _ in bound_pts], last_epoch)
            bot_steps = _step_points([(e, b) for e, _, b in bound_pts], last_epoch)
            top_px = [(sx.to_px(e), sy.to_px(v)) for e, v in top_steps]
            bot_px = [(sx.to_px(e), sy.to_px(v)) for e, v in bot_steps]
            x_lo = sx.to_px(top_steps[0][0])
            x_hi = sx.to_px(last_epoch)
            body.append('<g id="regions">')
            body.append(
                _polygon(
                    "region-red",
                    [(x_lo, MARGIN_TOP), (x_hi, MARGIN_TOP)] + top_px[::-1],
                    COLOR_RED,
                )
            )
            body.append(_polygon("region-yellow", top_px + bot_px[::-1], COLOR_YELLOW))
            body.append(
                _polygon(
                    "region-green",
                    bot_px
                    + [(x_hi, HEIGHT - MARGIN_BOTTOM), (x_lo, HEIGHT - MARGIN_BOTTOM)],
                    COLOR_GREEN,
                )
            )
            body.append("</g>")

        body.append(_axes(sx, sy, use_log))
        body.append('<g id="curves">')
        if bound_pts:
            body.append(
                _polyline("yes0", [(e, t) for e, t, _ in bound_pts], COLOR_YES0, sx, sy)
            )
            body.append(
                _polyline(
                    "yes-best", [(e, b) for e, _, b in bound_pts], COLOR_YES_BEST, sx, sy
                )
            )
            if envelope:
                env_pts = bound_envelope(records)
                coords = " ".join(
                    f"{_fmt(sx.to_px(e))},{_fmt(sy.to_px(v))}" for e, v in env_pts
                )
                body.append(
                    f'<polyline id="yes-best-envelope" fill="none" '
                    f'stroke="{COLOR_YES_BEST}" stroke-width="1.5" '
                    f'stroke-dasharray="5 3" points="{coords}" />'
                )
        body.append(_polyline("loss", loss_pts, COLOR_LOSS, sx, sy))
        body.append("</g>")
        if not bound_pts:
            body.append(
                f'<text id="warning" x="{MARGIN_LEFT + 8}" y="{MARGIN_TOP + 16}" '
                f'font-size="13" fill="{COLOR_YES0}">no bounds in log; '
                f"showing loss only</text>"
            )
    else:
        body.append(_empty_axes())

    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
        + "".join(body)
        + "</svg>"
    )


def _axes(sx: _Scale, sy: _Scale, use_log: bool) -> str:
    parts = ['<g id="axes">']
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333333" />'
    )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333333" />'
    )
    for value, px in sx.ticks():
        label = str(int(round(value)))
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 5}" '
            f'stroke="#333333" />'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{y0 + 20}" font-size="11" '
            f'text-anchor="middle" fill="#333333">{label}</text>'
        )
    for value, px in sy.ticks():
        label = f"{value:.3g}"
        parts.append(
            f'<line x1="{x0 - 5}" y1="{_fmt(px)}" x2="{x0}" y2="{_fmt(px)}" '
            f'stroke="#333333" />'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{_fmt(px + 4)}" font-size="11" '
            f'text-anchor="end" fill="#333333">{label}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 10}" font-size="12" '
        f'text-anchor="middle" fill="#333333">epoch</text>'
    )
    axis_name = "loss (log)" if use_log else "loss"
    parts.append(
        f'<text x="14" y="{(y0 + y1) // 2}" font-size="12" '
        f'text-anchor="middle" fill="#333333" '
        f'transform="rotate(-90 14 {(y0 + y1) // 2})">{axis_name}</text>'
    )
    parts.append("</g>")
    return "".join(parts)


def _empty_axes() -> str:
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    return (
        '<g id="axes">'
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333333" />'
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333333" />'
        "</g>"
    )
