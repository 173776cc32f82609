"""Canvas to SVG 1.1 serialization, plus node geometry helpers."""

from __future__ import annotations

from .interp import Canvas, NumVal, SvgNode

CANVAS_W = 800
CANVAS_H = 600


def fmt_num(v: float) -> str:
    r = round(float(v), 6)
    if r == int(r):
        return str(int(r))
    return f"{r:.6f}".rstrip("0").rstrip(".")


def color_value(v) -> str:
    """Map the 0..500 color scale onto a hue wheel plus a grayscale band."""
    if isinstance(v, NumVal):
        v = v.value
    if isinstance(v, str):
        return v
    c = min(500.0, max(0.0, float(v)))
    if c <= 360:
        return f"hsl({fmt_num(c)},100%,50%)"
    pct = round((c - 361) / 139 * 100, 1)
    pct_text = str(int(pct)) if pct == int(pct) else str(pct)
    return f"hsl(0,0%,{pct_text}%)"


def attr_text(v) -> str:
    if isinstance(v, NumVal):
        return fmt_num(v.value)
    if isinstance(v, str):
        return v
    raise TypeError(f"cannot render attribute {v!r}")


def _points_text(points) -> str:
    parts = []
    for pair in points:
        x, y = pair
        parts.append(f"{attr_text(x)},{attr_text(y)}")
    return " ".join(parts)


def _path_text(cmds) -> str:
    parts = []
    for cmd in cmds:
        verb = cmd[0]
        coords = []
        for pair in cmd[1:]:
            coords.extend([attr_text(pair[0]), attr_text(pair[1])])
        parts.append(" ".join([verb] + coords))
    return " ".join(parts)


def _num(v) -> float:
    return v.value if isinstance(v, NumVal) else float(v)


def render_node(node: SvgNode, indent: int, show_ghosts: bool) -> list[str]:
    pad = "  " * indent
    hidden = node.ghost and not show_ghosts
    a = node.attrs
    extra = ' display="none"' if hidden else ""

    def color_attr(name, svg_name=None):
        if name in a:
            return f' {svg_name or name}="{color_value(a[name])}"'
        return ""

    def plain_attr(name, svg_name=None):
        if name in a:
            return f' {svg_name or name}="{attr_text(a[name])}"'
        return ""

    if node.tag == "BOX":
        left, top = _num(a["left"]), _num(a["top"])
        right, bot = _num(a["right"]), _num(a["bot"])
        parts = (
            f'{pad}<rect x="{fmt_num(left)}" y="{fmt_num(top)}"'
            f' width="{fmt_num(right - left)}" height="{fmt_num(bot - top)}"'
        )
        parts += color_attr("fill")
        parts += color_attr("stroke")
        parts += plain_attr("stroke-width")
        rot = a.get("rot")
        if rot is not None and _num(rot) != 0:
            cx, cy = (left + right) / 2, (top + bot) / 2
            parts += f' transform="rotate({fmt_num(_num(rot))} {fmt_num(cx)} {fmt_num(cy)})"'
        return [parts + extra + "/>"]
    if node.tag == "ellipse":
        left, top = _num(a["left"]), _num(a["top"])
        right, bot = _num(a["right"]), _num(a["bot"])
        parts = (
            f'{pad}<ellipse cx="{fmt_num((left + right) / 2)}" cy="{fmt_num((top + bot) / 2)}"'
            f' rx="{fmt_num((right - left) / 2)}" ry="{fmt_num((bot - top) / 2)}"'
        )
        parts += color_attr("fill")
        parts += color_attr("stroke")
        parts += plain_attr("stroke-width")
        return [parts + extra + "/>"]
    if node.tag == "line":
        parts = f"{pad}<line"
        parts += color_attr("stroke")
        parts += plain_attr("stroke-width")
        for name in ("x1", "y1", "x2", "y2"):
            parts += plain_attr(name)
        return [parts + extra + "/>"]
    if node.tag == "polygon":
        parts = f"{pad}<polygon"
        parts += color_attr("fill")
        parts += color_attr("stroke")
        parts += plain_attr("stroke-width")
        parts += f' points="{_points_text(a["points"])}"'
        return [parts + extra + "/>"]
    if node.tag == "path":
        parts = f"{pad}<path"
        parts += color_attr("fill")
        parts += color_attr("stroke")
        parts += plain_attr("stroke-width")
        parts += f' d="{_path_text(a["d"])}"'
        return [parts + extra + "/>"]
    if node.tag == "g":
        lines = [f"{pad}<g{extra}>"]
        for child in node.children:
            lines.extend(render_node(child, indent + 1, show_ghosts))
        lines.append(f"{pad}</g>")
        return lines
    # unknown tags render as empty elements with stringly attributes
    parts = f"{pad}<{node.tag}"
    for name, val in node.attrs.items():
        if isinstance(val, (NumVal, str)):
            parts += f' {name}="{attr_text(val)}"'
    return [parts + extra + "/>"]


def render_svg(canvas: Canvas, show_ghosts: bool = True) -> str:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" height="{CANVAS_H}"'
        f' viewBox="0 0 {CANVAS_W} {CANVAS_H}">'
    ]
    for node in canvas.roots:
        lines.extend(render_node(node, 1, show_ghosts))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def flatten_groups(svg_text: str) -> str:
    """Drop <g>/</g> wrapper lines and their indentation (diff helper)."""
    out = []
    for line in svg_text.splitlines():
        stripped = line.strip()
        if stripped in ("<g>", "</g>") or (stripped.startswith("<g ") and stripped.endswith(">")):
            continue
        out.append(stripped)
    return "\n".join(out) + "\n"


def node_extent(node: SvgNode, include_ghosts: bool = False):
    """Geometric bounds (left, top, right, bot) of a node, or None."""
    if node.ghost and not include_ghosts:
        return None
    a = node.attrs
    if node.tag in ("BOX", "ellipse"):
        return (_num(a["left"]), _num(a["top"]), _num(a["right"]), _num(a["bot"]))
    if node.tag == "line":
        xs = [_num(a["x1"]), _num(a["x2"])]
        ys = [_num(a["y1"]), _num(a["y2"])]
        return (min(xs), min(ys), max(xs), max(ys))
    if node.tag == "polygon":
        pts = a.get("points", [])
        if not pts:
            return None
        xs = [_num(p[0]) for p in pts]
        ys = [_num(p[1]) for p in pts]
        return (min(xs), min(ys), max(xs), max(ys))
    if node.tag == "path":
        xs: list[float] = []
        ys: list[float] = []
        for cmd in a.get("d", []):
            for pair in cmd[1:]:
                xs.append(_num(pair[0]))
                ys.append(_num(pair[1]))
        if not xs:
            return None
        return (min(xs), min(ys), max(xs), max(ys))
    if node.tag == "g":
        if "bounds" in a:
            b = a["bounds"]
            return (_num(b[0]), _num(b[1]), _num(b[2]), _num(b[3]))
        boxes = [node_extent(c) for c in node.children]
        boxes = [b for b in boxes if b]
        if not boxes:
            return None
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )
    return None


def union_extents(boxes):
    boxes = [b for b in boxes if b]
    if not boxes:
        return (0.0, 0.0, 0.0, 0.0)
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )
