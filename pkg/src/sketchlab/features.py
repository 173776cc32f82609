"""Selectable output features and their trace-level equations.

Every numeric SVG attribute of every canvas node is a primitive
feature; a hard-coded catalog per shape kind adds derived features
(centers, extents, midpoints).  Widgets describe how the UI draws the
selection surface: crosshairs for points, segments for distances,
slider zones for scalar attributes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvalError, InvalidSelection
from .interp import (
    Canvas,
    Env,
    NumVal,
    OpNode,
    Opaque,
    SvgNode,
    Trace,
    eval_expr,
    trace_locs,
)
from .svg import node_extent
from .syntax import App, EList, Program, Var

X_NAMES = {"left", "right", "x1", "x2", "boxCX", "cx", "midX"}
Y_NAMES = {"top", "bot", "y1", "y2", "boxCY", "cy", "midY"}

SLIDER_NAMES = ("color", "strokeColor", "width", "strokeWidth", "rot")


@dataclass
class Feature:
    shape: str
    name: str
    kind: str  # "primitive" | "derived"
    axis: str  # "x" | "y" | "scalar"
    trace: Trace
    value: float
    path: list[int]

    @property
    def id(self) -> str:
        return f"{self.shape}/{self.name}"


@dataclass
class Widget:
    kind: str  # "crosshair" | "segment" | "slider"
    shape: str
    features: list[str]
    geometry: dict


def axis_of(name: str) -> str:
    base = name.split(".")[-1]
    if base.endswith(":x") or base in X_NAMES:
        return "x"
    if base.endswith(":y") or base in Y_NAMES:
        return "y"
    return "scalar"


# ---------------------------------------------------------------------------
# Blob naming


def is_simple(program: Program) -> bool:
    main = program.main
    return (
        isinstance(main, App)
        and isinstance(main.fn, Var)
        and main.fn.name == "blobs"
        and len(main.args) == 1
        and isinstance(main.args[0], EList)
    )


def blobs_list(program: Program) -> EList:
    from .errors import NotSimple

    if not is_simple(program):
        raise NotSimple("the program does not have simple structure")
    return program.main.args[0]


def blob_name(entry, index: int) -> str:
    if isinstance(entry, Var):
        return entry.name
    return f"blob{index}"


def root_names(program: Program, env: Env) -> list[str]:
    """Name for each canvas root node, following the blobs list."""
    names: list[str] = []
    if is_simple(program):
        for i, entry in enumerate(blobs_list(program).items):
            try:
                value = eval_expr(entry, env)
            except EvalError:
                value = []
            count = len(value) if isinstance(value, list) else 1
            base = blob_name(entry, i)
            for k in range(count):
                names.append(base if k == 0 else f"{base}:{k}")
    return names


# ---------------------------------------------------------------------------
# Feature extraction


def _tracked(attrs: dict, key: str) -> NumVal | None:
    v = attrs.get(key)
    return v if isinstance(v, NumVal) else None


class _Namespace:
    """Features of one node, keyed by short name, plus widget context."""

    def __init__(self, shape: str, prefix: str, node: SvgNode, path: list[int]):
        self.shape = shape
        self.prefix = prefix
        self.node = node
        self.path = path
        self.features: dict[str, Feature] = {}

    def add(self, name: str, kind: str, trace: Trace, value: float):
        full = self.prefix + name
        f = Feature(self.shape, full, kind, axis_of(name), trace, value, self.path)
        self.features[name] = f

    def add_prim(self, name: str, nv: NumVal):
        self.add(name, "primitive", nv.trace, nv.value)


def _half_sum(a: Feature, b: Feature) -> tuple[Trace, float]:
    return OpNode("*", (Opaque(0.5), OpNode("+", (a.trace, b.trace)))), 0.5 * (a.value + b.value)


def _half_diff(a: Feature, b: Feature) -> tuple[Trace, float]:
    return OpNode("*", (Opaque(0.5), OpNode("-", (b.trace, a.trace)))), 0.5 * (b.value - a.value)


def _diff(a: Feature, b: Feature) -> tuple[Trace, float]:
    return OpNode("-", (b.trace, a.trace)), b.value - a.value


def _box_derived(ns: _Namespace, cx_name: str = "boxCX", cy_name: str = "boxCY"):
    f = ns.features
    if all(k in f for k in ("left", "right")):
        ns.add("width", "derived", *_diff(f["left"], f["right"]))
        ns.add(cx_name, "derived", *_half_sum(f["left"], f["right"]))
    if all(k in f for k in ("top", "bot")):
        ns.add("height", "derived", *_diff(f["top"], f["bot"]))
        ns.add(cy_name, "derived", *_half_sum(f["top"], f["bot"]))


def _slider_attrs(ns: _Namespace, node: SvgNode, color_key: str = "fill"):
    a = node.attrs
    if (nv := _tracked(a, color_key)) is not None:
        ns.add_prim("color", nv)
    if color_key != "stroke" and (nv := _tracked(a, "stroke")) is not None:
        ns.add_prim("strokeColor", nv)
    if (nv := _tracked(a, "stroke-width")) is not None:
        ns.add_prim("strokeWidth" if color_key != "stroke" else "width", nv)


def _points_features(ns: _Namespace, points):
    for i, pair in enumerate(points):
        x, y = pair
        if isinstance(x, NumVal):
            ns.add_prim(f"point:{i}:x", x)
        if isinstance(y, NumVal):
            ns.add_prim(f"point:{i}:y", y)


def _collect(shape: str, prefix: str, node: SvgNode, path: list[int], out: list[_Namespace]):
    ns = _Namespace(shape, prefix, node, path)
    out.append(ns)
    a = node.attrs
    if node.tag in ("BOX", "ellipse"):
        for key in ("left", "top", "right", "bot"):
            if (nv := _tracked(a, key)) is not None:
                ns.add_prim(key, nv)
        _slider_attrs(ns, node)
        if (nv := _tracked(a, "rot")) is not None:
            ns.add_prim("rot", nv)
        if node.tag == "BOX":
            _box_derived(ns)
        else:
            f = ns.features
            _box_derived(ns, "cx", "cy")
            if all(k in f for k in ("left", "right")):
                ns.add("rx", "derived", *_half_diff(f["left"], f["right"]))
            if all(k in f for k in ("top", "bot")):
                ns.add("ry", "derived", *_half_diff(f["top"], f["bot"]))
        return
    if node.tag == "line":
        for key in ("x1", "y1", "x2", "y2"):
            if (nv := _tracked(a, key)) is not None:
                ns.add_prim(key, nv)
        _slider_attrs(ns, node, color_key="stroke")
        f = ns.features
        if "x1" in f and "x2" in f:
            ns.add("midX", "derived", *_half_sum(f["x1"], f["x2"]))
        if "y1" in f and "y2" in f:
            ns.add("midY", "derived", *_half_sum(f["y1"], f["y2"]))
        return
    if node.tag == "polygon":
        _points_features(ns, a.get("points", []))
        _slider_attrs(ns, node)
        return
    if node.tag == "path":
        pairs = []
        for cmd in a.get("d", []):
            pairs.extend(cmd[1:])
        _points_features(ns, pairs)
        _slider_attrs(ns, node)
        return
    if node.tag == "g":
        bounds = a.get("bounds")
        if isinstance(bounds, list) and len(bounds) == 4:
            for key, nv in zip(("left", "top", "right", "bot"), bounds):
                if isinstance(nv, NumVal):
                    ns.add_prim(key, nv)
            _box_derived(ns)
        non_ghost = [(i, c) for i, c in enumerate(node.children) if not c.ghost]
        promote = len(non_ghost) == 1 and non_ghost[0][1].tag in ("polygon", "path")
        for i, child in enumerate(node.children):
            child_prefix = prefix if (promote and not child.ghost) else f"{prefix}c{i}."
            _collect(shape, child_prefix, child, path + [i], out)
        return
    # unknown tag: expose any numeric attrs directly
    for key, val in a.items():
        if isinstance(val, NumVal):
            ns.add_prim(key, val)


def namespaces_of(program: Program, canvas: Canvas, env: Env) -> list[_Namespace]:
    names = root_names(program, env)
    out: list[_Namespace] = []
    for i, node in enumerate(canvas.roots):
        shape = names[i] if i < len(names) else f"node{i}"
        _collect(shape, "", node, [i], out)
    return out


def features_of(program: Program, canvas: Canvas, env: Env) -> list[Feature]:
    out: list[Feature] = []
    for ns in namespaces_of(program, canvas, env):
        out.extend(ns.features.values())
    return out


def find_feature(features: list[Feature], feature_id: str) -> Feature:
    for f in features:
        if f.id == feature_id:
            return f
    raise InvalidSelection(f"no such feature: {feature_id}")


def loc_axes(features: list[Feature]) -> dict[int, str]:
    """Axis classification of literals from the primitive features using them."""
    seen: dict[int, set[str]] = {}
    for f in features:
        if f.kind != "primitive":
            continue
        for loc in trace_locs(f.trace):
            seen.setdefault(loc, set()).add(f.axis)
    out: dict[int, str] = {}
    for loc, axes in seen.items():
        out[loc] = axes.pop() if len(axes) == 1 else "scalar"
    return out


# ---------------------------------------------------------------------------
# Widgets


def _crosshair(ns: _Namespace, xf: str, yf: str) -> Widget | None:
    f = ns.features
    if xf not in f or yf not in f:
        return None
    return Widget(
        "crosshair",
        ns.shape,
        [f[xf].id, f[yf].id],
        {"x": f[xf].value, "y": f[yf].value},
    )


def widgets_of(program: Program, canvas: Canvas, env: Env) -> list[Widget]:
    out: list[Widget] = []
    for ns in namespaces_of(program, canvas, env):
        if ns.node.ghost:
            continue
        out.extend(_namespace_widgets(ns))
    return out


def _namespace_widgets(ns: _Namespace) -> list[Widget]:
    f = ns.features
    out: list[Widget] = []
    if ns.node.tag in ("BOX", "ellipse", "g"):
        cx = "cx" if ns.node.tag == "ellipse" else "boxCX"
        cy = "cy" if ns.node.tag == "ellipse" else "boxCY"
        for xf in ("left", cx, "right"):
            for yf in ("top", cy, "bot"):
                w = _crosshair(ns, xf, yf)
                if w:
                    out.append(w)
        if "width" in f and cy in f:
            out.append(Widget("segment", ns.shape, [f["width"].id], {
                "x1": f["left"].value, "y1": f[cy].value,
                "x2": f["right"].value, "y2": f[cy].value,
            }))
        if "height" in f and cx in f:
            out.append(Widget("segment", ns.shape, [f["height"].id], {
                "x1": f[cx].value, "y1": f["top"].value,
                "x2": f[cx].value, "y2": f["bot"].value,
            }))
        if "rx" in f:
            out.append(Widget("segment", ns.shape, [f["rx"].id], {
                "x1": f["cx"].value, "y1": f["cy"].value,
                "x2": f["right"].value, "y2": f["cy"].value,
            }))
        if "ry" in f:
            out.append(Widget("segment", ns.shape, [f["ry"].id], {
                "x1": f["cx"].value, "y1": f["cy"].value,
                "x2": f["cx"].value, "y2": f["bot"].value,
            }))
    elif ns.node.tag == "line":
        for xf, yf in (("x1", "y1"), ("x2", "y2"), ("midX", "midY")):
            w = _crosshair(ns, xf, yf)
            if w:
                out.append(w)
    for name in sorted(f):
        if name.startswith("point:") and name.endswith(":x"):
            w = _crosshair(ns, name, name[:-2] + ":y")
            if w:
                out.append(w)
    extent = node_extent(ns.node, include_ghosts=True)
    if extent:
        k = 0
        for name in SLIDER_NAMES:
            if name in f and name != "rot" and f[name].kind == "primitive":
                out.append(Widget("slider", ns.shape, [f[name].id], {
                    "x": extent[0], "y": extent[1] - 18 * (k + 1),
                    "w": 100, "h": 14,
                }))
                k += 1
    return out


def feature_geometry(feature: Feature, features: list[Feature]) -> dict:
    """Widget descriptor for one feature (crosshair, segment, or slider)."""
    same_shape = {f.name: f for f in features if f.shape == feature.shape}
    name = feature.name

    def pair(other: str):
        return same_shape.get(other)

    if feature.axis in ("x", "y"):
        if name.endswith(":x") or name.endswith(":y"):
            other_name = name[:-2] + (":y" if name.endswith(":x") else ":x")
        else:
            base = name.split(".")[-1]
            prefix = name[: len(name) - len(base)]
            complement = {
                "left": "boxCY", "right": "boxCY", "boxCX": "boxCY",
                "top": "boxCX", "bot": "boxCX", "boxCY": "boxCX",
                "cx": "cy", "cy": "cx",
                "x1": "y1", "y1": "x1", "x2": "y2", "y2": "x2",
                "midX": "midY", "midY": "midX",
            }.get(base, "")
            other_name = prefix + complement
        other = pair(other_name)
        if other is None:
            return {"kind": "crosshair", "x": feature.value, "y": feature.value}
        x, y = (feature, other) if feature.axis == "x" else (other, feature)
        return {"kind": "crosshair", "x": x.value, "y": y.value}
    base = name.split(".")[-1]
    if base in ("width", "height", "rx", "ry"):
        # span the measured distance across the shape
        prefix = name[: len(name) - len(base)]
        f = same_shape
        if base in ("width", "rx"):
            y_mid = next((f[prefix + k].value for k in ("boxCY", "cy") if prefix + k in f), feature.value)
            x1 = f[prefix + ("left" if base == "width" else "cx")].value if prefix + ("left" if base == "width" else "cx") in f else 0.0
            x2 = f[prefix + "right"].value if prefix + "right" in f else x1 + feature.value
            return {"kind": "segment", "x1": x1, "y1": y_mid, "x2": x2, "y2": y_mid}
        x_mid = next((f[prefix + k].value for k in ("boxCX", "cx") if prefix + k in f), feature.value)
        y1 = f[prefix + ("top" if base == "height" else "cy")].value if prefix + ("top" if base == "height" else "cy") in f else 0.0
        y2 = f[prefix + "bot"].value if prefix + "bot" in f else y1 + feature.value
        return {"kind": "segment", "x1": x_mid, "y1": y1, "x2": x_mid, "y2": y2}
    return {"kind": "slider", "w": 100, "h": 14}
