"""The little standard library: stencil shape constructors and helpers.

Prelude literals are given negative locations so they evaluate to opaque
trace leaves; library constants are never solver candidates.
"""

from __future__ import annotations

from .errors import EvalError
from .interp import Builtin, Env, apply_value, eval_defs
from .parser import parse
from .syntax import Num, walk

PRELUDE_SOURCE = """
(def cons (λ (x xs) (concat [[x] xs])))

(def scaleBetween (λ (a b pct) (+ a (* pct (- b a)))))

(def blobs (λ (bs) (concat bs)))

(def addShapeToCanvas (λ (canvas shapes) (concat [canvas shapes])))

(def ghost (λ ([tag attrs children])
  [tag (cons ['ghost' 'true'] attrs) children]))

(def line (λ (color width x1 y1 x2 y2)
  ['line' [['stroke' color] ['stroke-width' width]
           ['x1' x1] ['y1' y1] ['x2' x2] ['y2' y2]] []]))

(def rectangle (λ (color stroke strokeWidth rot [left top right bot])
  ['BOX' [['left' left] ['top' top] ['right' right] ['bot' bot]
          ['fill' color] ['stroke' stroke]
          ['stroke-width' strokeWidth] ['rot' rot]] []]))

(def oval (λ (color stroke strokeWidth [left top right bot])
  ['ellipse' [['left' left] ['top' top] ['right' right] ['bot' bot]
              ['fill' color] ['stroke' stroke]
              ['stroke-width' strokeWidth]] []]))

(def boundsShell (λ ([left top right bot])
  ['BOX' [['left' left] ['top' top] ['right' right] ['bot' bot]
          ['fill' 'none'] ['stroke' 'gray'] ['stroke-width' 1]] []]))

(def group (λ (bounds nodes) ['g' [['bounds' bounds]] nodes]))

(def stretchyPolygon (λ (bounds color stroke width pcts)
  (let [left top right bot] bounds
  (let toPoint (λ ([xPct yPct])
    [(scaleBetween left right xPct) (scaleBetween top bot yPct)])
    (group bounds
      [ (ghost (boundsShell bounds))
        ['polygon' [['fill' color] ['stroke' stroke] ['stroke-width' width]
                    ['points' (map toPoint pcts)]] []] ])))))

(def stickyPolygon (λ (bounds color stroke width offsets)
  (let toPoint (λ ([[x dx] [y dy]]) [(+ x dx) (+ y dy)])
    (group bounds
      [ (ghost (boundsShell bounds))
        ['polygon' [['fill' color] ['stroke' stroke] ['stroke-width' width]
                    ['points' (map toPoint offsets)]] []] ]))))

(def stretchyPath (λ (bounds color stroke width cmds)
  (let [left top right bot] bounds
  (let toPoint (λ ([xPct yPct])
    [(scaleBetween left right xPct) (scaleBetween top bot yPct)])
  (let toCmd (λ (cmd) (cons (car cmd) (map toPoint (cdr cmd))))
    (group bounds
      [ (ghost (boundsShell bounds))
        ['path' [['fill' color] ['stroke' stroke] ['stroke-width' width]
                 ['d' (map toCmd cmds)]] []] ]))))))

(blobs [])
"""


def _builtin_env() -> Env:
    env = Env()

    def b_map(fn, items):
        if not isinstance(items, list):
            raise EvalError("map expects a list")
        return [apply_value(fn, [x]) for x in items]

    def b_concat(lists):
        if not isinstance(lists, list) or not all(isinstance(x, list) for x in lists):
            raise EvalError("concat expects a list of lists")
        out: list = []
        for x in lists:
            out.extend(x)
        return out

    def b_car(items):
        if not isinstance(items, list) or not items:
            raise EvalError("car expects a non-empty list")
        return items[0]

    def b_cdr(items):
        if not isinstance(items, list) or not items:
            raise EvalError("cdr expects a non-empty list")
        return items[1:]

    env.bind("map", Builtin("map", 2, b_map))
    env.bind("concat", Builtin("concat", 1, b_concat))
    env.bind("car", Builtin("car", 1, b_car))
    env.bind("cdr", Builtin("cdr", 1, b_cdr))
    env.bind("true", True)
    env.bind("false", False)
    return env


_PRELUDE_ENV: Env | None = None
_PRELUDE_NAMES: set[str] | None = None


def prelude_env() -> Env:
    """The shared environment holding builtins and prelude definitions."""
    global _PRELUDE_ENV
    if _PRELUDE_ENV is None:
        program = parse(PRELUDE_SOURCE)
        for node in walk(program):
            if isinstance(node, Num):
                node.loc = -1  # opaque: library constants are unsolvable
        env = Env(_builtin_env())
        eval_defs(program.defs, env)
        _PRELUDE_ENV = env
    return _PRELUDE_ENV


def prelude_names() -> set[str]:
    global _PRELUDE_NAMES
    if _PRELUDE_NAMES is None:
        env = prelude_env()
        names = set(env.vars)
        names.update(env.parent.vars)
        _PRELUDE_NAMES = names
    return _PRELUDE_NAMES
