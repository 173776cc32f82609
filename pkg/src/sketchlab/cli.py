"""Command line interface.

eval/svg run a file through the engine; apply drives a session with a
newline-delimited JSON request script (the same protocol the browser
speaks), either in-process or against a running server via --url.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import SketchlabError
from .interp import NumVal, evaluate
from .parser import parse
from .printer import unparse
from .session import Session, handle_request
from .svg import render_svg


def _canvas_json(canvas) -> list:
    def attr(v):
        if isinstance(v, NumVal):
            return v.value
        if isinstance(v, str):
            return v
        return [attr(x) for x in v]

    def node(n):
        return {
            "tag": n.tag,
            "ghost": n.ghost,
            "attrs": {k: attr(v) for k, v in n.attrs.items()},
            "children": [node(c) for c in n.children],
        }

    return [node(n) for n in canvas.roots]


def cmd_eval(args) -> int:
    source = open(args.file, encoding="utf-8").read()
    canvas = evaluate(parse(source))
    json.dump(_canvas_json(canvas), sys.stdout, indent=2)
    print()
    return 0


def cmd_svg(args) -> int:
    source = open(args.file, encoding="utf-8").read()
    canvas = evaluate(parse(source))
    sys.stdout.write(render_svg(canvas, show_ghosts=not args.hide_ghosts))
    return 0


def _run_remote(url: str, requests: list[dict], json_out: bool) -> int:
    import httpx

    last = None
    with httpx.Client(base_url=url, timeout=30.0) as client:
        for i, req in enumerate(requests):
            body = {"id": req.get("id", i), "kind": req["kind"],
                    "payload": req.get("payload", {}),
                    "session": req.get("session", "cli")}
            resp = client.post("/rpc", json=body).json()
            if json_out:
                print(json.dumps(resp))
            if not resp.get("ok"):
                print(f"request {body['id']} failed: {resp['payload'].get('message')}", file=sys.stderr)
                return 1
            last = resp
    if not json_out and last:
        sys.stdout.write(last["payload"].get("code", ""))
    return 0


def cmd_apply(args) -> int:
    source = open(args.file, encoding="utf-8").read()
    script = sys.stdin.read() if args.script == "-" else open(args.script, encoding="utf-8").read()
    requests = [json.loads(line) for line in script.splitlines() if line.strip()]

    if args.url:
        requests.insert(0, {"kind": "load", "payload": {"source": source}})
        return _run_remote(args.url, requests, args.json)

    session = Session.fresh(seed=args.seed)
    handle_request(session, "load", {"source": source})
    last = None
    for i, req in enumerate(requests):
        try:
            payload = handle_request(session, req["kind"], req.get("payload", {}))
            last = {"id": req.get("id", i), "ok": True, "payload": payload}
        except SketchlabError as exc:
            last = {"id": req.get("id", i), "ok": False,
                    "payload": {"error": getattr(exc, "code", "error"), "message": str(exc)}}
            if args.json:
                print(json.dumps(last))
            print(f"request {last['id']} failed: {exc}", file=sys.stderr)
            return 1
        if args.json:
            print(json.dumps(last))
    if not args.json and last:
        sys.stdout.write(last["payload"]["code"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(static_root=args.root, seed=args.seed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sketchlab")
    parser.add_argument("--seed", type=int, default=0, help="base color seed for draws")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a .little file to canvas JSON")
    p_eval.add_argument("file")
    p_eval.set_defaults(fn=cmd_eval)

    p_svg = sub.add_parser("svg", help="render a .little file to SVG")
    p_svg.add_argument("file")
    p_svg.add_argument("--hide-ghosts", action="store_true")
    p_svg.set_defaults(fn=cmd_svg)

    p_apply = sub.add_parser("apply", help="run a JSON request script against a file")
    p_apply.add_argument("file")
    p_apply.add_argument("script", help="newline-delimited JSON requests, or - for stdin")
    p_apply.add_argument("--json", action="store_true", help="stream responses as JSON lines")
    p_apply.add_argument("--url", help="send requests to a running server instead")
    p_apply.set_defaults(fn=cmd_apply)

    p_serve = sub.add_parser("serve", help="serve /rpc and the browser UI")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--root", help="directory of built UI assets")
    p_serve.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SketchlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
