"""Session protocol, undo, atomicity, HTTP service, and CLI."""

import json


import pytest

from conftest import golden_source

from sketchlab import cli
from sketchlab.errors import ToolError
from sketchlab.service import create_app
from sketchlab.session import ALL_KINDS, Session, handle_request


def _fresh_with_fig1():
    s = Session.fresh()
    handle_request(s, "load", {"source": golden_source("fig1")})
    return s


def test_load_and_render():
    s = _fresh_with_fig1()
    out = handle_request(s, "getSvg")
    assert out["svg"].count("<rect") == 1
    assert out["svg"].count("<line") == 2


def test_make_equal_through_protocol():
    s = _fresh_with_fig1()
    handle_request(s, "select", {"feature": "rect1/left"})
    handle_request(s, "select", {"feature": "rect1/top"})
    handle_request(s, "select", {"feature": "line2/x1"})
    out = handle_request(s, "select", {"feature": "line2/y1"})
    assert out["selection"] == ["rect1/left", "rect1/top", "line2/x1", "line2/y1"]
    out = handle_request(s, "makeEqual")
    assert "(def rect1_left 31)" in out["code"] or "rect1_left" in out["code"]
    assert out["selection"] == []  # mutations clear the selection


def test_undo_restores_exact_text():
    s = _fresh_with_fig1()
    before = handle_request(s, "getCode")["code"]
    for fid in ("rect1/left", "rect1/top", "line2/x1", "line2/y1"):
        handle_request(s, "select", {"feature": fid})
    handle_request(s, "makeEqual")
    out = handle_request(s, "undo")
    assert out["code"] == before


def test_failed_request_leaves_session_unchanged():
    s = _fresh_with_fig1()
    before = handle_request(s, "getCode")["code"]
    with pytest.raises(ToolError):
        handle_request(s, "group", {"blobs": [0]})  # needs two blobs
    assert handle_request(s, "getCode")["code"] == before
    assert not s.undo_stack or s.undo_stack[-1] != before  # nothing pushed


def test_protocol_totality():
    """Every request kind of the protocol is reachable and answers."""
    s = Session.fresh()
    handle_request(s, "load", {"source": golden_source("fig1")})
    payloads = {
        "load": {"source": golden_source("fig1")},
        "draw": {"tool": "rect", "geometry": [[0, 0], [20, 20]], "colorSeed": 1},
        "select": {"feature": "rect1/left"},
        "deselect": {"feature": "rect1/left"},
        "group": {"blobs": [0, 1]},
        "abstract": {"blob": 0},
        "duplicate": {"blob": 0},
        "merge": {"blobs": [0, 1]},
        "drag": {"nodePath": [0], "zone": "interior", "dx": 1, "dy": 1},
        "setAttr": {"nodePath": [0], "attr": "left", "value": 30},
    }
    seen = set()
    for kind in sorted(ALL_KINDS):
        s2 = Session.fresh()
        handle_request(s2, "load", {"source": golden_source("fig1")})
        if kind == "merge":
            handle_request(s2, "duplicate", {"blob": 0})
            out = handle_request(s2, "merge", {"blobs": [0, 3]})
        elif kind in ("digHole", "makeEqual"):
            for fid in ("rect1/left", "rect1/top", "line2/x1", "line2/y1"):
                handle_request(s2, "select", {"feature": fid})
            out = handle_request(s2, kind)
        else:
            out = handle_request(s2, kind, payloads.get(kind, {}))
        assert "code" in out and "svg" in out
        seen.add(kind)
    assert seen == ALL_KINDS


def test_dig_hole_reports_hole_record():
    s = _fresh_with_fig1()
    for fid in ("rect1/left", "rect1/top", "line2/x1", "line2/y1"):
        handle_request(s, "select", {"feature": fid})
    out = handle_request(s, "digHole")
    assert out["hole"]["lifted"] == ["rect1_left", "rect1_top", "line2_x1", "line2_y1"]
    assert out["hole"]["primed"][0].endswith("'")


def test_toggle_ghosts_changes_svg():
    s = Session.fresh()
    src = open("tests/corpus/polygon.little", encoding="utf-8").read()
    handle_request(s, "load", {"source": src})
    shown = handle_request(s, "getSvg")["svg"]
    hidden = handle_request(s, "toggleGhosts")["svg"]
    assert 'display="none"' not in shown
    assert 'display="none"' in hidden


def test_draw_uses_session_seed_sequence():
    s = Session.fresh(seed=33)
    out = handle_request(s, "draw", {"tool": "rect", "geometry": [[0, 0], [10, 10]]})
    assert "(let color 60" in out["code"]  # (33*17) mod 501


def test_http_rpc_roundtrip():
    from fastapi.testclient import TestClient

    with TestClient(create_app()) as client:
        assert client.get("/health").text == "ok"
        resp = client.post("/rpc", json={
            "id": 1, "kind": "load", "payload": {"source": golden_source("fig1")},
        }).json()
        assert resp["ok"] and resp["id"] == 1
        assert resp["payload"]["blobs"] == ["rect1", "line2", "line3"]
        # errors come back structured, never as transport failures
        resp = client.post("/rpc", json={"id": 2, "kind": "group", "payload": {"blobs": [0]}}).json()
        assert not resp["ok"] and resp["payload"]["error"] == "empty_selection"


def test_http_sessions_are_independent():
    from fastapi.testclient import TestClient

    with TestClient(create_app()) as client:
        client.post("/rpc", json={"kind": "load", "payload": {"source": golden_source("fig1")}, "session": "a"})
        resp = client.post("/rpc", json={"kind": "getCode", "session": "b"}).json()
        assert resp["payload"]["blobs"] == []


def test_cli_eval_and_svg(tmp_path, capsys):
    f = tmp_path / "logo.little"
    f.write_text(golden_source("fig1"), encoding="utf-8")
    assert cli.main(["eval", str(f)]) == 0
    nodes = json.loads(capsys.readouterr().out)
    assert [n["tag"] for n in nodes] == ["BOX", "line", "line"]
    assert cli.main(["svg", str(f)]) == 0
    assert "<rect" in capsys.readouterr().out


def test_cli_apply_script(tmp_path, capsys):
    f = tmp_path / "logo.little"
    f.write_text(golden_source("fig1"), encoding="utf-8")
    script = tmp_path / "script.jsonl"
    lines = [
        {"kind": "select", "payload": {"feature": "line2/width"}},
        {"kind": "select", "payload": {"feature": "line3/width"}},
        {"kind": "makeEqual"},
    ]
    script.write_text("\n".join(json.dumps(l) for l in lines), encoding="utf-8")
    assert cli.main(["apply", str(f), str(script)]) == 0
    out = capsys.readouterr().out
    assert "(def line2_width 5)" in out


def test_cli_apply_error_exit_code(tmp_path, capsys):
    f = tmp_path / "logo.little"
    f.write_text(golden_source("fig1"), encoding="utf-8")
    script = tmp_path / "script.jsonl"
    script.write_text(json.dumps({"kind": "group", "payload": {"blobs": [0]}}), encoding="utf-8")
    assert cli.main(["apply", str(f), str(script)]) == 1
