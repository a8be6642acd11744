"""Play a complete game against the arena over plain HTTP.

Spawns ``coalgame serve`` on a spare port, creates a session in which
this script plays both sides, and asks the engine for a hint before
every move, conceding whenever the engine advises it.  Demonstrates
the whole wire protocol with nothing but the standard library.

Run:  python3 demos/arena_client.py
"""

from __future__ import annotations

import json
import subprocess
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

PORT = 8901
BASE = f"http://127.0.0.1:{PORT}"
HERE = Path(__file__).resolve().parent


def req(method: str, path: str, body: dict | None = None) -> tuple[int, dict]:
    data = json.dumps(body).encode() if body is not None else None
    r = urllib.request.Request(
        BASE + path, data=data, method=method,
        headers={"content-type": "application/json"},
    )
    try:
        with urllib.request.urlopen(r, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def main() -> None:
    server = subprocess.Popen(
        [sys.executable, "-m", "coalgame.cli", "serve", "--port", str(PORT)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        for _ in range(50):
            time.sleep(0.2)
            try:
                if req("GET", "/api/sessions")[0] == 200:
                    break
            except OSError:
                pass
        else:
            sys.exit("server never came up")

        system = (HERE / "labelled_tree.coalg").read_text()
        code, snap = req("POST", "/api/sessions", {
            "system": system, "kind": "classical",
            "x": "1", "y": "2", "role": "both",
        })
        assert code == 200, snap
        sid = snap["id"]
        print(f"session {sid}: {snap['kind']} game on ({snap['x']}, {snap['y']})")

        for _ in range(40):
            code, snap = req("GET", f"/api/sessions/{sid}")
            assert code == 200
            if snap["winner"]:
                break
            code, hint = req("GET", f"/api/sessions/{sid}/hint")
            assert code == 200, hint
            move = hint["move"] or {"type": "concede", "by": snap["turn"]}
            print(f"round {snap['round']} {snap['phase']:>5} "
                  f"{snap['turn']}: {move['type']}")
            code, snap = req("POST", f"/api/sessions/{sid}/moves", move)
            assert code == 200, snap

        print(f"winner: {snap['winner']} ({snap['reason']})")
        code, hist = req("GET", f"/api/sessions/{sid}/history")
        assert code == 200 and len(hist["events"]) == snap["moves"]
        code, _ = req("POST", f"/api/sessions/{sid}/moves",
                      {"type": "concede", "by": "defender"})
        assert code == 409, "moves after the game is over must be rejected"
        print(f"history: {len(hist['events'])} events; post-game move rejected (409)")
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    main()
