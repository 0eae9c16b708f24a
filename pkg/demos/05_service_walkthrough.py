"""Drive the HTTP API end to end against a live local server.

Starts uvicorn on a spare port with a throwaway store, then walks the
whole workflow over plain HTTP: ingest a route, generate a variation
with gaps, train a style model on the stored route, ask for smoothing
suggestions, and sweep an IC map as a polled job.

Run from anywhere: python3 demos/05_service_walkthrough.py
"""

import json
import socket
import tempfile
import threading
import time
import urllib.request

import uvicorn

from betamix.service import create_app

LADDER = "ladder circuit\n- - -\n" + "\n".join(
    f"{'L' if i % 2 == 0 else 'R'} {t}"
    for i, t in enumerate(["jug", "crimp", "sloper", "jug", "crimp", "sloper", "jug"])
) + "\n"


def call(method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    request = urllib.request.Request(
        f"http://127.0.0.1:{port}{path}",
        data=data,
        method=method,
        headers={"Content-Type": "application/json"} if data else {},
    )
    with urllib.request.urlopen(request) as response:
        return json.loads(response.read())


with socket.socket() as probe:
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]

app = create_app(store_dir=tempfile.mkdtemp(prefix="betamix-demo-store-"))
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.02)
print(f"serving on port {port}")

print("health:", call("GET", "/health"))
print("presets:", sorted(call("GET", "/presets")["presets"]))

route = call("POST", "/routes", {"document": LADDER, "owner": "demo"})
print(f"stored route {route['id']} ({route['moves']} moves)")

variation = call("POST", "/variations", {
    "inputs": [route["id"]],
    "config": {"ic_v": [-15.8, -9.0, 52.0], "nna_mode": "dabbyx", "dabby_rule": "le"},
})
print(f"variation {variation['id']}: summary {variation['plan']['summary']}")
print(variation["rendered"])

parsed = call("POST", "/parse", {"text": "cross to the big slopey pinch"})
print("parse symbols:", parsed["symbols"])

model = call("POST", "/models/train", {
    "route_ids": [route["id"]],
    "symbol_set": "s1",
    "alphabet": ["crimp", "jug", "sloper"],
})
print(f"model {model['id']}: alphabet {model['alphabet']}, {model['symbols']} symbols")

smoothed = call("POST", "/smooth", {"plan_id": variation["id"], "model_id": model["id"]})
for s in smoothed["suggestions"]:
    what = ", ".join(f"{m['hand']} {m['text']}" for m in s["moves"]) or "leave open"
    print(f"gap at move {s['position'] + 1}: {what}")

job = call("POST", "/icmaps", {
    "center": [-16.0, -12.0, 52.0], "n_per_axis": 9, "spacing": 0.25, "moves": 30,
})
print(f"map job {job['job_id']} queued")
while True:
    state = call("GET", f"/icmaps/jobs/{job['job_id']}")
    if state["status"] in ("done", "failed"):
        break
    time.sleep(0.05)
print("job finished:", state)
picked = call("GET", f"/icmaps/{state['icmap_id']}/pick?effect=10:15&limit=3")
for candidate in picked["candidates"]:
    print(f"  candidate ic {candidate['ic']}: effect {candidate['effect']}")

server.should_exit = True
thread.join(timeout=5)
print("server stopped")
