"""Drive the session service end to end with a scripted client.

Spins up the app in-process (no network), walks the first task of a session
over the same JSON protocol a browser would use, and prints each exchange.
To run the real server instead:

    defermatch serve --port 8000 --seed 7 --dataset out/records.jsonl

Run: python3 demos/serve_quickstart.py
"""

from fastapi.testclient import TestClient

from defermatch.service import create_app

client = TestClient(create_app(plan_seed=7))

resp = client.post("/api/sessions", json={"participant_id": "demo-001"})
doc = resp.json()
task = doc["task"]
print(f"POST /api/sessions -> {resp.status_code}")
print(f"  session {doc['session_id'][:8]}..., parity={doc['parity']}, "
      f"b over 8 tasks: {doc['b_values']}")
print(f"  task 1: place b={task['b']} deferred patients across "
      f"{task['slots']} slot types, {task['time_left']:.0f}s on the clock")

sid = doc["session_id"]
# greedy play: each deferred patient takes its best open slot
for step in range(task["b"]):
    taken = {a["patient"] for a in task["assignments"]}
    scored = []
    for i in range(len(task["scores"])):
        if i in taken:
            continue
        for j, open_units in enumerate(task["availabilities"]):
            if open_units > 0:
                scored.append((task["scores"][i][j], i, j))
    score, patient, slot = max(scored)
    resp = client.post(f"/api/sessions/{sid}/assignments",
                       json={"patient": patient, "slot": slot})
    task = resp.json()
    if step < 3 or step == task["b"] - 1:
        print(f"  assign patient {patient} -> slot {slot} (p={score:.3f}): "
              f"pending={task['pending']}, score={task['score']:.3f}")
    elif step == 3:
        print("  ...")

resp = client.post(f"/api/sessions/{sid}/submit")
doc = resp.json()
rec = doc["record"]
print(f"POST .../submit -> {resp.status_code}: recorded "
      f"{len(rec['assignments'])} assignments, completed={rec['completed']}")
print(f"  next task: index {doc['task_index']}, b={doc['b']}")

resp = client.get(f"/api/sessions/{sid}")
s = resp.json()
print(f"GET /api/sessions/{{id}} -> task {s['task_index'] + 1}/{s['task_count']}, "
      f"status={s['status']}")
