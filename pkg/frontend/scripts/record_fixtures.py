"""Record REST fixtures for the trainer-ui contract tests by driving the
real service in-process.  Run from the repository root:

    python frontend/scripts/record_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from valence.service import create_app

OUT = Path(__file__).parent.parent / "test" / "fixtures"


def save(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2) + "\n",
                            encoding="utf-8")
    print(f"wrote {name}")


def main() -> None:
    with tempfile.TemporaryDirectory() as data_dir:
        client = TestClient(create_app(data_dir))

        save("scenarios.json", client.get("/api/v1/scenarios").json())
        save("front.json", client.get(
            "/api/v1/scenarios/firefight/front",
            params={"gamma": 1.0, "horizon": 50}).json())

        # a blind session stepped once (no alignment anywhere)
        view = client.post("/api/v1/sessions", json={
            "scenario": "firefight", "seed": 7}).json()
        save("session-initial.json", view)
        sid = view["id"]
        save("step-prepare.json", client.post(
            f"/api/v1/sessions/{sid}/actions",
            json={"action": "PrepareEquipment"}).json())
        save("session-active.json",
             client.get(f"/api/v1/sessions/{sid}").json())

        # a failed session: two unprotected evacuations
        sid = client.post("/api/v1/sessions", json={
            "scenario": "firefight", "seed": 7}).json()["id"]
        for _ in range(2):
            client.post(f"/api/v1/sessions/{sid}/actions",
                        json={"action": "EvacuateOccupants"})
        save("session-finished.json",
             client.get(f"/api/v1/sessions/{sid}").json())
        save("report-failure.json",
             client.get(f"/api/v1/sessions/{sid}/report").json())
        save("report-weighted.json", client.get(
            f"/api/v1/sessions/{sid}/report",
            params={"weights": "1,0"}).json())

        # truncated two-step session whose cumulative score is (0.8, 0.4)
        sid = client.post("/api/v1/sessions", json={
            "scenario": "firefight", "seed": 7, "horizon": 2}).json()["id"]
        client.post(f"/api/v1/sessions/{sid}/actions",
                    json={"action": "AggressiveFireSuppression"})
        client.post(f"/api/v1/sessions/{sid}/actions",
                    json={"action": "PrepareEquipment"})
        save("report-truncated.json",
             client.get(f"/api/v1/sessions/{sid}/report").json())


if __name__ == "__main__":
    main()
