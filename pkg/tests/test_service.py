import importlib.resources as resources
import json
import time

import pytest
from fastapi.testclient import TestClient

from agribot.service import NoScenarioLoaded, SimRunner, TopicBroker, UnknownTopic, create_app


def demo_text():
    return (resources.files("agribot") / "data" / "demo.scn").read_text()


@pytest.fixture
def runner():
    r = SimRunner(paced=False)
    r.start()
    yield r
    r.stop()


@pytest.fixture
def client(runner):
    with TestClient(create_app(runner)) as c:
        yield c


def wait_until(predicate, timeout=20.0, interval=0.02):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return False


class TestSnapshots:
    def test_no_scenario_loaded(self, client):
        r = client.get("/api/v1/scene")
        assert r.status_code == 409
        assert r.json()["error"] == "NoScenarioLoaded"

    def test_scene_after_load(self, client):
        assert client.post("/api/v1/scenario", content=demo_text()).status_code == 200
        scene = client.get("/api/v1/scene").json()
        assert len(scene["objects"]) == 4
        assert "basket" in scene["drop_zones"]

    def test_arm_snapshot_consistency(self, client):
        client.post("/api/v1/scenario", content=demo_text())
        arm = client.get("/api/v1/arm").json()
        assert arm["phase"] == "done"
        assert arm["gripper"] == "empty"
        assert len(arm["joints"]) == 3
        assert len(arm["end_effector"]) == 3

    def test_bad_scenario_rejected(self, client):
        r = client.post("/api/v1/scenario", content="[camera]\nfx = oops\n")
        assert r.status_code == 400
        assert r.json()["error"] == "ScenarioParseError"


class TestCommands:
    def test_pick_the_orange_accepted_and_completes(self, client, runner):
        client.post("/api/v1/scenario", content=demo_text())
        r = client.post("/api/v1/command", json={"text": "pick the orange"})
        assert r.status_code == 200
        body = r.json()
        assert body["accepted"] == {"verb": "pick", "target_class": "orange", "drop_zone": None}
        assert body["candidates"][0]["score"] == 1.0

        def picked():
            scene = client.get("/api/v1/scene").json()
            # the orange is absent from the scene while the gripper holds it
            orange = next((o for o in scene["objects"] if o["class"] == "orange"), None)
            return orange is not None and orange["position"] == [-0.15, 0.12, 0.03]

        assert wait_until(picked)
        arm = client.get("/api/v1/arm").json()
        assert arm["gripper"] == "empty"

    def test_busy_rejection(self, client, runner):
        client.post("/api/v1/scenario", content=demo_text())
        assert client.post("/api/v1/command", json={"text": "pick the orange"}).status_code == 200
        # immediately resubmit while the first is queued/executing
        r = client.post("/api/v1/command", json={"text": "pick the apple"})
        assert r.status_code == 409
        assert r.json()["error"] == "ArmBusy"

    def test_no_match(self, client):
        client.post("/api/v1/scenario", content=demo_text())
        r = client.post("/api/v1/command", json={"text": "xyzzy gribble"})
        assert r.status_code == 422
        assert r.json()["error"] in ("NoVerbFound", "NoMatch")

    def test_target_absent(self, client):
        text = demo_text().replace("object = banana 0.12 0.10 0.030\n", "")
        client.post("/api/v1/scenario", content=text)
        r = client.post("/api/v1/command", json={"text": "pick the banana"})
        assert r.status_code == 422
        body = r.json()
        assert body["error"] == "TargetAbsent"
        assert body["candidates"]  # candidates still reported

    def test_empty_submission(self, client):
        client.post("/api/v1/scenario", content=demo_text())
        assert client.post("/api/v1/command", json={"text": ""}).status_code == 422


class TestStream:
    def test_unknown_topic(self, client):
        client.post("/api/v1/scenario", content=demo_text())
        with client.websocket_connect("/api/v1/stream?topics=bogus") as ws:
            msg = json.loads(ws.receive_text())
            assert msg["error"] == "UnknownTopic"

    def test_event_stream_orders_pick(self, client, runner):
        client.post("/api/v1/scenario", content=demo_text())
        with client.websocket_connect("/api/v1/stream?topics=events") as ws:
            client.post("/api/v1/command", json={"text": "pick the orange"})
            kinds = []
            seqs = []
            while "PickCompleted" not in kinds:
                msg = json.loads(ws.receive_text())
                kinds.append(msg["payload"]["kind"])
                seqs.append(msg["seq"])
            assert kinds[0] == "CommandAccepted"
            assert "DetectionsPublished" in kinds
            assert "TargetSelected" in kinds
            assert kinds.index("CommandAccepted") < kinds.index("TargetSelected")
            assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)

    def test_two_subscribers_same_sequence(self, client, runner):
        client.post("/api/v1/scenario", content=demo_text())
        with client.websocket_connect("/api/v1/stream?topics=events") as a, \
             client.websocket_connect("/api/v1/stream?topics=events") as b:
            client.post("/api/v1/command", json={"text": "home"})
            ma = json.loads(a.receive_text())
            mb = json.loads(b.receive_text())
            assert ma == mb

    def test_arm_state_stream(self, client, runner):
        client.post("/api/v1/scenario", content=demo_text())
        with client.websocket_connect("/api/v1/stream?topics=arm_state,events") as ws:
            client.post("/api/v1/command", json={"text": "pick the orange"})
            arm_msgs = []
            while len(arm_msgs) < 3:
                msg = json.loads(ws.receive_text())
                if msg["topic"] == "arm_state":
                    arm_msgs.append(msg)
            stamps = [m["stamp"] for m in arm_msgs]
            assert stamps == sorted(stamps)
            seqs = [m["seq"] for m in arm_msgs]
            assert seqs == sorted(seqs)


class TestTopicBroker:
    def test_unknown_topic_subscribe(self):
        broker = TopicBroker()
        with pytest.raises(UnknownTopic):
            broker.subscribe(["nope"])

    def test_seq_monotone_per_topic(self):
        broker = TopicBroker()
        sub = broker.subscribe(["events", "scene"])
        for i in range(5):
            broker.publish("events", float(i), {"i": i})
        broker.publish("scene", 9.0, {})
        messages = []
        while not sub.messages.empty():
            messages.append(sub.messages.get())
        event_seqs = [m["seq"] for m in messages if m["topic"] == "events"]
        scene_seqs = [m["seq"] for m in messages if m["topic"] == "scene"]
        assert event_seqs == [1, 2, 3, 4, 5]
        assert scene_seqs == [1]

    def test_slow_consumer_dropped(self):
        broker = TopicBroker()
        sub = broker.subscribe(["events"])
        for i in range(2000):
            broker.publish("events", float(i), {})
        assert sub.dropped
