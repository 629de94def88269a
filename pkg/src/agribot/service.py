"""HTTP/WebSocket front door for the simulator.

One background thread (the tick driver) owns the live SimState; every
reader sees immutable snapshots swapped atomically after each tick
batch, so readers never block the control loop.  Telemetry fans out on
per-topic channels with strictly increasing sequence numbers; a slow
subscriber is disconnected instead of back-pressuring the simulation.

Endpoints:
  GET  /api/v1/scene
  GET  /api/v1/arm
  GET  /api/v1/detections
  POST /api/v1/command           {"text": ..., "n_best": 3}
  POST /api/v1/scenario          body: scenario file text
  WS   /api/v1/stream?topics=arm_state,detections,events,scene
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .command import (
    CommandError,
    NoMatch,
    NoVerbFound,
    TargetAbsent,
    Utterance,
    map_to_action,
    match_utterance,
)
from .control import PickPlacePhase
from .kinematics import forward_kinematics
from .scenario import Scenario, ScenarioParseError, load_scenario
from .simulator import (
    SimState,
    _scene_dict,
    make_state,
    start_pipeline,
    step,
)

TOPICS = ("arm_state", "detections", "events", "scene")
ARM_STATE_PERIOD = 1.0 / 30.0  # sim seconds between arm_state messages
ARM_STATE_HEARTBEAT = 0.5  # wall seconds; keeps the stream alive while idle
SUBSCRIBER_QUEUE_SIZE = 512
TICKS_PER_BATCH = 5


class ServiceError(Exception):
    pass


class NoScenarioLoaded(ServiceError):
    pass


class ArmBusy(ServiceError):
    pass


class UnknownTopic(ServiceError):
    pass


@dataclass
class _Subscriber:
    topics: frozenset[str]
    messages: queue.Queue = field(
        default_factory=lambda: queue.Queue(maxsize=SUBSCRIBER_QUEUE_SIZE)
    )
    dropped: bool = False


class TopicBroker:
    """Fan-out with per-topic monotone sequence numbers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._seq = {t: 0 for t in TOPICS}
        self._subscribers: list[_Subscriber] = []

    def publish(self, topic: str, stamp: float, payload) -> None:
        with self._lock:
            self._seq[topic] += 1
            message = {
                "topic": topic,
                "seq": self._seq[topic],
                "stamp": round(stamp, 9),
                "payload": payload,
            }
            for sub in self._subscribers:
                if sub.dropped or topic not in sub.topics:
                    continue
                try:
                    sub.messages.put_nowait(message)
                except queue.Full:
                    sub.dropped = True  # slow consumer: disconnect, don't block

    def subscribe(self, topics) -> _Subscriber:
        unknown = set(topics) - set(TOPICS)
        if unknown:
            raise UnknownTopic(f"unknown topics: {sorted(unknown)}")
        sub = _Subscriber(frozenset(topics))
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)


def _arm_dict(scenario: Scenario, state: SimState) -> dict:
    ee = forward_kinematics(scenario.arm, state.joints)
    return {
        "joints": list(state.joints.as_tuple()),
        "end_effector": [ee.xw, ee.yw, ee.zw],
        "phase": state.phase.value,
        "gripper": state.gripper,
        "clock": round(state.clock, 9),
    }


class SimRunner:
    """Tick driver: the single mutator of the live SimState.

    ``paced=True`` ticks in wall-clock real time (for the operator
    console); ``paced=False`` runs the simulation as fast as possible.
    """

    def __init__(self, paced: bool = True):
        self.broker = TopicBroker()
        self.paced = paced
        self._lock = threading.Lock()
        self._scenario: Scenario | None = None
        self._state: SimState | None = None
        self._snapshot: SimState | None = None
        self._pending: ActionRequestSlot = ActionRequestSlot()
        self._published_events = 0
        self._last_arm_publish = -1e9
        self._last_arm_wall = -1e9
        self._latest_detections: list = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def load(self, text: str) -> None:
        scenario = load_scenario(text)
        with self._lock:
            self._scenario = scenario
            self._state = make_state(scenario)
            self._snapshot = self._state.snapshot()
            self._published_events = 0
            self._last_arm_publish = -1e9
            self._last_arm_wall = -1e9
            self._latest_detections = []
        self.broker.publish("scene", 0.0, _scene_dict(scenario.scene))

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    # -- reader API (any thread) ------------------------------------------

    def snapshot(self) -> tuple[Scenario, SimState]:
        with self._lock:
            if self._snapshot is None:
                raise NoScenarioLoaded("no scenario loaded")
            return self._scenario, self._snapshot

    def latest_detections(self) -> list:
        with self._lock:
            if self._snapshot is None:
                raise NoScenarioLoaded("no scenario loaded")
            return list(self._latest_detections)

    def submit(self, text: str, n_best: int) -> tuple[int, dict]:
        """Match, validate, and enqueue a command.  Returns (status, body);
        the body always carries the candidate list.  Atomic: on any error
        nothing is enqueued."""
        scenario, state = self.snapshot()
        busy = state.phase is not PickPlacePhase.DONE or self._pending.full()
        try:
            matches = match_utterance(
                scenario.vocabulary, Utterance.from_text(text), n_best
            )
        except (NoVerbFound, NoMatch) as exc:
            return _STATUS[type(exc).__name__], {
                "error": type(exc).__name__,
                "detail": str(exc),
                "candidates": [],
            }
        candidates = [
            {
                "verb": m.action.verb,
                "target_class": m.action.target_class,
                "score": round(m.score, 9),
            }
            for m in matches
        ]
        if busy:
            return 409, {
                "error": "ArmBusy",
                "detail": "a command is already executing",
                "candidates": candidates,
            }
        scene_classes = {o.class_name for o in state.scene.objects}
        try:
            action = map_to_action(matches[0], scene_classes)
        except TargetAbsent as exc:
            return 422, {
                "error": "TargetAbsent",
                "detail": str(exc),
                "candidates": candidates,
            }
        if not self._pending.offer(action):
            return 409, {
                "error": "ArmBusy",
                "detail": "a command is already executing",
                "candidates": candidates,
            }
        return 200, {
            "accepted": {
                "verb": action.verb,
                "target_class": action.target_class,
                "drop_zone": action.drop_zone,
            },
            "candidates": candidates,
        }

    # -- tick loop (owner thread) -----------------------------------------

    def _run(self) -> None:
        while not self._stop.is_set():
            with self._lock:
                scenario, state = self._scenario, self._state
            if scenario is None:
                time.sleep(0.01)
                continue

            worked = False
            action = self._pending.take() if state.phase is PickPlacePhase.DONE else None
            if action is not None:
                start_pipeline(state, scenario, action)
                worked = True
            if state.phase is not PickPlacePhase.DONE:
                for _ in range(TICKS_PER_BATCH):
                    step(state, scenario)
                    if state.phase is PickPlacePhase.DONE:
                        break
                worked = True

            self._publish(scenario, state)
            with self._lock:
                self._snapshot = state.snapshot()

            if self.paced:
                time.sleep(scenario.control.dt * TICKS_PER_BATCH)
            elif not worked:
                time.sleep(0.005)

    def _publish(self, scenario: Scenario, state: SimState) -> None:
        new_events = state.events[self._published_events :]
        self._published_events = len(state.events)
        scene_changed = False
        for event in new_events:
            self.broker.publish("events", event.stamp, event.to_dict())
            if event.kind == "DetectionsPublished":
                with self._lock:
                    self._latest_detections = event.payload["detections"]
                self.broker.publish(
                    "detections", event.stamp, event.payload["detections"]
                )
            if event.kind in ("PickCompleted", "Error"):
                scene_changed = True
        now = time.monotonic()
        if (
            state.clock - self._last_arm_publish >= ARM_STATE_PERIOD
            or now - self._last_arm_wall >= ARM_STATE_HEARTBEAT
        ):
            self._last_arm_publish = state.clock
            self._last_arm_wall = now
            self.broker.publish("arm_state", state.clock, _arm_dict(scenario, state))
        if scene_changed:
            self.broker.publish("scene", state.clock, _scene_dict(state.scene))


class ActionRequestSlot:
    """Single-slot command queue: the robot serves one operator."""

    def __init__(self):
        self._lock = threading.Lock()
        self._item = None

    def offer(self, item) -> bool:
        with self._lock:
            if self._item is not None:
                return False
            self._item = item
            return True

    def take(self):
        with self._lock:
            item, self._item = self._item, None
            return item

    def full(self) -> bool:
        with self._lock:
            return self._item is not None


_STATUS = {
    "NoScenarioLoaded": 409,
    "ArmBusy": 409,
    "UnknownTopic": 404,
    "NoVerbFound": 422,
    "NoMatch": 422,
    "TargetAbsent": 422,
    "ScenarioParseError": 400,
}


def _error_response(exc: Exception) -> JSONResponse:
    name = type(exc).__name__
    return JSONResponse(
        {"error": name, "detail": str(exc)}, status_code=_STATUS.get(name, 400)
    )


def create_app(runner: SimRunner, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="agribot service")
    app.state.runner = runner

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return _error_response(exc)

    @app.exception_handler(CommandError)
    async def _command_error(_req: Request, exc: CommandError):
        return _error_response(exc)

    @app.exception_handler(ScenarioParseError)
    async def _scenario_error(_req: Request, exc: ScenarioParseError):
        return _error_response(exc)

    @app.get("/api/v1/scene")
    async def get_scene():
        _, state = runner.snapshot()
        return _scene_dict(state.scene)

    @app.get("/api/v1/arm")
    async def get_arm():
        scenario, state = runner.snapshot()
        return _arm_dict(scenario, state)

    @app.get("/api/v1/detections")
    async def get_detections():
        return runner.latest_detections()

    @app.post("/api/v1/command")
    async def post_command(body: dict):
        text = str(body.get("text", "")).strip()
        n_best = int(body.get("n_best", 3))
        if not text or n_best < 1:
            return JSONResponse(
                {"error": "InvalidSubmission", "detail": "text required, n_best >= 1"},
                status_code=422,
            )
        status, payload = await asyncio.to_thread(runner.submit, text, n_best)
        return JSONResponse(payload, status_code=status)

    @app.post("/api/v1/scenario")
    async def post_scenario(request: Request):
        text = (await request.body()).decode("utf-8")
        await asyncio.to_thread(runner.load, text)
        _, state = runner.snapshot()
        return {"loaded": True, "objects": len(state.scene.objects)}

    @app.websocket("/api/v1/stream")
    async def stream(ws: WebSocket, topics: str = Query(default="")):
        requested = [t for t in topics.split(",") if t]
        if not requested:
            requested = list(TOPICS)
        try:
            sub = runner.broker.subscribe(requested)
        except UnknownTopic as exc:
            await ws.accept()
            await ws.send_text(json.dumps({"error": "UnknownTopic", "detail": str(exc)}))
            await ws.close(code=4004)
            return
        await ws.accept()
        try:
            while True:
                try:
                    message = await asyncio.to_thread(sub.messages.get, True, 0.25)
                except queue.Empty:
                    if sub.dropped:
                        break
                    continue
                await ws.send_text(json.dumps(message, sort_keys=True))
        except WebSocketDisconnect:
            pass
        finally:
            runner.broker.unsubscribe(sub)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
