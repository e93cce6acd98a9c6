"""Live human matching sessions over HTTP.

A session walks one participant through 8 tasks. For each task the server
pre-matches n-b patients algorithmically on the confidence scores and exposes
only the residual: the b deferred patients (relabeled 0..b-1) and the leftover
slot capacities, with the accurate success probabilities as cell scores. The
confidence matrix the algorithm used is never sent to the client.

The server is authoritative for feasibility and for the clock. Every task has
a 120 s window that opens when the task payload is first delivered; expired
tasks are auto-submitted with completed=false. Expiry is enforced lazily on
every request touching the session, plus (under the serve command) by a
100 ms background monitor so records appear even without client traffic.
"""

import hashlib
import math
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .generation import GeneratorConfig, sample_instance
from .humans import HumanDecisionRecord, append_record
from .matching import residual, solve_imperfect_matching

TASK_SECONDS = 120.0
EVEN_BS = tuple(b for b in range(5, 21) if b % 2 == 0)
ODD_BS = tuple(b for b in range(5, 21) if b % 2 == 1)


@dataclass(frozen=True)
class TaskPlan:
    """A participant's task sequence: one parity class of b values, shuffled,
    with per-task instance ids. Attention checks are a disabled stub."""

    parity: str  # "even" | "odd"
    b_values: tuple
    task_ids: tuple
    attention_checks: tuple = ()


@dataclass
class TaskState:
    task_id: str
    b: int
    instance: object
    alg_pairs: frozenset
    patients: tuple  # original indices of deferred patients, display order
    base_availability: tuple  # residual capacities before any human choice
    assignments: list = field(default_factory=list)  # ordered (display, slot, stamp)
    start: float = None
    deadline: float = None
    finished: bool = False
    record: HumanDecisionRecord = None

    def assigned_map(self):
        return {disp: slot for disp, slot, _ in self.assignments}

    def availabilities(self):
        left = list(self.base_availability)
        for _, slot, _ in self.assignments:
            left[slot] -= 1
        return left

    def score(self):
        p = self.instance.success_prob
        return math.fsum(
            p[self.patients[disp], slot] for disp, slot, _ in self.assignments
        )


@dataclass
class Session:
    session_id: str
    participant_id: str
    plan: TaskPlan
    tasks: list
    current: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def status(self):
        return "complete" if self.current >= len(self.tasks) else "active"


def _participant_seed(plan_seed, participant_id):
    digest = hashlib.sha256(participant_id.encode()).digest()
    return np.random.SeedSequence(
        (int(plan_seed), int.from_bytes(digest[:8], "little"))
    )


class SessionService:
    """Session store plus the task lifecycle; one lock per session, one global
    lock for the store, serialized dataset appends."""

    def __init__(
        self,
        generator=None,
        plan_seed=0,
        dataset_path=None,
        clock=time.monotonic,
        task_seconds=TASK_SECONDS,
    ):
        self.generator = generator or GeneratorConfig()
        self.plan_seed = plan_seed
        self.dataset_path = dataset_path
        self.clock = clock
        self.task_seconds = task_seconds
        self.sessions = {}
        self.store_lock = threading.Lock()
        self.append_lock = threading.Lock()
        self.records = []
        self._monitor = None
        self._stop_monitor = threading.Event()

    # -- plan construction -------------------------------------------------

    def build_plan_and_tasks(self, participant_id):
        rng = np.random.default_rng(_participant_seed(self.plan_seed, participant_id))
        bs = list(EVEN_BS if rng.integers(2) == 0 else ODD_BS)
        rng.shuffle(bs)
        parity = "even" if bs[0] % 2 == 0 else "odd"
        tasks = []
        task_ids = []
        for idx, b in enumerate(bs):
            instance, _ = sample_instance(self.generator, rng)
            alg = solve_imperfect_matching(instance, "confidence", b=b)
            resid = residual(instance, alg)
            task_id = f"{participant_id}-task{idx}"
            task_ids.append(task_id)
            tasks.append(
                TaskState(
                    task_id=task_id,
                    b=b,
                    instance=instance,
                    alg_pairs=alg.pairs,
                    patients=resid.unmatched,
                    base_availability=resid.remaining_capacities,
                )
            )
        plan = TaskPlan(parity=parity, b_values=tuple(bs), task_ids=tuple(task_ids))
        return plan, tasks

    # -- lifecycle ----------------------------------------------------------

    def start_session(self, participant_id):
        if not participant_id or not isinstance(participant_id, str):
            raise HTTPException(422, "participant_id must be a nonempty string")
        with self.store_lock:
            for sess in self.sessions.values():
                if sess.participant_id == participant_id and sess.status == "active":
                    raise HTTPException(409, "participant already has an active session")
            plan, tasks = self.build_plan_and_tasks(participant_id)
            session = Session(
                session_id=uuid.uuid4().hex,
                participant_id=participant_id,
                plan=plan,
                tasks=tasks,
            )
            self.sessions[session.session_id] = session
        with session.lock:
            self._ensure_started(session)
        return session

    def get_session(self, session_id):
        with self.store_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, "unknown session")
        return session

    def _ensure_started(self, session):
        if session.status != "active":
            return
        task = session.tasks[session.current]
        if task.start is None:
            task.start = self.clock()
            task.deadline = task.start + self.task_seconds

    def _sync(self, session):
        """Auto-submit every expired task; called before any read or write."""
        while session.status == "active":
            task = session.tasks[session.current]
            if task.start is None:
                self._ensure_started(session)
            if self.clock() <= task.deadline:
                break
            self._finalize(session, task, completed=False)

    def _finalize(self, session, task, completed):
        p = self.instance_pairs(task)
        record = HumanDecisionRecord(
            participant_id=session.participant_id,
            task_id=task.task_id,
            b=task.b,
            assignments=tuple(p),
            timestamps=tuple(stamp for _, _, stamp in task.assignments),
            completed=completed,
        )
        task.finished = True
        task.record = record
        self.records.append(record)
        if self.dataset_path:
            with self.append_lock:
                append_record(record, self.dataset_path)
        session.current += 1
        self._ensure_started(session)
        return record

    def instance_pairs(self, task):
        """Recorded assignments in decision order, in original patient indices."""
        return [
            (task.patients[disp], slot) for disp, slot, _ in task.assignments
        ]

    # -- request handlers ---------------------------------------------------

    def task_payload(self, session):
        if session.status != "active":
            return {
                "session_id": session.session_id,
                "status": "complete",
                "completed_tasks": len(session.tasks),
            }
        task = session.tasks[session.current]
        p = task.instance.success_prob
        rows = [[float(p[i, r]) for r in range(task.instance.k)] for i in task.patients]
        return {
            "session_id": session.session_id,
            "status": "active",
            "task_index": session.current,
            "task_count": len(session.tasks),
            "task_id": task.task_id,
            "b": task.b,
            "slots": task.instance.k,
            "scores": rows,
            "availabilities": task.availabilities(),
            "assignments": [
                {"patient": disp, "slot": slot} for disp, slot, _ in task.assignments
            ],
            "pending": task.b - len(task.assignments),
            "score": task.score(),
            "time_left": max(0.0, task.deadline - self.clock()),
            "task_seconds": self.task_seconds,
        }

    def _active_task(self, session):
        self._sync(session)
        if session.status != "active":
            raise HTTPException(409, "session already complete")
        task = session.tasks[session.current]
        if self.clock() > task.deadline:
            raise HTTPException(409, "deadline-passed")
        return task

    def assign(self, session, patient, slot):
        with session.lock:
            task = self._active_task(session)
            if not 0 <= patient < task.b:
                raise HTTPException(409, "unknown patient")
            if not 0 <= slot < task.instance.k:
                raise HTTPException(409, "unknown slot")
            if patient in task.assigned_map():
                raise HTTPException(409, "already-assigned")
            if task.availabilities()[slot] <= 0:
                raise HTTPException(409, "capacity-exceeded")
            task.assignments.append((patient, slot, self.clock() - task.start))
            return self.task_payload(session)

    def unassign(self, session, patient):
        with session.lock:
            task = self._active_task(session)
            if patient not in task.assigned_map():
                raise HTTPException(409, "patient is not assigned")
            task.assignments = [a for a in task.assignments if a[0] != patient]
            return self.task_payload(session)

    def submit(self, session):
        with session.lock:
            task = self._active_task(session)
            if len(task.assignments) < task.b:
                raise HTTPException(409, "early-submit-incomplete")
            record = self._finalize(session, task, completed=True)
            payload = self.task_payload(session)
            payload["record"] = record.to_json()
            return payload

    # -- background expiry monitor -------------------------------------------

    def start_monitor(self, interval=0.1):
        if self._monitor is not None:
            return

        def watch():
            while not self._stop_monitor.wait(interval):
                with self.store_lock:
                    sessions = list(self.sessions.values())
                for session in sessions:
                    with session.lock:
                        self._sync(session)

        self._monitor = threading.Thread(target=watch, daemon=True)
        self._monitor.start()

    def stop_monitor(self):
        self._stop_monitor.set()
        if self._monitor is not None:
            self._monitor.join(timeout=1.0)
            self._monitor = None
        self._stop_monitor.clear()


class CreateSessionBody(BaseModel):
    participant_id: str


class AssignBody(BaseModel):
    patient: int
    slot: int


def create_app(
    generator=None,
    plan_seed=0,
    dataset_path=None,
    clock=time.monotonic,
    task_seconds=TASK_SECONDS,
    monitor=False,
    static_dir=None,
):
    """Build the FastAPI app; the clock is injectable for deterministic tests."""
    service = SessionService(
        generator=generator,
        plan_seed=plan_seed,
        dataset_path=dataset_path,
        clock=clock,
        task_seconds=task_seconds,
    )
    app = FastAPI(title="defermatch session service")
    app.state.service = service
    if monitor:
        service.start_monitor()

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = service.start_session(body.participant_id)
        with session.lock:
            service._sync(session)
            payload = service.task_payload(session)
        return {
            "session_id": session.session_id,
            "participant_id": session.participant_id,
            "parity": session.plan.parity,
            "b_values": list(session.plan.b_values),
            "task": payload,
        }

    @app.get("/api/sessions/{session_id}")
    def session_summary(session_id: str):
        session = service.get_session(session_id)
        with session.lock:
            service._sync(session)
            return {
                "session_id": session.session_id,
                "participant_id": session.participant_id,
                "status": session.status,
                "task_index": min(session.current, len(session.tasks)),
                "task_count": len(session.tasks),
            }

    @app.get("/api/sessions/{session_id}/task")
    def current_task(session_id: str):
        session = service.get_session(session_id)
        with session.lock:
            service._sync(session)
            return service.task_payload(session)

    @app.post("/api/sessions/{session_id}/assignments")
    def assign(session_id: str, body: AssignBody):
        session = service.get_session(session_id)
        return service.assign(session, body.patient, body.slot)

    @app.delete("/api/sessions/{session_id}/assignments/{patient}")
    def unassign(session_id: str, patient: int):
        session = service.get_session(session_id)
        return service.unassign(session, patient)

    @app.post("/api/sessions/{session_id}/submit")
    def submit(session_id: str):
        session = service.get_session(session_id)
        return service.submit(session)

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
