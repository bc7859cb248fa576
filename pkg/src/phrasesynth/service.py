"""HTTP API for the interactive demo flow.

Upload or select a score, edit its pianoroll, pick an instrument, and
synthesize audio on the fly. Scores and jobs live in memory with optional
write-through persistence to a directory; synthesis runs on a small
bounded worker pool so concurrent requests queue instead of piling up.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel

from .checkpoint import Checkpoint, load_checkpoint
from .dsp import AudioConfig
from .errors import InvalidRange, PhraseSynthError
from .midifile import parse_midi
from .pianoroll import Pianoroll, score_to_pianoroll
from .render import render
from .wavio import write_wav

log = logging.getLogger(__name__)

JOB_STATES = ("queued", "running", "done", "failed")
_NEXT_STATE = {"queued": {"running"}, "running": {"done", "failed"}}


def _new_id() -> str:
    return secrets.token_hex(16)


@dataclass
class ScoreRecord:
    id: str
    pianoroll: dict  # sparse JSON form
    filename: str
    created_at: float

    def as_json(self) -> dict:
        return {
            "id": self.id,
            "pianoroll": self.pianoroll,
            "filename": self.filename,
            "created_at": self.created_at,
        }


@dataclass
class SynthesisJob:
    id: str
    score_id: str
    instrument_label: str
    state: str = "queued"
    error: str | None = None
    audio: bytes | None = field(default=None, repr=False)
    state_log: list[str] = field(default_factory=lambda: ["queued"])

    def as_json(self) -> dict:
        body = {
            "id": self.id,
            "score_id": self.score_id,
            "instrument_label": self.instrument_label,
            "state": self.state,
        }
        if self.state == "failed":
            body["error"] = self.error
        if self.state == "done":
            body["audio_url"] = f"/api/jobs/{self.id}/audio"
        return body


class JobStore:
    """Thread-safe job table enforcing the queued->running->done/failed law."""

    def __init__(self):
        self._jobs: dict[str, SynthesisJob] = {}
        self._lock = threading.Lock()

    def create(self, score_id: str, label: str) -> SynthesisJob:
        job = SynthesisJob(id=_new_id(), score_id=score_id, instrument_label=label)
        with self._lock:
            self._jobs[job.id] = job
        return job

    def get(self, job_id: str) -> SynthesisJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def transition(self, job_id: str, state: str, *, error: str | None = None,
                   audio: bytes | None = None) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if state not in _NEXT_STATE.get(job.state, set()):
                raise RuntimeError(
                    f"illegal job transition {job.state} -> {state}"
                )
            job.state = state
            job.state_log.append(state)
            job.error = error
            job.audio = audio


class ScoreStore:
    """Thread-safe score table with atomic pianoroll replacement."""

    def __init__(self):
        self._scores: dict[str, ScoreRecord] = {}
        self._lock = threading.Lock()

    def put(self, record: ScoreRecord) -> None:
        with self._lock:
            self._scores[record.id] = record

    def get(self, score_id: str) -> ScoreRecord | None:
        with self._lock:
            return self._scores.get(score_id)

    def replace_roll(self, score_id: str, roll: dict) -> bool:
        with self._lock:
            record = self._scores.get(score_id)
            if record is None:
                return False
            record.pianoroll = roll
            return True

    def all(self) -> list[ScoreRecord]:
        with self._lock:
            return list(self._scores.values())


def _validate_sparse_roll(obj) -> dict:
    """Field-level validation of the sparse pianoroll JSON form."""

    def fail(detail: str):
        raise HTTPException(status_code=422, detail=detail)

    if not isinstance(obj, dict):
        fail("body must be a JSON object")
    for key in ("frame_rate", "pitch_min", "pitch_max", "notes"):
        if key not in obj:
            fail(f"missing field {key!r}")
    if not isinstance(obj["notes"], list):
        fail("notes: must be a list")
    try:
        pitch_min = int(obj["pitch_min"])
        pitch_max = int(obj["pitch_max"])
        frame_rate = float(obj["frame_rate"])
    except (TypeError, ValueError):
        fail("pitch_min/pitch_max/frame_rate: not numeric")
    if not 0 <= pitch_min <= pitch_max <= 127:
        fail(f"pitch range [{pitch_min}, {pitch_max}] invalid")
    if frame_rate <= 0:
        fail("frame_rate: must be positive")
    notes = []
    for i, n in enumerate(obj["notes"]):
        try:
            pitch = int(n["pitch"])
            onset = int(n["onset_frame"])
            offset = int(n["offset_frame"])
        except (TypeError, KeyError, ValueError):
            fail(f"notes[{i}]: pitch/onset_frame/offset_frame must be integers")
        if not pitch_min <= pitch <= pitch_max:
            fail(f"notes[{i}].pitch: {pitch} outside [{pitch_min}, {pitch_max}]")
        if onset < 0:
            fail(f"notes[{i}].onset_frame: negative")
        if offset <= onset:
            fail(f"notes[{i}].offset_frame: must be > onset_frame")
        notes.append({"pitch": pitch, "onset_frame": onset, "offset_frame": offset})
    return {
        "frame_rate": frame_rate,
        "pitch_min": pitch_min,
        "pitch_max": pitch_max,
        "notes": notes,
    }


class SynthesizeRequest(BaseModel):
    score_id: str
    instrument_label: str


@dataclass
class ServiceConfig:
    checkpoint_paths: list[Path] = field(default_factory=list)
    persist_dir: Path | None = None
    workers: int = 2
    gl_iterations: int = 60
    cors_origins: list[str] = field(default_factory=lambda: ["*"])


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="phrasesynth")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    checkpoints: dict[str, Checkpoint] = {}
    instruments: dict[str, str] = {}  # label -> checkpoint id
    for path in config.checkpoint_paths:
        ckpt = load_checkpoint(path)
        ckpt_id = Path(path).stem
        if ckpt_id in checkpoints:
            ckpt_id = f"{ckpt_id}-{_new_id()[:8]}"
        checkpoints[ckpt_id] = ckpt
        for label in ckpt.labels:
            if label in instruments:
                log.warning("instrument %r provided by multiple checkpoints; "
                            "keeping the first", label)
                continue
            instruments[label] = ckpt_id

    scores = ScoreStore()
    jobs = JobStore()
    executor = ThreadPoolExecutor(max_workers=config.workers)
    app.state.scores = scores
    app.state.jobs = jobs
    app.state.executor = executor

    persist = config.persist_dir
    if persist is not None:
        persist = Path(persist)
        for sub in ("scores", "jobs", "audio"):
            (persist / sub).mkdir(parents=True, exist_ok=True)
        for f in sorted((persist / "scores").glob("*.json")):
            try:
                obj = json.loads(f.read_text())
                scores.put(ScoreRecord(**obj))
            except (json.JSONDecodeError, TypeError):
                log.warning("skipping unreadable score file %s", f)

    def persist_score(record: ScoreRecord) -> None:
        if persist is not None:
            path = persist / "scores" / f"{record.id}.json"
            path.write_text(json.dumps(record.as_json()))

    def persist_job(job: SynthesisJob) -> None:
        if persist is not None:
            (persist / "jobs" / f"{job.id}.json").write_text(
                json.dumps(job.as_json()))
            if job.audio is not None:
                (persist / "audio" / f"{job.id}.wav").write_bytes(job.audio)

    def active_frame_rate() -> float:
        for ckpt in checkpoints.values():
            return ckpt.audio_config.frame_rate
        return AudioConfig().frame_rate

    # -- scores ------------------------------------------------------------

    @app.post("/api/scores")
    async def upload_score(file: UploadFile = File(...)):
        raw = await file.read()
        try:
            score = parse_midi(raw)
        except PhraseSynthError as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc)},
            )
        roll = score_to_pianoroll(score, frame_rate=active_frame_rate())
        record = ScoreRecord(
            id=_new_id(),
            pianoroll=roll.to_sparse(),
            filename=file.filename or "upload.mid",
            created_at=time.time(),
        )
        scores.put(record)
        persist_score(record)
        return {"id": record.id, "pianoroll": record.pianoroll}

    @app.get("/api/scores/{score_id}/pianoroll")
    def get_pianoroll(score_id: str):
        record = scores.get(score_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown score id")
        return record.pianoroll

    @app.put("/api/scores/{score_id}/pianoroll", status_code=204)
    def put_pianoroll(score_id: str, body: dict):
        roll = _validate_sparse_roll(body)
        if not scores.replace_roll(score_id, roll):
            raise HTTPException(status_code=404, detail="unknown score id")
        record = scores.get(score_id)
        if record is not None:
            persist_score(record)
        return Response(status_code=204)

    # -- instruments ---------------------------------------------------------

    @app.get("/api/instruments")
    def list_instruments():
        return [
            {"label": label, "checkpoint_id": ckpt_id}
            for label, ckpt_id in instruments.items()
        ]

    # -- synthesis -----------------------------------------------------------

    def run_job(job_id: str) -> None:
        job = jobs.get(job_id)
        try:
            jobs.transition(job_id, "running")
            persist_job(jobs.get(job_id))
            record = scores.get(job.score_id)
            ckpt = checkpoints[instruments[job.instrument_label]]
            roll = Pianoroll.from_sparse(record.pianoroll)
            result = render(
                ckpt, roll,
                instrument=job.instrument_label,
                gl_iterations=config.gl_iterations,
            )
            wav = write_wav(result.audio)
            jobs.transition(job_id, "done", audio=wav)
        except Exception as exc:  # noqa: BLE001 - job must reach a terminal state
            log.exception("synthesis job %s failed", job_id)
            jobs.transition(
                job_id, "failed",
                error=f"{type(exc).__name__}: {exc}",
            )
        persist_job(jobs.get(job_id))

    @app.post("/api/synthesize", status_code=202)
    def synthesize(req: SynthesizeRequest):
        if scores.get(req.score_id) is None:
            raise HTTPException(status_code=404, detail="unknown score id")
        if req.instrument_label not in instruments:
            raise HTTPException(status_code=404, detail="unknown instrument label")
        job = jobs.create(req.score_id, req.instrument_label)
        executor.submit(run_job, job.id)
        return {"job_id": job.id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job id")
        return job.as_json()

    @app.get("/api/jobs/{job_id}/audio")
    def get_job_audio(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job id")
        if job.state != "done":
            raise HTTPException(
                status_code=409,
                detail=f"job is {job.state}, audio only available when done",
            )
        return Response(content=job.audio, media_type="audio/wav")

    return app
