"""HTTP job service: sessions, phase-by-phase generation, layer retrieval.

State layout under the persistence root (``TAUE_HOME`` or an explicit path)::

    sessions/<sid>/session.json        defaults + layerset index
    sessions/<sid>/phase/              latest per-phase artifacts (bundles, masks)
    sessions/<sid>/layersets/<lsid>/   completed LayerSet directories

Sessions and layersets are durable; the in-memory job table is rebuilt empty
on restart.  Request handling is concurrent; pipeline execution runs on a
worker pool; per-session mutations are serialized by a session lock.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from PIL import Image

from . import pipeline as pl
from .core import load_buffer, save_buffer
from .ntc import SeedlingBundle

PHASES = ("foreground", "composite", "background", "full", "replace_bg", "multi_object")

_LAYER_FILES = {
    "foreground": "foreground.png",
    "background": "background.png",
    "composite": "composite.png",
    "mask": "object_mask.png",
}


class JobStore:
    """In-memory job table with queued -> running -> done|error transitions."""

    def __init__(self):
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def create(self, session_id: str, phase: str, total_steps: int) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = {
                "id": job_id, "session": session_id, "phase": phase,
                "state": "queued", "progress": 0.0, "total_steps": total_steps,
                "done_steps": 0, "result": None, "error": None,
            }
        return job_id

    def update(self, job_id: str, **kv) -> None:
        with self._lock:
            self._jobs[job_id].update(kv)

    def step(self, job_id: str) -> None:
        with self._lock:
            job = self._jobs[job_id]
            job["done_steps"] += 1
            job["progress"] = min(1.0, job["done_steps"] / max(1, job["total_steps"]))

    def get(self, job_id: str) -> Optional[dict]:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job else None


class SessionStore:
    """Directory-per-session persistence (append-only, inspectable)."""

    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def create(self, defaults: dict) -> str:
        # validate defaults eagerly so bad configs fail at session creation
        pl.PipelineConfig.from_dict(defaults)
        session_id = uuid.uuid4().hex
        d = self.session_dir(session_id)
        (d / "layersets").mkdir(parents=True)
        (d / "phase").mkdir()
        (d / "session.json").write_text(json.dumps(
            {"id": session_id, "defaults": defaults, "layersets": []}, indent=2))
        return session_id

    def exists(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "session.json").exists()

    def read(self, session_id: str) -> dict:
        return json.loads((self.session_dir(session_id) / "session.json").read_text())

    def write(self, session_id: str, doc: dict) -> None:
        (self.session_dir(session_id) / "session.json").write_text(
            json.dumps(doc, indent=2))

    def add_layerset(self, session_id: str, layers: pl.LayerSet) -> str:
        lsid = uuid.uuid4().hex
        layers.save(self.session_dir(session_id) / "layersets" / lsid)
        with self.lock(session_id):
            doc = self.read(session_id)
            doc["layersets"].append(lsid)
            self.write(session_id, doc)
        return lsid

    def layerset_dir(self, session_id: str, lsid: str) -> Path:
        return self.session_dir(session_id) / "layersets" / lsid


def _estimate_steps(cfg: pl.PipelineConfig, phase: str) -> int:
    n_boxes = max(1, len(cfg.boxes))
    per = {"foreground": cfg.steps, "composite": cfg.steps, "background": cfg.steps,
           "full": (n_boxes + 2) * cfg.steps, "multi_object": (n_boxes + 2) * cfg.steps,
           "replace_bg": 2 * cfg.steps}
    return per[phase]


def create_app(root=None, pool_size: int = 2) -> FastAPI:
    root = Path(root) if root else Path.home() / ".taue"
    app = FastAPI(title="taue")
    sessions = SessionStore(root)
    jobs = JobStore()
    executor = ThreadPoolExecutor(max_workers=pool_size)
    app.state.sessions = sessions
    app.state.jobs = jobs
    app.state.executor = executor

    def merged_config(session_id: str, delta: dict) -> pl.PipelineConfig:
        doc = sessions.read(session_id)
        merged = dict(doc["defaults"])
        merged.update(delta or {})
        merged.pop("layerset_id", None)
        return pl.PipelineConfig.from_dict(merged)

    def phase_dir(session_id: str) -> Path:
        return sessions.session_dir(session_id) / "phase"

    def run_job(job_id: str, session_id: str, phase: str,
                cfg: pl.PipelineConfig, delta: dict) -> None:
        jobs.update(job_id, state="running")
        opts = dict(cfg.backend_options)
        delay = float(opts.pop("step_delay", 0.0))

        def on_step(_t):
            jobs.step(job_id)
            if delay:
                time.sleep(delay)

        pdir = phase_dir(session_id)
        try:
            backend = pl.make_backend(cfg)
            result: dict = {}
            if phase == "foreground":
                box = pl._boxes(cfg)[0]
                i_fg, bundle, box_mask = pl.generate_foreground(
                    cfg, backend, box=box, on_step=on_step)
                m_obj = pl.localize_object(cfg, backend, bundle, box,
                                           cfg.fg_prompts()[0])
                bundle.save(pdir / "fg_bundle")
                save_buffer(pdir / "box_mask.taue", box_mask[None])
                save_buffer(pdir / "m_obj.taue", m_obj[None])
                Image.fromarray(i_fg).save(pdir / "i_fg.png")
                result = {"artifact": "fg_bundle"}
            elif phase == "composite":
                bundle = SeedlingBundle.load(pdir / "fg_bundle")
                m_obj = load_buffer(pdir / "m_obj.taue")[0]
                i_all, comp = pl.generate_composite(cfg, backend, bundle,
                                                    m_obj=m_obj, on_step=on_step)
                comp.save(pdir / "comp_bundle")
                Image.fromarray(i_all).save(pdir / "i_all.png")
                result = {"artifact": "comp_bundle"}
            elif phase == "background":
                comp = SeedlingBundle.load(pdir / "comp_bundle")
                i_bg = pl.generate_background(cfg, backend, comp, on_step=on_step)
                i_fg = np.asarray(Image.open(pdir / "i_fg.png"))
                i_all = np.asarray(Image.open(pdir / "i_all.png"))
                m_obj = load_buffer(pdir / "m_obj.taue")[0]
                box_mask = load_buffer(pdir / "box_mask.taue")[0]
                layers = pl.LayerSet(
                    foreground=pl.extract_rgba_foreground(i_fg, m_obj,
                                                          cfg.feather_radius),
                    background=i_bg, composite=i_all, m_obj=m_obj,
                    box_mask=box_mask, config=cfg,
                    fg_bundles=[SeedlingBundle.load(pdir / "fg_bundle")],
                    comp_bundle=comp,
                    metadata={"t_crop": comp.step, "n_boxes": 1,
                              "overlap_rule": "first-listed box wins"})
                result = {"layerset": sessions.add_layerset(session_id, layers)}
            elif phase in ("full", "multi_object"):
                layers = pl.generate_layers(cfg, backend, on_step=on_step)
                result = {"layerset": sessions.add_layerset(session_id, layers)}
            elif phase == "replace_bg":
                doc = sessions.read(session_id)
                lsid = (delta or {}).get("layerset_id") or doc["layersets"][-1]
                base = pl.LayerSet.load(sessions.layerset_dir(session_id, lsid))
                layers = pl.replace_background(base, cfg.prompt_bg,
                                               overrides={"seed": cfg.seed},
                                               backend=backend, on_step=on_step)
                result = {"layerset": sessions.add_layerset(session_id, layers)}
            jobs.update(job_id, state="done", progress=1.0, result=result)
        except Exception as e:  # noqa: BLE001 - job errors surface via polling
            jobs.update(job_id, state="error", error=str(e))

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/sessions")
    def create_session(body: Optional[dict] = None):
        defaults = (body or {}).get("defaults", {})
        try:
            sid = sessions.create(defaults)
        except pl.ConfigError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"id": sid}

    @app.post("/sessions/{session_id}/jobs")
    def submit_phase(session_id: str, body: dict):
        if not sessions.exists(session_id):
            raise HTTPException(status_code=404, detail="unknown session")
        phase = body.get("phase")
        if phase not in PHASES:
            raise HTTPException(status_code=400,
                                detail=f"phase must be one of {PHASES}")
        delta = body.get("config", {})
        try:
            cfg = merged_config(session_id, delta)
        except pl.ConfigError as e:
            raise HTTPException(status_code=422, detail=str(e))
        pdir = phase_dir(session_id)
        if phase == "composite" and not (pdir / "fg_bundle" / "meta.json").exists():
            raise HTTPException(status_code=409,
                                detail="composite requires a foreground bundle")
        if phase == "background" and not (pdir / "comp_bundle" / "meta.json").exists():
            raise HTTPException(status_code=409,
                                detail="background requires a composite bundle")
        if phase == "replace_bg":
            doc = sessions.read(session_id)
            if not doc["layersets"] and not delta.get("layerset_id"):
                raise HTTPException(status_code=409,
                                    detail="replace_bg requires a stored layerset "
                                           "(missing foreground bundle)")
        job_id = jobs.create(session_id, phase, _estimate_steps(cfg, phase))
        executor.submit(run_job, job_id, session_id, phase, cfg, delta)
        return {"id": job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        return job

    @app.get("/sessions/{session_id}/layersets/{lsid}/{layer}")
    def get_layer(session_id: str, lsid: str, layer: str):
        if layer not in _LAYER_FILES:
            raise HTTPException(status_code=400,
                                detail=f"layer must be one of {sorted(_LAYER_FILES)}")
        path = sessions.layerset_dir(session_id, lsid) / _LAYER_FILES[layer]
        if not path.exists():
            raise HTTPException(status_code=404, detail="layerset or layer not found")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.get("/sessions/{session_id}/layersets")
    def list_layersets(session_id: str):
        if not sessions.exists(session_id):
            raise HTTPException(status_code=404, detail="unknown session")
        return {"layersets": sessions.read(session_id)["layersets"]}

    return app
