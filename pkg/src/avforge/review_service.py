"""HTTP review service the verification UI drives.

All task mutations flow through POST /api/tasks/{id}; optimistic concurrency
(a revision check) arbitrates racing reviewers, and a mutation is persisted
to the store journal before the response is sent. Media is served as the cut
segment clip with HTTP range support for seeking.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .annotate import StaleRevisionError, TaskStore, TaskStoreError, resolve_audio
from .audio_io import cut_wav

log = logging.getLogger(__name__)


class SubmitBody(BaseModel):
    revision: int
    verdict: str
    final_transcript: str | None = None
    start_s: float | None = None
    end_s: float | None = None


def create_app(store: TaskStore, clip_cache: str | Path | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="avforge review service")
    cache_dir = Path(clip_cache) if clip_cache is not None else store.root / "media_cache"
    cache_dir.mkdir(parents=True, exist_ok=True)

    @app.get("/api/tasks")
    def list_tasks(status: str | None = Query(default=None), limit: int | None = Query(default=None)):
        tasks = store.list(status=status, limit=limit)
        return {"tasks": [t.to_dict() for t in tasks], "counts": store.counts()}

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            return store.get(task_id).to_dict()
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no such task: {task_id}")

    @app.post("/api/tasks/{task_id}")
    def submit_task(task_id: str, body: SubmitBody, x_reviewer: str | None = Header(default=None)):
        if not (x_reviewer or "").strip():
            raise HTTPException(status_code=400, detail="X-Reviewer header is required")
        try:
            task = store.submit(
                task_id,
                revision=body.revision,
                verdict=body.verdict,
                reviewer=x_reviewer,
                final_transcript=body.final_transcript,
                start_s=body.start_s,
                end_s=body.end_s,
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no such task: {task_id}")
        except StaleRevisionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except TaskStoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        # stale clips for this task are now wrong; drop them so the next
        # media fetch reflects the edited boundaries
        for stale in cache_dir.glob(f"{task_id}.r*.wav"):
            stale.unlink(missing_ok=True)
        return task.to_dict()

    @app.get("/media/{task_id}")
    def media(task_id: str):
        try:
            task = store.get(task_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no such task: {task_id}")
        clip = cache_dir / f"{task_id}.r{task.revision}.wav"
        if not clip.exists():
            try:
                audio = resolve_audio(task.source_media)
            except FileNotFoundError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            cut_wav(audio, clip, task.start_s, task.end_s)
        # FileResponse honors Range headers, which the player needs to seek
        return FileResponse(clip, media_type="audio/wav")

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        # mounted last, so the API and media routes above keep precedence
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(store_root: str | Path, bind: str = "127.0.0.1:8765", ui_dir: str | Path | None = None) -> None:
    """Run the review service until interrupted."""
    import uvicorn

    host, _, port = bind.partition(":")
    store = TaskStore(store_root)
    app = create_app(store, ui_dir=ui_dir)
    log.info("review service on %s with %d tasks", bind, len(store))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765), log_level="info")
