"""HTTP API serving contrastive annotation tasks.

Endpoints:
    POST /workers                    register (or re-register) a worker
    GET  /tasks/next?worker=ID       lease the next open task
    POST /submissions                submit a selection + explanation
    POST /submissions/{id}/review    approve or reject a submission
    GET  /export/contrastive         corpus of approved contrastive records
    GET  /stats                      live counters
    GET  /images/{painting_id}       painting image from the asset directory

Status codes: 200/201 success, 400 validation, 404 unknown id,
409 duplicate or lease conflict.
"""

from __future__ import annotations

import json
from pathlib import Path
from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import Corpus
from .emotions import EmotionLabel, emotions_of_sentiment
from .selection import AnnotationTask
from .store import NO_IMAGE, AnnotationStore, StoreError

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".webp")


class RegisterRequest(BaseModel):
    worker_id: str | None = None


class SubmissionRequest(BaseModel):
    task_id: str
    worker_id: str
    selection: str
    emotion: str | None = None
    utterance: str | None = None


class ReviewRequest(BaseModel):
    verdict: str
    reason: str = ""


def task_payload(task: AnnotationTask, lease_expiry: float | None = None) -> dict:
    cs = task.candidate_set
    opposite = cs.query_sentiment.opposite
    payload = {
        "task_id": task.task_id,
        "query": {
            "painting_id": cs.query_id,
            "sentiment": cs.query_sentiment.value,
            "dominant_emotion": task.query_dominant_emotion.value
            if task.query_dominant_emotion
            else None,
            "image_url": f"/images/{cs.query_id}",
        },
        "candidates": [
            {
                "painting_id": slot.painting_id,
                "provenance": slot.provenance,
                "image_url": f"/images/{slot.painting_id}",
            }
            for slot in cs.slots
        ],
        "includes_no_image": cs.includes_no_image,
        "no_image_value": NO_IMAGE,
        "allowed_emotions": [label.value for label in emotions_of_sentiment(opposite)],
        "required_submissions": task.required_submissions,
        "completed_submissions": task.completed_submissions,
    }
    if lease_expiry is not None:
        payload["lease_expiry"] = lease_expiry
    return payload


def create_app(
    store: AnnotationStore,
    corpus: Corpus | None = None,
    image_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="emobias annotation service")
    image_root = Path(image_dir) if image_dir else None

    @app.exception_handler(StoreError)
    async def store_error_handler(_request: Request, exc: StoreError):
        return JSONResponse(status_code=exc.http_status, content={"error": str(exc)})

    @app.post("/workers", status_code=201)
    def register_worker(body: RegisterRequest):
        worker_id = store.register_worker(body.worker_id)
        return {"worker_id": worker_id}

    @app.get("/tasks/next")
    def next_task(worker: str = Query(...)):
        result = store.next_task(worker)
        if result is None:
            return {"task": None, "reason": "no-task-available"}
        task, lease = result
        return {"task": task_payload(task, lease.lease_expiry)}

    @app.post("/submissions", status_code=201)
    def submit(body: SubmissionRequest):
        emotion = None
        if body.emotion is not None:
            try:
                emotion = EmotionLabel.parse(body.emotion)
            except ValueError as exc:
                return JSONResponse(status_code=400, content={"error": str(exc)})
        submission = store.submit(
            task_id=body.task_id,
            worker_id=body.worker_id,
            selection=body.selection,
            emotion=emotion,
            utterance=body.utterance,
        )
        task = store.tasks[submission.task_id]
        return {
            "submission_id": submission.submission_id,
            "review_status": submission.review_status,
            "task_status": task.status,
            "completed_submissions": task.completed_submissions,
        }

    @app.post("/submissions/{submission_id}/review")
    def review(submission_id: str, body: ReviewRequest):
        submission = store.review(submission_id, body.verdict, body.reason)
        return submission.to_dict()

    @app.get("/export/contrastive")
    def export_contrastive(format: str = "jsonl"):
        exported, no_image_count = store.export_contrastive(corpus)
        records = []
        for painting in exported.paintings.values():
            for ann in painting.annotations:
                records.append(
                    {
                        "painting_id": painting.id,
                        "art_style": painting.art_style,
                        "image_ref": painting.image_ref,
                        "emotion": ann.emotion.value,
                        "utterance": ann.utterance,
                        "source": ann.source,
                        "worker_id": ann.worker_id,
                        "query_painting_id": ann.query_painting_id,
                    }
                )
        if format == "json":
            return {"no_image_count": no_image_count, "annotations": records}
        body = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
        return PlainTextResponse(
            content=body,
            media_type="application/x-ndjson",
            headers={"X-No-Image-Count": str(no_image_count)},
        )

    @app.get("/stats")
    def stats():
        return store.stats()

    @app.get("/images/{painting_id}")
    def image(painting_id: str):
        if image_root is None:
            return JSONResponse(
                status_code=404, content={"error": "no image directory configured"}
            )
        safe = Path(painting_id).name  # forbid path traversal
        for suffix in _IMAGE_SUFFIXES:
            candidate = image_root / f"{safe}{suffix}"
            if candidate.is_file():
                return FileResponse(candidate)
        return JSONResponse(
            status_code=404, content={"error": f"no image for {painting_id!r}"}
        )

    if ui_dir is not None:
        app.mount("/app", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
