"""JSON-over-HTTP front end for a :class:`~relmem.pipeline.Pipeline`.

``POST /v1/answer`` takes ``{"question": str, "trace": bool}`` and returns
``{"kind": "text" | "sql_result", "answer": ..., "trace": [...]}``.
``GET /v1/health`` reports ``{"status": "ok", "databases": n}``.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .pipeline import Pipeline, PipelineFailure


class AnswerRequest(BaseModel):
    question: str
    trace: bool = False


def create_app(pipeline: Pipeline, timing: bool = True) -> FastAPI:
    app = FastAPI(title="relmem", version="0.1.0")

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "databases": len(pipeline.catalog)}

    @app.post("/v1/answer")
    async def answer(req: AnswerRequest):
        if not req.question.strip():
            return JSONResponse(
                {"error": {"code": "invalid_question", "message": "question must be non-empty"}}, status_code=400
            )
        try:
            response = await run_in_threadpool(pipeline.answer, req.question)
        except PipelineFailure as failure:
            body = failure.to_json(timing)
            if not req.trace:
                body.pop("trace")
            return JSONResponse(body, status_code=503)
        return response.to_json(trace=req.trace, timing=timing)

    return app
