"""Serving loop for the lexidot-scorer/1 stdio protocol.

The server speaks first (one handshake line), then answers every request
line with exactly one response whose id echoes the request. A malformed
request produces an error record and the loop keeps serving.
"""

from __future__ import annotations

import json
from typing import IO

from .model import PairScorerModel

PROTOCOL_ID = "lexidot-scorer/1"


def serve(stdin: IO[str], stdout: IO[str], model: PairScorerModel) -> None:
    def emit(payload: dict) -> None:
        stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")
        stdout.flush()

    emit({"protocol": PROTOCOL_ID})
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request_id = None
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request is not an object")
            request_id = request.get("id")
            pairs = request["pairs"]
            scores = [
                model.score(str(p["context"]), str(p["gloss"])) for p in pairs
            ]
        except Exception as exc:
            emit({"id": request_id, "error": f"{type(exc).__name__}: {exc}"})
            continue
        emit({"id": request_id, "scores": scores})
