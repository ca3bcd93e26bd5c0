"""Pair scoring backends and winning-candidate selection.

Backends share one surface: ``score(pairs) -> list[float]``, aligned
index-wise with the input and finite everywhere. Overlap, random, and oracle
backends are stateless and safe to call concurrently; an external session is
a serial request/response channel and must not be shared across threads.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import select as _select
import shlex
import string
import subprocess
import time
import unicodedata
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .dotobjects import DotRegistry
from .errors import BackendError, ValidationError
from .inventory import SenseInventory
from .pairs import (
    ContextGlossPair,
    MARK_CLOSE,
    MARK_OPEN,
    RPCondition,
    TestInstance,
    WSDMode,
    build_pairs,
)

PROTOCOL_ID = "lexidot-scorer/1"

# Stripped before bigram extraction: markers, ASCII punctuation and its
# full-width forms, and anything Unicode classifies as punctuation.
_ASCII_PUNCT = frozenset(string.punctuation)
_FULLWIDTH_PUNCT = frozenset(chr(ord(c) + 0xFEE0) for c in string.punctuation)


def _is_removed(ch: str) -> bool:
    if ch in (MARK_OPEN, MARK_CLOSE):
        return True
    if ch in _ASCII_PUNCT or ch in _FULLWIDTH_PUNCT:
        return True
    return unicodedata.category(ch).startswith("P")


def strip_markers_and_punct(text: str) -> str:
    return "".join(ch for ch in text if not _is_removed(ch))


def char_bigrams(text: str) -> set[str]:
    """Distinct character bigrams of the already-cleaned text."""
    return {text[i : i + 2] for i in range(len(text) - 1)}


def overlap_score(context: str, gloss: str) -> int:
    """Count of distinct character bigrams shared by context and gloss.

    Character bigrams stand in for words: the pipeline must not depend on a
    Chinese segmenter. Symmetric in its two arguments.
    """
    left = char_bigrams(strip_markers_and_punct(context))
    right = char_bigrams(strip_markers_and_punct(gloss))
    return len(left & right)


def score_overlap(pairs: Sequence[ContextGlossPair]) -> list[float]:
    if not pairs:
        raise ValueError("empty pair list")
    return [float(overlap_score(p.context, p.gloss)) for p in pairs]


def select(scores: Sequence[float]) -> int:
    """Index of the highest score; ties go to the lowest index."""
    if len(scores) == 0:
        raise ValueError("empty score vector")
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


class Backend(Protocol):
    def score(self, pairs: Sequence[ContextGlossPair]) -> list[float]: ...


@dataclass(frozen=True)
class OverlapBackend:
    def score(self, pairs: Sequence[ContextGlossPair]) -> list[float]:
        return score_overlap(pairs)


def _stable_unit(seed: int, *parts: str) -> float:
    payload = "\x1f".join(parts)
    digest = hashlib.sha256(f"{seed}\x1e{payload}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


@dataclass(frozen=True)
class RandomBackend:
    """Uniform scores derived from a hash of (seed, pair content).

    Fully determined by the seed: the same pair always gets the same score,
    independent of call order or batching.
    """

    seed: int = 0

    def score(self, pairs: Sequence[ContextGlossPair]) -> list[float]:
        if not pairs:
            raise ValueError("empty pair list")
        return [
            _stable_unit(self.seed, p.context, p.gloss, p.candidate_id) for p in pairs
        ]


@dataclass(frozen=True)
class OracleBackend:
    """Scores 1.0 for the true-labeled pair, 0.0 elsewhere."""

    def score(self, pairs: Sequence[ContextGlossPair]) -> list[float]:
        if not pairs:
            raise ValueError("empty pair list")
        return [1.0 if p.label else 0.0 for p in pairs]


class _FdLineReader:
    """Line reader over a raw file descriptor with an optional timeout."""

    def __init__(self, stream, timeout: float | None = None):
        self._fd = stream.fileno()
        self._timeout = timeout
        self._buf = b""

    def readline(self) -> str:
        deadline = None if self._timeout is None else time.monotonic() + self._timeout
        while b"\n" not in self._buf:
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0 or not _select.select([self._fd], [], [], remaining)[0]:
                    raise BackendError("timed out waiting for scorer response")
            chunk = os.read(self._fd, 65536)
            if not chunk:
                raise BackendError("scorer stream closed unexpectedly")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode("utf-8")


class ExternalSession:
    """Serial JSON-Lines channel to an external scorer.

    The backend speaks first: one handshake line, then exactly one response
    per request, ids strictly echoing. Any deviation raises BackendError;
    callers decide whether to mark the instance unscored or abort.
    """

    def __init__(
        self,
        send_line: Callable[[str], None],
        recv_line: Callable[[], str],
        close: Callable[[], None] | None = None,
    ):
        self._send_line = send_line
        self._recv_line = recv_line
        self._close = close
        self._next_id = 0
        self._ready = False

    @classmethod
    def spawn(cls, command: str, timeout: float | None = None) -> "ExternalSession":
        """Start ``command`` as a subprocess and talk over its stdio."""
        try:
            proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
        except OSError as exc:
            raise BackendError(f"cannot start scorer {command!r}: {exc}") from None
        reader = _FdLineReader(proc.stdout, timeout)

        def send(line: str) -> None:
            try:
                proc.stdin.write((line + "\n").encode("utf-8"))
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise BackendError(f"scorer pipe broken: {exc}") from None

        def close() -> None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

        return cls(send, reader.readline, close)

    @classmethod
    def from_streams(cls, writer, reader) -> "ExternalSession":
        """Wrap text-mode file objects (testing hook; blocking reads)."""

        def send(line: str) -> None:
            writer.write(line + "\n")
            writer.flush()

        return cls(send, reader.readline)

    def handshake(self) -> None:
        """Consume the backend's greeting line; idempotent once succeeded."""
        if self._ready:
            return
        line = self._recv_line()
        try:
            greeting = json.loads(line)
        except json.JSONDecodeError:
            raise BackendError(f"unparseable handshake: {line!r}") from None
        if not isinstance(greeting, dict) or greeting.get("protocol") != PROTOCOL_ID:
            raise BackendError(f"unexpected protocol handshake: {greeting!r}")
        self._ready = True

    def score(self, pairs: Sequence[ContextGlossPair]) -> list[float]:
        if not pairs:
            raise ValueError("empty pair list")
        if not self._ready:
            self.handshake()
        request_id = self._next_id
        self._next_id += 1
        self._send_line(
            json.dumps(
                {
                    "id": request_id,
                    "pairs": [{"context": p.context, "gloss": p.gloss} for p in pairs],
                },
                ensure_ascii=False,
            )
        )
        line = self._recv_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError:
            raise BackendError(f"unparseable response: {line[:200]!r}") from None
        if not isinstance(response, dict):
            raise BackendError("response is not an object")
        if "error" in response:
            raise BackendError(f"scorer error: {response['error']}")
        if response.get("id") != request_id:
            raise BackendError(
                f"id mismatch: sent {request_id}, got {response.get('id')!r}"
            )
        scores = response.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            got = len(scores) if isinstance(scores, list) else "none"
            raise BackendError(f"score length mismatch: {len(pairs)} pairs, {got} scores")
        out = []
        for value in scores:
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise BackendError(f"non-finite score {value!r}")
            out.append(float(value))
        return out

    def close(self) -> None:
        if self._close is not None:
            self._close()

    def __enter__(self) -> "ExternalSession":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def make_backend(spec: str, seed: int = 0, timeout: float | None = None) -> Backend:
    """Build a backend from a CLI spec string."""
    if spec == "overlap":
        return OverlapBackend()
    if spec == "random":
        return RandomBackend(seed)
    if spec == "oracle":
        return OracleBackend()
    if spec.startswith("external:"):
        command = spec[len("external:"):]
        if not command:
            raise ValidationError("external backend needs a command, e.g. external:prog --flag")
        return ExternalSession.spawn(command, timeout=timeout)
    raise ValidationError(f"unknown backend spec {spec!r}")


def disambiguate(
    inst: TestInstance,
    *,
    backend: Backend,
    inventory: SenseInventory | None = None,
    registry: DotRegistry | None = None,
    mode: WSDMode = WSDMode.POS_GUIDED,
    condition: RPCondition = RPCondition.DOTTED,
    seed: int = 0,
) -> str:
    """Build the instance's pairs, score them, and return the winner's id."""
    pairs = build_pairs(
        inst,
        inventory=inventory,
        registry=registry,
        mode=mode,
        condition=condition,
        seed=seed,
    )
    scores = backend.score(pairs)
    return pairs[select(scores)].candidate_id
