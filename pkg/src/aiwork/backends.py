"""Pluggable classifier backends.

A backend answers four request kinds whose response payloads mirror the
pipeline's structured-output schemas verbatim:

- generate -> GenerationAnswer: summary, user_iwa, user_iwa_variations,
  bot_iwa, bot_iwa_variations, is_homework_explanation, is_homework
- classify_user -> UserClassificationAnswer: iwa_analyses of
  {iwa, iwa_explanation, is_match_explanation, is_match,
   assistance_level_explanation, assistance_level}
- classify_bot -> BotClassificationAnswer: iwa_analyses of
  {iwa, iwa_explanation, is_match_explanation, is_match,
   automation_level_explanation, automation_level}
- completion -> CompletionAnswer: task_summary, completed_explanation,
  completed, speedup_50pct_explanation, speedup_50pct

plus an embedding request. The mock backend is hermetic and bitwise
deterministic: embeddings are token-hash bag vectors, activity matches
come from a configured keyword list, and completion follows a keyword
rule (an assistant message containing "DONE" is complete, "PARTIAL" is
partially complete).
"""

from __future__ import annotations

import hashlib
import re
from abc import ABC, abstractmethod
from typing import Mapping, Sequence

import numpy as np
import requests

from aiwork.errors import BackendError, BackendUnavailable

SCOPE_LEVEL_NAMES = ("none", "minimal", "limited", "moderate", "significant", "complete")
COMPLETION_NAMES = ("not_complete", "partially_complete", "complete")

USER_LEVEL_FIELD = "assistance_level"
BOT_LEVEL_FIELD = "automation_level"


class ClassifierBackend(ABC):
    """Interface the classification pipeline drives."""

    capabilities = frozenset({"summarize", "embed", "classify_block", "completion"})

    @property
    @abstractmethod
    def identity(self) -> str:
        """Stable identifier recorded in run manifests."""

    @abstractmethod
    def generate(self, conversation_text: str) -> dict:
        """GenerationAnswer payload for the stage-one summary."""

    @abstractmethod
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """One embedding row per input text."""

    @abstractmethod
    def classify_user(
        self, conversation_text: str, summary: str, candidate_iwas: Sequence[str]
    ) -> dict:
        """UserClassificationAnswer payload over the candidate statements."""

    @abstractmethod
    def classify_bot(
        self, conversation_text: str, summary: str, candidate_iwas: Sequence[str]
    ) -> dict:
        """BotClassificationAnswer payload over the candidate statements."""

    @abstractmethod
    def completion(self, conversation_text: str) -> dict:
        """CompletionAnswer payload."""


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _stable_int(*parts: str) -> int:
    digest = hashlib.blake2b("\x1f".join(parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def _split_transcript(conversation_text: str) -> tuple[str, str]:
    """Split a rendered transcript into (user text, assistant text)."""
    user_lines: list[str] = []
    assistant_lines: list[str] = []
    current: list[str] | None = None
    for line in conversation_text.splitlines():
        if line.startswith("user: "):
            current = user_lines
            current.append(line[len("user: ") :])
        elif line.startswith("assistant: "):
            current = assistant_lines
            current.append(line[len("assistant: ") :])
        elif current is not None:
            current.append(line)
    return "\n".join(user_lines), "\n".join(assistant_lines)


class MockBackend(ClassifierBackend):
    """Deterministic rule-based backend for hermetic runs.

    `keywords` maps an IWA statement (the exact candidate text the
    pipeline sends) to the keyword list that marks it as matched. A
    candidate matches the user side when any keyword occurs in the user
    messages, and the bot side when any keyword occurs in the assistant
    messages. Scope levels are a stable hash of (side, statement,
    transcript) unless the transcript carries a "[narrow]" or "[broad]"
    marker.
    """

    def __init__(
        self,
        keywords: Mapping[str, Sequence[str]] | None = None,
        embedding_dim: int = 256,
    ) -> None:
        # No keyword map at all: fall back to matching the literal
        # statement text. An explicit (possibly partial) map is used as-is.
        self._derive_keywords = keywords is None
        self._keywords = {
            statement: tuple(kw.lower() for kw in kws)
            for statement, kws in (keywords or {}).items()
        }
        self._dim = embedding_dim

    @property
    def identity(self) -> str:
        return f"mock-v1-dim{self._dim}"

    def generate(self, conversation_text: str) -> dict:
        user_text, assistant_text = _split_transcript(conversation_text)
        user_goal = " ".join(user_text.split())[:120] or "general assistance request"
        bot_action = " ".join(assistant_text.split())[:120] or "provide information to others"
        return {
            "summary": " ".join(conversation_text.split())[:200],
            "user_iwa": user_goal,
            "user_iwa_variations": [f"{user_goal} (variant {k})" for k in range(1, 5)],
            "bot_iwa": bot_action,
            "bot_iwa_variations": [f"{bot_action} (variant {k})" for k in range(1, 5)],
            "is_homework_explanation": "keyword rule on the transcript",
            "is_homework": 1 if "homework" in conversation_text.lower() else 0,
        }

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self._dim), dtype=float)
        for row, text in enumerate(texts):
            for token in _tokens(text):
                out[row, _stable_int("tok", token) % self._dim] += 1.0
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out

    def _match_level(self, side_text: str, statement: str, side: str, transcript: str) -> tuple[bool, str]:
        if self._derive_keywords:
            keywords = (statement.lower(),)
        else:
            keywords = self._keywords.get(statement, ())
        lowered = side_text.lower()
        matched = any(kw in lowered for kw in keywords)
        if not matched:
            return False, "none"
        if "[narrow]" in transcript:
            return True, "minimal"
        if "[broad]" in transcript:
            return True, "significant"
        idx = 1 + _stable_int("scope", side, statement, transcript) % 5
        return True, SCOPE_LEVEL_NAMES[idx]

    def _classify(
        self,
        conversation_text: str,
        candidate_iwas: Sequence[str],
        side: str,
        level_field: str,
    ) -> dict:
        user_text, assistant_text = _split_transcript(conversation_text)
        side_text = user_text if side == "user" else assistant_text
        analyses = []
        for statement in candidate_iwas:
            matched, level = self._match_level(side_text, statement, side, conversation_text)
            analyses.append(
                {
                    "iwa": statement,
                    "iwa_explanation": "keyword-configured mock activity",
                    "is_match_explanation": "keyword intersection rule",
                    "is_match": matched,
                    f"{level_field}_explanation": "mock level rule",
                    level_field: level,
                }
            )
        return {"iwa_analyses": analyses}

    def classify_user(
        self, conversation_text: str, summary: str, candidate_iwas: Sequence[str]
    ) -> dict:
        return self._classify(conversation_text, candidate_iwas, "user", USER_LEVEL_FIELD)

    def classify_bot(
        self, conversation_text: str, summary: str, candidate_iwas: Sequence[str]
    ) -> dict:
        return self._classify(conversation_text, candidate_iwas, "bot", BOT_LEVEL_FIELD)

    def completion(self, conversation_text: str) -> dict:
        _, assistant_text = _split_transcript(conversation_text)
        if "DONE" in assistant_text:
            completed = "complete"
        elif "PARTIAL" in assistant_text:
            completed = "partially_complete"
        else:
            completed = "not_complete"
        return {
            "task_summary": " ".join(conversation_text.split())[:120],
            "completed_explanation": "keyword rule on assistant messages",
            "completed": completed,
            "speedup_50pct_explanation": "follows the completion verdict",
            "speedup_50pct": completed == "complete",
        }


class RemoteBackend(ClassifierBackend):
    """JSON-over-HTTP backend speaking the wire schemas verbatim.

    POSTs {"op": <kind>, "payload": {...}} to the endpoint and expects the
    answer object as the JSON response body. Credentials are read from the
    named environment variable and sent as a bearer token; they never
    appear in run manifests.
    """

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        models: Mapping[str, str] | None = None,
        temperatures: Mapping[str, float] | None = None,
        timeout: float = 60.0,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self._token = token
        self.models = dict(models or {})
        self.temperatures = dict(temperatures or {})
        self.timeout = timeout

    @property
    def identity(self) -> str:
        models = ",".join(f"{k}={v}" for k, v in sorted(self.models.items()))
        return f"remote:{self.endpoint}:{models}"

    def _post(self, op: str, payload: dict) -> dict:
        body = {
            "op": op,
            "payload": payload,
            "model": self.models.get(op),
            "temperature": self.temperatures.get(op),
        }
        headers = {}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        try:
            response = requests.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"backend unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"backend error {response.status_code}")
        if response.status_code != 200:
            raise BackendError(
                f"backend rejected {op}: {response.status_code} {response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise BackendError(f"backend returned non-JSON for {op}") from exc

    def generate(self, conversation_text: str) -> dict:
        return self._post("generate", {"convo": conversation_text})

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        answer = self._post("embed", {"texts": list(texts)})
        try:
            matrix = np.asarray(answer["embeddings"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError("embed answer missing 'embeddings' matrix") from exc
        if matrix.ndim != 2 or matrix.shape[0] != len(texts):
            raise BackendError(
                f"embed answer has shape {matrix.shape}, expected ({len(texts)}, d)"
            )
        return matrix

    def classify_user(
        self, conversation_text: str, summary: str, candidate_iwas: Sequence[str]
    ) -> dict:
        return self._post(
            "classify_user",
            {"convo": conversation_text, "summary": summary, "iwas": list(candidate_iwas)},
        )

    def classify_bot(
        self, conversation_text: str, summary: str, candidate_iwas: Sequence[str]
    ) -> dict:
        return self._post(
            "classify_bot",
            {"convo": conversation_text, "summary": summary, "iwas": list(candidate_iwas)},
        )

    def completion(self, conversation_text: str) -> dict:
        return self._post("completion", {"convo": conversation_text})
