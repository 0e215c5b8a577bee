"""Conversation corpus ingestion and sampling.

The corpus is a line-delimited JSON file, one conversation per line:

    {"conversation_id": "...",
     "messages": [{"role": "user"|"assistant", "text": "..."}, ...],
     "thumbs": "up"|"down"}          # optional; required for kind="thumbs"

Transcript text is treated as already privacy-scrubbed. Malformed lines
are counted and skipped; more than 1% malformed is fatal.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from aiwork.errors import CorpusError

log = logging.getLogger(__name__)

ROLES = ("user", "assistant")
THUMBS = ("up", "down")
MALFORMED_FATAL_FRACTION = 0.01


@dataclass(frozen=True)
class ConversationRecord:
    conversation_id: str
    messages: tuple[tuple[str, str], ...]
    thumbs: str | None = None
    locale: str | None = None

    def side_text(self, role: str) -> str:
        return "\n".join(text for r, text in self.messages if r == role)


@dataclass(frozen=True)
class CorpusHandle:
    source_path: Path
    count: int
    kind: str  # "uniform" | "thumbs"
    malformed: int = 0

    def __iter__(self) -> Iterator[ConversationRecord]:
        return iter_corpus(self.source_path)


def _parse_record(obj: dict) -> ConversationRecord:
    conversation_id = obj["conversation_id"]
    if not isinstance(conversation_id, str) or not conversation_id:
        raise ValueError("conversation_id must be a nonempty string")
    raw_messages = obj["messages"]
    if not isinstance(raw_messages, list) or not raw_messages:
        raise ValueError("messages must be a nonempty list")
    messages = []
    for msg in raw_messages:
        role = msg["role"]
        if role not in ROLES:
            raise ValueError(f"bad role {role!r}")
        text = msg["text"]
        if not isinstance(text, str):
            raise ValueError("message text must be a string")
        messages.append((role, text))
    thumbs = obj.get("thumbs")
    if isinstance(thumbs, list):
        # Multi-reaction conversations collapse to the last reaction.
        if len(thumbs) > 1:
            log.debug(
                "conversation %s has %d reactions; keeping the last",
                conversation_id,
                len(thumbs),
            )
        thumbs = thumbs[-1] if thumbs else None
    if thumbs is not None and thumbs not in THUMBS:
        raise ValueError(f"bad thumbs value {thumbs!r}")
    locale = obj.get("locale")
    if locale is not None and not isinstance(locale, str):
        raise ValueError("locale must be a string")
    return ConversationRecord(
        conversation_id=conversation_id,
        messages=tuple(messages),
        thumbs=thumbs,
        locale=locale,
    )


def iter_corpus(path: str | Path) -> Iterator[ConversationRecord]:
    """Stream well-formed records from a corpus file, skipping bad lines."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                yield _parse_record(json.loads(line))
            except (ValueError, KeyError, TypeError):
                continue


def load_corpus(path: str | Path, kind: str = "uniform") -> CorpusHandle:
    """Validate a corpus file and return a streaming handle.

    kind="thumbs" additionally requires every record to carry a thumbs
    reaction (the feedback corpus is defined by having one).
    """
    path = Path(path)
    if kind not in ("uniform", "thumbs"):
        raise CorpusError(f"unknown corpus kind: {kind!r}")
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    count = 0
    malformed = 0
    seen_ids: set[str] = set()
    errors: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = _parse_record(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                malformed += 1
                if len(errors) < 10:
                    errors.append(f"line {lineno}: {exc}")
                continue
            if record.conversation_id in seen_ids:
                malformed += 1
                if len(errors) < 10:
                    errors.append(
                        f"line {lineno}: duplicate conversation_id "
                        f"{record.conversation_id}"
                    )
                continue
            seen_ids.add(record.conversation_id)
            if kind == "thumbs" and record.thumbs is None:
                raise CorpusError(
                    f"{path.name} line {lineno}: kind=thumbs but conversation "
                    f"{record.conversation_id} has no thumbs reaction"
                )
            count += 1
    total = count + malformed
    if total and malformed / total > MALFORMED_FATAL_FRACTION:
        raise CorpusError(
            f"{path.name}: {malformed}/{total} lines malformed (> "
            f"{MALFORMED_FATAL_FRACTION:.0%}); first errors: {errors}"
        )
    if malformed:
        log.warning("%s: skipped %d malformed lines", path.name, malformed)
    return CorpusHandle(source_path=path, count=count, kind=kind, malformed=malformed)


def sample(handle: CorpusHandle, n: int, seed: int) -> list[ConversationRecord]:
    """Uniform sample without replacement, reproducible from seed.

    n == handle.count returns a seeded permutation of the full corpus.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > handle.count:
        raise ValueError(f"cannot sample {n} of {handle.count} conversations")
    if n == 0:
        return []
    rng = np.random.default_rng(seed)
    chosen = rng.choice(handle.count, size=n, replace=False)
    wanted = {int(i): pos for pos, i in enumerate(chosen)}
    picked: list[ConversationRecord | None] = [None] * n
    for idx, record in enumerate(iter_corpus(handle.source_path)):
        pos = wanted.get(idx)
        if pos is not None:
            picked[pos] = record
    return [r for r in picked if r is not None]
