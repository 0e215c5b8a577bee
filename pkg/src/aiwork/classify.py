"""Two-stage work-activity classification over a pluggable backend.

Stage one summarizes the user goal and the assistant action in the style
of a work-activity statement, with four rewordings of each. The catalog
of activity statements is then ranked per side by mean cosine similarity
between each statement's embedding and the five phrasings, split into
contiguous blocks of 20, and each block is classified in one request with
the stage-one summary included as a reference item (whose verdict is
discarded). A separate classifier judges task completion.

Every backend call gets exactly one retry on a malformed response; a
second failure produces a structured failure record (stage one,
completion) or marks the block failed while keeping the conversation's
partial results.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from aiwork.backends import (
    BOT_LEVEL_FIELD,
    COMPLETION_NAMES,
    SCOPE_LEVEL_NAMES,
    USER_LEVEL_FIELD,
    ClassifierBackend,
)
from aiwork.corpus import ConversationRecord
from aiwork.errors import BackendError, BackendUnavailable

log = logging.getLogger(__name__)

SIDES = ("user", "ai")
DEFAULT_BLOCK_SIZE = 20
DEFAULT_MAX_TRANSCRIPT_CHARS = 16000
TRUNCATION_MARKER = "[truncated]"


class ScopeLevel(enum.IntEnum):
    """Six-point impact scope scale, ordered."""

    none = 0
    minimal = 1
    limited = 2
    moderate = 3
    significant = 4
    complete = 5


class CompletionValue(enum.IntEnum):
    not_complete = 0
    partially_complete = 1
    complete = 2


@dataclass(frozen=True)
class StageOneSummary:
    summary: str
    user_iwa: str
    user_iwa_variations: tuple[str, str, str, str]
    bot_iwa: str
    bot_iwa_variations: tuple[str, str, str, str]
    is_homework: int
    is_homework_explanation: str

    def phrasings(self, side: str) -> list[str]:
        """Primary statement plus the four rewordings for one side."""
        if side == "user":
            return [self.user_iwa, *self.user_iwa_variations]
        if side == "ai":
            return [self.bot_iwa, *self.bot_iwa_variations]
        raise ValueError(f"unknown side {side!r}")

    def primary(self, side: str) -> str:
        return self.user_iwa if side == "user" else self.bot_iwa


@dataclass(frozen=True)
class IwaMatch:
    iwa_id: str
    side: str
    scope: ScopeLevel


@dataclass(frozen=True)
class CompletionLabel:
    value: CompletionValue
    speedup_50pct: bool


@dataclass(frozen=True)
class ConversationLabels:
    conversation_id: str
    user_matches: tuple[IwaMatch, ...]
    ai_matches: tuple[IwaMatch, ...]
    completion: CompletionLabel
    stage_one: StageOneSummary
    thumbs: str | None = None
    complete_blocks: bool = True

    def matches(self, side: str) -> tuple[IwaMatch, ...]:
        return self.user_matches if side == "user" else self.ai_matches


@dataclass(frozen=True)
class FailureRecord:
    conversation_id: str
    stage: str
    reason: str


class BackendFormatError(BackendError):
    """Backend answered, but the payload failed schema validation."""


class ConversationFailed(Exception):
    def __init__(self, conversation_id: str, stage: str, reason: str) -> None:
        super().__init__(f"{conversation_id}: {stage}: {reason}")
        self.record = FailureRecord(conversation_id, stage, reason)


@dataclass
class PipelineConfig:
    block_size: int = DEFAULT_BLOCK_SIZE
    max_transcript_chars: int = DEFAULT_MAX_TRANSCRIPT_CHARS
    parallelism: int = 1


class IwaCatalog:
    """Ordered activity statements plus cached backend embeddings."""

    def __init__(self, entries: Sequence[tuple[str, str]]) -> None:
        if not entries:
            raise ValueError("catalog must be nonempty")
        self.entries = list(entries)
        self.ids = [iwa_id for iwa_id, _ in self.entries]
        self.statements = [statement for _, statement in self.entries]
        self.statement_by_id = dict(self.entries)
        self.index_by_id = {iwa_id: i for i, (iwa_id, _) in enumerate(self.entries)}
        self._embedding_cache: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def embeddings(self, backend: ClassifierBackend) -> np.ndarray:
        key = backend.identity
        if key not in self._embedding_cache:
            self._embedding_cache[key] = backend.embed(self.statements)
        return self._embedding_cache[key]


def render_transcript(record: ConversationRecord, max_chars: int) -> str:
    """Role-prefixed transcript, truncated tail-first at the budget."""
    text = "\n".join(f"{role}: {body}" for role, body in record.messages)
    if max_chars > 0 and len(text) > max_chars:
        text = text[:max_chars] + "\n" + TRUNCATION_MARKER
    return text


# -- wire-format validation ---------------------------------------------------


def _require_str(obj: Mapping, key: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise BackendFormatError(f"field {key!r} missing or empty")
    return value


def parse_generation(obj) -> StageOneSummary:
    if not isinstance(obj, Mapping):
        raise BackendFormatError("generation answer is not an object")
    variations = {}
    for key in ("user_iwa_variations", "bot_iwa_variations"):
        raw = obj.get(key)
        if (
            not isinstance(raw, (list, tuple))
            or len(raw) != 4
            or not all(isinstance(v, str) and v for v in raw)
        ):
            raise BackendFormatError(f"field {key!r} must hold exactly 4 nonempty texts")
        variations[key] = tuple(raw)
    is_homework = obj.get("is_homework")
    if is_homework not in (0, 1):
        raise BackendFormatError("field 'is_homework' must be 0 or 1")
    return StageOneSummary(
        summary=_require_str(obj, "summary"),
        user_iwa=_require_str(obj, "user_iwa"),
        user_iwa_variations=variations["user_iwa_variations"],
        bot_iwa=_require_str(obj, "bot_iwa"),
        bot_iwa_variations=variations["bot_iwa_variations"],
        is_homework=int(is_homework),
        is_homework_explanation=_require_str(obj, "is_homework_explanation"),
    )


def parse_classification(
    obj, side: str, expected_statements: Sequence[str]
) -> list[tuple[bool, ScopeLevel]]:
    """Validate a block answer and return (is_match, level) per candidate,
    in candidate order. The answer must echo each candidate verbatim."""
    level_field = USER_LEVEL_FIELD if side == "user" else BOT_LEVEL_FIELD
    if not isinstance(obj, Mapping):
        raise BackendFormatError("classification answer is not an object")
    analyses = obj.get("iwa_analyses")
    if not isinstance(analyses, list) or len(analyses) != len(expected_statements):
        raise BackendFormatError(
            f"iwa_analyses must list {len(expected_statements)} items"
        )
    out: list[tuple[bool, ScopeLevel]] = []
    for expected, item in zip(expected_statements, analyses):
        if not isinstance(item, Mapping):
            raise BackendFormatError("iwa analysis is not an object")
        if item.get("iwa") != expected:
            raise BackendFormatError(
                f"answer item does not echo candidate {expected!r}"
            )
        is_match = item.get("is_match")
        if not isinstance(is_match, bool):
            raise BackendFormatError("is_match must be a boolean")
        level_name = item.get(level_field)
        if level_name not in SCOPE_LEVEL_NAMES:
            raise BackendFormatError(f"{level_field} has bad value {level_name!r}")
        out.append((is_match, ScopeLevel[level_name]))
    return out


def parse_completion(obj) -> CompletionLabel:
    if not isinstance(obj, Mapping):
        raise BackendFormatError("completion answer is not an object")
    completed = obj.get("completed")
    if completed not in COMPLETION_NAMES:
        raise BackendFormatError(f"completed has bad value {completed!r}")
    speedup = obj.get("speedup_50pct")
    if not isinstance(speedup, bool):
        raise BackendFormatError("speedup_50pct must be a boolean")
    _require_str(obj, "task_summary")
    return CompletionLabel(value=CompletionValue[completed], speedup_50pct=speedup)


def _call_with_retry(fn, *args):
    """One retry on a malformed or failed call; unavailability propagates."""
    try:
        return fn(*args)
    except BackendUnavailable:
        raise
    except BackendError as exc:
        log.debug("backend call failed, retrying once: %s", exc)
    return fn(*args)


# -- pipeline stages ----------------------------------------------------------


def stage_one(
    record: ConversationRecord,
    backend: ClassifierBackend,
    max_chars: int = DEFAULT_MAX_TRANSCRIPT_CHARS,
) -> StageOneSummary:
    if not record.messages:
        raise ConversationFailed(record.conversation_id, "stage_one", "empty conversation")
    transcript = render_transcript(record, max_chars)
    try:
        return _call_with_retry(lambda: parse_generation(backend.generate(transcript)))
    except BackendUnavailable:
        raise
    except BackendError as exc:
        raise ConversationFailed(record.conversation_id, "stage_one", str(exc)) from exc


def rank_candidates(
    summary: StageOneSummary,
    side: str,
    catalog: IwaCatalog,
    backend: ClassifierBackend,
) -> list[str]:
    """All catalog ids sorted by descending mean cosine similarity to the
    side's five phrasings; ties fall back to stable catalog order."""
    phrasings = summary.phrasings(side)
    phrase_vecs = backend.embed(phrasings)
    catalog_vecs = catalog.embeddings(backend)
    phrase_norms = np.linalg.norm(phrase_vecs, axis=1)
    catalog_norms = np.linalg.norm(catalog_vecs, axis=1)
    sims = phrase_vecs @ catalog_vecs.T
    denom = np.outer(phrase_norms, catalog_norms)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(denom > 0, sims / denom, 0.0)
    mean_sims = sims.mean(axis=0)
    order = sorted(range(len(catalog)), key=lambda i: (-mean_sims[i], i))
    return [catalog.ids[i] for i in order]


def _blocks(items: Sequence[str], block_size: int) -> list[list[str]]:
    return [list(items[i : i + block_size]) for i in range(0, len(items), block_size)]


def classify_blocks(
    record: ConversationRecord,
    summary: StageOneSummary,
    ranked_ids: Sequence[str],
    side: str,
    catalog: IwaCatalog,
    backend: ClassifierBackend,
    block_size: int = DEFAULT_BLOCK_SIZE,
    max_chars: int = DEFAULT_MAX_TRANSCRIPT_CHARS,
) -> tuple[list[IwaMatch], bool]:
    """Classify every ranked activity in contiguous blocks.

    Returns the retained matches (scope above none) and whether every
    block parsed; failed blocks leave the conversation with partial
    results.
    """
    if set(ranked_ids) != set(catalog.ids):
        raise ValueError("ranked list must cover the catalog exactly once")
    transcript = render_transcript(record, max_chars)
    classify = backend.classify_user if side == "user" else backend.classify_bot
    reference = summary.primary(side)
    matches: list[IwaMatch] = []
    complete = True
    for block in _blocks(list(ranked_ids), block_size):
        statements = [catalog.statement_by_id[iwa_id] for iwa_id in block]
        candidates = statements + [reference]
        try:
            verdicts = _call_with_retry(
                lambda c=candidates: parse_classification(
                    classify(transcript, summary.summary, c), side, c
                )
            )
        except BackendUnavailable:
            raise
        except BackendError as exc:
            log.warning(
                "conversation %s %s block failed after retry: %s",
                record.conversation_id,
                side,
                exc,
            )
            complete = False
            continue
        # Last verdict belongs to the reference summary item; discard it.
        for iwa_id, (is_match, level) in zip(block, verdicts[:-1]):
            if not is_match:
                continue
            if level is ScopeLevel.none:
                log.debug(
                    "conversation %s: %s match %s with level none dropped",
                    record.conversation_id,
                    side,
                    iwa_id,
                )
                continue
            matches.append(IwaMatch(iwa_id=iwa_id, side=side, scope=level))
    matches.sort(key=lambda m: m.iwa_id)
    return matches, complete


def classify_completion(
    record: ConversationRecord,
    backend: ClassifierBackend,
    max_chars: int = DEFAULT_MAX_TRANSCRIPT_CHARS,
) -> CompletionLabel:
    transcript = render_transcript(record, max_chars)
    try:
        return _call_with_retry(lambda: parse_completion(backend.completion(transcript)))
    except BackendUnavailable:
        raise
    except BackendError as exc:
        raise ConversationFailed(record.conversation_id, "completion", str(exc)) from exc


def classify_conversation(
    record: ConversationRecord,
    catalog: IwaCatalog,
    backend: ClassifierBackend,
    config: PipelineConfig | None = None,
) -> ConversationLabels:
    config = config or PipelineConfig()
    summary = stage_one(record, backend, config.max_transcript_chars)
    complete = True
    per_side: dict[str, tuple[IwaMatch, ...]] = {}
    for side in SIDES:
        ranked = rank_candidates(summary, side, catalog, backend)
        try:
            matches, side_complete = classify_blocks(
                record,
                summary,
                ranked,
                side,
                catalog,
                backend,
                config.block_size,
                config.max_transcript_chars,
            )
        except BackendUnavailable:
            raise
        except BackendError as exc:
            raise ConversationFailed(record.conversation_id, f"classify_{side}", str(exc))
        per_side[side] = tuple(matches)
        complete = complete and side_complete
    completion = classify_completion(record, backend, config.max_transcript_chars)
    return ConversationLabels(
        conversation_id=record.conversation_id,
        user_matches=per_side["user"],
        ai_matches=per_side["ai"],
        completion=completion,
        stage_one=summary,
        thumbs=record.thumbs,
        complete_blocks=complete,
    )


def run_pipeline(
    records: Iterable[ConversationRecord],
    catalog: IwaCatalog,
    backend: ClassifierBackend,
    config: PipelineConfig | None = None,
    skip_ids: frozenset[str] | set[str] = frozenset(),
) -> Iterator[ConversationLabels | FailureRecord]:
    """Label conversations in input order.

    Yields a ConversationLabels per successful conversation and a
    FailureRecord per failed one, always in input order regardless of
    worker completion order. BackendUnavailable propagates so the caller
    can checkpoint and resume.
    """
    config = config or PipelineConfig()

    def work(record: ConversationRecord):
        try:
            return classify_conversation(record, catalog, backend, config)
        except ConversationFailed as exc:
            return exc.record

    todo = (r for r in records if r.conversation_id not in skip_ids)
    if config.parallelism <= 1:
        for record in todo:
            yield work(record)
        return
    # Bounded in-flight window, drained in submission order.
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        window: deque = deque()
        for record in todo:
            window.append(pool.submit(work, record))
            while len(window) >= config.parallelism * 2:
                yield window.popleft().result()
        while window:
            yield window.popleft().result()


# -- persistence --------------------------------------------------------------


def labels_to_json(labels: ConversationLabels) -> dict:
    return {
        "conversation_id": labels.conversation_id,
        "user_matches": [[m.iwa_id, m.scope.name] for m in labels.user_matches],
        "ai_matches": [[m.iwa_id, m.scope.name] for m in labels.ai_matches],
        "completion": {
            "value": labels.completion.value.name,
            "speedup_50pct": labels.completion.speedup_50pct,
        },
        "stage_one": {
            "summary": labels.stage_one.summary,
            "user_iwa": labels.stage_one.user_iwa,
            "user_iwa_variations": list(labels.stage_one.user_iwa_variations),
            "bot_iwa": labels.stage_one.bot_iwa,
            "bot_iwa_variations": list(labels.stage_one.bot_iwa_variations),
            "is_homework": labels.stage_one.is_homework,
            "is_homework_explanation": labels.stage_one.is_homework_explanation,
        },
        "thumbs": labels.thumbs,
        "complete_blocks": labels.complete_blocks,
    }


def labels_from_json(obj: dict) -> ConversationLabels:
    stage = obj["stage_one"]
    return ConversationLabels(
        conversation_id=obj["conversation_id"],
        user_matches=tuple(
            IwaMatch(iwa_id, "user", ScopeLevel[scope])
            for iwa_id, scope in obj["user_matches"]
        ),
        ai_matches=tuple(
            IwaMatch(iwa_id, "ai", ScopeLevel[scope])
            for iwa_id, scope in obj["ai_matches"]
        ),
        completion=CompletionLabel(
            value=CompletionValue[obj["completion"]["value"]],
            speedup_50pct=obj["completion"]["speedup_50pct"],
        ),
        stage_one=StageOneSummary(
            summary=stage["summary"],
            user_iwa=stage["user_iwa"],
            user_iwa_variations=tuple(stage["user_iwa_variations"]),
            bot_iwa=stage["bot_iwa"],
            bot_iwa_variations=tuple(stage["bot_iwa_variations"]),
            is_homework=stage["is_homework"],
            is_homework_explanation=stage["is_homework_explanation"],
        ),
        thumbs=obj.get("thumbs"),
        complete_blocks=obj.get("complete_blocks", True),
    )


def write_labels(path, labels_iter: Iterable[ConversationLabels]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for labels in labels_iter:
            fh.write(json.dumps(labels_to_json(labels), sort_keys=True))
            fh.write("\n")
            count += 1
    return count


def read_labels(path) -> list[ConversationLabels]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(labels_from_json(json.loads(line)))
    return out
