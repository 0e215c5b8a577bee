"""Per-activity aggregates over conversation labels.

Activity shares split each conversation equally among its matched
activities (per side) and normalize so shares sum to one over activities;
conversations with zero matches contribute to neither numerator nor
denominator. Completion and scope rates are fractions of matched
conversations; feedback shares are thumbs-up fractions with bootstrap
confidence intervals.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import pandas as pd

from aiwork.classify import CompletionValue, ConversationLabels, ScopeLevel
from aiwork.stats import bootstrap_share_ci, weighted_pearson
from aiwork.taxonomy import TaxonomyStore

log = logging.getLogger(__name__)

COMPLETION_POLICIES = ("strict", "half-credit")


@dataclass
class IwaStats:
    iwa_id: str
    side: str
    activity_share: float = 0.0
    match_count: int = 0
    completion_rate: float | None = None
    scope_rate: float | None = None
    positive_feedback_share: float | None = None
    feedback_ci: tuple[float, float] | None = None
    # Raw tallies kept so rollups combine exactly.
    match_mass: float = 0.0
    completion_complete: int = 0
    completion_partial: int = 0
    scope_at_or_above: int = 0
    thumbs_up: int = 0
    thumbs_total: int = 0
    feedback_outcomes: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class AsymmetryRecord:
    conversation_id: str
    jaccard: float
    disjoint: bool


@dataclass(frozen=True)
class AsymmetrySummary:
    n: int
    disjoint_fraction: float
    jaccard_below_half_fraction: float


def _completion_credit(value: CompletionValue, policy: str) -> float:
    if policy == "strict":
        return 1.0 if value is CompletionValue.complete else 0.0
    if policy == "half-credit":
        if value is CompletionValue.complete:
            return 1.0
        if value is CompletionValue.partially_complete:
            return 0.5
        return 0.0
    raise ValueError(f"unknown completion policy {policy!r}")


def activity_shares(
    labels: list[ConversationLabels], side: str
) -> tuple[dict[str, float], int]:
    """Activity share per matched IWA plus the matched-conversation count.

    An empty labeled set (or one with zero matches) returns ({}, 0).
    """
    mass: dict[str, float] = {}
    matched = 0
    for conv in labels:
        ids = sorted({m.iwa_id for m in conv.matches(side)})
        if not ids:
            continue
        matched += 1
        per = 1.0 / len(ids)
        for iwa_id in ids:
            mass[iwa_id] = mass.get(iwa_id, 0.0) + per
    if matched == 0:
        return {}, 0
    return {i: mass[i] / matched for i in sorted(mass)}, matched


def completion_rate(
    labels: list[ConversationLabels], side: str, iwa_id: str, policy: str = "strict"
) -> float | None:
    """Completion rate among conversations matched to the IWA; None when
    no conversation matches (absent, not zero)."""
    if policy not in COMPLETION_POLICIES:
        raise ValueError(f"unknown completion policy {policy!r}")
    total = 0
    credit = 0.0
    for conv in labels:
        if any(m.iwa_id == iwa_id for m in conv.matches(side)):
            total += 1
            credit += _completion_credit(conv.completion.value, policy)
    if total == 0:
        return None
    return credit / total


def scope_rate(
    labels: list[ConversationLabels],
    side: str,
    iwa_id: str,
    cutoff: ScopeLevel = ScopeLevel.moderate,
) -> float | None:
    """Fraction of matched conversations at or above the scope cutoff."""
    total = 0
    hits = 0
    for conv in labels:
        for m in conv.matches(side):
            if m.iwa_id == iwa_id:
                total += 1
                if m.scope >= cutoff:
                    hits += 1
                break
    if total == 0:
        return None
    return hits / total


@dataclass(frozen=True)
class FeedbackShare:
    share: float
    ci_low: float
    ci_high: float
    n: int


def _feedback_seed(base_seed: int, iwa_id: str, side: str) -> int:
    digest = hashlib.blake2b(f"{base_seed}|{side}|{iwa_id}".encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def feedback_share(
    labels: list[ConversationLabels],
    side: str,
    iwa_id: str,
    n_resamples: int = 1000,
    seed: int = 0,
) -> FeedbackShare | None:
    """Thumbs-up share among matched conversations with feedback, with a
    bootstrap 95% confidence interval. None when no feedback exists."""
    outcomes = []
    for conv in labels:
        if conv.thumbs is None:
            continue
        if any(m.iwa_id == iwa_id for m in conv.matches(side)):
            outcomes.append(1 if conv.thumbs == "up" else 0)
    if not outcomes:
        return None
    share = sum(outcomes) / len(outcomes)
    lo, hi = bootstrap_share_ci(
        outcomes, n_resamples=n_resamples, seed=_feedback_seed(seed, iwa_id, side)
    )
    return FeedbackShare(share=share, ci_low=lo, ci_high=hi, n=len(outcomes))


def compute_iwa_stats(
    labels: list[ConversationLabels],
    side: str,
    completion_policy: str = "strict",
    scope_cutoff: ScopeLevel = ScopeLevel.moderate,
    bootstrap_resamples: int = 1000,
    bootstrap_seed: int = 0,
) -> dict[str, IwaStats]:
    """Single-pass bulk aggregation; equals the per-IWA operations exactly.

    The fold is order-insensitive: accumulators commute and the final
    table is keyed and emitted in sorted IWA order.
    """
    if completion_policy not in COMPLETION_POLICIES:
        raise ValueError(f"unknown completion policy {completion_policy!r}")
    stats: dict[str, IwaStats] = {}
    matched_conversations = 0
    for conv in labels:
        by_id = {}
        for m in conv.matches(side):
            by_id[m.iwa_id] = m
        if not by_id:
            continue
        matched_conversations += 1
        per = 1.0 / len(by_id)
        for iwa_id in sorted(by_id):
            entry = stats.get(iwa_id)
            if entry is None:
                entry = stats[iwa_id] = IwaStats(iwa_id=iwa_id, side=side)
            entry.match_count += 1
            entry.match_mass += per
            if conv.completion.value is CompletionValue.complete:
                entry.completion_complete += 1
            elif conv.completion.value is CompletionValue.partially_complete:
                entry.completion_partial += 1
            if by_id[iwa_id].scope >= scope_cutoff:
                entry.scope_at_or_above += 1
            if conv.thumbs is not None:
                entry.thumbs_total += 1
                entry.thumbs_up += 1 if conv.thumbs == "up" else 0
                entry.feedback_outcomes.append(1 if conv.thumbs == "up" else 0)
    for iwa_id in sorted(stats):
        entry = stats[iwa_id]
        entry.activity_share = entry.match_mass / matched_conversations
        credit = float(entry.completion_complete)
        if completion_policy == "half-credit":
            credit += 0.5 * entry.completion_partial
        entry.completion_rate = credit / entry.match_count
        entry.scope_rate = entry.scope_at_or_above / entry.match_count
        if entry.thumbs_total:
            entry.positive_feedback_share = entry.thumbs_up / entry.thumbs_total
            entry.feedback_ci = bootstrap_share_ci(
                entry.feedback_outcomes,
                n_resamples=bootstrap_resamples,
                seed=_feedback_seed(bootstrap_seed, iwa_id, side),
            )
    return dict(sorted(stats.items()))


def gwa_rollup(
    stats: dict[str, IwaStats], store: TaxonomyStore, side: str
) -> dict[str, IwaStats]:
    """GWA-level aggregates: the match-weighted combination of child IWAs.

    Shares and tallies sum; rates recompute from the pooled tallies, so a
    conversation matching two children counts twice (match-weighted).
    """
    rolled: dict[str, IwaStats] = {}
    for iwa_id in sorted(stats):
        entry = stats[iwa_id]
        gwa_id = store.rollup(iwa_id)
        agg = rolled.get(gwa_id)
        if agg is None:
            agg = rolled[gwa_id] = IwaStats(iwa_id=gwa_id, side=side)
        agg.activity_share += entry.activity_share
        agg.match_count += entry.match_count
        agg.match_mass += entry.match_mass
        agg.completion_complete += entry.completion_complete
        agg.completion_partial += entry.completion_partial
        agg.scope_at_or_above += entry.scope_at_or_above
        agg.thumbs_up += entry.thumbs_up
        agg.thumbs_total += entry.thumbs_total
    for agg in rolled.values():
        if agg.match_count:
            agg.completion_rate = agg.completion_complete / agg.match_count
            agg.scope_rate = agg.scope_at_or_above / agg.match_count
        if agg.thumbs_total:
            agg.positive_feedback_share = agg.thumbs_up / agg.thumbs_total
    return dict(sorted(rolled.items()))


def asymmetry(
    labels: list[ConversationLabels],
) -> tuple[list[AsymmetryRecord], AsymmetrySummary]:
    """Per-conversation Jaccard between user-goal and AI-action activity
    sets. Conversations with both sides empty are excluded from the
    summary denominators."""
    records: list[AsymmetryRecord] = []
    disjoint_count = 0
    below_half = 0
    for conv in labels:
        user_ids = {m.iwa_id for m in conv.user_matches}
        ai_ids = {m.iwa_id for m in conv.ai_matches}
        if not user_ids and not ai_ids:
            continue
        union = user_ids | ai_ids
        jaccard = len(user_ids & ai_ids) / len(union)
        disjoint = jaccard == 0.0
        records.append(
            AsymmetryRecord(
                conversation_id=conv.conversation_id, jaccard=jaccard, disjoint=disjoint
            )
        )
        disjoint_count += disjoint
        below_half += jaccard < 0.5
    n = len(records)
    summary = AsymmetrySummary(
        n=n,
        disjoint_fraction=disjoint_count / n if n else 0.0,
        jaccard_below_half_fraction=below_half / n if n else 0.0,
    )
    return records, summary


def side_ratio(
    iwa_id: str,
    user_shares: dict[str, float],
    ai_shares: dict[str, float],
    floor: float = 0.0005,
) -> float | None:
    """user/AI activity-share ratio; None when the IWA sits below the
    floor on both sides or either share is missing."""
    f_user = user_shares.get(iwa_id)
    f_ai = ai_shares.get(iwa_id)
    if f_user is None or f_ai is None:
        return None
    if f_user < floor and f_ai < floor:
        return None
    if f_ai == 0.0:
        return float("inf")
    return f_user / f_ai


STATS_COLUMNS = [
    "iwa_id",
    "side",
    "activity_share",
    "match_count",
    "completion_rate",
    "scope_rate",
    "positive_feedback_share",
    "feedback_ci_low",
    "feedback_ci_high",
    "match_mass",
    "completion_complete",
    "completion_partial",
    "scope_at_or_above",
    "thumbs_up",
    "thumbs_total",
]


def stats_to_table(stats: dict[str, IwaStats]) -> pd.DataFrame:
    rows = []
    for iwa_id in sorted(stats):
        e = stats[iwa_id]
        ci = e.feedback_ci or (None, None)
        rows.append(
            {
                "iwa_id": e.iwa_id,
                "side": e.side,
                "activity_share": e.activity_share,
                "match_count": e.match_count,
                "completion_rate": e.completion_rate,
                "scope_rate": e.scope_rate,
                "positive_feedback_share": e.positive_feedback_share,
                "feedback_ci_low": ci[0],
                "feedback_ci_high": ci[1],
                "match_mass": e.match_mass,
                "completion_complete": e.completion_complete,
                "completion_partial": e.completion_partial,
                "scope_at_or_above": e.scope_at_or_above,
                "thumbs_up": e.thumbs_up,
                "thumbs_total": e.thumbs_total,
            }
        )
    return pd.DataFrame(rows, columns=STATS_COLUMNS)


def stats_from_table(df: pd.DataFrame) -> dict[str, IwaStats]:
    out: dict[str, IwaStats] = {}
    for row in df.itertuples(index=False):
        ci = None
        if not _isnan(row.feedback_ci_low) and not _isnan(row.feedback_ci_high):
            ci = (float(row.feedback_ci_low), float(row.feedback_ci_high))
        out[str(row.iwa_id)] = IwaStats(
            iwa_id=str(row.iwa_id),
            side=str(row.side),
            activity_share=float(row.activity_share),
            match_count=int(row.match_count),
            completion_rate=_optional_float(row.completion_rate),
            scope_rate=_optional_float(row.scope_rate),
            positive_feedback_share=_optional_float(row.positive_feedback_share),
            feedback_ci=ci,
            match_mass=float(row.match_mass),
            completion_complete=int(row.completion_complete),
            completion_partial=int(row.completion_partial),
            scope_at_or_above=int(row.scope_at_or_above),
            thumbs_up=int(row.thumbs_up),
            thumbs_total=int(row.thumbs_total),
        )
    return dict(sorted(out.items()))


def _isnan(value) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))


def _optional_float(value) -> float | None:
    return None if _isnan(value) else float(value)


def thumbs_completion_correlation(labels: list[ConversationLabels]) -> dict[str, float]:
    """Conversation-level correlation between thumbs (up=1, down=0) and
    completion, under both completion codings."""
    thumbs = []
    strict = []
    half = []
    for conv in labels:
        if conv.thumbs is None:
            continue
        thumbs.append(1.0 if conv.thumbs == "up" else 0.0)
        strict.append(_completion_credit(conv.completion.value, "strict"))
        half.append(_completion_credit(conv.completion.value, "half-credit"))
    if len(thumbs) < 2:
        return {}
    return {
        "strict": weighted_pearson(thumbs, strict),
        "half-credit": weighted_pearson(thumbs, half),
    }
