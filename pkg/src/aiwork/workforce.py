"""Task weights, per-occupation work-activity weights, and workforce shares.

A task's weight is 2^importance * relevance. Weights propagate to the
intermediate work activities the task maps to (via its DWAs) and are
normalized to sum to one within each occupation. Workforce shares convert
survey frequency categories into annual counts, scale by employment, and
normalize over all activities.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import pandas as pd

from aiwork.errors import DataError
from aiwork.taxonomy import (
    FREQUENCY_LABELS,
    OccupationRecord,
    TaskRating,
    TaxonomyStore,
)

log = logging.getLogger(__name__)

# Annual occurrence counts per frequency category, assuming 260 workdays
# per year and 8-hour workdays.
FREQUENCY_ANNUAL_COUNTS: dict[str, float] = {
    "Yearly or less": 1.0,
    "More than yearly": 4.0,
    "More than monthly": 24.0,
    "More than weekly": 104.0,
    "Daily": 260.0,
    "Several times daily": 780.0,
    "Hourly or more": 2080.0,
}
assert set(FREQUENCY_ANNUAL_COUNTS) == set(FREQUENCY_LABELS)


@dataclass(frozen=True)
class OccupationIwaWeight:
    soc_code: str
    iwa_id: str
    weight: float


@dataclass(frozen=True)
class WorkforceShare:
    iwa_id: str
    annual_count: float
    share: float


class EmptyWeightsError(DataError):
    """Every task of the occupation maps to zero work activities."""


def task_weight(rating: TaskRating) -> float:
    """2^importance * relevance for a rated task."""
    if rating.importance is None or rating.relevance is None:
        raise ValueError("task_weight requires importance and relevance")
    return (2.0 ** rating.importance) * rating.relevance


def occupation_iwa_weights(
    occupation: OccupationRecord, store: TaxonomyStore
) -> list[OccupationIwaWeight]:
    """Normalized per-IWA weights for one occupation.

    Rated tasks carry 2^importance * relevance; if no task in the
    occupation is rated, every task carries weight 1; tasks lacking
    ratings are ignored when any rated task exists. Each task's full
    weight accrues to every IWA it maps to, and tasks mapping to the same
    IWA sum.
    """
    if not occupation.tasks:
        raise EmptyWeightsError(f"occupation {occupation.soc_code} has no tasks")
    any_rated = any(t.rating is not None and t.rating.is_rated for t in occupation.tasks)
    mass: dict[str, float] = {}
    for task in sorted(occupation.tasks, key=lambda t: t.task_id):
        if any_rated:
            if task.rating is None or not task.rating.is_rated:
                continue
            weight = task_weight(task.rating)
        else:
            weight = 1.0
        for iwa_id in sorted(store.task_iwas(task)):
            mass[iwa_id] = mass.get(iwa_id, 0.0) + weight
    total = sum(mass[i] for i in sorted(mass))
    if total <= 0.0:
        raise EmptyWeightsError(
            f"occupation {occupation.soc_code}: no weighted task maps to any IWA"
        )
    return [
        OccupationIwaWeight(occupation.soc_code, iwa_id, mass[iwa_id] / total)
        for iwa_id in sorted(mass)
    ]


def all_occupation_weights(
    store: TaxonomyStore,
) -> tuple[dict[str, dict[str, float]], list[str]]:
    """Weights for every merged occupation, plus the SOC codes excluded
    because no task mapped to any IWA."""
    weights: dict[str, dict[str, float]] = {}
    excluded: list[str] = []
    for soc in sorted(store.occupations):
        try:
            rows = occupation_iwa_weights(store.occupations[soc], store)
        except EmptyWeightsError:
            excluded.append(soc)
            continue
        weights[soc] = {r.iwa_id: r.weight for r in rows}
    if excluded:
        log.info("weights: %d occupations excluded (no IWA-mapped tasks)", len(excluded))
    return weights, excluded


def uniform_task_weights(
    store: TaxonomyStore,
) -> tuple[dict[str, dict[str, float]], list[str]]:
    """Weights with every task forced to weight 1 (external-comparison mode)."""
    weights: dict[str, dict[str, float]] = {}
    excluded: list[str] = []
    for soc in sorted(store.occupations):
        occ = store.occupations[soc]
        mass: dict[str, float] = {}
        for task in sorted(occ.tasks, key=lambda t: t.task_id):
            for iwa_id in sorted(store.task_iwas(task)):
                mass[iwa_id] = mass.get(iwa_id, 0.0) + 1.0
        total = sum(mass[i] for i in sorted(mass))
        if total <= 0.0:
            excluded.append(soc)
            continue
        weights[soc] = {i: mass[i] / total for i in sorted(mass)}
    return weights, excluded


def weights_table(weights: dict[str, dict[str, float]]) -> pd.DataFrame:
    rows = [
        {"soc_code": soc, "iwa_id": iwa_id, "weight": w}
        for soc in sorted(weights)
        for iwa_id, w in sorted(weights[soc].items())
    ]
    return pd.DataFrame(rows, columns=["soc_code", "iwa_id", "weight"])


def weights_from_table(df: pd.DataFrame) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for row in df.itertuples(index=False):
        out.setdefault(str(row.soc_code), {})[str(row.iwa_id)] = float(row.weight)
    return {soc: dict(sorted(m.items())) for soc, m in sorted(out.items())}


def annual_task_frequency(rating: TaskRating | None) -> float | None:
    """Annual occurrences of a task per worker: relevance-scaled weighted
    mean of the category counts. None when frequency or relevance data is
    missing (the task is excluded from workforce counts)."""
    if rating is None or rating.frequency_shares is None:
        return None
    if rating.relevance is None:
        log.debug("task has frequency data but no relevance; excluded")
        return None
    total = 0.0
    for label, share in rating.frequency_shares:
        total += share * FREQUENCY_ANNUAL_COUNTS[label]
    return rating.relevance * total


def workforce_shares(
    store: TaxonomyStore,
) -> tuple[list[WorkforceShare], list[WorkforceShare]]:
    """Annualized workforce counts and shares per IWA, plus the GWA rollup.

    Per IWA: sum over occupations of (sum over that occupation's tasks
    mapping to the IWA of annual_task_frequency) * employment. Occupations
    without OEWS employment contribute nothing.
    """
    if not store.merged:
        raise DataError("workforce_shares requires a SOC-merged store")
    counts: dict[str, float] = {}
    for soc in sorted(store.occupations):
        occ = store.occupations[soc]
        if occ.employment is None:
            continue
        for task in sorted(occ.tasks, key=lambda t: t.task_id):
            freq = annual_task_frequency(task.rating)
            if freq is None:
                continue
            for iwa_id in sorted(store.task_iwas(task)):
                counts[iwa_id] = counts.get(iwa_id, 0.0) + freq * occ.employment
    total = sum(counts[i] for i in sorted(counts))
    iwa_shares = [
        WorkforceShare(iwa_id, counts[iwa_id], counts[iwa_id] / total if total else 0.0)
        for iwa_id in sorted(counts)
    ]
    gwa_counts: dict[str, float] = {}
    for row in iwa_shares:
        gwa_id = store.rollup(row.iwa_id)
        gwa_counts[gwa_id] = gwa_counts.get(gwa_id, 0.0) + row.annual_count
    gwa_shares = [
        WorkforceShare(gwa_id, gwa_counts[gwa_id], gwa_counts[gwa_id] / total if total else 0.0)
        for gwa_id in sorted(gwa_counts)
    ]
    return iwa_shares, gwa_shares


def shares_table(shares: list[WorkforceShare]) -> pd.DataFrame:
    rows = [
        {"iwa_id": s.iwa_id, "annual_count": s.annual_count, "share": s.share}
        for s in shares
    ]
    return pd.DataFrame(rows, columns=["iwa_id", "annual_count", "share"])
