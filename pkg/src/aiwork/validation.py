"""Agreement between pipeline labels and human annotation files.

Annotation candidates for each conversation and side are the 10
top-ranked activities plus 10 sampled uniformly from ranks 11-100,
shuffled with a recorded seed so every rater sees the same set. Agreement
is Cohen's kappa over the pooled binary match decisions (one 2x2 table
per rater pair), with the per-conversation kappa distribution kept as a
diagnostic.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from aiwork.errors import DataError

CANDIDATES_PER_SET = 20
TOP_RANKED = 10
SAMPLE_POOL = 90  # ranks 11..100


@dataclass(frozen=True)
class AnnotationSet:
    conversation_id: str
    side: str
    candidates: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        if len(self.candidates) != len(set(self.candidates)):
            raise ValueError("annotation candidates must be distinct")


@dataclass(frozen=True)
class KappaReport:
    pair: tuple[str, str]
    kappa: float | None
    n_decisions: int
    observed_agreement: float
    expected_agreement: float


def _set_rng(seed: int, conversation_id: str, side: str) -> np.random.Generator:
    digest = hashlib.blake2b(
        f"{seed}|{conversation_id}|{side}".encode("utf-8"), digest_size=8
    )
    return np.random.default_rng(int.from_bytes(digest.digest(), "big"))


def build_annotation_sets(
    rankings: Mapping[str, Mapping[str, Sequence[str]]], seed: int
) -> list[AnnotationSet]:
    """Candidate sets from per-conversation, per-side activity rankings.

    Deterministic given the seed; identical candidates across raters by
    construction (the sampling happens once, here).
    """
    sets: list[AnnotationSet] = []
    for conversation_id in sorted(rankings):
        for side in sorted(rankings[conversation_id]):
            ranked = list(rankings[conversation_id][side])
            if len(ranked) < TOP_RANKED + SAMPLE_POOL:
                raise DataError(
                    f"{conversation_id}/{side}: ranking has {len(ranked)} entries, "
                    f"need at least {TOP_RANKED + SAMPLE_POOL}"
                )
            rng = _set_rng(seed, conversation_id, side)
            top = ranked[:TOP_RANKED]
            pool = ranked[TOP_RANKED : TOP_RANKED + SAMPLE_POOL]
            sampled = [pool[i] for i in rng.choice(len(pool), TOP_RANKED, replace=False)]
            candidates = top + sampled
            order = rng.permutation(len(candidates))
            sets.append(
                AnnotationSet(
                    conversation_id=conversation_id,
                    side=side,
                    candidates=tuple(candidates[i] for i in order),
                    seed=seed,
                )
            )
    return sets


def kappa_from_counts(
    both_yes: int, a_only: int, b_only: int, both_no: int, pair=("a", "b")
) -> KappaReport:
    """Cohen's kappa from a pooled 2x2 decision table."""
    n = both_yes + a_only + b_only + both_no
    if n == 0:
        raise ValueError("empty decision table")
    p_o = (both_yes + both_no) / n
    a_yes = (both_yes + a_only) / n
    b_yes = (both_yes + b_only) / n
    p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes)
    kappa = None if p_e == 1.0 else (p_o - p_e) / (1.0 - p_e)
    return KappaReport(
        pair=tuple(pair),
        kappa=kappa,
        n_decisions=n,
        observed_agreement=p_o,
        expected_agreement=p_e,
    )


def _pooled_counts(
    sets: Sequence[AnnotationSet],
    labels_a: Mapping[tuple[str, str], set[str]],
    labels_b: Mapping[tuple[str, str], set[str]],
) -> tuple[int, int, int, int]:
    both_yes = a_only = b_only = both_no = 0
    for s in sets:
        key = (s.conversation_id, s.side)
        picked_a = labels_a.get(key, set())
        picked_b = labels_b.get(key, set())
        for candidate in s.candidates:
            in_a = candidate in picked_a
            in_b = candidate in picked_b
            if in_a and in_b:
                both_yes += 1
            elif in_a:
                a_only += 1
            elif in_b:
                b_only += 1
            else:
                both_no += 1
    return both_yes, a_only, b_only, both_no


def cohens_kappa(
    sets: Sequence[AnnotationSet],
    labels_a: Mapping[tuple[str, str], set[str]],
    labels_b: Mapping[tuple[str, str], set[str]],
    pair=("a", "b"),
) -> KappaReport:
    """Kappa over the pooled binary decisions of two raters.

    Each rater's labels map (conversation_id, side) to the set of
    candidate activities marked as matches; only sampled candidates are
    scored. Identical constant labelings make chance agreement 1 and the
    statistic undefined (kappa=None).
    """
    counts = _pooled_counts(sets, labels_a, labels_b)
    return kappa_from_counts(*counts, pair=pair)


def per_conversation_kappas(
    sets: Sequence[AnnotationSet],
    labels_a: Mapping[tuple[str, str], set[str]],
    labels_b: Mapping[tuple[str, str], set[str]],
) -> list[tuple[str, str, float | None]]:
    """Kappa per (conversation, side); None where undefined."""
    out = []
    for s in sets:
        report = cohens_kappa([s], labels_a, labels_b)
        out.append((s.conversation_id, s.side, report.kappa))
    return out


@dataclass(frozen=True)
class PipelineAgreement:
    rater: str
    report: KappaReport
    accuracy: float


def pipeline_agreement(
    sets: Sequence[AnnotationSet],
    rater_labels: Mapping[str, Mapping[tuple[str, str], set[str]]],
    pipeline_labels: Mapping[tuple[str, str], set[str]],
) -> list[PipelineAgreement]:
    """Kappa and raw accuracy of the pipeline against each rater.

    Accuracy equals the observed agreement over the pooled decisions.
    """
    out = []
    for rater in sorted(rater_labels):
        report = cohens_kappa(
            sets, pipeline_labels, rater_labels[rater], pair=("pipeline", rater)
        )
        out.append(
            PipelineAgreement(
                rater=rater, report=report, accuracy=report.observed_agreement
            )
        )
    return out


# -- annotation file IO -------------------------------------------------------


def write_annotations(
    path: str | Path,
    sets: Sequence[AnnotationSet],
    rater_labels: Mapping[str, Mapping[tuple[str, str], set[str]]],
) -> None:
    """Comma-separated annotation file with one row per
    (conversation, side, candidate, rater) decision."""
    rows = []
    for s in sorted(sets, key=lambda s: (s.conversation_id, s.side)):
        for rater in sorted(rater_labels):
            picked = rater_labels[rater].get((s.conversation_id, s.side), set())
            for candidate in s.candidates:
                rows.append(
                    {
                        "conversation_id": s.conversation_id,
                        "side": s.side,
                        "iwa_id": candidate,
                        "rater": rater,
                        "label": 1 if candidate in picked else 0,
                        "seed": s.seed,
                    }
                )
    pd.DataFrame(
        rows, columns=["conversation_id", "side", "iwa_id", "rater", "label", "seed"]
    ).to_csv(path, index=False)


def read_annotations(
    path: str | Path,
) -> tuple[list[AnnotationSet], dict[str, dict[tuple[str, str], set[str]]]]:
    """Rebuild annotation sets and per-rater labels from the CSV format.

    Candidate order within a set follows first appearance in the file.
    """
    df = pd.read_csv(path, dtype={"conversation_id": str, "iwa_id": str, "rater": str})
    needed = {"conversation_id", "side", "iwa_id", "rater", "label", "seed"}
    if not needed <= set(df.columns):
        raise DataError(f"annotation file {path} missing columns {needed - set(df.columns)}")
    candidates: dict[tuple[str, str], list[str]] = {}
    seeds: dict[tuple[str, str], int] = {}
    labels: dict[str, dict[tuple[str, str], set[str]]] = {}
    for row in df.itertuples(index=False):
        key = (str(row.conversation_id), str(row.side))
        bucket = candidates.setdefault(key, [])
        if row.iwa_id not in bucket:
            bucket.append(row.iwa_id)
        seeds[key] = int(row.seed)
        rater_bucket = labels.setdefault(str(row.rater), {}).setdefault(key, set())
        if int(row.label) == 1:
            rater_bucket.add(row.iwa_id)
    sets = [
        AnnotationSet(
            conversation_id=key[0],
            side=key[1],
            candidates=tuple(candidates[key]),
            seed=seeds[key],
        )
        for key in sorted(candidates)
    ]
    return sets, labels
