"""Machine-readable report tables backing the analysis exhibits.

Figures are emitted as data (edge lists, binned points, box statistics),
never as images. Rendering is deterministic: identical inputs produce
byte-identical files, and every numeric cell is recomputable from the
persisted intermediate tables.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from aiwork.errors import DataError, StageError
from aiwork.metrics import AsymmetrySummary, IwaStats
from aiwork.score import (
    ApplicabilityScore,
    ScoreConfig,
    compare_external,
    coverage_depth_curve,
    divergence,
    group_rollup,
    scores_table,
    socioeconomic,
)
from aiwork.taxonomy import TaxonomyStore

SOC_MAJOR_TITLES = {
    "11": "Management",
    "13": "Business and Financial Operations",
    "15": "Computer and Mathematical",
    "17": "Architecture and Engineering",
    "19": "Life, Physical, and Social Science",
    "21": "Community and Social Service",
    "23": "Legal",
    "25": "Educational Instruction and Library",
    "27": "Arts, Design, Entertainment, Sports, and Media",
    "29": "Healthcare Practitioners and Technical",
    "31": "Healthcare Support",
    "33": "Protective Service",
    "35": "Food Preparation and Serving Related",
    "37": "Building and Grounds Cleaning and Maintenance",
    "39": "Personal Care and Service",
    "41": "Sales and Related",
    "43": "Office and Administrative Support",
    "45": "Farming, Fishing, and Forestry",
    "47": "Construction and Extraction",
    "49": "Installation, Maintenance, and Repair",
    "51": "Production",
    "53": "Transportation and Material Moving",
}

REPORT_KINDS = (
    "top_occupations",
    "bottom_occupations",
    "major_groups",
    "minor_groups",
    "gwa_shares",
    "iwa_shares",
    "feedback_extremes",
    "completion_extremes",
    "scope_extremes",
    "ratios",
    "asymmetry",
    "sankey_data",
    "wage_binscatter",
    "education_boxes",
    "e1_scatter",
    "depth_curves",
    "divergence",
)

_ALLOWED_PARAMS = {
    "top_occupations": {"n"},
    "bottom_occupations": {"n"},
    "major_groups": set(),
    "minor_groups": set(),
    "gwa_shares": set(),
    "iwa_shares": {"n"},
    "feedback_extremes": {"n", "min_conversation_fraction", "side"},
    "completion_extremes": {"n", "min_share", "side"},
    "scope_extremes": {"n", "min_share", "side"},
    "ratios": {"n", "floor"},
    "asymmetry": set(),
    "sankey_data": {"n_occupations", "n_iwas"},
    "wage_binscatter": set(),
    "education_boxes": set(),
    "e1_scatter": set(),
    "depth_curves": {"thresholds", "depths", "side"},
    "divergence": {"n"},
}

DEFAULT_DEPTH_THRESHOLDS = [1e-5, 1e-4, 5e-4, 1e-3, 1e-2]
DEFAULT_DEPTHS = [0.1, 0.25, 0.5, 0.75, 0.9]


@dataclass(frozen=True)
class ReportSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in REPORT_KINDS:
            raise DataError(f"unknown report kind {self.kind!r}")
        unknown = set(self.params) - _ALLOWED_PARAMS[self.kind]
        if unknown:
            raise DataError(f"report {self.kind}: unknown params {sorted(unknown)}")


@dataclass
class ReportInputs:
    store: TaxonomyStore | None = None
    scores: list[ApplicabilityScore] | None = None
    scores_uniform: list[ApplicabilityScore] | None = None
    stats_user: dict[str, IwaStats] | None = None
    stats_ai: dict[str, IwaStats] | None = None
    workforce_iwa: dict[str, float] | None = None
    workforce_gwa: dict[str, float] | None = None
    asymmetry_summary: AsymmetrySummary | None = None
    weights_by_soc: dict[str, dict[str, float]] | None = None
    score_config: ScoreConfig = field(default_factory=ScoreConfig)
    exposures: dict[str, float] | None = None
    n_conversations: int = 0
    n_feedback_conversations: int = 0
    config_hash: str = ""
    corpus_hash: str = ""
    backend_identity: str = ""


def _need(inputs: ReportInputs, attr: str, stage: str):
    value = getattr(inputs, attr)
    if value is None or (isinstance(value, (list, dict)) and not value):
        raise StageError(f"report input {attr!r} missing: run the {stage} stage first")
    return value


def _iwa_title(store: TaxonomyStore, iwa_id: str) -> str:
    node = store.iwas.get(iwa_id)
    return node.title if node else ""


def _render_occupation_ranking(inputs: ReportInputs, n: int, ascending: bool) -> pd.DataFrame:
    scores = _need(inputs, "scores", "score")
    store = _need(inputs, "store", "ingest")
    table = scores_table(scores, store)
    table = table.sort_values(["a", "soc_code"], ascending=[ascending, True])
    return table.head(n).reset_index(drop=True)


def _render_groups(inputs: ReportInputs, level: str) -> pd.DataFrame:
    scores = _need(inputs, "scores", "score")
    store = _need(inputs, "store", "ingest")
    table = group_rollup(scores, store, level=level)
    if level == "major":
        table.insert(1, "title", table["group"].map(SOC_MAJOR_TITLES).fillna(""))
    return table.sort_values(["score", "group"], ascending=[False, True]).reset_index(
        drop=True
    )


def _activity_share_frame(inputs: ReportInputs, rollup_to_gwa: bool) -> pd.DataFrame:
    store = _need(inputs, "store", "ingest")
    stats_user = _need(inputs, "stats_user", "aggregate")
    stats_ai = _need(inputs, "stats_ai", "aggregate")
    if rollup_to_gwa:
        user: dict[str, float] = {}
        ai: dict[str, float] = {}
        for iwa_id, e in stats_user.items():
            g = store.rollup(iwa_id)
            user[g] = user.get(g, 0.0) + e.activity_share
        for iwa_id, e in stats_ai.items():
            g = store.rollup(iwa_id)
            ai[g] = ai.get(g, 0.0) + e.activity_share
        workforce = inputs.workforce_gwa or {}
        ids = sorted(set(user) | set(ai) | set(workforce))
        rows = [
            {
                "gwa_id": i,
                "title": store.gwa_titles.get(i, ""),
                "user_share": user.get(i, 0.0),
                "ai_share": ai.get(i, 0.0),
                "workforce_share": workforce.get(i, 0.0),
            }
            for i in ids
        ]
    else:
        workforce = inputs.workforce_iwa or {}
        ids = sorted(set(stats_user) | set(stats_ai) | set(workforce))
        rows = [
            {
                "iwa_id": i,
                "title": _iwa_title(store, i),
                "user_share": stats_user[i].activity_share if i in stats_user else 0.0,
                "ai_share": stats_ai[i].activity_share if i in stats_ai else 0.0,
                "workforce_share": workforce.get(i, 0.0),
            }
            for i in ids
        ]
    df = pd.DataFrame(rows)
    df["max_share"] = df[["user_share", "ai_share"]].max(axis=1)
    df = df.sort_values(
        ["max_share", df.columns[0]], ascending=[False, True]
    ).drop(columns="max_share")
    return df.reset_index(drop=True)


def _render_feedback_extremes(
    inputs: ReportInputs, n: int, min_conversation_fraction: float, side: str
) -> pd.DataFrame:
    store = _need(inputs, "store", "ingest")
    stats = _need(inputs, "stats_user" if side == "user" else "stats_ai", "aggregate")
    if inputs.n_feedback_conversations == 0:
        raise StageError("feedback_extremes requires labels from a thumbs corpus")
    min_count = min_conversation_fraction * inputs.n_feedback_conversations
    rows = []
    for iwa_id in sorted(stats):
        e = stats[iwa_id]
        if e.positive_feedback_share is None or e.thumbs_total < min_count:
            continue
        lo, hi = e.feedback_ci or (float("nan"), float("nan"))
        rows.append(
            {
                "iwa_id": iwa_id,
                "title": _iwa_title(store, iwa_id),
                "feedback_share": e.positive_feedback_share,
                "ci_low": lo,
                "ci_high": hi,
                "n_feedback": e.thumbs_total,
            }
        )
    if not rows:
        raise StageError("no activity passed the feedback frequency filter")
    df = pd.DataFrame(rows).sort_values(
        ["feedback_share", "iwa_id"], ascending=[False, True]
    )
    top = df.head(n).assign(extreme="top")
    bottom = df.tail(n).assign(extreme="bottom")
    return pd.concat([top, bottom], ignore_index=True)


def _rate_extremes(
    inputs: ReportInputs, n: int, min_share: float, side: str, rate_attr: str
) -> pd.DataFrame:
    store = _need(inputs, "store", "ingest")
    stats = _need(inputs, "stats_user" if side == "user" else "stats_ai", "aggregate")
    rows = []
    for iwa_id in sorted(stats):
        e = stats[iwa_id]
        rate = getattr(e, rate_attr)
        if rate is None or e.activity_share < min_share:
            continue
        # Normal approximation to the binomial interval.
        half = 1.96 * math.sqrt(rate * (1.0 - rate) / e.match_count)
        rows.append(
            {
                "iwa_id": iwa_id,
                "title": _iwa_title(store, iwa_id),
                "rate": rate,
                "ci_low": max(0.0, rate - half),
                "ci_high": min(1.0, rate + half),
                "n_matched": e.match_count,
            }
        )
    if not rows:
        raise StageError("no activity passed the share filter")
    df = pd.DataFrame(rows).sort_values(["rate", "iwa_id"], ascending=[False, True])
    top = df.head(n).assign(extreme="top")
    bottom = df.tail(n).assign(extreme="bottom")
    return pd.concat([top, bottom], ignore_index=True)


def _render_ratios(inputs: ReportInputs, n: int, floor: float) -> pd.DataFrame:
    store = _need(inputs, "store", "ingest")
    stats_user = _need(inputs, "stats_user", "aggregate")
    stats_ai = _need(inputs, "stats_ai", "aggregate")
    rows = []
    ids = sorted(set(stats_user) | set(stats_ai))
    for iwa_id in ids:
        f_user = stats_user[iwa_id].activity_share if iwa_id in stats_user else 0.0
        f_ai = stats_ai[iwa_id].activity_share if iwa_id in stats_ai else 0.0
        if f_user < floor and f_ai < floor:
            continue
        if f_user >= f_ai:
            direction = "assisted"
            factor = f_user / f_ai if f_ai > 0 else float("inf")
        else:
            direction = "performed"
            factor = f_ai / f_user if f_user > 0 else float("inf")
        rows.append(
            {
                "iwa_id": iwa_id,
                "title": _iwa_title(store, iwa_id),
                "direction": direction,
                "factor": factor,
                "user_share": f_user,
                "ai_share": f_ai,
            }
        )
    if not rows:
        raise StageError("no activity passed the ratio floor")
    df = pd.DataFrame(rows)
    pieces = []
    for direction in ("assisted", "performed"):
        part = df[df["direction"] == direction].sort_values(
            ["factor", "iwa_id"], ascending=[False, True]
        )
        pieces.append(part.head(n))
    return pd.concat(pieces, ignore_index=True)


def _render_sankey(inputs: ReportInputs, n_occupations: int, n_iwas: int) -> pd.DataFrame:
    store = _need(inputs, "store", "ingest")
    scores = _need(inputs, "scores", "score")
    stats_user = _need(inputs, "stats_user", "aggregate")
    stats_ai = _need(inputs, "stats_ai", "aggregate")
    weights_by_soc = _need(inputs, "weights_by_soc", "ingest")
    threshold = inputs.score_config.coverage_threshold
    top = sorted(scores, key=lambda s: (-s.a, s.soc_code))[:n_occupations]

    def contribution(weights: dict[str, float], iwa_id: str) -> float:
        w = weights[iwa_id]
        total = 0.0
        for stats in (stats_user, stats_ai):
            e = stats.get(iwa_id)
            if e is None or e.activity_share < threshold:
                continue
            total += w * (e.completion_rate or 0.0) * (e.scope_rate or 0.0)
        return total / 2.0

    contributions: dict[tuple[str, str], float] = {}
    iwa_totals: dict[str, float] = {}
    for s in top:
        weights = weights_by_soc.get(s.soc_code, {})
        for iwa_id in sorted(weights):
            value = contribution(weights, iwa_id)
            if value > 0.0:
                contributions[(s.soc_code, iwa_id)] = value
                iwa_totals[iwa_id] = iwa_totals.get(iwa_id, 0.0) + value
    top_iwas = set(
        sorted(iwa_totals, key=lambda i: (-iwa_totals[i], i))[:n_iwas]
    )
    rows = []
    for (soc, iwa_id), value in sorted(contributions.items()):
        if iwa_id not in top_iwas:
            continue
        occ = store.occupations.get(soc)
        rows.append(
            {
                "soc_code": soc,
                "occupation": occ.title if occ else "",
                "employment": occ.employment if occ else None,
                "iwa_id": iwa_id,
                "iwa_title": _iwa_title(store, iwa_id),
                "score_contribution": value,
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "soc_code",
            "occupation",
            "employment",
            "iwa_id",
            "iwa_title",
            "score_contribution",
        ],
    )


def _render_depth_curves(
    inputs: ReportInputs, thresholds: list[float], depths: list[float], side: str
) -> pd.DataFrame:
    store = _need(inputs, "store", "ingest")
    weights_by_soc = _need(inputs, "weights_by_soc", "ingest")
    stats = _need(inputs, "stats_user" if side == "user" else "stats_ai", "aggregate")
    shares = {i: e.activity_share for i, e in stats.items()}
    employment = {
        soc: occ.employment
        for soc, occ in store.occupations.items()
        if occ.employment is not None
    }
    return coverage_depth_curve(weights_by_soc, shares, employment, thresholds, depths)


def render(
    spec: ReportSpec, inputs: ReportInputs, out_dir: str | Path, tag: str = "run"
) -> list[Path]:
    """Render one report kind into out_dir/<kind>/<tag>*.csv."""
    out_dir = Path(out_dir) / spec.kind
    out_dir.mkdir(parents=True, exist_ok=True)
    p = spec.params
    files: list[tuple[str, pd.DataFrame]] = []

    if spec.kind == "top_occupations":
        files.append((f"{tag}.csv", _render_occupation_ranking(inputs, int(p.get("n", 40)), False)))
    elif spec.kind == "bottom_occupations":
        files.append((f"{tag}.csv", _render_occupation_ranking(inputs, int(p.get("n", 40)), True)))
    elif spec.kind == "major_groups":
        files.append((f"{tag}.csv", _render_groups(inputs, "major")))
    elif spec.kind == "minor_groups":
        files.append((f"{tag}.csv", _render_groups(inputs, "minor")))
    elif spec.kind == "gwa_shares":
        files.append((f"{tag}.csv", _activity_share_frame(inputs, rollup_to_gwa=True)))
    elif spec.kind == "iwa_shares":
        frame = _activity_share_frame(inputs, rollup_to_gwa=False)
        if "n" in p:
            frame = frame.head(int(p["n"]))
        files.append((f"{tag}.csv", frame))
    elif spec.kind == "feedback_extremes":
        for side in (p.get("side"),) if p.get("side") else ("user", "ai"):
            frame = _render_feedback_extremes(
                inputs, int(p.get("n", 15)), float(p.get("min_conversation_fraction", 0.01)), side
            )
            files.append((f"{tag}_{side}.csv", frame))
    elif spec.kind == "completion_extremes":
        for side in (p.get("side"),) if p.get("side") else ("user", "ai"):
            frame = _rate_extremes(
                inputs, int(p.get("n", 15)), float(p.get("min_share", 0.001)), side, "completion_rate"
            )
            files.append((f"{tag}_{side}.csv", frame))
    elif spec.kind == "scope_extremes":
        for side in (p.get("side"),) if p.get("side") else ("user", "ai"):
            frame = _rate_extremes(
                inputs, int(p.get("n", 15)), float(p.get("min_share", 0.001)), side, "scope_rate"
            )
            files.append((f"{tag}_{side}.csv", frame))
    elif spec.kind == "ratios":
        files.append(
            (f"{tag}.csv", _render_ratios(inputs, int(p.get("n", 10)), float(p.get("floor", 0.0005))))
        )
    elif spec.kind == "asymmetry":
        summary = inputs.asymmetry_summary
        if summary is None:
            raise StageError("report input 'asymmetry_summary' missing: run the aggregate stage first")
        frame = pd.DataFrame(
            [
                {
                    "n_conversations": summary.n,
                    "disjoint_fraction": summary.disjoint_fraction,
                    "jaccard_below_half_fraction": summary.jaccard_below_half_fraction,
                }
            ]
        )
        files.append((f"{tag}.csv", frame))
    elif spec.kind == "sankey_data":
        files.append(
            (
                f"{tag}.csv",
                _render_sankey(inputs, int(p.get("n_occupations", 25)), int(p.get("n_iwas", 20))),
            )
        )
    elif spec.kind == "wage_binscatter":
        scores = _need(inputs, "scores", "score")
        store = _need(inputs, "store", "ingest")
        report = socioeconomic(scores, store)
        files.append((f"{tag}.csv", report.ventiles))
        summary = pd.DataFrame(
            [
                {
                    "wage_r_weighted": report.wage_r_weighted,
                    "wage_r_unweighted": report.wage_r_unweighted,
                    "wage_r_weighted_excl_top_decile": report.wage_r_weighted_excl_top_decile,
                    "wage_r_weighted_user": report.wage_r_weighted_user,
                    "wage_r_weighted_ai": report.wage_r_weighted_ai,
                }
            ]
        )
        files.append((f"{tag}_summary.csv", summary))
    elif spec.kind == "education_boxes":
        scores = _need(inputs, "scores", "score")
        store = _need(inputs, "store", "ingest")
        report = socioeconomic(scores, store)
        if report.education.empty:
            raise StageError("no education data ingested; education_boxes unavailable")
        files.append((f"{tag}.csv", report.education))
        if report.bachelors_ttest is not None:
            t = report.bachelors_ttest
            summary = pd.DataFrame(
                [
                    {
                        "statistic": t.statistic,
                        "df": t.df,
                        "pvalue": t.pvalue,
                        "mean_bachelors": t.mean_a,
                        "mean_below": t.mean_b,
                    }
                ]
            )
            files.append((f"{tag}_ttest.csv", summary))
    elif spec.kind == "e1_scatter":
        exposures = inputs.exposures
        if not exposures:
            raise StageError("e1_scatter requires an exposure file (config key e1_file)")
        scores_uniform = _need(inputs, "scores_uniform", "score")
        store = _need(inputs, "store", "ingest")
        comparison = compare_external(scores_uniform, exposures, store)
        files.append((f"{tag}.csv", comparison.table))
        summary = pd.DataFrame(
            [
                {
                    "occupation_r": comparison.occupation_r,
                    "major_group_r": comparison.major_group_r,
                    "n_occupations": comparison.n_occupations,
                    "n_groups": comparison.n_groups,
                }
            ]
        )
        files.append((f"{tag}_summary.csv", summary))
    elif spec.kind == "depth_curves":
        thresholds = [float(t) for t in p.get("thresholds", DEFAULT_DEPTH_THRESHOLDS)]
        depths = [float(d) for d in p.get("depths", DEFAULT_DEPTHS)]
        for side in (p.get("side"),) if p.get("side") else ("user", "ai"):
            files.append(
                (f"{tag}_{side}.csv", _render_depth_curves(inputs, thresholds, depths, side))
            )
    elif spec.kind == "divergence":
        scores = _need(inputs, "scores", "score")
        store = _need(inputs, "store", "ingest")
        frame = divergence(scores, store)
        if "n" in p:
            n = int(p["n"])
            frame = pd.concat([frame.head(n), frame.tail(n)], ignore_index=True)
        files.append((f"{tag}.csv", frame))

    written = []
    for name, frame in files:
        path = out_dir / name
        frame.to_csv(path, index=False)
        written.append(path)
    return written


def render_all(
    inputs: ReportInputs,
    out_dir: str | Path,
    tag: str = "run",
    specs: list[ReportSpec] | None = None,
    strict: bool = False,
) -> dict[str, list[str]]:
    """Render every requested kind; kinds whose inputs are absent are
    skipped (listed in the manifest) unless strict is set.

    Writes out_dir/manifest.json recording the config hash, corpus hash,
    and backend identity alongside the emitted files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if specs is None:
        specs = [ReportSpec(kind) for kind in REPORT_KINDS]
    emitted: dict[str, list[str]] = {}
    skipped: dict[str, str] = {}
    for spec in specs:
        try:
            paths = render(spec, inputs, out_dir, tag)
        except StageError as exc:
            if strict:
                raise
            skipped[spec.kind] = str(exc)
            continue
        emitted[spec.kind] = [str(p.relative_to(out_dir)) for p in paths]
    manifest = {
        "config_hash": inputs.config_hash,
        "corpus_hash": inputs.corpus_hash,
        "backend_identity": inputs.backend_identity,
        "tag": tag,
        "reports": emitted,
        "skipped": skipped,
    }
    with (out_dir / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return emitted
