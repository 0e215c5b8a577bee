"""Per-occupation AI applicability scores and downstream analyses.

For occupation i with normalized activity weights w_ij, one side's score
is

    a_i = sum_j  w_ij * 1[f_j >= threshold] * c_j * s_j

where f_j is the activity share, c_j the completion rate, and s_j the
fraction of matched conversations at moderate-or-higher scope. The
reported score averages the user-goal and AI-action sides. Coverage is
the weight mass on activities above the threshold; the completion and
scope columns are weight-means over covered activities (weights
renormalized over the covered set).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import pandas as pd

from aiwork.classify import ScopeLevel
from aiwork.errors import DataError
from aiwork.metrics import IwaStats
from aiwork.stats import (
    TTestResult,
    percentile_ranks,
    spearman,
    weighted_mean,
    weighted_pearson,
    weighted_quantile,
    weighted_ttest,
)
from aiwork.taxonomy import BACHELORS_INDEX, TaxonomyStore

log = logging.getLogger(__name__)

DEFAULT_COVERAGE_THRESHOLD = 0.0005
SIDES = ("user", "ai")


@dataclass(frozen=True)
class ScoreConfig:
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD
    scope_cutoff: ScopeLevel = ScopeLevel.moderate
    completion_policy: str = "strict"
    weighting: str = "onet_weighted"  # or "uniform_tasks"

    def __post_init__(self) -> None:
        if not 0.0 < self.coverage_threshold < 1.0:
            raise ValueError("coverage_threshold must lie in (0, 1)")
        if self.scope_cutoff <= ScopeLevel.none:
            raise ValueError("scope_cutoff must be above none")
        if self.completion_policy not in ("strict", "half-credit"):
            raise ValueError(f"unknown completion policy {self.completion_policy!r}")
        if self.weighting not in ("onet_weighted", "uniform_tasks"):
            raise ValueError(f"unknown weighting {self.weighting!r}")


@dataclass(frozen=True)
class ApplicabilityScore:
    soc_code: str
    coverage: float
    completion_mean: float
    scope_mean: float
    a_user: float
    a_ai: float
    a: float
    coverage_user: float = 0.0
    coverage_ai: float = 0.0


def _side_components(
    weights: dict[str, float],
    stats: dict[str, IwaStats],
    threshold: float,
) -> tuple[float, float, float, float]:
    """(score, coverage, completion_mean, scope_mean) for one side."""
    score = 0.0
    covered_mass = 0.0
    completion_mass = 0.0
    scope_mass = 0.0
    for iwa_id in sorted(weights):
        w = weights[iwa_id]
        entry = stats.get(iwa_id)
        if entry is None or entry.activity_share < threshold:
            continue
        c = entry.completion_rate or 0.0
        s = entry.scope_rate or 0.0
        score += w * c * s
        covered_mass += w
        completion_mass += w * c
        scope_mass += w * s
    if covered_mass > 0.0:
        completion_mean = completion_mass / covered_mass
        scope_mean = scope_mass / covered_mass
    else:
        completion_mean = 0.0
        scope_mean = 0.0
    return score, covered_mass, completion_mean, scope_mean


def applicability(
    soc_code: str,
    weights: dict[str, float],
    stats_user: dict[str, IwaStats],
    stats_ai: dict[str, IwaStats],
    config: ScoreConfig | None = None,
) -> ApplicabilityScore:
    """AI applicability score for one occupation from both sides' stats."""
    config = config or ScoreConfig()
    if not weights:
        raise DataError(f"occupation {soc_code} has no activity weights")
    t = config.coverage_threshold
    a_user, cov_user, cm_user, sm_user = _side_components(weights, stats_user, t)
    a_ai, cov_ai, cm_ai, sm_ai = _side_components(weights, stats_ai, t)
    return ApplicabilityScore(
        soc_code=soc_code,
        coverage=(cov_user + cov_ai) / 2.0,
        completion_mean=(cm_user + cm_ai) / 2.0,
        scope_mean=(sm_user + sm_ai) / 2.0,
        a_user=a_user,
        a_ai=a_ai,
        a=(a_user + a_ai) / 2.0,
        coverage_user=cov_user,
        coverage_ai=cov_ai,
    )


def score_all(
    weights_by_soc: dict[str, dict[str, float]],
    stats_user: dict[str, IwaStats],
    stats_ai: dict[str, IwaStats],
    config: ScoreConfig | None = None,
) -> list[ApplicabilityScore]:
    config = config or ScoreConfig()
    out = []
    for soc in sorted(weights_by_soc):
        if not weights_by_soc[soc]:
            log.warning("occupation %s excluded from scoring: empty weights", soc)
            continue
        out.append(applicability(soc, weights_by_soc[soc], stats_user, stats_ai, config))
    return out


def scores_table(scores: list[ApplicabilityScore], store: TaxonomyStore) -> pd.DataFrame:
    rows = []
    for s in sorted(scores, key=lambda s: s.soc_code):
        occ = store.occupations.get(s.soc_code)
        rows.append(
            {
                "soc_code": s.soc_code,
                "title": occ.title if occ else "",
                "coverage": s.coverage,
                "completion": s.completion_mean,
                "scope": s.scope_mean,
                "a_user": s.a_user,
                "a_ai": s.a_ai,
                "a": s.a,
                "employment": occ.employment if occ else None,
                "mean_wage": occ.mean_wage if occ else None,
                "education_mode": occ.education_mode if occ else None,
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "soc_code",
            "title",
            "coverage",
            "completion",
            "scope",
            "a_user",
            "a_ai",
            "a",
            "employment",
            "mean_wage",
            "education_mode",
        ],
    )


def group_rollup(
    scores: list[ApplicabilityScore], store: TaxonomyStore, level: str = "major"
) -> pd.DataFrame:
    """Employment-weighted group means; occupations without OEWS
    employment are excluded from the weighted statistics."""
    if level not in ("major", "minor"):
        raise ValueError("level must be 'major' or 'minor'")
    groups: dict[str, dict[str, float]] = {}
    for s in scores:
        occ = store.occupations.get(s.soc_code)
        if occ is None or occ.employment is None:
            continue
        key = occ.major_group if level == "major" else occ.minor_group
        g = groups.setdefault(
            key,
            {"coverage": 0.0, "completion": 0.0, "scope": 0.0, "a": 0.0, "employment": 0.0},
        )
        e = float(occ.employment)
        g["coverage"] += e * s.coverage
        g["completion"] += e * s.completion_mean
        g["scope"] += e * s.scope_mean
        g["a"] += e * s.a
        g["employment"] += e
    rows = []
    for key in sorted(groups):
        g = groups[key]
        e = g["employment"]
        rows.append(
            {
                "group": key,
                "coverage": g["coverage"] / e,
                "completion": g["completion"] / e,
                "scope": g["scope"] / e,
                "score": g["a"] / e,
                "employment": int(e),
            }
        )
    return pd.DataFrame(
        rows, columns=["group", "coverage", "completion", "scope", "score", "employment"]
    )


def coverage_depth_curve(
    weights_by_soc: dict[str, dict[str, float]],
    shares: dict[str, float],
    employment_by_soc: dict[str, int],
    thresholds: list[float],
    depths: list[float],
) -> pd.DataFrame:
    """Employment share of workers with at least `depth` of their weighted
    work in covered activities, per coverage threshold.

    Rows are thresholds, columns depths. Occupations without employment
    are excluded.
    """
    socs = [s for s in sorted(weights_by_soc) if employment_by_soc.get(s)]
    total = float(sum(employment_by_soc[s] for s in socs))
    matrix = []
    for threshold in thresholds:
        covered_mass = {
            soc: sum(
                w
                for iwa_id, w in sorted(weights_by_soc[soc].items())
                if shares.get(iwa_id, 0.0) >= threshold
            )
            for soc in socs
        }
        row = {"threshold": threshold}
        for depth in depths:
            mass = sum(
                employment_by_soc[soc] for soc in socs if covered_mass[soc] >= depth
            )
            row[f"depth_{depth:g}"] = mass / total if total else 0.0
        matrix.append(row)
    return pd.DataFrame(matrix)


def threshold_robustness(
    weights_by_soc: dict[str, dict[str, float]],
    stats_user: dict[str, IwaStats],
    stats_ai: dict[str, IwaStats],
    thresholds: list[float],
    config: ScoreConfig | None = None,
) -> pd.DataFrame:
    """Rank and linear correlation between scores at each threshold and
    the configured default threshold."""
    config = config or ScoreConfig()
    if len(thresholds) < 1:
        raise ValueError("need at least one threshold")

    def scores_at(threshold: float) -> list[float]:
        cfg = ScoreConfig(
            coverage_threshold=threshold,
            scope_cutoff=config.scope_cutoff,
            completion_policy=config.completion_policy,
            weighting=config.weighting,
        )
        return [s.a for s in score_all(weights_by_soc, stats_user, stats_ai, cfg)]

    baseline = scores_at(config.coverage_threshold)
    rows = []
    for threshold in thresholds:
        candidate = scores_at(threshold)
        rows.append(
            {
                "threshold": threshold,
                "rank_correlation": spearman(candidate, baseline),
                "linear_correlation": weighted_pearson(candidate, baseline),
            }
        )
    return pd.DataFrame(rows, columns=["threshold", "rank_correlation", "linear_correlation"])


@dataclass(frozen=True)
class ExternalComparison:
    occupation_r: float
    major_group_r: float
    n_occupations: int
    n_groups: int
    table: pd.DataFrame = field(repr=False, default=None)


def load_exposures(path) -> dict[str, float]:
    """Two-column comma-separated table of (soc_code, e1)."""
    df = pd.read_csv(path, dtype=str)
    if df.shape[1] < 2:
        raise DataError(f"exposure file {path} needs two columns (soc_code, e1)")
    soc_col, e1_col = df.columns[0], df.columns[1]
    out: dict[str, float] = {}
    for row in df.itertuples(index=False):
        soc = str(row[0]).strip().split(".")[0]
        try:
            e1 = float(row[1])
        except (TypeError, ValueError):
            raise DataError(f"exposure file {path}: bad e1 value {row[1]!r} for {soc}")
        if not 0.0 <= e1 <= 1.0:
            raise DataError(f"exposure file {path}: e1 {e1} out of [0,1] for {soc}")
        out[soc] = e1
    if not out:
        raise DataError(f"exposure file {path} is empty")
    return out


def compare_external(
    scores_uniform: list[ApplicabilityScore],
    exposures: dict[str, float],
    store: TaxonomyStore,
) -> ExternalComparison:
    """Employment-weighted correlation between uniform-task-weight scores
    and the external exposure measure, at occupation and major-group
    level."""
    rows = []
    for s in sorted(scores_uniform, key=lambda s: s.soc_code):
        occ = store.occupations.get(s.soc_code)
        if occ is None or occ.employment is None:
            continue
        e1 = exposures.get(s.soc_code)
        if e1 is None:
            continue
        rows.append(
            {
                "soc_code": s.soc_code,
                "title": occ.title,
                "major_group": occ.major_group,
                "a_uniform": s.a,
                "e1": e1,
                "employment": occ.employment,
            }
        )
    if len(rows) < 2:
        raise DataError("need at least two occupations with employment and exposure")
    df = pd.DataFrame(rows)
    occupation_r = weighted_pearson(df["a_uniform"], df["e1"], df["employment"])
    grouped = df.groupby("major_group").apply(
        lambda g: pd.Series(
            {
                "a_uniform": weighted_mean(g["a_uniform"], g["employment"]),
                "e1": weighted_mean(g["e1"], g["employment"]),
                "employment": g["employment"].sum(),
            }
        ),
        include_groups=False,
    )
    if len(grouped) >= 2:
        group_r = weighted_pearson(
            grouped["a_uniform"], grouped["e1"], grouped["employment"]
        )
    else:
        group_r = float("nan")
    return ExternalComparison(
        occupation_r=occupation_r,
        major_group_r=group_r,
        n_occupations=len(df),
        n_groups=len(grouped),
        table=df,
    )


@dataclass(frozen=True)
class SocioeconomicReport:
    wage_r_weighted: float
    wage_r_unweighted: float
    wage_r_weighted_excl_top_decile: float
    wage_r_weighted_user: float
    wage_r_weighted_ai: float
    ventiles: pd.DataFrame
    education: pd.DataFrame
    bachelors_ttest: TTestResult | None


def _exclude_top_wage_decile(df: pd.DataFrame) -> pd.DataFrame:
    """Drop occupations in the top 10% of workers by wage: accumulate
    employment from the highest wage downward and drop occupations until
    10% of worker mass is gone (the straddling occupation is dropped)."""
    total = df["employment"].sum()
    ordered = df.sort_values(["mean_wage", "soc_code"], ascending=[False, True])
    cut = 0.10 * total
    dropped_mass = 0.0
    dropped_idx = []
    for idx, row in ordered.iterrows():
        if dropped_mass >= cut:
            break
        dropped_idx.append(idx)
        dropped_mass += row["employment"]
    return df.drop(index=dropped_idx)


def socioeconomic(
    scores: list[ApplicabilityScore], store: TaxonomyStore
) -> SocioeconomicReport:
    """Wage and education correlates of the applicability score."""
    rows = []
    for s in sorted(scores, key=lambda s: s.soc_code):
        occ = store.occupations.get(s.soc_code)
        if occ is None or occ.employment is None or occ.mean_wage is None:
            continue
        rows.append(
            {
                "soc_code": s.soc_code,
                "a": s.a,
                "a_user": s.a_user,
                "a_ai": s.a_ai,
                "mean_wage": occ.mean_wage,
                "employment": occ.employment,
                "education_category": occ.education_category,
                "education_mode": occ.education_mode,
            }
        )
    if len(rows) < 2:
        raise DataError("need at least two occupations with wage and employment")
    df = pd.DataFrame(rows)

    weighted_r = weighted_pearson(df["a"], df["mean_wage"], df["employment"])
    unweighted_r = weighted_pearson(df["a"], df["mean_wage"])
    trimmed = _exclude_top_wage_decile(df)
    if len(trimmed) >= 2:
        trimmed_r = weighted_pearson(
            trimmed["a"], trimmed["mean_wage"], trimmed["employment"]
        )
    else:
        trimmed_r = float("nan")
    user_r = weighted_pearson(df["a_user"], df["mean_wage"], df["employment"])
    ai_r = weighted_pearson(df["a_ai"], df["mean_wage"], df["employment"])

    # Employment-weighted wage ventiles (20 bins of equal worker mass).
    ordered = df.sort_values(["mean_wage", "soc_code"]).reset_index(drop=True)
    total = float(ordered["employment"].sum())
    cum_before = ordered["employment"].cumsum() - ordered["employment"]
    midpoints = (cum_before + ordered["employment"] / 2.0) / total
    ordered["ventile"] = (midpoints * 20).astype(int).clip(0, 19) + 1
    ventile_rows = []
    for ventile, g in ordered.groupby("ventile"):
        ventile_rows.append(
            {
                "ventile": int(ventile),
                "mean_wage": weighted_mean(g["mean_wage"], g["employment"]),
                "mean_score": weighted_mean(g["a"], g["employment"]),
                "employment": int(g["employment"].sum()),
            }
        )
    ventiles = pd.DataFrame(
        ventile_rows, columns=["ventile", "mean_wage", "mean_score", "employment"]
    )

    edu = df[df["education_category"].notna()].copy()
    edu_rows = []
    for category, g in sorted(edu.groupby("education_category"), key=lambda kv: kv[0]):
        values = g["a"].to_numpy()
        weights = g["employment"].to_numpy()
        edu_rows.append(
            {
                "education_category": int(category),
                "education_mode": g["education_mode"].iloc[0],
                "mean_score": weighted_mean(values, weights),
                "q1": weighted_quantile(values, weights, 0.25),
                "median": weighted_quantile(values, weights, 0.50),
                "q3": weighted_quantile(values, weights, 0.75),
                "employment": int(weights.sum()),
                "n_occupations": len(g),
            }
        )
    education = pd.DataFrame(
        edu_rows,
        columns=[
            "education_category",
            "education_mode",
            "mean_score",
            "q1",
            "median",
            "q3",
            "employment",
            "n_occupations",
        ],
    )

    bachelors = edu[edu["education_category"] == BACHELORS_INDEX]
    below = edu[edu["education_category"] < BACHELORS_INDEX]
    ttest = None
    if len(bachelors) >= 2 and len(below) >= 2:
        ttest = weighted_ttest(
            bachelors["a"], bachelors["employment"], below["a"], below["employment"]
        )

    return SocioeconomicReport(
        wage_r_weighted=weighted_r,
        wage_r_unweighted=unweighted_r,
        wage_r_weighted_excl_top_decile=trimmed_r,
        wage_r_weighted_user=user_r,
        wage_r_weighted_ai=ai_r,
        ventiles=ventiles,
        education=education,
        bachelors_ttest=ttest,
    )


def divergence(
    scores: list[ApplicabilityScore],
    store: TaxonomyStore,
    top_quartile_only: bool = True,
) -> pd.DataFrame:
    """Per-occupation percentile gap between the user-goal and AI-action
    scores, filtered to occupations in the top quartile on their
    higher-ranked side."""
    ordered = sorted(scores, key=lambda s: s.soc_code)
    if not ordered:
        raise DataError("no scores to rank")
    user_pct = percentile_ranks([s.a_user for s in ordered])
    ai_pct = percentile_ranks([s.a_ai for s in ordered])
    rows = []
    for s, up, ap in zip(ordered, user_pct, ai_pct):
        if top_quartile_only and max(up, ap) < 75.0:
            continue
        occ = store.occupations.get(s.soc_code)
        rows.append(
            {
                "soc_code": s.soc_code,
                "title": occ.title if occ else "",
                "a_user": s.a_user,
                "a_ai": s.a_ai,
                "user_percentile": up,
                "ai_percentile": ap,
                "gap": up - ap,
            }
        )
    df = pd.DataFrame(
        rows,
        columns=[
            "soc_code",
            "title",
            "a_user",
            "a_ai",
            "user_percentile",
            "ai_percentile",
            "gap",
        ],
    )
    return df.sort_values(["gap", "soc_code"], ascending=[False, True]).reset_index(
        drop=True
    )
