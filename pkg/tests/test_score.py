from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from aiwork.classify import ScopeLevel
from aiwork.errors import DataError
from aiwork.metrics import IwaStats
from aiwork.score import (
    ApplicabilityScore,
    ScoreConfig,
    applicability,
    compare_external,
    coverage_depth_curve,
    divergence,
    group_rollup,
    load_exposures,
    score_all,
    scores_table,
    socioeconomic,
    threshold_robustness,
)
from aiwork.stats import weighted_pearson
from aiwork.taxonomy import OccupationRecord, TaxonomyStore


def fake_stats(side, table):
    """table: iwa -> (f, c, s)"""
    out = {}
    for iwa, (f, c, s) in table.items():
        out[iwa] = IwaStats(
            iwa_id=iwa,
            side=side,
            activity_share=f,
            match_count=100,
            completion_rate=c,
            scope_rate=s,
        )
    return out


def store_with(occupations):
    store = TaxonomyStore()
    for occ in occupations:
        store.occupations[occ.soc_code] = occ
    store.merged = True
    return store


class TestApplicability:
    def test_direct_formula(self):
        stats = fake_stats("user", {"A": (0.001, 0.9, 0.5)})
        score = applicability("10-0000", {"A": 1.0}, stats, stats)
        assert score.a_user == pytest.approx(0.45, abs=1e-12)
        assert score.a == pytest.approx(0.45, abs=1e-12)

    def test_below_threshold_is_zero(self):
        stats = fake_stats("user", {"A": (0.0004, 0.9, 0.5)})
        score = applicability("10-0000", {"A": 1.0}, stats, stats)
        assert score.a_user == 0.0
        assert score.coverage == 0.0

    def test_a_is_exact_mean_of_sides(self):
        stats_user = fake_stats("user", {"A": (0.01, 0.8, 0.6)})
        stats_ai = fake_stats("ai", {"A": (0.01, 0.4, 0.2)})
        score = applicability("10-0000", {"A": 1.0}, stats_user, stats_ai)
        assert score.a == (score.a_user + score.a_ai) / 2.0

    def test_empty_weights_rejected(self):
        with pytest.raises(DataError):
            applicability("10-0000", {}, {}, {})

    def test_coverage_equals_score_when_rates_are_one(self):
        table = {"A": (0.01, 1.0, 1.0), "B": (0.02, 1.0, 1.0), "C": (0.0001, 1.0, 1.0)}
        stats = fake_stats("user", table)
        weights = {"A": 0.5, "B": 0.3, "C": 0.2}
        score = applicability("10-0000", weights, stats, stats)
        assert score.a == pytest.approx(score.coverage, abs=1e-12)
        assert score.coverage == pytest.approx(0.8, abs=1e-12)

    def test_completion_and_scope_means_renormalize_over_covered(self):
        stats = fake_stats("user", {"A": (0.01, 0.9, 0.5), "B": (0.0001, 0.1, 0.1)})
        score = applicability("10-0000", {"A": 0.5, "B": 0.5}, stats, stats)
        assert score.completion_mean == pytest.approx(0.9, abs=1e-12)
        assert score.scope_mean == pytest.approx(0.5, abs=1e-12)


class TestScoreInvariants:
    def _random_world(self, rng, n_occ=10, n_iwa=20):
        iwas = [f"I{k:02d}" for k in range(n_iwa)]
        weights_by_soc = {}
        for o in range(n_occ):
            picked = rng.choice(n_iwa, size=rng.integers(2, 8), replace=False)
            raw = rng.random(len(picked)) + 0.05
            total = raw.sum()
            weights_by_soc[f"{10 + o}-0000"] = {
                iwas[i]: float(w / total) for i, w in zip(sorted(picked), raw)
            }
        def side(side_name):
            return fake_stats(
                side_name,
                {
                    iwa: (
                        float(rng.random() * 0.01),
                        float(rng.random()),
                        float(rng.random()),
                    )
                    for iwa in iwas
                },
            )
        return weights_by_soc, side("user"), side("ai")

    def test_scores_in_unit_interval_and_mean_exact(self):
        rng = np.random.default_rng(42)
        weights, stats_user, stats_ai = self._random_world(rng)
        for score in score_all(weights, stats_user, stats_ai):
            assert 0.0 <= score.a_user <= 1.0
            assert 0.0 <= score.a_ai <= 1.0
            assert 0.0 <= score.a <= 1.0
            assert score.a == (score.a_user + score.a_ai) / 2.0

    def test_monotone_in_completion_and_scope(self):
        rng = np.random.default_rng(7)
        weights, stats_user, stats_ai = self._random_world(rng)
        config = ScoreConfig()
        baseline = {s.soc_code: s.a for s in score_all(weights, stats_user, stats_ai, config)}
        iwas = sorted(stats_user)
        for trial in range(1000):
            side_stats = stats_user if trial % 2 == 0 else stats_ai
            iwa = iwas[int(rng.integers(len(iwas)))]
            entry = side_stats[iwa]
            attr = "completion_rate" if trial % 4 < 2 else "scope_rate"
            old = getattr(entry, attr)
            bump = min(1.0, old + float(rng.random()) * (1.0 - old))
            setattr(entry, attr, bump)
            bumped = {s.soc_code: s.a for s in score_all(weights, stats_user, stats_ai, config)}
            for soc in baseline:
                assert bumped[soc] >= baseline[soc] - 1e-15
            baseline = bumped

    def test_below_threshold_iwas_are_inert(self):
        rng = np.random.default_rng(11)
        weights, stats_user, stats_ai = self._random_world(rng)
        config = ScoreConfig(coverage_threshold=0.005)
        baseline = [s.a for s in score_all(weights, stats_user, stats_ai, config)]
        # Remove every stat entry below the threshold: scores must not move.
        pruned_user = {
            i: e for i, e in stats_user.items() if e.activity_share >= 0.005
        }
        pruned_ai = {i: e for i, e in stats_ai.items() if e.activity_share >= 0.005}
        pruned = [s.a for s in score_all(weights, pruned_user, pruned_ai, config)]
        assert baseline == pruned


class TestGroupRollup:
    def _scores(self):
        return [
            ApplicabilityScore("41-2031", 0.5, 0.9, 0.5, 0.1, 0.1, 0.1),
            ApplicabilityScore("41-9099", 0.7, 0.8, 0.6, 0.5, 0.5, 0.5),
            ApplicabilityScore("53-7031", 0.2, 0.9, 0.3, 0.2, 0.2, 0.2),
        ]

    def _store(self):
        return store_with(
            [
                OccupationRecord("41-2031", "Retail", employment=1, in_oews=True),
                OccupationRecord("41-9099", "Sales Other", employment=3, in_oews=True),
                OccupationRecord("53-7031", "Dredge", employment=10, in_oews=True),
            ]
        )

    def test_single_occupation_group_identity(self):
        table = group_rollup(self._scores(), self._store(), "major")
        row = table[table["group"] == "53"].iloc[0]
        assert row["score"] == pytest.approx(0.2)
        assert row["employment"] == 10

    def test_weighted_mean(self):
        table = group_rollup(self._scores(), self._store(), "major")
        row = table[table["group"] == "41"].iloc[0]
        assert row["score"] == pytest.approx(0.4, abs=1e-12)  # (1*0.1 + 3*0.5)/4
        assert row["employment"] == 4

    def test_minor_level_key(self):
        table = group_rollup(self._scores(), self._store(), "minor")
        assert set(table["group"]) == {"412", "419", "537"}

    def test_occupations_without_employment_excluded(self):
        store = self._store()
        store.occupations["41-2031"].employment = None
        table = group_rollup(self._scores(), store, "major")
        row = table[table["group"] == "41"].iloc[0]
        assert row["score"] == pytest.approx(0.5)


class TestDepthCurve:
    def test_all_covered_at_zero_depth(self):
        weights = {"A-1": {"I1": 1.0}}
        curve = coverage_depth_curve(weights, {"I1": 0.5}, {"A-1": 10}, [0.1], [0.0])
        assert curve.iloc[0]["depth_0"] == 1.0

    def test_threshold_above_every_share(self):
        weights = {"A-1": {"I1": 1.0}}
        curve = coverage_depth_curve(weights, {"I1": 0.001}, {"A-1": 10}, [0.5], [0.1])
        assert curve.iloc[0]["depth_0.1"] == 0.0

    def test_matches_hand_enumerated_matrix(self):
        # Three workers; IWA shares: I1=0.02, I2=0.004, I3=0.0001.
        weights = {
            "A-1": {"I1": 0.8, "I2": 0.2},          # emp 10
            "B-1": {"I1": 0.3, "I2": 0.4, "I3": 0.3},  # emp 30
            "C-1": {"I3": 1.0},                      # emp 60
        }
        shares = {"I1": 0.02, "I2": 0.004, "I3": 0.0001}
        employment = {"A-1": 10, "B-1": 30, "C-1": 60}
        thresholds = [0.001, 0.01, 0.05]
        depths = [0.25, 0.5, 0.9]
        curve = coverage_depth_curve(weights, shares, employment, thresholds, depths)
        expected = oracles.oracle_depth_matrix(weights, shares, employment, thresholds, depths)
        for r, threshold in enumerate(thresholds):
            for c, depth in enumerate(depths):
                assert curve.iloc[r][f"depth_{depth:g}"] == expected[r][c]
        # Hand-computed: t=0.001 covers I1,I2 -> masses A=1.0, B=0.7, C=0.
        assert curve.iloc[0]["depth_0.25"] == pytest.approx(0.4)  # A+B
        assert curve.iloc[0]["depth_0.9"] == pytest.approx(0.1)  # A only
        # t=0.01 covers I1 only -> A=0.8, B=0.3, C=0.
        assert curve.iloc[1]["depth_0.25"] == pytest.approx(0.4)
        assert curve.iloc[1]["depth_0.5"] == pytest.approx(0.1)
        # t=0.05 covers nothing.
        assert (curve.iloc[2][[f"depth_{d:g}" for d in depths]] == 0.0).all()


class TestThresholdRobustness:
    def test_identical_threshold_correlates_perfectly(self):
        rng = np.random.default_rng(3)
        stats = fake_stats(
            "user",
            {f"I{k}": (float(rng.random() * 0.01 + 0.001), 0.5, 0.5) for k in range(10)},
        )
        weights = {
            f"{10 + o}-0000": {f"I{(o + k) % 10}": w for k, w in ((0, 0.7), (1, 0.3))}
            for o in range(5)
        }
        table = threshold_robustness(weights, stats, stats, [0.0005])
        assert table.iloc[0]["rank_correlation"] == pytest.approx(1.0)
        assert table.iloc[0]["linear_correlation"] == pytest.approx(1.0)

    def test_all_shares_above_max_threshold(self):
        stats = fake_stats(
            "user", {f"I{k}": (0.05 + 0.01 * k, 0.5 + 0.04 * k, 0.5) for k in range(5)}
        )
        weights = {
            "10-0000": {"I0": 0.6, "I1": 0.4},
            "11-0000": {"I2": 0.5, "I3": 0.5},
            "12-0000": {"I4": 1.0},
        }
        table = threshold_robustness(weights, stats, stats, [0.001, 0.01, 0.04])
        assert (table["rank_correlation"] == 1.0).all()
        assert (table["linear_correlation"] == 1.0).all()


class TestExternalComparison:
    def _world(self):
        scores = [
            ApplicabilityScore(f"{11 + k}-0000", 0.5, 0.9, 0.5, 0.1 * k, 0.1 * k, 0.1 * k)
            for k in range(5)
        ]
        store = store_with(
            [
                OccupationRecord(f"{11 + k}-0000", f"Occ {k}", employment=100 + k, in_oews=True)
                for k in range(5)
            ]
        )
        return scores, store

    def test_identical_scores_give_r_one(self):
        scores, store = self._world()
        exposures = {s.soc_code: s.a for s in scores}
        comparison = compare_external(scores, exposures, store)
        assert comparison.occupation_r == pytest.approx(1.0)

    def test_equal_weights_reduce_to_unweighted(self):
        scores, store = self._world()
        for occ in store.occupations.values():
            occ.employment = 7
        exposures = {s.soc_code: 0.9 - s.a / 2 for s in scores}
        comparison = compare_external(scores, exposures, store)
        a = [s.a for s in scores]
        e = [exposures[s.soc_code] for s in scores]
        assert comparison.occupation_r == pytest.approx(
            weighted_pearson(a, e), abs=1e-12
        )

    def test_exposure_file_loader(self, tmp_path):
        path = tmp_path / "e1.csv"
        path.write_text("soc_code,e1\n11-0000,0.5\n13-0000,0.25\n")
        assert load_exposures(path) == {"11-0000": 0.5, "13-0000": 0.25}

    def test_exposure_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "e1.csv"
        path.write_text("soc_code,e1\n11-0000,1.5\n")
        with pytest.raises(DataError):
            load_exposures(path)


class TestSocioeconomic:
    def _world(self, scores_values, wages, employments, educations):
        scores = []
        occs = []
        for i, (a, wage, emp, edu) in enumerate(
            zip(scores_values, wages, employments, educations)
        ):
            soc = f"{11 + i}-0000"
            scores.append(ApplicabilityScore(soc, 0.5, 0.9, 0.5, a, a, a))
            occs.append(
                OccupationRecord(
                    soc,
                    f"Occ {i}",
                    employment=emp,
                    mean_wage=wage,
                    education_category=edu,
                    education_mode="Bachelor's Degree" if edu == 6 else "High School Diploma or Equivalent",
                    in_oews=True,
                )
            )
        return scores, store_with(occs)

    def test_constant_scores_zero_correlation(self):
        scores, store = self._world(
            [0.3] * 6,
            [30e3, 40e3, 50e3, 60e3, 70e3, 80e3],
            [10, 10, 10, 10, 10, 10],
            [2, 2, 2, 6, 6, 6],
        )
        report = socioeconomic(scores, store)
        assert report.wage_r_weighted == 0.0
        assert report.bachelors_ttest.statistic == 0.0

    def test_scores_equal_wages_r_one(self):
        wages = [30e3, 45e3, 52e3, 61e3, 78e3, 90e3]
        scores, store = self._world(
            [w / 1e5 for w in wages], wages, [5, 6, 7, 8, 9, 10], [2, 2, 2, 6, 6, 6]
        )
        report = socioeconomic(scores, store)
        assert report.wage_r_weighted == pytest.approx(1.0)
        assert report.wage_r_unweighted == pytest.approx(1.0)

    def test_ventiles_partition_worker_mass(self):
        rng = np.random.default_rng(2)
        n = 40
        scores, store = self._world(
            list(rng.random(n)),
            list(30e3 + rng.random(n) * 60e3),
            list(rng.integers(10, 1000, n)),
            [2, 6] * (n // 2),
        )
        report = socioeconomic(scores, store)
        total = sum(occ.employment for occ in store.occupations.values())
        assert report.ventiles["employment"].sum() == total
        assert report.ventiles["ventile"].between(1, 20).all()

    def test_bachelors_ttest_direction(self):
        scores, store = self._world(
            [0.1, 0.12, 0.11, 0.3, 0.31, 0.29],
            [40e3, 41e3, 39e3, 70e3, 71e3, 69e3],
            [100, 100, 100, 100, 100, 100],
            [2, 2, 2, 6, 6, 6],
        )
        report = socioeconomic(scores, store)
        t = report.bachelors_ttest
        assert t.mean_a > t.mean_b
        assert t.statistic > 0
        assert t.pvalue < 0.01

    def test_top_decile_exclusion_drops_highest_paid(self):
        scores, store = self._world(
            [0.1, 0.2, 0.3, 0.9],
            [30e3, 40e3, 50e3, 500e3],
            [30, 30, 30, 10],
            [2, 2, 6, 6],
        )
        report = socioeconomic(scores, store)
        assert report.wage_r_weighted_excl_top_decile != report.wage_r_weighted


class TestDivergence:
    def test_equal_sides_zero_gap(self):
        scores = [
            ApplicabilityScore(f"{11 + k}-0000", 0.5, 0.9, 0.5, 0.1 * k, 0.1 * k, 0.1 * k)
            for k in range(5)
        ]
        store = store_with(
            [OccupationRecord(f"{11 + k}-0000", f"Occ {k}") for k in range(5)]
        )
        table = divergence(scores, store)
        assert (table["gap"] == 0.0).all()

    def test_extreme_divergence_maximal_gap(self):
        scores = []
        for k in range(8):
            a_user = 0.1 * (k + 1)
            a_ai = 0.1 * (8 - k)
            scores.append(
                ApplicabilityScore(f"{11 + k}-0000", 0.5, 0.9, 0.5, a_user, a_ai,
                                   (a_user + a_ai) / 2)
            )
        store = store_with(
            [OccupationRecord(f"{11 + k}-0000", f"Occ {k}") for k in range(8)]
        )
        table = divergence(scores, store)
        assert table.iloc[0]["gap"] == pytest.approx(100.0)
        assert table.iloc[0]["user_percentile"] == 100.0
        assert table.iloc[0]["ai_percentile"] == 0.0

    def test_top_quartile_filter(self):
        scores = [
            ApplicabilityScore(f"{11 + k}-0000", 0.5, 0.9, 0.5, 0.01 * k, 0.01 * k, 0.01 * k)
            for k in range(20)
        ]
        store = store_with(
            [OccupationRecord(f"{11 + k}-0000", f"Occ {k}") for k in range(20)]
        )
        table = divergence(scores, store)
        assert (table[["user_percentile", "ai_percentile"]].max(axis=1) >= 75).all()


def test_scores_table_columns(small_store):
    scores = [ApplicabilityScore("41-2031", 0.5, 0.9, 0.5, 0.2, 0.3, 0.25)]
    table = scores_table(scores, small_store)
    assert list(table.columns) == [
        "soc_code", "title", "coverage", "completion", "scope",
        "a_user", "a_ai", "a", "employment", "mean_wage", "education_mode",
    ]
    assert table.iloc[0]["employment"] == 3_684_740
