"""Staged command-line pipeline.

    aiwork ingest    --config run.cfg     # O*NET + crosswalk + OEWS -> store, weights, workforce shares
    aiwork classify  --config run.cfg     # corpus + backend -> labels.jsonl (resumable)
    aiwork aggregate --config run.cfg     # labels -> per-activity stats, asymmetry
    aiwork score     --config run.cfg     # weights + stats -> applicability scores, group rollups
    aiwork validate  --config run.cfg     # labels vs human annotation file -> kappa tables
    aiwork report    --config run.cfg     # everything -> report tables
    aiwork sweep     --config run.cfg --thresholds 1e-5,1e-4,5e-4,1e-3,1e-2

Each stage persists its outputs under work_dir/<stage>/ together with a
manifest embedding the config hash; stages refuse to consume artifacts
produced under a different config. Exit codes: 0 success, 1 config error,
2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import pandas as pd

from aiwork import classify as classify_mod
from aiwork import metrics as metrics_mod
from aiwork import report as report_mod
from aiwork import score as score_mod
from aiwork import validation as validation_mod
from aiwork import workforce as workforce_mod
from aiwork.classify import FailureRecord, IwaCatalog
from aiwork.config import RunConfig
from aiwork.corpus import iter_corpus, load_corpus, sample
from aiwork.errors import (
    AiworkError,
    BackendError,
    ConfigError,
    DataError,
    StageError,
)
from aiwork.taxonomy import load_dump, load_onet, merge_soc

log = logging.getLogger(__name__)

STORE_FILE = "store.jsonl"
LABELS_FILE = "labels.jsonl"
FAILURES_FILE = "failures.jsonl"
CHECKPOINT_FILE = "checkpoint.json"
MANIFEST_FILE = "manifest.json"


def _write_manifest(stage_dir: Path, stage: str, config: RunConfig, extra: dict | None = None) -> None:
    manifest = {"stage": stage, "config_hash": config.config_hash}
    if extra:
        manifest.update(extra)
    with (stage_dir / MANIFEST_FILE).open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _check_stage(config: RunConfig, stage: str) -> Path:
    stage_dir = config.stage_dir(stage)
    manifest_path = stage_dir / MANIFEST_FILE
    if not manifest_path.is_file():
        raise StageError(f"stage '{stage}' has not run (missing {manifest_path})")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("config_hash") != config.config_hash:
        raise StageError(
            f"stage '{stage}' artifacts were produced under a different config "
            f"(hash drift); re-run it or restore the original config"
        )
    return stage_dir


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- stages -------------------------------------------------------------------


def cmd_ingest(config: RunConfig) -> None:
    onet_dir = config.require_path("onet_dir")
    crosswalk = config.require_path("crosswalk")
    oews = config.require_path("oews")
    store = load_onet(onet_dir)
    merge_soc(store, crosswalk, oews)

    out = config.stage_dir("ingest")
    out.mkdir(parents=True, exist_ok=True)
    store.dump(out / STORE_FILE)

    weights, excluded = workforce_mod.all_occupation_weights(store)
    workforce_mod.weights_table(weights).to_csv(out / "weights.csv", index=False)
    uniform, _ = workforce_mod.uniform_task_weights(store)
    workforce_mod.weights_table(uniform).to_csv(out / "weights_uniform.csv", index=False)

    iwa_shares, gwa_shares = workforce_mod.workforce_shares(store)
    workforce_mod.shares_table(iwa_shares).to_csv(out / "workforce_iwa.csv", index=False)
    gwa_table = workforce_mod.shares_table(gwa_shares).rename(columns={"iwa_id": "gwa_id"})
    gwa_table.to_csv(out / "workforce_gwa.csv", index=False)

    _write_manifest(
        out,
        "ingest",
        config,
        {
            "store_hash": store.canonical_hash(),
            "iwa_count": store.iwa_count,
            "task_count": store.task_count,
            "occupation_count": len(store.occupations),
            "occupations_without_weights": excluded,
            "merge_warnings": len(store.merge_warnings),
        },
    )
    print(
        f"ingest: {store.iwa_count} IWAs, {store.task_count} tasks, "
        f"{len(store.occupations)} SOC occupations -> {out}"
    )


def _load_done_ids(labels_path: Path, failures_path: Path) -> set[str]:
    done: set[str] = set()
    for path, key in ((labels_path, "conversation_id"), (failures_path, "conversation_id")):
        if path.is_file():
            with path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        done.add(json.loads(line)[key])
    return done


def cmd_classify(config: RunConfig) -> None:
    ingest_dir = _check_stage(config, "ingest")
    corpus_path = config.require_path("corpus")
    store = load_dump(ingest_dir / STORE_FILE)
    catalog = IwaCatalog(store.iwa_catalog())
    backend = config.build_backend()
    handle = load_corpus(corpus_path, config.values["corpus_kind"])

    out = config.stage_dir("classify")
    out.mkdir(parents=True, exist_ok=True)
    labels_path = out / LABELS_FILE
    failures_path = out / FAILURES_FILE
    checkpoint_path = out / CHECKPOINT_FILE

    if checkpoint_path.is_file():
        checkpoint = json.loads(checkpoint_path.read_text(encoding="utf-8"))
        if checkpoint.get("config_hash") != config.config_hash:
            raise StageError(
                "existing classify outputs were produced under a different config; "
                "remove them or restore the config"
            )
        skip_ids = _load_done_ids(labels_path, failures_path)
        if skip_ids:
            log.info("resuming: %d conversations already done", len(skip_ids))
    else:
        skip_ids = set()
        labels_path.unlink(missing_ok=True)
        failures_path.unlink(missing_ok=True)

    size = config.get("sample_size")
    if size is not None:
        records = sample(handle, int(size), config.get_int("sample_seed"))
    else:
        records = iter_corpus(handle.source_path)

    n_done = len(skip_ids)
    n_failed = 0
    last_id = None
    try:
        with labels_path.open("a", encoding="utf-8") as lfh, failures_path.open(
            "a", encoding="utf-8"
        ) as ffh:
            for result in classify_mod.run_pipeline(
                records, catalog, backend, config.pipeline_config(), frozenset(skip_ids)
            ):
                if isinstance(result, FailureRecord):
                    ffh.write(
                        json.dumps(
                            {
                                "conversation_id": result.conversation_id,
                                "stage": result.stage,
                                "reason": result.reason,
                            },
                            sort_keys=True,
                        )
                    )
                    ffh.write("\n")
                    ffh.flush()
                    n_failed += 1
                    last_id = result.conversation_id
                else:
                    lfh.write(json.dumps(classify_mod.labels_to_json(result), sort_keys=True))
                    lfh.write("\n")
                    lfh.flush()
                    last_id = result.conversation_id
                n_done += 1
                checkpoint_path.write_text(
                    json.dumps(
                        {
                            "config_hash": config.config_hash,
                            "completed": n_done,
                            "last_completed_conversation_id": last_id,
                        },
                        sort_keys=True,
                    )
                    + "\n",
                    encoding="utf-8",
                )
    except BackendError:
        print(
            f"classify interrupted after {n_done} conversations; resume with the "
            f"same command",
            file=sys.stderr,
        )
        raise

    _write_manifest(
        out,
        "classify",
        config,
        {
            "labeled": n_done - n_failed,
            "failed": n_failed,
            "corpus_hash": _file_sha256(corpus_path),
            "backend_identity": backend.identity,
        },
    )
    print(f"classify: {n_done - n_failed} labeled, {n_failed} failed -> {out}")


def cmd_aggregate(config: RunConfig) -> None:
    labels_dir = _check_stage(config, "classify")
    labels = classify_mod.read_labels(labels_dir / LABELS_FILE)
    out = config.stage_dir("aggregate")
    out.mkdir(parents=True, exist_ok=True)

    score_config = config.score_config()
    resamples = config.get_int("bootstrap_resamples")
    seed = config.get_int("sample_seed")
    for side in ("user", "ai"):
        stats = metrics_mod.compute_iwa_stats(
            labels,
            side,
            completion_policy=score_config.completion_policy,
            scope_cutoff=score_config.scope_cutoff,
            bootstrap_resamples=resamples,
            bootstrap_seed=seed,
        )
        metrics_mod.stats_to_table(stats).to_csv(out / f"iwa_stats_{side}.csv", index=False)
        if labels:
            store = load_dump(_check_stage(config, "ingest") / STORE_FILE)
            gwa = metrics_mod.gwa_rollup(stats, store, side)
            metrics_mod.stats_to_table(gwa).rename(columns={"iwa_id": "gwa_id"}).to_csv(
                out / f"gwa_stats_{side}.csv", index=False
            )

    records, summary = metrics_mod.asymmetry(labels)
    pd.DataFrame(
        [
            {"conversation_id": r.conversation_id, "jaccard": r.jaccard, "disjoint": r.disjoint}
            for r in records
        ],
        columns=["conversation_id", "jaccard", "disjoint"],
    ).to_csv(out / "asymmetry.csv", index=False)

    meta = {
        "n_labeled": len(labels),
        "n_feedback": sum(1 for c in labels if c.thumbs is not None),
        "asymmetry": {
            "n": summary.n,
            "disjoint_fraction": summary.disjoint_fraction,
            "jaccard_below_half_fraction": summary.jaccard_below_half_fraction,
        },
        "thumbs_completion_correlation": metrics_mod.thumbs_completion_correlation(labels),
    }
    with (out / "aggregate_meta.json").open("w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "aggregate", config, {"n_labeled": len(labels)})
    print(f"aggregate: {len(labels)} conversations -> {out}")


def _read_stats(config: RunConfig, side: str) -> dict[str, metrics_mod.IwaStats]:
    aggregate_dir = _check_stage(config, "aggregate")
    path = aggregate_dir / f"iwa_stats_{side}.csv"
    if not path.is_file():
        raise StageError(f"missing {path}; re-run the aggregate stage")
    df = pd.read_csv(path, dtype={"iwa_id": str, "side": str})
    return metrics_mod.stats_from_table(df) if not df.empty else {}


def _read_weights(config: RunConfig, uniform: bool = False) -> dict[str, dict[str, float]]:
    ingest_dir = _check_stage(config, "ingest")
    name = "weights_uniform.csv" if uniform else "weights.csv"
    df = pd.read_csv(ingest_dir / name, dtype={"soc_code": str, "iwa_id": str})
    return workforce_mod.weights_from_table(df)


def cmd_score(config: RunConfig) -> None:
    ingest_dir = _check_stage(config, "ingest")
    store = load_dump(ingest_dir / STORE_FILE)
    stats_user = _read_stats(config, "user")
    stats_ai = _read_stats(config, "ai")
    score_config = config.score_config()

    out = config.stage_dir("score")
    out.mkdir(parents=True, exist_ok=True)

    weights = _read_weights(config, uniform=score_config.weighting == "uniform_tasks")
    scores = score_mod.score_all(weights, stats_user, stats_ai, score_config)
    score_mod.scores_table(scores, store).to_csv(out / "scores.csv", index=False)

    uniform_weights = _read_weights(config, uniform=True)
    scores_uniform = score_mod.score_all(uniform_weights, stats_user, stats_ai, score_config)
    score_mod.scores_table(scores_uniform, store).to_csv(
        out / "scores_uniform.csv", index=False
    )

    for level in ("major", "minor"):
        score_mod.group_rollup(scores, store, level).to_csv(
            out / f"groups_{level}.csv", index=False
        )

    _write_manifest(out, "score", config, {"n_occupations": len(scores)})
    print(f"score: {len(scores)} occupations -> {out}")


def _scores_from_table(df: pd.DataFrame) -> list[score_mod.ApplicabilityScore]:
    out = []
    for row in df.itertuples(index=False):
        out.append(
            score_mod.ApplicabilityScore(
                soc_code=str(row.soc_code),
                coverage=float(row.coverage),
                completion_mean=float(row.completion),
                scope_mean=float(row.scope),
                a_user=float(row.a_user),
                a_ai=float(row.a_ai),
                a=float(row.a),
                coverage_user=float(row.coverage),
                coverage_ai=float(row.coverage),
            )
        )
    return out


def cmd_validate(config: RunConfig) -> None:
    labels_dir = _check_stage(config, "classify")
    annotations_path = config.require_path("annotations")
    sets, rater_labels = validation_mod.read_annotations(annotations_path)
    labels = classify_mod.read_labels(labels_dir / LABELS_FILE)

    pipeline_labels: dict[tuple[str, str], set[str]] = {}
    for conv in labels:
        for side in ("user", "ai"):
            pipeline_labels[(conv.conversation_id, side)] = {
                m.iwa_id for m in conv.matches(side)
            }
    # Restrict pipeline verdicts to the sampled candidate universe.
    for s in sets:
        key = (s.conversation_id, s.side)
        if key in pipeline_labels:
            pipeline_labels[key] &= set(s.candidates)

    out = config.stage_dir("validate")
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    per_conv_rows = []
    raters = sorted(rater_labels)
    for side in ("user", "ai"):
        side_sets = [s for s in sets if s.side == side]
        if not side_sets:
            continue
        for i, rater_a in enumerate(raters):
            for rater_b in raters[i + 1 :]:
                report = validation_mod.cohens_kappa(
                    side_sets,
                    rater_labels[rater_a],
                    rater_labels[rater_b],
                    pair=(rater_a, rater_b),
                )
                rows.append(_kappa_row(side, report, accuracy=None))
        for agreement in validation_mod.pipeline_agreement(
            side_sets, rater_labels, pipeline_labels
        ):
            rows.append(_kappa_row(side, agreement.report, accuracy=agreement.accuracy))
        for rater in raters:
            for conv_id, _, kappa in validation_mod.per_conversation_kappas(
                side_sets, pipeline_labels, rater_labels[rater]
            ):
                per_conv_rows.append(
                    {
                        "side": side,
                        "conversation_id": conv_id,
                        "rater": rater,
                        "kappa": kappa,
                    }
                )
    pd.DataFrame(
        rows,
        columns=[
            "side",
            "rater_a",
            "rater_b",
            "kappa",
            "n_decisions",
            "observed_agreement",
            "expected_agreement",
            "accuracy",
        ],
    ).to_csv(out / "kappa.csv", index=False)
    pd.DataFrame(
        per_conv_rows, columns=["side", "conversation_id", "rater", "kappa"]
    ).to_csv(out / "kappa_per_conversation.csv", index=False)
    _write_manifest(out, "validate", config, {"n_sets": len(sets), "raters": raters})
    print(f"validate: {len(sets)} annotation sets, {len(raters)} raters -> {out}")


def _kappa_row(side: str, report: validation_mod.KappaReport, accuracy: float | None) -> dict:
    return {
        "side": side,
        "rater_a": report.pair[0],
        "rater_b": report.pair[1],
        "kappa": report.kappa,
        "n_decisions": report.n_decisions,
        "observed_agreement": report.observed_agreement,
        "expected_agreement": report.expected_agreement,
        "accuracy": accuracy,
    }


def _build_report_inputs(config: RunConfig) -> report_mod.ReportInputs:
    ingest_dir = _check_stage(config, "ingest")
    store = load_dump(ingest_dir / STORE_FILE)
    stats_user = _read_stats(config, "user")
    stats_ai = _read_stats(config, "ai")
    score_dir = _check_stage(config, "score")
    scores = _scores_from_table(
        pd.read_csv(score_dir / "scores.csv", dtype={"soc_code": str})
    )
    scores_uniform = _scores_from_table(
        pd.read_csv(score_dir / "scores_uniform.csv", dtype={"soc_code": str})
    )

    workforce_iwa = {}
    workforce_gwa = {}
    iwa_path = ingest_dir / "workforce_iwa.csv"
    if iwa_path.is_file():
        for row in pd.read_csv(iwa_path, dtype={"iwa_id": str}).itertuples(index=False):
            workforce_iwa[str(row.iwa_id)] = float(row.share)
    gwa_path = ingest_dir / "workforce_gwa.csv"
    if gwa_path.is_file():
        for row in pd.read_csv(gwa_path, dtype={"gwa_id": str}).itertuples(index=False):
            workforce_gwa[str(row.gwa_id)] = float(row.share)

    aggregate_dir = _check_stage(config, "aggregate")
    meta = json.loads((aggregate_dir / "aggregate_meta.json").read_text(encoding="utf-8"))
    asymmetry_summary = metrics_mod.AsymmetrySummary(
        n=meta["asymmetry"]["n"],
        disjoint_fraction=meta["asymmetry"]["disjoint_fraction"],
        jaccard_below_half_fraction=meta["asymmetry"]["jaccard_below_half_fraction"],
    )

    exposures = None
    e1_path = config.path("e1_file")
    if e1_path is not None and e1_path.is_file():
        exposures = score_mod.load_exposures(e1_path)

    classify_manifest = json.loads(
        (config.stage_dir("classify") / MANIFEST_FILE).read_text(encoding="utf-8")
    )
    return report_mod.ReportInputs(
        store=store,
        scores=scores,
        scores_uniform=scores_uniform,
        stats_user=stats_user,
        stats_ai=stats_ai,
        workforce_iwa=workforce_iwa,
        workforce_gwa=workforce_gwa,
        asymmetry_summary=asymmetry_summary,
        weights_by_soc=_read_weights(config),
        score_config=config.score_config(),
        exposures=exposures,
        n_conversations=meta["n_labeled"],
        n_feedback_conversations=meta["n_feedback"],
        config_hash=config.config_hash,
        corpus_hash=classify_manifest.get("corpus_hash", ""),
        backend_identity=classify_manifest.get("backend_identity", ""),
    )


def cmd_report(config: RunConfig, kinds: list[str] | None, strict: bool) -> None:
    inputs = _build_report_inputs(config)
    out = config.stage_dir("report")
    specs = None
    if kinds:
        specs = [report_mod.ReportSpec(kind) for kind in kinds]
    emitted = report_mod.render_all(
        inputs, out, tag=config.values["report_tag"], specs=specs, strict=strict
    )
    print(f"report: {len(emitted)} kinds -> {out}")


def cmd_sweep(config: RunConfig, thresholds: list[float]) -> None:
    weights = _read_weights(config)
    stats_user = _read_stats(config, "user")
    stats_ai = _read_stats(config, "ai")
    table = score_mod.threshold_robustness(
        weights, stats_user, stats_ai, thresholds, config.score_config()
    )
    out = config.stage_dir("sweep")
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "threshold_robustness.csv", index=False)
    _write_manifest(out, "sweep", config, {"thresholds": thresholds})
    print(f"sweep: {len(thresholds)} thresholds -> {out}")


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aiwork",
        description="Occupational AI applicability pipeline",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("ingest", "load O*NET, merge SOC/OEWS, compute weights and workforce shares"),
        ("classify", "label conversations with the configured backend (resumable)"),
        ("aggregate", "aggregate labels into per-activity statistics"),
        ("score", "compute per-occupation applicability scores"),
        ("validate", "compare pipeline labels against human annotations"),
        ("report", "render report tables"),
        ("sweep", "score robustness across coverage thresholds"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the key=value config file")
        if name == "report":
            p.add_argument(
                "--kinds", help="comma-separated report kinds (default: all available)"
            )
            p.add_argument(
                "--strict",
                action="store_true",
                help="fail instead of skipping reports with missing inputs",
            )
        if name == "sweep":
            p.add_argument(
                "--thresholds",
                required=True,
                help="comma-separated coverage thresholds, e.g. 1e-5,1e-4,5e-4",
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = RunConfig.from_file(args.config)
        if args.command == "ingest":
            cmd_ingest(config)
        elif args.command == "classify":
            cmd_classify(config)
        elif args.command == "aggregate":
            cmd_aggregate(config)
        elif args.command == "score":
            cmd_score(config)
        elif args.command == "validate":
            cmd_validate(config)
        elif args.command == "report":
            kinds = args.kinds.split(",") if args.kinds else None
            cmd_report(config, kinds, args.strict)
        elif args.command == "sweep":
            thresholds = [float(t) for t in args.thresholds.split(",")]
            cmd_sweep(config, thresholds)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except (DataError, AiworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
