"""Run configuration: a single key=value text file.

Blank lines and "#" comments are ignored; keys are dotted lowercase.
Credentials never live in the file: `backend.credentials_env` names an
environment variable read at backend construction time. Every persisted
stage artifact embeds the config hash, and stages refuse to mix artifacts
produced under a different hash.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from aiwork.backends import ClassifierBackend, MockBackend, RemoteBackend
from aiwork.classify import PipelineConfig, ScopeLevel
from aiwork.errors import ConfigError
from aiwork.score import ScoreConfig

KNOWN_KEYS = {
    "onet_dir",
    "crosswalk",
    "oews",
    "corpus",
    "corpus_kind",
    "work_dir",
    "labels_out",
    "reports_out",
    "e1_file",
    "annotations",
    "backend.kind",
    "backend.endpoint",
    "backend.credentials_env",
    "backend.keywords_file",
    "backend.model.generate",
    "backend.model.classify",
    "backend.model.completion",
    "backend.model.embed",
    "backend.temperature.generate",
    "backend.temperature.classify",
    "backend.temperature.completion",
    "score.coverage_threshold",
    "score.scope_cutoff",
    "score.completion_policy",
    "score.weighting",
    "sample_seed",
    "sample_size",
    "parallelism",
    "block_size",
    "max_transcript_chars",
    "bootstrap_resamples",
    "report_tag",
}

DEFAULTS = {
    "corpus_kind": "uniform",
    "work_dir": "work",
    "backend.kind": "mock",
    "backend.temperature.generate": "1.0",
    "backend.temperature.classify": "0.0",
    "backend.temperature.completion": "0.0",
    "score.coverage_threshold": "0.0005",
    "score.scope_cutoff": "moderate",
    "score.completion_policy": "strict",
    "score.weighting": "onet_weighted",
    "sample_seed": "0",
    "parallelism": "1",
    "block_size": "20",
    "max_transcript_chars": "16000",
    "bootstrap_resamples": "1000",
    "report_tag": "run",
}


@dataclass
class RunConfig:
    values: dict[str, str] = field(default_factory=dict)
    source_path: Path | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values = dict(DEFAULTS)
        problems: list[str] = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                problems.append(f"line {lineno}: expected key = value")
                continue
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in KNOWN_KEYS:
                problems.append(f"line {lineno}: unknown key {key!r}")
                continue
            values[key] = value.strip()
        if problems:
            raise ConfigError(f"{path}: " + "; ".join(problems))
        config = cls(values=values, source_path=path)
        config._validate_values()
        return config

    def _validate_values(self) -> None:
        problems: list[str] = []
        if self.values.get("corpus_kind") not in ("uniform", "thumbs"):
            problems.append("corpus_kind must be uniform or thumbs")
        if self.values.get("backend.kind") not in ("mock", "remote"):
            problems.append("backend.kind must be mock or remote")
        if self.values.get("backend.kind") == "remote" and not self.values.get(
            "backend.endpoint"
        ):
            problems.append("backend.kind=remote requires backend.endpoint")
        for key in ("sample_seed", "parallelism", "block_size", "max_transcript_chars",
                    "bootstrap_resamples"):
            try:
                int(self.values[key])
            except (KeyError, ValueError):
                problems.append(f"{key} must be an integer")
        if self.values.get("sample_size"):
            try:
                int(self.values["sample_size"])
            except ValueError:
                problems.append("sample_size must be an integer")
        try:
            self.score_config()
        except (ValueError, KeyError) as exc:
            problems.append(f"score config: {exc}")
        if problems:
            raise ConfigError("; ".join(problems))

    # -- typed accessors ------------------------------------------------------

    def get(self, key: str) -> str | None:
        value = self.values.get(key, "")
        return value or None

    def get_int(self, key: str) -> int:
        return int(self.values[key])

    def path(self, key: str) -> Path | None:
        value = self.get(key)
        if value is None:
            return None
        base = self.source_path.parent if self.source_path else Path(".")
        p = Path(value)
        return p if p.is_absolute() else base / p

    def require_path(self, key: str, must_exist: bool = True) -> Path:
        p = self.path(key)
        if p is None:
            raise ConfigError(f"config key {key!r} is required for this stage")
        if must_exist and not p.exists():
            raise ConfigError(f"config key {key!r}: path does not exist: {p}")
        return p

    @property
    def work_dir(self) -> Path:
        return self.require_path("work_dir", must_exist=False)

    def stage_dir(self, stage: str) -> Path:
        if stage == "classify" and self.get("labels_out"):
            return self.require_path("labels_out", must_exist=False)
        if stage == "report" and self.get("reports_out"):
            return self.require_path("reports_out", must_exist=False)
        if stage == "report":
            return self.work_dir / "reports"
        if stage == "classify":
            return self.work_dir / "labels"
        return self.work_dir / stage

    def score_config(self) -> ScoreConfig:
        cutoff_name = self.values.get("score.scope_cutoff", "moderate")
        if cutoff_name not in ScopeLevel.__members__:
            raise ValueError(f"unknown scope cutoff {cutoff_name!r}")
        return ScoreConfig(
            coverage_threshold=float(self.values["score.coverage_threshold"]),
            scope_cutoff=ScopeLevel[cutoff_name],
            completion_policy=self.values["score.completion_policy"],
            weighting=self.values["score.weighting"],
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            block_size=self.get_int("block_size"),
            max_transcript_chars=self.get_int("max_transcript_chars"),
            parallelism=self.get_int("parallelism"),
        )

    def build_backend(self) -> ClassifierBackend:
        kind = self.values["backend.kind"]
        if kind == "mock":
            keywords = None
            keywords_path = self.path("backend.keywords_file")
            if keywords_path is not None:
                if not keywords_path.is_file():
                    raise ConfigError(f"backend.keywords_file not found: {keywords_path}")
                keywords = json.loads(keywords_path.read_text(encoding="utf-8"))
            return MockBackend(keywords=keywords)
        token = None
        env_name = self.get("backend.credentials_env")
        if env_name:
            token = os.environ.get(env_name)
            if token is None:
                raise ConfigError(
                    f"backend.credentials_env names {env_name!r}, which is not set"
                )
        models = {
            op: self.values[f"backend.model.{op}"]
            for op in ("generate", "classify", "completion", "embed")
            if self.values.get(f"backend.model.{op}")
        }
        temperatures = {
            op: float(self.values[f"backend.temperature.{op}"])
            for op in ("generate", "classify", "completion")
        }
        return RemoteBackend(
            endpoint=self.values["backend.endpoint"],
            token=token,
            models=models,
            temperatures=temperatures,
        )

    # -- identity -------------------------------------------------------------

    def canonical(self) -> str:
        return "\n".join(f"{k}={self.values[k]}" for k in sorted(self.values))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()
