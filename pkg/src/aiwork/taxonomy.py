"""O*NET taxonomy ingestion and the SOC-merged occupation store.

Reads the O*NET 29.0 tab-delimited reference files (task statements, task
ratings, tasks-to-DWAs, DWA/IWA references) into a linked
occupation -> task -> DWA -> IWA -> GWA hierarchy, then merges O*NET-SOC
variant occupations into SOC occupations and attaches BLS OEWS employment
and wages.

Military occupations (SOC major group 55) are dropped at ingestion; they
are not fully represented in O*NET.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from aiwork.errors import IngestionError

log = logging.getLogger(__name__)

TASK_STATEMENTS_FILE = "Task Statements.txt"
TASK_RATINGS_FILE = "Task Ratings.txt"
TASKS_TO_DWAS_FILE = "Tasks to DWAs.txt"
DWA_REFERENCE_FILE = "DWA Reference.txt"
IWA_REFERENCE_FILE = "IWA Reference.txt"
CONTENT_MODEL_FILE = "Content Model Reference.txt"
EDUCATION_FILE = "Education, Training, and Experience.txt"

REQUIRED_FILES = (
    TASK_STATEMENTS_FILE,
    TASK_RATINGS_FILE,
    TASKS_TO_DWAS_FILE,
    DWA_REFERENCE_FILE,
    IWA_REFERENCE_FILE,
)

# O*NET "FT" scale anchors in category order 1..7.
FREQUENCY_LABELS = (
    "Yearly or less",
    "More than yearly",
    "More than monthly",
    "More than weekly",
    "Daily",
    "Several times daily",
    "Hourly or more",
)
_FREQUENCY_BY_LOWER = {label.lower(): label for label in FREQUENCY_LABELS}

# O*NET "RL" (required level of education) scale categories 1..12.
EDUCATION_LEVELS = (
    "Less than a High School Diploma",
    "High School Diploma or Equivalent",
    "Post-Secondary Certificate",
    "Some College Courses",
    "Associate's Degree",
    "Bachelor's Degree",
    "Post-Baccalaureate Certificate",
    "Master's Degree",
    "Post-Master's Certificate",
    "First Professional Degree",
    "Doctoral Degree",
    "Post-Doctoral Training",
)
BACHELORS_INDEX = EDUCATION_LEVELS.index("Bachelor's Degree") + 1

MILITARY_MAJOR_GROUP = "55"


@dataclass(frozen=True)
class TaskRating:
    """Survey ratings for one task: importance (1-5), relevance (0-1), and
    the share of incumbents reporting each frequency category."""

    importance: float | None = None
    relevance: float | None = None
    frequency_shares: tuple[tuple[str, float], ...] | None = None

    @property
    def is_rated(self) -> bool:
        return self.importance is not None and self.relevance is not None

    def frequency_map(self) -> dict[str, float]:
        return dict(self.frequency_shares or ())


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    occupation_code: str
    statement: str
    dwa_ids: frozenset[str] = frozenset()
    rating: TaskRating | None = None


@dataclass(frozen=True)
class IwaNode:
    iwa_id: str
    title: str
    gwa_id: str
    dwa_ids: frozenset[str] = frozenset()


@dataclass
class OccupationRecord:
    """One SOC occupation after the O*NET-SOC merge."""

    soc_code: str
    title: str
    tasks: list[TaskRecord] = field(default_factory=list)
    onet_soc_codes: tuple[str, ...] = ()
    employment: int | None = None
    mean_wage: float | None = None
    education_mode: str | None = None
    education_category: int | None = None
    in_oews: bool = False

    @property
    def major_group(self) -> str:
        return self.soc_code[:2]

    @property
    def minor_group(self) -> str:
        # SOC minor groups are the 2-digit major prefix plus the next digit.
        return self.soc_code.replace("-", "")[:3]


@dataclass
class MergeWarning:
    kind: str
    detail: str


class TaxonomyStore:
    """Linked O*NET hierarchy; immutable once loading and merging finish."""

    def __init__(self) -> None:
        self.iwas: dict[str, IwaNode] = {}
        self.gwa_titles: dict[str, str] = {}
        self.dwa_titles: dict[str, str] = {}
        self.dwa_to_iwa: dict[str, str] = {}
        # Pre-merge view keyed by O*NET-SOC code.
        self.onet_titles: dict[str, str] = {}
        self.onet_tasks: dict[str, dict[str, TaskRecord]] = {}
        self.onet_education: dict[str, dict[int, float]] = {}
        # Post-merge view keyed by SOC code; empty until merge_soc().
        self.occupations: dict[str, OccupationRecord] = {}
        self.merge_warnings: list[MergeWarning] = []
        self.merged: bool = False

    @property
    def iwa_count(self) -> int:
        return len(self.iwas)

    @property
    def task_count(self) -> int:
        return sum(len(tasks) for tasks in self.onet_tasks.values())

    def rollup(self, iwa_id: str) -> str:
        """GWA parent of an IWA."""
        try:
            return self.iwas[iwa_id].gwa_id
        except KeyError:
            raise KeyError(f"unknown IWA id: {iwa_id}") from None

    def children(self, gwa_id: str) -> frozenset[str]:
        """IWA children of a GWA."""
        kids = frozenset(i for i, node in self.iwas.items() if node.gwa_id == gwa_id)
        if not kids and gwa_id not in self.gwa_titles:
            raise KeyError(f"unknown GWA id: {gwa_id}")
        return kids

    def iwa_for_dwa(self, dwa_id: str) -> str:
        try:
            return self.dwa_to_iwa[dwa_id]
        except KeyError:
            raise KeyError(f"unknown DWA id: {dwa_id}") from None

    def task_iwas(self, task: TaskRecord) -> frozenset[str]:
        return frozenset(self.dwa_to_iwa[d] for d in task.dwa_ids)

    def iwa_catalog(self) -> list[tuple[str, str]]:
        """(iwa_id, title) pairs in stable catalog order."""
        return [(i, self.iwas[i].title) for i in sorted(self.iwas)]

    # -- canonical serialization -------------------------------------------

    def canonical_records(self):
        for gwa_id in sorted(self.gwa_titles):
            yield {"kind": "gwa", "id": gwa_id, "title": self.gwa_titles[gwa_id]}
        for iwa_id in sorted(self.iwas):
            node = self.iwas[iwa_id]
            yield {
                "kind": "iwa",
                "id": iwa_id,
                "title": node.title,
                "gwa_id": node.gwa_id,
                "dwa_ids": sorted(node.dwa_ids),
            }
        for dwa_id in sorted(self.dwa_to_iwa):
            yield {
                "kind": "dwa",
                "id": dwa_id,
                "title": self.dwa_titles.get(dwa_id, ""),
                "iwa_id": self.dwa_to_iwa[dwa_id],
            }
        for onet_code in sorted(self.onet_tasks):
            yield {
                "kind": "onet_occupation",
                "code": onet_code,
                "title": self.onet_titles.get(onet_code, ""),
                "education": {
                    str(k): v
                    for k, v in sorted(self.onet_education.get(onet_code, {}).items())
                },
                "tasks": [
                    _task_to_json(t)
                    for _, t in sorted(self.onet_tasks[onet_code].items())
                ],
            }
        for soc in sorted(self.occupations):
            occ = self.occupations[soc]
            yield {
                "kind": "occupation",
                "soc_code": occ.soc_code,
                "title": occ.title,
                "onet_soc_codes": list(occ.onet_soc_codes),
                "employment": occ.employment,
                "mean_wage": occ.mean_wage,
                "education_mode": occ.education_mode,
                "education_category": occ.education_category,
                "in_oews": occ.in_oews,
                "tasks": [
                    _task_to_json(t) for t in sorted(occ.tasks, key=lambda t: t.task_id)
                ],
            }

    def canonical_hash(self) -> str:
        digest = hashlib.sha256()
        for record in self.canonical_records():
            digest.update(json.dumps(record, sort_keys=True).encode("utf-8"))
            digest.update(b"\n")
        return digest.hexdigest()

    def dump(self, path: str | Path) -> None:
        """Write the store as line-delimited JSON records for caching."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for record in self.canonical_records():
                fh.write(json.dumps(record, sort_keys=True))
                fh.write("\n")


def _task_to_json(task: TaskRecord) -> dict:
    rating = None
    if task.rating is not None:
        rating = {
            "importance": task.rating.importance,
            "relevance": task.rating.relevance,
            "frequency_shares": (
                list(task.rating.frequency_shares)
                if task.rating.frequency_shares is not None
                else None
            ),
        }
    return {
        "task_id": task.task_id,
        "occupation_code": task.occupation_code,
        "statement": task.statement,
        "dwa_ids": sorted(task.dwa_ids),
        "rating": rating,
    }


def _task_from_json(obj: dict) -> TaskRecord:
    rating = None
    if obj.get("rating") is not None:
        r = obj["rating"]
        freq = r.get("frequency_shares")
        rating = TaskRating(
            importance=r.get("importance"),
            relevance=r.get("relevance"),
            frequency_shares=tuple((k, v) for k, v in freq) if freq is not None else None,
        )
    return TaskRecord(
        task_id=obj["task_id"],
        occupation_code=obj["occupation_code"],
        statement=obj["statement"],
        dwa_ids=frozenset(obj["dwa_ids"]),
        rating=rating,
    )


def load_dump(path: str | Path) -> TaxonomyStore:
    """Rebuild a store from the line-delimited cache written by dump()."""
    store = TaxonomyStore()
    iwa_dwas: dict[str, set[str]] = {}
    iwa_meta: dict[str, tuple[str, str]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            kind = obj["kind"]
            if kind == "gwa":
                store.gwa_titles[obj["id"]] = obj["title"]
            elif kind == "iwa":
                iwa_meta[obj["id"]] = (obj["title"], obj["gwa_id"])
                iwa_dwas[obj["id"]] = set(obj["dwa_ids"])
            elif kind == "dwa":
                store.dwa_titles[obj["id"]] = obj["title"]
                store.dwa_to_iwa[obj["id"]] = obj["iwa_id"]
            elif kind == "onet_occupation":
                code = obj["code"]
                store.onet_titles[code] = obj["title"]
                store.onet_education[code] = {
                    int(k): v for k, v in obj.get("education", {}).items()
                }
                store.onet_tasks[code] = {
                    t["task_id"]: _task_from_json(t) for t in obj["tasks"]
                }
                if not store.onet_education[code]:
                    store.onet_education.pop(code)
            elif kind == "occupation":
                occ = OccupationRecord(
                    soc_code=obj["soc_code"],
                    title=obj["title"],
                    tasks=[_task_from_json(t) for t in obj["tasks"]],
                    onet_soc_codes=tuple(obj["onet_soc_codes"]),
                    employment=obj["employment"],
                    mean_wage=obj["mean_wage"],
                    education_mode=obj["education_mode"],
                    education_category=obj.get("education_category"),
                    in_oews=obj["in_oews"],
                )
                store.occupations[occ.soc_code] = occ
                store.merged = True
    for iwa_id, (title, gwa_id) in iwa_meta.items():
        store.iwas[iwa_id] = IwaNode(iwa_id, title, gwa_id, frozenset(iwa_dwas[iwa_id]))
    return store


# -- O*NET file ingestion ---------------------------------------------------


def _read_table(path: Path, sep: str) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path, sep=sep, dtype=str, keep_default_na=False, encoding="utf-8-sig"
        )
    except Exception as exc:
        raise IngestionError(f"cannot parse {path.name}: {exc}") from exc


def _require_columns(df: pd.DataFrame, path: Path, columns: tuple[str, ...]) -> None:
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise IngestionError(f"{path.name} is missing required columns: {missing}")


def _frequency_label(category: str) -> str | None:
    category = category.strip()
    if category.isdigit():
        idx = int(category)
        if 1 <= idx <= len(FREQUENCY_LABELS):
            return FREQUENCY_LABELS[idx - 1]
        return None
    return _FREQUENCY_BY_LOWER.get(category.lower())


def load_onet(directory: str | Path) -> TaxonomyStore:
    """Load the O*NET reference files from `directory` into a linked store.

    Raises IngestionError naming the offending file for any missing file,
    unparseable content, or dangling cross-reference.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"O*NET directory not found: {directory}")
    for name in REQUIRED_FILES:
        if not (directory / name).is_file():
            raise IngestionError(f"missing O*NET file: {name} (in {directory})")

    store = TaxonomyStore()

    iwa_df = _read_table(directory / IWA_REFERENCE_FILE, "\t")
    _require_columns(
        iwa_df, directory / IWA_REFERENCE_FILE, ("Element ID", "IWA ID", "IWA Title")
    )
    iwa_gwa: dict[str, str] = {}
    for row in iwa_df.itertuples(index=False):
        iwa_id = row[iwa_df.columns.get_loc("IWA ID")].strip()
        gwa_id = row[iwa_df.columns.get_loc("Element ID")].strip()
        title = row[iwa_df.columns.get_loc("IWA Title")].strip()
        if iwa_id in iwa_gwa and iwa_gwa[iwa_id] != gwa_id:
            raise IngestionError(
                f"{IWA_REFERENCE_FILE}: IWA {iwa_id} mapped to multiple GWAs"
            )
        iwa_gwa[iwa_id] = gwa_id
        store.gwa_titles.setdefault(gwa_id, gwa_id)
        store.iwas[iwa_id] = IwaNode(iwa_id, title, gwa_id)

    dwa_df = _read_table(directory / DWA_REFERENCE_FILE, "\t")
    _require_columns(
        dwa_df, directory / DWA_REFERENCE_FILE, ("IWA ID", "DWA ID", "DWA Title")
    )
    dangling: list[str] = []
    iwa_dwas: dict[str, set[str]] = {iwa_id: set() for iwa_id in store.iwas}
    for row in dwa_df.itertuples(index=False):
        dwa_id = row[dwa_df.columns.get_loc("DWA ID")].strip()
        iwa_id = row[dwa_df.columns.get_loc("IWA ID")].strip()
        title = row[dwa_df.columns.get_loc("DWA Title")].strip()
        if iwa_id not in store.iwas:
            dangling.append(f"DWA {dwa_id} -> IWA {iwa_id}")
            continue
        if dwa_id in store.dwa_to_iwa and store.dwa_to_iwa[dwa_id] != iwa_id:
            raise IngestionError(
                f"{DWA_REFERENCE_FILE}: DWA {dwa_id} mapped to multiple IWAs"
            )
        store.dwa_to_iwa[dwa_id] = iwa_id
        store.dwa_titles[dwa_id] = title
        iwa_dwas[iwa_id].add(dwa_id)
    if dangling:
        raise IngestionError(
            f"{DWA_REFERENCE_FILE}: dangling IWA references: {sorted(dangling)}"
        )
    for iwa_id, dwas in iwa_dwas.items():
        node = store.iwas[iwa_id]
        store.iwas[iwa_id] = IwaNode(node.iwa_id, node.title, node.gwa_id, frozenset(dwas))

    content_path = directory / CONTENT_MODEL_FILE
    if content_path.is_file():
        cm_df = _read_table(content_path, "\t")
        if {"Element ID", "Element Name"} <= set(cm_df.columns):
            names = dict(zip(cm_df["Element ID"].str.strip(), cm_df["Element Name"].str.strip()))
            for gwa_id in store.gwa_titles:
                if gwa_id in names:
                    store.gwa_titles[gwa_id] = names[gwa_id]

    tasks_df = _read_table(directory / TASK_STATEMENTS_FILE, "\t")
    _require_columns(
        tasks_df,
        directory / TASK_STATEMENTS_FILE,
        ("O*NET-SOC Code", "Title", "Task ID", "Task"),
    )
    task_occ: dict[str, str] = {}
    dropped_military = 0
    for row in tasks_df.itertuples(index=False):
        code = row[tasks_df.columns.get_loc("O*NET-SOC Code")].strip()
        if code.startswith(MILITARY_MAJOR_GROUP + "-"):
            dropped_military += 1
            continue
        task_id = row[tasks_df.columns.get_loc("Task ID")].strip()
        statement = row[tasks_df.columns.get_loc("Task")].strip()
        store.onet_titles.setdefault(code, row[tasks_df.columns.get_loc("Title")].strip())
        store.onet_tasks.setdefault(code, {})[task_id] = TaskRecord(
            task_id=task_id, occupation_code=code, statement=statement
        )
        task_occ[task_id] = code
    if dropped_military:
        log.info("dropped %d military (55-) task rows at ingestion", dropped_military)

    ratings = _collect_ratings(directory / TASK_RATINGS_FILE, task_occ)
    for task_id, rating in ratings.items():
        code = task_occ[task_id]
        old = store.onet_tasks[code][task_id]
        store.onet_tasks[code][task_id] = TaskRecord(
            task_id=old.task_id,
            occupation_code=old.occupation_code,
            statement=old.statement,
            dwa_ids=old.dwa_ids,
            rating=rating,
        )

    t2d_df = _read_table(directory / TASKS_TO_DWAS_FILE, "\t")
    _require_columns(t2d_df, directory / TASKS_TO_DWAS_FILE, ("Task ID", "DWA ID"))
    task_dwas: dict[str, set[str]] = {}
    dangling = []
    for row in t2d_df.itertuples(index=False):
        task_id = row[t2d_df.columns.get_loc("Task ID")].strip()
        dwa_id = row[t2d_df.columns.get_loc("DWA ID")].strip()
        if dwa_id not in store.dwa_to_iwa:
            dangling.append(f"task {task_id} -> DWA {dwa_id}")
            continue
        if task_id not in task_occ:
            # Military tasks were dropped above; anything else is dangling.
            code_col = "O*NET-SOC Code" in t2d_df.columns and row[
                t2d_df.columns.get_loc("O*NET-SOC Code")
            ].strip().startswith(MILITARY_MAJOR_GROUP + "-")
            if not code_col:
                dangling.append(f"DWA {dwa_id} -> task {task_id}")
            continue
        task_dwas.setdefault(task_id, set()).add(dwa_id)
    if dangling:
        raise IngestionError(
            f"{TASKS_TO_DWAS_FILE}: dangling references: {sorted(dangling)}"
        )
    for task_id, dwas in task_dwas.items():
        code = task_occ[task_id]
        old = store.onet_tasks[code][task_id]
        store.onet_tasks[code][task_id] = TaskRecord(
            task_id=old.task_id,
            occupation_code=old.occupation_code,
            statement=old.statement,
            dwa_ids=frozenset(dwas),
            rating=old.rating,
        )

    education_path = directory / EDUCATION_FILE
    if education_path.is_file():
        edu_df = _read_table(education_path, "\t")
        needed = {"O*NET-SOC Code", "Scale ID", "Category", "Data Value"}
        if needed <= set(edu_df.columns):
            rl = edu_df[edu_df["Scale ID"].str.strip().str.upper() == "RL"]
            for row in rl.itertuples(index=False):
                code = row[edu_df.columns.get_loc("O*NET-SOC Code")].strip()
                if code.startswith(MILITARY_MAJOR_GROUP + "-"):
                    continue
                try:
                    category = int(row[edu_df.columns.get_loc("Category")].strip())
                    value = float(row[edu_df.columns.get_loc("Data Value")])
                except ValueError:
                    continue
                if not 1 <= category <= len(EDUCATION_LEVELS):
                    continue
                bucket = store.onet_education.setdefault(code, {})
                bucket[category] = bucket.get(category, 0.0) + value

    return store


def _collect_ratings(path: Path, task_occ: dict[str, str]) -> dict[str, TaskRating]:
    df = _read_table(path, "\t")
    _require_columns(df, path, ("Task ID", "Scale ID", "Category", "Data Value"))
    importance: dict[str, float] = {}
    relevance: dict[str, float] = {}
    freq: dict[str, dict[str, float]] = {}
    dangling: list[str] = []
    code_col = df.columns.get_loc("O*NET-SOC Code") if "O*NET-SOC Code" in df.columns else None
    for row in df.itertuples(index=False):
        task_id = row[df.columns.get_loc("Task ID")].strip()
        if task_id not in task_occ:
            if code_col is not None and row[code_col].strip().startswith(
                MILITARY_MAJOR_GROUP + "-"
            ):
                continue
            dangling.append(task_id)
            continue
        scale = row[df.columns.get_loc("Scale ID")].strip().upper()
        raw_value = row[df.columns.get_loc("Data Value")]
        try:
            value = float(raw_value)
        except ValueError:
            raise IngestionError(
                f"{path.name}: non-numeric Data Value {raw_value!r} for task {task_id}"
            ) from None
        if scale == "IM":
            if not 1.0 <= value <= 5.0:
                raise IngestionError(
                    f"{path.name}: importance {value} out of [1,5] for task {task_id}"
                )
            importance[task_id] = value
        elif scale == "RT":
            if not 0.0 <= value <= 100.0:
                raise IngestionError(
                    f"{path.name}: relevance {value} out of [0,100] for task {task_id}"
                )
            relevance[task_id] = value / 100.0
        elif scale == "FT":
            label = _frequency_label(row[df.columns.get_loc("Category")])
            if label is None:
                raise IngestionError(
                    f"{path.name}: unknown frequency category "
                    f"{row[df.columns.get_loc('Category')]!r} for task {task_id}"
                )
            freq.setdefault(task_id, {})[label] = value / 100.0
        # Other scales are not used.
    if dangling:
        raise IngestionError(
            f"{path.name}: ratings for unknown tasks: {sorted(set(dangling))[:20]}"
        )

    ratings: dict[str, TaskRating] = {}
    for task_id in set(importance) | set(relevance) | set(freq):
        shares = freq.get(task_id)
        if shares is not None:
            total = sum(shares.values())
            if total > 1.0 + 1e-6:
                raise IngestionError(
                    f"{path.name}: frequency shares sum to {total:.6f} > 1 "
                    f"for task {task_id}"
                )
        ratings[task_id] = TaskRating(
            importance=importance.get(task_id),
            relevance=relevance.get(task_id),
            frequency_shares=(
                tuple(sorted(shares.items())) if shares is not None else None
            ),
        )
    return ratings


# -- SOC merge ---------------------------------------------------------------


def normalize_soc(code: str) -> str:
    """Canonical SOC key: trimmed, without a ".00"-style suffix."""
    return code.strip().split(".")[0]


def _norm_header(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


def _find_column(df: pd.DataFrame, *, contains: tuple[str, ...], excludes: tuple[str, ...] = ()) -> str | None:
    for col in df.columns:
        norm = _norm_header(col)
        if all(tok in norm for tok in contains) and not any(tok in norm for tok in excludes):
            return col
    return None


def _read_crosswalk(path: Path) -> tuple[dict[str, str], dict[str, str]]:
    df = _read_table(path, ",")
    onet_col = _find_column(df, contains=("onetsoc", "code"))
    soc_col = _find_column(df, contains=("soc", "code"), excludes=("onet",))
    if onet_col is None or soc_col is None:
        raise IngestionError(
            f"{path.name}: cannot identify O*NET-SOC and SOC code columns "
            f"(headers: {list(df.columns)})"
        )
    title_col = _find_column(df, contains=("soc", "title"), excludes=("onet",))
    mapping: dict[str, str] = {}
    titles: dict[str, str] = {}
    for row in df.itertuples(index=False):
        onet_code = str(row[df.columns.get_loc(onet_col)]).strip()
        soc = normalize_soc(str(row[df.columns.get_loc(soc_col)]))
        if not onet_code or not soc:
            continue
        mapping[onet_code] = soc
        if title_col is not None:
            title = str(row[df.columns.get_loc(title_col)]).strip()
            if title:
                titles[soc] = title
    return mapping, titles


def _parse_int(raw: str) -> int | None:
    cleaned = str(raw).strip().replace(",", "")
    if not cleaned:
        return None
    try:
        return int(float(cleaned))
    except ValueError:
        return None


def _parse_float(raw: str) -> float | None:
    cleaned = str(raw).strip().replace(",", "")
    if not cleaned:
        return None
    try:
        return float(cleaned)
    except ValueError:
        return None


def _read_oews(path: Path) -> dict[str, tuple[int, float | None]]:
    df = _read_table(path, ",")
    occ_col = _find_column(df, contains=("occ", "code"))
    emp_col = _find_column(df, contains=("totemp",)) or _find_column(
        df, contains=("tot", "emp")
    )
    wage_col = _find_column(df, contains=("amean",)) or _find_column(
        df, contains=("mean", "wage")
    )
    if occ_col is None or emp_col is None:
        raise IngestionError(
            f"{path.name}: cannot identify OCC_CODE / TOT_EMP columns "
            f"(headers: {list(df.columns)})"
        )
    group_col = _find_column(df, contains=("ogroup",))
    out: dict[str, tuple[int, float | None]] = {}
    skipped = 0
    for row in df.itertuples(index=False):
        if group_col is not None:
            group = str(row[df.columns.get_loc(group_col)]).strip().lower()
            if group and group != "detailed":
                continue
        soc = normalize_soc(str(row[df.columns.get_loc(occ_col)]))
        employment = _parse_int(row[df.columns.get_loc(emp_col)])
        if not soc or employment is None:
            skipped += 1
            log.warning("OEWS row skipped (malformed): %r", tuple(row)[:4])
            continue
        wage = None
        if wage_col is not None:
            wage = _parse_float(row[df.columns.get_loc(wage_col)])
        out[soc] = (employment, wage)
    if skipped:
        log.info("OEWS: skipped %d malformed rows", skipped)
    return out


def _merge_ratings(a: TaskRating | None, b: TaskRating | None) -> TaskRating | None:
    """Max-rule reconciliation for duplicate task ids across variants."""
    if a is None:
        return b
    if b is None:
        return a
    importance = _max_optional(a.importance, b.importance)
    relevance = _max_optional(a.relevance, b.relevance)
    # Frequency distribution follows the higher-importance variant.
    if (b.importance or 0.0) > (a.importance or 0.0):
        freq = b.frequency_shares if b.frequency_shares is not None else a.frequency_shares
    else:
        freq = a.frequency_shares if a.frequency_shares is not None else b.frequency_shares
    return TaskRating(importance=importance, relevance=relevance, frequency_shares=freq)


def _max_optional(a: float | None, b: float | None) -> float | None:
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def merge_soc(
    store: TaxonomyStore, crosswalk_path: str | Path, oews_path: str | Path
) -> TaxonomyStore:
    """Merge O*NET-SOC variant occupations into SOC occupations.

    Each SOC occupation holds the union of its variants' tasks (duplicate
    task ids reconciled by the max rule) plus OEWS employment and mean
    wage. Occupations absent from OEWS are flagged, not dropped.
    """
    crosswalk_path = Path(crosswalk_path)
    oews_path = Path(oews_path)
    if not crosswalk_path.is_file():
        raise IngestionError(f"missing crosswalk file: {crosswalk_path}")
    if not oews_path.is_file():
        raise IngestionError(f"missing OEWS file: {oews_path}")

    crosswalk, soc_titles = _read_crosswalk(crosswalk_path)
    oews = _read_oews(oews_path)

    store.occupations.clear()
    store.merge_warnings.clear()

    for onet_code in crosswalk:
        if onet_code not in store.onet_tasks and not onet_code.startswith(
            MILITARY_MAJOR_GROUP + "-"
        ):
            store.merge_warnings.append(
                MergeWarning("crosswalk_without_onet", onet_code)
            )

    soc_variants: dict[str, list[str]] = {}
    for onet_code in sorted(store.onet_tasks):
        soc = crosswalk.get(onet_code)
        if soc is None:
            soc = normalize_soc(onet_code)
            log.warning(
                "O*NET-SOC %s missing from crosswalk; derived SOC %s", onet_code, soc
            )
            store.merge_warnings.append(MergeWarning("onet_without_crosswalk", onet_code))
        soc_variants.setdefault(soc, []).append(onet_code)

    for soc in sorted(soc_variants):
        variants = soc_variants[soc]
        merged_tasks: dict[str, TaskRecord] = {}
        education_mass: dict[int, float] = {}
        for onet_code in variants:
            for task_id, task in store.onet_tasks[onet_code].items():
                if task_id in merged_tasks:
                    prev = merged_tasks[task_id]
                    merged_tasks[task_id] = TaskRecord(
                        task_id=task_id,
                        occupation_code=soc,
                        statement=prev.statement,
                        dwa_ids=prev.dwa_ids | task.dwa_ids,
                        rating=_merge_ratings(prev.rating, task.rating),
                    )
                else:
                    merged_tasks[task_id] = TaskRecord(
                        task_id=task_id,
                        occupation_code=soc,
                        statement=task.statement,
                        dwa_ids=task.dwa_ids,
                        rating=task.rating,
                    )
            for category, value in store.onet_education.get(onet_code, {}).items():
                education_mass[category] = education_mass.get(category, 0.0) + value

        education_category = None
        education_mode = None
        if education_mass:
            education_category = max(
                sorted(education_mass), key=lambda c: education_mass[c]
            )
            education_mode = EDUCATION_LEVELS[education_category - 1]

        title = soc_titles.get(soc) or store.onet_titles.get(variants[0], soc)
        occ = OccupationRecord(
            soc_code=soc,
            title=title,
            tasks=[merged_tasks[t] for t in sorted(merged_tasks)],
            onet_soc_codes=tuple(variants),
            education_mode=education_mode,
            education_category=education_category,
        )
        if soc in oews:
            occ.employment, occ.mean_wage = oews[soc]
            occ.in_oews = True
        else:
            store.merge_warnings.append(MergeWarning("missing_from_oews", soc))
        store.occupations[soc] = occ

    store.merged = True
    return store
