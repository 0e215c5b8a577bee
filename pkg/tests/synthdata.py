"""Deterministic synthetic fixtures: O*NET-format reference files, BLS
crosswalk/OEWS files, and a conversation corpus wired to the mock
backend's keyword rule.

The full-size fixture reproduces the O*NET 29.0 cardinalities (332 IWAs,
18,796 tasks) and plants the spot-check employment rows, so the ingestion
contract is exercised at the real scale without the real files.
"""

from __future__ import annotations

import json
from pathlib import Path

import pandas as pd

# -- small world used by most tests -------------------------------------------

N_GWAS = 6
N_IWAS = 36
IWAS_PER_GWA = N_IWAS // N_GWAS

FREQ_CATEGORY_LABELS = {
    1: "Yearly or less",
    2: "More than yearly",
    3: "More than monthly",
    4: "More than weekly",
    5: "Daily",
    6: "Several times daily",
    7: "Hourly or more",
}


def gwa_id(g: int) -> str:
    return f"4.A.{g}"


def iwa_id(k: int) -> str:
    g = k // IWAS_PER_GWA + 1
    return f"4.A.{g}.I{k:02d}"


def iwa_keyword(k: int) -> str:
    return f"kw{k:03d}"


def iwa_statement(k: int) -> str:
    return f"Perform {iwa_keyword(k)} activities for operations"


def dwa_id(k: int, m: int) -> str:
    return f"{iwa_id(k)}.D{m:02d}"


# 11 O*NET-SOC occupations merging to 10 SOC occupations: the last two
# variants share SOC 39-7010 (the union-merge case).
ONET_OCCUPATIONS = [
    ("11-1011.00", "Chief Executives"),
    ("13-1011.00", "Agents and Business Managers"),
    ("15-1251.00", "Computer Programmers"),
    ("19-3011.00", "Economists"),
    ("25-2021.00", "Elementary School Teachers"),
    ("27-3042.00", "Technical Writers"),
    ("29-1141.00", "Registered Nurses"),
    ("41-2031.00", "Retail Salespersons"),
    ("43-4051.00", "Customer Service Representatives"),
    ("39-7011.00", "Tour Guides and Escorts"),
    ("39-7012.00", "Travel Guides"),
]

CROSSWALK_ROWS = [
    (code, title, code.split(".")[0] if not code.startswith("39-701") else "39-7010",
     title if not code.startswith("39-701") else "Tour and Travel Guides")
    for code, title in ONET_OCCUPATIONS
]

# SOC -> (employment, mean wage); 43-4051 is deliberately absent from OEWS.
OEWS_ROWS = {
    "11-1011": (211_230, 258_900.0),
    "13-1011": (15_870, 116_410.0),
    "15-1251": (120_370, 107_750.0),
    "19-3011": (16_720, 125_980.0),
    "25-2021": (1_400_000, 67_340.0),
    "27-3042": (47_970, 91_670.0),
    "29-1141": (3_300_000, 98_430.0),
    "41-2031": (3_684_740, 37_690.0),
    "39-7010": (46_760, 42_000.0),
}

# SOC -> modal education category (6 = Bachelor's, 2 = High School).
EDUCATION_MODES = {
    "11-1011.00": 6,
    "13-1011.00": 6,
    "15-1251.00": 6,
    "19-3011.00": 8,
    "25-2021.00": 6,
    "27-3042.00": 6,
    "29-1141.00": 5,
    "41-2031.00": 2,
    "43-4051.00": 2,
    "39-7011.00": 2,
    "39-7012.00": 2,
}


def small_task_plan() -> list[dict]:
    """Deterministic tasks for the 11 O*NET-SOC occupations.

    Occupation o gets 6 tasks; task t maps to 1-2 DWAs chosen so every
    IWA is reachable. The third occupation (index 2) has two unrated
    tasks mixed in; occupation index 7 has NO rated tasks at all.
    """
    plan = []
    task_counter = 1000
    for o, (code, _title) in enumerate(ONET_OCCUPATIONS):
        for t in range(6):
            task_counter += 1
            k1 = (o * 6 + t) % N_IWAS
            k2 = (o * 6 + t * 3 + 7) % N_IWAS
            dwas = [dwa_id(k1, 1)]
            if t % 2 == 0:
                dwas.append(dwa_id(k2, 2))
            unrated = (o == 2 and t in (1, 4)) or o == 7
            plan.append(
                {
                    "task_id": str(task_counter),
                    "onet_soc": code,
                    "statement": f"Task {task_counter} of {code}",
                    "dwas": dwas,
                    "importance": None if unrated else 1.0 + ((o + t) % 9) * 0.5,
                    "relevance": None if unrated else 0.25 + ((o * 7 + t) % 4) * 0.25,
                    "freq": None
                    if unrated or t == 5
                    else {5: 60.0, 7: 40.0}
                    if t % 2
                    else {1: 30.0, 4: 70.0},
                }
            )
    return plan


def write_onet_small(directory: Path) -> None:
    write_onet_files(
        directory,
        n_gwas=N_GWAS,
        n_iwas=N_IWAS,
        task_plan=small_task_plan(),
        education_modes=EDUCATION_MODES,
    )


def write_onet_files(
    directory: Path,
    n_gwas: int,
    n_iwas: int,
    task_plan: list[dict],
    education_modes: dict[str, int] | None = None,
    iwa_title=None,
    iwa_gwa=None,
) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    per_gwa = max(1, n_iwas // n_gwas)
    iwa_title = iwa_title or (lambda k: iwa_statement(k))
    iwa_gwa = iwa_gwa or (lambda k: gwa_id(min(k // per_gwa + 1, n_gwas)))

    iwa_rows = []
    dwa_rows = []
    content_rows = [
        {"Element ID": gwa_id(g), "Element Name": f"Working on domain {g}"}
        for g in range(1, n_gwas + 1)
    ]
    for k in range(n_iwas):
        iwa_rows.append(
            {"Element ID": iwa_gwa(k), "IWA ID": iwa_id(k), "IWA Title": iwa_title(k)}
        )
        for m in (1, 2):
            dwa_rows.append(
                {
                    "Element ID": iwa_gwa(k),
                    "IWA ID": iwa_id(k),
                    "DWA ID": dwa_id(k, m),
                    "DWA Title": f"{iwa_title(k)} (detail {m})",
                }
            )
    pd.DataFrame(iwa_rows).to_csv(directory / "IWA Reference.txt", sep="\t", index=False)
    pd.DataFrame(dwa_rows).to_csv(directory / "DWA Reference.txt", sep="\t", index=False)
    pd.DataFrame(content_rows).to_csv(
        directory / "Content Model Reference.txt", sep="\t", index=False
    )

    statement_rows = []
    rating_rows = []
    mapping_rows = []
    titles = dict(ONET_OCCUPATIONS)
    for task in task_plan:
        code = task["onet_soc"]
        statement_rows.append(
            {
                "O*NET-SOC Code": code,
                "Title": task.get("occupation_title") or titles.get(code, code),
                "Task ID": task["task_id"],
                "Task": task["statement"],
            }
        )
        for dwa in task["dwas"]:
            mapping_rows.append(
                {"O*NET-SOC Code": code, "Task ID": task["task_id"], "DWA ID": dwa}
            )
        if task.get("importance") is not None:
            rating_rows.append(
                {
                    "O*NET-SOC Code": code,
                    "Task ID": task["task_id"],
                    "Scale ID": "IM",
                    "Category": "",
                    "Data Value": task["importance"],
                }
            )
        if task.get("relevance") is not None:
            rating_rows.append(
                {
                    "O*NET-SOC Code": code,
                    "Task ID": task["task_id"],
                    "Scale ID": "RT",
                    "Category": "",
                    "Data Value": task["relevance"] * 100.0,
                }
            )
        if task.get("freq"):
            for category, pct in sorted(task["freq"].items()):
                rating_rows.append(
                    {
                        "O*NET-SOC Code": code,
                        "Task ID": task["task_id"],
                        "Scale ID": "FT",
                        "Category": category,
                        "Data Value": pct,
                    }
                )
    pd.DataFrame(statement_rows).to_csv(
        directory / "Task Statements.txt", sep="\t", index=False
    )
    pd.DataFrame(rating_rows).to_csv(directory / "Task Ratings.txt", sep="\t", index=False)
    pd.DataFrame(mapping_rows).to_csv(
        directory / "Tasks to DWAs.txt", sep="\t", index=False
    )

    if education_modes:
        edu_rows = []
        for code, mode in education_modes.items():
            for category in range(1, 13):
                edu_rows.append(
                    {
                        "O*NET-SOC Code": code,
                        "Scale ID": "RL",
                        "Category": category,
                        "Data Value": 60.0 if category == mode else 40.0 / 11.0,
                    }
                )
        pd.DataFrame(edu_rows).to_csv(
            directory / "Education, Training, and Experience.txt", sep="\t", index=False
        )


def write_crosswalk(path: Path, rows=None) -> None:
    rows = rows if rows is not None else CROSSWALK_ROWS
    pd.DataFrame(
        rows, columns=["O*NET-SOC Code", "O*NET-SOC Title", "SOC Code", "SOC Title"]
    ).to_csv(path, index=False)


def write_oews(path: Path, rows=None) -> None:
    rows = rows if rows is not None else OEWS_ROWS
    records = [
        {
            "OCC_CODE": soc,
            "OCC_TITLE": f"occupation {soc}",
            "O_GROUP": "detailed",
            "TOT_EMP": f"{employment:,}",
            "A_MEAN": wage,
        }
        for soc, (employment, wage) in sorted(rows.items())
    ]
    pd.DataFrame(records).to_csv(path, index=False)


# -- full-size O*NET 29.0-shaped fixture ---------------------------------------

FULL_IWA_COUNT = 332
FULL_TASK_COUNT = 18_796
FULL_GWA_COUNT = 37
SPOT_OCCUPATIONS = {
    "27-3091.00": ("Interpreters and Translators", "27-3091", 51_560, 63_080.0),
    "53-7031.00": ("Dredge Operators", "53-7031", 940, 58_320.0),
}


def write_onet_full(directory: Path, crosswalk_path: Path, oews_path: Path) -> None:
    """Official-format files with the O*NET 29.0 cardinalities."""
    per_gwa = FULL_IWA_COUNT // FULL_GWA_COUNT + 1

    def full_gwa(k: int) -> str:
        return f"4.A.{k // per_gwa + 1}"

    def full_title(k: int) -> str:
        return f"Carry out reference activity {k:03d}"

    n_occupations = 900
    major_groups = ["11", "13", "15", "17", "19", "21", "23", "25", "27", "29",
                    "31", "33", "35", "37", "39", "41", "43", "45", "47", "49",
                    "51", "53"]
    onet_codes = []
    for i in range(n_occupations):
        major = major_groups[i % len(major_groups)]
        onet_codes.append(f"{major}-{1000 + i // len(major_groups):04d}.00")
    onet_codes.extend(SPOT_OCCUPATIONS)

    task_plan = []
    remaining = FULL_TASK_COUNT
    per_occ = FULL_TASK_COUNT // len(onet_codes)
    task_counter = 0
    for idx, code in enumerate(onet_codes):
        quota = per_occ if idx < len(onet_codes) - 1 else remaining
        for t in range(quota):
            task_counter += 1
            k = task_counter % FULL_IWA_COUNT
            task_plan.append(
                {
                    "task_id": str(100000 + task_counter),
                    "onet_soc": code,
                    "occupation_title": SPOT_OCCUPATIONS.get(code, (f"Occupation {code}",))[0],
                    "statement": f"Reference task {task_counter}",
                    "dwas": [f"{_full_iwa_id(k)}.D01"],
                    "importance": 1.0 + (task_counter % 9) * 0.5,
                    "relevance": 0.2 + (task_counter % 5) * 0.2,
                    "freq": {5: 100.0} if task_counter % 10 == 0 else None,
                }
            )
        remaining -= quota
    assert len(task_plan) == FULL_TASK_COUNT

    write_onet_files(
        directory,
        n_gwas=FULL_GWA_COUNT,
        n_iwas=FULL_IWA_COUNT,
        task_plan=task_plan,
        iwa_title=full_title,
        iwa_gwa=full_gwa,
    )

    crosswalk_rows = []
    oews_rows = {}
    for idx, code in enumerate(onet_codes):
        if code in SPOT_OCCUPATIONS:
            title, soc, employment, wage = SPOT_OCCUPATIONS[code]
        else:
            title, soc = f"Occupation {code}", code.split(".")[0]
            employment, wage = 10_000 + idx * 13, 40_000.0 + idx * 37.0
        crosswalk_rows.append((code, title, soc, title))
        oews_rows[soc] = (employment, wage)
    write_crosswalk(crosswalk_path, crosswalk_rows)
    write_oews(oews_path, oews_rows)


def _full_iwa_id(k: int) -> str:
    per_gwa = FULL_IWA_COUNT // FULL_GWA_COUNT + 1
    return f"4.A.{k // per_gwa + 1}.I{k:02d}"


# -- synthetic conversation corpus ---------------------------------------------


def mock_keywords(n_iwas: int = N_IWAS) -> dict[str, list[str]]:
    """Statement -> keywords map for the mock backend."""
    return {iwa_statement(k): [iwa_keyword(k)] for k in range(n_iwas)}


def write_corpus(
    path: Path,
    n: int = 1000,
    n_iwas: int = N_IWAS,
    kind: str = "uniform",
) -> None:
    """Round-robin planted activities so every IWA keeps a share well
    above 1% on both sides; completion and thumbs cycle deterministically."""
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n):
            n_user = 1 + i % 3
            user_iwas = [(i * 3 + j) % n_iwas for j in range(n_user)]
            n_ai = 1 + (i + 1) % 2
            ai_iwas = [(i * 5 + 1 + 7 * j) % n_iwas for j in range(n_ai)]
            user_words = " ".join(iwa_keyword(k) for k in sorted(set(user_iwas)))
            ai_words = " ".join(iwa_keyword(k) for k in sorted(set(ai_iwas)))
            if i % 3 == 0:
                outcome = "and with that the request is handled DONE"
            elif i % 3 == 1:
                outcome = "here is a PARTIAL answer to begin with"
            else:
                outcome = "unable to make progress on this request"
            record = {
                "conversation_id": f"conv{i:05d}",
                "messages": [
                    {"role": "user", "text": f"please help with {user_words} today"},
                    {"role": "assistant", "text": f"working on {ai_words} now; {outcome}"},
                ],
            }
            if kind == "thumbs":
                record["thumbs"] = "up" if i % 5 < 3 else "down"
            elif i % 4 == 0:
                record["thumbs"] = "up" if i % 8 == 0 else "down"
            fh.write(json.dumps(record))
            fh.write("\n")
