"""Naive, independent recomputations used to cross-check the pipeline.

Everything here is deliberately written as plain dict-and-loop Python with
no numpy and no imports from the package's aggregation internals, so a
disagreement points at a real defect rather than shared code.
"""

from __future__ import annotations

SCOPE_ORDER = ["none", "minimal", "limited", "moderate", "significant", "complete"]


def oracle_activity_shares(label_dicts: list[dict], side_key: str) -> dict[str, float]:
    """Brute-force tally over serialized labels (side_key is
    'user_matches' or 'ai_matches')."""
    mass: dict[str, float] = {}
    matched = 0
    for conv in label_dicts:
        ids = sorted({iwa for iwa, _scope in conv[side_key]})
        if not ids:
            continue
        matched += 1
        for iwa in ids:
            mass[iwa] = mass.get(iwa, 0.0) + 1.0 / len(ids)
    return {iwa: mass[iwa] / matched for iwa in mass} if matched else {}


def oracle_completion_rate(
    label_dicts: list[dict], side_key: str, iwa: str, half_credit: bool = False
) -> float | None:
    total = 0
    credit = 0.0
    for conv in label_dicts:
        if any(i == iwa for i, _ in conv[side_key]):
            total += 1
            value = conv["completion"]["value"]
            if value == "complete":
                credit += 1.0
            elif value == "partially_complete" and half_credit:
                credit += 0.5
    return credit / total if total else None


def oracle_scope_rate(label_dicts: list[dict], side_key: str, iwa: str) -> float | None:
    total = 0
    hits = 0
    moderate = SCOPE_ORDER.index("moderate")
    for conv in label_dicts:
        for i, scope in conv[side_key]:
            if i == iwa:
                total += 1
                if SCOPE_ORDER.index(scope) >= moderate:
                    hits += 1
                break
    return hits / total if total else None


def oracle_feedback_share(label_dicts: list[dict], side_key: str, iwa: str) -> float | None:
    up = 0
    total = 0
    for conv in label_dicts:
        if conv.get("thumbs") is None:
            continue
        if any(i == iwa for i, _ in conv[side_key]):
            total += 1
            up += 1 if conv["thumbs"] == "up" else 0
    return up / total if total else None


def oracle_applicability(
    weights: dict[str, float],
    f: dict[str, float],
    c: dict[str, float],
    s: dict[str, float],
    threshold: float,
) -> float:
    """Naive single-side score: sum of w * indicator * c * s."""
    total = 0.0
    for iwa, w in weights.items():
        share = f.get(iwa, 0.0)
        if share >= threshold:
            total += w * c.get(iwa, 0.0) * s.get(iwa, 0.0)
    return total


def oracle_scores(
    weights_by_soc: dict[str, dict[str, float]],
    f_user: dict[str, float],
    c_user: dict[str, float],
    s_user: dict[str, float],
    f_ai: dict[str, float],
    c_ai: dict[str, float],
    s_ai: dict[str, float],
    threshold: float,
) -> dict[str, tuple[float, float, float]]:
    """Per-SOC (a_user, a_ai, a) via the naive triple loop."""
    out = {}
    for soc, weights in weights_by_soc.items():
        a_user = oracle_applicability(weights, f_user, c_user, s_user, threshold)
        a_ai = oracle_applicability(weights, f_ai, c_ai, s_ai, threshold)
        out[soc] = (a_user, a_ai, (a_user + a_ai) / 2.0)
    return out


def oracle_kappa(pairs: list[tuple[bool, bool]]) -> float | None:
    """Cohen's kappa from raw paired binary decisions."""
    n = len(pairs)
    both_yes = sum(1 for a, b in pairs if a and b)
    both_no = sum(1 for a, b in pairs if not a and not b)
    a_yes = sum(1 for a, _ in pairs if a) / n
    b_yes = sum(1 for _, b in pairs if b) / n
    p_o = (both_yes + both_no) / n
    p_e = a_yes * b_yes + (1 - a_yes) * (1 - b_yes)
    if p_e == 1.0:
        return None
    return (p_o - p_e) / (1.0 - p_e)


def oracle_weighted_pearson(x: list[float], y: list[float], w: list[float]) -> float:
    sw = sum(w)
    mx = sum(wi * xi for wi, xi in zip(w, x)) / sw
    my = sum(wi * yi for wi, yi in zip(w, y)) / sw
    cov = sum(wi * (xi - mx) * (yi - my) for wi, xi, yi in zip(w, x, y))
    vx = sum(wi * (xi - mx) ** 2 for wi, xi in zip(w, x))
    vy = sum(wi * (yi - my) ** 2 for wi, yi in zip(w, y))
    return cov / (vx * vy) ** 0.5


def oracle_weighted_ttest(
    x_a: list[float], w_a: list[float], x_b: list[float], w_b: list[float]
) -> tuple[float, float]:
    """(t statistic, Welch df) by direct formula evaluation."""
    n_a = sum(w_a)
    n_b = sum(w_b)
    m_a = sum(w * x for w, x in zip(w_a, x_a)) / n_a
    m_b = sum(w * x for w, x in zip(w_b, x_b)) / n_b
    var_a = sum(w * (x - m_a) ** 2 for w, x in zip(w_a, x_a)) / (n_a - 1)
    var_b = sum(w * (x - m_b) ** 2 for w, x in zip(w_b, x_b)) / (n_b - 1)
    se2_a = var_a / n_a
    se2_b = var_b / n_b
    t = (m_a - m_b) / (se2_a + se2_b) ** 0.5
    df = (se2_a + se2_b) ** 2 / (se2_a**2 / (n_a - 1) + se2_b**2 / (n_b - 1))
    return t, df


def oracle_depth_matrix(
    weights_by_soc: dict[str, dict[str, float]],
    shares: dict[str, float],
    employment: dict[str, int],
    thresholds: list[float],
    depths: list[float],
) -> list[list[float]]:
    """Hand-enumerated worker shares: for each (threshold, depth), walk
    every occupation and check its covered weight mass."""
    total = sum(employment.values())
    matrix = []
    for t in thresholds:
        row = []
        for depth in depths:
            covered_employment = 0
            for soc, weights in weights_by_soc.items():
                if soc not in employment:
                    continue
                covered = sum(w for iwa, w in weights.items() if shares.get(iwa, 0.0) >= t)
                if covered >= depth:
                    covered_employment += employment[soc]
            row.append(covered_employment / total)
        matrix.append(row)
    return matrix
