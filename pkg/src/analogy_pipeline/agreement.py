"""Agreement statistics between raters (human annotators and the judge).

Kernels: Krippendorff's alpha for ordinal ratings with missing values,
Kendall's W for ranking concordance (chi-square p-value, exact permutation
p-value for small item counts), Spearman's rho, and average-linkage
hierarchical clustering of raters over correlation distance 1 - rho.
"""

from __future__ import annotations

import csv
import itertools
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import UndefinedStatisticError


@dataclass(frozen=True)
class RatingMatrix:
    """Raters x items grid of ordinal ratings; None marks a missing cell."""

    raters: tuple[str, ...]
    items: tuple[str, ...]
    values: tuple[tuple[int | None, ...], ...]
    scale: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if len(self.values) != len(self.raters):
            raise ValueError("one value row per rater required")
        for row in self.values:
            if len(row) != len(self.items):
                raise ValueError("every row must cover all items")
            for v in row:
                if v is not None and v not in self.scale:
                    raise ValueError(f"rating {v!r} outside scale {self.scale}")

    def item_values(self, j: int) -> list[int]:
        return [row[j] for row in self.values if row[j] is not None]


@dataclass(frozen=True)
class RankMatrix:
    """Raters x items grid of rankings; every row is a permutation of 1..m."""

    raters: tuple[str, ...]
    items: tuple[str, ...]
    ranks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.ranks) != len(self.raters):
            raise ValueError("one rank row per rater required")
        m = len(self.items)
        expected = set(range(1, m + 1))
        for rater, row in zip(self.raters, self.ranks):
            if set(row) != expected or len(row) != m:
                raise ValueError(f"row for rater {rater!r} is not a permutation of 1..{m}")


def _ordinal_delta2(counts: dict[int, int], levels: list[int]):
    """Squared ordinal distance between value levels, from margin counts."""
    index = {v: i for i, v in enumerate(levels)}

    def delta2(c: int, k: int) -> float:
        if c == k:
            return 0.0
        lo, hi = sorted((index[c], index[k]))
        between = sum(counts[levels[g]] for g in range(lo + 1, hi))
        return (counts[c] / 2.0 + between + counts[k] / 2.0) ** 2

    return delta2


def krippendorff_alpha_ordinal(m: RatingMatrix, metric: str = "ordinal") -> float:
    """Krippendorff's alpha with ordinal distance (interval via ``metric``).

    Missing values are excluded pairwise: only items rated by at least two
    raters contribute. Zero expected disagreement (all co-ratings identical)
    defines alpha as 1.0; no co-rated items at all is an error.
    """
    if metric not in ("ordinal", "interval"):
        raise ValueError(f"unknown metric {metric!r}")
    if len(m.raters) < 2:
        raise UndefinedStatisticError("alpha needs at least 2 raters")
    units = [m.item_values(j) for j in range(len(m.items))]
    units = [u for u in units if len(u) >= 2]
    if not units:
        raise UndefinedStatisticError("alpha is undefined without co-rated items")

    counts = Counter(v for u in units for v in u)
    n = sum(counts.values())
    levels = sorted(counts)
    if metric == "ordinal":
        delta2 = _ordinal_delta2(counts, levels)
    else:
        def delta2(c: int, k: int) -> float:
            return float((c - k) ** 2)

    observed = 0.0
    for u in units:
        pair_sum = sum(delta2(a, b) for a, b in itertools.permutations(u, 2))
        observed += pair_sum / (len(u) - 1)
    observed /= n

    expected = 0.0
    for c in levels:
        for k in levels:
            if c != k:
                expected += counts[c] * counts[k] * delta2(c, k)
    expected /= n * (n - 1)

    if expected == 0.0:
        return 1.0
    return 1.0 - observed / expected


def kendall_w(m: RankMatrix) -> tuple[float, float]:
    """Kendall's coefficient of concordance with a chi-square p-value.

    W = 12 S / (k^2 (m^3 - m)) for k raters and m items, where S is the sum
    of squared deviations of item rank sums from their mean; the p-value uses
    the chi-square approximation chi2 = k (m - 1) W with m - 1 degrees of
    freedom.
    """
    k, n_items = len(m.raters), len(m.items)
    if k < 2 or n_items < 2:
        raise ValueError("Kendall's W needs at least 2 raters and 2 items")
    sums = np.array(m.ranks, dtype=float).sum(axis=0)
    s = float(((sums - k * (n_items + 1) / 2.0) ** 2).sum())
    w = 12.0 * s / (k * k * (n_items**3 - n_items))
    chi2 = k * (n_items - 1) * w
    p = float(stats.chi2.sf(chi2, n_items - 1))
    return w, p


def kendall_w_exact_p(m: RankMatrix) -> float:
    """Exact permutation p-value for W, feasible for m <= 4 items.

    Enumerates the distribution of the rank-sum statistic S by dynamic
    programming over all (m!)^k equally likely rank assignments and returns
    P(S >= S_observed).
    """
    k, n_items = len(m.raters), len(m.items)
    if n_items > 4:
        raise ValueError("exact p-value supported only for m <= 4 items")
    sums = np.array(m.ranks, dtype=float).sum(axis=0)
    s_obs = float(((sums - k * (n_items + 1) / 2.0) ** 2).sum())

    perms = list(itertools.permutations(range(1, n_items + 1)))
    dist: dict[tuple[int, ...], int] = {(0,) * n_items: 1}
    for _ in range(k):
        nxt: dict[tuple[int, ...], int] = {}
        for state, count in dist.items():
            for perm in perms:
                key = tuple(a + b for a, b in zip(state, perm))
                nxt[key] = nxt.get(key, 0) + count
        dist = nxt
    mean = k * (n_items + 1) / 2.0
    total = len(perms) ** k
    at_least = sum(
        count
        for state, count in dist.items()
        if sum((x - mean) ** 2 for x in state) >= s_obs - 1e-9
    )
    return at_least / total


def spearman_rho(x: list[float], y: list[float]) -> tuple[float, float]:
    """Spearman rank correlation with the t-distribution p-value.

    Average ranks are assigned to ties; constant input is an error because
    rank correlation is undefined without rank variance.
    """
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")
    if len(set(x)) < 2 or len(set(y)) < 2:
        raise UndefinedStatisticError("rank correlation undefined for constant input")
    rho, p = stats.spearmanr(x, y)
    return float(rho), float(p)


@dataclass(frozen=True)
class LinkageMerge:
    """One agglomerative merge: member index groups and the merge height."""

    left: tuple[int, ...]
    right: tuple[int, ...]
    height: float


def cluster_raters(corr) -> list[LinkageMerge]:
    """Average-linkage clustering over distance 1 - rho.

    ``corr`` is a square symmetric correlation matrix with unit diagonal.
    Ties between candidate merges break on the earliest cluster pair in
    creation order, making the merge sequence deterministic.
    """
    matrix = np.asarray(corr, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("correlation matrix must be square")
    if matrix.shape[0] < 2:
        raise ValueError("clustering needs at least 2 raters")
    if not np.allclose(matrix, matrix.T, atol=1e-9):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(matrix), 1.0, atol=1e-9):
        raise ValueError("correlation matrix must have a unit diagonal")

    distance = 1.0 - matrix
    clusters: list[tuple[int, ...]] = [(i,) for i in range(matrix.shape[0])]
    dist: dict[tuple[int, int], float] = {}
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            dist[(i, j)] = float(distance[i, j])
    sizes = {i: 1 for i in range(len(clusters))}
    active = list(range(len(clusters)))
    merges: list[LinkageMerge] = []
    next_id = len(clusters)
    members = {i: clusters[i] for i in active}

    while len(active) > 1:
        best: tuple[int, int] | None = None
        best_d = None
        for a_pos in range(len(active)):
            for b_pos in range(a_pos + 1, len(active)):
                a, b = active[a_pos], active[b_pos]
                d = dist[(min(a, b), max(a, b))]
                if best_d is None or d < best_d:
                    best_d = d
                    best = (a, b)
        a, b = best
        merges.append(
            LinkageMerge(
                left=tuple(sorted(members[a])),
                right=tuple(sorted(members[b])),
                height=float(best_d),
            )
        )
        new_members = tuple(sorted(members[a] + members[b]))
        for other in active:
            if other in (a, b):
                continue
            da = dist[(min(a, other), max(a, other))]
            db = dist[(min(b, other), max(b, other))]
            merged = (sizes[a] * da + sizes[b] * db) / (sizes[a] + sizes[b])
            dist[(min(next_id, other), max(next_id, other))] = merged
        sizes[next_id] = sizes[a] + sizes[b]
        members[next_id] = new_members
        active = [c for c in active if c not in (a, b)] + [next_id]
        next_id += 1
    return merges


def rating_matrix_from_dict(data: dict) -> RatingMatrix:
    return RatingMatrix(
        raters=tuple(data["raters"]),
        items=tuple(data["items"]),
        values=tuple(
            tuple(None if v is None else int(v) for v in row) for row in data["values"]
        ),
        scale=tuple(data.get("scale", (1, 2, 3))),
    )


def rank_matrix_from_dict(data: dict) -> RankMatrix:
    return RankMatrix(
        raters=tuple(data["raters"]),
        items=tuple(data["items"]),
        ranks=tuple(tuple(int(v) for v in row) for row in data["ranks"]),
    )


def matrices_from_export(export: dict) -> tuple[dict[str, RatingMatrix], dict[str, RankMatrix]]:
    """Parse the annotation service's export JSON into kernel inputs."""
    ratings = {
        dim: rating_matrix_from_dict(payload) for dim, payload in export["ratings"].items()
    }
    rankings = {
        task: rank_matrix_from_dict(payload) for task, payload in export["rankings"].items()
    }
    return ratings, rankings


def load_ratings_csv(path: str | Path) -> dict[str, RatingMatrix]:
    """Long-format ratings CSV: annotator_id,item_id,<dimension columns...>."""
    rows = list(csv.DictReader(Path(path).open(encoding="utf-8", newline="")))
    if not rows:
        raise ValueError(f"{path}: no rating rows")
    dims = [c for c in rows[0].keys() if c not in ("annotator_id", "item_id")]
    raters = sorted({r["annotator_id"] for r in rows})
    items = sorted({r["item_id"] for r in rows})
    cells: dict[str, dict[tuple[str, str], int]] = {d: {} for d in dims}
    for r in rows:
        for d in dims:
            if r[d] != "":
                cells[d][(r["annotator_id"], r["item_id"])] = int(r[d])
    return {
        d: RatingMatrix(
            raters=tuple(raters),
            items=tuple(items),
            values=tuple(
                tuple(cells[d].get((rater, item)) for item in items) for rater in raters
            ),
        )
        for d in dims
    }


def load_rankings_csv(path: str | Path) -> dict[str, RankMatrix]:
    """Long-format rankings CSV: annotator_id,group_id,item_id,rank."""
    rows = list(csv.DictReader(Path(path).open(encoding="utf-8", newline="")))
    if not rows:
        raise ValueError(f"{path}: no ranking rows")
    groups: dict[str, dict[str, dict[str, int]]] = {}
    for r in rows:
        groups.setdefault(r["group_id"], {}).setdefault(r["annotator_id"], {})[
            r["item_id"]
        ] = int(r["rank"])
    out = {}
    for group, per_rater in sorted(groups.items()):
        items = tuple(sorted(next(iter(per_rater.values())).keys()))
        raters = tuple(sorted(per_rater))
        ranks = tuple(tuple(per_rater[rater][item] for item in items) for rater in raters)
        out[group] = RankMatrix(raters=raters, items=items, ranks=ranks)
    return out


def summary_report(
    ratings: dict[str, RatingMatrix],
    rankings: dict[str, RankMatrix],
    exact_p_max_items: int = 0,
) -> dict:
    """Stats JSON: alpha per dimension, W+p per ranking group, pairwise rho,
    and the rater linkage computed from average-score correlations.

    The p-value methods (chi-square for W, t-distribution for rho) are
    approximations and are named in the output metadata.
    """
    report: dict = {
        "method_notes": {
            "alpha": "krippendorff ordinal, pairwise deletion",
            "w_p_value": "chi-square approximation",
            "rho_p_value": "t-distribution approximation",
            "linkage": "average linkage on 1 - rho",
        }
    }
    report["alpha"] = {
        dim: krippendorff_alpha_ordinal(matrix) for dim, matrix in sorted(ratings.items())
    }
    w_block = {}
    for group, matrix in sorted(rankings.items()):
        w, p = kendall_w(matrix)
        entry = {"w": w, "p_value": p, "n_raters": len(matrix.raters)}
        if 0 < len(matrix.items) <= exact_p_max_items:
            entry["exact_p_value"] = kendall_w_exact_p(matrix)
        w_block[group] = entry
    report["kendall_w"] = w_block
    report.update(_rho_and_linkage(ratings))
    return report


def _rho_and_linkage(ratings: dict[str, RatingMatrix]) -> dict:
    """Pairwise Spearman rho on per-item average scores, plus rater linkage."""
    if not ratings:
        return {"spearman_rho": {}, "linkage": []}
    first = next(iter(ratings.values()))
    raters, items = first.raters, first.items
    avg: dict[str, dict[str, float]] = {}
    for rater_idx, rater in enumerate(raters):
        scores: dict[str, float] = {}
        for item_idx, item in enumerate(items):
            cell = [m.values[rater_idx][item_idx] for m in ratings.values()]
            if all(v is not None for v in cell):
                scores[item] = sum(cell) / len(cell)
        avg[rater] = scores

    rho_block: dict[str, dict] = {}
    corr = np.eye(len(raters))
    usable = True
    for i, a in enumerate(raters):
        for j, b in enumerate(raters):
            if j <= i:
                continue
            shared = sorted(set(avg[a]) & set(avg[b]))
            key = f"{a}|{b}"
            if len(shared) < 3:
                rho_block[key] = {"rho": None, "p_value": None, "n_items": len(shared)}
                usable = False
                continue
            xs = [avg[a][s] for s in shared]
            ys = [avg[b][s] for s in shared]
            try:
                rho, p = spearman_rho(xs, ys)
            except UndefinedStatisticError:
                rho_block[key] = {"rho": None, "p_value": None, "n_items": len(shared)}
                usable = False
                continue
            rho_block[key] = {"rho": rho, "p_value": p, "n_items": len(shared)}
            corr[i, j] = corr[j, i] = rho
    out: dict = {"spearman_rho": rho_block, "linkage": []}
    if usable and len(raters) >= 2:
        out["linkage"] = [
            {
                "left": [raters[i] for i in merge.left],
                "right": [raters[i] for i in merge.right],
                "height": merge.height,
            }
            for merge in cluster_raters(corr)
        ]
    return out
