"""Rank correlation between tuple distributions and related scores."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .distribution import TupleDistribution, all_tuples, tuple_str, uniform_distribution
from .errors import EmptyDistributionError, KMismatchError, UndefinedCorrelationError

TIE_POLICIES = ("fractional", "paper")
STRONG = "‡"  # p <= 0.01
WEAK = "†"  # 0.01 < p <= 0.10


def strict_ranks(values) -> np.ndarray:
    """Ranks 1..n by value descending, ties broken by position ascending."""
    values = np.asarray(values, dtype=float)
    order = np.lexsort((np.arange(values.size), -values))
    ranks = np.empty(values.size, dtype=float)
    ranks[order] = np.arange(1, values.size + 1)
    return ranks


def average_ranks(values) -> np.ndarray:
    """Ranks by value descending, tied values sharing their mean rank."""
    values = np.asarray(values, dtype=float)
    n = values.size
    order = np.argsort(-values, kind="stable")
    v = values[order]
    starts = np.flatnonzero(np.concatenate(([True], v[1:] != v[:-1])))
    ends = np.concatenate((starts[1:], [n]))
    # ranks starts+1 .. ends average to (starts + 1 + ends) / 2
    group_rank = (starts + 1 + ends) / 2.0
    ranks = np.empty(n, dtype=float)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def rank_vector(values, tie_policy: str) -> np.ndarray:
    if tie_policy == "paper":
        return strict_ranks(values)
    if tie_policy == "fractional":
        return average_ranks(values)
    raise ValueError(f"tie_policy must be one of {TIE_POLICIES}, not {tie_policy!r}")


@dataclass(frozen=True)
class PairedRanking:
    """Two distributions laid over the full lexicographic universe of 2**k tuples."""

    k: int
    x: np.ndarray
    y: np.ndarray
    tie_policy: str = "fractional"

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def tuples(self) -> list[str]:
        return all_tuples(self.k)

    @property
    def rank_x(self) -> np.ndarray:
        return rank_vector(self.x, self.tie_policy)

    @property
    def rank_y(self) -> np.ndarray:
        return rank_vector(self.y, self.tie_policy)


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int
    tie_policy: str
    permutations: int
    seed: int

    @property
    def marker(self) -> str:
        return significance_marker(self.p_value)

    def to_dict(self):
        d = asdict(self)
        d["marker"] = self.marker
        return d


def significance_marker(p: float) -> str:
    if p <= 0.01:
        return STRONG
    if p <= 0.10:
        return WEAK
    return ""


def join(d1: TupleDistribution, d2: TupleDistribution, tie_policy: str = "fractional") -> PairedRanking:
    if d1.k != d2.k:
        raise KMismatchError(f"cannot join k={d1.k} with k={d2.k}")
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"tie_policy must be one of {TIE_POLICIES}")
    return PairedRanking(d1.k, d1.probabilities(), d2.probabilities(), tie_policy)


def _rho_from_ranks(rx, ry, tie_policy):
    n = rx.size
    if n < 2:
        raise ValueError("need at least 2 pairs")
    if tie_policy == "paper":
        d = rx - ry
        return 1.0 - 6.0 * float(d @ d) / (n * (n * n - 1.0))
    xc = rx - rx.mean()
    yc = ry - ry.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("a rank vector is constant; rho is undefined")
    return float(xc @ yc) / np.sqrt(sxx * syy)


def spearman(p: PairedRanking) -> float:
    """Spearman's rho.

    ``paper`` policy: strict ranks (ties broken lexicographically) plugged
    into ``1 - 6 sum d^2 / (n (n^2 - 1))``.  ``fractional`` policy: Pearson
    correlation of average ranks, exact in the presence of ties.
    """
    return _rho_from_ranks(p.rank_x, p.rank_y, p.tie_policy)


def spearman_values(x, y, tie_policy: str = "fractional") -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y differ in length")
    return _rho_from_ranks(rank_vector(x, tie_policy), rank_vector(y, tie_policy), tie_policy)


def _block_count(rx, ry, rho_obs, tie_policy, seed, block_index, size):
    rng = np.random.default_rng([seed, block_index])
    perms = rng.permuted(np.broadcast_to(ry, (size, ry.size)), axis=1)
    n = rx.size
    if tie_policy == "paper":
        d = perms - rx
        rhos = 1.0 - 6.0 * np.einsum("ij,ij->i", d, d) / (n * (n * n - 1.0))
    else:
        # shuffling leaves the mean and spread of y unchanged
        xc = rx - rx.mean()
        yc = ry - ry.mean()
        rhos = ((perms - ry.mean()) @ xc) / np.sqrt(float(xc @ xc) * float(yc @ yc))
    return int(np.count_nonzero(np.abs(rhos) >= abs(rho_obs) - 1e-12))


def permutation_test(
    p: PairedRanking,
    rho_obs: float | None = None,
    n_permutations: int = 10000,
    seed: int = 0,
    workers: int | None = None,
) -> float:
    """Two-sided permutation p-value, ``(#{|rho_perm| >= |rho_obs|} + 1) / (N + 1)``.

    The y ranks are shuffled.  Permutations are drawn in fixed blocks, each
    from its own generator seeded with ``(seed, block_index)``, so the value
    does not depend on ``workers``.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    rx, ry = p.rank_x, p.rank_y
    if rho_obs is None:
        rho_obs = _rho_from_ranks(rx, ry, p.tie_policy)
    elif p.tie_policy == "fractional":
        _rho_from_ranks(rx, ry, p.tie_policy)  # raise on zero variance
    block = max(1, min(1024, (1 << 22) // rx.size))
    jobs = [
        (b, min(block, n_permutations - b * block))
        for b in range(-(-n_permutations // block))
    ]

    def run(job):
        return _block_count(rx, ry, rho_obs, p.tie_policy, seed, job[0], job[1])

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(run, jobs))
    else:
        hits = sum(map(run, jobs))
    return (hits + 1) / (n_permutations + 1)


def correlate(d1, d2, tie_policy="fractional", permutations=10000, seed=0, workers=None) -> CorrelationResult:
    p = join(d1, d2, tie_policy)
    rho = spearman(p)
    pv = permutation_test(p, rho, permutations, seed, workers)
    return CorrelationResult(rho, pv, p.n, tie_policy, permutations, seed)


@dataclass
class CorrelationMatrix:
    """Symmetric matrix of correlation results; ``None`` cells are undefined."""

    k: int
    names: list[str]
    cells: list[list[CorrelationResult | None]]
    notes: dict

    def label(self, i, j, digits=2) -> str:
        c = self.cells[i][j]
        if c is None:
            return "n/a"
        return f"{c.rho:.{digits}g}{c.marker}"

    def to_csv(self, digits=2) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"k = {self.k}"] + self.names)
        for i, name in enumerate(self.names):
            w.writerow([name] + [self.label(i, j, digits) for j in range(len(self.names))])
        return buf.getvalue()

    def to_json(self) -> str:
        cells = [[c.to_dict() if c is not None else None for c in row] for row in self.cells]
        doc = {"k": self.k, "names": self.names, "cells": cells, "notes": self.notes}
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_text(self, digits=2) -> str:
        rows = [[f"k = {self.k}"] + self.names]
        for i, name in enumerate(self.names):
            rows.append([name] + [self.label(i, j, digits) for j in range(len(self.names))])
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        return "\n".join(
            " | ".join(cell.ljust(w) for cell, w in zip(r, widths)) for r in rows
        ) + "\n"


def correlation_matrix(dists, tie_policy="fractional", permutations=10000, seed=0, workers=None) -> CorrelationMatrix:
    """All pairwise correlations of named distributions sharing one k.

    ``dists`` is a mapping or a list of ``(name, distribution)`` pairs.  Each
    unordered pair is computed once, with the distributions ordered by name,
    so cell (A, B) equals cell (B, A) whatever the input order.
    """
    items = list(dists.items()) if isinstance(dists, dict) else list(dists)
    names = [n for n, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("distribution names must be unique")
    ks = {d.k for _, d in items}
    if len(ks) != 1:
        raise KMismatchError(f"distributions have different k: {sorted(ks)}")
    m = len(items)
    cells = [[None] * m for _ in range(m)]
    notes = {}
    for i in range(m):
        for j in range(i, m):
            a, b = (i, j) if names[i] <= names[j] else (j, i)
            try:
                res = correlate(items[a][1], items[b][1], tie_policy, permutations, seed, workers)
            except (UndefinedCorrelationError, EmptyDistributionError) as exc:
                notes[f"{names[i]}/{names[j]}"] = str(exc)
                res = None
            cells[i][j] = cells[j][i] = res
    return CorrelationMatrix(ks.pop(), names, cells, notes)


def total_variation(d1: TupleDistribution, d2: TupleDistribution) -> float:
    if d1.k != d2.k:
        raise KMismatchError(f"cannot compare k={d1.k} with k={d2.k}")
    return 0.5 * float(np.abs(d1.probabilities() - d2.probabilities()).sum())


def algorithmicity_score(d, ref, tie_policy="fractional", permutations=10000, seed=0) -> dict:
    """Evidence on whether ``d`` sits closer to ``ref`` than to the uniform distribution.

    Reports rho against the reference with its p-value, and total-variation
    distances to the reference and to uniform.  No composite score.
    """
    if d.k != ref.k:
        raise KMismatchError(f"data has k={d.k}, reference has k={ref.k}")
    report = {"k": d.k, "tie_policy": tie_policy, "permutations": permutations, "seed": seed}
    try:
        res = correlate(d, ref, tie_policy, permutations, seed)
        report.update(rho=res.rho, p_value=res.p_value, marker=res.marker)
    except UndefinedCorrelationError as exc:
        report.update(rho=None, p_value=None, marker="", rho_note=str(exc))
    tv_ref = total_variation(d, ref)
    tv_uni = total_variation(d, uniform_distribution(d.k))
    report.update(
        tv_reference=tv_ref,
        tv_uniform=tv_uni,
        closer_to_reference=tv_ref < tv_uni,
    )
    return report


def rank_series(d: TupleDistribution) -> list[tuple[int, str, float]]:
    """(rank, tuple, probability) over all 2**k tuples, most frequent first."""
    probs = d.probabilities()
    order = np.lexsort((np.arange(probs.size), -probs))
    return [(r + 1, tuple_str(int(c), d.k), float(probs[c])) for r, c in enumerate(order)]


def lexicographic_series(d: TupleDistribution) -> list[tuple[int, str, float]]:
    """(index, tuple, probability) with tuples in lexicographic order."""
    probs = d.probabilities()
    return [(i, tuple_str(i, d.k), float(p)) for i, p in enumerate(probs)]
