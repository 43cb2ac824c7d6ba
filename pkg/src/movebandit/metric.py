"""Finite metric spaces, covering/packing numbers and the covering/packing complexities.

Balls are closed, ``B_eps(i) = {j : d(i, j) <= eps}``, and covering centers are
restricted to points of the space. Ball memberships are encoded as Python-int
bitmasks so the exact searches stay cheap for k <= 20.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    AsymmetricMatrix,
    BadSpec,
    EntryOutOfRange,
    ExactTooLarge,
    NonzeroDiagonal,
    TriangleViolation,
)

TRIANGLE_TOL = 1e-9
EXACT_MAX_K = 20


@dataclass(frozen=True, eq=False)
class MetricSpace:
    labels: tuple[str, ...]
    dist: np.ndarray
    coords: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.k > 1 else 0.0

    @property
    def min_distance(self) -> float | None:
        """Smallest positive pairwise distance, or None for a single point."""
        pos = self.dist[self.dist > 0]
        return float(pos.min()) if pos.size else None

    def distances(self) -> np.ndarray:
        """Sorted distinct positive pairwise distances."""
        iu = np.triu_indices(self.k, 1)
        vals = self.dist[iu]
        return np.unique(vals[vals > 0])

    def __eq__(self, other):
        if not isinstance(other, MetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)


def validate_metric(
    matrix, labels: Sequence[str] | None = None, normalize: bool = False
) -> MetricSpace:
    d = np.array(matrix, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
        raise BadSpec(f"distance matrix must be square and non-empty, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise EntryOutOfRange("distance matrix has non-finite entries")
    k = d.shape[0]
    if labels is None:
        labels = [str(i) for i in range(k)]
    labels = tuple(str(s) for s in labels)
    if len(labels) != k:
        raise BadSpec(f"{len(labels)} labels for a {k}x{k} matrix")

    diag = np.flatnonzero(np.diag(d) != 0)
    if diag.size:
        raise NonzeroDiagonal(f"dist({diag[0]},{diag[0]}) = {d[diag[0], diag[0]]:g}")
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise EntryOutOfRange(f"negative distance at ({i},{j})")
    asym = np.argwhere(d != d.T)
    if asym.size:
        i, j = asym[0]
        raise AsymmetricMatrix(f"dist({i},{j}) = {d[i, j]:g} != dist({j},{i}) = {d[j, i]:g}")
    if normalize and k > 1 and d.max() > 0:
        d = d / d.max()
    if d.max() > 1.0:
        i, j = np.argwhere(d > 1.0)[0]
        raise EntryOutOfRange(f"dist({i},{j}) = {d[i, j]:g} exceeds 1 (diameter must be <= 1)")

    for l in range(k):
        via = d[:, [l]] + d[[l], :]
        bad = np.argwhere(d > via + TRIANGLE_TOL)
        if bad.size:
            i, j = bad[0]
            raise TriangleViolation(int(i), int(j), l, d[i, j], via[i, j])

    d.setflags(write=False)
    return MetricSpace(labels, d)


# -- metric families ---------------------------------------------------------

def uniform_metric(k: int) -> MetricSpace:
    d = np.ones((k, k)) - np.eye(k)
    return validate_metric(d)


def grid1d(k: int) -> MetricSpace:
    x = np.linspace(0.0, 1.0, k) if k > 1 else np.zeros(1)
    return points_metric(x[:, None])


def grid_linf(d: int, m: int) -> MetricSpace:
    axis = np.linspace(0.0, 1.0, m) if m > 1 else np.zeros(1)
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return points_metric(pts)


def points_metric(points: np.ndarray, labels: Sequence[str] | None = None) -> MetricSpace:
    """Max-norm metric over coordinate points (rows)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=-1)
    if labels is None:
        labels = [",".join(f"{v:g}" for v in p) for p in pts]
    m = validate_metric(d, labels)
    pts = pts.copy()
    pts.setflags(write=False)
    return MetricSpace(m.labels, m.dist, pts)


def random_metric(k: int, seed: int) -> MetricSpace:
    """Random symmetric weights in [0.1, 1] closed under shortest paths."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 1.0, size=(k, k))
    d = np.triu(w, 1)
    d = d + d.T
    for l in range(k):
        d = np.minimum(d, d[:, [l]] + d[[l], :])
    return validate_metric(d)


def parse_metric_spec(spec: str) -> tuple[str, list[int]]:
    name, _, rest = spec.partition(":")
    try:
        args = [int(a) for a in rest.split(",")] if rest else []
    except ValueError:
        raise BadSpec(f"bad metric spec {spec!r}") from None
    return name, args


def make_metric(spec) -> MetricSpace:
    """Build a metric from ``uniform:k``, ``grid1d:k``, ``gridLinf:d,m`` or ``random:k,seed``.

    A ``(name, *args)`` tuple is accepted as well.
    """
    if isinstance(spec, str):
        name, args = parse_metric_spec(spec)
    else:
        name, args = spec[0], list(spec[1:])
    arity = {"uniform": 1, "grid1d": 1, "gridLinf": 2, "random": 2}
    if name not in arity or len(args) != arity[name]:
        raise BadSpec(f"unknown metric spec {spec!r}; expected one of "
                      "uniform:k, grid1d:k, gridLinf:d,m, random:k,seed")
    if args[0] < 1 or (name == "gridLinf" and args[1] < 1):
        raise BadSpec(f"sizes must be positive in {spec!r}")
    if name == "uniform":
        return uniform_metric(args[0])
    if name == "grid1d":
        return grid1d(args[0])
    if name == "gridLinf":
        return grid_linf(args[0], args[1])
    return random_metric(args[0], args[1])


def load_metric_csv(path: str | Path, normalize: bool = False) -> MetricSpace:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise BadSpec(f"{path}: empty metric file")
    labels, body = rows[0], rows[1:]
    if len(rows) == len(rows[0]):  # no label row: a bare square matrix
        labels, body = None, rows
    try:
        matrix = [[float(v) for v in r] for r in body]
    except ValueError as exc:
        raise BadSpec(f"{path}: {exc}") from None
    n = len(matrix) if labels is None else len(labels)
    if len(matrix) != n or any(len(r) != n for r in matrix):
        raise BadSpec(f"{path}: expected {n} rows of {n} values")
    return validate_metric(matrix, labels, normalize=normalize)


def save_metric_csv(metric: MetricSpace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(metric.labels)
        for row in metric.dist:
            w.writerow([repr(float(v)) for v in row])


# -- covering and packing ----------------------------------------------------

def ball_masks(metric: MetricSpace, eps: float) -> list[int]:
    within = metric.dist <= eps
    return [int(sum(1 << int(j) for j in np.flatnonzero(row))) for row in within]


def _check_mode(metric: MetricSpace, mode: str) -> str:
    if mode == "auto":
        return "exact" if metric.k <= EXACT_MAX_K else "greedy"
    if mode not in ("exact", "greedy"):
        raise BadSpec(f"mode must be exact, greedy or auto, got {mode!r}")
    if mode == "exact" and metric.k > EXACT_MAX_K:
        raise ExactTooLarge(f"exact mode supports k <= {EXACT_MAX_K}, got k = {metric.k}")
    return mode


def greedy_cover(balls: Sequence[int], universe: int | None = None) -> list[int]:
    """Greedy set cover: repeatedly take the ball with the largest uncovered gain.

    Ties go to the lowest index, so the result is deterministic.
    """
    uncovered = (1 << len(balls)) - 1 if universe is None else universe
    chosen = []
    while uncovered:
        best, gain = -1, 0
        for c, b in enumerate(balls):
            g = (b & uncovered).bit_count()
            if g > gain:
                best, gain = c, g
        chosen.append(best)
        uncovered &= ~balls[best]
    return chosen


def _exact_cover_size(balls: list[int]) -> int:
    k = len(balls)
    full = (1 << k) - 1
    best = len(greedy_cover(balls))
    covers_of = [[c for c in range(k) if balls[c] >> e & 1] for e in range(k)]
    for e in range(k):
        covers_of[e].sort(key=lambda c: -balls[c].bit_count())
    max_gain = max(b.bit_count() for b in balls)

    def search(uncovered: int, used: int) -> None:
        nonlocal best
        if not uncovered:
            best = min(best, used)
            return
        if used + -(-uncovered.bit_count() // max_gain) >= best:
            return
        e = (uncovered & -uncovered).bit_length() - 1
        for c in covers_of[e]:
            search(uncovered & ~balls[c], used + 1)

    search(full, 0)
    return best


def _greedy_packing(balls: list[int]) -> list[int]:
    taken, union = [], 0
    for i, b in enumerate(balls):
        if not b & union:
            taken.append(i)
            union |= b
    return taken


def _exact_packing_size(balls: list[int]) -> int:
    k = len(balls)
    conflict = [sum(1 << j for j in range(k) if balls[i] & balls[j]) for i in range(k)]
    best = len(_greedy_packing(balls))

    def search(cand: int, size: int) -> None:
        nonlocal best
        if size + cand.bit_count() <= best:
            return
        if not cand:
            best = size
            return
        v = (cand & -cand).bit_length() - 1
        search(cand & ~conflict[v], size + 1)
        search(cand & ~(1 << v), size)

    search((1 << k) - 1, 0)
    return best


def covering_number(metric: MetricSpace, eps: float, mode: str = "exact") -> int:
    if eps <= 0:
        raise BadSpec("eps must be positive")
    mode = _check_mode(metric, mode)
    balls = ball_masks(metric, eps)
    if mode == "greedy":
        return len(greedy_cover(balls))
    return _exact_cover_size(balls)


def packing_number(metric: MetricSpace, eps: float, mode: str = "exact") -> int:
    if eps <= 0:
        raise BadSpec("eps must be positive")
    mode = _check_mode(metric, mode)
    balls = ball_masks(metric, eps)
    if mode == "greedy":
        return len(_greedy_packing(balls))
    return _exact_packing_size(balls)


# -- complexities ------------------------------------------------------------

def _intervals(metric: MetricSpace) -> list[tuple[float, float]]:
    """Maximal intervals (a, b) of (0, 1) on which ball memberships are constant.

    The counting functions only jump at pairwise distances, and are constant on
    [a, b) because balls are closed. The first interval is open at 0; its
    counting value is read at its midpoint.
    """
    jumps = [float(x) for x in metric.distances() if x < 1.0]
    edges = [0.0] + jumps + [1.0]
    return list(zip(edges[:-1], edges[1:]))


def _step_sup(metric: MetricSpace, count) -> float:
    best = 0.0
    for a, b in _intervals(metric):
        n = count(a if a > 0 else b / 2)
        best = max(best, b * n)
    return best


def covering_complexity(metric: MetricSpace, mode: str = "auto") -> float:
    """sup over 0 < eps < 1 of eps * N^c_eps (the supremum value, generally not attained)."""
    mode = _check_mode(metric, mode)
    return _step_sup(metric, lambda e: covering_number(metric, e, mode))


def packing_complexity(metric: MetricSpace, mode: str = "auto") -> float:
    mode = _check_mode(metric, mode)
    return _step_sup(metric, lambda e: packing_number(metric, e, mode))


@dataclass(frozen=True)
class ComplexityReport:
    breakpoints: tuple[float, ...]
    cover_nums: tuple[int, ...]
    pack_nums: tuple[int, ...]
    cover_complexity: float
    pack_complexity: float
    mode: str

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "cover_complexity": self.cover_complexity,
            "pack_complexity": self.pack_complexity,
            "table": [
                {"eps": e, "cover": c, "pack": p}
                for e, c, p in zip(self.breakpoints, self.cover_nums, self.pack_nums)
            ],
        }


def breakpoints(metric: MetricSpace) -> list[float]:
    """Pairwise distances plus dyadic radii 2^-1, 2^-2, ... down to below the smallest distance."""
    pts = {float(x) for x in metric.distances()}
    floor = metric.min_distance or 1.0
    h = 1
    while True:
        r = 2.0 ** -h
        pts.add(r)
        if r < floor:
            break
        h += 1
    return sorted(pts)


def complexity_report(metric: MetricSpace, mode: str = "auto") -> ComplexityReport:
    mode = _check_mode(metric, mode)
    bps = breakpoints(metric)
    cover = tuple(covering_number(metric, e, mode) for e in bps)
    pack = tuple(packing_number(metric, e, mode) for e in bps)
    return ComplexityReport(
        breakpoints=tuple(bps),
        cover_nums=cover,
        pack_nums=pack,
        cover_complexity=covering_complexity(metric, mode),
        pack_complexity=packing_complexity(metric, mode),
        mode=mode,
    )


def greedy_ratio_bound(k: int) -> float:
    """Approximation factor of greedy set cover, 1 + ln k."""
    return 1.0 + math.log(k)
