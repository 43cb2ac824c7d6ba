"""HST trees, their metric, complexity, construction from a finite metric, and reshaping.

A tree is stored as an ancestor table ``anc`` of shape (H+1, k): ``anc[h, i]``
is the node id of action i's ancestor at level h. Leaves sit at level 0 and
the single root at level H. Node ids are assigned top-down (root = 0) so that
equal trees have equal tables.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ActionMismatch,
    DominanceViolation,
    InvalidTree,
    NonTermination,
    TooShallow,
    UnknownAction,
)
from .metric import MetricSpace, ball_masks, greedy_cover


@dataclass(frozen=True, eq=False)
class HstTree:
    anc: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.k)))

    @property
    def depth(self) -> int:
        return self.anc.shape[0] - 1

    @property
    def k(self) -> int:
        return self.anc.shape[1]

    @property
    def n_nodes(self) -> int:
        return int(self.anc.max()) + 1

    @cached_property
    def level_counts(self) -> np.ndarray:
        return np.array([len(np.unique(row)) for row in self.anc])

    @cached_property
    def lca_level(self) -> np.ndarray:
        same = self.anc[:, :, None] == self.anc[:, None, :]
        return same.argmax(axis=0)

    @cached_property
    def node_level(self) -> np.ndarray:
        lv = np.empty(self.n_nodes, dtype=int)
        for h, row in enumerate(self.anc):
            lv[row] = h
        return lv

    @cached_property
    def parent(self) -> np.ndarray:
        par = np.full(self.n_nodes, -1, dtype=int)
        for h in range(self.depth):
            par[self.anc[h]] = self.anc[h + 1]
        return par

    @cached_property
    def members(self) -> list[np.ndarray]:
        """Leaf (action) indices under every node, indexed by node id."""
        out: list[np.ndarray] = [np.empty(0, dtype=int)] * self.n_nodes
        for row in self.anc:
            order = np.argsort(row, kind="stable")
            nodes, starts = np.unique(row[order], return_index=True)
            for node, part in zip(nodes, np.split(order, starts[1:])):
                out[node] = part
        return out

    def distance_matrix(self) -> np.ndarray:
        d = np.ldexp(1.0, self.lca_level - self.depth)
        np.fill_diagonal(d, 0.0)
        return d

    def subtree(self, i: int, h: int) -> np.ndarray:
        """A_h(i): the actions sharing i's level-h ancestor."""
        return self.members[self.anc[h, i]]

    def __eq__(self, other):
        if not isinstance(other, HstTree):
            return NotImplemented
        return np.array_equal(self.anc, other.anc)

    def __repr__(self):
        return f"HstTree(depth={self.depth}, k={self.k}, levels={self.level_counts.tolist()})"


def from_groups(groups, labels: Sequence[str] = ()) -> HstTree:
    """Build a tree from per-level group labels (rows = levels 0..H, columns = actions).

    Row H must be constant and groups must nest: equal labels at level h imply
    equal labels at level h+1.
    """
    g = np.asarray(groups)
    if g.ndim != 2 or g.shape[0] < 2 or g.shape[1] < 1:
        raise InvalidTree("need at least two levels and one action")
    H, k = g.shape[0] - 1, g.shape[1]
    if len(np.unique(g[H])) != 1:
        raise InvalidTree("top level must be a single root")
    if len(np.unique(g[0])) != k:
        raise InvalidTree("level 0 must hold one leaf per action")
    for h in range(H):
        pairs = np.unique(np.stack([g[h], g[h + 1]]), axis=1)
        if len(np.unique(pairs[0])) != pairs.shape[1]:
            raise InvalidTree(f"level {h} group has two different parents")
    anc = np.empty((H + 1, k), dtype=int)
    next_id = 0
    for h in range(H, -1, -1):
        _, first, inv = np.unique(g[h], return_index=True, return_inverse=True)
        rank = np.argsort(np.argsort(first))
        anc[h] = next_id + rank[inv]
        next_id += len(first)
    anc.setflags(write=False)
    return HstTree(anc, tuple(labels))


# -- tree families -----------------------------------------------------------

def star(k: int) -> HstTree:
    return from_groups([np.arange(k), np.zeros(k, dtype=int)])


def complete_binary(depth: int) -> HstTree:
    k = 2 ** depth
    return from_groups([np.arange(k) >> h for h in range(depth + 1)])


def unary_chain(depth: int) -> HstTree:
    return from_groups(np.zeros((depth + 1, 1), dtype=int))


def random_tree(k: int, depth: int, rng: np.random.Generator) -> HstTree:
    """Random leveled tree: each level merges the groups below into a random number of parents."""
    rows = [np.arange(k)]
    for _ in range(1, depth):
        below = rows[-1]
        n_below = int(below.max()) + 1
        n_up = int(rng.integers(1, n_below + 1))
        assign = rng.integers(0, n_up, size=n_below)
        _, dense = np.unique(assign, return_inverse=True)
        rows.append(dense[below])
    rows.append(np.zeros(k, dtype=int))
    return from_groups(rows)


# -- metric and complexity ---------------------------------------------------

def hst_distance(tree: HstTree, i: int, j: int) -> float:
    for a in (i, j):
        if not 0 <= a < tree.k:
            raise UnknownAction(f"action {a} not in tree with {tree.k} leaves")
    if i == j:
        return 0.0
    return math.ldexp(1.0, int(tree.lca_level[i, j]) - tree.depth)


@dataclass(frozen=True)
class TreeComplexity:
    counts: tuple[int, ...]
    terms: tuple[float, ...]
    value: float


def tree_complexity(tree: HstTree) -> TreeComplexity:
    """max over levels 0 <= h < H of 2^(h-H) * (node count at level h)."""
    H = tree.depth
    counts = tuple(int(c) for c in tree.level_counts[:H])
    terms = tuple(math.ldexp(c, h - H) for h, c in enumerate(counts))
    return TreeComplexity(counts, terms, max(terms))


# -- construction --------------------------------------------------------------

def hst_depth_for(metric: MetricSpace) -> int:
    dmin = metric.min_distance
    if dmin is None:
        return 1
    H = 1
    while math.ldexp(1.0, -H) >= dmin:
        H += 1
    return H


def build_hst(metric: MetricSpace) -> HstTree:
    """Dominating HST from greedy ball covers at radii 2^(l-H), l = 1..H-1.

    Each level-(l-1) center attaches to the lowest-index center of the radius
    2^(l-H) cover whose ball contains it; a root at level H joins everything.
    """
    H = hst_depth_for(metric)
    k = metric.k
    current = np.arange(k)
    rows = [current]
    for ell in range(1, H):
        r = math.ldexp(1.0, ell - H)
        balls = ball_masks(metric, r)
        centers = sorted(greedy_cover(balls))
        parent_of = {}
        for c in np.unique(current):
            parent_of[int(c)] = next(a for a in centers if balls[a] >> int(c) & 1)
        current = np.array([parent_of[int(c)] for c in current])
        rows.append(current)
    rows.append(np.zeros(k, dtype=int))
    tree = from_groups(rows, metric.labels)
    report = verify_dominance(metric, tree)
    if report.violations:
        i, j, d, dt = report.violations[0]
        raise DominanceViolation(f"built tree violates 4*dT >= d at ({i},{j}): {d:g} > 4*{dt:g}")
    return tree


@dataclass(frozen=True)
class DominanceReport:
    violations: list[tuple[int, int, float, float]]
    max_ratio: float
    factor: float

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_dominance(metric: MetricSpace, tree: HstTree, factor: float = 4.0) -> DominanceReport:
    """All pairs with factor * d_T(i, j) < d(i, j), and the largest ratio d / d_T."""
    if metric.k != tree.k:
        raise ActionMismatch(f"metric has {metric.k} points, tree has {tree.k} leaves")
    dt = tree.distance_matrix()
    d = metric.dist
    iu = np.triu_indices(metric.k, 1)
    bad = np.flatnonzero(factor * dt[iu] < d[iu])
    violations = [
        (int(iu[0][b]), int(iu[1][b]), float(d[iu][b]), float(dt[iu][b])) for b in bad
    ]
    ratio = float((d[iu] / dt[iu]).max()) if metric.k > 1 else 0.0
    return DominanceReport(violations, ratio, factor)


# -- reshaping -----------------------------------------------------------------

def deepen(tree: HstTree) -> HstTree:
    """Give every leaf a single child that becomes the new leaf for the same action."""
    rows = np.vstack([np.arange(tree.k), tree.anc])
    return from_groups(rows, tree.labels)


def collapse(tree: HstTree) -> HstTree:
    """Reconnect every leaf to its grandparent, dropping level 1."""
    if tree.depth < 2:
        raise TooShallow(f"collapse needs depth >= 2, got {tree.depth}")
    rows = np.vstack([tree.anc[:1], tree.anc[2:]])
    return from_groups(rows, tree.labels)


@dataclass(frozen=True)
class ConditionReport:
    depth: int
    dim: float
    k: int
    horizon: int
    variant: str
    cond1: bool
    cond2a: bool
    cond2b: bool

    @property
    def well_behaved(self) -> bool:
        return self.cond1 and (self.cond2a or self.cond2b)

    def to_dict(self) -> dict:
        return {
            "H": self.depth, "dim": self.dim, "k": self.k, "horizon": self.horizon,
            "variant": self.variant, "cond1": self.cond1, "cond2a": self.cond2a,
            "cond2b": self.cond2b, "well_behaved": self.well_behaved,
        }


def check_conditions(tree: HstTree, horizon: int, variant: str = "plain") -> ConditionReport:
    """Depth/complexity balance conditions for a horizon.

    ``plain``:    2^-H T <= sqrt(2^H dim T);  2^(H-1) dim <= k;  2^-(H-1) T >= sqrt(2^(H-1) dim T)
    ``weighted``: the same with extra H (resp. H-1) factors and 2^H dim <= k.

    Both sides are squared before comparing, which keeps the test exact for
    dyadic dim.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    H, k, T = tree.depth, tree.k, horizon
    dim = tree_complexity(tree).value
    if variant == "plain":
        c1 = T <= math.ldexp(dim, 3 * H)
        c2a = math.ldexp(dim, H - 1) <= k
        c2b = T >= math.ldexp(dim, 3 * (H - 1))
    elif variant == "weighted":
        c1 = H * T <= math.ldexp(dim, 3 * H)
        c2a = math.ldexp(dim, H) <= k
        c2b = (H - 1) * T >= math.ldexp(dim, 3 * (H - 1))
    else:
        raise ValueError(f"unknown condition variant {variant!r}")
    return ConditionReport(H, dim, k, T, variant, c1, c2a, c2b)


def reshape_well_behaved(tree: HstTree, horizon: int, variant: str = "plain") -> HstTree:
    """Deepen until the first condition holds, then collapse while not well behaved."""
    cap = 64 + math.ceil(math.log2(max(horizon, 1)))
    steps = 0
    while not check_conditions(tree, horizon, variant).cond1:
        tree = deepen(tree)
        steps += 1
        if steps > cap:
            raise NonTermination(f"deepen loop exceeded {cap} steps")
    while not check_conditions(tree, horizon, variant).well_behaved and tree.depth >= 2:
        shorter = collapse(tree)
        if not check_conditions(shorter, horizon, variant).cond1:
            break
        tree = shorter
        steps += 1
        if steps > cap:
            raise NonTermination(f"reshape exceeded {cap} steps")
    return tree


# -- tree files ------------------------------------------------------------------

def tree_to_dict(tree: HstTree) -> dict:
    nodes = [
        {"id": int(v), "level": int(tree.node_level[v]), "parent": int(tree.parent[v])}
        for v in range(tree.n_nodes)
    ]
    for n in nodes:
        if n["parent"] < 0:
            n["parent"] = None
    return {
        "depth": tree.depth,
        "nodes": nodes,
        "leafAction": {str(int(tree.anc[0, i])): i for i in range(tree.k)},
        "labels": list(tree.labels),
    }


def tree_from_dict(data: dict) -> HstTree:
    try:
        H = int(data["depth"])
        nodes = {int(n["id"]): n for n in data["nodes"]}
        leaf_action = {int(v): int(a) for v, a in data["leafAction"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidTree(f"malformed tree document: {exc}") from None
    k = len(leaf_action)
    if sorted(leaf_action.values()) != list(range(k)):
        raise InvalidTree("leafAction must map leaves onto actions 0..k-1")
    roots = [v for v, n in nodes.items() if n.get("parent") is None]
    if len(roots) != 1 or int(nodes[roots[0]]["level"]) != H:
        raise InvalidTree(f"expected exactly one root at level {H}")
    has_child = set()
    for v, n in nodes.items():
        p = n.get("parent")
        if p is None:
            continue
        if int(p) not in nodes or int(nodes[int(p)]["level"]) != int(n["level"]) + 1:
            raise InvalidTree(f"node {v}: parent must sit exactly one level up")
        has_child.add(int(p))
    for v, n in nodes.items():
        lv = int(n["level"])
        if lv == 0 and v not in leaf_action:
            raise InvalidTree(f"leaf {v} has no action")
        if lv > 0 and v not in has_child:
            raise InvalidTree(f"internal node {v} at level {lv} has no children")
    rows = np.empty((H + 1, k), dtype=int)
    for leaf, a in leaf_action.items():
        if int(nodes[leaf]["level"]) != 0:
            raise InvalidTree(f"leaf {leaf} is not at level 0")
        v = leaf
        for h in range(H + 1):
            rows[h, a] = v
            p = nodes[v].get("parent")
            v = int(p) if p is not None else v
    labels = data.get("labels") or ()
    return from_groups(rows, labels)


def save_tree(tree: HstTree, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tree_to_dict(tree), indent=1) + "\n")


def load_tree(path: str | Path) -> HstTree:
    return tree_from_dict(json.loads(Path(path).read_text()))
