"""Experiment plumbing: loss oracles, the play loop, movement-regret accounting,
the general-metric and continuous pipelines, and exact/Monte Carlo checks of the
estimator and movement properties of SMB.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from .errors import (
    BadSpec,
    DimensionUnsupported,
    EnumerationTooLarge,
    FileShapeMismatch,
    HorizonMismatch,
)
from .hst import HstTree, build_hst, reshape_well_behaved, tree_complexity
from .metric import MetricSpace, make_metric, points_metric
from .rng import stream
from .smb import SMB, Exp3, default_eta, exp3_default_eta

ORACLE_KINDS = ("stochasticGap", "driftTarget", "epochAdversary", "fromFile")


# -- loss oracles --------------------------------------------------------------

def parse_oracle_spec(spec) -> dict:
    """``"kind:key=val,key=val"`` or a dict with a ``kind`` entry."""
    if isinstance(spec, dict):
        out = dict(spec)
    else:
        kind, _, rest = str(spec).partition(":")
        out = {"kind": kind}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise BadSpec(f"bad oracle parameter {item!r} in {spec!r}")
            try:
                out[key] = json.loads(val)
            except json.JSONDecodeError:
                out[key] = val
    if out.get("kind") not in ORACLE_KINDS:
        raise BadSpec(f"unknown oracle kind {out.get('kind')!r}; expected one of {ORACLE_KINDS}")
    return out


@dataclass(frozen=True, eq=False)
class LossOracle:
    """Oblivious loss sequence: a fixed T x k matrix of losses in [0, 1] (round t is row t-1)."""
    kind: str
    params: dict
    seed: int
    horizon: int
    table: np.ndarray = field(repr=False)
    targets: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.table.shape[1]

    def loss(self, t: int, i: int) -> float:
        return float(self.table[t - 1, i])

    def matrix(self) -> np.ndarray:
        return self.table

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.array([math.fsum(col) for col in self.table.T])


def _walk_targets(metric: MetricSpace, T: int, rng, period: int, step: float, start) -> np.ndarray:
    cur = int(rng.integers(metric.k)) if start is None else int(start)
    out = np.empty(T, dtype=int)
    for t in range(T):
        if period and t and t % period == 0:
            near = np.flatnonzero((metric.dist[cur] <= step) & (np.arange(metric.k) != cur))
            if near.size:
                cur = int(rng.choice(near))
        out[t] = cur
    return out


def make_loss_oracle(spec, seed: int, metric: MetricSpace, horizon: int) -> LossOracle:
    """Materialize a loss oracle.

    stochasticGap(gap, mu, best): i.i.d. Bernoulli losses, mean mu for ``best``, mu+gap otherwise.
    driftTarget(period, step, start | amp, cycles, center): loss min(1, d(i, x_t)) for a slowly
        moving target; a walk over metric points, or a sine path in coordinates (mode=sine).
    epochAdversary(L, lo, hi, delta, leaders): piecewise constant over epochs of L rounds
        (default T^(2/3)). Two leader arms alternate as the epoch's best arm, one at loss lo
        and the other at lo + delta; every other arm sits at hi.
    fromFile(path): explicit T x k CSV matrix.
    """
    p = parse_oracle_spec(spec)
    kind = p.pop("kind")
    T, k = int(horizon), metric.k
    if T < 1:
        raise BadSpec("horizon must be >= 1")
    rng = stream(seed, "oracle", kind)
    targets = None

    if kind == "stochasticGap":
        gap, mu, best = float(p.get("gap", 0.2)), float(p.get("mu", 0.4)), int(p.get("best", 0))
        if not (0 <= mu <= 1 and 0 <= mu + gap <= 1 and 0 <= best < k):
            raise BadSpec(f"stochasticGap parameters out of range: {p}")
        means = np.full(k, mu + gap)
        means[best] = mu
        table = (rng.random((T, k)) < means).astype(float)

    elif kind == "driftTarget":
        mode = p.get("mode", "walk")
        if mode == "walk":
            targets = _walk_targets(
                metric, T, rng, int(p.get("period", 0)), float(p.get("step", 0.25)), p.get("start")
            )
            table = np.minimum(1.0, metric.dist[targets])
        elif mode == "sine":
            if metric.coords is None:
                raise BadSpec("driftTarget mode=sine needs a metric with coordinates")
            amp, cycles = float(p.get("amp", 0.2)), float(p.get("cycles", 1.0))
            center = float(p.get("center", 0.2))
            t = np.arange(1, T + 1)
            path = np.clip(center + amp * np.sin(2 * np.pi * cycles * t / T), 0.0, 1.0)
            targets = np.repeat(path[:, None], metric.coords.shape[1], axis=1)
            gaps = np.abs(metric.coords[None, :, :] - targets[:, None, :]).max(axis=-1)
            table = np.minimum(1.0, gaps)
        else:
            raise BadSpec(f"driftTarget mode must be walk or sine, got {mode!r}")

    elif kind == "epochAdversary":
        lo, hi, delta = float(p.get("lo", 0.0)), float(p.get("hi", 1.0)), float(p.get("delta", 0.25))
        if not (0 <= lo <= lo + delta <= hi <= 1):
            raise BadSpec(f"epochAdversary needs 0 <= lo <= lo+delta <= hi <= 1: {p}")
        L = int(p.get("L", 0)) or max(1, round(T ** (2 / 3)))
        if "leaders" in p:
            leaders = [int(x) for x in str(p["leaders"]).split(";")]
        else:
            leaders = [int(x) for x in rng.choice(k, size=min(2, k), replace=False)]
        if not all(0 <= a < k for a in leaders) or len(set(leaders)) != len(leaders):
            raise BadSpec(f"bad leaders {leaders} for k = {k}")
        table = np.full((T, k), hi)
        for e, start in enumerate(range(0, T, L)):
            for r, a in enumerate(leaders):
                table[start:start + L, a] = lo + delta * ((e + r) % 2)
        p = {**p, "L": L, "leaders": ";".join(map(str, leaders))}

    elif kind == "fromFile":
        table = load_loss_matrix(p["path"])
        if table.shape != (T, k):
            raise FileShapeMismatch(f"{p['path']}: expected {T}x{k} losses, found {table.shape}")

    table = np.ascontiguousarray(table, dtype=float)
    if np.any(table < 0) or np.any(table > 1):
        raise BadSpec("losses must lie in [0, 1]")
    table.setflags(write=False)
    return LossOracle(kind, p, seed, T, table, targets)


def load_loss_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FileShapeMismatch(f"{path}: ragged loss matrix")
    return np.array(rows)


def save_loss_matrix(table: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in table:
            w.writerow([repr(float(v)) for v in row])


def lipschitz_violations(oracle: LossOracle, metric: MetricSpace, max_pairs: int | None = None,
                         seed: int = 0) -> int:
    """Count (t, i, j) with |l_t(i) - l_t(j)| > d(i, j); exhaustive for k <= 32, sampled otherwise."""
    k = metric.k
    if max_pairs is None and k > 32:
        max_pairs = 2048
    if max_pairs is None:
        ii, jj = np.triu_indices(k, 1)
    else:
        rng = np.random.default_rng(seed)
        ii, jj = rng.integers(k, size=max_pairs), rng.integers(k, size=max_pairs)
    diff = np.abs(oracle.table[:, ii] - oracle.table[:, jj])
    return int(np.sum(diff > metric.dist[ii, jj] + 1e-12))


# -- traces ----------------------------------------------------------------------

@dataclass
class RunTrace:
    actions: np.ndarray
    losses: np.ndarray
    move: np.ndarray
    seed: int
    config: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.actions)

    @property
    def total_loss(self) -> float:
        return math.fsum(self.losses)

    @property
    def total_move(self) -> float:
        return math.fsum(self.move)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "action", "loss", "move_cost"])
        for t, (a, l, m) in enumerate(zip(self.actions, self.losses, self.move), start=1):
            w.writerow([t, int(a), repr(float(l)), repr(float(m))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int = 0, config: dict | None = None) -> "RunTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            actions=np.array([int(r["action"]) for r in rows], dtype=int),
            losses=np.array([float(r["loss"]) for r in rows]),
            move=np.array([float(r["move_cost"]) for r in rows]),
            seed=seed,
            config=config or {},
        )


def run(policy, oracle: LossOracle, metric: MetricSpace, horizon: int, seed: int,
        loss_scale: float = 1.0) -> RunTrace:
    """Play ``horizon`` rounds with bandit feedback; the policy sees ``loss_scale * loss``."""
    if oracle.horizon != horizon:
        raise HorizonMismatch(f"oracle horizon {oracle.horizon} != run horizon {horizon}")
    if oracle.k != metric.k or getattr(policy, "k", metric.k) != metric.k:
        raise BadSpec("policy, oracle and metric must share the same action set")
    rng = stream(seed, "policy")
    table, dist = oracle.table, metric.dist
    actions = np.empty(horizon, dtype=int)
    losses = np.empty(horizon)
    move = np.zeros(horizon)
    prev = None
    for t in range(1, horizon + 1):
        i = policy.select(t, rng)
        loss = table[t - 1, i]
        policy.observe(t, loss * loss_scale, rng)
        actions[t - 1] = i
        losses[t - 1] = loss
        if prev is not None:
            move[t - 1] = dist[i, prev]
        prev = i
    return RunTrace(actions, losses, move, seed)


def movement_regret(trace: RunTrace, oracle: LossOracle, metric: MetricSpace) -> float:
    """Total loss + total movement (from round 2) - loss of the best fixed action in hindsight."""
    a = trace.actions
    played = math.fsum(oracle.table[np.arange(len(a)), a])
    moved = math.fsum(metric.dist[a[1:], a[:-1]]) if len(a) > 1 else 0.0
    return played + moved - float(oracle.cumulative.min())


@dataclass
class PipelineReport:
    tree: HstTree | None
    depth: int | None
    dim: float | None
    eta: float
    base_depth: int | None = None
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"H": self.depth, "dim": self.dim, "eta": self.eta}


def prepare_tree(metric: MetricSpace, horizon: int, variant: str = "plain"):
    base = build_hst(metric)
    tree = reshape_well_behaved(base, horizon, variant)
    return base, tree


def run_general(metric: MetricSpace, oracle: LossOracle, horizon: int, seed: int,
                eta: float | None = None, eta_scale: float = 1.0,
                variant: str = "plain") -> tuple[RunTrace, PipelineReport]:
    """build_hst -> reshape for the horizon -> SMB fed losses/4; the trace keeps true losses and
    true-metric movement."""
    base, tree = prepare_tree(metric, horizon, variant)
    dim = tree_complexity(tree).value
    if eta is None:
        eta = default_eta(tree.depth, dim, horizon, eta_scale)
    trace = run(SMB(tree, eta), oracle, metric, horizon, seed, loss_scale=0.25)
    a = trace.actions
    dt = tree.distance_matrix()
    switched = a[1:] != a[:-1]
    trace.flags["dominance_on_switches"] = bool(
        np.all(metric.dist[a[1:], a[:-1]][switched] <= 4 * dt[a[1:], a[:-1]][switched])
    )
    trace.flags["tree_move"] = math.fsum(dt[a[1:], a[:-1]]) if len(a) > 1 else 0.0
    return trace, PipelineReport(tree, tree.depth, dim, eta, base.depth)


# -- continuous spaces -------------------------------------------------------------

def parse_space(space) -> int:
    if isinstance(space, int):
        d = space
    elif space == "interval":
        d = 1
    elif isinstance(space, str) and space.startswith("hypercube"):
        _, _, arg = space.partition(":")
        try:
            d = int(arg)
        except ValueError:
            raise BadSpec(f"bad space {space!r}; use interval or hypercube:d") from None
    elif isinstance(space, (tuple, list)) and space[0] == "hypercube":
        d = int(space[1])
    else:
        raise BadSpec(f"bad space {space!r}; use interval or hypercube:d")
    if d < 1:
        raise BadSpec("dimension must be >= 1")
    if d > 3:
        raise DimensionUnsupported(f"d = {d} > 3 is not supported")
    return d


def cover_grid(d: int, horizon: int) -> tuple[float, np.ndarray]:
    """eps = T^(-1/(d+2)) and the grid of cell midpoints with spacing 4 eps on [0, 1]^d.

    Every point is within 2 eps (max-norm) of a center; midpoints past 1 are pulled back to 1.
    """
    eps = horizon ** (-1.0 / (d + 2))
    spacing = 4 * eps
    n = max(1, math.ceil(1.0 / spacing - 1e-9))
    axis = np.unique(np.minimum((np.arange(n) + 0.5) * spacing, 1.0))
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return eps, pts


def discretize_and_run(space, oracle_spec, horizon: int, seed: int, eta: float | None = None):
    """Restrict play to a 2 eps-cover of the continuous space and run the general pipeline."""
    d = parse_space(space)
    eps, centers = cover_grid(d, horizon)
    metric = points_metric(centers)
    spec = parse_oracle_spec(oracle_spec)
    if spec["kind"] == "driftTarget":
        spec.setdefault("mode", "sine")
    oracle = make_loss_oracle(spec, seed, metric, horizon)
    trace, report = run_general(metric, oracle, horizon, seed, eta=eta)
    report.extra.update({"eps": eps, "cover_size": len(centers), "d": d,
                         "centers": centers.tolist()})
    return trace, report, metric, oracle


# -- exact estimator moments -------------------------------------------------------

@dataclass
class MomentsReport:
    expected_tilde: np.ndarray
    loss: np.ndarray
    second_moment: float
    second_moment_bound: float
    truncation_prob: float
    truncation_bound: float
    importance: dict[int, float]
    outcomes: int

    @property
    def bias_ok(self) -> bool:
        return bool(np.all(self.expected_tilde <= self.loss + 1e-9))

    @property
    def variance_ok(self) -> bool:
        return self.second_moment <= self.second_moment_bound + 1e-9

    def importance_ok(self, tol: float = 1e-12) -> bool:
        return all(abs(v - 1.0) <= tol for v in self.importance.values())


def enumerate_estimator_moments(state: SMB, loss_vector, max_outcomes: int = 2 ** 20) -> MomentsReport:
    """Exact expectations over i_t ~ p_t and uniform signs, for the state's current p_t."""
    tree = state.tree
    k, H = tree.k, tree.depth
    n = k * 2 ** H
    if n > max_outcomes:
        raise EnumerationTooLarge(f"{n} outcomes exceed the enumeration bound {max_outcomes}")
    loss = np.asarray(loss_vector, dtype=float)
    p = state.p
    signs = np.array(list(itertools.product((1, -1), repeat=H)), dtype=int).reshape(-1, H)
    tilde_terms = np.empty((n, k))
    sq_terms = np.empty(n)
    trunc_terms = np.empty(n)
    row = 0
    for i in range(k):
        w = p[i] / len(signs)
        for sigma in signs:
            est = state.estimate(i, loss[i], sigma)
            tilde_terms[row] = w * est.tilde
            sq_terms[row] = w * float(p @ est.tilde ** 2)
            trunc_terms[row] = w * est.truncated
            row += 1
    importance = {}
    for node, leaves in enumerate(tree.members):
        if tree.node_level[node] >= H:
            continue
        mass = math.fsum(p[leaves])
        if mass > 0:
            importance[node] = math.fsum(p[j] / mass for j in leaves)
    dim = tree_complexity(tree).value
    return MomentsReport(
        expected_tilde=np.array([math.fsum(tilde_terms[:, j]) for j in range(k)]),
        loss=loss,
        second_moment=math.fsum(sq_terms),
        second_moment_bound=2 * H * 2 ** H * dim,
        truncation_prob=math.fsum(trunc_terms),
        truncation_bound=state.eta * H * 2 ** H * dim,
        importance=importance,
        outcomes=n,
    )


# -- Monte Carlo movement check ------------------------------------------------------

def _margin(bound: float, n: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(bound * (1 - bound) / n) if n else math.inf


def analytic_switch_probs(tree: HstTree) -> np.ndarray:
    """Pr[A_h(i_t) != A_h(i_{t-1})] for h < H when p is frozen at uniform."""
    H, k = tree.depth, tree.k
    level_prob = [2.0 ** -(h + 1) for h in range(H)] + [2.0 ** -H]
    sizes = np.array([[len(tree.subtree(i, h)) for i in range(k)] for h in range(H + 1)])
    out = np.zeros(H)
    for h in range(H):
        for hp in range(h + 1, H + 1):
            out[h] += level_prob[hp] * np.mean(1 - sizes[h] / sizes[hp])
    return out


@dataclass
class MovementReport:
    samples: int
    switch_prob: np.ndarray
    switch_bound: np.ndarray
    switch_margin: np.ndarray
    mean_tree_move: float
    move_bound: float
    move_margin: float

    @property
    def ok(self) -> bool:
        return bool(np.all(self.switch_prob <= self.switch_bound + self.switch_margin)
                    and self.mean_tree_move <= self.move_bound + self.move_margin)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "levels": [
                {"h": h, "estimate": float(e), "bound": float(b), "margin": float(m)}
                for h, (e, b, m) in enumerate(zip(self.switch_prob, self.switch_bound,
                                                  self.switch_margin))
            ],
            "mean_tree_move": self.mean_tree_move,
            "move_bound": self.move_bound,
            "move_margin": self.move_margin,
            "ok": self.ok,
        }


def mc_movement_check(tree: HstTree, seed: int, rounds: int, samples: int,
                      eta: float | None = None, loss_mean: float = 0.5) -> MovementReport:
    """Empirical level-switch probabilities and mean tree movement of SMB.

    Independent runs of ``rounds`` rounds under Bernoulli(loss_mean) losses are
    pooled until ``samples`` consecutive-round transitions are collected.
    """
    if rounds < 2:
        raise ValueError("rounds must be >= 2")
    H = tree.depth
    if eta is None:
        eta = default_eta(H, tree_complexity(tree).value, rounds)
    dt = tree.distance_matrix()
    counts = np.zeros(H + 1, dtype=np.int64)
    moves = []
    n = 0
    r = 0
    while n < samples:
        policy = SMB(tree, eta)
        rng = stream(seed, "mc", r)
        losses = (stream(seed, "mc-loss", r).random((rounds, tree.k)) < loss_mean).astype(float)
        steps = min(rounds, samples - n + 1)
        prev = None
        levels = np.empty(steps - 1, dtype=int)
        for t in range(steps):
            i = policy.select(t + 1, rng)
            policy.observe(t + 1, losses[t, i], rng)
            if prev is not None:
                levels[t - 1] = tree.lca_level[i, prev]
                moves.append(dt[i, prev])
            prev = i
        counts += np.bincount(levels, minlength=H + 1)
        n += steps - 1
        r += 1
    # level-h switch  <=>  LCA level of the two consecutive actions exceeds h
    exceed = np.array([counts[h + 1:].sum() for h in range(H)]) / n
    bound = np.array([2.0 ** -(h + 1) for h in range(H)])
    move_bound = H * 2.0 ** -(H + 1)
    return MovementReport(
        samples=n,
        switch_prob=exceed,
        switch_bound=bound,
        switch_margin=np.array([_margin(b, n) for b in bound]),
        mean_tree_move=math.fsum(moves) / n,
        move_bound=move_bound,
        move_margin=_margin(move_bound, n),
    )


# -- experiments -----------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    metric: str = "uniform:8"
    algorithm: str = "smb"
    horizon: int = 1024
    seed: int = 0
    adversary: str = "stochasticGap"
    eta: float | None = None
    gamma: float = 0.0
    variant: str = "plain"
    space: str | None = None
    trace_out: str | None = None
    summary_out: str | None = None

    def validate(self) -> None:
        if self.horizon < 1:
            raise BadSpec("horizon must be >= 1")
        if self.algorithm not in ("smb", "exp3"):
            raise BadSpec(f"algorithm must be smb or exp3, got {self.algorithm!r}")
        if self.eta is not None and not self.eta > 0:
            raise BadSpec("eta must be positive")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("trace_out")
        d.pop("summary_out")
        return d


def resolve_metric(spec: str) -> MetricSpace:
    from .metric import load_metric_csv

    if Path(spec).suffix == ".csv" or Path(spec).exists():
        return load_metric_csv(spec)
    return make_metric(spec)


def build_problem(cfg: ExperimentConfig) -> tuple[MetricSpace, LossOracle]:
    """Metric and oracle for a config; ``space`` switches to the grid cover of a continuous space."""
    if cfg.space:
        _, centers = cover_grid(parse_space(cfg.space), cfg.horizon)
        metric = points_metric(centers)
        spec = parse_oracle_spec(cfg.adversary)
        if spec["kind"] == "driftTarget":
            spec.setdefault("mode", "sine")
    else:
        metric = resolve_metric(cfg.metric)
        spec = cfg.adversary
    return metric, make_loss_oracle(spec, cfg.seed, metric, cfg.horizon)


def run_experiment(cfg: ExperimentConfig) -> tuple[RunTrace, dict]:
    cfg.validate()
    metric, oracle = build_problem(cfg)
    if cfg.algorithm == "smb":
        trace, report = run_general(metric, oracle, cfg.horizon, cfg.seed, eta=cfg.eta,
                                    variant=cfg.variant)
        tree_info = report.summary()
    else:
        eta = cfg.eta or exp3_default_eta(metric.k, cfg.horizon)
        trace = run(Exp3(metric.k, eta, cfg.gamma), oracle, metric, cfg.horizon, cfg.seed)
        tree_info = {"H": None, "dim": None, "eta": eta}
    trace.config = cfg.echo()
    summary = {
        "config": cfg.echo(),
        "seed": cfg.seed,
        "total_loss": trace.total_loss,
        "total_move": trace.total_move,
        "comparator_loss": float(oracle.cumulative.min()),
        "movement_regret": movement_regret(trace, oracle, metric),
        "tree": tree_info,
    }
    if cfg.space:
        summary["cover_size"] = metric.k
    return trace, summary


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=1, sort_keys=True) + "\n"


def regret_from_files(trace_csv: str, summary: dict) -> float:
    """Recompute movement regret from a stored trace and the config echoed in its summary."""
    cfg = ExperimentConfig(**summary["config"])
    metric, oracle = build_problem(cfg)
    return movement_regret(RunTrace.from_csv(trace_csv, cfg.seed), oracle, metric)


def sweep_cell(args: tuple[dict, int, int]) -> dict[str, Any]:
    base, horizon, seed = args
    cfg = ExperimentConfig(**{**base, "horizon": horizon, "seed": seed,
                              "trace_out": None, "summary_out": None})
    try:
        _, s = run_experiment(cfg)
        return {"T": horizon, "seed": seed, "movement_regret": s["movement_regret"],
                "total_move": s["total_move"], "status": "ok"}
    except Exception as exc:  # a failed cell is reported in its row
        return {"T": horizon, "seed": seed, "movement_regret": math.nan,
                "total_move": math.nan, "status": f"error: {exc}"}


def sweep(base: dict, horizons, seeds, jobs: int = 1) -> list[dict]:
    cells = [(base, int(T), int(s)) for T in horizons for s in seeds]
    if jobs <= 1:
        rows = [sweep_cell(c) for c in cells]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(sweep_cell, cells))
    return sorted(rows, key=lambda r: (r["T"], r["seed"]))


def fit_loglog_slope(horizons, values) -> float:
    """Least-squares slope of log(mean value per horizon) against log(horizon)."""
    hs = np.asarray(horizons, dtype=float)
    vs = np.asarray(values, dtype=float)
    uniq = np.unique(hs)
    means = np.array([vs[hs == h].mean() for h in uniq])
    if len(uniq) < 2 or np.any(means <= 0) or np.any(~np.isfinite(means)):
        raise ValueError("need >= 2 horizons with positive finite mean values")
    return float(np.polyfit(np.log(uniq), np.log(means), 1)[0])
