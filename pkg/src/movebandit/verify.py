"""Property suite behind ``movebandit verify``.

Each check returns a dict with ``name``, ``ok`` and check-specific details, so
the CLI can emit one JSON report and an exit code.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .harness import enumerate_estimator_moments, mc_movement_check
from .hst import (
    HstTree,
    build_hst,
    check_conditions,
    complete_binary,
    from_groups,
    random_tree,
    reshape_well_behaved,
    tree_complexity,
    verify_dominance,
)
from .metric import (
    breakpoints,
    covering_complexity,
    covering_number,
    grid1d,
    packing_complexity,
    packing_number,
    random_metric,
    uniform_metric,
)
from .smb import SMB


def random_moment_instance(rng: np.random.Generator, max_k: int = 16, max_depth: int = 4):
    """(SMB state, loss vector) with a random tree, Dirichlet p and an eta from {1e-4, 1e-2}."""
    H = int(rng.integers(1, max_depth + 1))
    k = int(rng.integers(1, max_k + 1))
    tree = random_tree(k, H, rng)
    eta = float(rng.choice([1e-4, 1e-2]))
    state = SMB(tree, eta)
    state.set_distribution(rng.dirichlet(np.ones(k)))
    return state, rng.random(k)


def check_moments(instances: int = 50, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst_bias, worst_var_ratio, worst_iw, truncating = -math.inf, 0.0, 0.0, 0
    failures = []
    for n in range(instances):
        state, loss = random_moment_instance(rng)
        rep = enumerate_estimator_moments(state, loss)
        worst_bias = max(worst_bias, float(np.max(rep.expected_tilde - rep.loss)))
        worst_var_ratio = max(worst_var_ratio, rep.second_moment / rep.second_moment_bound)
        worst_iw = max([worst_iw] + [abs(v - 1) for v in rep.importance.values()])
        truncating += rep.truncation_prob > 0
        if not (rep.bias_ok and rep.variance_ok and rep.importance_ok()):
            failures.append(n)
    return {
        "name": "moments", "ok": not failures, "instances": instances,
        "failures": failures, "max_bias_excess": worst_bias,
        "max_second_moment_ratio": worst_var_ratio, "max_importance_error": worst_iw,
        "instances_with_truncation": truncating,
    }


def check_marginals(rounds: int = 10_000, depth: int = 3, eta: float = 1e-3, seed: int = 0) -> dict:
    """Level-h_t subtree masses are unchanged on every non-truncated round."""
    tree = complete_binary(depth)
    state = SMB(tree, eta)
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for t in range(1, rounds + 1):
        state.select(t, rng)
        before = state.mass.copy()
        est = state.observe(t, float(rng.random()), rng)
        if est.truncated:
            continue
        nodes = np.unique(tree.anc[est.level])
        worst = max(worst, float(np.abs(state.mass[nodes] - before[nodes]).max()))
        checked += 1
    return {"name": "marginals", "ok": worst <= 1e-10, "rounds": rounds,
            "checked_rounds": checked, "max_mass_change": worst}


def check_estimator_identity(rounds: int = 2000, seed: int = 0) -> dict:
    """Per-round range bound on the level estimates and the telescoped form of the estimate."""
    rng = np.random.default_rng(seed)
    tree = random_tree(12, 4, rng)
    state = SMB(tree, 1e-3)
    worst_identity, range_ok = 0.0, True
    for t in range(1, rounds + 1):
        i = state.select(t, rng)
        masses_before = state.mass.copy()
        est = state.observe(t, float(rng.random()), rng)
        bars = est.bar_vectors(tree)
        H = tree.depth
        for h in range(H):
            upper = np.zeros(tree.k)
            inside = tree.lca_level[i] <= h
            prod = np.prod(1 + est.sigma[:h])
            upper[inside] = prod / masses_before[tree.anc[h, i]]
            if np.any(bars[h] < -1e-12) or np.any(bars[h] > upper * (1 + 1e-9) + 1e-12):
                range_ok = False
        if not est.truncated:
            top = bars[est.level] if est.level < H else 0.0
            alt = bars[0] - top + bars[: est.level].sum(axis=0)
            worst_identity = max(worst_identity, float(np.abs(alt - est.tilde).max()))
    return {"name": "identity", "ok": range_ok and worst_identity <= 1e-10,
            "range_ok": range_ok, "max_identity_error": worst_identity}


def check_movement(samples: int = 100_000, rounds: int = 2000, seed: int = 0) -> dict:
    rep = mc_movement_check(complete_binary(3), seed, rounds, samples)
    return {"name": "movement", **rep.to_dict()}


def faulty_tree(k: int) -> HstTree:
    """A depth-4 tree that puts every leaf pair at tree distance 1/8 (dominance fails on uniform)."""
    return from_groups([np.arange(k)] + [np.zeros(k, int)] * 4)


def check_dominance(instances: int = 50, seed: int = 0, tree_override=None) -> dict:
    rng = np.random.default_rng(seed)
    metrics = [random_metric(int(rng.integers(2, 33)), int(rng.integers(2 ** 31)))
               for _ in range(instances)]
    metrics += [uniform_metric(k) for k in (1, 2, 5, 16, 32)]
    metrics += [grid1d(k) for k in (2, 5, 9, 17, 32)]
    violations, worst_ratio = [], 0.0
    c_max = 0.0
    for m in metrics:
        tree = tree_override(m.k) if tree_override else build_hst(m)
        rep = verify_dominance(m, tree)
        worst_ratio = max(worst_ratio, rep.max_ratio)
        if rep.violations:
            i, j, d, dt = rep.violations[0]
            violations.append({"k": m.k, "pair": [i, j], "dist": d, "tree_dist": dt})
        if m.k >= 2 and not tree_override:
            cc = covering_complexity(m, "auto") if m.k <= 20 else packing_complexity(m, "greedy")
            c_max = max(c_max, tree_complexity(tree).value / (cc * math.log(m.k)))
    return {"name": "dominance", "ok": not violations, "metrics": len(metrics),
            "violations": violations, "max_ratio": worst_ratio, "dim_over_cc_lnk": c_max}


def check_reshape(instances: int = 100, horizons=(10 ** 3, 10 ** 6), seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    failures = []
    for n in range(instances):
        tree = random_tree(int(rng.integers(1, 33)), int(rng.integers(1, 9)), rng)
        d0 = tree.distance_matrix()
        dim0 = tree_complexity(tree).value
        for T in horizons:
            out = reshape_well_behaved(tree, T)
            problems = []
            if not check_conditions(out, T).well_behaved:
                problems.append("not well behaved")
            if np.any(out.distance_matrix() < d0):
                problems.append("distance decreased")
            if tree_complexity(out).value != dim0:
                problems.append("complexity changed")
            if problems:
                failures.append({"instance": n, "T": T, "problems": problems})
    return {"name": "reshape", "ok": not failures, "instances": instances, "failures": failures}


def check_complexity(instances: int = 25, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    failures = []
    for n in range(instances):
        m = random_metric(int(rng.integers(1, 13)), int(rng.integers(2 ** 31)))
        for eps in breakpoints(m):
            npk = packing_number(m, eps)
            nc = covering_number(m, eps)
            if not npk <= nc <= packing_number(m, eps / 2):
                failures.append({"instance": n, "eps": eps})
        cp, cc = packing_complexity(m, "exact"), covering_complexity(m, "exact")
        if not cp <= cc <= 2 * cp:
            failures.append({"instance": n, "cp": cp, "cc": cc})
    return {"name": "complexity", "ok": not failures, "instances": instances, "failures": failures}


CHECKS = {
    "moments": check_moments,
    "marginals": check_marginals,
    "identity": check_estimator_identity,
    "movement": check_movement,
    "dominance": check_dominance,
    "reshape": check_reshape,
    "complexity": check_complexity,
}


def run_suite(only=None, quick: bool = False, faulty: bool = False) -> dict:
    names = list(only) if only else list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    results = []
    for name in names:
        kwargs = {}
        if quick:
            kwargs = {"moments": {"instances": 10}, "marginals": {"rounds": 2000},
                      "identity": {"rounds": 300}, "movement": {"samples": 10_000},
                      "dominance": {"instances": 10}, "reshape": {"instances": 20},
                      "complexity": {"instances": 5}}[name]
        if name == "dominance" and faulty:
            kwargs["tree_override"] = faulty_tree
        start = time.perf_counter()
        res = CHECKS[name](**kwargs)
        res["seconds"] = round(time.perf_counter() - start, 3)
        results.append(res)
    return {"ok": all(r["ok"] for r in results), "checks": results}
