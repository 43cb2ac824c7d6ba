import math

import numpy as np
import pytest

from movebandit.errors import BadSpec, DimensionUnsupported, EnumerationTooLarge, FileShapeMismatch, HorizonMismatch
from movebandit.harness import (
    ExperimentConfig,
    RunTrace,
    analytic_switch_probs,
    cover_grid,
    discretize_and_run,
    enumerate_estimator_moments,
    fit_loglog_slope,
    lipschitz_violations,
    make_loss_oracle,
    mc_movement_check,
    movement_regret,
    parse_oracle_spec,
    regret_from_files,
    run,
    run_experiment,
    run_general,
    save_loss_matrix,
    summary_json,
    sweep,
)
from movebandit.hst import complete_binary, random_tree, star
from movebandit.metric import grid1d, uniform_metric
from movebandit.rng import stream
from movebandit.smb import SMB, Exp3, exp3_default_eta


class Fixed:
    """Deterministic policy cycling through a list of actions."""

    def __init__(self, seq):
        self.seq = seq

    def select(self, t, rng):
        return self.seq[(t - 1) % len(self.seq)]

    def observe(self, t, loss, rng):
        pass


# -- oracles ---------------------------------------------------------------------

def test_oracle_spec_parsing():
    assert parse_oracle_spec("stochasticGap:gap=0.3,best=2") == {"kind": "stochasticGap", "gap": 0.3, "best": 2}
    with pytest.raises(BadSpec):
        parse_oracle_spec("adaptive")


def test_drift_static_target_zero_loss():
    g = grid1d(5)
    o = make_loss_oracle("driftTarget:start=3", 0, g, 50)
    assert np.all(o.table[:, 3] == 0)
    assert o.table[0].tolist() == [0.75, 0.5, 0.25, 0.0, 0.25]


def test_drift_grid1d_center():
    o = make_loss_oracle("driftTarget:start=2", 0, grid1d(5), 4)
    assert o.table[0].tolist() == [0.5, 0.25, 0.0, 0.25, 0.5]


def test_drift_losses_are_lipschitz():
    g = grid1d(9)
    o = make_loss_oracle("driftTarget:period=5", 3, g, 200)
    assert lipschitz_violations(o, g) == 0


def test_gap_zero_exchangeable():
    o = make_loss_oracle("stochasticGap:gap=0,mu=0.5", 0, uniform_metric(4), 20000)
    assert np.allclose(o.table.mean(axis=0), 0.5, atol=0.02)


def test_epoch_adversary_structure():
    T = 1000
    o = make_loss_oracle("epochAdversary", 7, uniform_metric(8), T)
    L = o.params["L"]
    assert L == round(T ** (2 / 3))
    leaders = [int(x) for x in o.params["leaders"].split(";")]
    best = o.table.argmin(axis=1)
    assert set(best) <= set(leaders)
    # the best arm flips between epochs
    assert best[0] != best[L]


def test_from_file(tmp_path):
    table = np.random.default_rng(0).random((6, 3))
    path = tmp_path / "l.csv"
    save_loss_matrix(table, path)
    o = make_loss_oracle({"kind": "fromFile", "path": str(path)}, 0, uniform_metric(3), 6)
    assert np.array_equal(o.table, table)
    with pytest.raises(FileShapeMismatch):
        make_loss_oracle({"kind": "fromFile", "path": str(path)}, 0, uniform_metric(3), 7)


def test_oracle_is_seed_deterministic():
    a = make_loss_oracle("stochasticGap", 5, uniform_metric(4), 100).table
    b = make_loss_oracle("stochasticGap", 5, uniform_metric(4), 100).table
    c = make_loss_oracle("stochasticGap", 6, uniform_metric(4), 100).table
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# -- play loop and regret ------------------------------------------------------------

def test_single_arm_trivial():
    m = uniform_metric(1)
    o = make_loss_oracle("stochasticGap", 0, m, 30)
    tr = run(Exp3(1, 0.1), o, m, 30, 0)
    assert tr.total_move == 0 and movement_regret(tr, o, m) == 0
    tr, _ = run_general(m, o, 30, 0)
    assert tr.total_move == 0 and movement_regret(tr, o, m) == 0


def test_alternating_regret():
    m = uniform_metric(2)
    o = make_loss_oracle("epochAdversary:lo=0,hi=0,delta=0", 0, m, 4)
    tr = run(Fixed([0, 1]), o, m, 4, 0)
    assert movement_regret(tr, o, m) == 3.0


def test_static_equal_losses_zero_regret():
    m = uniform_metric(3)
    o = make_loss_oracle("epochAdversary:lo=0.5,hi=0.5,delta=0", 0, m, 10)
    assert movement_regret(run(Fixed([1]), o, m, 10, 0), o, m) == 0


def test_horizon_mismatch():
    m = uniform_metric(2)
    o = make_loss_oracle("stochasticGap", 0, m, 10)
    with pytest.raises(HorizonMismatch):
        run(Fixed([0]), o, m, 11, 0)


def test_trace_csv_round_trip():
    m = uniform_metric(4)
    o = make_loss_oracle("stochasticGap", 0, m, 200)
    tr = run(SMB(star(4), 0.05), o, m, 200, 3)
    back = RunTrace.from_csv(tr.to_csv(), 3)
    assert np.array_equal(back.actions, tr.actions)
    assert np.array_equal(back.losses, tr.losses) and np.array_equal(back.move, tr.move)
    assert back.to_csv() == tr.to_csv()


def test_exp3_gap_regression():
    m = uniform_metric(4)
    T = 10 ** 4
    o = make_loss_oracle("stochasticGap:gap=0.3", 1, m, T)
    tr = run(Exp3(4, exp3_default_eta(4, T)), o, m, T, 1)
    assert np.mean(tr.actions[-T // 4:] == 0) > 0.8


def test_general_pipeline_movement():
    m = uniform_metric(8)
    T = 2 ** 15
    o = make_loss_oracle("stochasticGap", 0, m, T)
    tr, rep = run_general(m, o, T, 0)
    H = rep.depth
    assert tr.total_move / T <= H * 2.0 ** -(H + 1) * 1.1
    assert tr.flags["dominance_on_switches"]


def test_grid_drift_sublinear():
    g = grid1d(16)
    Ts = [2 ** 10, 2 ** 12, 2 ** 14]
    regs = []
    for T in Ts:
        o = make_loss_oracle("driftTarget:period=64", 0, g, T)
        tr, _ = run_general(g, o, T, 0)
        regs.append(movement_regret(tr, o, g))
    assert fit_loglog_slope(Ts, regs) < 1


# -- continuous pipeline -------------------------------------------------------------

def test_cover_grid_examples():
    eps, c = cover_grid(1, 1000)
    assert eps == pytest.approx(0.1) and c.ravel() == pytest.approx([0.2, 0.6, 1.0])
    eps, c = cover_grid(2, 10 ** 4)
    assert eps == pytest.approx(0.1) and len(c) == 9
    assert set(np.round(np.unique(c), 12)) == {0.2, 0.6, 1.0}
    eps, c = cover_grid(1, 1)
    assert len(c) == 1


@pytest.mark.parametrize("d,T", [(1, 1000), (1, 10 ** 5), (2, 10 ** 4), (3, 5000)])
def test_cover_radius(d, T):
    eps, c = cover_grid(d, T)
    pts = np.random.default_rng(0).random((2000, d))
    gaps = np.abs(pts[:, None, :] - c[None, :, :]).max(axis=-1).min(axis=1)
    assert gaps.max() <= 2 * eps + 1e-12


def test_discretize_single_round():
    tr, rep, m, o = discretize_and_run("interval", "driftTarget", 1, 0)
    assert rep.extra["cover_size"] == 1 and movement_regret(tr, o, m) <= 1


def test_dimension_guard():
    with pytest.raises(DimensionUnsupported):
        discretize_and_run("hypercube:4", "driftTarget", 100, 0)


# -- moment enumeration and Monte Carlo -------------------------------------------------

def test_enumeration_binary_example():
    s = SMB(complete_binary(3), 1e-4)
    loss = np.random.default_rng(2).random(8)
    rep = enumerate_estimator_moments(s, loss)
    assert rep.outcomes == 64 and rep.bias_ok and rep.variance_ok and rep.importance_ok()


def test_enumeration_all_truncated_is_zero():
    s = SMB(star(4), 10.0)
    rep = enumerate_estimator_moments(s, np.ones(4))
    assert np.all(rep.expected_tilde == 0) and rep.second_moment == 0 and rep.truncation_prob == 1


def test_enumeration_cap():
    s = SMB(random_tree(20, 4, np.random.default_rng(0)), 1e-3)
    with pytest.raises(EnumerationTooLarge):
        enumerate_estimator_moments(s, np.zeros(20), max_outcomes=100)


def test_frozen_uniform_matches_analytic():
    t = complete_binary(3)
    rep = mc_movement_check(t, 0, 2000, 20000, eta=1e-12)
    want = analytic_switch_probs(t)
    sigma = np.sqrt(want * (1 - want) / rep.samples)
    assert np.all(np.abs(rep.switch_prob - want) <= 4 * sigma)
    assert rep.ok


# -- experiments ---------------------------------------------------------------------

def test_run_experiment_schema_and_replay():
    cfg = ExperimentConfig(metric="uniform:8", algorithm="smb", horizon=4096, seed=1)
    tr, s = run_experiment(cfg)
    assert {"H", "eta", "dim"} <= set(s["tree"])
    assert regret_from_files(tr.to_csv(), s) == s["movement_regret"]
    tr2, s2 = run_experiment(cfg)
    assert tr2.to_csv() == tr.to_csv() and summary_json(s2) == summary_json(s)


def test_config_validation():
    with pytest.raises(BadSpec):
        ExperimentConfig(algorithm="ucb").validate()
    with pytest.raises(BadSpec):
        ExperimentConfig(horizon=0).validate()


def test_sweep_rows_and_parallel_equal():
    base = ExperimentConfig(metric="uniform:4", horizon=256).echo()
    serial = sweep(base, [256, 512], [1, 2])
    assert len(serial) == 4 and all(r["status"] == "ok" for r in serial)
    assert sweep(base, [256, 512], [1, 2], jobs=2) == serial


def test_sweep_marks_failed_cells():
    base = ExperimentConfig(metric="uniform:4", adversary="stochasticGap:best=9").echo()
    rows = sweep(base, [64], [0])
    assert rows[0]["status"].startswith("error") and math.isnan(rows[0]["movement_regret"])


def test_slope_fit_exact_power():
    Ts = np.array([1e3, 1e4, 1e5])
    assert fit_loglog_slope(Ts, 3 * Ts ** (2 / 3)) == pytest.approx(2 / 3)


def test_stream_labels_independent():
    a = stream(1, "policy").random(4)
    assert np.array_equal(a, stream(1, "policy").random(4))
    assert not np.array_equal(a, stream(1, "oracle").random(4))
