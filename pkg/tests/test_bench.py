import numpy as np
import pytest

from dbas_ddp.bench import (
    EnvironmentSpec,
    TrialResult,
    builtin_configs,
    load_config,
    run_suite,
    run_trial,
    sample_environment,
    summarize,
)
from dbas_ddp.bench.report import (
    read_summary_json,
    read_trajectory_csv,
    write_summary_json,
    write_trajectory_csv,
)
from dbas_ddp.bench.trials import environment_spec, problem_for_trial
from dbas_ddp.errors import ConfigError, NormalizationError


def _result(solver, success=True, cost=1.0, mi=3, ci=5, n_obstacles=2, trial_index=0):
    return TrialResult(solver=solver, trial_index=trial_index, success=success, reached=success, safe=True,
                       cost=cost, mi=mi, ci=ci, iterations=ci, min_h=0.1, min_eig=0.01, converged=True,
                       n_obstacles=n_obstacles, wall_time=0.0)


def test_builtin_configs_load():
    names = builtin_configs()
    for required in ("point_robot", "point_robot_random", "diff_drive_random", "cart_pole", "quad_reach_3",
                     "quad_track"):
        assert required in names
    for name in names:
        load_config(name)


@pytest.mark.parametrize("bad", [{"experiment": "boat", "horizon": 5, "start": [0]},
                                 {"experiment": "point_robot", "horizon": 0, "start": [0, 0, 0, 0]},
                                 {"experiment": "point_robot", "start": [0, 0, 0, 0]}])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        load_config(bad)


def test_missing_config_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/thing.json")


def test_load_config_returns_fresh_copy():
    a = load_config("point_robot")
    a["horizon"] = 3
    assert load_config("point_robot")["horizon"] != 3


@pytest.mark.parametrize("name", ["point_robot_random", "diff_drive_random", "quad_random"])
def test_environment_is_deterministic(name):
    spec = environment_spec(load_config(name))
    for idx in (0, 7, 31):
        a, b = sample_environment(spec, idx), sample_environment(spec, idx)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])
        np.testing.assert_array_equal(a[2], b[2])
    assert sample_environment(spec, 0)[0] != sample_environment(spec, 1)[0]


@pytest.mark.parametrize("name", ["point_robot_random", "diff_drive_random", "quad_random"])
def test_obstacles_clear_of_start_and_goal(name):
    spec = environment_spec(load_config(name))
    idx = list(spec.position_index)
    for i in range(50):
        obstacles, start, goal = sample_environment(spec, i)
        for ob in obstacles:
            c = np.asarray(ob["center"])
            for p in (start[idx], goal[idx]):
                assert np.linalg.norm(c - p[: c.size]) >= ob["radius"] + spec.clearance - 1e-12


def test_diff_drive_start_goal_boxes():
    spec = environment_spec(load_config("diff_drive_random"))
    for i in range(200):
        _, start, goal = sample_environment(spec, i)
        assert np.all(np.abs(start[:2] - [3.0, 0.0]) <= 0.25)
        assert np.all(np.abs(goal[:2] - [-3.0, 0.0]) <= 0.25)
        assert abs(start[2] - np.pi) <= 0.5 and abs(goal[2] - np.pi) <= 0.5


def test_obstacle_count_is_uniform():
    spec = environment_spec(load_config("diff_drive_random"))
    lo, hi = spec.obstacle_count
    counts = np.bincount([len(sample_environment(spec, i)[0]) for i in range(2000)], minlength=hi + 1)[lo:]
    expected = 2000 / (hi - lo + 1)
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    assert len(counts) == hi - lo + 1 and counts.min() > 0
    assert chi2 < 27.88  # 0.999 quantile, 9 degrees of freedom


def test_box_placement_stays_in_parallelogram():
    spec = environment_spec(load_config("point_robot_random"))
    corners = np.asarray(spec.placement["corners"], dtype=float)
    e1, e2 = corners[1] - corners[0], corners[3] - corners[0]
    M = np.column_stack([e1, e2])
    for i in range(100):
        for ob in sample_environment(spec, i)[0]:
            s, t = np.linalg.solve(M, np.asarray(ob["center"]) - corners[0])
            assert -1e-12 <= s <= 1 + 1e-12 and -1e-12 <= t <= 1 + 1e-12


def test_impossible_clearance_reports_config_error():
    spec = EnvironmentSpec(kind="point_robot", start=np.zeros(4), goal=np.zeros(4), position_index=(0, 1),
                           obstacle_count=(1, 1), placement={"kind": "normal", "mean": [0, 0], "std": 0.01},
                           radius=(1.0, 1.0), max_resample=50)
    with pytest.raises(ConfigError):
        sample_environment(spec, 0)


def test_summary_identical_costs_normalize_to_one():
    table = summarize({"dbas": [_result("dbas", cost=2.5) for _ in range(4)]})
    assert table.row("dbas").normalized_cost == 1.0
    assert "1.00x" in table.format()


def test_summary_ratio_and_success_rate():
    results = {
        "dbas": [_result("dbas", cost=c) for c in (1.0, 2.0, 3.0)] + [_result("dbas", success=False, cost=99.0)],
        "penalty": [_result("penalty", cost=2.34)] + [_result("penalty", success=False) for _ in range(3)],
    }
    table = summarize(results)
    assert table.row("dbas").normalized_cost == 1.0
    assert table.row("penalty").normalized_cost == pytest.approx(1.17)
    assert "1.17x" in table.format()
    assert table.row("dbas").success_pct == 75.0 and table.row("penalty").success_pct == 25.0
    assert table.row("dbas").mean_ci == 5.0


def test_summary_without_reference_success_raises():
    with pytest.raises(NormalizationError):
        summarize({"dbas": [_result("dbas", success=False)], "penalty": [_result("penalty")]})


def test_summary_obstacle_breakdown():
    res = [_result("dbas", n_obstacles=n, success=s) for n, s in [(1, True), (1, False), (10, True)]]
    table = summarize({"dbas": res})
    assert table.row("dbas").by_obstacles == {"1": [1, 2], "10": [1, 1]}


def test_trajectory_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(11, 4)) * 10.0 ** rng.integers(-8, 8, size=(11, 4))
    U = rng.normal(size=(10, 2))
    w = rng.uniform(0, 5, 11)
    h = rng.uniform(0, 1, 11)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, X, U, 0.02, w, h)
    back = read_trajectory_csv(path)
    assert np.array_equal(back["states"], X)
    assert np.array_equal(back["controls"], U)
    assert np.array_equal(back["w"], w) and np.array_equal(back["min_h"], h)
    assert list(back["k"]) == list(range(11))
    assert path.read_text().splitlines()[0] == "k,t,x0,x1,x2,x3,u0,u1,w,min_h"


def test_summary_json_round_trip(tmp_path):
    table = summarize({"dbas": [_result("dbas", cost=1.5)]})
    write_summary_json(table, tmp_path / "s.json")
    assert read_summary_json(tmp_path / "s.json") == table.to_dict()


def test_obstacle_free_trial_finishes_in_one_iteration():
    cfg = load_config("point_robot")
    cfg["obstacles"] = []
    r = run_trial(cfg, 0, "dbas")
    assert r.success and r.mi == 1 and r.ci == 1


def test_trial_errors_become_failed_trials():
    cfg = load_config("point_robot")
    cfg["start"] = [1.0, 1.2, 0.0, 0.0]  # inside the first obstacle
    r = run_trial(cfg, 0, "dbas")
    assert not r.success and r.error is not None and "UnsafeInitialError" in r.error


def test_single_trial_suite_matches_run_trial():
    cfg = load_config("point_robot_random")
    a = run_suite(cfg, 1, solver="dbas", start_index=3)[0]
    b = run_trial(cfg, 3, "dbas")
    assert a.record() == b.record()


def test_parallel_suite_matches_serial():
    cfg = load_config("point_robot_random")
    serial = run_suite(cfg, 4, parallelism=1, solver="dbas")
    parallel = run_suite(cfg, 4, parallelism=2, solver="dbas")
    assert [r.record() for r in serial] == [r.record() for r in parallel]


def test_suite_summary_json_is_byte_identical():
    cfg = load_config("point_robot_random")
    runs = [summarize({"dbas": run_suite(cfg, 3, solver="dbas")}).to_json() for _ in range(2)]
    assert runs[0] == runs[1]


def test_dbas_successes_are_safe():
    cfg = load_config("point_robot_random")
    for r in run_suite(cfg, 5, solver="dbas"):
        if r.success:
            assert r.min_h > 0


def test_problem_builds_every_builtin():
    for name in builtin_configs():
        p = problem_for_trial(load_config(name), 0)
        assert p.horizon == load_config(name)["horizon"]
