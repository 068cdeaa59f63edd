import numpy as np
import pytest

from dgik import rtr
from dgik.edm import procrustes_align
from dgik.graph import Goal, Obstacle, build_graph, problem_from_graph
from dgik.models import coplanar_chain, planar_chain, spherical_chain
from dgik.pipeline import SolveRequest, evaluate_solution, initial_realization, solve_ik
from dgik.robot import Joint, RobotModel, place_points, recover_angles, rot_x


def pose_goal(model, theta):
    pts = place_points(model, theta)
    ee = model.end_effectors[0]
    if model.kind == "revolute3d":
        second = pts[f"q:{ee}"]
    else:
        second = pts[f"p:{model.joint(ee).parent}"]
    return [Goal(ee, "direction", [pts[f"p:{ee}"], second])]


def test_zero_goal_from_flat_start():
    for model in (planar_chain(6), coplanar_chain(6)):
        report = solve_ik(SolveRequest(model, pose_goal(model, model.zero_configuration())))
        assert report.success and report.iterations <= 1
        assert report.termination == "GradientTolerance"


@pytest.mark.parametrize("init", ["flat", "bounds"])
def test_random_planar_goals(init, rng):
    model = planar_chain(6, limit=2.0)
    wins = 0
    for _ in range(8):
        theta = rng.uniform(-2.0, 2.0, 6)
        goals = pose_goal(model, theta)
        report = solve_ik(SolveRequest(model, goals, init=init, seed=1))
        # local minima exist; a failure must still be reported as one
        assert report.success == evaluate_solution(model, report.theta, goals).success()
        wins += report.success
    assert wins >= 6


def test_evaluate_thresholds(rng):
    model = planar_chain(4, limit=1.0)
    theta = rng.uniform(-0.9, 0.9, 4)
    goals = pose_goal(model, theta)
    ev = evaluate_solution(model, theta, goals)
    assert ev.success() and ev.position_error == 0 and ev.rotation_error == 0 and ev.limit_violation == 0
    shifted = [Goal("4", "position", [goals[0].targets[0] + [0.02, 0.0]])]
    ev = evaluate_solution(model, theta, shifted)
    assert ev.position_error == pytest.approx(0.02) and not ev.success()
    over = theta.copy()
    over[1] = 1.02
    ev = evaluate_solution(model, over, pose_goal(model, over))
    assert ev.limit_violation == pytest.approx(0.02) and not ev.success()
    over[1] = 1.005
    ev = evaluate_solution(model, over, pose_goal(model, over))
    assert ev.success()
    assert evaluate_solution(model, over, pose_goal(model, over), limits=False).limit_violation == 0


def test_evaluate_rotation_and_obstacles():
    model = planar_chain(2)
    theta = np.zeros(2)
    goal = Goal("2", "direction", [[2.0, 0.0], [2.0 - np.cos(0.1), -np.sin(0.1)]])
    ev = evaluate_solution(model, theta, [goal])
    assert ev.rotation_error == pytest.approx(0.1) and ev.position_error == 0
    ev = evaluate_solution(model, theta, [goal], [Obstacle([1.0, 0.1], 0.25)])
    assert ev.obstacle_violation == pytest.approx(0.15)


def test_report_is_honest(rng):
    model = planar_chain(8, limit=1.2)
    for init in ("flat", "bounds"):
        theta = rng.uniform(-1.2, 1.2, 8)
        goals = pose_goal(model, theta)
        report = solve_ik(SolveRequest(model, goals, init=init, seed=3))
        ev = evaluate_solution(model, report.theta, goals)
        assert report.position_error == pytest.approx(ev.position_error, abs=1e-12)
        assert report.rotation_error == pytest.approx(ev.rotation_error, abs=1e-12)
        assert report.success == ev.success()


def test_determinism(rng):
    model = planar_chain(10, limit=1.0)
    goals = pose_goal(model, rng.uniform(-1, 1, 10))
    a = solve_ik(SolveRequest(model, goals, init="bounds", seed=5)).to_dict()
    b = solve_ik(SolveRequest(model, goals, init="bounds", seed=5)).to_dict()
    a.pop("runtime_ms"), b.pop("runtime_ms")
    assert a == b


def exact_solve_deviation(model, rng):
    theta = rng.uniform(-1.0, 1.0, model.n_angles)
    g = build_graph(model, pose_goal(model, theta))
    prob, order, anchors = problem_from_graph(g)
    res = rtr.solve(prob, initial_realization(g, order, model, "flat"), rtr.RtrParams(max_iters=5000, grad_tol=1e-11))
    assert res.cost <= 1e-18
    P = procrustes_align(res.point, anchors)
    pts = place_points(model, recover_angles(model, dict(zip(order, P))))
    return max(np.linalg.norm(pts[name] - row) for name, row in zip(order, P) if name in pts)


@pytest.mark.parametrize("model", [spherical_chain(4), planar_chain(8)], ids=["sph", "planar"])
def test_recovered_configuration_reproduces_realization(model, rng):
    assert exact_solve_deviation(model, rng) <= 1e-6


@pytest.mark.xfail(
    strict=True,
    reason="coplanar axes make every link tetrahedron flat; the extra first-order flexes leave "
    "point errors of order cost**0.25, about 1e-4 at cost 1e-18",
)
def test_recovered_configuration_reproduces_realization_coplanar_6r(rng):
    assert exact_solve_deviation(coplanar_chain(6), rng) <= 1e-6


def test_infeasible_bounds_is_reported():
    model = planar_chain(3)
    report = solve_ik(SolveRequest(model, [Goal("3", "position", [[10.0, 0.0]])], init="bounds"))
    assert not report.success and report.termination == "InfeasibleBounds"
    assert report.iterations == 0


def test_unreachable_goal_fails_honestly():
    model = planar_chain(3)
    report = solve_ik(SolveRequest(model, [Goal("3", "position", [[10.0, 0.0]])]))
    assert not report.success
    assert report.position_error >= 7.0 - 1e-9  # the arm reaches at most 3


def test_request_validation():
    model = planar_chain(3)
    goal = Goal("3", "position", [[1.0, 1.0]])
    with pytest.raises(ValueError):
        SolveRequest(model, [])
    with pytest.raises(ValueError):
        SolveRequest(model, [goal, goal])
    with pytest.raises(ValueError):
        SolveRequest(model, [goal], init="random")
    with pytest.raises(ValueError):
        solve_ik(SolveRequest(model, [goal], init=np.zeros((3, 2))))


def test_non_coplanar_model_warns():
    model = RobotModel("revolute3d", [Joint("0"), Joint("1", "0", [1.0, 1.0, 0.0], rot_x(np.pi / 2))], ["1"])
    report = solve_ik(SolveRequest(model, [Goal("1", "position", place_points(model, [0.3])["p:1"][None])]))
    assert any("non-coplanar" in w for w in report.warnings)
