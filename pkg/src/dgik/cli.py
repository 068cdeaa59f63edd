"""Command-line entry point: ``dgik solve | bench | check``."""
import argparse
import json
import logging
import sys

from dgik import bench
from dgik.errors import DgikError
from dgik.graph import load_goals, load_obstacles
from dgik.pipeline import SolveRequest, solve_ik
from dgik.robot import RobotModel, check_coplanarity

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2

log = logging.getLogger("dgik")


def _parser():
    p = argparse.ArgumentParser(prog="dgik", description="Distance-geometric inverse kinematics.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one IK problem")
    s.add_argument("--robot", required=True, help="robot description (JSON)")
    s.add_argument("--goal", required=True, help="goal file (JSON object or list of objects)")
    s.add_argument("--obstacles", help="obstacle list (JSON)")
    s.add_argument("--init", choices=("flat", "bounds"), default="flat")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="write the report here instead of stdout")

    b = sub.add_parser("bench", help="run a randomized benchmark campaign")
    b.add_argument("--suite", required=True, choices=bench.SUITES)
    b.add_argument("--dof", required=True, type=int)
    b.add_argument("--limits", action="store_true", help="draw random symmetric joint limits")
    b.add_argument("--obstacles", choices=bench.LAYOUTS, default="none")
    b.add_argument("--radius", type=float, default=0.25, help="obstacle radius [m] (default 0.25)")
    b.add_argument("--circumradius", type=float, default=1.5, help="obstacle layout circumradius [m] (default 1.5)")
    b.add_argument("--init", choices=("flat", "bounds"), default="flat")
    b.add_argument("--trials", required=True, type=int)
    b.add_argument("--seed", required=True, type=int)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--csv", required=True, help="per-trial CSV output")
    b.add_argument("--waterfall", help="success rate versus position tolerance CSV")

    c = sub.add_parser("check", help="validate a robot description")
    c.add_argument("--robot", required=True)
    return p


def _solve(args):
    try:
        model = RobotModel.load(args.robot)
        goals = load_goals(args.goal)
        obstacles = load_obstacles(args.obstacles) if args.obstacles else []
        req = SolveRequest(model, goals, obstacles, init=args.init, seed=args.seed)
    except (OSError, ValueError, KeyError, TypeError, DgikError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = solve_ik(req)
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.success else EXIT_FAILED


def _bench(args):
    try:
        spec = bench.ExperimentSpec(
            args.suite,
            args.dof,
            limits=args.limits,
            obstacles=args.obstacles,
            obstacle_radius=args.radius,
            circumradius=args.circumradius,
            trials=args.trials,
            seed=args.seed,
            init=args.init,
        )
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    summary, _ = bench.run_campaign(spec, args.workers, args.csv, args.waterfall)
    print(summary.format())
    return EXIT_OK


def _check(args):
    try:
        model = RobotModel.load(args.robot)
    except (OSError, ValueError, KeyError, TypeError, DgikError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    ok, bad = check_coplanarity(model)
    print(f"kind {model.kind}, {len(model.joints)} joints, {model.n_angles} angles")
    if ok:
        print("consecutive joint axes are coplanar")
        return EXIT_OK
    for parent, child in bad:
        print(f"non-coplanar axes: {parent} -> {child}")
    return EXIT_FAILED


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return {"solve": _solve, "bench": _bench, "check": _check}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
