"""Inverse kinematics as low-rank Euclidean distance matrix completion."""
from dgik.errors import DgikError
from dgik.graph import Goal, Obstacle, build_graph, problem_from_graph
from dgik.pipeline import SolveReport, SolveRequest, evaluate_solution, solve_ik
from dgik.robot import Joint, RobotModel, forward_kinematics, place_points, recover_angles

__all__ = [
    "DgikError",
    "Goal",
    "Joint",
    "Obstacle",
    "RobotModel",
    "SolveReport",
    "SolveRequest",
    "build_graph",
    "evaluate_solution",
    "forward_kinematics",
    "place_points",
    "problem_from_graph",
    "recover_angles",
    "solve_ik",
]
