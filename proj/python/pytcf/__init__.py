"""Point cloud registration by cascaded one-, two- and three-point RANSAC."""

from ._core import (
    RigidTransform,
    TcfError,
    estimate_pose_svd,
    generate_scene,
    one_point_ransac,
    pose_errors,
    register,
    required_iterations,
    run_study,
    sa_cauchy_irls,
    three_point_ransac,
    two_point_ransac,
    vanilla_ransac,
)

__all__ = [
    "RigidTransform",
    "TcfError",
    "estimate_pose_svd",
    "generate_scene",
    "one_point_ransac",
    "pose_errors",
    "register",
    "required_iterations",
    "run_study",
    "sa_cauchy_irls",
    "three_point_ransac",
    "two_point_ransac",
    "vanilla_ransac",
]
