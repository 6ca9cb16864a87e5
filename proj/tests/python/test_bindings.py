import numpy as np
import pytest

import pytcf


def test_rigid_transform_round_trip():
    angle = np.deg2rad(30.0)
    r = np.array(
        [[np.cos(angle), -np.sin(angle), 0.0], [np.sin(angle), np.cos(angle), 0.0], [0.0, 0.0, 1.0]]
    )
    pose = pytcf.RigidTransform(r, np.array([1.0, -2.0, 0.5]))
    pts = np.random.default_rng(0).uniform(-5, 5, size=(10, 3))
    moved = pose.apply(pts)
    np.testing.assert_allclose(moved, pts @ r.T + pose.translation, atol=1e-12)
    np.testing.assert_allclose(pose.inverse().apply(moved), pts, atol=1e-12)
    np.testing.assert_allclose(pytcf.RigidTransform.from_matrix(pose.matrix()).matrix(), pose.matrix())


def test_invalid_rotation_raises_with_code():
    with pytest.raises(pytcf.TcfError) as info:
        pytcf.RigidTransform(2.0 * np.eye(3), np.zeros(3))
    assert info.value.code == "InvalidArgument"


def test_svd_recovers_exact_motion():
    src, dst, mask, gt = pytcf.generate_scene(n=50, outlier_ratio=0.0, sigma=0.0, seed=3)
    assert mask.all()
    est = pytcf.estimate_pose_svd(src, dst)
    rot_err, trans_err = pytcf.pose_errors(est, gt)
    assert rot_err < 1e-6
    assert trans_err < 1e-9


def test_required_iterations_bounds():
    assert pytcf.required_iterations(0.99, 0.5, 1) == 7
    assert pytcf.required_iterations(0.99, 0.0, 3, cap=500) == 500
    assert pytcf.required_iterations(0.99, 1.0, 3) == 1


def test_register_high_outlier_scene():
    src, dst, mask, gt = pytcf.generate_scene(n=1000, outlier_ratio=0.9, sigma=0.1, seed=11)
    out = pytcf.register(src, dst, tau=0.3, seed=5)
    rot_err, trans_err = pytcf.pose_errors(out["pose"], gt)
    assert rot_err < 1.0
    assert trans_err < 0.5
    sizes = [len(s["indices"]) for s in out["stages"]]
    assert sizes[0] >= sizes[1] >= sizes[2] >= 3
    assert out["irls_stop"] in {"converged", "scale_floor", "max_iterations", "inlier_collapse", "exact_fit"}


def test_register_is_deterministic():
    src, dst, _, _ = pytcf.generate_scene(n=300, outlier_ratio=0.5, seed=2)
    a = pytcf.register(src, dst, seed=9)
    b = pytcf.register(src, dst, seed=9)
    np.testing.assert_array_equal(a["pose"].matrix(), b["pose"].matrix())
    assert [s["indices"] for s in a["stages"]] == [s["indices"] for s in b["stages"]]


def test_stage_functions_and_baseline():
    src, dst, mask, gt = pytcf.generate_scene(n=200, outlier_ratio=0.5, sigma=0.05, seed=4)
    one = pytcf.one_point_ransac(src, dst, tau=0.15, seed=1)
    assert one["stage"] == "one_point"
    assert one["indices"] == sorted(one["indices"])
    pose, consensus = pytcf.three_point_ransac(src, dst, tau=0.15, seed=1)
    assert len(consensus["indices"]) >= 90
    pose, indices = pytcf.vanilla_ransac(src, dst, iterations=2000, tau=0.15, seed=1)
    assert pytcf.pose_errors(pose, gt)[0] < 1.0
    refined, iterations, stop = pytcf.sa_cauchy_irls(src[mask], dst[mask])
    assert pytcf.pose_errors(refined, gt)[1] < 0.1


def test_mismatched_rows_raise():
    with pytest.raises(pytcf.TcfError):
        pytcf.estimate_pose_svd(np.zeros((4, 3)), np.zeros((5, 3)))


def test_run_study_small_noise_grid():
    report = pytcf.run_study(
        "noise",
        {"trials": 2, "n": 200, "outlier_ratios": [0.5], "sigmas": [0.1], "master_seed": 3},
    )
    assert report["kind"] == "noise"
    assert len(report["cells"]) == 1
    assert len(report["rows"]) == 2


def test_run_study_rejects_unknown_key():
    with pytest.raises(pytcf.TcfError) as info:
        pytcf.run_study("noise", {"trails": 2})
    assert info.value.code == "InvalidConfig"
