"""Geometry unit tests.

Expected values are hand-computed from the pinhole equations:
    u = fx * x_cam / z_cam + cx,  v = fy * y_cam / z_cam + cy
    d = R^T K^-1 (u, v, 1)
"""

import math

import numpy as np
import pytest

from bevcvt import geometry as g


def make_cam(pos=(0.0, 0.0, 0.0), rot=(0.0, 0.0, 0.0), w=400, h=400, fov=90.0, name="cam"):
    return g.CameraModel(name, w, h, fov, np.array(pos, dtype=float), np.array(rot, dtype=float))


def random_cam(rng):
    return make_cam(
        pos=rng.uniform(-50.0, 50.0, size=3),
        rot=(rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 180.0), rng.uniform(-60.0, 60.0)),
        w=int(rng.integers(64, 513)),
        h=int(rng.integers(64, 513)),
        fov=float(rng.uniform(35.0, 120.0)),
    )


def point_in_front(cam, rng, depth_range=(0.5, 60.0)):
    """World point with strictly positive camera-frame depth."""
    p_cam = np.array(
        [rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(*depth_range)]
    )
    return cam.extrinsics.rotation.T @ p_cam + cam.extrinsics.translation


class TestIntrinsics:
    def test_square_90_fov(self):
        k = g.intrinsics_from_fov(400, 400, 90.0)
        # tan(45 deg) rounds 1 ulp below 1.0, so "exact" means double precision
        assert k.fx == pytest.approx(200.0, abs=1e-12)
        assert k.fy == pytest.approx(200.0, abs=1e-12)
        assert k.cx == 200.0 and k.cy == 200.0

    def test_rectangular_90_fov(self):
        # hand evaluation: f = size / (2 tan(45 deg))
        k = g.intrinsics_from_fov(800, 600, 90.0)
        assert k.fx == pytest.approx(400.0, abs=1e-12)
        assert k.fy == pytest.approx(300.0, abs=1e-12)
        assert (k.cx, k.cy) == (400.0, 300.0)

    def test_degenerate_fov(self):
        with pytest.raises(ValueError):
            g.intrinsics_from_fov(400, 400, 0.0)
        with pytest.raises(ValueError):
            g.intrinsics_from_fov(400, 400, 180.0)
        with pytest.raises(ValueError):
            g.intrinsics_from_fov(0, 400, 90.0)

    def test_fov_readback(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            w = int(rng.integers(16, 2048))
            fov = float(rng.uniform(1.0, 179.0))
            k = g.intrinsics_from_fov(w, w, fov)
            back = g.fov_from_intrinsics(w, k.fx)
            assert back == pytest.approx(fov, rel=1e-9)

    def test_matrix_layout(self):
        k = g.intrinsics_from_fov(640, 480, 70.0).matrix
        assert k[2, 2] == 1.0
        assert k[1, 0] == k[2, 0] == k[2, 1] == k[0, 1] == 0.0
        assert np.linalg.det(k) != 0.0


class TestExtrinsics:
    def test_identity_pose(self):
        e = g.extrinsics_from_pose(0, 0, 0, 0, 0, 0)
        np.testing.assert_allclose(e.rotation, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(e.translation, np.zeros(3))

    def test_pure_translation(self):
        e = g.extrinsics_from_pose(1, 2, 3, 0, 0, 0)
        np.testing.assert_allclose(e.rotation, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(e.translation, [1, 2, 3])

    def test_yaw_180_negates_forward(self):
        # oracle: compose elementary rotations by hand; Rz(180) sends x to -x
        e = g.extrinsics_from_pose(0, 0, 0, 0, 180, 0)
        np.testing.assert_allclose(e.rotation @ np.array([1.0, 0, 0]), [-1.0, 0, 0], atol=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            g.extrinsics_from_pose(np.nan, 0, 0, 0, 0, 0)
        with pytest.raises(ValueError):
            g.extrinsics_from_pose(0, 0, 0, np.inf, 0, 0)

    def test_orthonormality_property(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            ang = rng.uniform(-720, 720, size=3)
            e = g.extrinsics_from_pose(0, 0, 0, *ang)
            r = e.rotation
            assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    def test_orthonormality_enforced(self):
        with pytest.raises(ValueError):
            g.ExtrinsicPose(rotation=np.eye(3) * 2.0, translation=np.zeros(3))

    def test_mounted_camera_looks_forward(self):
        e = g.camera_extrinsics_from_pose(0, 0, 0, 0, 0, 0)
        # optical axis (camera +Z) expressed in world coordinates
        axis = e.rotation.T @ np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(axis, [1.0, 0.0, 0.0], atol=1e-15)
        # image-down (camera +Y) is world -Z
        down = e.rotation.T @ np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(down, [0.0, 0.0, -1.0], atol=1e-15)

    def test_positive_yaw_turns_right(self):
        e = g.camera_extrinsics_from_pose(0, 0, 0, 0, 90, 0)
        axis = e.rotation.T @ np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(axis, [0.0, -1.0, 0.0], atol=1e-12)

    def test_negative_pitch_looks_down(self):
        e = g.camera_extrinsics_from_pose(0, 0, 0, -45, 0, 0)
        axis = e.rotation.T @ np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(axis, [math.sqrt(0.5), 0.0, -math.sqrt(0.5)], atol=1e-12)


class TestProjection:
    def test_optical_axis_hits_principal_point(self):
        cam = make_cam()
        uv = g.project((5.0, 0.0, 0.0), cam)
        np.testing.assert_allclose(uv, [200.0, 200.0], atol=1e-12)

    def test_hand_computed_offset_point(self):
        # camera-frame point (1, 0, 5): u = (200*1 + 200*5)/5 = 240
        cam = make_cam()
        p_world = cam.extrinsics.rotation.T @ np.array([1.0, 0.0, 5.0])
        uv = g.project(p_world, cam)
        np.testing.assert_allclose(uv, [240.0, 200.0], atol=1e-9)

    def test_zero_depth_rejected(self):
        cam = make_cam()
        with pytest.raises(g.BehindCameraError):
            g.project((0.0, 0.0, 1.0), cam)  # in the optical plane, depth 0
        with pytest.raises(g.BehindCameraError):
            g.project((-3.0, 0.0, 0.0), cam)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        cam = random_cam(rng)
        pts = np.array([point_in_front(cam, rng) for _ in range(50)])
        uv, valid = g.project_points(pts, cam)
        assert valid.all()
        for i in range(len(pts)):
            np.testing.assert_allclose(uv[i], g.project(pts[i], cam), atol=1e-9)


class TestUnprojection:
    def test_principal_point_gives_optical_axis(self):
        cam = make_cam(w=400, h=400, fov=90.0)
        d = g.unproject_direction((200.0, 200.0), cam)
        axis = cam.extrinsics.rotation.T @ np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(d / np.linalg.norm(d), axis, atol=1e-12)

    def test_hand_computed_pixel(self):
        # K^-1 (240, 200, 1) = (0.2, 0, 1) in the camera frame
        cam = make_cam()
        d_cam = cam.extrinsics.rotation @ g.unproject_direction((240.0, 200.0), cam)
        np.testing.assert_allclose(d_cam, [0.2, 0.0, 1.0], atol=1e-12)

    def test_round_trip_parallelism(self):
        # 1000 random (pose, point) cases: unproject(project(p)) || (p - t)
        rng = np.random.default_rng(17)
        for _ in range(1000):
            cam = random_cam(rng)
            p = point_in_front(cam, rng)
            d = g.unproject_direction(g.project(p, cam), cam)
            v = p - cam.extrinsics.translation
            cos = np.dot(d, v) / (np.linalg.norm(d) * np.linalg.norm(v))
            assert cos == pytest.approx(1.0, abs=1e-9)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(5)
        cam = random_cam(rng)
        qs = rng.uniform(-100, 500, size=(40, 2))
        ds = g.unproject_directions(qs, cam)
        for i in range(len(qs)):
            np.testing.assert_allclose(ds[i], g.unproject_direction(qs[i], cam), atol=1e-12)


class TestGeometricSimilarity:
    def test_own_ray_similarity_is_one(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            cam = random_cam(rng)
            p = point_in_front(cam, rng)
            assert g.geometric_similarity(g.project(p, cam), p, cam) == pytest.approx(
                1.0, abs=1e-9
            )

    def test_reflected_point_gives_minus_one(self):
        cam = make_cam(pos=(1.0, 2.0, 3.0), rot=(10.0, 30.0, 0.0))
        p = point_in_front(cam, np.random.default_rng(1))
        q = g.project(p, cam)
        reflected = 2 * cam.extrinsics.translation - p
        assert g.geometric_similarity(q, reflected, cam) == pytest.approx(-1.0, abs=1e-9)

    def test_orthogonal_point_gives_zero(self):
        cam = make_cam()
        d = g.unproject_direction((240.0, 180.0), cam)
        ortho = np.cross(d, np.array([0.0, 0.0, 1.0]))
        p = cam.extrinsics.translation + ortho
        assert g.geometric_similarity((240.0, 180.0), p, cam) == pytest.approx(0.0, abs=1e-9)

    def test_projective_scale_invariance(self):
        rng = np.random.default_rng(29)
        for _ in range(200):
            cam = random_cam(rng)
            p = point_in_front(cam, rng)
            uv = g.project(p, cam)
            q = np.array([uv[0], uv[1], 1.0])
            lam = rng.uniform(0.01, 100.0)
            s1 = g.geometric_similarity(q, p, cam)
            s2 = g.geometric_similarity(lam * q, p, cam)
            assert s2 == pytest.approx(s1, abs=1e-12)

    def test_degenerate_offset_rejected(self):
        cam = make_cam()
        with pytest.raises(g.DegenerateGeometryError):
            g.geometric_similarity((200.0, 200.0), cam.extrinsics.translation, cam)


class TestRayGround:
    def test_45_degree_lookdown(self):
        # camera 2 m up, pitched 45 deg down: center ray lands 2 m ahead
        # (hand trigonometry: s * d_z = -2 with d = (sqrt2/2, 0, -sqrt2/2))
        cam = make_cam(pos=(0.0, 0.0, 2.0), rot=(-45.0, 0.0, 0.0), w=128, h=128)
        p = g.ray_ground_intersection((64.0, 64.0), cam)
        np.testing.assert_allclose(p, [2.0, 0.0, 0.0], atol=1e-9)

    def test_horizon_ray_misses(self):
        cam = make_cam(pos=(0.0, 0.0, 2.0), rot=(0.0, 0.0, 0.0), w=128, h=128)
        assert g.ray_ground_intersection((64.0, 64.0), cam) is None

    def test_skyward_camera_misses(self):
        cam = make_cam(pos=(0.0, 0.0, 2.0), rot=(90.0, 0.0, 0.0), w=128, h=128)
        assert g.ray_ground_intersection((64.0, 64.0), cam) is None

    def test_project_round_trip(self):
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 500:
            cam = make_cam(
                pos=(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0.5, 10.0)),
                rot=(rng.uniform(-60, -2), rng.uniform(-180, 180), rng.uniform(-20, 20)),
                w=128,
                h=128,
                fov=90.0,
            )
            q = rng.uniform(0.0, 128.0, size=2)
            p = g.ray_ground_intersection(q, cam)
            if p is None:
                continue
            np.testing.assert_allclose(g.project(p, cam), q, atol=1e-6)
            checked += 1

    def test_batch_matches_scalar(self):
        cam = make_cam(pos=(3.0, -1.0, 2.5), rot=(-15.0, 40.0, 0.0), w=128, h=128)
        qs = np.random.default_rng(37).uniform(0, 128, size=(100, 2))
        pts, hit = g.ray_ground_intersections(qs, cam)
        for i in range(len(qs)):
            p = g.ray_ground_intersection(qs[i], cam)
            if p is None:
                assert not hit[i]
            else:
                assert hit[i]
                np.testing.assert_allclose(pts[i], p, atol=1e-9)


class TestCameraModel:
    def test_intrinsics_consistent_with_fov(self):
        cam = make_cam(w=640, h=400, fov=100.0)
        k = g.intrinsics_from_fov(640, 400, 100.0)
        assert cam.intrinsics.fx == pytest.approx(k.fx, rel=1e-9)
        assert g.fov_from_intrinsics(cam.width, cam.intrinsics.fx) == pytest.approx(
            100.0, rel=1e-9
        )

    def test_json_round_trip(self):
        cam = make_cam(pos=(1.5, -2.25, 1.8), rot=(-5.0, 55.0, 0.0), w=128, h=128, name="left")
        rec = g.camera_to_json(cam)
        back = g.camera_from_json(rec)
        assert back.name == cam.name
        np.testing.assert_array_equal(back.position, cam.position)
        np.testing.assert_array_equal(back.rotation_deg, cam.rotation_deg)
        np.testing.assert_allclose(back.extrinsics.matrix, cam.extrinsics.matrix)
        # redundant derived matrices match the reconstruction
        np.testing.assert_allclose(np.array(rec["K"]), back.intrinsics.matrix)
        np.testing.assert_allclose(np.array(rec["E"]), back.extrinsics.matrix)
