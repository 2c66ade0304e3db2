import numpy as np
import pytest

from diffquad.render import (Box, Camera, GroundPlane, PadTop, Sphere, raycast,
                             render_depth, render_segmentation, write_pgm)


def identity_cam(**kw):
    # camera at origin looking along world +x (forward mount on an
    # identity-attitude quad)
    return Camera.from_quad(np.zeros(3), np.array([1.0, 0, 0, 0]), "forward", **kw)


def sphere_depth_oracle(camera, center, radius):
    """Scalar per-pixel ray-sphere oracle via projection geometry."""
    dirs = camera.rays().reshape(-1, 3)
    out = np.full(dirs.shape[0], camera.far)
    oc = center - camera.position
    for k, d in enumerate(dirs):
        along = float(oc @ d)         # projection of center onto ray
        perp2 = float(oc @ oc) - along * along
        if perp2 > radius * radius:
            continue
        half = np.sqrt(radius * radius - perp2)
        t = along - half
        if t < camera.near:
            continue
        out[k] = t
    return out.reshape(camera.height, camera.width)


class TestDepth:
    def test_center_pixel_sphere(self):
        cam = identity_cam()
        scene = [Sphere(center=np.array([5.0, 0, 0]), radius=1.0, sid=3)]
        depth = render_depth(cam, scene)
        # an even grid has no pixel exactly on axis; the on-axis distance is
        # 4.0 and the innermost pixels sit within the half-pixel bound of it
        assert depth[32, 32] == pytest.approx(4.0, abs=6e-3)
        d = cam.rays()[32, 32]
        along = d @ np.array([5.0, 0, 0])
        perp2 = 25.0 - along ** 2
        expected = along - np.sqrt(1.0 - perp2)
        assert depth[32, 32] == pytest.approx(expected, abs=1e-12)

    def test_sphere_matches_closed_form_everywhere(self):
        cam = identity_cam()
        center = np.array([4.0, 0.5, -0.3])
        scene = [Sphere(center=center, radius=1.2, sid=1)]
        depth = render_depth(cam, scene)
        oracle = sphere_depth_oracle(cam, center, 1.2)
        np.testing.assert_allclose(depth, oracle, atol=1e-9)

    def test_empty_scene_far_clip(self):
        cam = identity_cam()
        depth = render_depth(cam, [])
        np.testing.assert_array_equal(depth, np.full((64, 64), cam.far))

    def test_plane_corner_depths(self):
        # a wall at x=z0 seen head-on: center pixel z0, corners z0/cos(theta)
        z0 = 3.0
        cam = identity_cam()
        wall = Box(center=np.array([z0 + 0.05, 0.0, 0.0]),
                   half_extents=np.array([0.05, 50.0, 50.0]))
        depth = render_depth(cam, [wall])
        dirs = cam.rays()
        # cos of angle between each ray and the optical axis (+x here)
        cos_t = dirs @ np.array([1.0, 0, 0])
        np.testing.assert_allclose(depth, z0 / cos_t, atol=1e-9)

    def test_depths_within_clip_range(self):
        cam = identity_cam()
        scene = [
            Sphere(center=np.array([2.0, 0.3, 0.0]), radius=0.5, sid=1),
            Sphere(center=np.array([0.1, 0.0, 0.0]), radius=0.02, sid=2),  # inside near
            GroundPlane(z=-1.0, sid=4),
        ]
        depth = render_depth(cam, scene)
        assert np.all(depth >= cam.near) and np.all(depth <= cam.far)


class TestSegmentation:
    def test_ids_subset_of_scene(self):
        cam = identity_cam()
        scene = [Sphere(center=np.array([4.0, 1.0, 0]), radius=1.0, sid=7),
                 GroundPlane(z=-2.0, sid=1)]
        seg = render_segmentation(cam, scene)
        assert set(np.unique(seg)) <= {0, 1, 7}

    def test_empty_scene_all_background(self):
        seg = render_segmentation(identity_cam(), [])
        np.testing.assert_array_equal(seg, np.zeros((64, 64), dtype=np.int32))

    def test_hit_masks_agree_with_depth(self):
        cam = identity_cam()
        scene = [Sphere(center=np.array([3.0, -0.4, 0.2]), radius=0.8, sid=5)]
        depth, ids = raycast(cam, scene)
        np.testing.assert_array_equal(ids > 0, depth < cam.far)

    def test_pad_blob_under_down_camera(self):
        cam = Camera.from_quad(np.array([0.0, 0.0, 3.0]), np.array([1.0, 0, 0, 0]), "down")
        for shape in ("circle", "square", "triangle"):
            scene = [PadTop(center=np.zeros(2), shape=shape, size=0.25, sid=2),
                     GroundPlane(z=0.0, sid=1)]
            seg = render_segmentation(cam, scene)
            assert seg[32, 32] == 2
            assert {1, 2} <= set(np.unique(seg))
            # pad pixels are a minority of the ground-facing view
            frac = np.mean(seg == 2)
            assert 0.0 < frac < 0.5

    def test_rendering_deterministic(self):
        cam = identity_cam()
        scene = [Sphere(center=np.array([4.0, 0.2, -0.1]), radius=0.9, sid=3),
                 Box(center=np.array([6.0, -1.0, 0.0]),
                     half_extents=np.array([0.5, 0.5, 1.0]), yaw=0.4, sid=4)]
        d1, s1 = raycast(cam, scene)
        d2, s2 = raycast(cam, scene)
        np.testing.assert_array_equal(d1, d2)
        np.testing.assert_array_equal(s1, s2)


class TestProjection:
    def test_optical_axis_projects_to_origin(self):
        cam = identity_cam()
        u, v, du, dv = cam.project_point(np.array([5.0, 0, 0]))
        assert (u, v) == (0.0, 0.0)
        assert (du, dv) == (0.0, 0.0)

    def test_lateral_offset_formula(self):
        cam = identity_cam(fov_deg=90.0)
        # forward camera: image-right is world -y
        p = np.array([4.0, -1.0, 0.0])
        u, v, _, _ = cam.project_point(p)
        assert u == pytest.approx(1.0 / (4.0 * cam.tan_half_fov))
        assert v == pytest.approx(0.0)

    def test_behind_camera_out_of_view(self):
        cam = identity_cam()
        assert cam.project_point(np.array([-1.0, 0, 0])) is None

    def test_stationary_target_zero_pixel_velocity(self):
        cam = identity_cam()
        u, v, du, dv = cam.project_point(np.array([3.0, 0.5, 0.2]), np.zeros(3))
        assert (du, dv) == (0.0, 0.0)

    def test_pixel_velocity_matches_fd(self):
        cam = identity_cam()
        p = np.array([3.0, 0.4, -0.2])
        vel = np.array([0.5, -0.3, 0.2])
        u0, v0, du, dv = cam.project_point(p, vel)
        eps = 1e-6
        u1, v1, _, _ = cam.project_point(p + eps * vel)
        assert du == pytest.approx((u1 - u0) / eps, rel=1e-4)
        assert dv == pytest.approx((v1 - v0) / eps, rel=1e-4)


def test_pgm_dump(tmp_path):
    cam = identity_cam()
    depth = render_depth(cam, [Sphere(center=np.array([4.0, 0, 0]), radius=1.0, sid=1)])
    out = tmp_path / "depth.pgm"
    write_pgm(depth, out, cam.far)
    data = out.read_bytes()
    assert data.startswith(b"P5\n64 64\n65535\n")
    assert len(data) == len(b"P5\n64 64\n65535\n") + 64 * 64 * 2
