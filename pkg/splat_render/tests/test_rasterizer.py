import numpy as np
from django.test import SimpleTestCase

from core.exceptions import EmptyViews, ShapeMismatch, StaleProduct
from gs_model.models import sigmoid
from splat_render.models import MAX_DELTA, MIN_TRANSMITTANCE
from splat_render.projection import project
from splat_render.rasterizer import raw_visibility, render, render_backward, visibility_weights
from splat_render.sh import C0, sh_colors
from splat_render.tests.factories import axis_camera, orbit_cameras, random_scene, splat_cloud

BACKGROUND = np.array([0.1, 0.2, 0.3])


def naive_render(cloud, cam, background):
    """Per-pixel reference compositor."""
    proj = project(cloud.positions, cloud.rotations, cloud.log_scales, cam)
    order = np.lexsort((proj.indices, proj.depths))
    dirs = cloud.positions[proj.indices] - cam.center
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    _, colors = sh_colors(cloud.sh[proj.indices], dirs)
    alphas = sigmoid(cloud.opacity_logits[proj.indices])
    image = np.zeros((cam.height, cam.width, 3))
    for py in range(cam.height):
        for px in range(cam.width):
            transmittance, color = 1.0, np.zeros(3)
            for k in order:
                dx, dy = px - proj.means[k, 0], py - proj.means[k, 1]
                if abs(dx) > proj.radii[k] or abs(dy) > proj.radii[k]:
                    continue
                if transmittance < MIN_TRANSMITTANCE:
                    break
                conic = proj.conics[k]
                gauss = np.exp(-0.5 * (conic[0, 0] * dx * dx + 2 * conic[0, 1] * dx * dy + conic[1, 1] * dy * dy))
                delta = min(alphas[k] * gauss, MAX_DELTA)
                color += delta * transmittance * colors[k]
                transmittance *= 1.0 - delta
            image[py, px] = color + transmittance * background
    return image


class RenderTests(SimpleTestCase):
    def test_empty_pixels_show_background(self):
        cloud = splat_cloud([[5.0, 5.0, 1.0]], 0.8, [1.0, 0.0, 0.0], scale=0.01)
        product = render(cloud, axis_camera(), BACKGROUND)
        np.testing.assert_array_equal(product.image, np.broadcast_to(BACKGROUND, (16, 16, 3)))
        np.testing.assert_array_equal(product.v_raw, [0.0])

    def test_single_centered_splat(self):
        color = np.array([0.9, 0.4, 0.2])
        cloud = splat_cloud([[0.0, 0.0, 2.0]], 0.7, color)
        product = render(cloud, axis_camera(), BACKGROUND)
        np.testing.assert_allclose(product.image[8, 8], 0.7 * color + 0.3 * BACKGROUND, rtol=1e-12)

    def test_opaque_front_splat_hides_back_one(self):
        front = np.array([0.9, 0.1, 0.1])
        cloud = splat_cloud([[0.0, 0.0, 2.0], [0.0, 0.0, 3.0]], [0.99999, 0.99999], [front, [0.1, 0.9, 0.1]], scale=0.2)
        pixel = render(cloud, axis_camera(), BACKGROUND).image[8, 8]
        np.testing.assert_allclose(pixel, MAX_DELTA * front, atol=0.01)

    def test_partition_of_unity(self):
        product = render(random_scene(n=30, seed=1), axis_camera(), BACKGROUND)
        np.testing.assert_allclose(product.accumulated + product.transmittance, 1.0, atol=1e-6)
        self.assertTrue(np.all((product.image >= 0.0) & (product.image <= 1.0)))
        self.assertTrue(np.all(product.v_raw >= 0.0))

    def test_matches_per_pixel_compositor(self):
        cloud = random_scene(n=12, seed=2)
        cam = axis_camera()
        np.testing.assert_allclose(render(cloud, cam, BACKGROUND).image, naive_render(cloud, cam, BACKGROUND), atol=1e-6)

    def test_permutation_invariant(self):
        cloud = random_scene(n=25, seed=3)
        perm = np.random.default_rng(4).permutation(25)
        cam = axis_camera()
        base = render(cloud, cam, BACKGROUND)
        shuffled = render(cloud.subset(perm), cam, BACKGROUND)
        np.testing.assert_allclose(shuffled.image, base.image, atol=1e-12)
        np.testing.assert_allclose(shuffled.v_raw, base.v_raw[perm], atol=1e-12)

    def test_independent_of_threads(self):
        cloud = random_scene(n=25, seed=5)
        cam = axis_camera(width=21, height=13, cx=10.0, cy=6.0)
        reference = render(cloud, cam, BACKGROUND, threads=1, tile_size=4)
        for threads in (2, 4):
            other = render(cloud, cam, BACKGROUND, threads=threads, tile_size=4)
            np.testing.assert_array_equal(other.image, reference.image)
            np.testing.assert_array_equal(other.v_raw, reference.v_raw)

    def test_independent_of_tiling(self):
        cloud = random_scene(n=25, seed=5)
        cam = axis_camera(width=21, height=13, cx=10.0, cy=6.0)
        reference = render(cloud, cam, BACKGROUND, tile_size=16)
        for tile_size in (1, 4, 5):
            other = render(cloud, cam, BACKGROUND, tile_size=tile_size)
            np.testing.assert_allclose(other.image, reference.image, atol=1e-12)
            np.testing.assert_allclose(other.v_raw, reference.v_raw, atol=1e-10)

    def test_v_raw_is_blend_weight_sum(self):
        cloud = splat_cloud([[0.0, 0.0, 2.0]], 0.6, [0.5, 0.5, 0.5])
        product = render(cloud, axis_camera(), BACKGROUND)
        self.assertAlmostEqual(product.v_raw[0], product.accumulated.sum(), places=12)


class RenderBackwardTests(SimpleTestCase):
    def test_single_centered_splat(self):
        color = np.array([0.9, 0.4, 0.2])
        cloud = splat_cloud([[0.0, 0.0, 2.0]], 0.7, color)
        cam = axis_camera()
        product = render(cloud, cam, BACKGROUND)
        for channel in range(3):
            upstream = np.zeros((16, 16, 3))
            upstream[8, 8, channel] = 1.0
            grads = render_backward(product, cloud, cam, upstream, BACKGROUND)
            self.assertAlmostEqual(grads.d_opacity[0], color[channel] - BACKGROUND[channel], places=12)
            self.assertAlmostEqual(grads.d_sh[0, 0, channel], 0.7 * C0, places=12)

    def test_finite_differences(self):
        cloud = random_scene(n=10, seed=6)
        cam = axis_camera()
        upstream = np.random.default_rng(7).normal(size=(16, 16, 3))

        def loss(c):
            return float(np.sum(render(c, cam, BACKGROUND).image * upstream))

        grads = render_backward(render(cloud, cam, BACKGROUND), cloud, cam, upstream, BACKGROUND)
        d_logits = grads.d_logits(cloud.opacity_logits)
        rng = np.random.default_rng(8)
        eps = 1e-3
        for probe in range(50):
            i = int(rng.integers(10))
            if probe % 2:
                logits = cloud.opacity_logits.copy()
                logits[i] += eps
                plus = loss(cloud.replace(opacity_logits=logits))
                logits[i] -= 2 * eps
                minus = loss(cloud.replace(opacity_logits=logits))
                analytic = d_logits[i]
            else:
                j, c = int(rng.integers(16)), int(rng.integers(3))
                sh = cloud.sh.copy()
                sh[i, j, c] += eps
                plus = loss(cloud.replace(sh=sh))
                sh[i, j, c] -= 2 * eps
                minus = loss(cloud.replace(sh=sh))
                analytic = grads.d_sh[i, j, c]
            numeric = (plus - minus) / (2 * eps)
            self.assertLessEqual(abs(numeric - analytic), 1e-3 * max(abs(numeric), abs(analytic)) + 1e-7)

    def test_stale_product(self):
        cloud = random_scene(n=5, seed=9)
        cam = axis_camera()
        product = render(cloud, cam, BACKGROUND)
        changed = cloud.replace(opacity_logits=cloud.opacity_logits + 0.1)
        with self.assertRaises(StaleProduct):
            render_backward(product, changed, cam, np.zeros((16, 16, 3)), BACKGROUND)
        with self.assertRaises(StaleProduct):
            render_backward(product, cloud, cam, np.zeros((16, 16, 3)), (0.0, 0.0, 0.0))

    def test_upstream_shape(self):
        cloud = random_scene(n=5, seed=9)
        cam = axis_camera()
        with self.assertRaises(ShapeMismatch):
            render_backward(render(cloud, cam), cloud, cam, np.zeros((8, 8, 3)))


class VisibilityTests(SimpleTestCase):
    def test_single_splat(self):
        cloud = splat_cloud([[0.0, 0.0, 2.0]], 0.999, [0.5, 0.5, 0.5], scale=0.001)
        np.testing.assert_array_equal(visibility_weights(cloud, [axis_camera()]), [1.0])

    def test_occluded_splat(self):
        cloud = splat_cloud([[0.0, 0.0, 2.0], [0.0, 0.0, 2.5]], [0.99999, 0.8], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], scale=[1.0, 0.01])
        v = visibility_weights(cloud, [axis_camera(focal=15.0)])
        self.assertEqual(v[0], 1.0)
        self.assertLess(v[1], 0.05)

    def test_duplicate_cameras(self):
        cloud = random_scene(n=15, seed=10)
        cameras = orbit_cameras(3)
        np.testing.assert_allclose(raw_visibility(cloud, cameras * 2), 2 * raw_visibility(cloud, cameras), rtol=1e-12)
        np.testing.assert_allclose(visibility_weights(cloud, cameras * 2), visibility_weights(cloud, cameras), rtol=1e-12)

    def test_nothing_visible(self):
        cloud = splat_cloud([[0.0, 0.0, -2.0]], 0.9, [0.5, 0.5, 0.5])
        np.testing.assert_array_equal(visibility_weights(cloud, [axis_camera()]), [0.0])

    def test_no_cameras(self):
        with self.assertRaises(EmptyViews):
            visibility_weights(random_scene(n=3), [])
