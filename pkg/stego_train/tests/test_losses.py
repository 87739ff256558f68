import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, ImageTooSmall, ShapeMismatch
from gs_model.models import AttributeSet, DualCloud, inverse_sigmoid
from stego_train.losses import (
    SSIM_C1,
    bern_sym_kl,
    consistency_grad,
    consistency_loss,
    gate,
    recon_loss,
    recon_loss_with_grad,
    ssim,
    ssim_map,
    ssim_with_grad,
)
from stego_train.models import LossBreakdown, TrainConfig
from stego_train.tests.factories import small_geometry


def dual_with_opacities(scene_alpha, message_alpha):
    geometry = small_geometry(n=len(scene_alpha))
    n = len(geometry)
    sh = np.zeros((n, 16, 3))
    return DualCloud(geometry, AttributeSet(inverse_sigmoid(scene_alpha), sh), AttributeSet(inverse_sigmoid(message_alpha), sh))


class BernoulliKlTests(SimpleTestCase):
    def test_identical(self):
        self.assertEqual(bern_sym_kl(0.3, 0.3), 0.0)

    def test_closed_form(self):
        self.assertAlmostEqual(bern_sym_kl(0.9, 0.1), 0.8 * math.log(81.0), places=12)
        self.assertAlmostEqual(bern_sym_kl(0.9, 0.1), 3.51555, places=5)

    def test_symmetric(self):
        self.assertEqual(bern_sym_kl(0.2, 0.7), bern_sym_kl(0.7, 0.2))

    def test_non_negative_on_grid(self):
        grid = np.linspace(0.0, 1.0, 41)
        p, q = np.meshgrid(grid, grid)
        kl = bern_sym_kl(p, q)
        self.assertTrue(np.all(kl >= 0.0))
        np.testing.assert_array_equal(kl == 0.0, p == q)

    def test_clamped_extremes_are_finite(self):
        self.assertTrue(np.isfinite(bern_sym_kl(0.0, 1.0)))


class GateTests(SimpleTestCase):
    def test_zero_gradient(self):
        self.assertEqual(gate(0.0), 1.0)

    def test_unit_gradient(self):
        self.assertAlmostEqual(gate(1.0), math.exp(-1.0), places=15)
        self.assertAlmostEqual(gate(1.0), 0.367879, places=6)

    def test_monotone(self):
        g = gate(np.linspace(0.0, 5.0, 50))
        self.assertTrue(np.all(np.diff(g) < 0.0))
        self.assertTrue(np.all((g > 0.0) & (g <= 1.0)))


class SsimTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.a = rng.uniform(size=(14, 12, 3))
        self.b = np.clip(self.a + rng.normal(scale=0.1, size=self.a.shape), 0.0, 1.0)

    def test_identical(self):
        self.assertAlmostEqual(ssim(self.a, self.a), 1.0, places=12)

    def test_symmetric(self):
        self.assertAlmostEqual(ssim(self.a, self.b), ssim(self.b, self.a), places=14)

    def test_constant_images(self):
        zeros, ones = np.zeros((21, 21)), np.ones((21, 21))
        local = ssim_map(zeros, ones)
        self.assertAlmostEqual(local[10, 10, 0], SSIM_C1 / (1.0 + SSIM_C1), places=10)
        self.assertLess(ssim(zeros, ones), 2e-4)
        self.assertGreater(ssim(zeros, ones), 0.0)

    def test_too_small(self):
        with self.assertRaises(ImageTooSmall):
            ssim(np.zeros((10, 16, 3)), np.zeros((10, 16, 3)))

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            ssim(self.a, self.a[:, :11])

    def test_gradient_matches_finite_differences(self):
        value, grad = ssim_with_grad(self.b, self.a)
        self.assertAlmostEqual(value, ssim(self.b, self.a), places=14)
        rng = np.random.default_rng(1)
        eps = 1e-6
        for _ in range(25):
            idx = tuple(int(rng.integers(s)) for s in self.b.shape)
            plus, minus = self.b.copy(), self.b.copy()
            plus[idx] += eps
            minus[idx] -= eps
            numeric = (ssim(plus, self.a) - ssim(minus, self.a)) / (2 * eps)
            self.assertAlmostEqual(grad[idx], numeric, delta=1e-6 * max(1.0, abs(numeric)))


class ReconLossTests(SimpleTestCase):
    def test_identical(self):
        image = np.random.default_rng(2).uniform(size=(12, 12, 3))
        self.assertAlmostEqual(recon_loss(image, image, 0.2), 0.0, places=12)
        self.assertAlmostEqual(recon_loss(image, image, 1.0), 0.0, places=12)

    def test_pure_l1(self):
        gt = np.full((4, 4, 3), 0.3)
        self.assertAlmostEqual(recon_loss(gt + 0.1, gt, 0.0), 0.1, places=12)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            recon_loss(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)), 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        gt = rng.uniform(size=(13, 13, 3))
        pred = np.clip(gt + rng.normal(scale=0.2, size=gt.shape), 0.0, 1.0)
        loss, grad = recon_loss_with_grad(pred, gt, 0.2)
        self.assertAlmostEqual(loss, recon_loss(pred, gt, 0.2), places=14)
        eps = 1e-7
        for _ in range(25):
            idx = tuple(int(rng.integers(s)) for s in pred.shape)
            if abs(pred[idx] - gt[idx]) < 1e-4:
                continue
            plus, minus = pred.copy(), pred.copy()
            plus[idx] += eps
            minus[idx] -= eps
            numeric = (recon_loss(plus, gt, 0.2) - recon_loss(minus, gt, 0.2)) / (2 * eps)
            self.assertAlmostEqual(grad[idx], numeric, delta=1e-7)


class ConsistencyLossTests(SimpleTestCase):
    def test_equal_opacities(self):
        alpha = np.linspace(0.1, 0.9, 5)
        self.assertEqual(consistency_loss(dual_with_opacities(alpha, alpha), np.ones(5), np.ones(5)), 0.0)

    def test_invisible_primitives(self):
        dual = dual_with_opacities(np.full(4, 0.9), np.full(4, 0.1))
        self.assertEqual(consistency_loss(dual, np.ones(4), np.zeros(4)), 0.0)

    def test_single_primitive(self):
        dual = dual_with_opacities(np.array([0.9]), np.array([0.1]))
        self.assertAlmostEqual(consistency_loss(dual, np.ones(1), np.ones(1)), 3.51555, places=4)

    def test_shape_mismatch(self):
        dual = dual_with_opacities(np.full(4, 0.5), np.full(4, 0.5))
        with self.assertRaises(ShapeMismatch):
            consistency_loss(dual, np.ones(3), np.ones(4))

    def test_gradient_reaches_both_sides(self):
        rng = np.random.default_rng(4)
        scene, message = rng.normal(size=8), rng.normal(size=8)
        g, v = rng.uniform(size=8), rng.uniform(size=8)
        loss, d_scene, d_message = consistency_grad(scene, message, g, v)
        self.assertAlmostEqual(loss, consistency_loss(dual_with_opacities(1 / (1 + np.exp(-scene)), 1 / (1 + np.exp(-message))), g, v), places=12)
        eps = 1e-6
        for logits, analytic, side in ((scene, d_scene, 0), (message, d_message, 1)):
            self.assertTrue(np.all(np.abs(analytic) > 0.0))
            for i in range(8):
                plus, minus = logits.copy(), logits.copy()
                plus[i] += eps
                minus[i] -= eps
                args_plus = (plus, message) if side == 0 else (scene, plus)
                args_minus = (minus, message) if side == 0 else (scene, minus)
                numeric = (consistency_grad(*args_plus, g, v)[0] - consistency_grad(*args_minus, g, v)[0]) / (2 * eps)
                self.assertAlmostEqual(analytic[i], numeric, delta=1e-6 * max(1.0, abs(numeric)))


class LossBreakdownTests(SimpleTestCase):
    def test_total_decomposition(self):
        cfg = TrainConfig(lambda_message=0.7, lambda_cons=0.02)
        losses = LossBreakdown.combine(3, 0.25, 0.5, 1.5, cfg)
        self.assertAlmostEqual(losses.total, 0.25 + 0.7 * 0.5 + 0.02 * 1.5, places=12)
        self.assertEqual(losses.as_row()["iteration"], 3)


class TrainConfigTests(SimpleTestCase):
    def test_defaults(self):
        cfg = TrainConfig()
        self.assertEqual((cfg.iterations, cfg.lambda_message, cfg.lambda_cons, cfg.ssim_weight), (500, 1.0, 0.02, 0.2))
        self.assertEqual((cfg.lr_opacity, cfg.lr_sh_dc, cfg.lr_sh_rest), (0.05, 0.0025, 0.000125))

    def test_invalid(self):
        for kwargs in ({"iterations": 0}, {"lambda_cons": -0.1}, {"ssim_weight": 1.5}, {"visibility_every": 0}, {"background": (0.0, 0.0)}):
            with self.subTest(**kwargs), self.assertRaises(ConfigError):
                TrainConfig(**kwargs)
