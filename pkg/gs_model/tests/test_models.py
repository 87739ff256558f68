import numpy as np
from django.test import SimpleTestCase

from core.exceptions import IndexOutOfRange, NonFiniteValue, ShapeMismatch
from gs_model.models import AttributeSet, DualCloud, GaussianCloud, activated_view
from gs_model.tests.factories import random_cloud


class GaussianCloudTests(SimpleTestCase):
    def test_create_cloud(self):
        cloud = random_cloud(5)
        self.assertEqual(len(cloud), 5)
        self.assertEqual(cloud.sh.shape, (5, 16, 3))
        self.assertEqual(cloud.sh_degree, 3)
        self.assertFalse(cloud.positions.flags.writeable)

    def test_rotations_normalized(self):
        cloud = random_cloud(3).replace(rotations=np.array([[2.0, 0, 0, 0], [0, 3.0, 0, 0], [1.0, 1.0, 1.0, 1.0]]))
        np.testing.assert_allclose(np.linalg.norm(cloud.rotations, axis=1), 1.0, atol=1e-4)

    def test_zero_quaternion_is_non_finite(self):
        with self.assertRaises(NonFiniteValue) as caught:
            random_cloud(3).replace(rotations=np.array([[1.0, 0, 0, 0], [0, 0, 0, 0], [1.0, 0, 0, 0]]))
        self.assertEqual(caught.exception.index, 1)

    def test_nan_rejected_with_index(self):
        logits = np.zeros(4)
        logits[2] = np.nan
        with self.assertRaises(NonFiniteValue) as caught:
            random_cloud(4).replace(opacity_logits=logits)
        self.assertEqual(caught.exception.index, 2)

    def test_empty_cloud_rejected(self):
        with self.assertRaises(ShapeMismatch):
            random_cloud(1).subset(np.array([], dtype=int))

    def test_primitive_access(self):
        cloud = random_cloud(3)
        primitive = cloud.primitive(1)
        np.testing.assert_array_equal(primitive.position, cloud.positions[1])
        with self.assertRaises(IndexOutOfRange):
            cloud.primitive(3)
        self.assertEqual(len(list(cloud)), 3)

    def test_invalid_sh_degree(self):
        with self.assertRaises(ShapeMismatch):
            random_cloud(2).replace(sh_degree=4)


class ActivatedViewTests(SimpleTestCase):
    def test_activated_values(self):
        cloud = random_cloud(3).replace(
            opacity_logits=np.array([0.0, 2.0, -1.0]), log_scales=np.zeros((3, 3))
        )
        view = activated_view(cloud)
        self.assertEqual(view.alpha[0], 0.5)
        self.assertAlmostEqual(view.alpha[1], 0.880797, places=6)
        np.testing.assert_array_equal(view.scale, np.ones((3, 3)))

    def test_activated_view_is_monotone(self):
        logits = np.linspace(-8.0, 8.0, 101)
        cloud = random_cloud(101).replace(opacity_logits=logits)
        alpha = activated_view(cloud).alpha
        self.assertTrue(np.all(np.diff(alpha) > 0))
        self.assertTrue(np.all((alpha > 0) & (alpha < 1)))


class DualCloudTests(SimpleTestCase):
    def test_sides_share_geometry(self):
        cloud = random_cloud(4)
        other = random_cloud(4, seed=1)
        dual = DualCloud(
            cloud.geometry,
            AttributeSet(cloud.opacity_logits, cloud.sh),
            AttributeSet(other.opacity_logits, other.sh),
        )
        scene, message = dual.scene_cloud(), dual.message_cloud()
        np.testing.assert_array_equal(scene.positions, message.positions)
        np.testing.assert_array_equal(message.sh, other.sh)

    def test_mismatched_lengths_rejected(self):
        cloud = random_cloud(4)
        other = random_cloud(3, seed=1)
        with self.assertRaises(ShapeMismatch):
            DualCloud(
                cloud.geometry,
                AttributeSet(cloud.opacity_logits, cloud.sh),
                AttributeSet(other.opacity_logits, other.sh),
            )
