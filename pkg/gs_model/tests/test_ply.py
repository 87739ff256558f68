import tempfile
from os import path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import MalformedHeader, NonFiniteValue, TruncatedPayload
from gs_model.dualfile import load_dual, save_dual
from gs_model.models import AttributeSet, DualCloud
from gs_model.ply import PLY_PROPERTIES, RECORD_BYTES, load_ply, save_ply
from gs_model.tests.factories import random_cloud


class PlyTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def file(self, name):
        return path.join(self.tmp.name, name)

    def read(self, name):
        with open(self.file(name), "rb") as handle:
            return handle.read()

    def write(self, name, data):
        with open(self.file(name), "wb") as handle:
            handle.write(data)

    def test_schema_has_62_properties(self):
        self.assertEqual(len(PLY_PROPERTIES), 62)
        self.assertEqual(RECORD_BYTES, 248)

    def test_round_trip_is_field_exact(self):
        cloud = random_cloud(2)
        save_ply(cloud, self.file("a.ply"))
        loaded = load_ply(self.file("a.ply"))
        self.assertEqual(len(loaded), 2)
        for name in ("positions", "rotations", "log_scales", "opacity_logits", "sh"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(cloud, name))

    def test_round_trip_is_byte_exact(self):
        for seed in range(5):
            cloud = random_cloud(7, seed=seed)
            save_ply(cloud, self.file("a.ply"))
            save_ply(load_ply(self.file("a.ply")), self.file("b.ply"))
            self.assertEqual(self.read("a.ply"), self.read("b.ply"))

    def test_save_is_deterministic(self):
        cloud = random_cloud(4)
        save_ply(cloud, self.file("a.ply"))
        save_ply(cloud, self.file("b.ply"))
        self.assertEqual(self.read("a.ply"), self.read("b.ply"))

    def test_header_layout(self):
        save_ply(random_cloud(1), self.file("a.ply"))
        data = self.read("a.ply")
        self.assertTrue(data.startswith(b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\n"))
        header_end = data.index(b"end_header\n") + len(b"end_header\n")
        self.assertEqual(len(data) - header_end, 248)

    def test_payload_size_for_100_primitives(self):
        save_ply(random_cloud(100), self.file("a.ply"))
        data = self.read("a.ply")
        header_end = data.index(b"end_header\n") + len(b"end_header\n")
        self.assertEqual(len(data) - header_end, 24800)

    def test_normals_written_as_zeros(self):
        save_ply(random_cloud(3), self.file("a.ply"))
        data = self.read("a.ply")
        body = np.frombuffer(data[data.index(b"end_header\n") + 11 :], dtype="<f4").reshape(3, 62)
        np.testing.assert_array_equal(body[:, 3:6], 0.0)

    def test_f_rest_is_channel_major(self):
        cloud = random_cloud(1)
        sh = np.zeros((1, 16, 3), dtype=np.float32)
        sh[0, 1, 1] = 7.0
        save_ply(cloud.replace(sh=sh), self.file("a.ply"))
        data = self.read("a.ply")
        body = np.frombuffer(data[data.index(b"end_header\n") + 11 :], dtype="<f4")
        self.assertEqual(body[PLY_PROPERTIES.index("f_rest_15")], 7.0)

    def test_truncated_payload(self):
        save_ply(random_cloud(2), self.file("a.ply"))
        self.write("b.ply", self.read("a.ply")[:-1])
        with self.assertRaises(TruncatedPayload):
            load_ply(self.file("b.ply"))

    def test_reordered_properties_rejected(self):
        save_ply(random_cloud(2), self.file("a.ply"))
        data = self.read("a.ply").replace(b"property float x\nproperty float y\n", b"property float y\nproperty float x\n")
        self.write("b.ply", data)
        with self.assertRaises(MalformedHeader):
            load_ply(self.file("b.ply"))

    def test_renamed_property_rejected(self):
        save_ply(random_cloud(2), self.file("a.ply"))
        self.write("b.ply", self.read("a.ply").replace(b"property float opacity\n", b"property float alpha\n"))
        with self.assertRaises(MalformedHeader):
            load_ply(self.file("b.ply"))

    def test_ascii_format_rejected(self):
        save_ply(random_cloud(1), self.file("a.ply"))
        self.write("b.ply", self.read("a.ply").replace(b"binary_little_endian", b"ascii"))
        with self.assertRaises(MalformedHeader):
            load_ply(self.file("b.ply"))

    def test_non_finite_reported_with_index(self):
        save_ply(random_cloud(3), self.file("a.ply"))
        data = bytearray(self.read("a.ply"))
        start = data.index(b"end_header\n") + 11
        offset = start + 2 * 248 + PLY_PROPERTIES.index("opacity") * 4
        data[offset : offset + 4] = np.array([np.nan], dtype="<f4").tobytes()
        self.write("b.ply", bytes(data))
        with self.assertRaises(NonFiniteValue) as caught:
            load_ply(self.file("b.ply"))
        self.assertEqual(caught.exception.index, 2)


class DualFileTests(SimpleTestCase):
    def test_round_trip(self):
        scene = random_cloud(6)
        message = random_cloud(6, seed=3)
        dual = DualCloud(
            scene.geometry,
            AttributeSet(scene.opacity_logits, scene.sh),
            AttributeSet(message.opacity_logits, message.sh),
        )
        with tempfile.TemporaryDirectory() as tmp:
            save_dual(dual, path.join(tmp, "dual.bin"))
            loaded = load_dual(path.join(tmp, "dual.bin"))
        np.testing.assert_array_equal(loaded.geometry.positions, dual.geometry.positions)
        np.testing.assert_array_equal(loaded.message.sh, dual.message.sh)
        np.testing.assert_array_equal(loaded.scene.opacity_logits, dual.scene.opacity_logits)
