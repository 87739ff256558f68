import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from attacks.models import AttackKind
from core.exceptions import ConfigError, IoFailure
from opacity_net.models import Encoder
from sh_codec.models import BitMode, BitPlan
from stego_train.models import TrainConfig
from workflows.config import LOCK_FILE, RunConfig, build_config, clean_section, load_run_config, parse_override, write_lock
from workflows.forms import BitPlanForm, NumberListField, TrainForm


class FormTests(SimpleTestCase):
    def test_bitplan_defaults_are_valid(self):
        form = BitPlanForm(data={"k": 13, "n": 16, "gamma_bits": 24, "mode": "quantized-integer", "graded": True})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data["n"], 16)

    def test_float_bit_pattern_needs_32_bits(self):
        form = BitPlanForm(data={"k": 13, "n": 16, "gamma_bits": 24, "mode": "float-bit-pattern", "graded": True})
        self.assertFalse(form.is_valid())
        self.assertIn("gamma_bits = 32", str(form.errors))

    def test_shift_overflow_is_reported(self):
        form = BitPlanForm(data={"k": 22, "n": 16, "gamma_bits": 24, "mode": "quantized-integer", "graded": True})
        self.assertFalse(form.is_valid())
        self.assertIn("largest shift 25", str(form.errors))

    def test_uniform_shift_fits_where_graded_does_not(self):
        form = BitPlanForm(data={"k": 22, "n": 16, "gamma_bits": 24, "mode": "quantized-integer", "graded": False})
        self.assertTrue(form.is_valid(), form.errors)

    def test_background_needs_three_values(self):
        data = {name: field.initial for name, field in TrainForm.base_fields.items()}
        form = TrainForm(data=data | {"background": [0.0, 1.0]})
        self.assertFalse(form.is_valid())
        self.assertIn("background", form.errors)

    def test_number_list_rejects_fractional_ints(self):
        field = NumberListField(kind=int, min_value=1)
        self.assertEqual(field.clean([64, 32]), [64, 32])
        with self.assertRaises(ValidationError):
            field.clean([64, 1.5])
        with self.assertRaises(ValidationError):
            field.clean("64")


class BuildConfigTests(SimpleTestCase):
    def test_empty_document_gives_defaults(self):
        run = build_config({})
        self.assertEqual(run, RunConfig())
        self.assertEqual(run.train, TrainConfig())
        self.assertEqual(run.bitplan, BitPlan())
        self.assertEqual(run.train.lambda_cons, 0.02)
        self.assertEqual(run.hashgrid.table_size, 2**16)
        self.assertEqual(run.attack.ratio, 0.3)

    def test_sections_are_frozen_into_module_types(self):
        run = build_config(
            {
                "bitplan": {"mode": "float-bit-pattern", "gamma_bits": 32},
                "quant": {"gamma_bits": 32},
                "mlp": {"encoder": "none", "hidden": [8, 8, 8]},
                "attack": {"kind": "sh-noise", "sigma": 0.005},
            }
        )
        self.assertIs(run.bitplan.mode, BitMode.FLOAT_BIT_PATTERN)
        self.assertIs(run.mapping.encoder, Encoder.NONE)
        self.assertEqual(run.mapping.hidden, (8, 8, 8))
        self.assertIs(run.attack.kind, AttackKind.SH_NOISE)
        self.assertEqual(run.attack.sigma, 0.005)

    def test_unknown_section(self):
        with self.assertRaisesMessage(ConfigError, "unknown section(s): render"):
            build_config({"render": {}})

    def test_unknown_key(self):
        with self.assertRaisesMessage(ConfigError, "unknown key(s) in [train]: iters"):
            build_config({"train": {"iters": 5}})

    def test_section_must_be_table(self):
        with self.assertRaisesMessage(ConfigError, "[train] must be a table"):
            build_config({"train": 5})

    def test_field_errors_name_section_and_key(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config({"train": {"iterations": 0}})
        self.assertIn("train.iterations", str(ctx.exception))

    def test_ratio_of_one_is_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config({"attack": {"ratio": 1.0}})
        self.assertIn("attack.ratio", str(ctx.exception))

    def test_non_power_of_two_delta(self):
        with self.assertRaisesMessage(ConfigError, "power of two"):
            build_config({"quant": {"delta": 0.3}})

    def test_gamma_bits_must_agree_in_quantized_mode(self):
        with self.assertRaisesMessage(ConfigError, "must agree"):
            build_config({"quant": {"gamma_bits": 32}})

    def test_clean_section_fills_defaults(self):
        values = clean_section("hashgrid", {"levels": 4})
        self.assertEqual(values["levels"], 4)
        self.assertEqual(values["r_max"], 1024)


class OverrideTests(SimpleTestCase):
    def test_toml_literals(self):
        self.assertEqual(parse_override("train.iterations=5"), ("train", "iterations", 5))
        self.assertEqual(parse_override("mlp.hidden=[8, 8]"), ("mlp", "hidden", [8, 8]))
        self.assertEqual(parse_override("quant.auto_fit=false"), ("quant", "auto_fit", False))
        self.assertEqual(parse_override('attack.kind="sh-noise"'), ("attack", "kind", "sh-noise"))

    def test_bare_words_become_strings(self):
        self.assertEqual(parse_override("io.geometry=out/geometry.ply"), ("io", "geometry", "out/geometry.ply"))

    def test_malformed(self):
        for text in ("train.iterations", "iterations=5", ".x=1", "train.=1"):
            with self.subTest(text=text), self.assertRaises(ConfigError):
                parse_override(text)

    def test_seed_and_threads(self):
        run = load_run_config(overrides=["train.iterations=7"], threads=3, seed=11)
        self.assertEqual(run.train.iterations, 7)
        self.assertEqual((run.train.seed, run.mapping.seed, run.attack.seed), (11, 11, 11))
        self.assertEqual(run.io.worker_threads, 3)
        self.assertIsNone(RunConfig().io.worker_threads)

    def test_override_unknown_section(self):
        with self.assertRaises(ConfigError):
            load_run_config(overrides=["render.size=5"])


class FileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_file_and_overrides(self):
        path = self.dir / "run.toml"
        path.write_text("[train]\niterations = 20\nlambda_cons = 0.0\n")
        run = load_run_config(path, ["train.iterations=9"])
        self.assertEqual(run.train.iterations, 9)
        self.assertEqual(run.train.lambda_cons, 0.0)

    def test_missing_file(self):
        with self.assertRaises(IoFailure) as ctx:
            load_run_config(self.dir / "absent.toml")
        self.assertIn("absent.toml", str(ctx.exception))

    def test_invalid_toml(self):
        path = self.dir / "run.toml"
        path.write_text("[train\n")
        with self.assertRaises(ConfigError):
            load_run_config(path)

    def test_lock_reproduces_the_run(self):
        run = load_run_config(overrides=["train.iterations=9", "mlp.hidden=[8, 4]", "attack.kind=sh-noise"], seed=4)
        lock = write_lock(run, self.dir / "out")
        self.assertEqual(lock.name, LOCK_FILE)
        with open(lock, "rb") as handle:
            document = tomllib.load(handle)
        self.assertEqual(document["train"]["iterations"], 9)
        self.assertEqual(document["bitplan"]["k"], 13)
        self.assertEqual(load_run_config(lock), run)
