"""Run configuration: TOML document -> validated sections -> frozen RunConfig.

Every section is validated by its form in ``workflows.forms``; defaults come from the
form fields' ``initial`` values. The effective document, defaults included, is what
``write_lock`` stores, so a lock file fed back reproduces the run.
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

import tomli_w

from attacks.models import AttackKind, AttackSpec
from core.exceptions import ConfigError, IoFailure
from hash_grid.models import HashGridConfig
from opacity_net.models import Encoder, MappingConfig
from sh_codec.models import BitMode, BitPlan, QuantParams
from stego_train.models import TrainConfig
from workflows.forms import AttackForm, BitPlanForm, HashGridForm, IoForm, MlpForm, QuantForm, TrainForm

LOCK_FILE = "config.lock.toml"

SECTIONS = {
    "bitplan": BitPlanForm,
    "quant": QuantForm,
    "hashgrid": HashGridForm,
    "mlp": MlpForm,
    "train": TrainForm,
    "attack": AttackForm,
    "io": IoForm,
}
SEEDED_SECTIONS = ("mlp", "train", "attack")


@dataclass(frozen=True)
class IoConfig:
    geometry: str = ""
    threads: int = 0

    @property
    def worker_threads(self) -> int | None:
        return self.threads or None


@dataclass(frozen=True)
class RunConfig:
    bitplan: BitPlan = BitPlan()
    quant: QuantParams = QuantParams()
    auto_fit_quant: bool = True
    hashgrid: HashGridConfig = HashGridConfig()
    mapping: MappingConfig = MappingConfig()
    train: TrainConfig = TrainConfig()
    attack: AttackSpec = AttackSpec()
    io: IoConfig = IoConfig()
    document: dict = field(default_factory=dict, compare=False, repr=False)


def _defaults(form_class) -> dict:
    return {name: f.initial for name, f in form_class.base_fields.items()}


def _form_errors(section: str, form) -> str:
    messages = []
    for name, errors in form.errors.items():
        where = section if name == "__all__" else f"{section}.{name}"
        messages.extend(f"{where}: {error}" for error in errors)
    return "; ".join(messages)


def clean_section(section: str, values: dict) -> dict:
    """Validated values of one section, defaults filled in."""
    form_class = SECTIONS[section]
    unknown = sorted(set(values) - set(form_class.base_fields))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    form = form_class(data=_defaults(form_class) | values)
    if not form.is_valid():
        raise ConfigError(_form_errors(section, form))
    return dict(form.cleaned_data)


def build_config(document: dict) -> RunConfig:
    unknown = sorted(set(document) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    for section, values in document.items():
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table")
    clean = {section: clean_section(section, document.get(section, {})) for section in SECTIONS}

    bp, q, hg, mlp, tr, at, io = (clean[s] for s in SECTIONS)
    try:
        run = RunConfig(
            bitplan=BitPlan(bp["k"], bp["n"], bp["gamma_bits"], BitMode(bp["mode"]), bp["graded"]),
            quant=QuantParams(q["c_min"], q["delta"], q["gamma_bits"]),
            auto_fit_quant=q["auto_fit"],
            hashgrid=HashGridConfig(hg["levels"], hg["r_min"], hg["r_max"], hg["table_size"], hg["feature_dim"], always_hash=hg["always_hash"]),
            mapping=MappingConfig(Encoder(mlp["encoder"]), tuple(mlp["hidden"]), mlp["epochs"], mlp["lr"], mlp["seed"], mlp["log_every"]),
            train=TrainConfig(
                iterations=tr["iterations"],
                lambda_message=tr["lambda_message"],
                lambda_cons=tr["lambda_cons"],
                ssim_weight=tr["ssim_weight"],
                lr_opacity=tr["lr_opacity"],
                lr_sh_dc=tr["lr_sh_dc"],
                lr_sh_rest=tr["lr_sh_rest"],
                visibility_every=tr["visibility_every"],
                background=tuple(tr["background"]),
                seed=tr["seed"],
                log_every=tr["log_every"],
            ),
            attack=AttackSpec(AttackKind(at["kind"]), at["ratio"], at["sigma"], at["seed"]),
            io=IoConfig(io["geometry"], io["threads"]),
            document=clean,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if run.bitplan.gamma_bits != run.quant.gamma_bits and run.bitplan.mode is BitMode.QUANTIZED_INTEGER:
        raise ConfigError("bitplan.gamma_bits and quant.gamma_bits must agree")
    return run


def parse_override(text: str) -> tuple[str, str, object]:
    """``section.key=value`` with the value read as a TOML literal (bare words become strings)."""
    target, sep, raw = text.partition("=")
    section, dot, key = target.strip().partition(".")
    if not sep or not dot or not section or not key:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    try:
        value = tomllib.loads(f"value = {raw.strip()}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return section, key.strip(), value


def load_document(path: str | PathLike) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path} is not valid TOML: {exc}") from exc


def load_run_config(path=None, overrides=(), threads: int | None = None, seed: int | None = None) -> RunConfig:
    document = load_document(path) if path else {}
    for text in overrides:
        section, key, value = parse_override(text)
        if section not in SECTIONS:
            raise ConfigError(f"unknown section in override {text!r}")
        document.setdefault(section, {})[key] = value
    if threads is not None:
        document.setdefault("io", {})["threads"] = threads
    if seed is not None:
        for section in SEEDED_SECTIONS:
            document.setdefault(section, {})["seed"] = seed
    return build_config(document)


def write_lock(run: RunConfig, directory: str | PathLike) -> Path:
    path = Path(directory) / LOCK_FILE
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(tomli_w.dumps(run.document))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path
