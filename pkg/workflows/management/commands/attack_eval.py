from dataclasses import replace

from attacks.models import AttackKind
from core.exceptions import ConfigError
from workflows.commands import StegoCommand
from workflows.pipeline import run_attack_eval


class Command(StegoCommand):
    help = "Attack a stego PLY and report scene/message quality decay and the robustness score."

    def add_inputs(self, parser):
        parser.add_argument("stego")
        parser.add_argument("key")
        parser.add_argument("scene_dir", help="public ground-truth views")
        parser.add_argument("message_dir", help="hidden ground-truth views")
        parser.add_argument("report", help="output JSON report")
        parser.add_argument("--attack", choices=[kind.value for kind in AttackKind], default=None, help="overrides attack.kind")
        parser.add_argument("--ratio", type=float, default=None, help="overrides attack.ratio")
        parser.add_argument("--sigma", type=float, nargs="+", default=None, help="one or more noise levels; one report row each")
        parser.add_argument("--table", default=None, help="CSV to append table rows to")

    def extra_overrides(self, options):
        overrides = []
        if options["attack"]:
            overrides.append(f'attack.kind="{options["attack"]}"')
        if options["ratio"] is not None:
            overrides.append(f"attack.ratio={options['ratio']!r}")
        if options["sigma"]:
            overrides.append(f"attack.sigma={options['sigma'][0]!r}")
        return overrides

    def run(self, config, **options):
        sigmas = options["sigma"] or [config.attack.sigma]
        try:
            specs = [replace(config.attack, sigma=sigma) for sigma in sigmas]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return run_attack_eval(
            options["stego"], options["key"], options["scene_dir"], options["message_dir"], options["report"], specs, config, options["table"]
        )
