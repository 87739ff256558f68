"""Shared plumbing of the management commands."""

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import StegoError
from workflows.config import load_run_config


class StegoCommand(BaseCommand):
    """Base command: builds the RunConfig and maps StegoError to exit codes.

    Subclasses implement ``run(config, **options)`` and return the paths they wrote.
    """

    uses_run_config = True

    def add_arguments(self, parser):
        self.add_inputs(parser)
        parser.add_argument("--threads", type=int, default=None, help="worker threads (default: SPLAT_THREADS)")
        if self.uses_run_config:
            parser.add_argument("--config", dest="config_path", default=None, help="TOML run configuration")
            parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override one config value")
            parser.add_argument("--seed", type=int, default=None, help="seed for training, mapping and attacks")

    def add_inputs(self, parser):
        pass

    def extra_overrides(self, options) -> list[str]:
        """Overrides implied by command-specific flags, applied after --set."""
        return []

    def run(self, config, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            config = None
            if self.uses_run_config:
                overrides = options["overrides"] + self.extra_overrides(options)
                config = load_run_config(options["config_path"], overrides, options["threads"], options["seed"])
            written = self.run(config, **options)
        except StegoError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        for path in written:
            self.stdout.write(self.style.SUCCESS(f"wrote {path}"))
