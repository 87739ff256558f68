from workflows.commands import StegoCommand
from workflows.pipeline import run_extract


class Command(StegoCommand):
    help = "Recover the hidden scene from a stego PLY and its key."

    def add_inputs(self, parser):
        parser.add_argument("stego")
        parser.add_argument("key")
        parser.add_argument("out", help="output hidden-scene PLY")

    def run(self, config, **options):
        return run_extract(options["stego"], options["key"], options["out"], config)
