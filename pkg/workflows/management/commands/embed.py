from workflows.commands import StegoCommand
from workflows.pipeline import run_embed


class Command(StegoCommand):
    help = "Hide the message attributes of a trained pair in a stego PLY and write its key."

    def add_inputs(self, parser):
        parser.add_argument("dual", help="dual.bin written by train_pair")
        parser.add_argument("stego", help="output stego PLY")
        parser.add_argument("key", help="output key file")

    def run(self, config, **options):
        return run_embed(options["dual"], options["stego"], options["key"], config)
