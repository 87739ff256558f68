from workflows.commands import StegoCommand
from workflows.pipeline import run_render


class Command(StegoCommand):
    help = "Render a PLY from every camera of a cameras.json into PNGs."

    def add_inputs(self, parser):
        parser.add_argument("ply")
        parser.add_argument("cameras")
        parser.add_argument("out_dir")

    def run(self, config, **options):
        return run_render(options["ply"], options["cameras"], options["out_dir"], config)
