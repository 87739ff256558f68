from workflows.commands import StegoCommand
from workflows.pipeline import run_train_pair


class Command(StegoCommand):
    help = "Jointly train the public and hidden attribute sets over a fixed geometry."

    def add_inputs(self, parser):
        parser.add_argument("scene_dir", help="public scene views (cameras.json + PNGs)")
        parser.add_argument("message_dir", help="hidden scene views (cameras.json + PNGs)")
        parser.add_argument("out_dir")
        parser.add_argument("--geometry", default=None, help="PLY whose geometry is kept fixed (overrides io.geometry)")

    def run(self, config, **options):
        return run_train_pair(options["scene_dir"], options["message_dir"], options["out_dir"], config, options["geometry"])
