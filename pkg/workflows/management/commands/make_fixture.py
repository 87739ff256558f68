from workflows.commands import StegoCommand
from workflows.fixtures import FixtureSpec, make_fixture


class Command(StegoCommand):
    help = "Write two synthetic scenes sharing one geometry (views, cameras and ground-truth PLYs)."
    uses_run_config = False

    def add_inputs(self, parser):
        parser.add_argument("out_dir")
        parser.add_argument("--primitives", type=int, default=FixtureSpec.primitives)
        parser.add_argument("--views", type=int, default=FixtureSpec.views)
        parser.add_argument("--message-views", type=int, default=None, help="views of the hidden scene (default: --views)")
        parser.add_argument("--size", type=int, default=FixtureSpec.width, help="square view size in pixels")
        parser.add_argument("--seed", type=int, default=FixtureSpec.seed)

    def run(self, config, **options):
        spec = FixtureSpec(
            primitives=options["primitives"],
            views=options["views"],
            message_views=options["message_views"],
            width=options["size"],
            height=options["size"],
            seed=options["seed"],
        )
        return list(make_fixture(options["out_dir"], spec, options["threads"]).values())
