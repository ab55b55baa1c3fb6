from apps.analysis.services import crosscheck_report
from apps.core.base import RunCommand
from apps.reports.services import write_diagnostics_json
from idmodds.error_handlers import command_errors


class Command(RunCommand):
    help = "Check the prevalence formulas, PDEs and incidence reconstruction against each other."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--t", type=float, default=100.0)
        parser.add_argument("--age", type=float, default=60.0)
        parser.add_argument("--h", type=float, default=0.1)

    @command_errors
    def handle(self, *args, **options):
        config = self.load(options)
        report = crosscheck_report(config.rate_model(), options["t"], options["age"], options["h"])

        output_dir = self.output_dir(config, options)
        path = write_diagnostics_json(output_dir / "crosscheck.json", report)
        self.finish("crosscheck", config, output_dir, [path])
