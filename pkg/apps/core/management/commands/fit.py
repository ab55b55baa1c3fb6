from django.core.management.base import CommandError

from apps.core.base import RunCommand
from apps.estimation.services import fit
from apps.reports.services import (
    read_age_group_table,
    read_bundled_table,
    write_fit_json,
    write_table2_csv,
)
from idmodds.error_handlers import EXIT_NOT_CONVERGED, command_errors


class Command(RunCommand):
    help = "Fit the mortality ratio parameters to an age-group table."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--data", help="age-group CSV (default: bundled published table)")
        parser.add_argument("--t", type=float, help="calendar time of the cross-section")

    @command_errors
    def handle(self, *args, **options):
        config = self.load(options)
        t = options["t"]
        if t is None:
            t = config.section("simulation").get("cross_section_time", 100.0)
        if options["data"]:
            table = read_age_group_table(options["data"], t)
        else:
            table = read_bundled_table(t)

        model = config.rate_model()
        gamma_input = model.ratio.gamma if config.echo_input else None
        result = fit(table, config.fit_config(model), gamma_input=gamma_input)

        output_dir = self.output_dir(config, options)
        outputs = []
        if "json" in config.formats:
            outputs.append(write_fit_json(output_dir / "fit.json", result))
        if "csv" in config.formats:
            outputs.append(write_table2_csv(output_dir / "table2.csv", result))
        self.finish("fit", config, output_dir, outputs)

        if not result.converged:
            raise CommandError(
                f"fit did not converge: {result.diagnostics['message']}",
                returncode=EXIT_NOT_CONVERGED,
            )
