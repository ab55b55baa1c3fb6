from apps.core.base import RunCommand
from apps.reports.services import write_ledger_csv, write_table_csv
from apps.simulation.services import calibrate_births, replicate_runs
from idmodds.error_handlers import command_errors


class Command(RunCommand):
    help = "Simulate current-status studies and write one age-group table per replicate."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--seed", type=int, help="seed of the first replicate")
        parser.add_argument("--replicates", type=int, default=1)
        parser.add_argument("--births", type=int, help="births per year (skips calibration)")

    @command_errors
    def handle(self, *args, **options):
        config = self.load(options)
        config = config.with_override("simulation", "rng_seed", options["seed"])
        if options["births"] is not None:
            config = config.with_override("simulation", "births_per_year", options["births"])

        model = config.rate_model()
        sim_config = config.sim_config()
        if config.calibration_target and options["births"] is None:
            sim_config = calibrate_births(model, sim_config, config.calibration_target)

        output_dir = self.output_dir(config, options)
        outputs = []
        runs = replicate_runs(model, sim_config, options["replicates"], config.quadrature())
        for replicate, ledger, table in runs:
            outputs.append(write_table_csv(output_dir / f"table_seed{replicate.rng_seed}.csv", table))
            if config.dump_ledger:
                outputs.append(
                    write_ledger_csv(output_dir / f"ledger_seed{replicate.rng_seed}.csv", ledger)
                )

        self.finish("simulate", config, output_dir, outputs, rng_seed=sim_config.rng_seed)
