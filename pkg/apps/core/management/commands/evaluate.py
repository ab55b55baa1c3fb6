import numpy as np

from apps.analysis.results import CohortBaseline, Method
from apps.analysis.services import prevalence_curve
from apps.core.base import RunCommand
from apps.rates.params import ExponentialFirstOrder
from apps.reports.services import write_curve_csv
from idmodds.error_handlers import command_errors

METHOD_CHOICES = [m.value for m in Method] + ["all"]
DEFAULT_STEP = 0.25


class Command(RunCommand):
    help = "Evaluate the prevalence odds curve over an age grid at one calendar time."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--t", type=float, default=100.0)
        parser.add_argument("--age-min", type=float, default=30.0)
        parser.add_argument("--age-max", type=float, default=100.0)
        parser.add_argument("--step", type=float, default=DEFAULT_STEP, help="age grid step in years")
        parser.add_argument("--method", choices=METHOD_CHOICES, default=Method.PSEUDO_CONVOLUTION.value)

    @command_errors
    def handle(self, *args, **options):
        config = self.load(options)
        model = config.rate_model()

        if options["method"] == "all":
            methods = [Method.PSEUDO_CONVOLUTION, Method.KEIDING, Method.COHORT_RATIO]
            if isinstance(model.incidence, ExponentialFirstOrder):
                methods.append(Method.CONVOLUTION_SPECIAL)
        else:
            methods = [Method(options["method"])]

        step = options["step"]
        ages = np.arange(options["age_min"], options["age_max"] + step / 2, step)
        curves = prevalence_curve(
            model, CohortBaseline(), options["t"], ages, methods, config.quadrature()
        )

        output_dir = self.output_dir(config, options)
        path = write_curve_csv(output_dir / "curve.csv", ages, curves)
        self.finish("evaluate", config, output_dir, [path])
