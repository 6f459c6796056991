import time

from oracle.metrics import METRICS, AccuracyReport, pick_metric
from oracle.reference import naive_gemm_fp64, ref_gemm

from ...base import ReportCommand, add_gemm_arguments
from ...reports import RunReport
from ...serializers import AccuracyOptionsSerializer
from .gemm import echo_config, run_pipeline


class Command(ReportCommand):
    help = "Compare the Ozaki result and the FP64 triple loop against the correctly rounded product."

    options_serializer = AccuracyOptionsSerializer

    def add_arguments(self, parser):
        add_gemm_arguments(parser)
        parser.add_argument(
            "--abs-error", dest="abs_error", action="store_true",
            help="Report max absolute error (used anyway when the reference has zero entries)",
        )

    def run(self, options):
        serializer = self.validated(options)
        data = serializer.validated_data
        A, B, cfg, result = run_pipeline(serializer)
        stats = result.stats.as_dict()
        timings = stats.pop("seconds")

        tic = time.perf_counter()
        reference = ref_gemm(A, B)
        timings["reference"] = time.perf_counter() - tic
        tic = time.perf_counter()
        naive = naive_gemm_fp64(A, B, k_block=cfg.k_block)
        timings["naive"] = time.perf_counter() - tic

        metric = pick_metric(reference, absolute=data["abs_error"])
        error = METRICS[metric]
        accuracy = AccuracyReport(
            size=(data["m"], data["n"], data["k"]),
            type2=cfg.type2.name,
            type3=cfg.type3.name,
            kblock=cfg.k_block,
            err_oz=error(result.C, reference),
            err_naive=error(naive, reference),
            metric=metric,
        )
        report = RunReport(
            command="accuracy",
            config=echo_config(data),
            stats=stats,
            accuracy=accuracy.as_dict(),
            timings=timings,
        )
        self.emit(report, options["out"])
