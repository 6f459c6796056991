from pathlib import Path

import numpy as np

from ozgemm.pipeline import oz_gemm

from ...base import ReportCommand, add_gemm_arguments
from ...reports import RunReport
from ...serializers import GemmOptionsSerializer
from ...utils import gen_pair


def run_pipeline(serializer):
    data = serializer.validated_data
    cfg = serializer.config()
    A, B = gen_pair(data["init"], data["m"], data["n"], data["k"], data["seed"], data["lo"], data["hi"], data["spread"])
    return A, B, cfg, oz_gemm(A, B, cfg)


def echo_config(data):
    return {key: value for key, value in data.items() if key != "out"}


class Command(ReportCommand):
    help = "Multiply two generated matrices with the Ozaki scheme and report slice and GEMM statistics."

    options_serializer = GemmOptionsSerializer

    def add_arguments(self, parser):
        add_gemm_arguments(parser)
        parser.add_argument("--dump", default=None, help="Save C to this .npy file")

    def run(self, options):
        serializer = self.validated(options)
        _, _, _, result = run_pipeline(serializer)
        stats = result.stats.as_dict()
        seconds = stats.pop("seconds")

        matrix_path = None
        if options["dump"]:
            matrix_path = str(Path(options["dump"]))
            np.save(matrix_path, result.C)

        report = RunReport(
            command="gemm",
            config=echo_config(serializer.validated_data),
            stats=stats,
            matrix_path=matrix_path,
            timings=seconds,
        )
        self.emit(report, options["out"])
