import logging

import attrs

from oracle.metrics import METRICS, pick_metric
from oracle.reference import ref_gemm
from ozgemm.pipeline import PHASES, block_widths, oz_gemm, oz_gemm_count

from ...base import ReportCommand, add_input_arguments
from ...reports import write_csv
from ...serializers import SweepOptionsSerializer
from ...utils import gen_pair

logger = logging.getLogger(__name__)

HEADER = (
    ["k_block", "blocks", "predicted_gemms", "gemms"]
    + [f"{phase}_ops" for phase in PHASES]
    + [f"{phase}_seconds" for phase in PHASES]
    + ["error_metric", "max_error"]
)


class Command(ReportCommand):
    help = "Run one input through a list of inner-dimension block sizes and print cost and error per size as CSV."

    options_serializer = SweepOptionsSerializer

    def add_arguments(self, parser):
        add_input_arguments(parser)
        parser.add_argument("--kblocks", default="64,256,1024", help="Comma-separated block sizes, 0 for none")

    def run(self, options):
        serializer = self.validated(options)
        data = serializer.validated_data
        A, B = gen_pair(data["init"], data["m"], data["n"], data["k"], data["seed"], data["lo"], data["hi"], data["spread"])
        reference = ref_gemm(A, B)
        metric = pick_metric(reference)
        base = serializer.config()

        rows = []
        for k_block in data["kblocks"]:
            cfg = attrs.evolve(base, k_block=k_block)
            result = oz_gemm(A, B, cfg)
            stats = result.stats
            predicted = oz_gemm_count(data["m"], data["n"], data["k"], cfg)
            logger.info(f"[kblock_sweep] k_block={k_block}: {stats.gemm_count} GEMMs")
            rows.append(
                [k_block, len(block_widths(data["k"], k_block)), predicted, stats.gemm_count]
                + [stats.ops[phase] for phase in PHASES]
                + [f"{stats.seconds[phase]:.6f}" for phase in PHASES]
                + [metric, repr(METRICS[metric](result.C, reference))]
            )
        write_csv(self.stdout, HEADER, rows)

