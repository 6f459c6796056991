import csv

import attrs
from django.conf import settings
from rest_framework.renderers import JSONRenderer

from helpers.exceptions import SlicingInfeasible
from lpformat.formats import BF16, FP6_E2M3, FP6_E3M2, FP8_E4M3, FP8_E5M2, FP16, FP32, FP64
from slicing.params import check_feasible, params_for, predict_gemm_count

from .serializers import RunReportSerializer

TABLE_K = [2 ** e for e in range(3, 19)]
TABLE_COLUMNS = [
    (FP16, FP32), (FP16, FP16),
    (FP8_E4M3, FP32), (FP8_E4M3, FP16),
    (FP6_E3M2, FP32), (FP6_E3M2, FP16),
]
EXTRA_COLUMNS = [
    (BF16, FP32), (BF16, FP16),
    (FP8_E5M2, FP32), (FP8_E5M2, FP16),
    (FP6_E2M3, FP32), (FP6_E2M3, FP16),
]
INFEASIBLE = "--"


@attrs.define
class RunReport:
    command: str
    config: dict
    stats: dict = None
    accuracy: dict = None
    checks: list = None
    matrix_path: str = None
    timings: dict = attrs.Factory(dict)
    schema_version: int = attrs.Factory(lambda: settings.OZ_REPORT_SCHEMA_VERSION)


def render_report(report):
    data = RunReportSerializer(report).data
    return JSONRenderer().render(data, renderer_context={"indent": 2}).decode("utf-8")


def gemm_count_cell(type2, type3, k):
    try:
        check_feasible(params_for(type2, type3, k), type2, type3)
    except SlicingInfeasible:
        return INFEASIBLE
    count = predict_gemm_count(FP64.mant_bits, type2.mant_bits, type3.mant_bits, k)
    return INFEASIBLE if count is None else count


def slices_table_rows(all_formats=False):
    columns = TABLE_COLUMNS + (EXTRA_COLUMNS if all_formats else [])
    for type2, type3 in columns:
        for k in TABLE_K:
            yield type2.name, type3.name, k, gemm_count_cell(type2, type3, k)


def write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
