from django.core.management.base import BaseCommand

from ...reports import slices_table_rows, write_csv


class Command(BaseCommand):
    help = "Print the minimum number of low-precision GEMMs per DGEMM for each format pair and k."

    def add_arguments(self, parser):
        parser.add_argument(
            "--all-formats", dest="all_formats", action="store_true",
            help="Add the BF16, FP8 E5M2 and FP6 E2M3 columns",
        )

    def handle(self, *args, **options):
        write_csv(self.stdout, ["type2", "type3", "k", "gemm_count"], slices_table_rows(options["all_formats"]))
