import logging
import time
from pathlib import Path

import humanfriendly
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from helpers.exceptions import OzakiError

from .reports import render_report
from .utils import INITS

logger = logging.getLogger(__name__)


def add_matrix_arguments(parser):
    parser.add_argument("--m", type=int, default=64)
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--k", type=int, default=64)
    parser.add_argument("--type2", default=settings.OZ_DEFAULT_TYPE2)
    parser.add_argument("--type3", default=settings.OZ_DEFAULT_TYPE3)
    parser.add_argument("--fp64emu", action="store_true", help="Run FP64 steps on the integer emulation")
    parser.add_argument("--seed", type=int, default=settings.OZ_DEFAULT_SEED)
    parser.add_argument("--init", default="uniform", help=", ".join(value for value, _ in INITS))


def add_input_arguments(parser):
    """Matrix shape, formats and generator options shared by every GEMM-running command."""
    add_matrix_arguments(parser)
    parser.add_argument("--max-slices", dest="max_slices", type=int, default=None)
    parser.add_argument("--kernel", default=settings.OZ_LP_KERNEL)
    parser.add_argument("--lo", type=float, default=1.0)
    parser.add_argument("--hi", type=float, default=10.0)
    parser.add_argument("--spread", type=int, default=8)


def add_gemm_arguments(parser):
    add_input_arguments(parser)
    parser.add_argument("--kblock", type=int, default=settings.OZ_DEFAULT_KBLOCK)
    parser.add_argument("--out", default=None, help="Write the JSON report here instead of stdout")


class ReportCommand(BaseCommand):
    """Validates options with a serializer and turns numerical errors into CommandError."""

    options_serializer = None

    def validated(self, options):
        serializer = self.options_serializer(data=options)
        if not serializer.is_valid():
            problems = "; ".join(
                f"{field}: {' '.join(str(e) for e in errors)}" for field, errors in serializer.errors.items()
            )
            raise CommandError(f"invalid options: {problems}")
        return serializer

    def handle(self, *args, **options):
        name = type(self).__module__.rsplit(".", 1)[-1]
        logger.info(f"[{name}] starting")
        tic = time.perf_counter()
        try:
            result = self.run(options)
        except (OzakiError, OverflowError, ZeroDivisionError) as exc:
            raise CommandError(f"{name} failed ({type(exc).__name__}): {exc}")
        logger.info(f"[{name}] finished in {humanfriendly.format_timespan(time.perf_counter() - tic)}")
        return result

    def run(self, options):
        raise NotImplementedError

    def emit(self, report, out=None):
        text = render_report(report)
        if out:
            Path(out).write_text(text + "\n", encoding="utf-8")
            logger.info(f"Report written to {out}")
        else:
            self.stdout.write(text)
