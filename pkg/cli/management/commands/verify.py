import time

from django.conf import settings
from django.core.management.base import CommandError

from ...base import ReportCommand
from ...reports import RunReport
from ...serializers import VerifyOptionsSerializer
from ...suites import ALL, run_suites


class Command(ReportCommand):
    help = "Run the invariant suites and exit with status 1 if any check fails."

    options_serializer = VerifyOptionsSerializer

    def add_arguments(self, parser):
        parser.add_argument("--suite", default=ALL)
        parser.add_argument("--trials", type=int, default=settings.OZ_VERIFY_TRIALS)
        parser.add_argument("--seed", type=int, default=settings.OZ_DEFAULT_SEED)
        parser.add_argument("--out", default=None)

    def run(self, options):
        data = self.validated(options).validated_data
        tic = time.perf_counter()
        results = run_suites(data["suite"], data["trials"], data["seed"])
        report = RunReport(
            command="verify",
            config=dict(data),
            checks=[result.as_dict() for result in results],
            timings={"total": time.perf_counter() - tic},
        )
        self.emit(report, options["out"])
        failed = [result.name for result in results if not result.passed]
        if failed:
            raise CommandError(f"verify failed: {', '.join(failed)}")
