import logging

from django.core.management.base import BaseCommand, CommandError

from cli.config import RunConfig
from cli.pipeline import compile_report
from core import constants
from core.types import DualMLNError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Compile an MLN program into a logical plan and print it"

    def add_arguments(self, parser):
        parser.add_argument("-i", "--program", required=True, help="Program file")
        parser.add_argument("-e", "--evidence", help="Evidence file")
        parser.add_argument(
            "--monolithic",
            action="store_true",
            help="Put every rule into one generic task",
        )
        parser.add_argument(
            "--explain-plan",
            action="store_true",
            help="Also print each data-movement view with its chosen materialization",
        )

    def handle(self, *args, **options):
        try:
            run = RunConfig.from_options(options)
            report = compile_report(run, explain_plan=options["explain_plan"])
        except DualMLNError as exc:
            raise CommandError(str(exc), returncode=constants.EXIT_INPUT_ERROR) from exc
        self.stdout.write(report, ending="")
