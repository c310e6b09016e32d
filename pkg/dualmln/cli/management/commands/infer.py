import logging

from django.core.management.base import BaseCommand, CommandError

from cli.config import RunConfig
from cli.pipeline import infer, write_outputs
from core import constants
from core.types import DualMLNError, InfeasibleTaskError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Run MAP or marginal inference with dual decomposition"

    def add_arguments(self, parser):
        parser.add_argument("-i", "--program", required=True, help="Program file")
        parser.add_argument("-e", "--evidence", help="Evidence file")
        parser.add_argument(
            "-q",
            "--queries",
            action="append",
            help="Relations to report (repeat or separate with commas)",
        )
        parser.add_argument("-o", "--output", help="Result file (default: stdout)")
        parser.add_argument(
            "--mode", choices=constants.MODES, default=constants.MODE_MAP
        )
        parser.add_argument("--iters", type=int, help="Maximum number of rounds")
        parser.add_argument("--step", type=float, help="Initial step size")
        parser.add_argument(
            "--schedule", choices=constants.STEP_SCHEDULES, help="Step size schedule"
        )
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument(
            "--monolithic",
            action="store_true",
            help="Disable decomposition and solve one generic task",
        )
        parser.add_argument("--trace", help="Write the per-round trace as TSV")
        parser.add_argument("--workers", type=int, help="Concurrent task solves")
        parser.add_argument("--plot", help="Write the convergence chart as PNG")
        parser.add_argument(
            "--max-flips", type=int, help="MaxWalkSAT flips per restart"
        )
        parser.add_argument("--restarts", type=int, help="MaxWalkSAT restarts")
        parser.add_argument("--samples", type=int, help="Gibbs samples per component")

    def handle(self, *args, **options):
        try:
            run = RunConfig.from_options(options)
            compiled, result = infer(run)
        except InfeasibleTaskError as exc:
            raise CommandError(str(exc), returncode=constants.EXIT_INFEASIBLE) from exc
        except DualMLNError as exc:
            raise CommandError(str(exc), returncode=constants.EXIT_INPUT_ERROR) from exc

        rows = write_outputs(run, compiled, result)
        if run.output is None:
            for row in rows:
                self.stdout.write(row)

        status = "certified optimal" if result.stats.certified else "best effort"
        summary = (
            f"{result.mode} inference: {result.stats.iterations} round(s), "
            f"stopped on {result.stats.stop_reason}, cost {result.cost:g} ({status})"
        )
        if not result.feasible:
            self.stderr.write(self.style.WARNING(summary))
            raise CommandError(
                "No world satisfies every hard rule; best effort written",
                returncode=constants.EXIT_INFEASIBLE,
            )
        if run.output is not None:
            self.stdout.write(self.style.SUCCESS(summary))
        else:
            logger.info(summary)
