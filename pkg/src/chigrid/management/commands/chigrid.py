import json
import logging
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from ...chiproc import GridKind
from ...config import config_from_dict, load_document
from ...exceptions import NumericalError
from ...models import Experiment
from ...outputs import (
    check_output_directory,
    read_samples,
    summary_dict,
    write_comparison,
    write_json,
    write_outputs,
    write_paths,
)
from ...services import (
    compare,
    replication_lattice,
    replication_spacing,
    resolve_constants,
    run_experiment,
    run_recorded_experiment,
    simulate_replication,
    theoretical_cdf,
)
from ...streams import MAX_SEED
from ...theory import limit_marginal

logger = logging.getLogger(__name__)

CONFIG_ERROR = 2
NUMERICAL_ERROR = 3
IO_ERROR = 4


def dump(data):
    return json.dumps(data, indent=2, sort_keys=True)


class Command(BaseCommand):
    help = "Simulate grid maxima of chi-processes and compare them with their limits"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)

        simulate = subparsers.add_parser("simulate", help="Simulate one replication")
        simulate.add_argument("--replication", type=int, default=0)

        subparsers.add_parser("pickands", help="Estimate the Pickands constants")
        subparsers.add_parser("limits", help="Tabulate the limiting joint CDF")

        compare_parser = subparsers.add_parser(
            "compare", help="Compare normalized samples with the limit"
        )
        compare_parser.add_argument("--samples", required=True)

        experiment = subparsers.add_parser("experiment", help="Run the full pipeline")
        experiment.add_argument("--record", action="store_true")
        experiment.add_argument("--title", default="")

        for sub in subparsers.choices.values():
            sub.add_argument("--config", required=True)
            sub.add_argument("--out", default=None)
            sub.add_argument("--seed", type=int, default=None)
            sub.add_argument("--workers", type=int, default=None)
            sub.add_argument("--force", action="store_true")

    def handle(self, *args, **options):
        handler = getattr(self, "handle_%s" % options["subcommand"])
        try:
            data = self.load_config_data(options)
            handler(data, config_from_dict(data), options)
        except ValidationError as e:
            raise CommandError(
                "Invalid configuration: %s" % "; ".join(e.messages),
                returncode=CONFIG_ERROR,
            ) from e
        except NumericalError as e:
            raise CommandError(str(e), returncode=NUMERICAL_ERROR) from e
        except OSError as e:
            raise CommandError(str(e), returncode=IO_ERROR) from e
        except ValueError as e:
            raise CommandError(str(e), returncode=NUMERICAL_ERROR) from e

    def load_config_data(self, options):
        data = load_document(Path(options["config"]).read_bytes())
        seed = options["seed"]
        if seed is not None:
            if not 0 <= seed <= MAX_SEED:
                raise CommandError(
                    "--seed must be a 64-bit unsigned integer", returncode=CONFIG_ERROR
                )
            data["master_seed"] = seed
        return data

    def output_path(self, options, name):
        if not options["out"]:
            return None
        return Path(options["out"]) / name

    def handle_simulate(self, data, config, options):
        index = options["replication"]
        if not 0 <= index:
            raise CommandError(
                "--replication must be nonnegative", returncode=CONFIG_ERROR
            )
        chi_input, chi, pair = simulate_replication(config, index)
        path = self.output_path(options, "paths.csv")
        if path is not None:
            if path.exists() and not options["force"]:
                raise CommandError(
                    "%s exists, pass --force to overwrite" % path, returncode=IO_ERROR
                )
            path.parent.mkdir(parents=True, exist_ok=True)
            stride = replication_spacing(config, chi.spec).stride
            write_paths(path, chi_input, chi, stride)
        self.stdout.write(
            dump(
                {
                    "replication_index": index,
                    "master_seed": config.master_seed,
                    "m_cont": pair.m_cont,
                    "m_grid": pair.m_grid,
                    "delta_used": pair.delta_used,
                    "T": pair.T,
                }
            )
        )

    def resolve(self, config, options):
        spacing = replication_spacing(config, replication_lattice(config))
        return resolve_constants(config, spacing, workers=options["workers"])

    def handle_pickands(self, data, config, options):
        constants = self.resolve(config, options)
        result = constants.to_dict()
        path = self.output_path(options, "constants.json")
        if path is not None:
            write_json(path, result, force=options["force"])
        self.stdout.write(dump(result))

    def handle_limits(self, data, config, options):
        constants = self.resolve(config, options)
        values = theoretical_cdf(config, constants)
        table = {
            "m": config.m,
            "r": config.r,
            "grid": config.grid.kind.value,
            "cdf": [
                {"x": x, "y": y, "value": float(value)}
                for (x, y), value in zip(config.eval_points, values, strict=True)
            ],
            "marginal": [
                {"x": x, "value": limit_marginal(x, config.r, config.m)}
                for x in sorted({x for point in config.eval_points for x in point})
            ],
        }
        if config.grid.kind == GridKind.PICKANDS:
            table["H_D_alpha"] = constants.H_D_alpha
        path = self.output_path(options, "limits.json")
        if path is not None:
            write_json(path, table, force=options["force"])
        self.stdout.write(dump(table))

    def handle_compare(self, data, config, options):
        try:
            samples = read_samples(options["samples"])
        except ValueError as e:
            raise CommandError(str(e), returncode=IO_ERROR) from e
        constants = self.resolve(config, options)
        report = compare(
            samples,
            config,
            constants,
            metadata={
                "config": config.to_dict(),
                "samples": str(options["samples"]),
                "constants": constants.to_dict(),
            },
        )
        if options["out"]:
            write_comparison(report, options["out"], force=options["force"])
        self.stdout.write(dump(summary_dict(report)))

    def handle_experiment(self, data, config, options):
        if options["out"]:
            check_output_directory(options["out"], force=options["force"])
        if options["record"]:
            experiment = Experiment.objects.create(
                title=options["title"], config=data, output_dir=options["out"] or ""
            )
            report = run_recorded_experiment(
                experiment, workers=options["workers"], force=options["force"]
            )
            self.stdout.write("Recorded experiment %s" % experiment.pk)
        else:
            report = run_experiment(config, workers=options["workers"])
            if options["out"]:
                write_outputs(report, options["out"], force=options["force"])
        self.stdout.write(dump(summary_dict(report)))
