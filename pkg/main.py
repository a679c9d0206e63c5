import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import find_dotenv, load_dotenv
from tabulate import tabulate

from analysis.schema import Schema
from config import Config
from experiments.loader import check_schema, load_problem, load_schemata
from experiments.runner import MODES, ExperimentConfig, run_experiment
from structures.errors import ResourceGuardError, ValidationError
from utils.calculations import format_fraction, parse_fraction
from utils.reporting import (
    ConvergenceReport,
    EnumerationReport,
    PayoffReport,
    Report,
    ValidationReport,
    write_report,
)

logger = logging.getLogger("geiringer")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RESOURCE = 2


def configure_logging() -> None:
    # .env may only set LOG_LEVEL; experiment parameters come from flags
    load_dotenv(find_dotenv(usecwd=True))
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", Config.LOG_LEVEL).upper(),
        format=Config.LOG_FORMAT,
        stream=sys.stderr,
    )


class DisplayManager:
    """Console tables for each report kind"""

    def display(self, report: Report) -> None:
        if isinstance(report, ValidationReport):
            self.print_validation(report)
        elif isinstance(report, ConvergenceReport):
            self.print_convergence(report)
        elif isinstance(report, EnumerationReport):
            self.print_enumeration(report)
        elif isinstance(report, PayoffReport):
            self.print_payoff(report)

    @staticmethod
    def print_validation(report: ValidationReport):
        rows = [[k, v] for k, v in report.to_dict().items() if k != "kind"]
        print(tabulate(rows, headers=["Field", "Value"], tablefmt="grid"))

    @staticmethod
    def print_convergence(report: ConvergenceReport):
        if report.mode == "predict":
            rows = [
                [r.schema, format_fraction(r.predicted), f"{float(r.predicted):.10g}"]
                for r in report.rows
                if r.m == report.rows[0].m
            ]
            print("\n=== Limiting frequencies ===")
            print(tabulate(rows, headers=["Schema", "Exact", "Decimal"], tablefmt="grid", colalign=("left", "right", "right")))
            return

        rows = [
            [
                s.m,
                s.schema,
                s.replicas,
                f"{s.mean:.6g}",
                f"{s.standard_error:.3g}",
                f"{s.mean_batch_error:.3g}",
                format_fraction(s.predicted),
                f"{s.abs_error:.3g}",
            ]
            for s in report.summary
        ]
        print("\n=== Empirical frequencies ===")
        print(tabulate(
            rows,
            headers=["m", "Schema", "Replicas", "Mean phi", "SE", "Batch SE", "Predicted", "|Error|"],
            tablefmt="grid",
        ))

    @staticmethod
    def print_enumeration(report: EnumerationReport):
        print(f"\nClass size: {report.class_size}  generators: {report.generators}  homologous: {report.homologous}")
        if report.checks is not None:
            print(tabulate(sorted(report.checks.items()), headers=["Matrix check", "Holds"], tablefmt="grid"))
        rows = [
            [r.schema, format_fraction(r.uniform_average), format_fraction(r.first_position), format_fraction(r.predicted)]
            for r in report.rows
        ]
        print(tabulate(rows, headers=["Schema", "Uniform avg", "First position", "Predicted"], tablefmt="grid"))

    @staticmethod
    def print_payoff(report: PayoffReport):
        rows = [
            [
                r.action,
                format_fraction(r.exact),
                f"{float(r.exact):.6f}",
                f"{r.mc_mean:.6f}",
                f"{r.mc_standard_error:.2e}",
                r.truncated,
            ]
            for r in report.rows
        ]
        print(f"\n=== Expected payoffs (height cap {report.height_cap}) ===")
        print(tabulate(
            rows,
            headers=["Action", "Exact", "Decimal", "MC mean", "MC SE", "Truncated"],
            tablefmt="grid",
            colalign=("left", "right", "right", "right", "right", "right"),
        ))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Limiting schema frequencies of recombined rollout populations")
    subparsers = parser.add_subparsers(dest="mode", required=True)

    for mode in MODES:
        sub = subparsers.add_parser(mode)
        sub.add_argument("--input", required=True, help="problem document (JSON)")
        sub.add_argument("--schema-file", help="schemata (JSON); defaults to the input's schemata")
        sub.add_argument("--schema", action="append", default=[], help='inline schema, e.g. "(beta,4,7,5,f2)"')
        sub.add_argument("--steps", type=int, default=Config.DEFAULT_STEPS)
        sub.add_argument("--inflation", type=int, nargs="+", default=[1])
        sub.add_argument("--replicas", type=int, default=Config.DEFAULT_REPLICAS)
        sub.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
        sub.add_argument("--p-identity", default=format_fraction(Config.P_IDENTITY))
        sub.add_argument("--height-cap", type=int)
        sub.add_argument("--class-bound", type=int, default=Config.CLASS_SIZE_BOUND)
        sub.add_argument("--samples", type=int, default=Config.DEFAULT_SAMPLES)
        sub.add_argument("--burn-in", type=int, default=0)
        sub.add_argument("--workers", type=int, default=1)
        sub.add_argument("--output", help="report path")
        sub.add_argument("--format", choices=Config.REPORT_FORMATS, default="csv")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)

    try:
        problem = load_problem(args.input)
        schemata = load_schemata(args.schema_file or args.input, problem)
        for text in args.schema:
            schema = Schema.parse(text)
            check_schema(schema, problem)
            schemata.append(schema)

        config = ExperimentConfig(
            mode=args.mode,
            inflation_levels=tuple(args.inflation),
            steps=args.steps,
            replicas=args.replicas,
            seed=args.seed,
            schemata=tuple(schemata),
            height_cap=args.height_cap,
            class_size_bound=args.class_bound,
            p_identity=parse_fraction(args.p_identity, "--p-identity"),
            samples=args.samples,
            burn_in=args.burn_in,
            workers=args.workers,
        )
        report = run_experiment(problem, config)
        DisplayManager().display(report)
        if args.output:
            write_report(report, args.output, args.format)
    except ValidationError as e:
        logger.error(str(e))
        return EXIT_VALIDATION
    except ResourceGuardError as e:
        logger.error(str(e))
        return EXIT_RESOURCE
    except OSError as e:
        logger.error(f"Failed to write report: {str(e)}")
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
