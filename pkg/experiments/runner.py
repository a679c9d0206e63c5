import asyncio
import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from analysis.order_table import OrderTable, build_order_table
from analysis.payoff import estimate_payoff_mc, expected_payoff_exact
from analysis.predictor import build_class_chain, limiting_frequency
from analysis.schema import Schema
from config import Config
from operators.crossover import enumerate_generators
from simulation.mixing import FrequencyEstimate, MixDistribution, run_chain
from simulation.oracles import (
    enumerate_class,
    exact_transition_matrix,
    first_position_fraction,
    uniform_average_fraction,
)
from structures.errors import ConfigError, MissingPayoff
from structures.population import Problem, is_homologous, total_states
from utils.monitoring import ReplicaMonitor
from utils.reporting import (
    ConvergenceReport,
    ConvergenceRow,
    EnumerationReport,
    EnumerationRow,
    PayoffReport,
    PayoffRow,
    Report,
    SummaryRow,
    ValidationReport,
)
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

MODES = ("validate", "predict", "simulate", "enumerate", "payoff")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    inflation_levels: Tuple[int, ...] = (1,)
    steps: int = Config.DEFAULT_STEPS
    replicas: int = Config.DEFAULT_REPLICAS
    seed: int = Config.DEFAULT_SEED
    schemata: Tuple[Schema, ...] = ()
    height_cap: Optional[int] = None
    class_size_bound: int = Config.CLASS_SIZE_BOUND
    p_identity: Fraction = Config.P_IDENTITY
    samples: int = Config.DEFAULT_SAMPLES
    burn_in: int = 0
    workers: int = 1
    draw_batch: int = Config.DRAW_BATCH

    def __post_init__(self):
        object.__setattr__(self, "inflation_levels", tuple(self.inflation_levels))
        object.__setattr__(self, "schemata", tuple(self.schemata))
        object.__setattr__(self, "p_identity", Fraction(self.p_identity))

        if self.mode not in MODES:
            raise ConfigError("mode", f"expected one of {MODES}, got {self.mode!r}")
        if self.steps < 1:
            raise ConfigError("steps", f"t must be >= 1, got {self.steps}")
        if not self.inflation_levels or any(m < 1 for m in self.inflation_levels):
            raise ConfigError("inflation", f"every m must be >= 1, got {list(self.inflation_levels)}")
        if self.replicas < 1:
            raise ConfigError("replicas", f"must be >= 1, got {self.replicas}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be non-negative, got {self.seed}")
        if not 0 < self.p_identity <= 1:
            raise ConfigError("p_identity", f"must lie in (0, 1], got {self.p_identity}")
        if self.height_cap is not None and self.height_cap < 1:
            raise ConfigError("height_cap", f"must be >= 1, got {self.height_cap}")
        if self.class_size_bound < 1:
            raise ConfigError("class_bound", f"must be >= 1, got {self.class_size_bound}")
        if self.samples < 1:
            raise ConfigError("samples", f"must be >= 1, got {self.samples}")
        if not 0 <= self.burn_in < self.steps:
            raise ConfigError("burn_in", f"must lie in [0, steps), got {self.burn_in}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")


class ExperimentRunner:
    def __init__(self, problem: Problem, config: ExperimentConfig):
        self.problem = problem
        self.config = config
        self.table: OrderTable = build_order_table(problem.population, problem.cover, problem.partition)
        self.schemata: List[Schema] = list(config.schemata)
        if not self.schemata and config.mode in ("predict", "simulate", "enumerate"):
            logger.warning("No schemata given, using the universal schema only")
            self.schemata = [Schema.universal()]

    @property
    def height_cap(self) -> int:
        if self.config.height_cap is not None:
            return self.config.height_cap
        return Config.HEIGHT_CAP_FACTOR * max(r.height for r in self.problem.population)

    def predicted(self) -> Dict[str, Fraction]:
        return {
            h.label: limiting_frequency(self.table, h, self.problem.cover, self.problem.partition)
            for h in self.schemata
        }

    async def run(self) -> Report:
        handlers = {
            "validate": self.validate,
            "predict": self.predict,
            "simulate": self.simulate,
            "enumerate": self.enumerate,
            "payoff": self.payoff,
        }
        logger.info(f"Running {self.config.mode} on {self.problem.name or 'problem'}")
        try:
            return await handlers[self.config.mode]()
        except Exception as e:
            logger.error(f"{self.config.mode} failed: {str(e)}")
            raise

    async def validate(self) -> ValidationReport:
        problem = self.problem
        return ValidationReport(
            problem=problem.name,
            states=len(problem.cover.states),
            cover_sets=len(problem.cover.sets),
            classes=len(problem.partition.classes),
            rollouts=problem.b,
            total_states=total_states(problem.population),
            generators=len(enumerate_generators(problem.cover)),
            homologous=is_homologous(problem.population, problem.cover),
        )

    async def predict(self) -> ConvergenceReport:
        """Closed-form values only; no random stream is created"""
        predicted = self.predicted()
        rows = tuple(
            ConvergenceRow(m=m, t=None, replica=0, schema=h.label, phi_hat=None, predicted=predicted[h.label], seed=None)
            for m in self.config.inflation_levels
            for h in self.schemata
        )
        return ConvergenceReport(mode="predict", rows=rows)

    async def simulate(self) -> ConvergenceReport:
        config = self.config
        mu = MixDistribution(p_identity=config.p_identity)
        jobs = [(m, r) for m in config.inflation_levels for r in range(config.replicas)]
        chain = functools.partial(
            run_chain,
            self.problem,
            mu,
            config.steps,
            self.schemata,
            config.seed,
            burn_in=config.burn_in,
            batch=config.draw_batch,
        )

        if config.workers > 1:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [loop.run_in_executor(pool, functools.partial(chain, m=m, replica=r)) for m, r in jobs]
                results: List[List[FrequencyEstimate]] = list(await asyncio.gather(*futures))
        else:
            results = [chain(m=m, replica=r) for m, r in jobs]

        predicted = self.predicted()
        monitor = ReplicaMonitor(predicted)
        for estimates in results:
            monitor.record(estimates)

        order = {h.label: i for i, h in enumerate(self.schemata)}
        flat = sorted(
            (e for estimates in results for e in estimates),
            key=lambda e: (e.m, order[e.schema.label], e.replica),
        )
        rows = tuple(
            ConvergenceRow(
                m=e.m,
                t=config.steps,
                replica=e.replica,
                schema=e.schema.label,
                phi_hat=e.phi_hat,
                predicted=predicted[e.schema.label],
                seed=config.seed,
            )
            for e in flat
        )

        summary = []
        for m in config.inflation_levels:
            for h in self.schemata:
                monitor.check_consistency(m, h.label)
                spread = monitor.summarize(m, h.label)
                summary.append(SummaryRow(
                    m=m,
                    schema=h.label,
                    replicas=spread.replicas,
                    mean=spread.mean,
                    standard_error=spread.standard_error,
                    mean_batch_error=spread.mean_batch_error,
                    predicted=spread.predicted,
                ))
        return ConvergenceReport(mode="simulate", rows=rows, summary=tuple(summary))

    async def enumerate(self) -> EnumerationReport:
        problem = self.problem
        populations = enumerate_class(problem, self.config.class_size_bound)
        kernel = MixDistribution(p_identity=self.config.p_identity).bind(problem.cover, problem.population)

        checks = None
        if len(populations) <= Config.MATRIX_SIZE_BOUND:
            matrix = exact_transition_matrix(populations, kernel)
            checks = {
                "stochastic": matrix.is_stochastic(),
                "symmetric": matrix.is_symmetric(),
                "uniform_stationary": matrix.is_uniform_stationary(),
                "irreducible": matrix.is_irreducible(),
                "aperiodic": matrix.is_aperiodic(),
                "positive_diagonal": matrix.has_positive_diagonal(),
            }
        else:
            logger.warning(
                f"Class of {len(populations)} populations exceeds {Config.MATRIX_SIZE_BOUND}; "
                f"skipping the exact transition matrix"
            )

        predicted = self.predicted()
        rows = tuple(
            EnumerationRow(
                schema=h.label,
                uniform_average=uniform_average_fraction(populations, h, problem.cover, problem.partition),
                first_position=first_position_fraction(populations, h, problem.cover, problem.partition),
                predicted=predicted[h.label],
            )
            for h in self.schemata
        )
        return EnumerationReport(
            problem=problem.name,
            class_size=len(populations),
            generators=len(kernel.ops),
            p_identity=kernel.p_identity,
            homologous=is_homologous(problem.population, problem.cover),
            rows=rows,
            checks=checks,
        )

    async def payoff(self) -> PayoffReport:
        problem = self.problem
        if not problem.payoff:
            raise MissingPayoff("*")
        chain = build_class_chain(self.table)
        cap = self.height_cap

        rows = []
        for i, action in enumerate(problem.actions):
            if self.table.numb.get(action, 0) == 0:
                logger.info(f"Skipping action {action}: no rollout starts with it")
                continue
            exact = expected_payoff_exact(chain, problem.payoff, action)
            estimate = estimate_payoff_mc(
                chain, problem.payoff, action, self.config.samples, make_rng(self.config.seed, i, 1), cap
            )
            rows.append(PayoffRow(
                action=action,
                exact=exact,
                mc_mean=estimate.mean,
                mc_standard_error=estimate.standard_error,
                truncated=estimate.truncated,
                samples=estimate.samples,
                seed=self.config.seed,
            ))
        return PayoffReport(problem=problem.name, height_cap=cap, rows=tuple(rows))


def run_experiment(problem: Problem, config: ExperimentConfig) -> Report:
    return asyncio.run(ExperimentRunner(problem, config).run())
