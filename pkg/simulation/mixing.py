import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from analysis.schema import Schema, SchemaMatcher
from config import Config
from operators.base import CrossoverOp
from operators.crossover import enumerate_generators
from structures.cover import SetCover
from structures.errors import ConfigError
from structures.population import Population, Problem, Rollout, inflate
from utils.calculations import batch_means_standard_error
from utils.seeding import make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixDistribution:
    """Identity with probability p_identity, otherwise one generator drawn by weight.

    op_weights=None means uniform over every generator of the cover it is bound to.
    """
    p_identity: Fraction = Config.P_IDENTITY
    op_weights: Optional[Tuple[Tuple[CrossoverOp, Fraction], ...]] = None

    def __post_init__(self):
        p = Fraction(self.p_identity)
        object.__setattr__(self, "p_identity", p)
        if not 0 < p <= 1:
            raise ConfigError("p_identity", f"must lie in (0, 1], got {p}")

    def bind(self, cover: SetCover, population: Optional[Population] = None) -> "MixKernel":
        generators = enumerate_generators(cover, population)
        if self.op_weights is None:
            weights = [Fraction(1)] * len(generators)
        else:
            given: Dict[CrossoverOp, Fraction] = {op: Fraction(w) for op, w in self.op_weights}
            for op, w in given.items():
                op.check(cover)
                if w <= 0:
                    raise ConfigError("op_weights", f"{op.label()} has non-positive weight {w}")
            missing = [op for op in generators if op not in given]
            if missing:
                raise ConfigError("op_weights", f"every generator needs a positive weight, missing {missing[0].label()}")
            weights = [given[op] for op in generators]

        total = sum(weights, Fraction(0))
        rest = 1 - self.p_identity
        probs = tuple(rest * w / total for w in weights) if total else ()
        return MixKernel(self.p_identity, tuple(generators), probs)


@dataclass(frozen=True)
class MixKernel:
    """A MixDistribution materialised on a concrete generator list"""
    p_identity: Fraction
    ops: Tuple[CrossoverOp, ...]
    probabilities: Tuple[Fraction, ...]

    @cached_property
    def _cumulative(self) -> np.ndarray:
        rest = 1 - self.p_identity
        if not self.ops or rest == 0:
            return np.zeros(0)
        cum = np.cumsum([float(p / rest) for p in self.probabilities])
        cum[-1] = 1.0
        return cum

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Op indices for size steps; -1 stands for the identity"""
        u = rng.random(size)
        cum = self._cumulative
        if cum.size == 0:
            return np.full(size, -1, dtype=np.int64)
        p = float(self.p_identity)
        picked = np.searchsorted(cum, (u - p) / (1 - p), side="right")
        picked = np.minimum(picked, cum.size - 1)
        return np.where(u < p, -1, picked).astype(np.int64)


@dataclass(frozen=True)
class ChainState:
    population: Population
    step_index: int
    rng: np.random.Generator


def step(state: ChainState, mu: MixKernel) -> ChainState:
    i = int(mu.draw(state.rng, 1)[0])
    population = state.population if i < 0 else mu.ops[i].apply(state.population)
    return ChainState(population, state.step_index + 1, state.rng)


class PopulationWalker:
    """Mutable population with a position index and per-rollout fit flags.

    Applying an op only re-tests the rollouts it touched.
    """

    def __init__(self, population: Population, matchers: Sequence[SchemaMatcher]):
        self.actions = [r.action for r in population.rollouts]
        self.states = [list(r.states) for r in population.rollouts]
        self.terminals = [r.terminal for r in population.rollouts]
        self.index = population.position_index()
        self.matchers = list(matchers)
        self.flags = [
            [m.matches(r.action, r.states, r.terminal) for r in population.rollouts]
            for m in self.matchers
        ]
        self.counts = [sum(f) for f in self.flags]

    def apply(self, op: CrossoverOp) -> None:
        touched = op.rearrange(self.states, self.terminals, self.index)
        for i in touched:
            for j, matcher in enumerate(self.matchers):
                fit = matcher.matches(self.actions[i], self.states[i], self.terminals[i])
                if fit != self.flags[j][i]:
                    self.flags[j][i] = fit
                    self.counts[j] += 1 if fit else -1

    def population(self) -> Population:
        return Population(tuple(
            Rollout(a, tuple(s), f) for a, s, f in zip(self.actions, self.states, self.terminals)
        ))


@dataclass(frozen=True)
class FrequencyEstimate:
    """Fraction of individuals fitting a schema over the first t populations of a chain"""
    schema: Schema
    hits: int
    individuals_seen: int
    hits_after_burn_in: int = 0
    individuals_after_burn_in: int = 0
    burn_in: int = 0
    standard_error: float = 0.0
    m: int = 1
    replica: int = 0
    seed: Optional[int] = None

    @property
    def phi_hat(self) -> Fraction:
        return Fraction(self.hits, self.individuals_seen)

    @property
    def phi_hat_after_burn_in(self) -> Optional[Fraction]:
        if self.individuals_after_burn_in == 0:
            return None
        return Fraction(self.hits_after_burn_in, self.individuals_after_burn_in)


def run_chain(
    problem: Problem,
    mu: MixDistribution,
    t: int,
    schemata: Sequence[Schema],
    seed: int,
    m: int = 1,
    replica: int = 0,
    burn_in: int = 0,
    batch: int = Config.DRAW_BATCH,
) -> List[FrequencyEstimate]:
    """Run the mixing chain on the m-fold inflation and tally schema hits.

    Counts the t populations X_0 .. X_{t-1}, the initial one included, so every
    estimate sees b*m*t individuals. mu is bound to the inflated cover.
    """
    if t < 1:
        raise ConfigError("steps", f"t must be >= 1, got {t}")
    if not 0 <= burn_in < t:
        raise ConfigError("burn_in", f"must lie in [0, {t}), got {burn_in}")
    if batch < 1:
        raise ConfigError("batch", f"must be >= 1, got {batch}")

    inflated = inflate(problem, m)
    kernel = mu.bind(inflated.cover, inflated.population)
    matchers = [SchemaMatcher.compile(h, inflated.cover, inflated.partition) for h in schemata]
    walker = PopulationWalker(inflated.population, matchers)
    rng = make_rng(seed, replica, m)
    b_total = inflated.b

    n_batches = min(Config.BATCH_MEANS, t)
    batch_len = t // n_batches
    batch_lengths = [batch_len] * (n_batches - 1) + [t - batch_len * (n_batches - 1)]
    batch_hits = [[0] * n_batches for _ in matchers]

    logger.info(
        f"Chain start: m={m} replica={replica} b={b_total} t={t} "
        f"generators={len(kernel.ops)} schemata={len(matchers)}"
    )

    hits = [0] * len(matchers)
    post = [0] * len(matchers)
    draws = np.zeros(0, dtype=np.int64)
    cursor = 0
    ops = kernel.ops
    for time in range(t):
        current_batch = min(time // batch_len, n_batches - 1)
        for j, count in enumerate(walker.counts):
            hits[j] += count
            batch_hits[j][current_batch] += count
            if time >= burn_in:
                post[j] += count
        if time == t - 1:
            break

        if cursor == draws.size:
            draws = kernel.draw(rng, min(batch, t - 1 - time))
            cursor = 0
        i = draws[cursor]
        cursor += 1
        if i >= 0:
            walker.apply(ops[i])

    estimates = [
        FrequencyEstimate(
            schema=h,
            hits=hits[j],
            individuals_seen=b_total * t,
            hits_after_burn_in=post[j],
            individuals_after_burn_in=b_total * (t - burn_in),
            burn_in=burn_in,
            standard_error=batch_means_standard_error(batch_hits[j], batch_lengths, b_total),
            m=m,
            replica=replica,
            seed=seed,
        )
        for j, h in enumerate(schemata)
    ]
    logger.info(f"Chain done: m={m} replica={replica}")
    return estimates
