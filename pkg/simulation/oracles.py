import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from analysis.schema import Schema, SchemaMatcher
from config import Config
from operators.crossover import enumerate_generators
from simulation.mixing import MixKernel
from structures.cover import ClassId, Partition, SetCover
from structures.errors import ClassTooLarge
from structures.population import ActionLabel, Population, Problem

logger = logging.getLogger(__name__)


def enumerate_class(
    problem: Problem,
    bound: int = Config.CLASS_SIZE_BOUND,
    cover: Optional[SetCover] = None,
) -> List[Population]:
    """Breadth-first closure of the initial population under every generator.

    Returns the class in discovery order, the initial population first. `cover`
    replaces the problem's cover as the source of generators (e.g. the partition
    viewed as a cover).
    """
    generators = enumerate_generators(cover or problem.cover, problem.population)
    start = problem.population
    visited: Dict[Population, int] = {start: 0}
    order = [start]
    queue = deque([start])

    while queue:
        population = queue.popleft()
        for op in generators:
            image = op.apply(population)
            if image in visited:
                continue
            if len(order) >= bound:
                raise ClassTooLarge(bound)
            visited[image] = len(order)
            order.append(image)
            queue.append(image)
            if len(order) % Config.ENUMERATION_LOG_EVERY == 0:
                logger.info(f"Enumerated {len(order)} populations, frontier {len(queue)}")

    logger.debug(f"Class of {problem.name or 'population'} has {len(order)} members")
    return order


@dataclass(frozen=True)
class TransitionMatrix:
    """Exact sparse transition matrix over an enumerated class"""
    populations: Tuple[Population, ...]
    rows: Tuple[Dict[int, Fraction], ...]

    def __len__(self) -> int:
        return len(self.populations)

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i].get(j, Fraction(0))

    def is_stochastic(self) -> bool:
        return all(
            all(p >= 0 for p in row.values()) and sum(row.values(), Fraction(0)) == 1
            for row in self.rows
        )

    def is_symmetric(self) -> bool:
        return all(self.entry(j, i) == p for i, row in enumerate(self.rows) for j, p in row.items())

    def is_uniform_stationary(self) -> bool:
        """u^T M = u^T for the uniform u, i.e. every column sums to exactly 1"""
        columns = [Fraction(0)] * len(self)
        for row in self.rows:
            for j, p in row.items():
                columns[j] += p
        return all(c == 1 for c in columns)

    def has_positive_diagonal(self) -> bool:
        return all(self.entry(i, i) > 0 for i in range(len(self)))

    def is_irreducible(self) -> bool:
        n_components, _ = connected_components(self.adjacency(), directed=True, connection="strong")
        return n_components == 1

    def is_aperiodic(self) -> bool:
        # an irreducible chain with one self-loop is aperiodic
        return self.is_irreducible() and any(self.entry(i, i) > 0 for i in range(len(self)))

    def adjacency(self) -> csr_matrix:
        rows, cols = [], []
        for i, row in enumerate(self.rows):
            for j, p in row.items():
                if p > 0:
                    rows.append(i)
                    cols.append(j)
        n = len(self)
        return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((len(self), len(self)))
        for i, row in enumerate(self.rows):
            for j, p in row.items():
                dense[i, j] = float(p)
        return dense


def exact_transition_matrix(populations: Sequence[Population], mu: MixKernel) -> TransitionMatrix:
    index = {p: i for i, p in enumerate(populations)}
    rows = []
    for i, population in enumerate(populations):
        row: Dict[int, Fraction] = {i: mu.p_identity}
        for op, prob in zip(mu.ops, mu.probabilities):
            j = index[op.apply(population)]
            row[j] = row.get(j, Fraction(0)) + prob
        rows.append(row)
    return TransitionMatrix(tuple(populations), tuple(rows))


def first_position_fraction(
    populations: Sequence[Population],
    schema: Schema,
    cover: SetCover,
    partition: Optional[Partition] = None,
) -> Fraction:
    matcher = SchemaMatcher.compile(schema, cover, partition)
    hits = sum(1 for p in populations if matcher.fits(p.rollouts[0]))
    return Fraction(hits, len(populations))


def uniform_average_fraction(
    populations: Sequence[Population],
    schema: Schema,
    cover: SetCover,
    partition: Optional[Partition] = None,
) -> Fraction:
    matcher = SchemaMatcher.compile(schema, cover, partition)
    hits = sum(1 for p in populations for r in p.rollouts if matcher.fits(r))
    b = len(populations[0])
    return Fraction(hits, b * len(populations))


class ProjectedRollout(NamedTuple):
    action: ActionLabel
    classes: Tuple[ClassId, ...]
    terminal: object


ProjectedPopulation = Tuple[ProjectedRollout, ...]


def project_equiv(population: Population, partition: Partition) -> ProjectedPopulation:
    member_of = partition.member_of
    return tuple(
        ProjectedRollout(r.action, tuple(member_of[s] for s in r.states), r.terminal)
        for r in population.rollouts
    )


def projected_images(populations: Sequence[Population], partition: Partition) -> Set[ProjectedPopulation]:
    return {project_equiv(p, partition) for p in populations}
