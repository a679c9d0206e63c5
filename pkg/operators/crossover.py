import itertools
import logging
from dataclasses import dataclass
from typing import ClassVar, List, Optional, Sequence, Tuple

from operators.base import CrossoverOp
from structures.cover import CoverSetId, SetCover, StateId
from structures.population import Population

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OnePoint(CrossoverOp):
    """Exchange the suffixes starting at u and at v, terminals included.

    Identity when u or v is absent or both lie in the same rollout.
    """
    set_id: CoverSetId
    u: StateId
    v: StateId
    kind: ClassVar[str] = "chi"

    def rearrange(self, states, terminals, index) -> Tuple[int, ...]:
        pu = index.get(self.u)
        pv = index.get(self.v)
        if pu is None or pv is None:
            return ()
        (i, k), (j, q) = pu, pv
        if i == j:
            return ()

        tail_i = states[i][k:]
        tail_j = states[j][q:]
        del states[i][k:]
        del states[j][q:]
        states[i].extend(tail_j)
        states[j].extend(tail_i)
        terminals[i], terminals[j] = terminals[j], terminals[i]

        for p, s in enumerate(tail_j):
            index[s] = (i, k + p)
        for p, s in enumerate(tail_i):
            index[s] = (j, q + p)
        return (i, j)


@dataclass(frozen=True)
class SingleSwap(CrossoverOp):
    """Swap the positions of u and v, within one rollout or across two"""
    set_id: CoverSetId
    u: StateId
    v: StateId
    kind: ClassVar[str] = "nu"

    def rearrange(self, states, terminals, index) -> Tuple[int, ...]:
        pu = index.get(self.u)
        pv = index.get(self.v)
        if pu is None or pv is None or self.u == self.v:
            return ()
        (i, k), (j, q) = pu, pv

        states[i][k] = self.v
        states[j][q] = self.u
        index[self.u] = (j, q)
        index[self.v] = (i, k)
        return (i,) if i == j else (i, j)


def apply_one_point(
    population: Population,
    set_id: CoverSetId,
    u: StateId,
    v: StateId,
    cover: SetCover,
) -> Population:
    op = OnePoint(set_id, u, v)
    op.check(cover)
    return op.apply(population)


def apply_single_swap(
    population: Population,
    set_id: CoverSetId,
    u: StateId,
    v: StateId,
    cover: SetCover,
) -> Population:
    op = SingleSwap(set_id, u, v)
    op.check(cover)
    return op.apply(population)


def apply_sequence(
    population: Population,
    ops: Sequence[CrossoverOp],
    cover: SetCover,
) -> Population:
    """Apply ops left to right; the first op acts first.

    Each op is checked against the cover before it acts.
    """
    for op in ops:
        op.check(cover)
        population = op.apply(population)
    return population


def enumerate_generators(
    cover: SetCover, population: Optional[Population] = None
) -> List[CrossoverOp]:
    """Every nontrivial one-point and single-swap op, in a deterministic order.

    Pairs (u, v) follow the cover's state order with u before v. When a population
    is given, pairs with a state absent from it are skipped since they act as identity.
    """
    present = None
    if population is not None:
        present = population.position_index()

    ops: List[CrossoverOp] = []
    for set_id in cover.sets:
        members = cover.ordered_members(set_id)
        if present is not None:
            members = [s for s in members if s in present]
        for u, v in itertools.combinations(members, 2):
            ops.append(OnePoint(set_id, u, v))
            ops.append(SingleSwap(set_id, u, v))
    return ops

