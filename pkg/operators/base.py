from abc import ABC, abstractmethod
from typing import Dict, List, Tuple

from structures.cover import CoverSetId, SetCover, StateId, is_compatible_triple
from structures.errors import IncompatibleTriple
from structures.population import Population, Rollout


class CrossoverOp(ABC):
    """A recombination transformation acting on whole populations.

    Subclasses are frozen dataclasses with fields set_id, u and v.
    """
    kind: str
    set_id: CoverSetId
    u: StateId
    v: StateId

    @abstractmethod
    def rearrange(
        self,
        states: List[List[StateId]],
        terminals: List,
        index: Dict[StateId, Tuple[int, int]],
    ) -> Tuple[int, ...]:
        """Apply in place to per-rollout state lists; return the touched rollout indices"""
        pass

    def check(self, cover: SetCover) -> None:
        if not is_compatible_triple(cover, self.set_id, self.u, self.v):
            raise IncompatibleTriple(self.set_id, self.u, self.v)

    def apply(self, population: Population) -> Population:
        states = [list(r.states) for r in population.rollouts]
        terminals = [r.terminal for r in population.rollouts]
        touched = self.rearrange(states, terminals, population.position_index())
        if not touched:
            return population
        rollouts = list(population.rollouts)
        for i in touched:
            rollouts[i] = Rollout(rollouts[i].action, tuple(states[i]), terminals[i])
        return Population(tuple(rollouts))

    def label(self) -> str:
        return f"{self.kind}[{self.set_id},{self.u},{self.v}]"
