import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Hashable, Iterable, List, Mapping, NamedTuple, Optional, Tuple

from structures.cover import Partition, SetCover, StateId, build_partition, validate_cover
from structures.errors import (
    ConfigError,
    DuplicateState,
    DuplicateTerminal,
    EmptyRollout,
    StateNotInPopulation,
    UnknownReference,
)

logger = logging.getLogger(__name__)

ActionLabel = Hashable
TerminalLabel = Hashable


class Copy(NamedTuple):
    """Inflated identifier: a (base id, copy index) pair"""
    base: Any
    index: int


def base_label(x: Any) -> Any:
    while isinstance(x, Copy):
        x = x.base
    return x


@dataclass(frozen=True)
class Rollout:
    action: ActionLabel
    states: Tuple[StateId, ...]
    terminal: TerminalLabel

    @property
    def height(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class Population:
    """Ordered multiset of rollouts; permuting rollouts gives a different value"""
    rollouts: Tuple[Rollout, ...]

    def __len__(self) -> int:
        return len(self.rollouts)

    def __iter__(self):
        return iter(self.rollouts)

    def position_index(self) -> Dict[StateId, Tuple[int, int]]:
        """state -> (rollout index, 0-based position)"""
        return {
            s: (i, k)
            for i, rollout in enumerate(self.rollouts)
            for k, s in enumerate(rollout.states)
        }


@dataclass(frozen=True)
class Problem:
    cover: SetCover
    partition: Partition
    actions: Tuple[ActionLabel, ...]
    terminals: Tuple[TerminalLabel, ...]
    population: Population
    # keyed by base terminal labels, so it survives inflation unchanged
    payoff: Optional[Dict[TerminalLabel, Fraction]] = field(default=None, compare=False)
    name: str = ""
    inflation: int = 1

    @property
    def b(self) -> int:
        return len(self.population)


def build_problem(
    states: Iterable[StateId],
    cover_sets: Mapping[Any, Iterable[StateId]],
    actions: Iterable[ActionLabel],
    terminals: Iterable[TerminalLabel],
    rollouts: Iterable[Rollout],
    payoff: Optional[Mapping[TerminalLabel, Fraction]] = None,
    name: str = "",
) -> Problem:
    """Validate the cover, precompute the partition and validate the population"""
    cover = validate_cover(states, cover_sets)
    problem = Problem(
        cover=cover,
        partition=build_partition(cover),
        actions=tuple(dict.fromkeys(actions)),
        terminals=tuple(dict.fromkeys(terminals)),
        population=Population(tuple(rollouts)),
        payoff=dict(payoff) if payoff is not None else None,
        name=name,
    )
    validate_population(problem)
    return problem


def validate_population(problem: Problem) -> None:
    """Raise on the first violated rollout or population invariant"""
    actions = set(problem.actions)
    terminals = set(problem.terminals)
    declared = set(problem.cover.states)

    positions: Dict[StateId, List[Tuple[int, int]]] = defaultdict(list)
    terminal_counts: Counter = Counter()
    for i, rollout in enumerate(problem.population.rollouts):
        if rollout.action not in actions:
            raise UnknownReference("action", rollout.action)
        if not rollout.states:
            raise EmptyRollout(i)
        if rollout.terminal not in terminals:
            raise UnknownReference("terminal", rollout.terminal)
        terminal_counts[rollout.terminal] += 1
        for k, s in enumerate(rollout.states):
            if s not in declared:
                raise UnknownReference("state", s)
            positions[s].append((i, k))

    for s, found in positions.items():
        if len(found) > 1:
            raise DuplicateState(s, found)
    for label, count in terminal_counts.items():
        if count > 1:
            raise DuplicateTerminal(label)

    missing = [s for s in problem.cover.states if s not in positions]
    if missing:
        raise StateNotInPopulation(missing)

    if problem.payoff is not None:
        base_terminals = {base_label(f) for f in terminals}
        for label in problem.payoff:
            if label not in base_terminals:
                raise UnknownReference("terminal", label)


def is_homologous(population: Population, cover: SetCover) -> bool:
    """True iff states sharing a cover set always sit at the same position index"""
    index = population.position_index()
    for members in cover.sets.values():
        seen = {index[s][1] for s in members if s in index}
        if len(seen) > 1:
            return False
    return True


def total_states(population: Population) -> int:
    return sum(rollout.height for rollout in population.rollouts)


def inflate(problem: Problem, m: int) -> Problem:
    """Replace states, terminals, cover sets and rollouts by m indexed copies.

    Copies are laid out copy-major: every rollout of copy 1, then copy 2, and so on.
    Cover set ids are kept, so partition class ids are unchanged.
    """
    if m < 1:
        raise ConfigError("inflation", f"m must be >= 1, got {m}")

    copies = range(1, m + 1)
    states = [Copy(s, i) for i in copies for s in problem.cover.states]
    sets = {
        set_id: [Copy(s, i) for i in copies for s in members]
        for set_id, members in problem.cover.sets.items()
    }
    cover = validate_cover(states, sets)
    rollouts = tuple(
        Rollout(
            action=r.action,
            states=tuple(Copy(s, i) for s in r.states),
            terminal=Copy(r.terminal, i),
        )
        for i in copies
        for r in problem.population.rollouts
    )
    inflated = Problem(
        cover=cover,
        partition=build_partition(cover),
        actions=problem.actions,
        terminals=tuple(Copy(f, i) for i in copies for f in problem.terminals),
        population=Population(rollouts),
        payoff=problem.payoff,
        name=problem.name,
        inflation=problem.inflation * m,
    )
    logger.debug(f"Inflated {problem.name or 'problem'} by {m}: {len(rollouts)} rollouts")
    return inflated
