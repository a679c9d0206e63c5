import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Tuple, Union

from structures.cover import ClassId, CoverSetId, Partition, SetCover
from structures.population import ActionLabel, Population, base_label

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Terminal:
    """Terminal successor, kept apart from class ids in successor sets"""
    label: Any

    def __str__(self) -> str:
        return str(self.label)


Successor = Union[ClassId, Terminal]


@dataclass(frozen=True)
class OrderTable:
    """Class-level successor statistics of a population.

    Terminal successors are counted per base label in order_terminal, so on an
    inflated population every count is m times the base count.
    """
    b: int
    numb: Dict[ActionLabel, int]
    down_action: Dict[ActionLabel, FrozenSet[ClassId]]
    down_class: Dict[ClassId, FrozenSet[Successor]]
    order_action: Dict[Tuple[ActionLabel, ClassId], int]
    order_class: Dict[Tuple[ClassId, ClassId], int]
    order_terminal: Dict[Tuple[ClassId, Any], int]
    order_action_total: Dict[ActionLabel, int]
    order_class_total: Dict[ClassId, int]
    class_size: Dict[ClassId, int]
    set_size: Dict[CoverSetId, int]


def build_order_table(population: Population, cover: SetCover, partition: Partition) -> OrderTable:
    member_of = partition.member_of
    numb: Counter = Counter()
    order_action: Counter = Counter()
    order_class: Counter = Counter()
    order_terminal: Counter = Counter()

    # one pass over adjacent (predecessor, successor) pairs
    for rollout in population.rollouts:
        classes = [member_of[s] for s in rollout.states]
        numb[rollout.action] += 1
        order_action[(rollout.action, classes[0])] += 1
        for prev, nxt in zip(classes, classes[1:]):
            order_class[(prev, nxt)] += 1
        order_terminal[(classes[-1], base_label(rollout.terminal))] += 1

    down_action = defaultdict(set)
    order_action_total: Counter = Counter()
    for (action, target), count in order_action.items():
        down_action[action].add(target)
        order_action_total[action] += count

    down_class = defaultdict(set)
    order_class_total: Counter = Counter()
    for (prev, nxt), count in order_class.items():
        down_class[prev].add(nxt)
        order_class_total[prev] += count
    for (prev, label), count in order_terminal.items():
        down_class[prev].add(Terminal(label))
        order_class_total[prev] += count

    return OrderTable(
        b=len(population),
        numb=dict(numb),
        down_action={a: frozenset(s) for a, s in down_action.items()},
        down_class={c: frozenset(s) for c, s in down_class.items()},
        order_action=dict(order_action),
        order_class=dict(order_class),
        order_terminal=dict(order_terminal),
        order_action_total=dict(order_action_total),
        order_class_total=dict(order_class_total),
        class_size={c: len(members) for c, members in partition.classes.items()},
        set_size={o: len(members) for o, members in cover.sets.items()},
    )
