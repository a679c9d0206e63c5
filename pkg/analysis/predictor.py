import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from analysis.order_table import OrderTable, Successor, Terminal
from analysis.schema import WILDCARD, Schema
from structures.cover import ClassId, Partition, SetCover
from structures.errors import UnknownSchemaSymbol
from structures.population import ActionLabel

logger = logging.getLogger(__name__)


def _resolve_entry(symbol: str, table: OrderTable, partition: Partition) -> Tuple[ClassId, int]:
    """(class, size of the named set) for a cover set or class path entry"""
    if symbol in partition.set_class:
        return partition.set_class[symbol], table.set_size[symbol]
    if symbol in partition.classes:
        return symbol, table.class_size[symbol]
    raise UnknownSchemaSymbol(symbol)


def limiting_frequency(table: OrderTable, schema: Schema, cover: SetCover, partition: Partition) -> Fraction:
    """Closed-form limiting frequency of a schema.

    Product of the action share, the set-to-class size ratios, the class
    transition shares along the path and the last factor for the tail.
    """
    if schema.is_universal:
        return Fraction(1)

    # resolve every entry first so unknown symbols raise even when the value is 0
    entries = [_resolve_entry(symbol, table, partition) for symbol in schema.path]

    numb = table.numb.get(schema.action, 0)
    if numb == 0:
        return Fraction(0)
    value = Fraction(numb, table.b)

    if not entries:
        return value if schema.tail == WILDCARD else Fraction(0)

    for class_id, size in entries:
        value *= Fraction(size, table.class_size[class_id])

    first = entries[0][0]
    count = table.order_action.get((schema.action, first), 0)
    if count == 0:
        return Fraction(0)
    value *= Fraction(count, table.order_action_total[schema.action])

    for (prev, _), (cur, _) in zip(entries, entries[1:]):
        count = table.order_class.get((prev, cur), 0)
        if count == 0:
            return Fraction(0)
        value *= Fraction(count, table.order_class_total[prev])

    if schema.tail == WILDCARD:
        return value
    last = entries[-1][0]
    count = table.order_terminal.get((last, schema.tail), 0)
    if count == 0:
        return Fraction(0)
    return value * Fraction(count, table.order_class_total[last])


class ChainArrays:
    """Cumulative float tables of a ClassChain for vectorised sampling"""

    def __init__(self, chain: "ClassChain"):
        self.classes: List[ClassId] = list(chain.step)
        self.terminals: List[Any] = []
        seen = set()
        for row in chain.step.values():
            for succ in row:
                if isinstance(succ, Terminal) and succ.label not in seen:
                    seen.add(succ.label)
                    self.terminals.append(succ.label)

        self.class_pos = {c: i for i, c in enumerate(self.classes)}
        terminal_pos = {f: len(self.classes) + i for i, f in enumerate(self.terminals)}
        width = len(self.classes) + len(self.terminals)

        def node(succ: Successor) -> int:
            return terminal_pos[succ.label] if isinstance(succ, Terminal) else self.class_pos[succ]

        self.step_cum = np.zeros((len(self.classes), width))
        for c, row in chain.step.items():
            self.step_cum[self.class_pos[c]] = _cumulative({node(s): p for s, p in row.items()}, width)

        self.start_cum: Dict[ActionLabel, np.ndarray] = {
            a: _cumulative({self.class_pos[c]: p for c, p in row.items()}, len(self.classes))
            for a, row in chain.start.items()
        }


def _cumulative(weights: Mapping[int, Fraction], width: int) -> np.ndarray:
    probs = np.zeros(width)
    for i, p in weights.items():
        probs[i] = float(p)
    cum = np.cumsum(probs)
    nonzero = np.flatnonzero(probs)
    if nonzero.size:
        # entries from the last positive column on are exactly 1 so u < 1 never passes them
        cum[nonzero[-1]:] = 1.0
    return cum


def _draw_rows(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = (cum_rows <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cum_rows.shape[1] - 1)


@dataclass(frozen=True)
class ClassChain:
    """Absorbing chain over classes and terminal labels read off an OrderTable"""
    start: Dict[ActionLabel, Dict[ClassId, Fraction]]
    step: Dict[ClassId, Dict[Successor, Fraction]]

    @cached_property
    def arrays(self) -> ChainArrays:
        return ChainArrays(self)


def build_class_chain(table: OrderTable) -> ClassChain:
    start: Dict[ActionLabel, Dict[ClassId, Fraction]] = {}
    for (action, target), count in table.order_action.items():
        start.setdefault(action, {})[target] = Fraction(count, table.order_action_total[action])

    step: Dict[ClassId, Dict[Successor, Fraction]] = {}
    for (prev, nxt), count in table.order_class.items():
        step.setdefault(prev, {})[nxt] = Fraction(count, table.order_class_total[prev])
    for (prev, label), count in table.order_terminal.items():
        step.setdefault(prev, {})[Terminal(label)] = Fraction(count, table.order_class_total[prev])

    return ClassChain(start=start, step=step)


@dataclass(frozen=True)
class SampledRollout:
    action: ActionLabel
    classes: Tuple[ClassId, ...]
    terminal: Optional[Any]
    truncated: bool


def _draw_action(numb: Mapping[ActionLabel, int], b: int, rng: np.random.Generator) -> ActionLabel:
    actions = list(numb)
    cum = np.cumsum([numb[a] / b for a in actions])
    i = min(int(np.searchsorted(cum, rng.random(), side="right")), len(actions) - 1)
    return actions[i]


def sample_class_rollout(
    chain: ClassChain,
    numb: Mapping[ActionLabel, int],
    b: int,
    rng: np.random.Generator,
    height_cap: int,
) -> SampledRollout:
    """Ancestral sample of (action, class path, terminal) from the limiting distribution"""
    arrays = chain.arrays
    action = _draw_action(numb, b, rng)
    current = int(_draw_rows(arrays.start_cum[action][None, :], rng.random(1))[0])
    path = [arrays.classes[current]]

    n_classes = len(arrays.classes)
    while True:
        nxt = int(_draw_rows(arrays.step_cum[current][None, :], rng.random(1))[0])
        if nxt >= n_classes:
            return SampledRollout(action, tuple(path), arrays.terminals[nxt - n_classes], False)
        if len(path) >= height_cap:
            return SampledRollout(action, tuple(path), None, True)
        current = nxt
        path.append(arrays.classes[current])


def sample_terminals(
    chain: ClassChain,
    action: ActionLabel,
    n: int,
    rng: np.random.Generator,
    height_cap: int,
) -> np.ndarray:
    """Terminal indices into chain.arrays.terminals for n walks started by action; -1 marks truncation"""
    arrays = chain.arrays
    n_classes = len(arrays.classes)
    start = arrays.start_cum[action]
    current = _draw_rows(np.broadcast_to(start, (n, start.size)), rng.random(n))
    result = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)

    for height in range(1, height_cap + 1):
        if active.size == 0:
            break
        nxt = _draw_rows(arrays.step_cum[current[active]], rng.random(active.size))
        done = nxt >= n_classes
        result[active[done]] = nxt[done] - n_classes
        active = active[~done]
        current[active] = nxt[~done]

    return result
