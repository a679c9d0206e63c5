import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Set

import numpy as np

from analysis.order_table import Terminal
from analysis.predictor import ClassChain, sample_terminals
from structures.cover import ClassId
from structures.errors import AllTruncated, ConfigError, MissingPayoff, TerminalUnreachable, UnknownReference
from structures.population import ActionLabel
from utils.calculations import solve_exact

logger = logging.getLogger(__name__)


def _reachable_classes(chain: ClassChain, action: ActionLabel) -> List[ClassId]:
    queue = deque(chain.start[action])
    seen: Dict[ClassId, None] = dict.fromkeys(queue)
    while queue:
        current = queue.popleft()
        for succ in chain.step.get(current, {}):
            if not isinstance(succ, Terminal) and succ not in seen:
                seen[succ] = None
                queue.append(succ)
    return list(seen)


def _classes_reaching_terminal(chain: ClassChain) -> Set[ClassId]:
    good = {c for c, row in chain.step.items() if any(isinstance(s, Terminal) for s in row)}
    changed = True
    while changed:
        changed = False
        for c, row in chain.step.items():
            if c not in good and any(s in good for s in row if not isinstance(s, Terminal)):
                good.add(c)
                changed = True
    return good


def expected_payoff_exact(chain: ClassChain, payoff: Mapping, action: ActionLabel) -> Fraction:
    """Expected terminal payoff of an action under the limiting distribution, solved exactly"""
    if action not in chain.start:
        raise UnknownReference("action", action)

    classes = _reachable_classes(chain, action)
    good = _classes_reaching_terminal(chain)
    for c in classes:
        if c not in good:
            raise TerminalUnreachable(c)

    pos = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    matrix = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    rhs = [Fraction(0)] * n
    for c in classes:
        i = pos[c]
        for succ, p in chain.step[c].items():
            if isinstance(succ, Terminal):
                if succ.label not in payoff:
                    raise MissingPayoff(succ.label)
                rhs[i] += p * Fraction(payoff[succ.label])
            else:
                matrix[i][pos[succ]] -= p

    values = solve_exact(matrix, rhs)
    logger.debug(f"Solved payoff system over {n} classes for action {action}")
    return sum((p * values[pos[c]] for c, p in chain.start[action].items()), Fraction(0))


@dataclass(frozen=True)
class PayoffEstimate:
    mean: float
    standard_error: float
    truncated: int
    samples: int


@dataclass(frozen=True)
class PayoffTally:
    """Running sums of sampled payoffs; merging is associative"""
    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    truncated: int = 0

    @classmethod
    def from_samples(cls, values: np.ndarray, truncated: int = 0) -> "PayoffTally":
        values = np.asarray(values, dtype=float)
        return cls(int(values.size), float(values.sum()), float(np.square(values).sum()), truncated)

    def merge(self, other: "PayoffTally") -> "PayoffTally":
        return PayoffTally(
            self.count + other.count,
            self.total + other.total,
            self.total_sq + other.total_sq,
            self.truncated + other.truncated,
        )

    def estimate(self) -> PayoffEstimate:
        if self.count == 0:
            return PayoffEstimate(math.nan, math.nan, self.truncated, self.count + self.truncated)
        mean = self.total / self.count
        if self.count < 2:
            se = 0.0
        else:
            variance = max(0.0, (self.total_sq - self.total * mean) / (self.count - 1))
            se = math.sqrt(variance / self.count)
        return PayoffEstimate(mean, se, self.truncated, self.count + self.truncated)


def sample_payoff_tally(
    chain: ClassChain,
    payoff: Mapping,
    action: ActionLabel,
    n: int,
    rng: np.random.Generator,
    height_cap: int,
) -> PayoffTally:
    arrays = chain.arrays
    terminal_idx = sample_terminals(chain, action, n, rng, height_cap)
    hit = terminal_idx >= 0

    values = np.full(len(arrays.terminals), np.nan)
    for i, label in enumerate(arrays.terminals):
        if label in payoff:
            values[i] = float(Fraction(payoff[label]))
    sampled = values[terminal_idx[hit]]
    if np.isnan(sampled).any():
        missing = arrays.terminals[int(terminal_idx[hit][np.isnan(sampled)][0])]
        raise MissingPayoff(missing)

    return PayoffTally.from_samples(sampled, truncated=int((~hit).sum()))


def estimate_payoff_mc(
    chain: ClassChain,
    payoff: Mapping,
    action: ActionLabel,
    n: int,
    rng: np.random.Generator,
    height_cap: int,
) -> PayoffEstimate:
    """Monte Carlo payoff of an action from n ancestral samples; truncated walks are excluded"""
    if n < 1:
        raise ConfigError("samples", f"n must be >= 1, got {n}")
    if action not in chain.start:
        raise UnknownReference("action", action)

    tally = sample_payoff_tally(chain, payoff, action, n, rng, height_cap)
    if tally.count == 0:
        raise AllTruncated(n, height_cap)
    if tally.truncated:
        logger.warning(
            f"{tally.truncated} of {n} samples for action {action} reached the height cap {height_cap}"
        )
    return tally.estimate()
