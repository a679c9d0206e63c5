import logging
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from structures.errors import ParseError

logger = logging.getLogger(__name__)


def parse_fraction(text, location: str = "value") -> Fraction:
    """Parse "p/q", an integer or a decimal string into an exact rational"""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise ParseError(location, f"expected a rational as 'p/q', got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(location, f"invalid rational {text!r}: {str(e)}")


def format_fraction(value: Optional[Fraction]) -> str:
    if value is None:
        return ""
    return f"{value.numerator}/{value.denominator}"


def fraction_to_decimal(value: Optional[Fraction]) -> Optional[float]:
    return None if value is None else float(value)


def solve_exact(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> List[Fraction]:
    """Solve A x = b exactly by Gauss-Jordan elimination over the rationals

    Args:
        matrix: square coefficient matrix
        rhs: right hand side

    Returns:
        The unique solution

    Raises:
        ValueError if the matrix is singular
    """
    n = len(matrix)
    rows = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]

    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            raise ValueError(f"Singular system: no pivot in column {col}")
        rows[col], rows[pivot] = rows[pivot], rows[col]

        pivot_value = rows[col][col]
        rows[col] = [x / pivot_value for x in rows[col]]
        for r in range(n):
            factor = rows[r][col]
            if r != col and factor != 0:
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]

    return [rows[i][n] for i in range(n)]


def mean_and_standard_error(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and standard error of the mean (0 for fewer than two values)"""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return math.nan, math.nan
    if data.size == 1:
        return float(data[0]), 0.0
    return float(data.mean()), float(data.std(ddof=1) / math.sqrt(data.size))


def batch_means_standard_error(batch_hits: Sequence[int], batch_lengths: Sequence[int], b_total: int) -> float:
    """Standard error of a correlated frequency estimate from per-batch means"""
    if len(batch_hits) < 2:
        return 0.0
    means = np.asarray(batch_hits, dtype=float) / (np.asarray(batch_lengths, dtype=float) * b_total)
    return float(means.std(ddof=1) / math.sqrt(means.size))
