import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from config import Config
from simulation.mixing import FrequencyEstimate
from utils.calculations import mean_and_standard_error

logger = logging.getLogger(__name__)


@dataclass
class ReplicaSpread:
    m: int
    schema: str
    replicas: int
    mean: float
    standard_error: float  # of the mean across replicas
    spread: float  # sample std across replicas
    mean_batch_error: float  # average per-replica batch-means error
    predicted: Fraction


class ReplicaMonitor:
    """Collects per-replica estimates and checks replica spread against batch-means errors"""

    def __init__(self, predicted: Dict[str, Fraction], tolerance: float = Config.SPREAD_TOLERANCE):
        self.predicted = predicted
        self.tolerance = tolerance
        self.estimates: Dict[Tuple[int, str], List[FrequencyEstimate]] = defaultdict(list)

    def record(self, estimates: List[FrequencyEstimate]) -> None:
        for estimate in estimates:
            self.estimates[(estimate.m, estimate.schema.label)].append(estimate)

    def summarize(self, m: int, schema: str) -> Optional[ReplicaSpread]:
        found = self.estimates.get((m, schema))
        if not found:
            return None
        values = [float(e.phi_hat) for e in found]
        mean, se = mean_and_standard_error(values)
        spread = se * math.sqrt(len(values))
        batch_error = sum(e.standard_error for e in found) / len(found)
        return ReplicaSpread(
            m=m,
            schema=schema,
            replicas=len(values),
            mean=mean,
            standard_error=se,
            spread=spread,
            mean_batch_error=batch_error,
            predicted=self.predicted[schema],
        )

    def check_consistency(self, m: int, schema: str) -> bool:
        """False (with a warning) when replicas disagree beyond tolerance x the batch-means error"""
        summary = self.summarize(m, schema)
        if summary is None or summary.replicas < 2:
            return True
        if summary.spread == 0 and summary.mean_batch_error == 0:
            return True
        if summary.spread > self.tolerance * summary.mean_batch_error:
            logger.warning(
                f"Replica spread {summary.spread:.3g} for {schema} at m={m} exceeds "
                f"{self.tolerance:g} x batch-means error {summary.mean_batch_error:.3g}"
            )
            return False
        return True
