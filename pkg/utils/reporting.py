import csv
import io
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional, Tuple, Type, Union

from config import Config
from structures.errors import ConfigError, ParseError
from utils.calculations import format_fraction, fraction_to_decimal, parse_fraction

logger = logging.getLogger(__name__)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rational(value: Optional[Fraction]) -> Dict[str, Any]:
    return {"exact": format_fraction(value) or None, "decimal": fraction_to_decimal(value)}


def _from_rational(data: Optional[Dict[str, Any]]) -> Optional[Fraction]:
    if data is None or data.get("exact") is None:
        return None
    return parse_fraction(data["exact"], "report")


class Report(ABC):
    kind: ClassVar[str]

    @abstractmethod
    def header(self) -> Tuple[str, ...]:
        pass

    @abstractmethod
    def csv_rows(self) -> List[List[Any]]:
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Report":
        pass


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    t: Optional[int]
    replica: int
    schema: str
    phi_hat: Optional[Fraction]
    predicted: Fraction
    seed: Optional[int]

    @property
    def abs_error(self) -> Optional[Fraction]:
        if self.phi_hat is None:
            return None
        return abs(self.phi_hat - self.predicted)


@dataclass(frozen=True)
class SummaryRow:
    """Per (m, schema) aggregate over replicas"""
    m: int
    schema: str
    replicas: int
    mean: float
    standard_error: float
    mean_batch_error: float
    predicted: Fraction

    @property
    def abs_error(self) -> float:
        return abs(self.mean - float(self.predicted))


@dataclass(frozen=True)
class ConvergenceReport(Report):
    mode: str
    rows: Tuple[ConvergenceRow, ...]
    summary: Tuple[SummaryRow, ...] = ()
    kind: ClassVar[str] = "convergence"

    def header(self) -> Tuple[str, ...]:
        return Config.CSV_HEADER

    def csv_rows(self) -> List[List[Any]]:
        return [
            [
                r.m,
                r.t,
                r.replica,
                r.schema,
                fraction_to_decimal(r.phi_hat),
                r.predicted,
                fraction_to_decimal(r.abs_error),
                r.seed,
            ]
            for r in self.rows
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "mode": self.mode,
            "rows": [
                {
                    "m": r.m,
                    "t": r.t,
                    "replica": r.replica,
                    "schema": r.schema,
                    "phi_hat": _rational(r.phi_hat),
                    "predicted": _rational(r.predicted),
                    "abs_error": _rational(r.abs_error),
                    "seed": r.seed,
                }
                for r in self.rows
            ],
            "summary": [
                {
                    "m": s.m,
                    "schema": s.schema,
                    "replicas": s.replicas,
                    "mean": s.mean,
                    "standard_error": s.standard_error,
                    "mean_batch_error": s.mean_batch_error,
                    "predicted": _rational(s.predicted),
                    "abs_error": s.abs_error,
                }
                for s in self.summary
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConvergenceReport":
        rows = tuple(
            ConvergenceRow(
                m=r["m"],
                t=r["t"],
                replica=r["replica"],
                schema=r["schema"],
                phi_hat=_from_rational(r["phi_hat"]),
                predicted=_from_rational(r["predicted"]),
                seed=r["seed"],
            )
            for r in data["rows"]
        )
        summary = tuple(
            SummaryRow(
                m=s["m"],
                schema=s["schema"],
                replicas=s["replicas"],
                mean=s["mean"],
                standard_error=s["standard_error"],
                mean_batch_error=s["mean_batch_error"],
                predicted=_from_rational(s["predicted"]),
            )
            for s in data.get("summary", [])
        )
        return cls(mode=data["mode"], rows=rows, summary=summary)


@dataclass(frozen=True)
class EnumerationRow:
    schema: str
    uniform_average: Fraction
    first_position: Fraction
    predicted: Fraction


@dataclass(frozen=True)
class EnumerationReport(Report):
    problem: str
    class_size: int
    generators: int
    p_identity: Fraction
    homologous: bool
    rows: Tuple[EnumerationRow, ...]
    # None when the class is too large for the exact matrix
    checks: Optional[Dict[str, bool]] = field(default=None)
    kind: ClassVar[str] = "enumeration"

    def header(self) -> Tuple[str, ...]:
        return ("schema", "uniform_average", "first_position", "predicted", "class_size")

    def csv_rows(self) -> List[List[Any]]:
        return [
            [r.schema, r.uniform_average, r.first_position, r.predicted, self.class_size]
            for r in self.rows
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "problem": self.problem,
            "class_size": self.class_size,
            "generators": self.generators,
            "p_identity": _rational(self.p_identity),
            "homologous": self.homologous,
            "checks": self.checks,
            "rows": [
                {
                    "schema": r.schema,
                    "uniform_average": _rational(r.uniform_average),
                    "first_position": _rational(r.first_position),
                    "predicted": _rational(r.predicted),
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EnumerationReport":
        return cls(
            problem=data["problem"],
            class_size=data["class_size"],
            generators=data["generators"],
            p_identity=_from_rational(data["p_identity"]),
            homologous=data["homologous"],
            checks=data["checks"],
            rows=tuple(
                EnumerationRow(
                    schema=r["schema"],
                    uniform_average=_from_rational(r["uniform_average"]),
                    first_position=_from_rational(r["first_position"]),
                    predicted=_from_rational(r["predicted"]),
                )
                for r in data["rows"]
            ),
        )


@dataclass(frozen=True)
class PayoffRow:
    action: str
    exact: Fraction
    mc_mean: float
    mc_standard_error: float
    truncated: int
    samples: int
    seed: int


@dataclass(frozen=True)
class PayoffReport(Report):
    problem: str
    height_cap: int
    rows: Tuple[PayoffRow, ...]
    kind: ClassVar[str] = "payoff"

    def header(self) -> Tuple[str, ...]:
        return ("action", "exact", "exact_decimal", "mc_mean", "mc_standard_error", "truncated", "samples", "seed")

    def csv_rows(self) -> List[List[Any]]:
        return [
            [r.action, r.exact, float(r.exact), r.mc_mean, r.mc_standard_error, r.truncated, r.samples, r.seed]
            for r in self.rows
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "problem": self.problem,
            "height_cap": self.height_cap,
            "rows": [
                {
                    "action": r.action,
                    "exact": _rational(r.exact),
                    "mc_mean": r.mc_mean,
                    "mc_standard_error": r.mc_standard_error,
                    "truncated": r.truncated,
                    "samples": r.samples,
                    "seed": r.seed,
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PayoffReport":
        return cls(
            problem=data["problem"],
            height_cap=data["height_cap"],
            rows=tuple(
                PayoffRow(
                    action=r["action"],
                    exact=_from_rational(r["exact"]),
                    mc_mean=r["mc_mean"],
                    mc_standard_error=r["mc_standard_error"],
                    truncated=r["truncated"],
                    samples=r["samples"],
                    seed=r["seed"],
                )
                for r in data["rows"]
            ),
        )


@dataclass(frozen=True)
class ValidationReport(Report):
    problem: str
    states: int
    cover_sets: int
    classes: int
    rollouts: int
    total_states: int
    generators: int
    homologous: bool
    kind: ClassVar[str] = "validation"

    def header(self) -> Tuple[str, ...]:
        return ("field", "value")

    def csv_rows(self) -> List[List[Any]]:
        return [[key, value] for key, value in self.to_dict().items() if key != "kind"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "problem": self.problem,
            "states": self.states,
            "cover_sets": self.cover_sets,
            "classes": self.classes,
            "rollouts": self.rollouts,
            "total_states": self.total_states,
            "generators": self.generators,
            "homologous": self.homologous,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ValidationReport":
        return cls(**{k: v for k, v in data.items() if k != "kind"})


REPORT_KINDS: Dict[str, Type[Report]] = {
    cls.kind: cls for cls in (ConvergenceReport, EnumerationReport, PayoffReport, ValidationReport)
}


def render_report(report: Report, fmt: str) -> str:
    fmt = fmt.lower()
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(report.header())
        for row in report.csv_rows():
            writer.writerow([_cell(v) for v in row])
        return buffer.getvalue()
    raise ConfigError("format", f"expected one of {Config.REPORT_FORMATS}, got {fmt!r}")


def write_report(report: Report, path: Union[str, Path], fmt: str) -> None:
    """Write a report; identical reports give byte-identical files"""
    text = render_report(report, fmt)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {report.kind} report to {path}")


def load_report(path: Union[str, Path]) -> Report:
    """Load a JSON report written by write_report"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}", e.msg)
    kind = data.get("kind") if isinstance(data, dict) else None
    if kind not in REPORT_KINDS:
        raise ParseError(str(path), f"unknown report kind {kind!r}")
    return REPORT_KINDS[kind].from_dict(data)
