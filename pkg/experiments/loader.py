import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Union

from analysis.schema import WILDCARD, Schema
from structures.errors import ParseError, UnknownCoverSet, UnknownReference
from structures.population import Problem, Rollout, base_label, build_problem
from utils.calculations import parse_fraction

logger = logging.getLogger(__name__)

Source = Union[str, Path, Mapping[str, Any]]
SCHEMA_FIELDS = ("action", "path", "tail")


def _read_document(source: Source) -> Any:
    if isinstance(source, Mapping):
        return source
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(str(path), f"cannot read file: {str(e)}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}", e.msg)


def _field(obj: Any, key: str, location: str, kind: type = None) -> Any:
    if not isinstance(obj, Mapping):
        raise ParseError(location, "expected an object")
    if key not in obj:
        raise ParseError(f"{location}.{key}" if location else key, "missing field")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ParseError(f"{location}.{key}" if location else key, f"expected {kind.__name__}")
    return value


def load_problem(source: Source) -> Problem:
    """Build a validated Problem from a JSON document (path or parsed mapping)"""
    doc = _read_document(source)
    if not isinstance(doc, Mapping):
        raise ParseError("$", "expected a JSON object")

    aliases: Dict[str, str] = dict(doc.get("aliases", {}))

    def canonical(state: Any) -> Any:
        return aliases.get(state, state)

    states = _field(doc, "states", "", list)
    cover = _field(doc, "cover", "", dict)
    actions = _field(doc, "actions", "", list)
    terminals_doc = _field(doc, "terminals", "")

    payoff = {}
    if isinstance(terminals_doc, Mapping):
        terminals = list(terminals_doc)
        for label, value in terminals_doc.items():
            if value is not None:
                payoff[label] = parse_fraction(value, f"terminals.{label}")
    elif isinstance(terminals_doc, list):
        terminals = list(terminals_doc)
    else:
        raise ParseError("terminals", "expected an object or a list")
    if WILDCARD in terminals:
        raise ParseError("terminals", f"{WILDCARD!r} is reserved for the wildcard tail")

    rollouts: List[Rollout] = []
    for i, entry in enumerate(_field(doc, "population", "", list)):
        location = f"population[{i}]"
        rollouts.append(Rollout(
            action=_field(entry, "action", location),
            states=tuple(canonical(s) for s in _field(entry, "states", location, list)),
            terminal=_field(entry, "terminal", location),
        ))

    problem = build_problem(
        states=[canonical(s) for s in states],
        cover_sets={set_id: [canonical(s) for s in members] for set_id, members in cover.items()},
        actions=actions,
        terminals=terminals,
        rollouts=rollouts,
        payoff=payoff or None,
        name=str(doc.get("name", "")),
    )
    logger.info(
        f"Loaded problem {problem.name!r}: {len(problem.cover.states)} states, "
        f"{len(problem.cover.sets)} cover sets, {len(problem.partition.classes)} classes, "
        f"{problem.b} rollouts"
    )
    return problem


def parse_schema_entry(entry: Any, location: str) -> Schema:
    if isinstance(entry, str):
        return Schema.parse(entry)
    if not isinstance(entry, Mapping):
        raise ParseError(location, "expected a schema object or string")
    unknown = sorted(str(key) for key in entry if key not in SCHEMA_FIELDS)
    if unknown:
        raise ParseError(f"{location}.{unknown[0]}", "unknown field")
    action = entry.get("action")
    if action is None:
        if entry.get("path") or entry.get("tail", WILDCARD) != WILDCARD:
            raise ParseError(f"{location}.action", "missing field")
        return Schema.universal()
    path = _field(entry, "path", location, list)
    tail = _field(entry, "tail", location)
    return Schema(action=action, path=tuple(str(p) for p in path), tail=str(tail))


def check_schema(schema: Schema, problem: Problem) -> None:
    """Every path entry must name a cover set or class, and the tail a declared terminal"""
    for symbol in schema.path:
        if symbol not in problem.cover.sets and symbol not in problem.partition.classes:
            raise UnknownCoverSet(symbol)
    labels = {base_label(f) for f in problem.terminals}
    if schema.tail != WILDCARD and schema.tail not in labels:
        raise UnknownReference("terminal", schema.tail)


def load_schemata(source: Source, problem: Problem) -> List[Schema]:
    """Schemata from a schema file (a list, or an object with "schemata") or a problem document"""
    doc = _read_document(source) if not isinstance(source, list) else source
    entries = doc.get("schemata", []) if isinstance(doc, Mapping) else doc
    if not isinstance(entries, list):
        raise ParseError("schemata", "expected a list")

    schemata = [parse_schema_entry(e, f"schemata[{i}]") for i, e in enumerate(entries)]
    for schema in schemata:
        check_schema(schema, problem)
    return schemata
