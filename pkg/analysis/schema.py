from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple

from structures.cover import Partition, SetCover, StateId
from structures.errors import ParseError, UnknownCoverSet, UnknownSchemaSymbol, ValidationError
from structures.population import ActionLabel, Copy, Rollout, base_label

WILDCARD = "#"


@dataclass(frozen=True)
class Schema:
    """Rollout pattern (action, path of cover sets or classes, terminal or #).

    The universal schema has no action, an empty path and a # tail.
    """
    action: Optional[ActionLabel] = None
    path: Tuple[str, ...] = ()
    tail: str = WILDCARD

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        if self.action is None and (self.path or self.tail != WILDCARD):
            raise ValidationError(f"Schema without an action must be universal: {self.path}, {self.tail}")

    @classmethod
    def universal(cls) -> "Schema":
        return cls()

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Parse "#" or "(action,set,...,tail)" """
        stripped = text.strip()
        if stripped == WILDCARD:
            return cls.universal()
        if not (stripped.startswith("(") and stripped.endswith(")")):
            raise ParseError(repr(text), "expected '#' or '(action,...,tail)'")
        parts = [p.strip() for p in stripped[1:-1].split(",")]
        if len(parts) < 2 or any(not p for p in parts):
            raise ParseError(repr(text), "a schema needs an action and a tail")
        return cls(action=parts[0], path=tuple(parts[1:-1]), tail=parts[-1])

    @property
    def is_universal(self) -> bool:
        return self.action is None

    @property
    def height(self) -> int:
        return len(self.path)

    @property
    def label(self) -> str:
        if self.is_universal:
            return WILDCARD
        return "(" + ",".join(str(x) for x in (self.action, *self.path, self.tail)) + ")"

    def __str__(self) -> str:
        return self.label


def resolve_symbol(symbol: str, cover: SetCover, partition: Optional[Partition] = None) -> FrozenSet[StateId]:
    """Member states of a cover set id, or of a class id when a partition is given"""
    if symbol in cover.sets:
        return cover.sets[symbol]
    if partition is not None and symbol in partition.classes:
        return partition.classes[symbol]
    raise UnknownSchemaSymbol(symbol)


@dataclass(frozen=True)
class SchemaMatcher:
    """A schema with its path resolved to member sets, ready for repeated fit tests"""
    schema: Schema
    sets: Tuple[FrozenSet[StateId], ...]

    @classmethod
    def compile(cls, schema: Schema, cover: SetCover, partition: Optional[Partition] = None) -> "SchemaMatcher":
        return cls(schema, tuple(resolve_symbol(s, cover, partition) for s in schema.path))

    def matches(self, action: ActionLabel, states: Sequence[StateId], terminal) -> bool:
        schema = self.schema
        if schema.is_universal:
            return True
        if action != schema.action:
            return False
        k = len(self.sets)
        if schema.tail == WILDCARD:
            if len(states) < k:
                return False
        elif len(states) != k or base_label(terminal) != schema.tail:
            return False
        for s, members in zip(states, self.sets):
            if s not in members and not (isinstance(s, Copy) and base_label(s) in members):
                return False
        return True

    def fits(self, rollout: Rollout) -> bool:
        return self.matches(rollout.action, rollout.states, rollout.terminal)


def fits(rollout: Rollout, schema: Schema, cover: SetCover, partition: Optional[Partition] = None) -> bool:
    return SchemaMatcher.compile(schema, cover, partition).fits(rollout)


def schema_geq(h: Schema, g: Schema) -> bool:
    """True iff h >= g: every rollout fitting g also fits h by construction"""
    if h == g or h.is_universal:
        return True
    if g.is_universal or h.action != g.action or h.tail != WILDCARD:
        return False
    k = len(h.path)
    if g.path[:k] != h.path:
        return False
    if g.tail == WILDCARD:
        return len(g.path) > k
    return len(g.path) >= k


def coarsen(schema: Schema, partition: Partition) -> Schema:
    """Replace every cover-set path entry by its class"""
    path = []
    for symbol in schema.path:
        if symbol in partition.set_class:
            path.append(partition.set_class[symbol])
        elif symbol in partition.classes:
            path.append(symbol)
        else:
            raise UnknownCoverSet(symbol)
    if schema.is_universal:
        return schema
    return Schema(schema.action, tuple(path), schema.tail)
