import collections
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Generic,
    Hashable,
    Iterable,
    List,
    Mapping,
    Tuple,
    TypeVar,
)

from structures.errors import (
    AmbiguousCoverSetId,
    ConfigError,
    EmptyCoverSet,
    NotCovering,
    PseudometricAxiomViolation,
    UnknownCoverSet,
    UnknownState,
)

logger = logging.getLogger(__name__)

StateId = Hashable
CoverSetId = Hashable
ClassId = str

T = TypeVar("T")


class DisjointSet(Generic[T]):
    """Union-find with path compression and union by rank"""

    def __init__(self):
        self.parent: Dict[T, T] = {}
        self.rank: Dict[T, int] = {}

    def make_set(self, e: T):
        if e in self.parent:
            return
        self.parent[e] = e
        self.rank[e] = 0

    def find(self, e: T) -> T:
        self.make_set(e)
        root = e
        while self.parent[root] != root:
            root = self.parent[root]
        # compress
        while self.parent[e] != root:
            self.parent[e], e = root, self.parent[e]
        return root

    def union(self, x: T, y: T):
        x_root = self.find(x)
        y_root = self.find(y)
        if x_root == y_root:
            return
        if self.rank[x_root] < self.rank[y_root]:
            x_root, y_root = y_root, x_root
        self.parent[y_root] = x_root
        if self.rank[x_root] == self.rank[y_root]:
            self.rank[x_root] += 1

    def sets(self) -> FrozenSet[FrozenSet[T]]:
        groups = collections.defaultdict(set)
        for e in self.parent:
            groups[self.find(e)].add(e)
        return frozenset(frozenset(s) for s in groups.values())


@dataclass(frozen=True)
class SetCover:
    """Similarity sets over a finite state space.

    `states` keeps declaration order; that order is the fixed total order used
    wherever states must be enumerated deterministically.
    """
    states: Tuple[StateId, ...]
    sets: Dict[CoverSetId, FrozenSet[StateId]]
    provenance: Dict[CoverSetId, Tuple[Tuple[StateId, Fraction], ...]] = field(
        default_factory=dict, compare=False
    )

    @cached_property
    def state_index(self) -> Dict[StateId, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def memberships(self) -> Dict[StateId, FrozenSet[CoverSetId]]:
        found: Dict[StateId, set] = {s: set() for s in self.states}
        for set_id, members in self.sets.items():
            for s in members:
                found[s].add(set_id)
        return {s: frozenset(ids) for s, ids in found.items()}

    def ordered_members(self, set_id: CoverSetId) -> List[StateId]:
        index = self.state_index
        return sorted(self.sets[set_id], key=index.__getitem__)


@dataclass(frozen=True)
class Partition:
    classes: Dict[ClassId, FrozenSet[StateId]]
    member_of: Dict[StateId, ClassId]
    set_class: Dict[CoverSetId, ClassId]


@dataclass(frozen=True)
class Pseudometric:
    points: Tuple[StateId, ...]
    distance: Callable[[StateId, StateId], Fraction]

    def d(self, x: StateId, y: StateId) -> Fraction:
        return Fraction(self.distance(x, y))

    def validate(self) -> None:
        """Exhaustive check of the pseudometric axioms"""
        for x in self.points:
            if self.d(x, x) != 0:
                raise PseudometricAxiomViolation("identity", (x, x))
        for x, y in itertools.product(self.points, repeat=2):
            dxy = self.d(x, y)
            if dxy < 0:
                raise PseudometricAxiomViolation("non-negativity", (x, y))
            if dxy != self.d(y, x):
                raise PseudometricAxiomViolation("symmetry", (x, y))
        for x, y, z in itertools.product(self.points, repeat=3):
            if self.d(x, z) > self.d(x, y) + self.d(y, z):
                raise PseudometricAxiomViolation("triangle inequality", (x, y, z))


CLASS_ID_SEPARATOR = "+"


def class_id_for(set_ids: Iterable[CoverSetId]) -> ClassId:
    return CLASS_ID_SEPARATOR.join(sorted(str(i) for i in set_ids))


def validate_cover(
    states: Iterable[StateId],
    sets: Mapping[CoverSetId, Iterable[StateId]],
    provenance: Mapping[CoverSetId, Tuple[Tuple[StateId, Fraction], ...]] = None,
) -> SetCover:
    """Validate cover sets against a state space.

    Args:
        states: declared states, in the order used for deterministic enumeration
        sets: cover set id -> member states

    Returns:
        The validated SetCover
    """
    ordered = tuple(dict.fromkeys(states))
    known = set(ordered)
    frozen: Dict[CoverSetId, FrozenSet[StateId]] = {}
    seen_names: Dict[str, CoverSetId] = {}
    for set_id, members in sets.items():
        name = str(set_id)
        if CLASS_ID_SEPARATOR in name:
            raise AmbiguousCoverSetId(set_id, f"contains the class separator {CLASS_ID_SEPARATOR!r}")
        if name in seen_names:
            raise AmbiguousCoverSetId(set_id, f"has the same text as {seen_names[name]!r}")
        seen_names[name] = set_id
        members = frozenset(members)
        if not members:
            raise EmptyCoverSet(set_id)
        for s in members:
            if s not in known:
                raise UnknownState(s)
        frozen[set_id] = members

    covered = set().union(*frozen.values()) if frozen else set()
    uncovered = [s for s in ordered if s not in covered]
    if uncovered:
        raise NotCovering(uncovered)

    return SetCover(states=ordered, sets=frozen, provenance=dict(provenance or {}))


def build_partition(cover: SetCover) -> Partition:
    """Transitive closure of the similarity relation as disjoint classes"""
    components: DisjointSet[StateId] = DisjointSet()
    for s in cover.states:
        components.make_set(s)
    for members in cover.sets.values():
        first, *rest = members
        for s in rest:
            components.union(first, s)

    sets_by_root: Dict[StateId, List[CoverSetId]] = collections.defaultdict(list)
    for set_id, members in cover.sets.items():
        sets_by_root[components.find(next(iter(members)))].append(set_id)

    index = cover.state_index
    # dict order follows the first state of each class
    groups = sorted(components.sets(), key=lambda group: min(index[s] for s in group))

    classes: Dict[ClassId, FrozenSet[StateId]] = {}
    member_of: Dict[StateId, ClassId] = {}
    set_class: Dict[CoverSetId, ClassId] = {}
    for group in groups:
        set_ids = sets_by_root[components.find(next(iter(group)))]
        class_id = class_id_for(set_ids)
        if class_id in classes:
            raise AmbiguousCoverSetId(class_id, "names two different partition classes")
        classes[class_id] = group
        for s in group:
            member_of[s] = class_id
        for set_id in set_ids:
            set_class[set_id] = class_id

    logger.debug(f"Partitioned {len(cover.states)} states into {len(classes)} classes")
    return Partition(classes=classes, member_of=member_of, set_class=set_class)


def partition_as_cover(cover: SetCover, partition: Partition) -> SetCover:
    """The cover whose sets are exactly the classes of the partition"""
    return SetCover(states=cover.states, sets=dict(partition.classes))


def expansion(cover: SetCover, partition: Partition, set_id: CoverSetId) -> ClassId:
    if set_id not in cover.sets:
        raise UnknownCoverSet(set_id)
    return partition.set_class[set_id]


def similarity_sets_of(cover: SetCover, state: StateId) -> FrozenSet[CoverSetId]:
    try:
        return cover.memberships[state]
    except KeyError:
        raise UnknownState(state)


def is_compatible_triple(cover: SetCover, set_id: CoverSetId, u: StateId, v: StateId) -> bool:
    if set_id not in cover.sets:
        raise UnknownCoverSet(set_id)
    return set_id in similarity_sets_of(cover, u) and set_id in similarity_sets_of(cover, v)


def cover_from_pseudometric(pm: Pseudometric, radii: Iterable) -> SetCover:
    """Cover made of all distinct open balls B(x, eps) for x in points and eps in radii.

    Equal balls are merged under the id of the first (radius, point) that produced
    them; every generating pair is kept in the cover's provenance.
    """
    pm.validate()
    radii = sorted({Fraction(r) for r in radii})
    if not radii:
        raise ConfigError("radii", "at least one radius is required")
    if radii[0] <= 0:
        raise ConfigError("radii", f"radius {radii[0]} is not positive")

    ids_by_ball: Dict[FrozenSet[StateId], CoverSetId] = {}
    provenance: Dict[CoverSetId, List[Tuple[StateId, Fraction]]] = {}
    for eps in radii:
        for x in pm.points:
            ball = frozenset(y for y in pm.points if pm.d(x, y) < eps)
            set_id = ids_by_ball.setdefault(ball, f"B({x},{eps})")
            provenance.setdefault(set_id, []).append((x, eps))

    sets = {set_id: ball for ball, set_id in ids_by_ball.items()}
    logger.debug(f"Generated {len(sets)} distinct balls from {len(pm.points)} points")
    return validate_cover(
        pm.points, sets, {k: tuple(v) for k, v in provenance.items()}
    )
