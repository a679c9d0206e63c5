from fractions import Fraction

import numpy as np
import pytest

from structures.cover import (
    DisjointSet,
    Pseudometric,
    SetCover,
    build_partition,
    cover_from_pseudometric,
    expansion,
    is_compatible_triple,
    partition_as_cover,
    similarity_sets_of,
    validate_cover,
)
from structures.errors import (
    AmbiguousCoverSetId,
    EmptyCoverSet,
    NotCovering,
    PseudometricAxiomViolation,
    UnknownCoverSet,
    UnknownState,
    ValidationError,
)

A = "1+2+3+4+6"


def closure_oracle(states, sets):
    """Classes by squaring the boolean similarity relation to a fixpoint"""
    pos = {s: i for i, s in enumerate(states)}
    relation = np.eye(len(states), dtype=bool)
    for members in sets.values():
        idx = [pos[s] for s in members]
        relation[np.ix_(idx, idx)] = True
    while True:
        squared = (relation.astype(int) @ relation.astype(int)) > 0
        if np.array_equal(squared, relation):
            break
        relation = squared
    return {frozenset(states[j] for j in np.flatnonzero(row)) for row in relation}


class TestValidateCover:
    def test_fig2_cover_is_valid(self, fig2):
        cover = fig2.cover
        assert len(cover.states) == 13
        assert len(cover.sets) == 7
        assert cover.sets["2"] == frozenset({"1a"})
        assert cover.sets["4"] == frozenset({"3b", "3c"})

    def test_singleton_cover(self):
        cover = validate_cover(["x"], {"A": ["x"]})
        assert cover.sets == {"A": frozenset({"x"})}

    def test_uncovered_state(self):
        with pytest.raises(NotCovering) as exc:
            validate_cover(["x", "y"], {"A": ["x"]})
        assert exc.value.uncovered == ["y"]

    def test_empty_set(self):
        with pytest.raises(EmptyCoverSet):
            validate_cover(["x"], {"A": ["x"], "B": []})

    def test_unknown_state(self):
        with pytest.raises(UnknownState):
            validate_cover(["x"], {"A": ["x", "z"]})

    def test_rejects_separator_in_set_id(self):
        with pytest.raises(AmbiguousCoverSetId) as exc:
            validate_cover(["x", "y", "z"], {"a": ["x", "y"], "b": ["y"], "a+b": ["z"]})
        assert exc.value.set_id == "a+b"
        assert isinstance(exc.value, ValidationError)

    def test_rejects_ids_with_equal_text(self):
        with pytest.raises(AmbiguousCoverSetId):
            validate_cover(["x", "y"], {1: ["x"], "1": ["y"]})


class TestPartition:
    def test_fig2_partition(self, fig2):
        classes = fig2.partition.classes
        assert set(classes) == {A, "5", "7"}
        assert classes[A] == frozenset({"1a", "1b", "1c", "3b", "3c", "3d", "6c"})
        assert classes["5"] == frozenset({"5a", "5b", "5c"})
        assert classes["7"] == frozenset({"7a", "7b", "7c"})

    def test_partition_soundness(self, fig2):
        partition = fig2.partition
        seen = set()
        for members in partition.classes.values():
            assert members
            assert not (members & seen)
            seen |= members
        assert seen == set(fig2.cover.states)
        for set_id, members in fig2.cover.sets.items():
            containing = [c for c, m in partition.classes.items() if members <= m]
            assert containing == [partition.set_class[set_id]]

    def test_class_order_follows_first_state(self):
        cover = validate_cover(["c", "a", "b"], {"P": ["a", "b"], "Q": ["c"]})
        assert list(build_partition(cover).classes) == ["Q", "P"]

    def test_colliding_class_ids_raise(self):
        cover = SetCover(
            states=("x", "y", "z"),
            sets={"a": frozenset({"x", "y"}), "b": frozenset({"y"}), "a+b": frozenset({"z"})},
        )
        with pytest.raises(AmbiguousCoverSetId):
            build_partition(cover)

    def test_partition_cover_is_unchanged(self):
        cover = validate_cover(["a", "b", "c"], {"P": ["a", "b"], "Q": ["c"]})
        partition = build_partition(cover)
        assert partition.classes == {"P": frozenset({"a", "b"}), "Q": frozenset({"c"})}

    def test_random_covers_match_closure_oracle(self, rng, random_cover):
        for _ in range(1000):
            n = int(rng.integers(1, 13))
            states = [f"s{i}" for i in range(n)]
            sets = random_cover(rng, states)
            partition = build_partition(validate_cover(states, sets))
            assert set(partition.classes.values()) == closure_oracle(states, sets)


class TestDisjointSet:
    def test_union_and_sets(self):
        ds = DisjointSet()
        for e in "abcde":
            ds.make_set(e)
        ds.union("a", "b")
        ds.union("c", "d")
        ds.union("b", "d")
        assert ds.sets() == frozenset({frozenset("abcd"), frozenset("e")})
        assert ds.find("a") == ds.find("c")


class TestExpansion:
    def test_fig2_expansions(self, fig2):
        for set_id in ("1", "2", "3", "4", "6"):
            assert expansion(fig2.cover, fig2.partition, set_id) == A
        assert expansion(fig2.cover, fig2.partition, "5") == "5"

    def test_expansion_contains_set(self, fig2):
        for set_id, members in fig2.cover.sets.items():
            assert members <= fig2.partition.classes[expansion(fig2.cover, fig2.partition, set_id)]

    def test_partition_as_cover_expands_to_itself(self, fig2):
        cover = partition_as_cover(fig2.cover, fig2.partition)
        partition = build_partition(cover)
        for set_id in cover.sets:
            assert expansion(cover, partition, set_id) == set_id

    def test_unknown_set(self, fig2):
        with pytest.raises(UnknownCoverSet):
            expansion(fig2.cover, fig2.partition, "9")


class TestSimilarity:
    def test_similarity_sets(self, fig2):
        assert similarity_sets_of(fig2.cover, "1a") == {"1", "2", "3"}
        assert similarity_sets_of(fig2.cover, "1b") == {"1"}

    def test_singleton(self):
        cover = validate_cover(["x"], {"A": ["x"]})
        assert similarity_sets_of(cover, "x") == {"A"}

    def test_unknown_state(self, fig2):
        with pytest.raises(UnknownState):
            similarity_sets_of(fig2.cover, "zz")

    def test_compatible_triples(self, fig2):
        assert is_compatible_triple(fig2.cover, "1", "1b", "1a")
        assert not is_compatible_triple(fig2.cover, "2", "1b", "1a")
        assert is_compatible_triple(fig2.cover, "4", "3b", "3b")


class TestPseudometric:
    def test_zero_pseudometric(self):
        pm = Pseudometric(("a", "b", "c"), lambda x, y: 0)
        cover = cover_from_pseudometric(pm, [Fraction(1, 2)])
        assert list(cover.sets.values()) == [frozenset("abc")]
        # every point produced the same ball
        (provenance,) = cover.provenance.values()
        assert [x for x, _ in provenance] == ["a", "b", "c"]

    def test_discrete_metric_gives_singletons(self):
        pm = Pseudometric(("a", "b", "c"), lambda x, y: 0 if x == y else 1)
        cover = cover_from_pseudometric(pm, [1])
        assert set(cover.sets.values()) == {frozenset("a"), frozenset("b"), frozenset("c")}

    def test_line_balls_overlap_into_one_class(self):
        pm = Pseudometric((0, 1, 2, 3), lambda x, y: abs(x - y))
        cover = cover_from_pseudometric(pm, [2])
        assert set(cover.sets.values()) == {
            frozenset({0, 1}),
            frozenset({0, 1, 2}),
            frozenset({1, 2, 3}),
            frozenset({2, 3}),
        }
        assert len(build_partition(cover).classes) == 1

    def test_asymmetry_rejected(self):
        pm = Pseudometric(("a", "b"), lambda x, y: 0 if x == y else (1 if x == "a" else 2))
        with pytest.raises(PseudometricAxiomViolation) as exc:
            cover_from_pseudometric(pm, [1])
        assert exc.value.axiom == "symmetry"

    def test_triangle_violation_rejected(self):
        d = {frozenset({0, 1}): 1, frozenset({1, 2}): 1, frozenset({0, 2}): 3}
        pm = Pseudometric((0, 1, 2), lambda x, y: 0 if x == y else d[frozenset({x, y})])
        with pytest.raises(PseudometricAxiomViolation) as exc:
            pm.validate()
        assert exc.value.axiom == "triangle inequality"
        assert exc.value.witness in {(0, 1, 2), (2, 1, 0)}

    def test_every_point_in_own_ball(self, rng):
        points = tuple(range(6))
        coords = {p: Fraction(int(rng.integers(0, 10))) for p in points}
        pm = Pseudometric(points, lambda x, y: abs(coords[x] - coords[y]))
        cover = cover_from_pseudometric(pm, [Fraction(1, 3), 2])
        for p in points:
            assert similarity_sets_of(cover, p)
