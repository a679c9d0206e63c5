from fractions import Fraction

import numpy as np
import pytest

from analysis.order_table import Terminal, build_order_table
from analysis.payoff import PayoffTally, estimate_payoff_mc, expected_payoff_exact, sample_payoff_tally
from analysis.predictor import ClassChain, build_class_chain
from structures.errors import AllTruncated, ConfigError, MissingPayoff, TerminalUnreachable, UnknownReference
from structures.population import Rollout, build_problem


@pytest.fixture(scope="module")
def fig2_chain(fig2):
    return build_class_chain(build_order_table(fig2.population, fig2.cover, fig2.partition))


def absorption_by_elimination(chain: ClassChain, action):
    """Exact terminal distribution from an action, eliminating one class at a time"""
    start = object()
    rows = {c: dict(row) for c, row in chain.step.items()}
    rows[start] = dict(chain.start[action])
    for c in list(chain.step):
        row = rows.pop(c)
        stay = row.pop(c, Fraction(0))
        for other in rows.values():
            p = other.pop(c, None)
            if p is None:
                continue
            for s, q in row.items():
                other[s] = other.get(s, Fraction(0)) + p * q / (1 - stay)
    return rows[start]


def eliminated_payoff(chain: ClassChain, payoff, action) -> Fraction:
    absorbed = absorption_by_elimination(chain, action)
    assert all(isinstance(s, Terminal) for s in absorbed)
    assert sum(absorbed.values()) == 1
    return sum((p * Fraction(payoff[s.label]) for s, p in absorbed.items()), Fraction(0))


class TestExactPayoff:
    @pytest.mark.parametrize(
        "action,expected",
        [("alpha", Fraction(29, 12)), ("beta", Fraction(29, 12)), ("gamma", Fraction(11, 4))],
    )
    def test_fig2(self, fig2, fig2_chain, action, expected):
        assert expected_payoff_exact(fig2_chain, fig2.payoff, action) == expected

    @pytest.mark.parametrize("name", ["fig2", "t1"])
    def test_matches_class_elimination(self, request, name):
        problem = request.getfixturevalue(name)
        chain = build_class_chain(build_order_table(problem.population, problem.cover, problem.partition))
        for action in problem.actions:
            exact = expected_payoff_exact(chain, problem.payoff, action)
            assert exact == eliminated_payoff(chain, problem.payoff, action)

    def test_deterministic_chain(self):
        problem = build_problem(
            ["x", "y"],
            {"X": ["x"], "Y": ["y"]},
            ["a"],
            ["f"],
            [Rollout("a", ("x", "y"), "f")],
            payoff={"f": "5/2"},
        )
        chain = build_class_chain(build_order_table(problem.population, problem.cover, problem.partition))
        assert expected_payoff_exact(chain, problem.payoff, "a") == Fraction(5, 2)
        estimate = estimate_payoff_mc(chain, problem.payoff, "a", 1000, np.random.default_rng(0), height_cap=4)
        assert estimate.mean == 2.5
        assert estimate.standard_error == 0.0
        assert estimate.truncated == 0

    def test_unknown_action(self, fig2, fig2_chain):
        with pytest.raises(UnknownReference):
            expected_payoff_exact(fig2_chain, fig2.payoff, "delta")

    def test_missing_payoff(self, fig2, fig2_chain):
        payoff = {k: v for k, v in fig2.payoff.items() if k != "f3"}
        with pytest.raises(MissingPayoff):
            expected_payoff_exact(fig2_chain, payoff, "alpha")

    def test_terminal_unreachable(self):
        chain = ClassChain(
            start={"a": {"C": Fraction(1)}},
            step={"C": {"D": Fraction(1)}, "D": {"C": Fraction(1)}},
        )
        with pytest.raises(TerminalUnreachable):
            expected_payoff_exact(chain, {}, "a")


class TestMonteCarlo:
    def test_within_three_standard_errors(self, fig2, fig2_chain):
        rng = np.random.default_rng(99)
        for action in fig2.actions:
            exact = float(expected_payoff_exact(fig2_chain, fig2.payoff, action))
            estimate = estimate_payoff_mc(fig2_chain, fig2.payoff, action, 1_000_000, rng, height_cap=256)
            assert estimate.samples == 1_000_000
            assert abs(estimate.mean - exact) <= 3 * estimate.standard_error

    def test_all_truncated(self):
        chain = ClassChain(
            start={"a": {"C": Fraction(1)}},
            step={"C": {"C": Fraction(1, 2), Terminal("f"): Fraction(1, 2)}},
        )
        chain_forever = ClassChain(start={"a": {"C": Fraction(1)}}, step={"C": {"C": Fraction(1)}})
        with pytest.raises(AllTruncated):
            estimate_payoff_mc(chain_forever, {"f": 1}, "a", 100, np.random.default_rng(0), height_cap=3)
        estimate = estimate_payoff_mc(chain, {"f": 1}, "a", 10_000, np.random.default_rng(0), height_cap=2)
        # P(truncated) = 1/4 at height cap 2
        assert 0.2 < estimate.truncated / 10_000 < 0.3
        assert estimate.mean == 1.0

    def test_rejects_empty_sample(self, fig2, fig2_chain):
        with pytest.raises(ConfigError):
            estimate_payoff_mc(fig2_chain, fig2.payoff, "alpha", 0, np.random.default_rng(0), height_cap=8)

    def test_unknown_action(self, fig2, fig2_chain):
        with pytest.raises(UnknownReference):
            estimate_payoff_mc(fig2_chain, fig2.payoff, "delta", 10, np.random.default_rng(0), height_cap=8)


class TestTally:
    def test_merge_equals_single_pass(self, rng):
        values = rng.normal(2.0, 1.0, size=1000)
        whole = PayoffTally.from_samples(values, truncated=3)
        merged = PayoffTally.from_samples(values[:400], truncated=1).merge(
            PayoffTally.from_samples(values[400:], truncated=2)
        )
        assert merged.count == whole.count
        assert merged.truncated == whole.truncated
        assert merged.estimate().mean == pytest.approx(whole.estimate().mean)
        assert merged.estimate().standard_error == pytest.approx(whole.estimate().standard_error)
        assert whole.estimate().standard_error == pytest.approx(values.std(ddof=1) / np.sqrt(1000))

    def test_empty_merge_is_neutral(self):
        tally = PayoffTally.from_samples(np.array([1.0, 3.0]))
        assert PayoffTally().merge(tally) == tally

    def test_split_sampling(self, fig2, fig2_chain):
        total = PayoffTally()
        for seed in range(4):
            total = total.merge(
                sample_payoff_tally(fig2_chain, fig2.payoff, "gamma", 50_000, np.random.default_rng(seed), 256)
            )
        estimate = total.estimate()
        assert estimate.samples == 200_000
        assert abs(estimate.mean - 2.75) <= 3 * estimate.standard_error
