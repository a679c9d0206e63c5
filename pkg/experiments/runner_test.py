import json
from fractions import Fraction

import pytest

from analysis.schema import Schema
from config import Config
from experiments.runner import ExperimentConfig, ExperimentRunner, run_experiment
from structures.errors import ConfigError, MissingPayoff
from utils.reporting import ConvergenceReport, EnumerationReport, PayoffReport, ValidationReport, render_report

FIG2_TARGET = Schema.parse("(beta,4,7,5,f2)")


class TestExperimentConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mode": "train"},
            {"mode": "simulate", "steps": 0},
            {"mode": "simulate", "inflation_levels": (1, 0)},
            {"mode": "simulate", "inflation_levels": ()},
            {"mode": "simulate", "replicas": 0},
            {"mode": "simulate", "seed": -1},
            {"mode": "simulate", "p_identity": 0},
            {"mode": "simulate", "p_identity": Fraction(5, 4)},
            {"mode": "payoff", "height_cap": 0},
            {"mode": "enumerate", "class_size_bound": 0},
            {"mode": "payoff", "samples": 0},
            {"mode": "simulate", "steps": 10, "burn_in": 10},
            {"mode": "simulate", "workers": 0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kwargs)

    def test_normalises_sequences(self):
        config = ExperimentConfig(mode="predict", inflation_levels=[1, 2], schemata=[FIG2_TARGET], p_identity="1/3")
        assert config.inflation_levels == (1, 2)
        assert config.schemata == (FIG2_TARGET,)
        assert config.p_identity == Fraction(1, 3)


class TestModes:
    def test_validate(self, fig2):
        report = run_experiment(fig2, ExperimentConfig(mode="validate"))
        assert isinstance(report, ValidationReport)
        assert (report.states, report.cover_sets, report.classes, report.rollouts) == (13, 7, 3, 4)
        assert report.total_states == 13
        assert report.generators == 38
        assert not report.homologous

    def test_predict(self, fig2):
        report = run_experiment(fig2, ExperimentConfig(mode="predict", schemata=(FIG2_TARGET,), inflation_levels=(1, 4)))
        assert isinstance(report, ConvergenceReport)
        assert [(r.m, r.predicted) for r in report.rows] == [(1, Fraction(1, 441)), (4, Fraction(1, 441))]
        data = json.loads(render_report(report, "json"))
        assert data["rows"][0]["predicted"] == {"exact": "1/441", "decimal": pytest.approx(1 / 441)}
        assert data["rows"][0]["phi_hat"]["exact"] is None

    def test_default_schema_is_universal(self, t1):
        runner = ExperimentRunner(t1, ExperimentConfig(mode="predict"))
        assert runner.schemata == [Schema.universal()]

    def test_enumerate_t1(self, t1):
        schemata = (Schema.parse("(alpha,A,X,f1)"), Schema.parse("(beta,X,#)"))
        report = run_experiment(t1, ExperimentConfig(mode="enumerate", schemata=schemata))
        assert isinstance(report, EnumerationReport)
        assert report.class_size == 4
        assert report.generators == 2
        assert all(report.checks.values())
        assert [r.uniform_average for r in report.rows] == [Fraction(1, 4), Fraction(1, 2)]
        assert [r.predicted for r in report.rows] == [Fraction(1, 4), Fraction(1, 2)]

    def test_payoff(self, fig2):
        report = run_experiment(fig2, ExperimentConfig(mode="payoff", samples=20_000, seed=5))
        assert isinstance(report, PayoffReport)
        exact = {r.action: r.exact for r in report.rows}
        assert exact == {"alpha": Fraction(29, 12), "beta": Fraction(29, 12), "gamma": Fraction(11, 4)}
        for row in report.rows:
            assert abs(row.mc_mean - float(row.exact)) <= 4 * row.mc_standard_error
        assert report.height_cap == 64 * 5

    def test_payoff_needs_payoffs(self, h2b):
        with pytest.raises(MissingPayoff):
            run_experiment(h2b, ExperimentConfig(mode="payoff"))


class TestSimulate:
    def config(self, **kwargs):
        base = dict(
            mode="simulate",
            schemata=(Schema.parse("(alpha,1,#)"), FIG2_TARGET),
            inflation_levels=(2, 1),
            replicas=3,
            steps=400,
            seed=13,
        )
        base.update(kwargs)
        return ExperimentConfig(**base)

    def test_row_order(self, fig2):
        report = run_experiment(fig2, self.config())
        keys = [(r.m, r.schema, r.replica) for r in report.rows]
        assert keys == [
            (m, h, r)
            for m in (1, 2)
            for h in ("(alpha,1,#)", "(beta,4,7,5,f2)")
            for r in range(3)
        ]
        assert all(r.t == 400 and r.seed == 13 for r in report.rows)
        assert [(s.m, s.schema) for s in report.summary] == [
            (2, "(alpha,1,#)"),
            (2, "(beta,4,7,5,f2)"),
            (1, "(alpha,1,#)"),
            (1, "(beta,4,7,5,f2)"),
        ]

    def test_reports_are_byte_reproducible(self, fig2):
        first = render_report(run_experiment(fig2, self.config()), "csv")
        again = render_report(run_experiment(fig2, self.config()), "csv")
        assert first == again
        assert first.splitlines()[0] == "m,t,replica,schema,phi_hat,predicted,abs_error,seed"

    def test_worker_pool_matches_serial(self, fig2):
        serial = run_experiment(fig2, self.config(workers=1))
        pooled = run_experiment(fig2, self.config(workers=2))
        assert serial.rows == pooled.rows

    def test_predicted_column(self, fig2):
        report = run_experiment(fig2, self.config(replicas=1, inflation_levels=(1,)))
        assert {r.schema: r.predicted for r in report.rows} == {
            "(alpha,1,#)": Fraction(3, 14),
            "(beta,4,7,5,f2)": Fraction(1, 441),
        }


@pytest.mark.slow
def test_fig2_trend_toward_limit(fig2):
    target = 1 / 441
    config = ExperimentConfig(
        mode="simulate",
        schemata=(FIG2_TARGET,),
        inflation_levels=(1, 2, 4, 8),
        replicas=8,
        steps=1_000_000,
        seed=2024,
        workers=4,
    )
    runner = ExperimentRunner(fig2, config)
    report = run_experiment(fig2, config)
    means = {s.m: s.mean for s in report.summary}

    for s in report.summary:
        assert s.replicas == 8
        assert s.mean_batch_error > 0
        assert s.standard_error * s.replicas ** 0.5 <= Config.SPREAD_TOLERANCE * s.mean_batch_error
    assert abs(means[8] - target) <= abs(means[1] - target)
    assert abs(means[8] - target) <= 0.25 * target
    assert runner.predicted()[FIG2_TARGET.label] == Fraction(1, 441)
