import numpy as np
import pytest

from core.genealogy_sim import LimitProcess
from core.partitions import parse_partition, scattered_singletons
from core.seeding import replicate_rng
from core.statistics import (
    empirical_distribution,
    exponential_rate_mle,
    goodness_of_fit,
    mean_with_ci,
    merger_rate_mle,
    merger_type,
    total_variation,
    tv_distance,
)
from models.comparison_report import ComparisonReport
from models.distribution import DiscreteDistribution
from models.measure import MeasureOnUnitInterval
from models.params import ModelParams
from models.path_sample import PathEvent, PathSample


def _random_law(rng, support):
    weights = rng.dirichlet(np.ones(len(support)))
    return dict(zip(support, weights))


class TestTotalVariation:
    def test_identical_and_disjoint(self):
        assert total_variation({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0.0
        assert total_variation({"a": 1.0}, {"b": 1.0}) == 1.0

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(4)
        support = list("abcdef")
        for _ in range(100):
            p, q, r = (_random_law(rng, support) for _ in range(3))
            assert total_variation(p, q) == pytest.approx(total_variation(q, p))
            assert total_variation(p, r) <= total_variation(p, q) + total_variation(q, r) + 1e-12

    def test_identical_samples(self):
        sample = ["a", "b", "b", "c"] * 50
        report = tv_distance(sample, list(sample))
        assert report.estimate == 0.0
        assert report.passed

    def test_disjoint_samples(self):
        report = tv_distance(["a"] * 100, ["b"] * 100)
        assert report.estimate == pytest.approx(1.0)
        assert not report.passed

    def test_two_samples_from_one_law(self, rng):
        law = [0.1, 0.2, 0.3, 0.4]
        first = list(rng.choice(4, size=20000, p=law))
        second = list(rng.choice(4, size=20000, p=law))
        report = tv_distance(first, second, rng=np.random.default_rng(1))
        assert report.estimate < 3 * report.standard_error
        assert report.kind == "total-variation"

    def test_against_an_exact_law(self, rng):
        exact = DiscreteDistribution.from_dict({"x": 0.25, "y": 0.75})
        sample = list(rng.choice(["x", "y"], size=5000, p=[0.25, 0.75]))
        assert tv_distance(sample, exact, provenance="PAPER").passed

    def test_report_records_what_was_compared(self):
        exact = DiscreteDistribution.from_dict({"x": 0.5, "y": 0.5})
        sample = ["x", "y"] * 100
        against_law = tv_distance(sample, exact)
        against_sample = tv_distance(sample, ["x"] * 50 + ["y"] * 50)
        assert against_law.details == {"sample_size": 200, "compared_with": "exact"}
        assert against_sample.details == {"sample_size": 200, "other_size": 100, "compared_with": "sample"}
        for report in (against_law, against_sample):
            assert report.reference == 0.0
            assert report.estimate == pytest.approx(0.0)
            assert report.standard_error > 0
            assert report.passed

    def test_empty_sample_is_rejected(self):
        with pytest.raises(ValueError):
            tv_distance([], ["a"])
        with pytest.raises(ValueError):
            empirical_distribution([])


class TestGoodnessOfFit:
    def test_sample_from_the_law_passes(self, rng):
        exact = DiscreteDistribution.from_dict({"a": 0.5, "b": 0.3, "c": 0.199, "d": 0.001})
        sample = list(rng.choice(["a", "b", "c", "d"], size=4000, p=[0.5, 0.3, 0.199, 0.001]))
        report = goodness_of_fit(sample, exact)
        assert report.passed
        assert report.details["degrees_of_freedom"] == 3

    def test_wrong_law_fails(self, rng):
        exact = DiscreteDistribution.from_dict({"a": 0.5, "b": 0.5})
        sample = list(rng.choice(["a", "b"], size=4000, p=[0.6, 0.4]))
        assert not goodness_of_fit(sample, exact).passed

    def test_outcomes_outside_the_support_fail(self):
        exact = DiscreteDistribution.point_mass("a")
        report = goodness_of_fit(["a"] * 99 + ["z"], exact)
        assert report.details["outside_support"] == 1
        assert not report.passed


class TestRates:
    def test_synthetic_poisson_stream(self, rng):
        exposure = 1e4
        estimate = exponential_rate_mle(int(rng.poisson(2.0 * exposure)), exposure)
        assert abs(estimate.estimate - 2.0) <= 3 * estimate.standard_error
        low, high = estimate.ci
        assert low < estimate.estimate < high

    def test_zero_exposure_is_undefined(self):
        estimate = exponential_rate_mle(0, 0.0)
        assert not estimate.defined
        assert estimate.ci is None

    def test_merger_type(self):
        before = scattered_singletons(4)
        assert merger_type(before, parse_partition("1,2|3|4")) == (4, (2,))
        assert merger_type(before, parse_partition("1,2|3,4")) == (4, (2, 2))
        assert merger_type(before, parse_partition("1;2|3|4")) is None

    def test_counts_over_exposure(self):
        path = PathSample(
            initial=scattered_singletons(3),
            events=[
                PathEvent(time=1.0, kind="simple-collision", state=parse_partition("1;2|3"), same_state=True),
                PathEvent(time=1.0, kind="instantaneous-scatter", state=parse_partition("1,2|3")),
            ],
            terminal_time=3.0,
        )
        estimates = merger_rate_mle([path], expected_keys=[(2, (2,)), (4, (2,))])
        assert estimates[(3, (2,))].count == 1
        assert estimates[(3, (2,))].estimate == pytest.approx(1.0)
        assert estimates[(2, (2,))].estimate == 0.0
        assert estimates[(2, (2,))].exposure == pytest.approx(2.0)
        assert not estimates[(4, (2,))].defined

    def test_initial_scatter_is_not_an_event(self):
        path = PathSample(
            initial=parse_partition("1;2;3"),
            events=[PathEvent(time=0.0, kind="instantaneous-scatter", state=parse_partition("1,2|3"))],
            terminal_time=2.0,
        )
        estimates = merger_rate_mle([path], expected_keys=[(2, (2,))])
        assert (3, (2,)) not in estimates
        assert estimates[(2, (2,))].exposure == pytest.approx(2.0)

    def test_mean_with_ci(self, rng):
        values = rng.exponential(2.0, size=5000)
        assert mean_with_ci(values, 2.0).passed
        assert not mean_with_ci(values, 3.0).passed
        with pytest.raises(ValueError):
            mean_with_ci([1.0], 1.0)


class TestComparisonReport:
    def test_pass_rule(self):
        assert ComparisonReport.evaluate("x", "exact", 1.05, 1.0, "DERIVED", standard_error=0.02).passed
        assert not ComparisonReport.evaluate("x", "exact", 1.07, 1.0, "DERIVED", standard_error=0.02).passed
        assert ComparisonReport.evaluate("x", "exact", 1.07, 1.0, "DERIVED", standard_error=0.02, tolerance=0.02).passed

    def test_provenance_is_checked(self):
        with pytest.raises(ValueError, match="provenance"):
            ComparisonReport.evaluate("x", "exact", 1.0, 1.0, "GUESSED")

    def test_negative_standard_error_is_rejected(self):
        with pytest.raises(ValueError):
            ComparisonReport(name="x", kind="exact", estimate=1.0, standard_error=-1.0, reference=1.0,
                             provenance="TRIVIAL", passed=True)


class TestDiscreteDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteDistribution(support=["a", "b"], probabilities=[0.5, 0.6])
        with pytest.raises(ValueError):
            DiscreteDistribution(support=["a"], probabilities=[0.5, 0.5])

    def test_marginal(self):
        law = DiscreteDistribution.from_dict({"ab": 0.2, "ac": 0.3, "bc": 0.5}, source="test")
        first = law.marginal(lambda outcome: outcome[0])
        assert first.as_dict() == {"a": pytest.approx(0.5), "b": pytest.approx(0.5)}
        assert first.metadata == {"source": "test"}
        assert law.probability("zz") == 0.0


def test_single_source_triple_merger_rate():
    half = MeasureOnUnitInterval.point_mass(0.5)
    params = ModelParams(N=4, K=1, m1=0.0, e=1.0, lambda_d=half, lambda_g=half)
    process = LimitProcess(params)
    paths = [process.simulate(scattered_singletons(3), replicate_rng(17, i), until_mrca=True) for i in range(3000)]
    triple = merger_rate_mle(paths)[(3, (3,))]
    assert abs(triple.estimate - 0.125) <= 3 * triple.standard_error
