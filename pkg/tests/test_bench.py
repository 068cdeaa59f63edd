import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dgik import bench
from dgik.errors import InvalidCounts
from dgik.pipeline import evaluate_solution


def beta_quantile(q, a, b):
    """Bisection on the regularized incomplete beta function."""
    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    for _ in range(80):
        mid = (lo + hi) / 2
        if mpmath.betainc(a, b, 0, mid, regularized=True) < q:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def oracle_interval(x, n):
    low = 0.0 if x == 0 else beta_quantile(0.025, x + 0.5, n - x + 0.5)
    high = 1.0 if x == n else beta_quantile(0.975, x + 0.5, n - x + 0.5)
    return low, high


def test_jeffreys_reference_values():
    low, high = bench.jeffreys_interval(500, 1000)
    ref = oracle_interval(500, 1000)
    assert abs(low - ref[0]) <= 1e-3 and abs(high - ref[1]) <= 1e-3
    assert (round(low, 3), round(high, 3)) == (0.469, 0.531)
    assert bench.jeffreys_interval(0, 10)[0] == 0.0
    assert bench.jeffreys_interval(10, 10)[1] == 1.0
    low, high = bench.jeffreys_interval(1, 1)
    assert high == 1.0 and low == pytest.approx(oracle_interval(1, 1)[0], abs=1e-9)


@pytest.mark.parametrize("x,n", [(0, 1), (3, 7), (17, 20), (96, 100), (250, 251)])
def test_jeffreys_matches_bisection_oracle(x, n):
    assert bench.jeffreys_interval(x, n) == pytest.approx(oracle_interval(x, n), abs=1e-9)


@given(st.integers(1, 2000).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_jeffreys_interval_properties(xn):
    x, n = xn
    low, high = bench.jeffreys_interval(x, n)
    assert 0.0 <= low <= x / n <= high <= 1.0


def test_jeffreys_invalid_counts():
    for x, n in [(-1, 5), (6, 5), (0, 0)]:
        with pytest.raises(InvalidCounts):
            bench.jeffreys_interval(x, n)
    with pytest.raises(InvalidCounts):
        bench.jeffreys_interval(1.5, 3)


def test_spec_validation():
    with pytest.raises(ValueError):
        bench.ExperimentSpec("planar-tree", 10)
    with pytest.raises(ValueError):
        bench.ExperimentSpec("planar-chain", 6, trials=0)
    with pytest.raises(ValueError):
        bench.ExperimentSpec("nope", 6)
    with pytest.raises(ValueError):
        bench.ExperimentSpec("planar-chain", 6, obstacles="torus")
    assert bench.ExperimentSpec("planar-tree", 14).dof == 14


def test_generated_angles_respect_limits():
    spec = bench.ExperimentSpec("planar-chain", 6, limits=True, limit_range=(0.5, 0.5), seed=4)
    for i in range(20):
        theta, _ = bench.goal_configuration(spec, i)
        assert np.all(np.abs(theta) <= 0.5)


@pytest.mark.parametrize("suite,dof", [("planar-chain", 10), ("planar-tree", 14), ("revolute-chain", 6), ("revolute-obstacles", 6)])
def test_generation_is_deterministic_and_feasible(suite, dof):
    spec = bench.ExperimentSpec(suite, dof, limits=suite != "revolute-obstacles", seed=9)
    for i in range(3):
        a, b = bench.generate_problem(spec, i), bench.generate_problem(spec, i)
        assert a.seed == b.seed
        assert all(np.array_equal(x.targets, y.targets) for x, y in zip(a.goals, b.goals))
        theta, _ = bench.goal_configuration(spec, i)
        assert evaluate_solution(a.model, theta, a.goals, a.obstacles, a.limits).success()
    assert not np.array_equal(bench.generate_problem(spec, 0).goals[0].targets, bench.generate_problem(spec, 1).goals[0].targets)


def test_layouts():
    for layout, count in [("octahedron", 6), ("cube", 8), ("icosahedron", 12)]:
        c = bench.layout_centers(layout, 3, 2.0)
        assert c.shape == (count, 3) and np.allclose(np.linalg.norm(c, axis=1), 2.0)
    for layout, count in [("octahedron", 4), ("cube", 4), ("icosahedron", 5)]:
        c = bench.layout_centers(layout, 2)
        assert c.shape == (count, 2) and np.allclose(np.linalg.norm(c, axis=1), 1.5)
    assert bench.layout_centers("none", 2).shape == (0, 2)


def small_spec(**kw):
    args = dict(suite="planar-chain", dof=6, trials=6, seed=2)
    args.update(kw)
    return bench.ExperimentSpec(**args)


def strip_runtime(text):
    return [line.split(",")[:7] + line.split(",")[8:] for line in text.splitlines()]


def test_campaign_outputs(tmp_path):
    spec = small_spec()
    summary, records = bench.run_campaign(spec, 1, tmp_path / "a.csv", tmp_path / "w.csv")
    text = (tmp_path / "a.csv").read_text()
    assert text.splitlines()[0].split(",") == list(bench.CSV_FIELDS)
    assert [r.trial_id for r in records] == list(range(6))
    # summary is recomputable from the CSV
    again = bench.summarize(bench.read_records(str(tmp_path / "a.csv")))
    assert again.format() == summary.format()
    rates = [row.success_rate for row in summary.waterfall]
    assert rates == sorted(rates)
    assert all(0.0 <= row.low <= row.success_rate <= row.high <= 1.0 for row in summary.waterfall)
    assert len((tmp_path / "w.csv").read_text().splitlines()) == 1 + len(bench.WATERFALL_TOLERANCES)
    # byte-identical apart from wall-clock time
    bench.run_campaign(spec, 1, tmp_path / "b.csv")
    assert strip_runtime(text) == strip_runtime((tmp_path / "b.csv").read_text())


def test_parallel_matches_serial():
    spec = small_spec(limits=True, init="bounds")
    _, serial = bench.run_campaign(spec, 1)
    _, parallel = bench.run_campaign(spec, 3)
    assert [r._replace(runtime_ms=0) for r in serial] == [r._replace(runtime_ms=0) for r in parallel]


def test_single_trivial_trial():
    spec = small_spec(trials=1)
    summary, _ = bench.run_campaign(spec)
    assert summary.success_rate == 1.0
    assert summary.interval == pytest.approx(oracle_interval(1, 1))


def test_summary_counts_failures():
    rec = bench.TrialRecord(0, False, 0.5, 0.0, 0.0, 0.0, 40, 3.0, "GradientTolerance")
    ok = bench.TrialRecord(1, True, 1e-7, 0.0, 0.0, 0.0, 10, 1.0, "GradientTolerance")
    s = bench.summarize([rec, ok])
    assert s.success_rate == 0.5 and s.iterations_mean == 25.0 and s.runtime_mean_ms == 2.0
    assert [row.success_rate for row in s.waterfall] == [0.5] * 6 + [1.0, 1.0]
