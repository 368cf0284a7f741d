import math

import pytest

from mcastsim.allocator import (
    GAParams,
    SAParams,
    adapt_quality,
    evaluate,
    ewma,
    exhaustive_allocate,
    fec_fraction,
    ga_allocate,
    greedy_allocate,
    lowest_plan,
    predict_capacity,
    predict_client_goodput,
    repair,
    sa_allocate,
    traditional_allocate,
)
from mcastsim.errors import ConfigError, InfeasibleError, OracleError, StateError
from mcastsim.session import PLAYING, STARTUP, FeedbackReport

from conftest import M, ladder, problem, two_group_6m

LAD3 = ladder((1 * M, 0.4), (3 * M, 0.7), (5 * M, 1.0))


# -- predictors -----------------------------------------------------------------


def test_ewma_examples():
    assert predict_capacity({"l": [10, 10, 10]})["l"] == 10
    assert predict_capacity({"l": [10]})["l"] == 10
    assert abs(ewma([10, 20], 0.3) - 13) <= 1e-9


def test_capacity_falls_back_to_nominal():
    assert predict_capacity({"a": []}, nominal={"a": 7.0, "b": 9.0}) == {"a": 7.0, "b": 9.0}


def test_alpha_range():
    with pytest.raises(ValueError):
        predict_capacity({"l": [1.0]}, alpha=0.0)


def test_goodput_examples():
    assert predict_client_goodput([4 * M, 4 * M]) == pytest.approx(4 * M)
    assert predict_client_goodput([4 * M, 6 * M]) == pytest.approx(4.8 * M)
    assert predict_client_goodput([]) == 0.0


def test_goodput_uses_last_window():
    assert predict_client_goodput([1.0, 1.0, 8.0, 8.0], window=2) == pytest.approx(8.0)


# -- evaluate -----------------------------------------------------------------


def test_evaluate_lowest_feasible():
    p = two_group_6m()
    assert evaluate(p, lowest_plan(p))[1] == 0.0


def test_evaluate_value():
    p = problem([("g", 3, ladder((1 * M, 0.7)), {"L"})], {"L": 10 * M})
    assert evaluate(p, {"g": 0})[0] == pytest.approx(2.1)


def test_evaluate_violation():
    p = problem([("a", 1, ladder((2 * M, 0.5)), {"L"}), ("b", 1, ladder((3 * M, 0.5)), {"L"})], {"L": 4 * M})
    assert evaluate(p, {"a": 0, "b": 0})[1] == pytest.approx(1 * M)


@pytest.mark.parametrize("plan", [{}, {"g1": 0}, {"g1": 0, "g2": 5}, {"g1": 0, "g2": 0, "zz": 0}])
def test_evaluate_malformed(plan):
    with pytest.raises(StateError):
        evaluate(two_group_6m(), plan)


def test_headroom_applies():
    p = problem([("g", 1, ladder((1 * M, 0.5), (9.6 * M, 1.0)), {"L"})], {"L": 10 * M}, headroom=0.95)
    assert greedy_allocate(p) == {"g": 0}


# -- greedy / exhaustive / repair -----------------------------------------------


def test_greedy_ample_capacity_top():
    p = problem([("g", 1, LAD3, {"L"})], {"L": 100 * M})
    assert greedy_allocate(p) == {"g": 2}


def test_greedy_two_group_tie_break():
    p = two_group_6m()
    plan = greedy_allocate(p)
    assert plan == {"g1": 1, "g2": 0}
    assert p.loads(p.to_vector(plan)) == [5 * M]


def test_greedy_empty():
    p = problem([], {})
    assert greedy_allocate(p) == {}


def test_greedy_infeasible_base():
    p = problem([("a", 1, ladder((3 * M, 0.5)), {"L"}), ("b", 1, ladder((4 * M, 0.5)), {"L"})], {"L": 6 * M})
    with pytest.raises(InfeasibleError):
        greedy_allocate(p)


def test_lowest_tier_alone_too_big():
    with pytest.raises(InfeasibleError):
        problem([("a", 1, ladder((7 * M, 0.5)), {"L"})], {"L": 6 * M})


def test_exhaustive_examples():
    assert exhaustive_allocate(problem([("g", 1, LAD3, {"L"})], {"L": 100 * M})) == {"g": 2}
    p = two_group_6m()
    assert evaluate(p, exhaustive_allocate(p))[0] == pytest.approx(1.4)
    # both optima have value 1.4; the lexicographically smallest tier vector wins
    assert exhaustive_allocate(p) == {"g1": 0, "g2": 1}


def test_exhaustive_guard():
    lad = ladder(*[((k + 1) * 1000, (k + 1) / 1001) for k in range(1000)])
    p = problem([("a", 1, lad, {"L"}), ("b", 1, lad, {"L"}), ("c", 1, ladder((1, 0.1), (2, 0.2)), {"L"})],
                {"L": 100 * M})
    with pytest.raises(OracleError):
        exhaustive_allocate(p)


def test_repair_identity_cases():
    p = two_group_6m()
    assert repair(p, {"g1": 1, "g2": 0}) == {"g1": 1, "g2": 0}
    assert repair(p, lowest_plan(p)) == lowest_plan(p)


def test_repair_all_top():
    p = two_group_6m()
    plan = repair(p, {"g1": 1, "g2": 1})
    assert sorted(plan.values()) == [0, 1]
    assert p.loads(p.to_vector(plan)) == [5 * M]
    assert plan == {"g1": 0, "g2": 1}  # equal drops: the lower group id is downgraded


def test_repair_picks_largest_drop():
    p = problem([("a", 1, ladder((1 * M, 0.1), (2 * M, 0.9)), {"L"}),
                 ("b", 1, ladder((1 * M, 0.1), (4 * M, 0.9)), {"L"})], {"L": 5 * M})
    assert repair(p, {"a": 1, "b": 1}) == {"a": 1, "b": 0}


# -- GA / SA --------------------------------------------------------------------


def _bottleneck3():
    return problem([
        ("a", 3, ladder((1 * M, 0.3), (2 * M, 0.6), (4 * M, 1.0)), {"L", "x"}),
        ("b", 2, ladder((1 * M, 0.2), (3 * M, 0.7), (5 * M, 0.9)), {"L"}),
        ("c", 1, ladder((0.5 * M, 0.4), (2 * M, 0.8), (3 * M, 1.0)), {"L", "y"}),
    ], {"L": 8 * M, "x": 10 * M, "y": 2.5 * M})


def test_ga_single_tier():
    p = problem([("a", 1, ladder((1 * M, 0.5)), {"L"}), ("b", 2, ladder((1 * M, 0.3)), {"L"})], {"L": 5 * M})
    assert ga_allocate(p, seed=3) == {"a": 0, "b": 0}


def test_ga_deterministic():
    p = _bottleneck3()
    assert ga_allocate(p, seed=11) == ga_allocate(p, seed=11)


def test_ga_matches_oracle():
    p = _bottleneck3()
    opt = evaluate(p, exhaustive_allocate(p))[0]
    value, viol = evaluate(p, ga_allocate(p, seed=5))
    assert viol == 0.0 and value == pytest.approx(opt)


def test_ga_parallel_equals_serial():
    p = _bottleneck3()
    assert ga_allocate(p, seed=9, workers=4) == ga_allocate(p, seed=9, workers=1)


def test_sa_cold_limit_not_below_greedy():
    p = _bottleneck3()
    v_sa = evaluate(p, sa_allocate(p, SAParams(t0=1e-9), seed=1))[0]
    assert v_sa >= evaluate(p, greedy_allocate(p))[0]


def test_sa_single_group_top_feasible():
    p = problem([("g", 1, LAD3, {"L"})], {"L": 4 * M})
    assert sa_allocate(p, seed=2) == {"g": 1}


def test_sa_matches_oracle():
    p = _bottleneck3()
    opt = evaluate(p, exhaustive_allocate(p))[0]
    value, viol = evaluate(p, sa_allocate(p, seed=4))
    assert viol == 0.0 and value == pytest.approx(opt)


@pytest.mark.parametrize("kw", [dict(population=1), dict(tournament=0), dict(crossover_p=1.5),
                                dict(mutation_p=-0.1), dict(elitism=64), dict(penalty=0)])
def test_ga_params_validation(kw):
    with pytest.raises(ConfigError):
        GAParams(**kw)


@pytest.mark.parametrize("kw", [dict(t0=0), dict(cooling=1.0), dict(iterations=-1)])
def test_sa_params_validation(kw):
    with pytest.raises(ConfigError):
        SAParams(**kw)


# -- guardrails, FEC, baseline --------------------------------------------------


def report(buffer_s=5.0, goodput=None, phase=PLAYING, cid="c"):
    cold = goodput is None
    return FeedbackReport(cid, buffer_s, goodput or 0.0, 0.0, 1.0, cold, goodput or 0.0, phase=phase)


def _ladder5():
    return ladder(*[((k + 1) * M, 0.2 * (k + 1)) for k in range(5)])


def _one_group(cap=100 * M):
    return problem([("g", 1, _ladder5(), {"L"})], {"L": cap})


def test_adapt_no_guardrail():
    p = _one_group()
    assert adapt_quality({"g": 3}, {"g": [report(goodput=50 * M)]}, {"g": 3}, p) == {"g": 3}


def test_adapt_low_buffer_caps_below_previous():
    p = _one_group()
    out = adapt_quality({"g": 4}, {"g": [report(buffer_s=0.3, goodput=50 * M)]}, {"g": 3}, p, low_water_s=1.0)
    assert out == {"g": 2}


def test_adapt_low_buffer_floor():
    p = _one_group()
    out = adapt_quality({"g": 0}, {"g": [report(buffer_s=0.0)]}, {"g": 0}, p)
    assert out == {"g": 0}


def test_adapt_ignores_startup_buffers():
    p = _one_group()
    out = adapt_quality({"g": 3}, {"g": [report(buffer_s=0.2, phase=STARTUP)]}, {"g": 3}, p)
    assert out == {"g": 3}


def test_adapt_smoothing_limits_jump():
    p = _one_group()
    assert adapt_quality({"g": 4}, {"g": [report(goodput=50 * M)]}, {"g": 1}, p) == {"g": 2}
    assert adapt_quality({"g": 0}, {"g": [report(goodput=50 * M)]}, {"g": 4}, p) == {"g": 3}


def test_adapt_goodput_cap():
    p = _one_group()
    # 0.8 x 4 Mbit/s = 3.2 Mbit/s admits tier 2 (3 Mbit/s) at most
    out = adapt_quality({"g": 4}, {"g": [report(goodput=4 * M), report(goodput=90 * M, cid="d")]}, {}, p)
    assert out == {"g": 2}


def test_adapt_result_feasible():
    p = problem([("a", 1, _ladder5(), {"L"}), ("b", 1, _ladder5(), {"L"})], {"L": 7 * M})
    # smoothing holds both groups at 3 (4 Mbit/s each) while capacity dropped to 7: repair kicks in
    out = adapt_quality({"a": 2, "b": 2}, {"a": [report(goodput=50 * M)], "b": [report(goodput=50 * M)]},
                        {"a": 4, "b": 4}, p)
    assert p.feasible(p.to_vector(out))


def test_adapt_new_group_not_smoothed():
    p = _one_group()
    assert adapt_quality({"g": 4}, {"g": [report(goodput=50 * M)]}, {}, p) == {"g": 4}


@pytest.mark.parametrize("loss, expected", [(0.0, 0.0), (0.05, 0.10), (0.5, 0.30), (-0.1, 0.0)])
def test_fec_fraction(loss, expected):
    assert fec_fraction(loss) == pytest.approx(expected)


def test_traditional_top_regardless():
    p = problem([("g", 1, LAD3, {"L"})], {"L": 2 * M})
    assert traditional_allocate(p) == {"g": 2}
    assert traditional_allocate({"g": LAD3}) == {"g": 2}


def test_traditional_oversubscribes_two_group_instance():
    p = two_group_6m()
    plan = traditional_allocate(p)
    assert plan == traditional_allocate(p)
    assert p.loads(p.to_vector(plan)) == [8 * M]
    assert not p.feasible(p.to_vector(plan))
