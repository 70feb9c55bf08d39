import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pddf.baseline import LsConfig, _StructuredOracle, ls_solve, refine, sals_solve
from pddf.bench.functions import get_base
from pddf.bench.generators import generate_chain, generate_disjoint, generate_shared_all, tridia
from pddf.pd_solver import sequential_penalty
from pddf.problem import Box, CustomRegion, UsageError, evaluate_full, make_problem


def sumsq(y):
    return float(np.dot(y, y))


class Recorder:
    """Oracle wrapper logging every point it sees."""

    def __init__(self, f):
        self.f = f
        self.points = []

    def __call__(self, y):
        self.points.append(np.array(y))
        return self.f(y)


def test_one_dimensional_quadratic_in_box():
    p = make_problem([[0]], [lambda y: float((y[0] - 1.0) ** 2)], region=Box([0.0], [2.0]), x0=[0.0])
    rep = ls_solve(p)
    assert abs(rep.final_x[0] - 1.0) <= 1e-4
    assert rep.final_f <= 1e-6
    assert rep.termination == "stepsize"


def test_stationary_start_takes_fourteen_sweeps():
    p = make_problem([[0, 1]], [sumsq], x0=[0.0, 0.0])
    rep = ls_solve(p)
    assert rep.outer_iters == 14
    assert rep.accepted_steps == 0
    # each idle sweep costs 2 polls x n coordinates x m blocks
    assert rep.evals.total == 1 + 14 * 2 * 2 * 1


def test_idle_sweep_cost_is_two_n_m():
    p = generate_disjoint(get_base("ROSENBR"), 3).with_start(np.ones(6))
    rep = ls_solve(p, cfg=LsConfig(max_sweeps=1))
    assert rep.evals.total == p.m + 2 * p.n * p.m


@pytest.mark.parametrize(
    "problem",
    [
        lambda: generate_chain("ROSENBR", 5),
        lambda: generate_chain("ROSENBR", 6, box=True),
        lambda: generate_disjoint(get_base("BEALE"), 3),
        lambda: generate_shared_all(get_base("ARWHEAD"), 3),
        lambda: tridia(7),
        lambda: generate_chain("WOODS", 2, box=True),
    ],
    ids=["rosen-chain", "rosen-chain-box", "beale-disjoint", "arwhead-shared", "tridia", "woods-box"],
)
def test_sals_reproduces_ls_exactly(problem):
    p = problem()
    a, b = ls_solve(p), sals_solve(p)
    np.testing.assert_array_equal(a.final_x, b.final_x)
    assert a.final_f == b.final_f
    assert [f for _, f in a.history] == [f for _, f in b.history]
    assert [r.f for r in a.trace] == [r.f for r in b.trace]
    assert a.outer_iters == b.outer_iters
    assert b.evals.total <= a.evals.total


def test_sals_poll_cost_on_disjoint_blocks():
    p = generate_disjoint(get_base("ROSENBR"), 5)
    assert (p.n, p.m) == (10, 5)
    cfg = LsConfig(max_sweeps=1)
    a = ls_solve(p.with_start(np.ones(10)), cfg=cfg)
    b = sals_solve(p.with_start(np.ones(10)), cfg=cfg)
    # one idle sweep: 20 polls at 5 sub-evals for LS, at 1 for SALS
    assert a.evals.total - p.m == 20 * 5
    assert b.evals.total - p.m == 20 * 1


def test_sals_full_overlap_costs_the_same():
    p = make_problem([[0, 1, 2]], [lambda y: float(np.sum((y - 1.0) ** 2))], x0=[0.0, 0.0, 0.0])
    a, b = ls_solve(p), sals_solve(p)
    assert a.evals.total == b.evals.total
    np.testing.assert_array_equal(a.final_x, b.final_x)


def test_sals_chain_cost_halves_for_long_chains():
    p = generate_chain("ROSENBR", 10)
    assert sals_solve(p).evals.total <= 0.5 * ls_solve(p).evals.total


def test_trials_stay_in_box():
    rec = Recorder(get_base("ROSENBR").oracle)
    p = make_problem([[0, 1], [1, 2]], [rec, rec], n=3, region=Box([-0.5, 0, 0], [0.5, 0.75, 2]), x0=[0, 0, 0])
    ls_solve(p)
    pts = np.array(rec.points)
    assert pts.min() >= -0.5 and pts[:, 0].max() <= 0.75 and pts.max() <= 2.0


def test_descent_condition():
    p = generate_chain("ROSENBR", 4)
    rep = ls_solve(p, cfg=LsConfig(max_sweeps=30))
    fs = [r.f for r in rep.trace]
    assert all(b <= a for a, b in zip([rep.f0] + fs, fs))


def test_rejects_custom_region_and_infeasible_start():
    ball = CustomRegion(lambda v: v / max(1.0, np.linalg.norm(v)))
    with pytest.raises(UsageError):
        ls_solve(make_problem([[0, 1]], [sumsq], region=ball))
    p = make_problem([[0]], [sumsq], region=Box([0.0], [1.0]))
    with pytest.raises(UsageError):
        ls_solve(p, x0=np.array([3.0]))


def test_stop_alpha_must_be_positive():
    with pytest.raises(UsageError):
        LsConfig(stop_alpha=0.0)


# refinement --------------------------------------------------------------------


def test_refine_is_idempotent_at_ls_stationary_point():
    p = generate_chain("ROSENBR", 3)
    first = ls_solve(p)
    again = refine(p, first.final_x, LsConfig(), p.new_counter())
    # the first sweep may still find decrease with unit steps; later ones must not
    again = refine(p, again.final_x, LsConfig(), p.new_counter())
    assert again.accepted_steps == 0
    np.testing.assert_array_equal(again.final_x, refine(p, again.final_x).final_x)


def test_refine_tridia_after_penalty_phase():
    p = tridia(4)
    rep = sequential_penalty(p)
    out = refine(p, rep.final_x, LsConfig(), rep.evals.snapshot(), prior=rep)
    assert out.final_f <= 1e-6
    assert out.termination == "refined"


def test_refine_counter_continuity():
    p = tridia(5)
    rep = sequential_penalty(p)
    last = rep.evals.total
    out = refine(p, rep.final_x, LsConfig(), rep.evals.snapshot(), prior=rep)
    new = [e for e, _ in out.history if e > last]
    # the first thing refinement does is evaluate f at the handed-over point
    assert out.evals.total > last
    refine_only = refine(p, rep.final_x, LsConfig(), rep.evals.snapshot())
    assert refine_only.history[0][0] == last + p.m
    assert all(e > last + p.m - 1 for e in new)
    evals = [e for e, _ in out.history]
    assert evals == sorted(evals)


# cache coherence ---------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 40))
def test_structured_oracle_matches_full_evaluation(seed, steps):
    rng = np.random.default_rng(seed)
    p = generate_chain("ROSENBR", 4)
    c = p.new_counter()
    oracle = _StructuredOracle(p, c, [])
    x = rng.normal(size=p.n)
    assert oracle(x) == evaluate_full(p, x, p.new_counter())
    for _ in range(steps):
        # coordinate moves from x, sometimes adopting one as the new base
        trial = x.copy()
        trial[rng.integers(p.n)] += rng.normal()
        assert oracle(trial) == evaluate_full(p, trial, p.new_counter())
        if rng.random() < 0.5:
            x = trial


def test_structured_oracle_counts_only_affected_blocks():
    p = generate_chain("ROSENBR", 5)
    c = p.new_counter()
    oracle = _StructuredOracle(p, c, [])
    x = np.zeros(p.n)
    oracle(x)
    assert c.total == 5
    y = x.copy()
    y[2] = 0.5
    oracle(y)
    assert c.total == 7
    y = x.copy()
    y[0] = 0.5
    oracle(y)
    assert c.total == 8
    assert math.isfinite(oracle(x))
