import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pddf.bench.functions import base_library, get_base, quadratic_base
from pddf.bench.generators import (
    ELEMENT_PROBLEMS,
    element_problem,
    generate_chain,
    generate_disjoint,
    generate_shared_all,
    generate_shared_head,
)
from pddf.bench.plot import profile_svg, write_profile_csv
from pddf.bench.profiles import data_profile, evals_to_solve, performance_profile, solved
from pddf.bench.runner import RunRecord, read_records, run_suite, write_records
from pddf.bench.suite import SuiteEntry, SuiteSpec, acceptance_suite, default_suite, load_problem, load_suite, parse_entry
from pddf.config import SolverConfig
from pddf.problem import Box, Unbounded, UsageError, coverage_counts, evaluate_full


def rec(problem, solver, history, n=1, m=1, f0=None, wall=0.0):
    f0 = history[0][1] if f0 is None else f0
    return RunRecord(problem, solver, n, m, f0, list(history), wall, "stepsize", history[-1][0], history[-1][1])


# base functions ----------------------------------------------------------------


@pytest.mark.parametrize("name, x, f", [("BEALE", (3.0, 0.5), 0.0), ("ROSENBR", (1.0, 1.0), 0.0), ("WOODS", (1, 1, 1, 1), 0.0)])
def test_known_minima(name, x, f):
    assert get_base(name)(np.array(x, float)) == pytest.approx(f, abs=1e-14)


def test_library_contents_and_gradients():
    names = {b.name for b in base_library()}
    assert {"ROSENBR", "TRIDIA", "BROYDN3D", "ARWHEAD", "ENGVAL", "WOODS", "BEALE", "FREUROTH", "MOREBV", "DIXMAANA"} <= names
    rng = np.random.default_rng(3)
    for b in base_library():
        x = np.asarray(b.default_start, float) + 0.1 * rng.normal(size=b.dim)
        g = b.gradient(x)
        h = 1e-6
        fd = [(b(x + h * e) - b(x - h * e)) / (2 * h) for e in np.eye(b.dim)]
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5 * max(1.0, abs(b(x))))
        if b.known_fstar is not None and b.minimizer is not None:
            assert b(np.asarray(b.minimizer)) == pytest.approx(b.known_fstar, abs=1e-9)


def test_unknown_base_is_usage_error():
    with pytest.raises(UsageError):
        get_base("NOPE")


def test_seeded_quadratic_is_reproducible():
    a, b = quadratic_base(3, 4), quadratic_base(3, 4)
    x = np.arange(3.0)
    assert a(x) == b(x) and a.name == "QUAD3_4"
    assert a(np.asarray(a.minimizer)) == pytest.approx(0.0, abs=1e-12)


# generators --------------------------------------------------------------------


def test_chain_shape():
    p = generate_chain("ROSENBR", 5)
    assert p.n == 6
    assert [list(b) for b in p.blocks] == [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]]
    q = generate_chain("ROSENBR", 25)
    assert q.n == 26 and q.value(np.ones(26)) == 0.0


def test_chain_of_one_is_the_base():
    p = generate_chain("BEALE", 1)
    x = np.array([0.3, -0.7])
    assert p.n == 2 and p.value(x) == get_base("BEALE")(x)


def test_chain_needs_dimension_two():
    with pytest.raises(UsageError):
        generate_chain(quadratic_base(1, 0), 3)


def test_shared_head_shape():
    p = generate_shared_head([quadratic_base(3, 1), quadratic_base(3, 2)], 1)
    assert p.n == 5
    assert [list(b) for b in p.blocks] == [[0, 1, 2], [0, 3, 4]]
    assert coverage_counts(p)[0] == 2
    full = generate_shared_head([quadratic_base(3, 1)] * 3, 3)
    assert all(list(b) == [0, 1, 2] for b in full.blocks)


def test_shared_all_and_disjoint_coverage():
    p = generate_shared_all(get_base("ARWHEAD"), 4)
    cov = coverage_counts(p)
    assert cov.max() == 4 and np.count_nonzero(cov == 4) == 1
    d = generate_disjoint(get_base("BEALE"), 3)
    np.testing.assert_array_equal(coverage_counts(d), np.ones(6))


def test_box_argument_variants():
    assert isinstance(generate_chain("ROSENBR", 3).region, Unbounded)
    p = generate_chain("ROSENBR", 3, box=(-0.5, 0.5))
    assert isinstance(p.region, Box) and p.name.endswith("-box")
    assert p.region.contains(p.x0)


@pytest.mark.parametrize("name", sorted(ELEMENT_PROBLEMS))
def test_element_problems_fstar_and_gradient(name):
    n = 12
    p = element_problem(name, n)
    x = p.x0 + 0.01
    h = 1e-6
    fd = np.array([(p.value(x + h * e) - p.value(x - h * e)) / (2 * h) for e in np.eye(p.n)])
    np.testing.assert_allclose(p.gradient(x), fd, rtol=1e-5, atol=1e-5 * max(1.0, abs(p.value(x))))
    if p.fstar is not None and p.minimizer is not None:
        assert p.value(np.asarray(p.minimizer)) == pytest.approx(p.fstar, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["ROSENBR", "WOODS", "BEALE", "ENGVAL"]), st.integers(1, 6), st.integers(0, 1000))
def test_chain_oracle_matches_direct_sum(name, m, seed):
    base = get_base(name)
    p = generate_chain(name, m)
    x = np.random.default_rng(seed).normal(size=p.n)
    step = base.dim - 1
    direct = 0.0
    for j in range(m):
        direct += base(x[j * step : j * step + base.dim])
    assert evaluate_full(p, x, p.new_counter()) == pytest.approx(direct, rel=1e-14, abs=1e-14)
    cov = coverage_counts(p)
    assert cov.sum() == m * base.dim


# suite files -------------------------------------------------------------------


def test_parse_entry_and_yaml(tmp_path):
    e = parse_entry({"pattern": "chain", "base": "ROSENBR", "m": 3, "box": [-2, 2]})
    assert e.build().n == 4
    path = tmp_path / "s.yaml"
    path.write_text(
        "problems:\n"
        "  - {pattern: chain, base: ROSENBR, m: 5}\n"
        "  - {pattern: element, base: TRIDIA, n: 6, box: true}\n"
        "  - {pattern: shared_head, bases: [QUAD3_1, QUAD3_2], s: 1}\n"
        "  - pattern: explicit\n"
        "    functions: ROSENBR\n"
        "    blocks: [[1, 2], [2, 3]]\n"
        "    x0: [0, 0, 0]\n"
        "    name: tiny\n"
    )
    probs = load_suite(path).problems()
    assert [p.n for p in probs] == [6, 6, 5, 3]
    assert probs[3].name == "tiny" and [list(b) for b in probs[3].blocks] == [[0, 1], [1, 2]]


@pytest.mark.parametrize(
    "text",
    ["- {pattern: spiral, base: ROSENBR, m: 2}", "- {pattern: chain, base: ROSENBR}", "- {pattern: chain, base: ROSENBR, m: 2, colour: red}", "[: bad"],
)
def test_bad_suite_files(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text + "\n")
    with pytest.raises(UsageError):
        load_suite(path).problems()


def test_load_problem(tmp_path):
    path = tmp_path / "p.yaml"
    path.write_text("pattern: chain\nbase: ROSENBR\nm: 2\n")
    assert load_problem(path).n == 3
    with pytest.raises(UsageError):
        load_problem(tmp_path / "missing.yaml")


def test_builtin_suites_build():
    acc = acceptance_suite().problems()
    assert len(acc) == 12
    assert sum(isinstance(p.region, Box) for p in acc) == 6
    names = [p.name for p in default_suite().problems()]
    assert len(names) == len(set(names))


# solved test -------------------------------------------------------------------


def test_solved_examples():
    assert not solved(10.0, 1.0, 0.5, 0.01)
    assert solved(10.0, 0.5, 0.5, 0.01)
    assert solved(3.0, -2.0, -2.0, 0.5)
    assert not solved(10.0, 10.0, 0.5, 0.01)


# data profile fixtures ---------------------------------------------------------


def test_data_profile_single_problem_at_three_groups():
    # m(n+1) = 4; solved at eval 12 = 3 groups
    r = rec("p", "a", [(2, 10.0), (12, 0.0)], n=1, m=2)
    curve = data_profile([r], 1e-2, [0, 1, 2, 2.99, 3, 4, 100])["a"]
    assert curve.fraction == (0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0)


def test_data_profile_never_solving_solver():
    a = rec("p", "a", [(1, 10.0), (2, 0.0)])
    b = rec("p", "b", [(1, 10.0), (5, 9.0)])
    curves = data_profile([a, b], 1e-2, [0, 1, 2, 10])
    assert curves["b"].fraction == (0.0, 0.0, 0.0, 0.0)
    assert curves["a"].fraction == (0.0, 1.0, 1.0, 1.0)


def test_data_profile_two_problems():
    # m(n+1) = 2: solved at evals 2 and 10, i.e. groups 1 and 5
    r1 = rec("p1", "a", [(1, 5.0), (2, 1.0)])
    r2 = rec("p2", "a", [(1, 5.0), (10, 1.0)])
    curve = data_profile([r1, r2], 1e-2, [0, 0.5, 1, 4.9, 5, 6])["a"]
    assert curve.fraction == (0.0, 0.0, 0.5, 0.5, 1.0, 1.0)


def test_profiles_exclude_unimproved_problems():
    flat = rec("flat", "a", [(1, 3.0)])
    good = rec("good", "a", [(1, 3.0), (2, 1.0)])
    curve = data_profile([flat, good], 1e-2, [5])["a"]
    assert curve.n_problems == 1 and curve.final == 1.0


def test_profiles_require_complete_records():
    with pytest.raises(UsageError):
        data_profile([rec("p", "a", [(1, 2.0), (2, 1.0)]), rec("q", "b", [(1, 2.0), (2, 1.0)])], 1e-2)
    with pytest.raises(UsageError):
        data_profile([rec("p", "a", [(1, 2.0), (2, 1.0)])], 1.5)


# performance profile fixtures --------------------------------------------------


def test_performance_profile_two_solvers_costs_100_200():
    a = rec("p", "a", [(1, 10.0), (100, 0.0)])
    b = rec("p", "b", [(1, 10.0), (200, 0.0)])
    curves = performance_profile([a, b], "sub_evals_to_solved", 1e-2)
    assert curves["a"].grid == (1.0, 2.0)
    assert curves["a"].fraction == (1.0, 1.0)
    assert curves["b"].fraction == (0.0, 1.0)
    assert curves["b"].at(1.99) == 0.0 and curves["b"].at(2.0) == 1.0


def test_performance_profile_never_solving():
    a = rec("p", "a", [(1, 10.0), (3, 0.0)])
    b = rec("p", "b", [(1, 10.0)])
    curves = performance_profile([a, b], "sub_evals_to_solved", 1e-2, [1, 10, 1e6])
    assert curves["b"].fraction == (0.0, 0.0, 0.0)
    assert curves["a"].fraction == (1.0, 1.0, 1.0)


def test_performance_profile_wall_time():
    a = rec("p", "a", [(1, 10.0), (3, 0.0)], wall=2.0)
    b = rec("p", "b", [(1, 10.0), (2, 0.0)], wall=6.0)
    curves = performance_profile([a, b], "wall_time", 1e-2)
    assert curves["a"].fraction == (1.0, 1.0)
    assert curves["b"].fraction == (0.0, 1.0)
    assert curves["b"].grid == (1.0, 3.0)
    with pytest.raises(UsageError):
        performance_profile([a, b], "flops", 1e-2)


def test_evals_to_solve():
    r = rec("p", "a", [(1, 10.0), (4, 5.0), (9, 0.05)])
    assert evals_to_solve(r, 0.0, 1e-2) == 9.0
    assert evals_to_solve(r, 0.0, 0.6) == 4.0
    assert math.isinf(evals_to_solve(r, -1.0, 1e-4))


hist = st.lists(st.tuples(st.integers(1, 50), st.floats(-10, 10)), min_size=1, max_size=8)


def _monotone(h, f0):
    h = sorted(h)
    out, best, last_e = [(0, f0)], f0, 0
    for e, f in h:
        if f < best:
            last_e = max(last_e + 1, e)
            best = f
            out.append((last_e, f))
    return out


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(hist, hist), min_size=1, max_size=5), st.sampled_from([1e-1, 1e-2, 1e-4]))
def test_profile_curves_monotone_and_bounded(pairs, eps):
    records = []
    for i, (ha, hb) in enumerate(pairs):
        records.append(rec(f"p{i}", "a", _monotone(ha, 11.0), n=2, m=1))
        records.append(rec(f"p{i}", "b", _monotone(hb, 11.0), n=2, m=1))
    for curves in (data_profile(records, eps), performance_profile(records, "sub_evals_to_solved", eps)):
        for c in curves.values():
            fr = np.asarray(c.fraction)
            assert np.all(np.diff(fr) >= 0) and np.all((fr >= 0) & (fr <= 1))


@settings(max_examples=40, deadline=None)
@given(st.lists(hist, min_size=1, max_size=5), st.floats(1e-6, 0.9))
def test_single_solver_reaches_one(hs, eps):
    records = [rec(f"p{i}", "a", _monotone(h, 11.0), n=1, m=1) for i, h in enumerate(hs)]
    curves = data_profile(records, eps, [0, 1000])
    c = curves["a"]
    assert c.n_problems == 0 or c.final == 1.0


# runner ------------------------------------------------------------------------


SMALL = SolverConfig(max_outer=5, refine=False, stop_alpha=1e-2)


def test_run_suite_empty():
    assert run_suite(SuiteSpec(()), ("pddf", "ls")) == []


def test_run_suite_rejects_unknown_solver():
    with pytest.raises(UsageError):
        run_suite(SuiteSpec(()), ("nomad",))


def test_run_suite_delay_lower_bound():
    spec = SuiteSpec((SuiteEntry("chain", ("ROSENBR",), m=2),))
    (r,) = run_suite(spec, ("ls",), SolverConfig(stop_alpha=0.1), eval_delay=1e-3)
    assert r.wall_time >= r.evals * 1e-3


def test_run_suite_is_deterministic_and_round_trips(tmp_path):
    spec = SuiteSpec((SuiteEntry("chain", ("ROSENBR",), m=3), SuiteEntry("element", ("TRIDIA",), n=5, box=True)))
    a = run_suite(spec, ("pddf", "sals"), SMALL)
    b = run_suite(spec, ("pddf", "sals"), SMALL)
    assert len(a) == 4
    assert all(x.same_outcome(y) for x, y in zip(a, b))
    write_records(a, tmp_path / "r.csv")
    back = read_records(tmp_path / "r.csv")
    assert all(x.same_outcome(y) for x, y in zip(a, back))


def test_run_suite_records_crash_as_unsolved():
    def boom(y):
        raise RuntimeError("simulator down")

    class Entry(SuiteEntry):
        def build(self):
            from pddf.problem import make_problem

            return make_problem([[0]], [boom], name="crashy")

    (r,) = run_suite(SuiteSpec((Entry("chain", ("ROSENBR",), m=1),)), ("ls",))
    assert r.termination == "error" and r.history == []


def test_read_records_rejects_malformed(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("problem,solver\nx,y\n")
    with pytest.raises(UsageError):
        read_records(path)
    path.write_text("problem,solver,n,m,f0,final_f,evals,termination,history\np,a,one,1,1,1,1,x,1:1.0\n")
    with pytest.raises(UsageError):
        read_records(path)


# plotting ----------------------------------------------------------------------


def test_profile_outputs(tmp_path):
    a = rec("p", "a", [(1, 10.0), (2, 0.0)])
    b = rec("p", "b", [(1, 10.0), (4, 0.0)])
    curves = data_profile([a, b], 1e-2, [0, 1, 2])
    write_profile_csv(curves, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "grid,a,b"
    assert lines[-1].split(",")[1:] == ["1.0", "1.0"]
    svg = profile_svg(curves, title="t", xlabel="x")
    assert svg.startswith("<svg") and svg.count("<polyline") >= 2
