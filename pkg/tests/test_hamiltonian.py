import io
import math
import random
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamflow import expansion, hamiltonian
from hamflow.expansion import Assignment, expand_model, prune_model
from hamflow.hamiltonian import (
    Hamiltonian,
    HamiltonianVariable,
    NonIntegerCoefficientError,
    choose_alpha,
    compile_hamiltonian,
    decode_point,
    dynamic_range_db,
    encode_assignment,
    evaluate_energy,
    export_hamiltonian,
    parse_hamiltonian,
)
from hamflow.instance import (
    Arc,
    Commodity,
    Depot,
    Instance,
    ScheduleEntry,
    build_case_study,
    default_case_study_costs,
)
from hamflow.solvers import solve_exact

from conftest import GOLDEN_DIR, empty_schedule_instance, random_micro_model


def slackwise_penalty(model, h, point):
    """Independent P2 oracle: evaluate each equality's squared residual from
    the raw constraint terms, walking the compiled rows by hand."""
    total = 0
    slack_values = {}
    for v in h.variables[len(model.variables):]:
        slack_values[v.origin[1]] = point[v.index]
    for c in model.constraints:
        lhs = sum(coef * point[i] for i, coef in c.terms)
        if c.relation == "eq":
            r = lhs - c.rhs
        else:
            r = lhs - c.rhs + slack_values[c.tag]
        total += r * r
    return total


def oracle_energy(model, h, point):
    obj = sum(cost * point[i] for i, cost in model.objective)
    return obj + h.alpha * slackwise_penalty(model, h, point)


def random_point(rng, h):
    return [rng.randint(0, max(v.levels, 0)) for v in h.variables]


class TestChooseAlpha:
    def test_single_vehicle_variable(self):
        inst = Instance(
            depots=(Depot("A", "A"), Depot("B", "B")),
            arcs=(Arc("A", "B", 2.0, 1),),
            commodities=(Commodity("K", 1.0),),
            horizon=1, capacity=1.0,
            schedule=(ScheduleEntry("A", "K", 1, 3.0),
                      ScheduleEntry("B", "K", 1, -3.0)))
        model = expand_model(inst)
        assert [v.upper_bound for v in model.variables if v.kind == "vehicle"] == [3]
        assert choose_alpha(model) == 7.0       # 1 + 2 * 3

    def test_empty_objective(self):
        model = prune_model(expand_model(empty_schedule_instance()))
        assert model.objective == ()
        assert choose_alpha(model) == 1.0

    def test_case_study_all_ones(self):
        inst = build_case_study({k: 1.0 for k in default_case_study_costs()})
        model = expand_model(inst)
        assert choose_alpha(model) == 145.0     # 1 + 48 vehicle variables * ub 3


class TestCompile:
    def test_micro_structure(self, micro_model):
        h = compile_hamiltonian(micro_model)
        assert h.num_decision_variables() == 4
        assert h.num_slack_variables() == 2
        assert all(i <= j for i, j in h.quadratic)
        slacks = [v for v in h.variables if v.origin[0] == "slack"]
        assert [v.levels for v in slacks] == [100, 100]   # capacity * ub(z)

    def test_micro_against_hand_expansion(self, micro_model):
        """Re-derive every coefficient by expanding (lhs - rhs)^2 term by
        term, independently of the compiler's accumulation order."""
        h = compile_hamiltonian(micro_model)
        alpha = h.alpha
        rows = []
        slack_iter = iter(range(len(micro_model.variables), h.num_variables))
        for c in micro_model.constraints:
            terms = list(c.terms)
            if c.relation == "le":
                terms.append((next(slack_iter), 1))
            rows.append((terms, c.rhs))
        linear = {}
        quadratic = {}
        offset = 0.0
        for i, cost in micro_model.objective:
            linear[i] = linear.get(i, 0.0) + cost
        for terms, rhs in rows:
            offset += alpha * rhs * rhs
            for i, a in terms:
                linear[i] = linear.get(i, 0.0) - 2 * alpha * rhs * a
                for j, b in terms:
                    key = (min(i, j), max(i, j))
                    # each unordered pair counted once: i==j adds a^2, i<j adds 2ab
                    if i == j:
                        quadratic[key] = quadratic.get(key, 0.0) + alpha * a * b
                    elif i < j:
                        quadratic[key] = quadratic.get(key, 0.0) + 2 * alpha * a * b
        linear = {k: v for k, v in linear.items() if v != 0}
        quadratic = {k: v for k, v in quadratic.items() if v != 0}
        assert h.linear == linear
        assert h.quadratic == quadratic
        assert h.offset == offset

    def test_feasible_point_has_zero_penalty(self, micro_model):
        h = compile_hamiltonian(micro_model)
        # x=1 and z=1 at t=1, slack 90 on the loaded step, everything else 0
        point = [1, 0, 1, 0, 90, 0]
        assert slackwise_penalty(micro_model, h, point) == 0
        assert evaluate_energy(h, point) == pytest.approx(5.0)

    def test_energy_of_encoded_assignment_equals_objective(self, case_study_pruned):
        h = compile_hamiltonian(case_study_pruned)
        result = solve_exact(case_study_pruned)
        point = encode_assignment(h, case_study_pruned, result.sample.assignment)
        # expanded-coefficient evaluation carries float dust from the large
        # cancelling penalty terms; 1e-9 relative is the contract
        assert evaluate_energy(h, point) == pytest.approx(result.objective, rel=1e-9)

    def test_zero_demand_zero_point_zero_energy(self):
        model = expand_model(empty_schedule_instance())
        h = compile_hamiltonian(model)
        assert evaluate_energy(h, [0.0] * h.num_variables) == 0.0

    def test_variable_order_decisions_then_slacks(self, case_study_pruned):
        h = compile_hamiltonian(case_study_pruned)
        n = len(case_study_pruned.variables)
        assert all(v.origin[0] == "decision" for v in h.variables[:n])
        assert all(v.origin[0] == "slack" for v in h.variables[n:])
        capacity_tags = [c.tag for c in case_study_pruned.constraints if c.relation == "le"]
        assert [v.origin[1] for v in h.variables[n:]] == capacity_tags

    def test_sum_constraint_is_total_levels(self, micro_model):
        h = compile_hamiltonian(micro_model)
        assert h.sum_constraint == h.total_levels() == 204

    def test_non_integer_coefficient_rejected(self, micro_model):
        bad = replace(micro_model,
                      constraints=(replace(micro_model.constraints[0],
                                           terms=((0, 10.0),)),)
                      + micro_model.constraints[1:])
        with pytest.raises(NonIntegerCoefficientError):
            compile_hamiltonian(bad)

    def test_custom_alpha(self, micro_model):
        h = compile_hamiltonian(micro_model, alpha=50.0)
        assert h.alpha == 50.0
        assert h.offset == 50.0 * (100 + 100)


class TestEvaluate:
    def test_zero_point_zero_rhs(self):
        model = expand_model(empty_schedule_instance())
        h = compile_hamiltonian(model)
        assert all(c.rhs == 0 for c in model.constraints)
        assert evaluate_energy(h, [0.0] * h.num_variables) == 0.0

    def test_length_mismatch(self, micro_model):
        h = compile_hamiltonian(micro_model)
        with pytest.raises(ValueError):
            evaluate_energy(h, [0.0])

    def test_slack_off_by_one_costs_at_least_alpha(self, micro_model):
        h = compile_hamiltonian(micro_model)
        point = [1, 0, 1, 0, 89, 0]    # slack one below the tight value
        assert evaluate_energy(h, point) >= h.alpha

    def test_randomized_energy_identity(self, micro_model, case_study_pruned):
        rng = random.Random(4242)
        for model in (micro_model, case_study_pruned):
            h = compile_hamiltonian(model)
            for _ in range(1200):
                point = random_point(rng, h)
                expected = oracle_energy(model, h, point)
                assert evaluate_energy(h, point) == pytest.approx(expected, rel=1e-9)

    def test_separation_property(self, micro_model):
        """With the default alpha, every in-bounds integer point with a
        residual sits strictly above every feasible point's energy."""
        h = compile_hamiltonian(micro_model)
        dims = [v.levels + 1 for v in h.variables]
        feasible_energies = []
        violating_min = math.inf
        # micro model is small enough to scan the slack-reduced lattice
        for x0 in range(dims[0]):
            for x1 in range(dims[1]):
                for z0 in range(dims[2]):
                    for z1 in range(dims[3]):
                        a = Assignment(values=(x0, x1, z0, z1))
                        point = encode_assignment(h, micro_model, a)
                        e = evaluate_energy(h, point)
                        if slackwise_penalty(micro_model, h, point) == 0:
                            feasible_energies.append(e)
                        else:
                            violating_min = min(violating_min, e)
        assert feasible_energies
        assert violating_min > max(feasible_energies)

    def test_separation_on_random_points_case_study(self, case_study_pruned):
        h = compile_hamiltonian(case_study_pruned)
        best_feasible = solve_exact(case_study_pruned).objective
        worst_feasible_bound = choose_alpha(case_study_pruned) - 1.0
        rng = random.Random(99)
        for _ in range(500):
            point = random_point(rng, h)
            if slackwise_penalty(case_study_pruned, h, point) > 0:
                assert evaluate_energy(h, point) > worst_feasible_bound >= best_feasible


class TestDynamicRange:
    def test_ratio_200_is_23db(self):
        h = Hamiltonian(variables=(HamiltonianVariable(0, None, 1),),
                        linear={0: 200.0}, quadratic={(0, 0): 1.0},
                        offset=0.0, alpha=1.0, sum_constraint=None)
        assert dynamic_range_db(h) == pytest.approx(23.01, abs=0.01)

    def test_uniform_coefficients_are_0db(self):
        h = Hamiltonian(variables=(HamiltonianVariable(0, None, 1),),
                        linear={0: 3.0}, quadratic={(0, 0): -3.0},
                        offset=5.0, alpha=1.0, sum_constraint=None)
        assert dynamic_range_db(h) == 0.0

    def test_half_to_five_hundred_is_30db(self):
        h = Hamiltonian(variables=(HamiltonianVariable(0, None, 1),),
                        linear={0: 0.5}, quadratic={(0, 0): 500.0},
                        offset=0.0, alpha=1.0, sum_constraint=None)
        assert dynamic_range_db(h) == pytest.approx(30.0, abs=1e-9)

    def test_all_zero_raises(self):
        h = Hamiltonian(variables=(), linear={}, quadratic={},
                        offset=1.0, alpha=1.0, sum_constraint=None)
        with pytest.raises(ValueError):
            dynamic_range_db(h)

    @given(st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
    @settings(max_examples=60, deadline=None)
    def test_invariant_under_uniform_scaling(self, scale):
        h = Hamiltonian(variables=(HamiltonianVariable(0, None, 1),
                                   HamiltonianVariable(1, None, 1)),
                        linear={0: 0.25, 1: -40.0}, quadratic={(0, 1): 7.0},
                        offset=2.0, alpha=1.0, sum_constraint=None)
        scaled = Hamiltonian(variables=h.variables,
                             linear={i: c * scale for i, c in h.linear.items()},
                             quadratic={k: c * scale for k, c in h.quadratic.items()},
                             offset=h.offset, alpha=h.alpha, sum_constraint=None)
        assert dynamic_range_db(scaled) == pytest.approx(dynamic_range_db(h), abs=1e-9)


class TestDecode:
    def test_integer_point_is_identity(self, micro_model):
        h = compile_hamiltonian(micro_model)
        a = Assignment(values=(1, 0, 1, 0))
        point = encode_assignment(h, micro_model, a)
        assert decode_point(h, micro_model, point) == a

    def test_half_rounds_away_from_zero(self, micro_model):
        h = compile_hamiltonian(micro_model)
        flow_ub3 = replace(micro_model, variables=tuple(
            replace(v, upper_bound=3) for v in micro_model.variables))
        h3 = compile_hamiltonian(flow_ub3)
        point = [2.5, 0.0, 0.0, 0.0, 0.0, 0.0]
        assert decode_point(h3, flow_ub3, point).values[0] == 3

    def test_clamps_to_upper_bound(self, micro_model):
        flow_ub4 = replace(micro_model, variables=tuple(
            replace(v, upper_bound=4) for v in micro_model.variables))
        h4 = compile_hamiltonian(flow_ub4)
        point = [7.2, 0.0, 0.0, 0.0, 0.0, 0.0]
        assert decode_point(h4, flow_ub4, point).values[0] == 4

    def test_negative_clamps_to_zero(self, micro_model):
        h = compile_hamiltonian(micro_model)
        point = [-0.9, 0.0, 0.0, 0.0, 0.0, 0.0]
        assert decode_point(h, micro_model, point).values[0] == 0


class TestExport:
    def test_micro_golden(self, micro_model):
        h = compile_hamiltonian(micro_model)
        buf = io.StringIO()
        export_hamiltonian(h, buf)
        assert buf.getvalue() == (GOLDEN_DIR / "micro_hamiltonian.txt").read_text()

    def test_empty_hamiltonian_header_only(self):
        model = prune_model(expand_model(empty_schedule_instance()))
        h = compile_hamiltonian(model)
        buf = io.StringIO()
        export_hamiltonian(h, buf)
        lines = buf.getvalue().splitlines()
        assert lines == ["HAMILTONIAN v1 vars=0 alpha=1 offset=0 R=0", "LEVELS"]

    def test_round_trip_identical_coefficients(self, case_study_pruned):
        h = compile_hamiltonian(case_study_pruned)
        buf = io.StringIO()
        export_hamiltonian(h, buf, metadata={"relaxation_schedule": "2"})
        back = parse_hamiltonian(buf.getvalue())
        assert back.linear == h.linear
        assert back.quadratic == h.quadratic
        assert back.offset == h.offset
        assert back.alpha == h.alpha
        assert back.sum_constraint == h.sum_constraint
        assert [v.levels for v in back.variables] == [v.levels for v in h.variables]

    def test_export_is_deterministic(self, case_study_pruned):
        h = compile_hamiltonian(case_study_pruned)
        a, b = io.StringIO(), io.StringIO()
        export_hamiltonian(h, a)
        export_hamiltonian(h, b)
        assert a.getvalue() == b.getvalue()

    def test_terms_sorted_by_degree_then_indices(self, case_study_pruned):
        h = compile_hamiltonian(case_study_pruned)
        buf = io.StringIO()
        export_hamiltonian(h, buf)
        term_lines = [l.split() for l in buf.getvalue().splitlines()[2:]]
        keys = [(int(t[0]), tuple(int(x) for x in t[1:-1])) for t in term_lines]
        assert keys == sorted(keys)


def test_energy_identity_on_random_micro_models():
    rng = random.Random(5150)
    np_rng = np.random.default_rng(5150)
    for _ in range(6):
        model = random_micro_model(rng)
        h = compile_hamiltonian(model)
        for _ in range(200):
            point = [int(np_rng.integers(0, v.levels + 1)) for v in h.variables]
            assert evaluate_energy(h, point) == pytest.approx(
                oracle_energy(model, h, point), rel=1e-9, abs=1e-9)


def test_feasible_assignments_encode_to_zero_penalty():
    """Cross-module equivalence: a verified-feasible assignment always
    encodes to a point with zero squared-residual penalty."""
    rng = random.Random(2718)
    feasible_seen = 0
    for _ in range(8):
        model = random_micro_model(rng)
        h = compile_hamiltonian(model)
        for _ in range(150):
            a = Assignment(values=tuple(rng.randint(0, v.upper_bound)
                                        for v in model.variables))
            point = encode_assignment(h, model, a)
            feasible = expansion.verify_assignment(model, a).feasible
            if feasible:
                assert slackwise_penalty(model, h, point) == 0
                feasible_seen += 1
        # the exact optimum is a guaranteed-feasible witness when one exists
        from hamflow.solvers import solve_exact as _solve
        result = _solve(model, time_limit=30.0)
        if result.sample is not None:
            point = encode_assignment(h, model, result.sample.assignment)
            assert slackwise_penalty(model, h, point) == 0
            feasible_seen += 1
    assert feasible_seen >= 8


def test_energy_invariant_under_term_reordering(micro_model):
    h = compile_hamiltonian(micro_model)
    reordered = Hamiltonian(
        variables=h.variables,
        linear=dict(reversed(list(h.linear.items()))),
        quadratic=dict(reversed(list(h.quadratic.items()))),
        offset=h.offset, alpha=h.alpha, sum_constraint=h.sum_constraint)
    rng = random.Random(13)
    for _ in range(100):
        point = random_point(rng, h)
        assert evaluate_energy(reordered, point) == pytest.approx(
            evaluate_energy(h, point), rel=1e-12)
