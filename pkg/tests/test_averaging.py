import math

import pytest

from delib.averaging import (
    AUDIT_TOL,
    K2_BETA_THRESHOLD,
    THETA2,
    audit_distribution,
    binary_support_search,
    build_k2_case_program,
    build_theta2_program,
    build_theta3_case_program,
    lb1_k3_distribution,
    lb1_k3_point,
    solve_copeland_k2,
    solve_theta2,
    theta_lower_bound_closed_form,
    theta_upper_bound_closed_form,
    two_point_win_prob,
)
from delib.boxopt import CERTIFIED, solve_global
from delib.metric import BiasDistribution


def test_constants():
    assert THETA2 == pytest.approx(math.sqrt(2.0) - 1.0, abs=0.0)
    assert K2_BETA_THRESHOLD == pytest.approx(2.0 + math.sqrt(2.0), abs=0.0)


def test_solve_theta2_certificate():
    res = solve_theta2()
    assert res.k == 2
    assert res.value == pytest.approx(0.4142141342163088, abs=1e-9)
    assert abs(res.value - THETA2) <= 1e-4
    opt = res.per_case[0]
    assert opt.status == CERTIFIED
    assert opt.boxes == 203
    assert opt.point["p"] == pytest.approx(1.0 - math.sqrt(0.5), abs=1e-3)
    assert opt.point["q"] <= 1e-3
    # the reported witness is feasible under independent exact enumeration
    assert res.audit_pk >= 0.5
    assert res.audit_pk == pytest.approx(0.5000001196, abs=1e-8)


def test_theta2_raw_and_expanded_encodings_agree():
    raw = solve_global(build_theta2_program(expanded=False), tol=1e-5,
                       max_boxes=200_000)
    assert raw.status == CERTIFIED
    assert raw.value == pytest.approx(THETA2, abs=1e-4)


def test_theta2_witness_distribution_shape():
    res = solve_theta2()
    # support {-1, 0, +1}: mass p at -1 maximizes room for +1 mass
    assert set(res.incumbent.values) <= {-1.0, 0.0, 1.0}
    assert res.incumbent_value == pytest.approx(res.value, abs=1e-6)


def test_solve_copeland_k2_above_threshold_certifies_negative():
    case1, case2 = solve_copeland_k2(3.4152)
    assert case1.bound < 0.0
    assert case2.bound < 0.0
    assert case1.status == CERTIFIED
    assert case2.status == CERTIFIED
    # the margin is thin: a hair above the 2 + sqrt(2) threshold
    assert case1.bound > -1e-3
    assert case2.bound > -1e-3


def test_solve_copeland_k2_below_threshold_has_positive_witness():
    beta = K2_BETA_THRESHOLD - 0.01
    case1, case2 = solve_copeland_k2(beta, max_boxes=200)
    values = [c.value for c in (case1, case2) if c.value is not None]
    assert max(values) > 0.0


def test_solve_copeland_k2_rejects_nonpositive_beta():
    with pytest.raises(ValueError):
        solve_copeland_k2(0.0)


def test_k2_case_programs_expose_full_and_reduced_forms():
    full = build_k2_case_program(1, 3.4152, reduced=False)
    red = build_k2_case_program(1, 3.4152, reduced=True)
    assert full.n == red.n + 1
    with pytest.raises(ValueError):
        build_k2_case_program(3, 3.4152)


def test_theta3_case_programs_build():
    for case in range(1, 9):
        prog = build_theta3_case_program(case)
        assert prog.n == 7
    with pytest.raises(ValueError):
        build_theta3_case_program(0)
    with pytest.raises(ValueError):
        build_theta3_case_program(9)


def test_lb1_k3_point_is_feasible_for_case5():
    point = lb1_k3_point()
    assert point["th"] == 0.25
    dist = lb1_k3_distribution()
    assert dist.mean() == pytest.approx(0.25, abs=0.0)
    assert audit_distribution(dist, 3) == pytest.approx(0.5, abs=AUDIT_TOL)


def test_closed_form_bounds():
    assert theta_upper_bound_closed_form(1) == pytest.approx(1.0)
    assert theta_upper_bound_closed_form(4) == pytest.approx(0.5)
    assert theta_upper_bound_closed_form(100) == pytest.approx(
        8.27 / 100 * 1.02
    )
    assert theta_lower_bound_closed_form(2) == pytest.approx(1.0 / 3.0)
    assert theta_lower_bound_closed_form(3) == pytest.approx(0.25)
    assert theta_lower_bound_closed_form(9) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        theta_upper_bound_closed_form(0)
    with pytest.raises(ValueError):
        theta_lower_bound_closed_form(1)


def test_lower_bound_below_upper_bound_for_small_k():
    for k in range(2, 31):
        assert theta_lower_bound_closed_form(k) \
            <= theta_upper_bound_closed_form(k)


def test_two_point_win_prob_hand_values():
    # symmetric two-point, odd k: exactly 1/2
    assert two_point_win_prob(-1.0, 1.0, 0.5, 3) == pytest.approx(0.5)
    # all mass at a negative value always wins
    assert two_point_win_prob(-0.5, 1.0, 0.0, 4) == 1.0
    # all mass positive never wins
    assert two_point_win_prob(-0.5, 1.0, 1.0, 4) == 0.0
    # k=2, y-mass p: wins unless both draws are y, since x + y <= 0
    p = 0.3
    assert two_point_win_prob(-1.0, 1.0, p, 2) == pytest.approx(1 - p * p)


def test_two_point_win_prob_matches_audit():
    dist = BiasDistribution.from_atoms([(-0.75, 0.6), (0.5, 0.4)])
    for k in (2, 3, 4):
        want = audit_distribution(dist, k)
        got = two_point_win_prob(-0.75, 0.5, 0.4, k)
        assert got == pytest.approx(want, abs=1e-12)


def test_binary_support_search_lower_bounds_theta():
    mean, dist = binary_support_search(4, value_step=0.25, prob_step=0.05)
    assert mean >= theta_lower_bound_closed_form(4) - 1e-9
    assert audit_distribution(dist, 4) >= 0.5 - 1e-12
    assert mean <= theta_upper_bound_closed_form(4) + 1e-9
