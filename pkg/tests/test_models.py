import math

import numpy as np
import pytest

from delib.metric import BiasDistribution, bias_distribution
from delib.models import (
    LINEAR,
    SQRT,
    BiasTransform,
    ModelConfig,
    averaging_outcome,
    exact_pk,
    monte_carlo_pk,
    random_choice_win_prob,
)
from delib.instances import line_instance_from_bias_distribution

from conftest import random_euclidean_instance


# -- bias transforms ---------------------------------------------------------


def test_transform_parse_spec_round_trip():
    for text in ("linear", "sqrt", "pow:0.5", "pow:0.25"):
        g = BiasTransform.parse(text)
        assert BiasTransform.parse(g.spec()).spec() == g.spec()
    assert LINEAR.spec() == "linear"
    assert SQRT.spec() == "sqrt"


def test_transform_values():
    x = np.array([0.0, 0.25, 1.0])
    assert LINEAR.apply(x) == pytest.approx([0.0, 0.25, 1.0])
    assert SQRT.apply(x) == pytest.approx([0.0, 0.5, 1.0])
    assert BiasTransform.parse("pow:0.5").apply(x) == pytest.approx(
        SQRT.apply(x)
    )


def test_transform_rejects_bad_exponent():
    with pytest.raises(ValueError):
        BiasTransform.parse("pow:0")
    with pytest.raises(ValueError):
        BiasTransform.parse("pow:1.5")
    with pytest.raises(ValueError):
        BiasTransform.parse("cube")


# -- averaging outcome -------------------------------------------------------


def test_averaging_outcome_sign():
    assert averaging_outcome([-0.5, 0.2]) == 1
    assert averaging_outcome([0.5, 0.2]) == 2
    assert averaging_outcome([0.5, -0.5]) == 1     # tie goes to first
    assert averaging_outcome([0.5, -0.5], tie_to_first=False) == 2


def test_averaging_outcome_exact_cancellation():
    # fsum resolves a pairwise-cancelling sum to exactly zero, and the
    # zero-sum tie goes to the first alternative
    assert averaging_outcome([0.1, 0.2, -0.2, -0.1]) == 1
    assert averaging_outcome([0.1, 0.2, -0.2, -0.1], tie_to_first=False) == 2


# -- random choice win probability --------------------------------------------


def test_random_choice_win_prob_two_members():
    # speaker with bias -w trusts the other's lean g(w) vs own k-1 shares
    w = 0.3
    expected = 0.5 * (1.0) + 0.5 * 0.0
    # members -w and +w, linear, beta=1: each speaker sees one opposing lean
    # a = g(w) (mass toward first), b = g(w): symmetric -> 1/2 each side
    got = random_choice_win_prob([-w, w], LINEAR, 1.0, True)
    assert got == pytest.approx(expected)


def test_random_choice_win_prob_unanimous():
    assert random_choice_win_prob([-0.4, -0.1], LINEAR, 1.0, True) == 1.0
    assert random_choice_win_prob([0.4, 0.1], LINEAR, 1.0, True) == 0.0


def test_random_choice_all_zero_flag():
    assert random_choice_win_prob([0.0, 0.0], LINEAR, 1.0, True) == 1.0
    assert random_choice_win_prob([0.0, 0.0], LINEAR, 1.0, False) == 0.5


def test_random_choice_beta_mixes_fraction_negative():
    # beta = 0 ignores leans entirely: probability = fraction of negatives
    assert random_choice_win_prob([-0.9, 0.1, 0.1], LINEAR, 0.0, True) \
        == pytest.approx(1.0 / 3.0)
    mixed = random_choice_win_prob([-0.9, 0.1, 0.1], LINEAR, 0.5, True)
    pure = random_choice_win_prob([-0.9, 0.1, 0.1], LINEAR, 1.0, True)
    assert mixed == pytest.approx(0.5 * pure + 0.5 / 3.0)


# -- model config ------------------------------------------------------------


def test_model_config_round_trip():
    m = ModelConfig("random-choice", k=4, g=SQRT, beta=0.7,
                    tie_to_first=False)
    back = ModelConfig.from_json(m.to_json())
    assert back == m


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("majority", k=2)
    with pytest.raises(ValueError):
        ModelConfig("averaging", k=0)
    with pytest.raises(ValueError):
        ModelConfig("averaging", k=2, beta=1.5)


# -- exact win probability ----------------------------------------------------


def test_exact_pk_two_point_hand_value():
    # D = +1 w.p. p, 0 w.p. 1-p; pair wins iff no +1 drawn, plus ties
    # sum <= 0 only when both draws are 0: probability (1-p)^2 ... but the
    # zero sum ties to the first alternative, so that mass counts fully
    p = 0.3
    dist = BiasDistribution.from_atoms([(1.0, p), (0.0, 1 - p)])
    inst = line_instance_from_bias_distribution(dist)
    model = ModelConfig("averaging", k=2)
    res = exact_pk(inst, model, "W", "X")
    assert res.method == "Exact"
    assert res.stderr == 0.0
    assert res.value == pytest.approx((1 - p) ** 2)


def test_exact_pk_symmetric_distribution_half():
    dist = BiasDistribution.from_atoms([(-0.5, 0.5), (0.5, 0.5)])
    inst = line_instance_from_bias_distribution(dist)
    # odd k: sum cannot be zero, symmetry gives exactly 1/2
    res = exact_pk(inst, ModelConfig("averaging", k=3), "W", "X")
    assert res.value == pytest.approx(0.5, abs=1e-12)


def test_exact_pk_orientation_complement():
    rng = np.random.default_rng(11)
    inst = random_euclidean_instance(rng, 2, 5)
    model = ModelConfig("averaging", k=3)
    a = exact_pk(inst, model, "c0", "c1").value
    b = exact_pk(inst, model, "c1", "c0").value
    # ties go to the named first alternative in each orientation
    assert a + b >= 1.0 - 1e-12


def test_exact_pk_random_choice_matches_manual():
    dist = BiasDistribution.from_atoms([(-0.25, 0.6), (1.0, 0.4)])
    inst = line_instance_from_bias_distribution(dist)
    model = ModelConfig("random-choice", k=2)
    # enumerate the four ordered groups by hand
    want = 0.0
    for b1, p1 in [(-0.25, 0.6), (1.0, 0.4)]:
        for b2, p2 in [(-0.25, 0.6), (1.0, 0.4)]:
            want += p1 * p2 * random_choice_win_prob([b1, b2], LINEAR, 1.0,
                                                     True)
    got = exact_pk(inst, model, "W", "X")
    assert got.value == pytest.approx(want, abs=1e-12)


def test_monte_carlo_pk_deterministic_and_close():
    rng = np.random.default_rng(23)
    inst = random_euclidean_instance(rng, 2, 6)
    model = ModelConfig("averaging", k=3)
    exact = exact_pk(inst, model, "c0", "c1").value
    a = monte_carlo_pk(inst, model, "c0", "c1", 20_000, seed=5)
    b = monte_carlo_pk(inst, model, "c0", "c1", 20_000, seed=5)
    assert a.value == b.value
    assert a.method == "MonteCarlo"
    assert abs(a.value - exact) <= 4 * max(a.stderr, 1e-9)


def test_monte_carlo_pk_seed_changes_stream():
    rng = np.random.default_rng(30)   # interior win probability ~ 0.445
    inst = random_euclidean_instance(rng, 2, 6)
    model = ModelConfig("random-choice", k=2)
    a = monte_carlo_pk(inst, model, "c0", "c1", 2_000, seed=1)
    b = monte_carlo_pk(inst, model, "c0", "c1", 2_000, seed=2)
    assert a.value != b.value


def test_exact_pk_agrees_with_bias_distribution_route():
    # exact_pk on a metric instance equals enumeration on its bias atoms
    rng = np.random.default_rng(31)
    inst = random_euclidean_instance(rng, 2, 5)
    model = ModelConfig("averaging", k=2)
    dist = bias_distribution(inst, "c0", "c1")
    synth = line_instance_from_bias_distribution(dist)
    a = exact_pk(inst, model, "c0", "c1").value
    b = exact_pk(synth, model, "W", "X").value
    assert a == pytest.approx(b, abs=1e-12)
