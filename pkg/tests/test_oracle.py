from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import bruteforce as bf
from designbench import assignment as A
from designbench import oracle
from designbench.errors import PositivityViolation, Undefined
from designbench.population import population, var_y1

TOL = 1e-12


def y1_given_w(spec, mech, w):
    law = oracle.outcome_given_treatment(spec, mech, w)
    return sum(v for (y1, _), v in law.items() if y1 == 1)


# Exact values below were produced by tests/bruteforce.py with Fractions.
S3_CELLS = bf.joint(bf.PAPER, lambda s: F(3 - s[0], 4))


def test_bruteforce_reference_values():
    assert bf.cond(S3_CELLS, lambda c: c[0] == 1, lambda c: c[4] == 1) == F(2, 5)
    assert bf.cond(S3_CELLS, lambda c: c[0] == 1, lambda c: c[4] == 0) == F(2, 3)
    assert bf.dim_limit(S3_CELLS) == F(2, 5)
    assert bf.moments(S3_CELLS, bf.weighted_term(lambda c: F(3 - c[0], 4))) == (F(1, 2), F(3, 4))
    assert bf.moments(S3_CELLS, bf.weighted_term(lambda c: F(5, 8))) == (F(2, 5), F(12, 25))


def test_joint_table_sums_to_one(paper, s3):
    table = oracle.joint_distribution(paper, s3)
    assert table.cells.sum() == pytest.approx(1, abs=TOL)
    weights = paper.weights
    np.testing.assert_allclose(table.cells[:, 1], weights * table.probs, atol=TOL)
    np.testing.assert_allclose(table.cells[:, 0], weights * (1 - table.probs), atol=TOL)


def test_arm_probabilities(paper, s3, w_equals_u):
    assert oracle.unconditional_propensity(paper, s3) == pytest.approx(5 / 8, abs=TOL)
    assert oracle.unconditional_propensity(paper, w_equals_u) == pytest.approx(1 / 2, abs=TOL)
    assert oracle.unconditional_propensity(paper, A.constant_prob(0.37)) == pytest.approx(0.37, abs=TOL)


def test_bayes_conditionals(paper, s3, w_equals_u):
    assert y1_given_w(paper, s3, 1) == pytest.approx(2 / 5, abs=TOL)
    assert y1_given_w(paper, s3, 0) == pytest.approx(2 / 3, abs=TOL)
    for w in (0, 1):
        assert y1_given_w(paper, s3, w) == pytest.approx(2 / (3 + 2 * w), abs=TOL)
        assert y1_given_w(paper, w_equals_u, w) == pytest.approx(1 / 2, abs=TOL)


def test_propensity(paper, s3, w_equals_u):
    for x in (0, 1):
        assert oracle.propensity(paper, s3, x) == pytest.approx(5 / 8, abs=TOL)
        assert oracle.propensity(paper, w_equals_u, x) == pytest.approx(1 / 2, abs=TOL)
    f = {0: 0.2, 1: 0.65}
    for x in (0, 1):
        assert oracle.propensity(paper, A.covariate_fn(f), x) == pytest.approx(f[x], abs=TOL)


def test_propensity_zero_mass_level(paper, s3):
    with pytest.raises(Undefined):
        oracle.propensity(paper, s3, 7)


def test_propensity_is_not_a_treatment_probability(paper, s3):
    probs = {float(p) for p in oracle.joint_distribution(paper, s3).probs}
    assert probs == {0.5, 0.75}
    assert 5 / 8 not in probs
    assert not oracle.is_treatment_probability(paper, s3, 5 / 8)
    assert oracle.is_treatment_probability(paper, s3, 0.75)


def test_total_probability_expansion(paper, s3):
    # Y(1) is independent of X in the paper population, so the expansion
    # equals every conditional score.
    expanded = oracle.total_probability_propensity(paper, s3)
    assert expanded == pytest.approx(5 / 8, abs=TOL)
    for x in (0, 1):
        assert expanded == pytest.approx(oracle.propensity(paper, s3, x), abs=TOL)


def test_unconfoundedness_verdicts(paper, s3, w_equals_u, threshold):
    assert oracle.check_unconfounded(paper, s3) is False
    assert oracle.check_unconfounded(paper, s3, conditional=True) is False
    assert oracle.check_unconfounded(paper, w_equals_u) is True
    assert oracle.check_unconfounded(paper, A.global_coin(0.5)) is True
    assert oracle.check_unconfounded(paper, A.constant_prob(0.3)) is True
    assert oracle.check_unconfounded(paper, threshold) is False
    cov = A.covariate_fn({0: 0.25, 1: 0.75})
    assert oracle.check_unconfounded(paper, cov, conditional=True) is True


def test_covariate_mechanism_confounded_when_x_predicts_outcome():
    spec = population([(1, 0, 1, 0, F(3, 8)), (0, 0, 1, 0, F(1, 8)), (1, 0, 0, 0, F(1, 8)), (0, 0, 0, 0, F(3, 8))])
    cov = A.covariate_fn({0: 0.25, 1: 0.75})
    assert oracle.check_unconfounded(spec, cov) is False
    assert oracle.check_unconfounded(spec, cov, conditional=True) is True


def test_unconfoundedness_undefined_when_arm_empty():
    spec = population([(1, 0, 0, 0, F(1, 2)), (0, 0, 0, 1, F(1, 2))])
    mech = A.deterministic_from(spec, lambda *_: 1)
    assert oracle.check_unconfounded(spec, mech) is None
    with pytest.raises(Undefined):
        oracle.outcome_given_treatment(spec, mech, 0)


def test_dim_limits(paper, s3, w_equals_u, threshold):
    assert oracle.dim_limit(paper, s3) == pytest.approx(0.4, abs=TOL)
    assert oracle.dim_limit(paper, w_equals_u) == pytest.approx(0.5, abs=TOL)
    assert oracle.dim_limit(paper, A.constant_prob(0.5)) == pytest.approx(0.5, abs=TOL)
    assert oracle.dim_limit(paper, threshold) == pytest.approx(float(bf.dim_limit(bf.joint(bf.PAPER, lambda s: s[0]))), abs=TOL)
    with pytest.raises(Undefined):
        oracle.dim_limit(paper, A.global_coin(0.5))


def test_ht_normalized_variance(proportional, prop_mech):
    v1 = oracle.ht_normalized_variance(proportional, prop_mech)
    v2 = oracle.ht_normalized_variance(proportional, A.constant_prob(0.5))
    assert v1 == pytest.approx(1.0, abs=TOL)
    assert v2 == pytest.approx(4 / 3, abs=TOL)
    assert v2 - v1 == pytest.approx(1 / 3, abs=TOL)
    assert v2 - v1 == pytest.approx(2 * var_y1(proportional), abs=TOL)


def test_ht_variance_against_bruteforce(paper, s3):
    assert oracle.ht_normalized_variance(paper, s3) == pytest.approx(3 / 4, abs=TOL)
    cov_cells = bf.joint(bf.PAPER, lambda s: F(1, 4) if s[2] == 0 else F(3, 4))
    _, var = bf.moments(cov_cells, bf.weighted_term(lambda c: F(1, 4) if c[2] == 0 else F(3, 4)))
    assert var == F(13, 12)
    assert oracle.ht_normalized_variance(paper, A.covariate_fn({0: 0.25, 1: 0.75})) == pytest.approx(13 / 12, abs=TOL)


def test_ht_variance_needs_positivity(paper, w_equals_u):
    with pytest.raises(PositivityViolation):
        oracle.ht_normalized_variance(paper, w_equals_u)
    with pytest.raises(Undefined):
        oracle.ht_normalized_variance(paper, A.global_coin(0.5))


def test_ipw_limit_under_confounding(paper, s3):
    # Weighting by the true propensity does not remove the bias here.
    assert oracle.ipw_limit(paper, s3, {0: 5 / 8, 1: 5 / 8}) == pytest.approx(2 / 5, abs=TOL)


def test_reports(paper, s3, w_equals_u, threshold):
    r = oracle.build_report(paper, s3)
    assert (r.randomized, r.unconditionally_unconfounded, r.conditionally_unconfounded) == (True, False, False)
    assert r.gamma == 0.25 and r.positivity and r.overlap
    assert r.dim_limit == pytest.approx(0.4, abs=TOL)
    assert r.ate == pytest.approx(0.5, abs=TOL)

    r = oracle.build_report(paper, w_equals_u)
    assert (r.randomized, r.unconditionally_unconfounded, r.overlap, r.positivity) == (False, True, True, False)
    assert r.ht_normalized_variance is None and "ht_normalized_variance" in r.undefined

    r = oracle.build_report(paper, A.constant_prob(0.3))
    assert (r.randomized, r.unconditionally_unconfounded) == (True, True)
    assert all(v == pytest.approx(0.3, abs=TOL) for v in r.propensity_by_x.values())

    r = oracle.build_report(paper, threshold)
    assert (r.randomized, r.unconditionally_unconfounded) == (False, False)

    r = oracle.build_report(paper, A.global_coin(0.5))
    assert r.dim_limit is None and r.ht_normalized_variance is None
    assert set(r.undefined) == {"dim_limit", "ht_normalized_variance"}
    doc = r.to_dict()
    assert doc["dim_limit"] is None and doc["propensity_by_x"] == {"0": 0.5, "1": 0.5}


# --- properties over random small designs -----------------------------------

@st.composite
def designs(draw):
    k = draw(st.integers(1, 6))
    raw = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    total = sum(raw)
    rows, probs = [], {}
    for i, w in enumerate(raw):
        y1 = draw(st.integers(-3, 3))
        y0 = draw(st.integers(-3, 3))
        x = draw(st.integers(0, 2))
        key = (y1, y0, x, i)
        rows.append((*key, F(w, total)))
        probs[key] = F(draw(st.integers(1, 19)), 20)
    return rows, probs


def _build(rows, probs):
    spec = population(rows)
    mech = A.latent_fn({k: float(p) for k, p in probs.items()})
    return spec, mech


@given(designs())
@settings(max_examples=100, deadline=None)
def test_ht_unbiased_for_any_positive_design(design):
    rows, probs = design
    spec, mech = _build(rows, probs)
    assert oracle.ht_mean(spec, mech) == pytest.approx(oracle.build_report(spec, mech).ate, abs=TOL)
    cells = bf.joint(rows, lambda s: probs[s[:4]])
    mean, var = bf.moments(cells, bf.weighted_term(lambda c: probs[c[:4]]))
    assert oracle.ht_mean(spec, mech) == pytest.approx(float(mean), abs=TOL)
    assert oracle.ht_normalized_variance(spec, mech) == pytest.approx(float(var), rel=1e-10, abs=TOL)


@given(designs())
@settings(max_examples=100, deadline=None)
def test_bayes_reconstructs_marginal(design):
    spec, mech = _build(*design)
    table = oracle.joint_distribution(spec, mech)
    total = {}
    for w in (0, 1):
        pw = table.arm_probability(w)
        if pw <= 0:
            continue
        for key, v in oracle.outcome_given_treatment(spec, mech, w).items():
            total[key] = total.get(key, 0.0) + v * pw
    marginal = oracle.outcome_marginal(spec)
    assert set(total) == set(marginal)
    for key in marginal:
        assert total[key] == pytest.approx(marginal[key], abs=TOL)


@given(designs())
@settings(max_examples=100, deadline=None)
def test_report_invariants(design):
    rows, probs = design
    spec, mech = _build(rows, probs)
    r = oracle.build_report(spec, mech)
    if r.positivity:
        assert r.randomized
    px = {x: float(sum(w for *k, w in rows if k[2] == x)) for x in r.propensity_by_x}
    assert r.unconditional_propensity == pytest.approx(sum(px[x] * r.propensity_by_x[x] for x in px), abs=TOL)
    assert r.unconditional_propensity == pytest.approx(oracle.total_probability_propensity(spec, mech), abs=TOL)
    cells = bf.joint(rows, lambda s: probs[s[:4]])
    for x in px:
        exact = bf.cond(cells, lambda c: c[4] == 1, lambda c: c[2] == x)
        assert r.propensity_by_x[x] == pytest.approx(float(exact), abs=TOL)


def test_quadrants(paper, s3, w_equals_u, threshold):
    cells = set()
    for mech in (s3, w_equals_u, A.constant_prob(0.5), threshold):
        r = oracle.build_report(paper, mech)
        cells.add((r.randomized, r.unconditionally_unconfounded))
    assert cells == {(True, False), (False, True), (True, True), (False, False)}
