import itertools
import math

import numpy as np
import pytest
from scipy.stats import norm

from quadconcord._rng import generator
from quadconcord.concordance import (
    ConcordanceResult,
    QuadrantPattern,
    all_patterns,
    ccr,
    control1,
    control2,
    control_stats,
    denominator_prob,
    enumerate_event_rectangles,
    estimate_and_rate,
    oracle_rate,
    pattern_event_prob,
    poisson_binomial_tail,
    proposed_rate,
)
from quadconcord.exceptions import (
    AllMassExcludedError,
    ConfigError,
    UndefinedRateError,
)
from quadconcord.model import GaussianModel
from quadconcord.series import AgreementSpec, DiffSeries, Quadrant

from conftest import random_pd_model

INF = np.inf

# difference values for building exact count scenarios with a = 0.5
AGREE = (1.0, 1.0)
DISAGREE = (1.0, -1.0)
EXCLUDED_AGREE = (0.1, 0.1)
EXCLUDED_DISAGREE = (0.1, -0.2)


def subject(sid, *points):
    return DiffSeries(sid, x=[p[0] for p in points], y=[p[1] for p in points])


class TestCCR:
    def test_one_agree_one_disagree(self):
        res = ccr([subject("s", AGREE, DISAGREE)], 0.5)
        assert res.value == 0.5
        assert (res.n_used, res.n_excluded) == (2, 0)

    def test_perfect_agreement(self):
        res = ccr([subject("a", AGREE, (-2.0, -1.0)), subject("b", AGREE, AGREE)], 0.5)
        assert res.value == 1.0

    def test_agreeing_zone_point_removed_from_both_sides(self):
        res = ccr([subject("s", (0.2, 0.3), (1.0, 1.0))], 0.5)
        assert res.value == 1.0
        assert (res.n_used, res.n_excluded) == (1, 1)

    def test_point_level_exclusion(self):
        # a subject's excluded point is dropped but its other points remain
        res = ccr([subject("s", EXCLUDED_DISAGREE, AGREE, DISAGREE)], 0.5)
        assert res.value == 0.5
        assert (res.n_used, res.n_excluded) == (2, 1)

    def test_all_excluded(self):
        with pytest.raises(UndefinedRateError):
            ccr([subject("s", EXCLUDED_AGREE, EXCLUDED_DISAGREE)], 0.5)

    def test_range_invariant(self):
        gen = generator(31)
        for _ in range(1000):
            z = gen.normal(0, 1, size=(int(gen.integers(1, 8)), 4))
            try:
                res = ccr(z, float(gen.uniform(0, 1.5)))
            except UndefinedRateError:
                continue
            assert 0.0 <= res.value <= 1.0


class TestControls:
    def test_control_stats_subject_exclusion(self):
        diffs = [
            subject("keep", AGREE, DISAGREE),
            subject("drop", EXCLUDED_AGREE, AGREE),  # one zone point drops it all
        ]
        stats = control_stats(diffs, 0.5)
        assert stats.n_dag == (1, 1)
        assert stats.k == (1, 0)

    def test_control1_tail_values(self):
        # p = 0.5 from one all-agree and one all-disagree subject
        diffs = [subject("a", AGREE, AGREE), subject("b", DISAGREE, DISAGREE)]
        res1 = control1(diffs, 0.5, AgreementSpec(T=2, m=1))
        res2 = control1(diffs, 0.5, AgreementSpec(T=2, m=2))
        assert res1.value == pytest.approx(0.75)
        assert res2.value == pytest.approx(0.25)

    def test_control1_all_agree(self):
        diffs = [subject(str(i), AGREE, (-1.0, -2.0)) for i in range(4)]
        for m in (1, 2):
            assert control1(diffs, 0.5, AgreementSpec(T=2, m=m)).value == 1.0

    def test_control1_all_excluded(self):
        with pytest.raises(UndefinedRateError):
            control1([subject("s", EXCLUDED_AGREE, AGREE)], 0.5, AgreementSpec(T=2, m=1))

    def test_control2_deterministic_indicators(self):
        # all subjects agree at t=1 and disagree at t=2: p = (1, 0)
        diffs = [subject(str(i), AGREE, DISAGREE) for i in range(3)]
        assert control2(diffs, 0.5, AgreementSpec(T=2, m=1)).value == 1.0
        assert control2(diffs, 0.5, AgreementSpec(T=2, m=2)).value == 0.0

    def test_control2_complement_formula(self):
        # p = (0.6, 0.8) -> P(>=1) = 1 - 0.4 * 0.2 = 0.92
        diffs = [
            subject("1", AGREE, AGREE),
            subject("2", AGREE, AGREE),
            subject("3", AGREE, AGREE),
            subject("4", DISAGREE, AGREE),
            subject("5", DISAGREE, DISAGREE),
        ]
        stats = control_stats(diffs, 0.5)
        assert stats.p_t == (0.6, 0.8)
        res = control2(diffs, 0.5, AgreementSpec(T=2, m=1))
        assert res.value == pytest.approx(0.92)
        # the T=2 display: m=2 is p1*p2, m=1 adds the two single-agreement terms
        res2 = control2(diffs, 0.5, AgreementSpec(T=2, m=2))
        assert res2.value == pytest.approx(0.6 * 0.8)
        assert res.value == pytest.approx(0.6 * 0.8 + 0.6 * 0.2 + 0.4 * 0.8)

    def test_poisson_binomial_matches_enumeration(self):
        gen = generator(33)
        for _ in range(1000):
            T = int(gen.integers(1, 6))
            probs = gen.uniform(0, 1, T)
            m = int(gen.integers(1, T + 1))
            brute = 0.0
            for combo in itertools.product((0, 1), repeat=T):
                if sum(combo) >= m:
                    brute += math.prod(
                        p if c else 1 - p for p, c in zip(probs, combo)
                    )
            assert poisson_binomial_tail(probs, m) == pytest.approx(brute, abs=1e-12)

    def test_spec_mismatch(self):
        with pytest.raises(ConfigError):
            control1([subject("s", AGREE)], 0.5, AgreementSpec(T=2, m=1))


# ---------------------------------------------------------------------------
# pattern enumeration: term-for-term comparison with the displayed expansions
# ---------------------------------------------------------------------------

def _family(kind, sign, a):
    if kind == "F":
        return (0.0, INF) if sign > 0 else (-INF, 0.0)
    return (0.0, a) if sign > 0 else (-a, 0.0)


def _term(x1, x2, y1, y2):
    lower = (x1[0], x2[0], y1[0], y2[0])
    upper = (x1[1], x2[1], y1[1], y2[1])
    return lower, upper


def _displayed_group_terms(group, a):
    """Transliteration of the displayed four-sum expansions for T = 2.

    group is (t1_agrees, t2_agrees).  Each expansion has four sums: both
    times drawn from the full-quadrant family F (+), both from the exclusion
    family E (+), t1 from F with t2 from E (-), and t1 from E with t2 from
    F (-).  Within a sum, an agreeing time uses one sign for both X and Y;
    a disagreeing time uses opposite signs.
    """
    t1_agree, t2_agree = group
    sign_pairs_agree = [(+1, +1), (-1, -1)]
    sign_pairs_disagree = [(-1, +1), (+1, -1)]
    t1_signs = sign_pairs_agree if t1_agree else sign_pairs_disagree
    t2_signs = sign_pairs_agree if t2_agree else sign_pairs_disagree
    terms = []
    for fam1, fam2, weight in (
        ("F", "F", +1),
        ("E", "E", +1),
        ("F", "E", -1),
        ("E", "F", -1),
    ):
        for sx1, sy1 in t1_signs:
            for sx2, sy2 in t2_signs:
                lower, upper = _term(
                    _family(fam1, sx1, a),
                    _family(fam2, sx2, a),
                    _family(fam1, sy1, a),
                    _family(fam2, sy2, a),
                )
                terms.append((lower, upper, weight))
    return sorted(terms)


def _enumerator_group_terms(group, a):
    t1_agree, t2_agree = group
    quads1 = (Quadrant.A, Quadrant.B) if t1_agree else (Quadrant.C, Quadrant.D)
    quads2 = (Quadrant.A, Quadrant.B) if t2_agree else (Quadrant.C, Quadrant.D)
    terms = []
    for q1 in quads1:
        for q2 in quads2:
            for rect in enumerate_event_rectangles(QuadrantPattern(labels=(q1, q2)), a):
                terms.append((tuple(rect.lower), tuple(rect.upper), rect.weight))
    return sorted(terms)


class TestEnumeration:
    def test_single_puncture(self):
        pattern = all_patterns(1)[0]
        assert pattern.labels == (Quadrant.A,)
        rects = enumerate_event_rectangles(pattern, 0.7)
        assert len(rects) == 2
        plus = [r for r in rects if r.weight == 1]
        minus = [r for r in rects if r.weight == -1]
        np.testing.assert_array_equal(plus[0].lower, [0, 0])
        np.testing.assert_array_equal(plus[0].upper, [INF, INF])
        np.testing.assert_array_equal(minus[0].lower, [0, 0])
        np.testing.assert_array_equal(minus[0].upper, [0.7, 0.7])

    def test_rectangle_count(self):
        for T in (1, 2, 3):
            for pattern in all_patterns(T):
                assert len(enumerate_event_rectangles(pattern, 0.5)) == 2**T
            assert len(all_patterns(T)) == 4**T
            total = sum(
                len(enumerate_event_rectangles(p, 0.5)) for p in all_patterns(T)
            )
            assert total == 4**T * 2**T

    def test_zero_halfwidth_kills_subsquare_terms(self):
        m = random_pd_model(generator(41))
        for pattern in all_patterns(2):
            for rect in enumerate_event_rectangles(pattern, 0.0):
                if rect.weight == -1 or np.isfinite(rect.lower).any():
                    from quadconcord.mvn import rect_prob

                    if np.any(rect.lower == rect.upper):
                        p = rect_prob(m, rect, seed=1)
                        assert p.value == 0.0

    @pytest.mark.parametrize("a", [0.5, 1.3])
    @pytest.mark.parametrize(
        "group", [(True, False), (False, True), (True, True)],
        ids=["agree-then-disagree", "disagree-then-agree", "both-agree"],
    )
    def test_terms_match_displayed_expansions(self, group, a):
        # exact structural match: same bounds, same signs, term for term
        assert _enumerator_group_terms(group, a) == _displayed_group_terms(group, a)

    @pytest.mark.parametrize("a", [0.5, 1.0])
    def test_denominator_three_term_display(self, a):
        from quadconcord.concordance import _exclusion_union_rectangles

        rects = _exclusion_union_rectangles(2, a)
        # subtracted from 1, the displayed signs are -slab1, -slab2, +both
        displayed = sorted(
            [
                ((-a, -INF, -a, -INF), (a, INF, a, INF), +1),
                ((-INF, -a, -INF, -a), (INF, a, INF, a), +1),
                ((-a, -a, -a, -a), (a, a, a, a), -1),
            ]
        )
        got = sorted((tuple(r.lower), tuple(r.upper), r.weight) for r in rects)
        assert got == displayed


class TestDenominator:
    def test_zero_halfwidth_exact(self):
        m = random_pd_model(generator(42))
        d = denominator_prob(m, 0.0, seed=1)
        assert d.value == 1.0 and d.abs_error == 0.0

    def test_univariate_closed_form(self):
        m = GaussianModel(mean=[0, 0], cov=np.eye(2))
        d = denominator_prob(m, 0.5, seed=2)
        exact = 1 - (norm.cdf(0.5) - norm.cdf(-0.5)) ** 2
        assert d.value == pytest.approx(exact, abs=1e-6)

    def test_everything_excluded(self):
        m = GaussianModel(mean=[0, 0], cov=np.eye(2))
        with pytest.raises(AllMassExcludedError):
            denominator_prob(m, 50.0, seed=3)


class TestProposedRate:
    def test_t1_identity_zero_zone(self):
        m = GaussianModel(mean=[0, 0], cov=np.eye(2))
        res = proposed_rate(m, 0.0, AgreementSpec(T=1, m=1), seed=1)
        assert res.value == pytest.approx(0.5, abs=1e-6)

    def test_t2_identity_zero_zone(self):
        m = GaussianModel(mean=np.zeros(4), cov=np.eye(4))
        res = proposed_rate(m, 0.0, AgreementSpec(T=2, m=2), seed=1)
        assert res.value == pytest.approx(0.25, abs=1e-6)

    def test_factor_setting_matches_oracle(self):
        rho, rxy = 1 / 3, 1 / 3
        cov = np.array(
            [[1, rho, rxy, rxy], [rho, 1, rxy, rxy], [rxy, rxy, 1, rho], [rxy, rxy, rho, 1]]
        )
        m = GaussianModel(mean=[1.5, 1.5, 1.5, 1.5], cov=cov)
        spec = AgreementSpec(T=2, m=1)
        p = proposed_rate(m, 0.5, spec, seed=5)
        o = oracle_rate(m, 0.5, spec, n_draws=10**7, seed=6)
        assert abs(p.value - o.value) <= p.numeric_error + o.numeric_error

    def test_monotone_in_m(self):
        gen = generator(43)
        for trial in range(50):
            m = random_pd_model(gen)
            a = float(gen.uniform(0, 1))
            r1 = proposed_rate(m, a, AgreementSpec(T=2, m=1), seed=trial)
            r2 = proposed_rate(m, a, AgreementSpec(T=2, m=2), seed=trial)
            assert r1.value >= r2.value - r1.numeric_error - r2.numeric_error

    def test_completeness_identity(self):
        gen = generator(44)
        for trial in range(20):
            m = random_pd_model(gen)
            a = float(gen.uniform(0, 1))
            cache = {}
            den = denominator_prob(m, a, tol=1e-5, seed=trial, _cache=cache)
            total, err = 0.0, 0.0
            for pattern in all_patterns(2):
                v, e = pattern_event_prob(m, pattern, a, tol=1e-5, seed=trial, _cache=cache)
                total += v
                err += e
            assert abs(total - den.value) <= err + den.abs_error + 1e-9

    def test_sign_flip_symmetry(self):
        gen = generator(45)
        tol = 1e-5
        for trial in range(200):
            m = random_pd_model(gen)
            flipped = GaussianModel(mean=-m.mean, cov=m.cov)
            a = float(gen.uniform(0, 1))
            spec = AgreementSpec(T=2, m=int(gen.integers(1, 3)))
            r1 = proposed_rate(m, a, spec, tol=tol, seed=trial)
            r2 = proposed_rate(flipped, a, spec, tol=tol, seed=trial)
            assert abs(r1.value - r2.value) <= 2 * tol + r1.numeric_error + r2.numeric_error

    def test_all_mass_excluded(self):
        m = GaussianModel(mean=np.zeros(4), cov=np.eye(4))
        with pytest.raises(AllMassExcludedError):
            proposed_rate(m, 100.0, AgreementSpec(T=2, m=1), seed=1)

    def test_spec_dimension_mismatch(self):
        m = GaussianModel(mean=np.zeros(4), cov=np.eye(4))
        with pytest.raises(ConfigError):
            proposed_rate(m, 0.5, AgreementSpec(T=3, m=1), seed=1)

    def test_deterministic(self):
        m = random_pd_model(generator(46))
        spec = AgreementSpec(T=2, m=1)
        assert proposed_rate(m, 0.5, spec, seed=9) == proposed_rate(m, 0.5, spec, seed=9)

    def test_estimate_and_rate_uses_all_subjects(self):
        gen = generator(47)
        z = gen.normal(0.8, 1.0, size=(30, 4))
        res = estimate_and_rate(z, 0.5, AgreementSpec(T=2, m=1), seed=3)
        assert (res.n_used, res.n_excluded) == (30, 0)
        assert res.method == "proposal"


class TestOracle:
    def test_zero_zone_t1(self):
        m = GaussianModel(mean=[0, 0], cov=np.eye(2))
        res = oracle_rate(m, 0.0, AgreementSpec(T=1, m=1), n_draws=10**5, seed=1)
        assert res.value == pytest.approx(0.5, abs=3 * res.numeric_error + 0.01)
        assert res.n_used == 10**5 and res.n_excluded == 0

    def test_deterministic(self):
        m = random_pd_model(generator(48))
        spec = AgreementSpec(T=2, m=2)
        r1 = oracle_rate(m, 0.5, spec, n_draws=10**5, seed=4)
        r2 = oracle_rate(m, 0.5, spec, n_draws=10**5, seed=4)
        assert r1 == r2

    def test_all_excluded(self):
        m = GaussianModel(mean=np.zeros(4), cov=np.eye(4))
        with pytest.raises(AllMassExcludedError):
            oracle_rate(m, 50.0, AgreementSpec(T=2, m=1), n_draws=10**4, seed=1)

    def test_min_draws(self):
        m = random_pd_model(generator(49))
        with pytest.raises(ConfigError):
            oracle_rate(m, 0.5, AgreementSpec(T=2, m=1), n_draws=100, seed=1)


class TestConcordanceResult:
    def test_range_validated(self):
        with pytest.raises(Exception):
            ConcordanceResult(value=1.2, method="ccr", m=None, a=0.5,
                              n_used=1, n_excluded=0)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            ConcordanceResult(value=0.5, method="magic", m=None, a=0.5,
                              n_used=1, n_excluded=0)
