import math

import numpy as np
import pytest

from simplexdec import (
    DecoderConfig,
    ReferenceDistribution,
    ScoreVector,
    greedy_decode,
    restricted_softmax,
    select_nucleus,
    select_topk_support,
    softmax_decode,
    sparsemax_decode,
    sparsemax_threshold,
    validate_simplex,
)
from simplexdec.core import SupportMask
from simplexdec.decoders import KOutOfRange, NonPositiveLambda, POutOfRange

from helpers import random_scores, random_simplex
from oracles import brute_force_sparsemax

S320 = ScoreVector([3.0, 2.0, 0.0])

# exp(s)/sum exp(s) for s = (3, 2, 0), frozen from a 60-digit evaluation.
SOFTMAX_320_LAM1 = (0.70538451269824116, 0.25949646034241912, 0.035119026959339724)
# e/(e+1) and 1/(e+1) to the same precision.
E_OVER_E1 = 0.73105857863000488
ONE_OVER_E1 = 0.26894142136999512


class TestGreedy:
    def test_worked_example(self):
        np.testing.assert_array_equal(greedy_decode(S320).probs, [1.0, 0.0, 0.0])

    def test_tie_breaks_low_index(self):
        np.testing.assert_array_equal(greedy_decode(ScoreVector([1.0, 1.0, 0.0])).probs, [1, 0, 0])

    def test_negative_scores(self):
        np.testing.assert_array_equal(greedy_decode(ScoreVector([-5.0, -1.0, -9.0])).probs, [0, 1, 0])


class TestSoftmax:
    def test_high_precision_values(self):
        np.testing.assert_allclose(softmax_decode(S320, 1.0).probs, SOFTMAX_320_LAM1, atol=1e-15)

    def test_worked_example_temperature(self):
        # At temperature 1/log 2 the weights are (8, 4, 1)/13: roughly
        # (0.6, 0.3, ~0) with most mass on the top token.
        q = softmax_decode(S320, 1.0 / math.log(2.0)).probs
        assert 0.55 < q[0] < 0.65
        assert 0.25 < q[1] < 0.35
        assert q[2] < 0.1

    def test_constant_scores_give_uniform(self):
        q = softmax_decode(ScoreVector([4.2, 4.2, 4.2, 4.2]), 0.37).probs
        np.testing.assert_allclose(q, 0.25, atol=1e-15)

    def test_overflow_safe(self):
        q = softmax_decode(ScoreVector([1000.0, 999.0, 0.0]), 1.0).probs
        assert np.all(np.isfinite(q))
        assert q[0] > q[1] > q[2]

    def test_nonpositive_lambda(self):
        with pytest.raises(NonPositiveLambda):
            softmax_decode(S320, 0.0)

    def test_temperature_limit_matches_greedy(self, gen):
        # lam -> 0+ converges to the argmax distribution when score gaps
        # are bounded away from zero.
        for _ in range(50):
            n = int(gen.integers(2, 32))
            s = gen.normal(0.0, 2.0, n)
            top = np.argsort(s)
            if s[top[-1]] - s[top[-2]] < 0.1:
                s[top[-1]] += 0.1
            sv = ScoreVector(s)
            tv = 0.5 * np.sum(np.abs(softmax_decode(sv, 1e-6).probs - greedy_decode(sv).probs))
            assert tv <= 1e-3


class TestTopK:
    def test_basic(self):
        assert set(select_topk_support(S320, 2).indices()) == {0, 1}

    def test_tie_rule(self):
        mask = select_topk_support(ScoreVector([1.0, 1.0, 0.0]), 1)
        assert list(mask.indices()) == [0]

    def test_full_support(self):
        assert select_topk_support(S320, 3).cardinality == 3

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRange):
            select_topk_support(S320, 0)
        with pytest.raises(KOutOfRange):
            select_topk_support(S320, 4)


class TestNucleus:
    P_MODEL = ReferenceDistribution(validate_simplex([0.5, 0.3, 0.15, 0.05]))

    def exhaustive_prefix(self, probs, p):
        order = np.argsort(-probs, kind="stable")
        total = 0.0
        for m, idx in enumerate(order):
            total += probs[idx]
            if total >= p:
                return set(order[: m + 1])
        return {int(i) for i in order if probs[i] > 0.0}

    def test_mass_example(self):
        mask = select_nucleus(self.P_MODEL, 0.8)
        assert set(mask.indices()) == self.exhaustive_prefix(self.P_MODEL.values, 0.8) == {0, 1}

    def test_full_mass_excludes_zero_tokens(self):
        p_model = ReferenceDistribution(validate_simplex([0.5, 0.3, 0.2, 0.0]))
        assert set(select_nucleus(p_model, 1.0).indices()) == {0, 1, 2}
        assert set(select_nucleus(self.P_MODEL, 1.0).indices()) == {0, 1, 2, 3}

    def test_small_p_gives_argmax(self):
        assert list(select_nucleus(self.P_MODEL, 0.1).indices()) == [0]

    def test_out_of_range(self):
        for bad in (0.0, -0.2, 1.2):
            with pytest.raises(POutOfRange):
                select_nucleus(self.P_MODEL, bad)

    def test_minimality(self, gen):
        # Dropping the last-included token must leave cumulative mass < p.
        for _ in range(100):
            n = int(gen.integers(2, 24))
            probs = random_simplex(gen, n).probs
            p = float(gen.uniform(0.05, 0.999))
            mask = select_nucleus(ReferenceDistribution(validate_simplex(probs)), p)
            idx = mask.indices()
            included = probs[idx]
            assert included.sum() >= p - 1e-12
            if mask.cardinality > 1:
                weakest = included.min()
                assert included.sum() - weakest < p

    def test_matches_exhaustive_prefix(self, gen):
        for _ in range(100):
            n = int(gen.integers(2, 16))
            probs = random_simplex(gen, n).probs
            p = float(gen.uniform(0.05, 1.0))
            mask = select_nucleus(ReferenceDistribution(validate_simplex(probs)), p)
            assert set(mask.indices()) == self.exhaustive_prefix(probs, p)


class TestRestrictedSoftmax:
    def test_high_precision_pair(self):
        mask = SupportMask.from_indices(3, [0, 1])
        q = restricted_softmax(S320, mask, 1.0)
        np.testing.assert_allclose(q.probs, [E_OVER_E1, ONE_OVER_E1, 0.0], atol=1e-15)
        assert q.probs[2] == 0.0

    def test_full_mask_equals_softmax(self):
        mask = SupportMask.from_indices(3, [0, 1, 2])
        np.testing.assert_allclose(
            restricted_softmax(S320, mask, 0.7).probs, softmax_decode(S320, 0.7).probs, atol=1e-15
        )

    def test_singleton(self):
        mask = SupportMask.from_indices(3, [2])
        np.testing.assert_array_equal(restricted_softmax(S320, mask, 1.0).probs, [0, 0, 1])

    def test_nonpositive_lambda(self):
        with pytest.raises(NonPositiveLambda):
            restricted_softmax(S320, SupportMask.from_indices(3, [0]), -1.0)


class TestSparsemaxThreshold:
    def test_lam_one(self):
        eta, k = sparsemax_threshold(S320, 1.0)
        assert (eta, k) == (2.0, 1)

    def test_lam_two(self):
        eta, k = sparsemax_threshold(S320, 2.0)
        assert (eta, k) == (1.5, 2)

    def test_equal_scores(self):
        n, c, lam = 5, 0.3, 1.7
        eta, k = sparsemax_threshold(ScoreVector([c] * n), lam)
        assert k == n
        assert eta == pytest.approx(c - lam / n, abs=1e-15)

    def test_exhaustive_k_scan(self, gen):
        # The vectorised first match agrees with a literal scan over k.
        for _ in range(100):
            n = int(gen.integers(2, 12))
            s = random_scores(gen, n)
            lam = float(gen.uniform(0.1, 10.0))
            eta, k_star = sparsemax_threshold(s, lam)
            ss = np.sort(s.values)[::-1]
            found = None
            for k in range(1, n + 1):
                eta_k = (ss[:k].sum() - lam) / k
                nxt = ss[k] if k < n else -np.inf
                if ss[k - 1] > eta_k and nxt <= eta_k:
                    found = (eta_k, k)
                    break
            assert found is not None
            assert k_star == found[1]
            assert eta == pytest.approx(found[0], abs=1e-12)


class TestSparsemaxDecode:
    def test_lam_one_collapses(self):
        np.testing.assert_allclose(sparsemax_decode(S320, 1.0).probs, [1.0, 0.0, 0.0], atol=1e-15)

    def test_lam_two(self):
        np.testing.assert_allclose(sparsemax_decode(S320, 2.0).probs, [0.75, 0.25, 0.0], atol=1e-15)

    def test_uniform_scores(self):
        q = sparsemax_decode(ScoreVector([1.0] * 4), 3.0)
        np.testing.assert_allclose(q.probs, 0.25, atol=1e-15)

    def test_matches_brute_force_supports(self, gen):
        for _ in range(60):
            n = int(gen.integers(2, 9))
            s = random_scores(gen, n)
            lam = float(gen.uniform(0.1, 10.0))
            expected = brute_force_sparsemax(s.values, lam)
            np.testing.assert_allclose(sparsemax_decode(s, lam).probs, expected, atol=1e-9)

    def test_normalisation(self, gen):
        for _ in range(200):
            n = int(gen.integers(2, 64))
            s = random_scores(gen, n)
            lam = float(gen.uniform(0.1, 10.0))
            q = sparsemax_decode(s, lam)
            assert abs(q.probs.sum() - 1.0) <= 1e-9

    def test_support_grows_with_lam(self, gen):
        # Heavier quadratic regularisation never sparsifies further.
        for _ in range(50):
            n = int(gen.integers(3, 32))
            s = random_scores(gen, n)
            sizes = [sparsemax_threshold(s, lam)[1] for lam in (0.1, 0.5, 1.0, 3.0, 10.0)]
            assert all(a <= b for a, b in zip(sizes, sizes[1:]))


class TestSharedInvariants:
    def decoded(self, s, lam=0.8):
        p_model = ReferenceDistribution(softmax_decode(s, lam))
        return {
            "greedy": greedy_decode(s),
            "softmax": softmax_decode(s, lam),
            "topk": restricted_softmax(s, select_topk_support(s, min(3, s.vocab_size)), lam),
            "topp": restricted_softmax(s, select_nucleus(p_model, 0.9), lam),
            "sparsemax": sparsemax_decode(s, lam),
        }

    def test_all_outputs_are_simplex_points(self, gen):
        for _ in range(25):
            n = int(gen.integers(2, 40))
            for q in self.decoded(random_scores(gen, n)).values():
                validate_simplex(q.probs)

    def test_shift_invariance(self, gen):
        for _ in range(25):
            n = int(gen.integers(2, 24))
            s = random_scores(gen, n)
            c = float(gen.uniform(-50.0, 50.0))
            shifted = ScoreVector(s.values + c)
            base = self.decoded(s)
            moved = self.decoded(shifted)
            for name in base:
                np.testing.assert_allclose(
                    moved[name].probs, base[name].probs, atol=1e-12, err_msg=name
                )
            assert list(select_topk_support(shifted, 2).indices()) == list(
                select_topk_support(s, 2).indices()
            )
            # The sparsemax threshold shifts by c while q stays put.
            eta_s, k_s = sparsemax_threshold(s, 0.8)
            eta_m, k_m = sparsemax_threshold(shifted, 0.8)
            assert k_s == k_m
            assert eta_m == pytest.approx(eta_s + c, abs=1e-9)


class TestDecoderConfig:
    def test_lambda_guard(self):
        with pytest.raises(NonPositiveLambda):
            DecoderConfig(kind="softmax", lam=0.0)
        DecoderConfig(kind="greedy", lam=1.0)

    def test_topk_needs_k(self):
        with pytest.raises(KOutOfRange):
            DecoderConfig(kind="topk")

    def test_topp_needs_valid_p(self):
        with pytest.raises(POutOfRange):
            DecoderConfig(kind="topp", p=1.5)
        DecoderConfig(kind="topp", p=1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            DecoderConfig(kind="beam")
