"""
Tests for top-N separation, partial rankings and Kendall-Tau matching.
"""

import itertools

import numpy as np
import pytest

from matchmarket.core.estimation import ConfidenceBand
from matchmarket.core.ranking import (
    PartialRanking,
    TopNRanking,
    brute_force_inversions,
    build_partial_rank,
    inversion_set,
    kendall_tau,
    match_environment,
    top_positions,
    try_separate_top_n,
)
from matchmarket.exceptions import RankingDomainError


def _band(mu, width):
    return ConfidenceBand(np.asarray(mu, dtype=float), np.full(len(mu), float(width)))


def test_separation_success():
    """Test well separated top arms are returned in order."""
    sigma = try_separate_top_n(_band([0.2, 0.9, 0.5, 0.1], 0.1), 2)
    assert sigma == TopNRanking([1, 2])


def test_separation_fails_on_overlap():
    """Test overlapping intervals among the top positions fail."""
    assert try_separate_top_n(_band([0.9, 0.85, 0.1], 0.05), 2) is None


def test_separation_ignores_overlap_below_top():
    """Test overlap among lower arms does not block separation."""
    assert try_separate_top_n(_band([0.9, 0.3, 0.31, 0.32], 0.05), 1) == TopNRanking([0])


def test_separation_rejects_large_n():
    """Test asking for more positions than arms is an error."""
    with pytest.raises(ValueError):
        try_separate_top_n(_band([0.5], 0.1), 2)


def test_topn_rejects_duplicates():
    """Test rankings cannot repeat arms."""
    with pytest.raises(ValueError):
        TopNRanking([1, 1])


def test_top_positions_by_ucb():
    """Test the top positions are chosen by upper bound."""
    band = ConfidenceBand(np.array([0.5, 0.4, 0.1]), np.array([0.0, 0.3, 0.0]))
    assert top_positions(band, 1) == {1}


def test_partial_rank_verdicts():
    """Test strict separation yields a verdict and overlap yields a tie."""
    pr = build_partial_rank(_band([0.9, 0.85, 0.1], 0.05))
    assert pr.verdict(0, 2) == 1 and pr.verdict(2, 0) == -1
    assert pr.verdict(0, 1) == 0


def test_partial_rank_restriction():
    """Test pairs outside the restricted set become ties."""
    pr = build_partial_rank(_band([0.9, 0.5, 0.1], 0.01), restrict_to=[0])
    assert pr.verdict(0, 2) == 1
    assert pr.verdict(1, 2) == 0


def test_topn_as_partial_ties_unlisted():
    """Test unlisted arms rank below listed ones and tie among themselves."""
    pr = TopNRanking([2, 0]).as_partial(4)
    assert pr.verdict(2, 0) == 1
    assert pr.verdict(0, 3) == 1
    assert pr.verdict(1, 3) == 0


def test_kendall_tau_total_orders():
    """Test distance between two total orders."""
    assert kendall_tau(TopNRanking([0, 1, 2]), TopNRanking([2, 1, 0]), 3) == 3
    assert kendall_tau(TopNRanking([0, 1, 2]), TopNRanking([0, 1, 2]), 3) == 0


def test_inversion_set_pairs():
    """Test inverted pairs are listed with the smaller arm first."""
    assert inversion_set(TopNRanking([0, 1]), TopNRanking([0, 2]), 3) == [(1, 2)]


def test_domain_mismatch():
    """Test rankings over different arm sets are rejected."""
    a = PartialRanking(np.zeros((3, 3), dtype=int))
    b = PartialRanking(np.zeros((4, 4), dtype=int))
    with pytest.raises(RankingDomainError):
        inversion_set(a, b)


def _classic_inversions(a, b):
    pos_a = {arm: k for k, arm in enumerate(a)}
    pos_b = {arm: k for k, arm in enumerate(b)}
    return sum(
        (pos_a[x] - pos_a[y]) * (pos_b[x] - pos_b[y]) < 0
        for x, y in itertools.combinations(a, 2)
    )


def test_kendall_tau_exhaustive_small():
    """Test every pair of total orders on up to five arms against brute force."""
    for n in range(1, 6):
        perms = list(itertools.permutations(range(n)))
        for a in perms:
            pa = TopNRanking(a).as_partial(n)
            for b in perms:
                pb = TopNRanking(b).as_partial(n)
                expected = _classic_inversions(a, b)
                assert kendall_tau(pa, pb) == expected
                assert brute_force_inversions(pa.sign.tolist(), pb.sign.tolist()) == expected


def test_kendall_tau_random_partial():
    """Test random partial and top-N pairs on six arms against brute force."""
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        a = build_partial_rank(ConfidenceBand(rng.random(6), rng.random(6) * 0.3))
        if rng.random() < 0.5:
            b = TopNRanking(rng.permutation(6)[: rng.integers(1, 7)]).as_partial(6)
        else:
            b = build_partial_rank(ConfidenceBand(rng.random(6), rng.random(6) * 0.3))
        assert kendall_tau(a, b) == brute_force_inversions(a.sign.tolist(), b.sign.tolist())


def test_match_environment_unique():
    """Test a partial ranking matches exactly one stored environment."""
    stored = {0: TopNRanking([0, 1]), 1: TopNRanking([0, 2])}
    # only arm 1 over arm 2 is known
    sign = np.zeros((3, 3), dtype=int)
    sign[1, 2], sign[2, 1] = 1, -1
    assert match_environment(PartialRanking(sign), stored, 2) == 0


def test_match_environment_needs_full_dictionary():
    """Test matching is refused before every environment is stored."""
    sign = np.zeros((3, 3), dtype=int)
    assert match_environment(PartialRanking(sign), {0: TopNRanking([0, 1])}, 2) is None


def test_match_environment_ambiguous():
    """Test an all-ties partial ranking matches nothing."""
    stored = {0: TopNRanking([0, 1]), 1: TopNRanking([0, 2])}
    assert match_environment(PartialRanking(np.zeros((3, 3), dtype=int)), stored, 2) is None


def _noisy_band(rng, mu, width):
    """Band whose true means sit strictly inside every interval."""
    width = np.broadcast_to(np.asarray(width, dtype=float), mu.shape).copy()
    return ConfidenceBand(mu + rng.uniform(-0.99, 0.99, mu.size) * width, width)


def test_separated_ranking_is_true_order():
    """Test a successful separation always reproduces the true top order."""
    rng = np.random.default_rng(11)
    separated = 0
    for _ in range(2000):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(1, k + 1))
        mu = rng.random(k)
        sigma = try_separate_top_n(_noisy_band(rng, mu, rng.random(k) * 0.2), n)
        if sigma is None:
            continue
        separated += 1
        assert sigma == TopNRanking(np.argsort(-mu, kind="stable")[:n])
    assert separated > 100


def test_partial_rank_verdicts_agree_with_true_means():
    """Test every strict verdict of a partial ranking matches the true means."""
    rng = np.random.default_rng(12)
    for _ in range(500):
        mu = rng.random(6)
        pr = build_partial_rank(_noisy_band(rng, mu, rng.random(6) * 0.3))
        truth = np.sign(mu[:, None] - mu[None, :]).astype(int)
        strict = pr.sign != 0
        assert np.array_equal(pr.sign[strict], truth[strict])


def test_narrow_widths_separate_true_top_n():
    """Test widths under a quarter of the top gap always separate."""
    rng = np.random.default_rng(13)
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(1, k))
        mu = rng.random(k)
        order = np.argsort(-mu)
        gap = float(np.min(-np.diff(mu[order][: n + 1])))
        if gap < 1e-6:
            continue
        sigma = try_separate_top_n(_noisy_band(rng, mu, 0.99 * gap / 4), n)
        assert sigma == TopNRanking(order[:n])


def _positions(ranking, n_arms):
    pos = np.full(n_arms, len(ranking.arms))
    pos[list(ranking.arms)] = np.arange(len(ranking.arms))
    return pos


def test_narrow_widths_identify_active_environment():
    """Test widths under a quarter of the rank gap match the active environment."""
    rng = np.random.default_rng(14)
    checked = 0
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(1, k + 1))
        n_envs = int(rng.integers(2, 4))
        means = rng.random((n_envs, k))
        stored = {e: TopNRanking(np.argsort(-means[e])[:n]) for e in range(n_envs)}
        active = int(rng.integers(n_envs))
        pos_active = _positions(stored[active], k)
        gaps = []
        for other in range(n_envs):
            if other == active:
                continue
            pos_other = _positions(stored[other], k)
            inverted = [
                abs(means[active, a] - means[active, b])
                for a, b in itertools.combinations(range(k), 2)
                if (pos_active[a] - pos_active[b]) * (pos_other[a] - pos_other[b]) < 0
            ]
            gaps.append(max(inverted) if inverted else 0.0)
        rank_gap = min(gaps)
        if rank_gap < 1e-6:
            continue
        checked += 1
        pr = build_partial_rank(_noisy_band(rng, means[active], 0.99 * rank_gap / 4))
        assert match_environment(pr, stored, n_envs) == active
    assert checked > 100
