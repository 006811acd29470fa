"""
Top-N separation, partial rankings, inversion sets and Kendall-Tau
environment matching.
"""

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from matchmarket.core.estimation import ConfidenceBand
from matchmarket.exceptions import RankingDomainError


@dataclass(frozen=True)
class TopNRanking:
    """Ordered arm ids, best first."""

    arms: Tuple[int, ...]

    def __init__(self, arms: Iterable[int]):
        arms = tuple(int(a) for a in arms)
        if len(set(arms)) != len(arms):
            raise ValueError(f"Ranking has repeated arms: {arms}")
        object.__setattr__(self, "arms", arms)

    def __len__(self) -> int:
        return len(self.arms)

    def __getitem__(self, position: int) -> int:
        return self.arms[position]

    def as_partial(self, n_arms: int) -> "PartialRanking":
        """Listed arms ordered by position; unlisted arms below, tied among themselves."""
        if any(a < 0 or a >= n_arms for a in self.arms):
            raise RankingDomainError(f"Ranking {self.arms} has arms outside [0, {n_arms})")
        # rank n for all unlisted arms
        level = np.full(n_arms, len(self.arms))
        level[list(self.arms)] = np.arange(len(self.arms))
        sign = np.sign(level[None, :] - level[:, None]).astype(int)
        return PartialRanking(sign)


@dataclass
class PartialRanking:
    """Pairwise verdicts over ``n_arms`` arms.

    ``sign[a, b]`` is ``+1`` when ``a`` is preferred to ``b``, ``-1`` when
    ``b`` is preferred to ``a`` and ``0`` for a tie. Antisymmetric.
    """

    sign: np.ndarray

    @property
    def n_arms(self) -> int:
        return int(self.sign.shape[0])

    def verdict(self, a: int, b: int) -> int:
        return int(self.sign[a, b])


RankingLike = Union[PartialRanking, TopNRanking]


def _as_partial(ranking: RankingLike, n_arms: Optional[int]) -> PartialRanking:
    if isinstance(ranking, PartialRanking):
        return ranking
    if n_arms is None:
        n_arms = max(ranking.arms, default=-1) + 1
    return ranking.as_partial(n_arms)


def _sorted_order(bands: ConfidenceBand) -> np.ndarray:
    # mu_hat descending, ties by arm id
    return np.lexsort((np.arange(bands.n_arms), -bands.mu_hat))


def try_separate_top_n(bands: ConfidenceBand, n: int) -> Optional[TopNRanking]:
    """
    Return the top-``n`` arms if their intervals strictly separate.

    Arms are sorted by estimated mean into ``order``; the ranking is returned
    iff for every position ``a < n`` the lcb of ``order[a]`` exceeds the
    largest ucb among all lower-sorted arms.

    Args:
        bands: confidence band per arm
        n: number of positions to separate (``n <= K``)

    Returns:
        TopNRanking, or None when separation fails
    """
    k = bands.n_arms
    if n > k:
        raise ValueError(f"Cannot separate top {n} of {k} arms")
    order = _sorted_order(bands)
    ucb = bands.ucb[order]
    lcb = bands.lcb[order]
    # below[a] = max ucb over positions a+1..K-1
    below = np.full(k, -np.inf)
    if k > 1:
        below[:-1] = np.maximum.accumulate(ucb[::-1])[::-1][1:]
    if np.all(lcb[:n] > below[:n]):
        return TopNRanking(order[:n])
    return None


def top_positions(bands: ConfidenceBand, n: int) -> Set[int]:
    """Arms whose ucb ranks within the first ``n`` positions."""
    order = np.lexsort((np.arange(bands.n_arms), -bands.ucb))
    return {int(a) for a in order[:n]}


def build_partial_rank(
    bands: ConfidenceBand, restrict_to: Optional[Iterable[int]] = None
) -> PartialRanking:
    """
    Partial ranking from interval separation.

    ``a`` beats ``b`` iff ``lcb_a > ucb_b``; overlapping intervals tie. With
    ``restrict_to``, only verdicts involving at least one listed arm are kept
    and every other pair becomes a tie.
    """
    lcb, ucb = bands.lcb, bands.ucb
    beats = lcb[:, None] > ucb[None, :]
    sign = beats.astype(int) - beats.T.astype(int)
    if restrict_to is not None:
        keep = np.zeros(bands.n_arms, dtype=bool)
        keep[list(restrict_to)] = True
        sign[~(keep[:, None] | keep[None, :])] = 0
    return PartialRanking(sign)


def inversion_set(
    a: RankingLike, b: RankingLike, n_arms: Optional[int] = None
) -> List[Tuple[int, int]]:
    """Pairs ``(j, j')`` with ``j < j'`` strictly ordered in both rankings and oppositely.

    Raises:
        RankingDomainError: if the rankings cover different arm sets
    """
    if n_arms is None:
        sizes = [r.n_arms for r in (a, b) if isinstance(r, PartialRanking)]
        n_arms = sizes[0] if sizes else None
    pa = _as_partial(a, n_arms)
    pb = _as_partial(b, n_arms if n_arms is not None else pa.n_arms)
    if pa.n_arms != pb.n_arms:
        raise RankingDomainError(
            f"Rankings cover {pa.n_arms} and {pb.n_arms} arms respectively"
        )
    inverted = (pa.sign * pb.sign) == -1
    rows, cols = np.nonzero(np.triu(inverted, k=1))
    return list(zip(rows.tolist(), cols.tolist()))


def kendall_tau(a: RankingLike, b: RankingLike, n_arms: Optional[int] = None) -> int:
    """Number of doubly-strict inverted pairs between ``a`` and ``b``."""
    return len(inversion_set(a, b, n_arms))


def brute_force_inversions(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> int:
    """Reference count on explicit ``sign`` matrices by enumerating every pair."""
    n = len(a)
    count = 0
    for j, jp in itertools.combinations(range(n), 2):
        if a[j][jp] != 0 and b[j][jp] != 0 and a[j][jp] != b[j][jp]:
            count += 1
    return count


def match_environment(
    pr: PartialRanking,
    stored: Mapping[Hashable, TopNRanking],
    n_envs: int,
) -> Optional[Hashable]:
    """
    Identify the environment whose stored ranking has zero Kendall-Tau
    distance to ``pr``.

    Returns:
        The unique matching key, or None when fewer than ``n_envs`` rankings
        are stored or the match is absent or ambiguous
    """
    if len(stored) < n_envs:
        return None
    candidates = [
        key for key, sigma in stored.items() if kendall_tau(pr, sigma, pr.n_arms) == 0
    ]
    if len(candidates) == 1:
        return candidates[0]
    return None
