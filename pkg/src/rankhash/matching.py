"""Similarity measures: collision scoring of hashed codes, pairwise-order
rank agreement of raw vectors, and the analytic single-hash collision
probability for the p=1 transform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError, IncompatibleTemplateError, ParameterError
from .hashing import HashedCode


@dataclass(frozen=True)
class MatchScore:
    """Collision count between two codes and the normalized score collisions/m."""

    collisions: int
    score: float


@dataclass(frozen=True)
class RankAgreement:
    """Per-index concordance counts between two equal-length vectors.

    per_index[i] is the number of indices j on which both vectors rank i
    strictly above j; po_total is their sum, i.e. the number of index pairs
    whose strict order both vectors agree on (at most n*(n-1)/2).
    """

    per_index: np.ndarray
    po_total: int


def collision_score(enrolled: HashedCode, query: HashedCode, *, allow_cross_params: bool = False) -> MatchScore:
    """Fraction of hash functions on which two codes collide.

    Collisions are positions with equal indices (zeros of the element-wise
    difference). Both codes must come from the same parameter set and master
    seed unless allow_cross_params is set, which the cancellability
    experiment needs for cross-seed comparisons.
    """
    if len(enrolled) != len(query):
        raise IncompatibleTemplateError(
            f"code lengths differ: {len(enrolled)} vs {len(query)}"
        )
    if not allow_cross_params and enrolled.params_fingerprint != query.params_fingerprint:
        raise IncompatibleTemplateError(
            "codes were produced under different parameters/seeds; "
            "pass allow_cross_params=True to score them anyway"
        )
    collisions = int(np.count_nonzero(enrolled.indices == query.indices))
    return MatchScore(collisions=collisions, score=collisions / len(enrolled))


def pairwise_order(a, b) -> RankAgreement:
    """Count the index pairs on whose strict ordering two vectors agree.

    Works on any equal-length numeric vectors (raw features or integer
    codes). Tied pairs in either vector count as disagreement.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    if a.shape[0] < 2:
        raise DimensionError("pairwise order needs at least two elements")
    agree = (a[:, None] > a[None, :]) & (b[:, None] > b[None, :])
    per_index = agree.sum(axis=1)
    return RankAgreement(per_index=per_index, po_total=int(per_index.sum()))


def collision_probability(a, b, k: int) -> float:
    """Exact probability that one p=1 hash function collides on a and b.

    For a uniformly random permutation with window size k, the window's
    shared winner must dominate the other k-1 window elements in both
    vectors, which counts C(R_i, k-1) windows per index i out of C(n, k).
    Exact for tie-free vectors; with ties it is a lower bound because tied
    pairs never count as agreement. Computed with exact integer binomials.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    n = a.shape[0]
    if not 2 <= k <= n:
        raise ParameterError(f"window size k must be in [2, n], got k={k}, n={n}")
    agreement = pairwise_order(a, b)
    numerator = sum(math.comb(int(r), k - 1) for r in agreement.per_index)
    return float(Fraction(numerator, math.comb(n, k)))
