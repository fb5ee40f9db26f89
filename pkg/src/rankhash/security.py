"""Attack-complexity accounting and the record-multiplicity order attack.

Two threat analyses: brute-force inversion of the raw feature values at a
fixed decimal precision, and order recovery from multiple compromised codes
whose permutation seeds are known. The order attack cancels shared factors
in product inequalities, which is only sound when all feature values are
positive; on mixed-sign data it derives contradictory orderings, which the
constraint graph surfaces as cycles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .hashing import HashedCode, HashParams, PermutationSet, derive_permutations, hash_template, mix_seed


@dataclass(frozen=True)
class FeatureStats:
    """Value range of the feature components at a fixed precision step."""

    min_value: float
    max_value: float
    step: float = 1e-4
    n: int = 299

    def __post_init__(self):
        if self.step <= 0:
            raise ParameterError("precision step must be positive")
        if not self.min_value < self.max_value:
            raise ParameterError("min_value must be strictly below max_value")
        if self.n < 1:
            raise ParameterError("dimension n must be >= 1")

    @classmethod
    def from_data(cls, X, step: float = 1e-4) -> "FeatureStats":
        """Derive stats from a data matrix, rounding the range to the step grid."""
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[-1]
        decimals = max(0, int(round(-math.log10(step))))
        return cls(
            min_value=float(round(X.min(), decimals)),
            max_value=float(round(X.max(), decimals)),
            step=step,
            n=n,
        )


@dataclass(frozen=True)
class ComplexityReport:
    """Brute-force guessing effort for one component and the whole vector.

    possibilities_single counts the step-grid values spanning [min, max];
    bits_single / bits_total are exact log2 costs. exponent_single truncates
    the per-component cost to a whole power of two (floor of log2, the usual
    order-of-magnitude convention) and exponent_total is that exponent times
    n, i.e. the whole-vector cost quoted as 2^exponent_total.
    """

    possibilities_single: int
    bits_single: float
    bits_total: float
    exponent_single: int
    exponent_total: int
    n: int

    def to_dict(self) -> dict:
        return {
            "possibilities_single": self.possibilities_single,
            "bits_single": self.bits_single,
            "bits_total": self.bits_total,
            "exponent_single": self.exponent_single,
            "exponent_total": self.exponent_total,
            "n": self.n,
        }


def brute_force_complexity(stats: FeatureStats) -> ComplexityReport:
    """Guessing complexity at the declared precision: round((max-min)/step)
    values per component, raised to the n-th power for the entire vector."""
    possibilities = int(round((stats.max_value - stats.min_value) / stats.step))
    possibilities = max(possibilities, 1)
    bits_single = math.log2(possibilities) if possibilities > 1 else 0.0
    exponent = int(math.floor(bits_single)) if possibilities > 1 else 0
    return ComplexityReport(
        possibilities_single=possibilities,
        bits_single=bits_single,
        bits_total=stats.n * bits_single,
        exponent_single=exponent,
        exponent_total=stats.n * exponent,
        n=stats.n,
    )


class OrderConstraintGraph:
    """Directed strict-order constraints x_a > x_b over feature indices.

    Consistent iff acyclic; the recovered fraction counts index pairs made
    comparable by the transitive closure. raw_inequalities tallies every
    product inequality seen, exploited counts those that cancelled down to a
    single element inequality.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ParameterError("graph needs at least one node")
        self.n = n
        self.adjacency = np.zeros((n, n), dtype=bool)
        self.raw_inequalities = 0
        self.exploited = 0

    def add_edge(self, greater: int, lesser: int):
        self.adjacency[greater, lesser] = True

    @property
    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.adjacency)
        return list(zip(rows.tolist(), cols.tolist()))

    def closure(self) -> np.ndarray:
        """Reachability in one or more steps, by boolean matrix squaring."""
        reach = self.adjacency.copy()
        for _ in range(max(1, math.ceil(math.log2(self.n)) + 1)):
            new = reach | (reach @ reach)
            if np.array_equal(new, reach):
                break
            reach = new
        return reach

    def is_consistent(self) -> bool:
        """True iff the constraints contain no cycle (a strict partial order)."""
        return not bool(np.any(np.diag(self.closure())))

    def recovered_fraction(self) -> float:
        """Fraction of the n*(n-1)/2 index pairs ordered by the closure."""
        if self.n < 2:
            return 1.0
        reach = self.closure()
        comparable = reach | reach.T
        np.fill_diagonal(comparable, False)
        return float(comparable.sum() / (self.n * (self.n - 1)))

    def recovered_order(self) -> list[int] | None:
        """Indices sorted descending, if the closure is a consistent total order."""
        reach = self.closure()
        if np.any(np.diag(reach)):
            return None
        counts = reach.sum(axis=1)
        if sorted(counts.tolist()) != list(range(self.n)):
            return None
        return [int(i) for i in np.argsort(-counts)]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": self.edges,
            "consistent": self.is_consistent(),
            "recovered_fraction": self.recovered_fraction(),
            "recovered_order": self.recovered_order(),
            "raw_inequalities": self.raw_inequalities,
            "exploited": self.exploited,
        }


def _cancel(winner: list[int], loser: list[int]) -> tuple[int, int] | None:
    """Drop the common factors of two product tuples (as multisets).

    Returns the (greater, lesser) element pair when exactly one factor
    remains on each side, else None (the inequality stays unexploited).
    """
    w, l = list(winner), list(loser)
    for factor in list(w):
        if factor in l:
            w.remove(factor)
            l.remove(factor)
    if len(w) == 1 and len(l) == 1 and w[0] != l[0]:
        return w[0], l[0]
    return None


def arm_order_attack(observations, *, assume_all_positive: bool = True,
                     n: int | None = None) -> OrderConstraintGraph:
    """Accumulate order constraints from compromised codes with known seeds.

    observations is a sequence of (HashedCode, PermutationSet, HashParams)
    triples sharing one feature dimension. Every hash function's winning
    position implies product inequalities against the k-1 losing positions;
    with p = 1 these are element inequalities directly, and for p >= 2 the
    common factors cancel under assume_all_positive (the cancellation is
    unsound on mixed-sign inputs, which is precisely what the contradiction
    analysis demonstrates).
    """
    observations = list(observations)
    if not observations:
        if n is None:
            raise ParameterError("empty observation list needs an explicit n")
        return OrderConstraintGraph(n)
    dims = {obs[1].n for obs in observations}
    if len(dims) != 1:
        raise DimensionError(f"observations mix feature dimensions: {sorted(dims)}")
    graph = OrderConstraintGraph(dims.pop())
    for code, perms, params in observations:
        if (perms.m, perms.p, perms.n) != (params.m, params.p, params.n):
            raise ParameterError("permutation set does not match its parameters")
        if len(code) != params.m:
            raise ParameterError("code length does not match m")
        windows = perms.windows(params.k)
        for i in range(params.m):
            w = int(code.indices[i]) - 1
            winner = windows[i, :, w].tolist()
            for j in range(params.k):
                if j == w:
                    continue
                graph.raw_inequalities += 1
                loser = windows[i, :, j].tolist()
                if params.p == 1:
                    graph.add_edge(winner[0], loser[0])
                    graph.exploited += 1
                elif assume_all_positive:
                    pair = _cancel(winner, loser)
                    if pair is not None:
                        graph.add_edge(*pair)
                        graph.exploited += 1
    return graph


def observe(x, params: HashParams, seeds) -> list[tuple[HashedCode, PermutationSet, HashParams]]:
    """Worst-case leak: hash x under each seed and hand the attacker the code
    together with the permutation set and parameters that produced it."""
    out = []
    for seed in seeds:
        p = params.with_seed(int(seed))
        perms = derive_permutations(p)
        out.append((hash_template(x, p, perms), perms, p))
    return out


def attack_success_rate(trials: int, n: int, sign_mode: str, params: HashParams, *,
                        observations_per_trial: int = 5, seed: int = 0) -> dict:
    """Monte Carlo order-recovery statistics over random feature vectors.

    sign_mode "all-positive" draws components uniformly from [0.1, 1.0];
    "mixed" flips each component's sign with probability one half. Each
    trial leaks observations_per_trial codes under distinct seeds and runs
    the cancellation attack assuming positivity. Reports the fraction of
    trials with a fully and correctly recovered order, the fraction with a
    detected contradiction (cycle), and the mean recovered fraction.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if sign_mode not in ("all-positive", "mixed"):
        raise ParameterError(f"sign_mode must be 'all-positive' or 'mixed', got {sign_mode!r}")
    if params.n != n:
        raise ParameterError(f"params.n={params.n} does not match n={n}")
    rng = np.random.default_rng(seed)
    full, contradictions, fractions = 0, 0, []
    for t in range(trials):
        x = rng.uniform(0.1, 1.0, size=n)
        if sign_mode == "mixed":
            x *= np.where(rng.random(n) < 0.5, -1.0, 1.0)
        seeds = [mix_seed(seed, t, o) for o in range(observations_per_trial)]
        graph = arm_order_attack(observe(x, params, seeds), n=n)
        fractions.append(graph.recovered_fraction())
        if not graph.is_consistent():
            contradictions += 1
            continue
        order = graph.recovered_order()
        if order is not None and order == list(np.argsort(-x)):
            full += 1
    return {
        "trials": trials,
        "sign_mode": sign_mode,
        "full_recovery_rate": full / trials,
        "contradiction_rate": contradictions / trials,
        "mean_recovered_fraction": float(np.mean(fractions)),
    }
