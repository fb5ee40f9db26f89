"""Dataset handling, verification protocol, EER computation, parameter
sweeps and the reissue (pseudo-imposter) experiment.

The matching protocol mirrors the standard verification setup: genuine
scores from all within-subject sample pairs, imposter scores from the first
retained sample of every subject pair, everything hashed under one shared
permutation set (the lost-token scenario).
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .errors import DataError, DimensionError, ParameterError
from .hashing import HashParams, derive_permutations, hash_indices, mix_seed

BASE_KINDS = ("uniform", "decay-normal")


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings for a synthetic dataset.

    Each subject draws one base vector from the base distribution; each
    sample adds per-component Gaussian noise with spread sigma. Base kinds:

    - "uniform": components iid uniform on [base_low, base_high].
    - "decay-normal": component j is zero-mean Gaussian with spread
      base_scale * exp(-j / base_tau), i.e. a decaying variance spectrum as
      produced by kernel-PCA style feature extractors.
    """

    num_subjects: int
    samples_per_subject: int
    n: int
    sigma: float = 0.02
    base: str = "uniform"
    base_low: float = -0.25
    base_high: float = 0.21
    base_scale: float = 0.09
    base_tau: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if self.num_subjects < 1:
            raise ParameterError("num_subjects must be >= 1")
        if self.samples_per_subject < 1:
            raise ParameterError("samples_per_subject must be >= 1")
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.sigma < 0:
            raise ParameterError("within-class noise sigma must be >= 0")
        if self.base not in BASE_KINDS:
            raise ParameterError(f"base must be one of {BASE_KINDS}, got {self.base!r}")
        if self.base == "uniform" and not self.base_low < self.base_high:
            raise ParameterError("base_low must be < base_high")

    def to_dict(self) -> dict:
        return {
            "num_subjects": self.num_subjects,
            "samples_per_subject": self.samples_per_subject,
            "n": self.n,
            "sigma": self.sigma,
            "base": self.base,
            "base_low": self.base_low,
            "base_high": self.base_high,
            "base_scale": self.base_scale,
            "base_tau": self.base_tau,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SyntheticSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ParameterError(f"unknown synthetic spec fields: {sorted(unknown)}")
        return cls(**obj)


class Dataset:
    """Labeled feature vectors grouped by subject.

    samples[u] is a (s_u, n) float array of subject u's vectors; all
    subjects share the dimension n.
    """

    def __init__(self, subject_ids, samples, provenance: str = "unspecified"):
        if len(subject_ids) != len(samples):
            raise DataError("subject_ids and samples must align")
        if not samples:
            raise DataError("dataset has no subjects")
        self.subject_ids = [str(s) for s in subject_ids]
        self.samples = [np.atleast_2d(np.asarray(s, dtype=np.float64)) for s in samples]
        n = self.samples[0].shape[1]
        for sid, arr in zip(self.subject_ids, self.samples):
            if arr.shape[1] != n:
                raise DimensionError(
                    f"subject {sid} has dimension {arr.shape[1]}, expected {n}"
                )
            if not np.all(np.isfinite(arr)):
                raise DataError(f"subject {sid} has non-finite feature values")
        self.provenance = provenance

    @property
    def n(self) -> int:
        return self.samples[0].shape[1]

    @property
    def num_subjects(self) -> int:
        return len(self.samples)

    def stacked(self):
        """All vectors as one (N, n) matrix plus (subject_idx, sample_idx) labels."""
        X = np.vstack(self.samples)
        labels = [
            (u, j)
            for u, arr in enumerate(self.samples)
            for j in range(arr.shape[0])
        ]
        return X, labels

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["subject_id", "sample_id"] + [f"f{i}" for i in range(self.n)])
            for sid, arr in zip(self.subject_ids, self.samples):
                for j, row in enumerate(arr):
                    writer.writerow([sid, j] + [repr(v) for v in row.tolist()])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        groups: dict[str, list[tuple[str, list[float]]]] = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file, expected a header row") from None
            if len(header) < 3 or header[0] != "subject_id" or header[1] != "sample_id":
                raise DataError(
                    f"{path}: header must start with subject_id,sample_id followed by features"
                )
            width = len(header)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != width:
                    raise DataError(
                        f"{path}: row {lineno} has {len(row)} fields, expected {width}"
                    )
                try:
                    values = [float(v) for v in row[2:]]
                except ValueError as exc:
                    raise DataError(f"{path}: row {lineno}: {exc}") from None
                groups.setdefault(row[0], []).append((row[1], values))
        def sample_key(entry):
            sid = entry[0]
            return (0, int(sid), "") if sid.isdigit() else (1, 0, sid)

        subject_ids = list(groups)
        samples = [
            np.asarray([vals for _, vals in sorted(entries, key=sample_key)])
            for entries in groups.values()
        ]
        return cls(subject_ids, samples, provenance=f"loaded-from-file:{path}")


def synthesize_dataset(spec: SyntheticSpec) -> Dataset:
    """Draw a dataset from a SyntheticSpec; deterministic in spec.seed."""
    rng = np.random.default_rng(spec.seed)
    U, s, n = spec.num_subjects, spec.samples_per_subject, spec.n
    if spec.base == "uniform":
        base = rng.uniform(spec.base_low, spec.base_high, size=(U, 1, n))
    else:
        sd = spec.base_scale * np.exp(-np.arange(n) / spec.base_tau)
        base = rng.normal(0.0, sd, size=(U, 1, n))
    data = base + rng.normal(0.0, spec.sigma, size=(U, s, n))
    ids = [f"s{u:03d}" for u in range(U)]
    return Dataset(ids, list(data), provenance=f"synthetic({spec.to_dict()})")


@dataclass
class ScoreSet:
    """Labeled match scores from a protocol run.

    Scores are collision fractions in [0, 1]. Pair labels run parallel to
    the score arrays: (subject_a, sample_a, subject_b, sample_b) for genuine
    and imposter, (subject, sample, reissue_index) for pseudo-imposter.
    """

    genuine: np.ndarray
    imposter: np.ndarray
    pseudo_imposter: np.ndarray | None = None
    genuine_pairs: list = field(default_factory=list)
    imposter_pairs: list = field(default_factory=list)
    pseudo_pairs: list = field(default_factory=list)

    def histogram(self, bins: int = 50, value_range=(0.0, 1.0)) -> dict:
        """Plot-ready bin edges and per-population counts."""
        edges = np.linspace(value_range[0], value_range[1], bins + 1)
        out = {"bin_edges": edges.tolist()}
        out["genuine_counts"] = np.histogram(self.genuine, bins=edges)[0].tolist()
        out["imposter_counts"] = np.histogram(self.imposter, bins=edges)[0].tolist()
        if self.pseudo_imposter is not None:
            out["pseudo_imposter_counts"] = np.histogram(self.pseudo_imposter, bins=edges)[0].tolist()
        return out

    def iter_rows(self):
        """Flat (kind, label..., score) rows for CSV export."""
        for pair, score in zip(self.genuine_pairs, self.genuine):
            yield ("genuine", *pair, float(score))
        for pair, score in zip(self.imposter_pairs, self.imposter):
            yield ("imposter", *pair, float(score))
        if self.pseudo_imposter is not None:
            for pair, score in zip(self.pseudo_pairs, self.pseudo_imposter):
                yield ("pseudo_imposter", *pair, float(score))


@dataclass(frozen=True)
class EerResult:
    """Equal error rate with the threshold sweep it came from.

    far/frr are sampled at thresholds; eer is the linearly interpolated
    value at the FAR = FRR crossing. For discriminative score sets eer lies
    in [0, 0.5]; the crossing value is reported as computed either way.
    """

    eer: float
    threshold: float
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def to_dict(self) -> dict:
        return {
            "eer": self.eer,
            "threshold": self.threshold,
            "thresholds": self.thresholds.tolist(),
            "far": self.far.tolist(),
            "frr": self.frr.tolist(),
        }


def _eer_from_arrays(genuine: np.ndarray, imposter: np.ndarray) -> EerResult:
    if genuine.size == 0 or imposter.size == 0:
        raise ParameterError("EER needs non-empty genuine and imposter score sets")
    support = np.unique(np.concatenate([genuine, imposter]))
    pad = max(1e-9, 1e-6 * (support[-1] - support[0]))
    thresholds = np.concatenate([[support[0] - pad], support, [support[-1] + pad]])
    imp_sorted = np.sort(imposter)
    gen_sorted = np.sort(genuine)
    # FAR: fraction of imposter scores >= t; FRR: fraction of genuine < t
    far = 1.0 - np.searchsorted(imp_sorted, thresholds, side="left") / imposter.size
    frr = np.searchsorted(gen_sorted, thresholds, side="left") / genuine.size
    diff = far - frr
    idx = int(np.argmax(diff <= 0))  # first crossing; diff starts at +1
    if diff[idx] == 0:
        eer = float(far[idx])
        threshold = float(thresholds[idx])
    else:
        i0, i1 = idx - 1, idx
        dfa = far[i1] - far[i0]
        dfr = frr[i1] - frr[i0]
        lam = (frr[i0] - far[i0]) / (dfa - dfr)
        eer = float(far[i0] + lam * dfa)
        threshold = float(thresholds[i0] + lam * (thresholds[i1] - thresholds[i0]))
    return EerResult(eer=eer, threshold=threshold, thresholds=thresholds, far=far, frr=frr)


def compute_eer(scores: ScoreSet) -> EerResult:
    """EER of a ScoreSet's genuine vs imposter populations."""
    return _eer_from_arrays(np.asarray(scores.genuine, dtype=np.float64),
                            np.asarray(scores.imposter, dtype=np.float64))


def _pair_scores(codes: np.ndarray, idx_a, idx_b) -> np.ndarray:
    if not len(idx_a):
        return np.empty(0)
    return (codes[np.asarray(idx_a)] == codes[np.asarray(idx_b)]).mean(axis=1)


def run_protocol(ds: Dataset, params: HashParams, protocol: str = "fvc", *,
                 imposter_sample_index: int = 0) -> ScoreSet:
    """Hash every sample under one shared permutation set and score pairs.

    Genuine: all within-subject sample pairs (subjects with fewer than two
    samples are excluded with a warning). Imposter, "fvc": one retained
    sample per subject (imposter_sample_index) against every other subject's,
    giving C(U, 2) scores; "all-pairs": every cross-subject sample pair.
    """
    if protocol not in ("fvc", "all-pairs"):
        raise ParameterError(f"protocol must be 'fvc' or 'all-pairs', got {protocol!r}")
    if ds.n != params.n:
        raise DimensionError(f"dataset dimension {ds.n} != params.n {params.n}")
    X, labels = ds.stacked()
    codes = hash_indices(X, params)
    row_of = {label: i for i, label in enumerate(labels)}

    gi, gj, genuine_pairs = [], [], []
    for u, arr in enumerate(ds.samples):
        s = arr.shape[0]
        if s < 2:
            warnings.warn(
                f"subject {ds.subject_ids[u]} has {s} sample(s); excluded from genuine pairing"
            )
            continue
        for a, b in itertools.combinations(range(s), 2):
            gi.append(row_of[(u, a)])
            gj.append(row_of[(u, b)])
            genuine_pairs.append((ds.subject_ids[u], a, ds.subject_ids[u], b))

    ii, ij, imposter_pairs = [], [], []
    if protocol == "fvc":
        usable = []
        for u, arr in enumerate(ds.samples):
            if imposter_sample_index < arr.shape[0]:
                usable.append(u)
            else:
                warnings.warn(
                    f"subject {ds.subject_ids[u]} lacks sample {imposter_sample_index}; "
                    "excluded from imposter pairing"
                )
        for u, v in itertools.combinations(usable, 2):
            ii.append(row_of[(u, imposter_sample_index)])
            ij.append(row_of[(v, imposter_sample_index)])
            imposter_pairs.append(
                (ds.subject_ids[u], imposter_sample_index, ds.subject_ids[v], imposter_sample_index)
            )
    else:
        for u, v in itertools.combinations(range(ds.num_subjects), 2):
            for a in range(ds.samples[u].shape[0]):
                for b in range(ds.samples[v].shape[0]):
                    ii.append(row_of[(u, a)])
                    ij.append(row_of[(v, b)])
                    imposter_pairs.append((ds.subject_ids[u], a, ds.subject_ids[v], b))

    return ScoreSet(
        genuine=_pair_scores(codes, gi, gj),
        imposter=_pair_scores(codes, ii, ij),
        genuine_pairs=genuine_pairs,
        imposter_pairs=imposter_pairs,
    )


def sweep(ds: Dataset, base_params: HashParams, *, k_values=None, p_values=None,
          m_values=None, repeats: int = 5, base_seed: int = 0,
          protocol: str = "fvc") -> list[dict]:
    """EER over a (k, p, m) grid, averaged over independent hash seeds.

    Every grid cell is run `repeats` times with master seeds derived from
    base_seed, and invalid cells (e.g. k > n) are skipped with a warning.
    Returns one row per cell: {k, p, m, mean_eer, std_eer, eers}.
    """
    if repeats < 1:
        raise ParameterError("repeats must be >= 1")
    ks = list(k_values) if k_values is not None else [base_params.k]
    ps = list(p_values) if p_values is not None else [base_params.p]
    ms = list(m_values) if m_values is not None else [base_params.m]
    rows = []
    for k, p, m in itertools.product(ks, ps, ms):
        try:
            cell = HashParams(n=base_params.n, m=m, k=k, p=p, master_seed=0)
        except ParameterError as exc:
            warnings.warn(f"skipping grid cell (k={k}, p={p}, m={m}): {exc}")
            continue
        eers = []
        for rep in range(repeats):
            seed = mix_seed(base_seed, k, p, m, rep)
            scores = run_protocol(ds, cell.with_seed(seed), protocol=protocol)
            eers.append(compute_eer(scores).eer)
        eers = np.asarray(eers)
        rows.append({
            "k": k,
            "p": p,
            "m": m,
            "mean_eer": float(eers.mean()),
            "std_eer": float(eers.std(ddof=1)) if repeats > 1 else 0.0,
            "eers": eers.tolist(),
        })
    return rows


def cancellability_experiment(ds: Dataset, params: HashParams, num_reissues: int = 101, *,
                              reissue_seeds=None, protocol: str = "fvc") -> ScoreSet:
    """Reissue every vector under distinct seeds and score first-vs-rest.

    Each of the dataset's vectors is hashed num_reissues times under
    distinct master seeds; the first code is compared against the remaining
    num_reissues - 1, giving N_vectors * (num_reissues - 1) pseudo-imposter
    scores. Genuine and imposter scores under the fixed params seed are
    included for distribution comparison.
    """
    if num_reissues < 2:
        raise ParameterError("num_reissues must be >= 2")
    if reissue_seeds is None:
        reissue_seeds = [mix_seed(params.master_seed, 0x7E155, r) for r in range(num_reissues)]
    else:
        reissue_seeds = [int(s) for s in reissue_seeds]
        if len(reissue_seeds) != num_reissues:
            raise ParameterError(
                f"got {len(reissue_seeds)} reissue seeds for num_reissues={num_reissues}"
            )
    if len(set(reissue_seeds)) != len(reissue_seeds):
        raise ParameterError("reissue seeds must be pairwise distinct")

    base = run_protocol(ds, params, protocol=protocol)
    X, labels = ds.stacked()
    first = hash_indices(X, params.with_seed(reissue_seeds[0]))
    pseudo_chunks = []
    pseudo_pairs = []
    for r, seed in enumerate(reissue_seeds[1:], start=1):
        other = hash_indices(X, params.with_seed(seed))
        pseudo_chunks.append((first == other).mean(axis=1))
        pseudo_pairs.extend(
            (ds.subject_ids[u], j, r) for (u, j) in labels
        )
    return ScoreSet(
        genuine=base.genuine,
        imposter=base.imposter,
        pseudo_imposter=np.concatenate(pseudo_chunks),
        genuine_pairs=base.genuine_pairs,
        imposter_pairs=base.imposter_pairs,
        pseudo_pairs=pseudo_pairs,
    )


def ks_statistic(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup ECDF difference)."""
    return float(scipy.stats.ks_2samp(sample_a, sample_b).statistic)
