"""Core windowed-argmax rank hashing with a polynomial product kernel.

A template is hashed by m independent hash functions. Hash function i owns p
random permutations of {0..n-1}; the input vector is permuted by each, the p
permuted copies are multiplied element-wise (the degree-p product code), and
the 1-based position of the maximum within the first k entries is recorded.
The m recorded positions form the protected code. With p=1 this reduces to
classic winner-takes-all hashing of the k-window prefix.

All randomness is derived from a 64-bit master seed through a counter-keyed
Philox generator, so any single permutation can be regenerated in O(1)
without touching the others and the whole construction is reproducible
bit-for-bit across runs and platforms.
"""

from __future__ import annotations

import hashlib
import struct
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, ParameterError, SeedReuseError

_SEED_MASK = (1 << 64) - 1

STORE_MAGIC = b"RKHC"
STORE_VERSION = 1


def splitmix64(value: int) -> int:
    """One SplitMix64 mixing step; used to fan a base seed out into sub-seeds."""
    z = (value + 0x9E3779B97F4A7C15) & _SEED_MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _SEED_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _SEED_MASK
    return z ^ (z >> 31)


def mix_seed(base: int, *counters: int) -> int:
    """Derive a child 64-bit seed from a base seed and counter values."""
    z = base & _SEED_MASK
    for c in counters:
        z = splitmix64(z ^ (c & _SEED_MASK))
    return z


@dataclass(frozen=True)
class HashParams:
    """Complete description of the transform: (n, m, k, p, master_seed).

    n is the feature dimension, m the number of hash functions, k the window
    size with 1 < k <= n, p the degree of the product kernel (p=1 is plain
    WTA). The master seed fully determines every permutation.
    """

    n: int
    m: int
    k: int
    p: int
    master_seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"feature dimension n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ParameterError(f"number of hash functions m must be >= 1, got {self.m}")
        if self.p < 1:
            raise ParameterError(f"kernel degree p must be >= 1, got {self.p}")
        if not 1 < self.k <= self.n:
            raise ParameterError(
                f"window size k must satisfy 1 < k <= n, got k={self.k}, n={self.n}"
            )
        if self.k == self.n:
            warnings.warn(
                "k == n degenerates to a global argmax (no windowing)",
                stacklevel=2,
            )
        if not 0 <= self.master_seed <= _SEED_MASK:
            raise ParameterError("master_seed must fit in an unsigned 64-bit integer")

    @property
    def fingerprint(self) -> str:
        """Digest binding codes to this parameter set, including the seed."""
        text = f"{self.n}|{self.m}|{self.k}|{self.p}|{self.master_seed}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_seed(self, master_seed: int) -> "HashParams":
        return replace(self, master_seed=master_seed)

    def to_dict(self) -> dict:
        # master_seed as a decimal string: JSON numbers lose 64-bit precision
        return {
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "p": self.p,
            "master_seed": str(self.master_seed),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HashParams":
        try:
            return cls(
                n=int(obj["n"]),
                m=int(obj["m"]),
                k=int(obj["k"]),
                p=int(obj["p"]),
                master_seed=int(obj["master_seed"]),
            )
        except KeyError as exc:
            raise ParameterError(f"missing hash parameter field: {exc}") from exc


def single_permutation(master_seed: int, n: int, index: int) -> np.ndarray:
    """Regenerate one permutation of {0..n-1} from (master_seed, counter index).

    Philox is counter-based, so this is O(n) for any index without generating
    any other permutation in the set.
    """
    key = np.array([master_seed & _SEED_MASK, index & _SEED_MASK], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.permutation(n)


@dataclass(frozen=True)
class PermutationSet:
    """The m x p permutations backing a parameter set.

    perms[i, l] is the l-th permutation of hash function i; position j of the
    product code of hash function i multiplies the original elements
    perms[i, 0, j], ..., perms[i, p-1, j].
    """

    perms: np.ndarray = field(repr=False)

    def __post_init__(self):
        perms = np.asarray(self.perms, dtype=np.int64)
        if perms.ndim != 3:
            raise ParameterError("perms must have shape (m, p, n)")
        n = perms.shape[2]
        expected = np.arange(n)
        flat = perms.reshape(-1, n)
        if not all(np.array_equal(np.sort(row), expected) for row in flat):
            raise ParameterError("every permutation must be a bijection on {0..n-1}")
        object.__setattr__(self, "perms", perms)

    @property
    def m(self) -> int:
        return self.perms.shape[0]

    @property
    def p(self) -> int:
        return self.perms.shape[1]

    @property
    def n(self) -> int:
        return self.perms.shape[2]

    def windows(self, k: int) -> np.ndarray:
        """The window prefix actually used by hashing, shape (m, p, k)."""
        return self.perms[:, :, :k]


def derive_permutations(params: HashParams) -> PermutationSet:
    """Generate the full m x p permutation set for a parameter set.

    Deterministic in (master_seed, n, m, p); permutation (i, l) uses counter
    i*p + l, matching single_permutation.
    """
    perms = np.empty((params.m, params.p, params.n), dtype=np.int64)
    for i in range(params.m):
        for l in range(params.p):
            perms[i, l] = single_permutation(params.master_seed, params.n, i * params.p + l)
    return PermutationSet(perms)


def _as_feature_vector(values, n: int | None = None) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"feature vector must be 1-D, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise DimensionError(f"feature vector has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("feature vector contains NaN or infinite values")
    return x


def product_code(x, window_perms, k: int) -> np.ndarray:
    """Degree-p product code prefix for one hash function.

    window_perms holds the p permutations (each over {0..n-1}) of a single
    hash function; entry j of the result is the product over l of
    x[window_perms[l][j]]. Only the first k positions are materialized since
    later ones can never win the window argmax.
    """
    x = _as_feature_vector(x)
    perms = np.asarray(window_perms, dtype=np.int64)
    if perms.ndim == 1:
        perms = perms[None, :]
    if perms.shape[1] != x.shape[0]:
        raise DimensionError(
            f"permutations act on {perms.shape[1]} elements, vector has {x.shape[0]}"
        )
    if not 1 <= k <= perms.shape[1]:
        raise ParameterError(f"window size k must be in [1, n], got {k}")
    return np.prod(x[perms[:, :k]], axis=0)


def windowed_argmax(code) -> int:
    """1-based position of the window maximum; ties go to the earliest index."""
    code = np.asarray(code, dtype=np.float64)
    if code.size == 0:
        raise ParameterError("empty window has no argmax")
    return int(np.argmax(code)) + 1


def hash_template(x, params: HashParams, perms: PermutationSet | None = None) -> "HashedCode":
    """Hash one feature vector into its protected code.

    Pure function of (x, params): with perms omitted the permutation set is
    derived from params.master_seed. Returns m indices, each in [1, k].
    """
    codes = hash_templates(np.asarray(x, dtype=np.float64)[None, :], params, perms)
    return codes[0]


def hash_templates(X, params: HashParams, perms: PermutationSet | None = None) -> list["HashedCode"]:
    """Hash a batch of feature vectors (rows of X) under one parameter set."""
    indices = hash_indices(X, params, perms)
    fp = params.fingerprint
    return [HashedCode(indices=row, params_fingerprint=fp) for row in indices]


def hash_indices(X, params: HashParams, perms: PermutationSet | None = None) -> np.ndarray:
    """Batch hashing returning the raw (N, m) index matrix, values in [1, k].

    This is the throughput path used by the evaluation harness; hash_template
    and hash_templates wrap it.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != params.n:
        raise DimensionError(f"vectors have dimension {X.shape[1]}, expected {params.n}")
    if not np.all(np.isfinite(X)):
        raise ParameterError("feature vectors contain NaN or infinite values")
    if perms is None:
        perms = derive_permutations(params)
    if (perms.m, perms.p, perms.n) != (params.m, params.p, params.n):
        raise ParameterError(
            "permutation set shape "
            f"{(perms.m, perms.p, perms.n)} does not match params {(params.m, params.p, params.n)}"
        )
    windows = perms.windows(params.k)
    out = np.empty((X.shape[0], params.m), dtype=np.int32)
    # chunk rows so the (chunk, m, p, k) gather stays within ~64 MB
    per_row = params.m * params.p * params.k
    chunk = max(1, int(8_000_000 // max(per_row, 1)))
    for start in range(0, X.shape[0], chunk):
        block = X[start:start + chunk]
        prods = np.prod(block[:, windows], axis=2)  # (c, m, k)
        out[start:start + chunk] = prods.argmax(axis=2) + 1
    return out


def reissue(x, params: HashParams, new_master_seed: int) -> "HashedCode":
    """Cancel and replace: re-hash x under a fresh master seed.

    Refuses the old seed outright; silently "reissuing" the same code would
    defeat cancellation.
    """
    if new_master_seed == params.master_seed:
        raise SeedReuseError("reissue requires a master seed different from the current one")
    return hash_template(x, params.with_seed(new_master_seed))


@dataclass(frozen=True)
class HashedCode:
    """Protected template: m window-argmax indices plus a parameter digest."""

    indices: np.ndarray
    params_fingerprint: str

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int32)
        if idx.ndim != 1:
            raise ParameterError("indices must be a 1-D sequence")
        if idx.size and idx.min() < 1:
            raise ParameterError("hashed indices are 1-based and must be >= 1")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, HashedCode):
            return NotImplemented
        return (
            self.params_fingerprint == other.params_fingerprint
            and np.array_equal(self.indices, other.indices)
        )

    def to_dict(self) -> dict:
        return {
            "indices": self.indices.tolist(),
            "params_fingerprint": self.params_fingerprint,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HashedCode":
        return cls(
            indices=np.asarray(obj["indices"], dtype=np.int32),
            params_fingerprint=str(obj["params_fingerprint"]),
        )


def pack_indices(indices, k: int) -> bytes:
    """Compact binary form: header (magic, version, m, k), then each index
    stored 0-based in ceil(log2 k) bits, LSB-first within the bit stream."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > k):
        raise ParameterError("indices out of range [1, k] for the declared k")
    bits = max(1, int(k - 1).bit_length())
    header = STORE_MAGIC + struct.pack("<BII", STORE_VERSION, idx.size, k)
    acc = 0
    nbits = 0
    payload = bytearray()
    for value in (idx - 1).tolist():
        acc |= value << nbits
        nbits += bits
        while nbits >= 8:
            payload.append(acc & 0xFF)
            acc >>= 8
            nbits -= 8
    if nbits:
        payload.append(acc & 0xFF)
    return header + bytes(payload)


def unpack_indices(blob: bytes) -> tuple[np.ndarray, int]:
    """Inverse of pack_indices; returns (indices, k)."""
    if blob[:4] != STORE_MAGIC:
        raise ParameterError("bad magic; not a packed hashed code")
    version, m, k = struct.unpack("<BII", blob[4:13])
    if version != STORE_VERSION:
        raise ParameterError(f"unsupported packed-code version {version}")
    bits = max(1, int(k - 1).bit_length())
    payload = blob[13:]
    acc = 0
    nbits = 0
    pos = 0
    out = np.empty(m, dtype=np.int32)
    mask = (1 << bits) - 1
    for i in range(m):
        while nbits < bits:
            acc |= payload[pos] << nbits
            pos += 1
            nbits += 8
        out[i] = (acc & mask) + 1
        acc >>= bits
        nbits -= bits
    return out, k
