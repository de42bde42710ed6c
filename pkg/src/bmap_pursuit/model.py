"""Problem-instance data types, the exact-recovery criterion, and shared numeric helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Support priors are clamped into this open interval on ingestion; log-odds of
# an exact 0 or 1 are infinite and nothing downstream ever needs them.
PRIOR_CLAMP = 1e-12


def kl_bernoulli(a: float, b: float) -> float:
    """KL divergence D(Bern(a) || Bern(b)) in nats, with the 0*log(0) := 0 convention."""
    if not 0.0 < b < 1.0:
        raise ValueError(f"reference probability must lie strictly in (0, 1), got {b!r}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"first probability must lie in [0, 1], got {a!r}")
    out = 0.0
    if a > 0.0:
        out += a * math.log(a / b)
    if a < 1.0:
        out += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return out


def binary_entropy(a: float) -> float:
    """Entropy of Bern(a) in nats."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {a!r}")
    out = 0.0
    if a > 0.0:
        out -= a * math.log(a)
    if a < 1.0:
        out -= (1.0 - a) * math.log(1.0 - a)
    return out


def gaussian_tail(x: float) -> float:
    """Upper tail Q(x) = P(Z > x) for a standard normal Z."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class RecoveryProblem:
    """One trial's inputs: measurement matrix, noisy measurement, sparsity, noise, priors.

    ``priors`` holds the per-index probability that the index is in the support;
    ``None`` means uniform 0.5 everywhere. Values are clamped away from {0, 1}.
    A noise-free problem (``sigma2 == 0``) is only accepted with uniform priors,
    because the scoring path then drops the noise scaling and needs the prior
    term to be constant across indices.
    """

    A: np.ndarray
    y: np.ndarray
    K: int
    sigma2: float = 0.0
    priors: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2:
            raise ValueError("measurement matrix must be 2-D")
        M, N = A.shape
        if M < 1:
            raise ValueError("need at least one measurement row")
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if y.shape[0] != M:
            raise ValueError(f"measurement length {y.shape[0]} does not match {M} rows")
        if not 1 <= self.K:
            raise ValueError("sparsity level must be positive")
        if N <= self.K + 1:
            raise ValueError(f"need N > K + 1, got N={N}, K={self.K}")
        if self.sigma2 < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.priors is None:
            priors = np.full(N, 0.5)
        else:
            priors = np.asarray(self.priors, dtype=float).reshape(-1)
            if priors.shape[0] != N:
                raise ValueError("priors length must equal the number of columns")
            priors = np.clip(priors, PRIOR_CLAMP, 1.0 - PRIOR_CLAMP)
        if self.sigma2 == 0.0 and np.ptp(priors) != 0.0:
            raise ValueError("noise-free problems require uniform priors")
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "priors", _readonly(priors))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "K", int(self.K))

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def uniform_priors(self) -> bool:
        return bool(np.ptp(self.priors) == 0.0)


@dataclass(frozen=True)
class GroundTruth:
    """True support and nonzero values of one planted sparse signal."""

    support: tuple[int, ...]
    values: np.ndarray
    N: int

    def __post_init__(self):
        support = tuple(sorted(int(i) for i in self.support))
        if len(set(support)) != len(support):
            raise ValueError("support indices must be distinct")
        if support and not (0 <= support[0] and support[-1] < self.N):
            raise ValueError("support indices out of range")
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape[0] != len(support):
            raise ValueError("one value per support index required")
        if np.any(values == 0.0):
            raise ValueError("support values must be nonzero")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "N", int(self.N))

    @property
    def K(self) -> int:
        return len(self.support)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.N)
        x[list(self.support)] = self.values
        return x


@dataclass(frozen=True)
class SupportEstimate:
    """Indices selected by a solver, in selection order."""

    indices: tuple[int, ...]

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if len(set(indices)) != len(indices):
            raise ValueError("estimate contains duplicate indices")
        if any(i < 0 for i in indices):
            raise ValueError("indices must be nonnegative")
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return len(self.indices)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)


def exact_recovery(est: SupportEstimate, truth: GroundTruth) -> bool:
    """True iff the estimated index set equals the true support exactly."""
    return est.as_set() == frozenset(truth.support)
