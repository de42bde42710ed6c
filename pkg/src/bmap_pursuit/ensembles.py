"""Random instance generation: matrix ensembles, sparse signals, supports, noise.

Everything here is a pure function of its parameters and an :class:`Rng`;
repeating a call with the same ``Rng`` reproduces the same draw bit for bit.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy.special import ndtri

from .model import GroundTruth


def _stream_key(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    k = int(key)
    if k < 0:
        raise ValueError("stream keys must be nonnegative integers or strings")
    return k


@dataclass(frozen=True)
class Rng:
    """Splittable deterministic random source.

    A fixed ``(seed, path)`` always yields the same sample sequence; ``child``
    derives statistically independent streams (counter-based Philox under a
    spawn key), so trials can be sharded across threads without coupling.
    A fresh generator is created on every use, which keeps the sampling
    functions pure: calling one twice with the same ``Rng`` repeats the draw.
    """

    seed: int
    path: tuple[int, ...] = ()

    def child(self, *keys) -> "Rng":
        return Rng(self.seed, self.path + tuple(_stream_key(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


class MatrixEnsemble(Enum):
    """Entry law for the random measurement matrix."""

    GAUSSIAN_INV_M = "gaussian"      # Normal(0, 1/M) per entry
    UNIFORM01 = "uniform01"          # Unif[0, 1]
    UNIFORM_SYM = "uniform_sym"      # Unif[-0.5, 0.5]
    BERNOULLI01 = "bernoulli01"      # {0, 1} with equal probability


def generate_matrix(ens: MatrixEnsemble, M: int, N: int, rng: Rng) -> np.ndarray:
    """Draw an M x N matrix with i.i.d. entries from the given ensemble."""
    if M < 1 or N < 1:
        raise ValueError("matrix dimensions must be positive")
    gen = rng.generator()
    if ens is MatrixEnsemble.GAUSSIAN_INV_M:
        return gen.normal(0.0, 1.0 / np.sqrt(M), size=(M, N))
    if ens is MatrixEnsemble.UNIFORM01:
        return gen.uniform(0.0, 1.0, size=(M, N))
    if ens is MatrixEnsemble.UNIFORM_SYM:
        return gen.uniform(-0.5, 0.5, size=(M, N))
    if ens is MatrixEnsemble.BERNOULLI01:
        return gen.integers(0, 2, size=(M, N)).astype(float)
    raise ValueError(f"unknown ensemble {ens!r}")


@dataclass(frozen=True)
class UniformDistribution:
    """Unif[lo, hi] nonzero-value law."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def second_moment(self) -> float:
        return self.mean**2 + (self.hi - self.lo) ** 2 / 12.0

    def quantile(self, p: float) -> float:
        return self.lo + p * (self.hi - self.lo)

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return gen.uniform(self.lo, self.hi, size=n)


@dataclass(frozen=True)
class NormalDistribution:
    """Normal(mean, sd^2) nonzero-value law."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("need sd > 0")

    @property
    def second_moment(self) -> float:
        return self.mean**2 + self.sd**2

    def quantile(self, p: float) -> float:
        return self.mean + self.sd * float(ndtri(p))

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return gen.normal(self.mean, self.sd, size=n)


NonzeroDistribution = Union[UniformDistribution, NormalDistribution]


@dataclass(frozen=True)
class ConstantSignal:
    """All nonzero entries share one fixed value beta."""

    beta: float = 1.0

    def __post_init__(self):
        if self.beta == 0.0 or not np.isfinite(self.beta):
            raise ValueError("constant value must be finite and nonzero")

    @property
    def second_moment(self) -> float:
        return self.beta**2

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.beta))


@dataclass(frozen=True)
class OneSidedSignal:
    """Nonzero entries drawn i.i.d. from a law confined (up to mass delta) to one sign."""

    dist: NonzeroDistribution
    delta: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        # Quantile probe: either the lower delta-quantile is already positive
        # (positive-sided) or the upper one is negative (mirrored).
        if not (self.dist.quantile(self.delta) > 0.0 or self.dist.quantile(1.0 - self.delta) < 0.0):
            raise ValueError("distribution straddles zero; use a two-sided model")

    @property
    def positive_sided(self) -> bool:
        return self.dist.quantile(self.delta) > 0.0

    @property
    def second_moment(self) -> float:
        return self.dist.second_moment

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return self.dist.sample(n, gen)


@dataclass(frozen=True)
class TwoSidedSignal:
    """Mixture of a positive-axis law and a negative-axis law for the nonzero entries.

    ``positive`` is the conditional law given a positive draw, ``negative``
    given a negative one; ``p_positive`` is the mixing weight.
    """

    positive: NonzeroDistribution
    negative: NonzeroDistribution
    p_positive: float = 0.5
    delta: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.p_positive <= 1.0:
            raise ValueError("p_positive must lie in [0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not self.positive.quantile(0.5) > 0.0:
            raise ValueError("positive branch must live on the positive axis")
        if not self.negative.quantile(0.5) < 0.0:
            raise ValueError("negative branch must live on the negative axis")

    @property
    def second_moment(self) -> float:
        p = self.p_positive
        return p * self.positive.second_moment + (1.0 - p) * self.negative.second_moment

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        take_pos = gen.random(n) < self.p_positive
        out = np.where(take_pos, self.positive.sample(n, gen), self.negative.sample(n, gen))
        return out


SignalModel = Union[ConstantSignal, OneSidedSignal, TwoSidedSignal]


def sample_support(N: int, K: int, priors, rng: Rng) -> tuple[int, ...]:
    """Draw K distinct indices; uniform priors give every K-subset equal mass.

    Non-uniform priors use sequential weighted sampling without replacement
    (draw proportional to weight, remove, renormalize), so the single-draw
    marginals match the weights exactly.
    """
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={N}")
    gen = rng.generator()
    if priors is None:
        idx = gen.choice(N, size=K, replace=False)
    else:
        p = np.asarray(priors, dtype=float)
        if p.shape != (N,) or np.any(p <= 0.0):
            raise ValueError("priors must be N positive weights")
        idx = gen.choice(N, size=K, replace=False, p=p / p.sum())
    return tuple(sorted(int(i) for i in idx))


def sample_signal(model: SignalModel, support, N: int, rng: Rng) -> GroundTruth:
    """Attach i.i.d. nonzero values from the model to the given support."""
    support = tuple(sorted(int(i) for i in support))
    values = model.sample(len(support), rng.generator())
    return GroundTruth(support=support, values=values, N=N)


def sigma2_from_snr(model: SignalModel, K: int, M: int, snr_linear: float) -> float:
    """Noise variance realizing a target SNR = E||x||^2 / E||z||^2.

    E||x||^2 = K * E[x_i^2] from the model's second moment and E||z||^2 = M * sigma^2,
    so sigma^2 = K * E[x_i^2] / (M * snr).
    """
    if not snr_linear > 0:
        raise ValueError("linear SNR must be positive")
    return K * model.second_moment / (M * snr_linear)


def measure(A: np.ndarray, truth: GroundTruth, sigma2: float, rng: Rng) -> np.ndarray:
    """Noisy measurement y = A x + z with i.i.d. Normal(0, sigma2) noise."""
    A = np.asarray(A, dtype=float)
    if A.shape[1] != truth.N:
        raise ValueError("matrix width does not match the signal dimension")
    if sigma2 < 0:
        raise ValueError("noise variance must be nonnegative")
    y = A[:, list(truth.support)] @ truth.values
    if sigma2 > 0:
        y = y + rng.generator().normal(0.0, np.sqrt(sigma2), size=A.shape[0])
    return y
