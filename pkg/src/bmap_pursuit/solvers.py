"""Support-recovery algorithms: bitwise-MAP greedy, its CoSaMP/SP-style variants, and baselines."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .model import RecoveryProblem, SupportEstimate
from .ensembles import ConstantSignal, SignalModel, TwoSidedSignal
from .proxy import (ProxyParams, beta_star_for_model, bmap_score_branches, bmap_scores,
                    bmap_scores_two_sided, omp_scores)

# Rank-detection threshold for least squares and the relative improvement a
# pursuit iteration must achieve to keep going.
_LSTSQ_COND = 1e-10
_STOP_REL_TOL = 1e-8


class Algorithm(Enum):
    BMAP = "bmap"
    B_COSAMP = "bcosamp"
    B_SP = "bsp"
    OMP = "omp"
    COSAMP = "cosamp"
    SP = "sp"


class ResidualMode(Enum):
    FIXED_BETA = "fixed_beta"        # r <- r - beta * a_i after each pick
    LEAST_SQUARES = "least_squares"  # refit coefficients on the selected set


@dataclass
class SolverConfig:
    """Algorithm choice plus optional overrides; ``None`` fields take model-driven defaults.

    Defaults: ``selection_size`` is 2K for CoSaMP and K otherwise (the
    bitwise-MAP variant of CoSaMP works best selecting K per round);
    ``max_iters`` is K for the greedy solvers and 2K for the iterative ones;
    ``residual_mode`` is FIXED_BETA for constant-value signals and
    LEAST_SQUARES otherwise; ``two_sided`` follows the signal model.
    """

    algorithm: Algorithm = Algorithm.BMAP
    residual_mode: ResidualMode | None = None
    two_sided: bool | None = None
    max_iters: int | None = None
    selection_size: int | None = None

    def resolved(self, K: int, model: SignalModel | None) -> "SolverConfig":
        residual_mode = self.residual_mode
        if residual_mode is None:
            residual_mode = (ResidualMode.FIXED_BETA if isinstance(model, ConstantSignal)
                             else ResidualMode.LEAST_SQUARES)
        two_sided = self.two_sided
        if two_sided is None:
            two_sided = isinstance(model, TwoSidedSignal)
        max_iters = self.max_iters
        if max_iters is None:
            max_iters = K if self.algorithm in (Algorithm.BMAP, Algorithm.OMP) else 2 * K
        selection_size = self.selection_size
        if selection_size is None:
            selection_size = 2 * K if self.algorithm is Algorithm.COSAMP else K
        if max_iters < 1 or selection_size < 1:
            raise ValueError("max_iters and selection_size must be positive")
        return SolverConfig(self.algorithm, residual_mode, two_sided, max_iters, selection_size)


@dataclass
class SolverState:
    """Snapshot taken after one iteration, for tracing and diagnostics."""

    selected: SupportEstimate
    residual: np.ndarray
    unselected_colsum: np.ndarray
    iter: int
    best_residual_norm: float


def least_squares(A_sub: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimizer of ||y - A_sub x||_2; the minimum-norm one when A_sub is rank deficient."""
    A_sub = np.asarray(A_sub, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A_sub.ndim != 2 or A_sub.shape[0] != y.shape[0]:
        raise ValueError("incompatible least-squares shapes")
    if A_sub.shape[1] == 0:
        return np.zeros(0)
    x, *_ = scipy.linalg.lstsq(A_sub, y, cond=_LSTSQ_COND)
    return x


def _top_indices(scores: np.ndarray, L: int) -> np.ndarray:
    # Stable sort so equal scores resolve to the lower index.
    return np.argsort(-scores, kind="stable")[:L]


def _record(trace, selected, r, u, it, best_norm):
    if trace is not None:
        trace.append(SolverState(SupportEstimate(tuple(selected)), r.copy(), u.copy(),
                                 it, float(best_norm)))


def bmap_greedy(problem: RecoveryProblem, model: SignalModel,
                cfg: SolverConfig | None = None, trace: list | None = None) -> SupportEstimate:
    """Pick one index per iteration by the bitwise-MAP score, K iterations total.

    The residual update is either the fixed-amplitude subtraction
    r <- r - beta* a_i (natural for constant-value signals) or a least-squares
    refit on the selected set (natural when the nonzero values are random).
    """
    cfg = (cfg or SolverConfig(Algorithm.BMAP)).resolved(problem.K, model)
    if cfg.algorithm is not Algorithm.BMAP:
        raise ValueError("config is not for the greedy bitwise-MAP solver")
    A, y, K = problem.A, problem.y, problem.K
    params = ProxyParams.from_problem(problem, beta_star_for_model(model))
    col_sq = np.einsum("ij,ij->j", A, A)
    u = A.sum(axis=1)
    r = y.copy()
    selected: list[int] = []
    for k in range(1, K + 1):
        if cfg.two_sided:
            plus, minus = bmap_score_branches(A, r, selected, k, params, u, col_sq)
            scores = np.maximum(plus, minus)
        else:
            scores = bmap_scores(A, r, selected, k, params, u, col_sq)
        if selected:
            scores[selected] = -np.inf
        i = int(np.argmax(scores))
        selected.append(i)
        u = u - A[:, i]
        if cfg.residual_mode is ResidualMode.FIXED_BETA:
            beta = params.beta_star
            if cfg.two_sided and minus[i] > plus[i]:
                beta = -beta
            r = r - beta * A[:, i]
        else:
            coef = least_squares(A[:, selected], y)
            r = y - A[:, selected] @ coef
        _record(trace, selected, r, u, k, np.linalg.norm(r))
    return SupportEstimate(tuple(selected))


def omp(problem: RecoveryProblem, cfg: SolverConfig | None = None,
        trace: list | None = None) -> SupportEstimate:
    """Orthogonal matching pursuit: max-|correlation| pick, least-squares residual."""
    cfg = (cfg or SolverConfig(Algorithm.OMP)).resolved(problem.K, None)
    A, y, K = problem.A, problem.y, problem.K
    r = y.copy()
    u = A.sum(axis=1)
    selected: list[int] = []
    for k in range(1, K + 1):
        scores = omp_scores(A, r)
        if selected:
            scores[selected] = -np.inf
        i = int(np.argmax(scores))
        selected.append(i)
        u = u - A[:, i]
        coef = least_squares(A[:, selected], y)
        r = y - A[:, selected] @ coef
        _record(trace, selected, r, u, k, np.linalg.norm(r))
    return SupportEstimate(tuple(selected))


def _pursuit_rounds(problem: RecoveryProblem, scorer, L: int, max_iters: int,
                    refit_after_prune: bool, trace: list | None) -> SupportEstimate:
    """Shared select/merge/solve/prune loop of the CoSaMP and SP families.

    Stops when the residual norm no longer improves by a relative 1e-8, when a
    support set repeats, or after ``max_iters`` rounds; returns the support
    with the smallest residual norm seen.
    """
    A, y, K = problem.A, problem.y, problem.K
    L = min(L, problem.N)
    r = y.copy()
    support: list[int] = []
    seen: set[frozenset[int]] = set()
    best_norm = np.inf
    best_support: list[int] = []
    prev_norm = np.linalg.norm(y)
    for it in range(1, max_iters + 1):
        scores = scorer(A, r, support)
        top = _top_indices(scores, L)
        merged = sorted(set(support) | set(int(i) for i in top))
        coef = least_squares(A[:, merged], y)
        keep = np.sort(_top_indices(np.abs(coef), K))
        support = [merged[i] for i in keep]
        if refit_after_prune:
            coef_on_support = least_squares(A[:, support], y)
        else:
            coef_on_support = coef[keep]
        r = y - A[:, support] @ coef_on_support
        norm = np.linalg.norm(r)
        if norm < best_norm:
            best_norm = norm
            best_support = list(support)
        if trace is not None:
            u = A.sum(axis=1) - A[:, support].sum(axis=1)
            _record(trace, support, r, u, it, best_norm)
        key = frozenset(support)
        if key in seen:
            break
        seen.add(key)
        if norm > prev_norm * (1.0 - _STOP_REL_TOL):
            break
        prev_norm = norm
    return SupportEstimate(tuple(best_support))


def _bmap_round_scorer(problem: RecoveryProblem, model: SignalModel, two_sided: bool):
    params = ProxyParams.from_problem(problem, beta_star_for_model(model))
    col_sq = np.einsum("ij,ij->j", problem.A, problem.A)
    score_fn = bmap_scores_two_sided if two_sided else bmap_scores

    def scorer(A, r, support):
        # The current pruned support plays the role of the given set, so the
        # iteration index inside lambda_k is |support| + 1.
        return score_fn(A, r, support, len(support) + 1, params, None, col_sq)

    return scorer


def b_cosamp(problem: RecoveryProblem, model: SignalModel,
             cfg: SolverConfig | None = None, trace: list | None = None) -> SupportEstimate:
    """CoSaMP-style pursuit driven by the bitwise-MAP score (selects K per round)."""
    cfg = (cfg or SolverConfig(Algorithm.B_COSAMP)).resolved(problem.K, model)
    if cfg.algorithm is not Algorithm.B_COSAMP:
        raise ValueError("config is not for the bitwise-MAP CoSaMP solver")
    scorer = _bmap_round_scorer(problem, model, cfg.two_sided)
    return _pursuit_rounds(problem, scorer, cfg.selection_size, cfg.max_iters, False, trace)


def b_sp(problem: RecoveryProblem, model: SignalModel,
         cfg: SolverConfig | None = None, trace: list | None = None) -> SupportEstimate:
    """Subspace-pursuit-style variant: like b_cosamp plus a refit on the pruned set."""
    cfg = (cfg or SolverConfig(Algorithm.B_SP)).resolved(problem.K, model)
    if cfg.algorithm is not Algorithm.B_SP:
        raise ValueError("config is not for the bitwise-MAP SP solver")
    scorer = _bmap_round_scorer(problem, model, cfg.two_sided)
    return _pursuit_rounds(problem, scorer, cfg.selection_size, cfg.max_iters, True, trace)


def cosamp(problem: RecoveryProblem, cfg: SolverConfig | None = None,
           trace: list | None = None) -> SupportEstimate:
    """Classical CoSaMP baseline (correlation score, 2K selections per round)."""
    cfg = (cfg or SolverConfig(Algorithm.COSAMP)).resolved(problem.K, None)
    scorer = lambda A, r, support: omp_scores(A, r)
    return _pursuit_rounds(problem, scorer, cfg.selection_size, cfg.max_iters, False, trace)


def sp(problem: RecoveryProblem, cfg: SolverConfig | None = None,
       trace: list | None = None) -> SupportEstimate:
    """Classical subspace pursuit baseline (correlation score, K selections per round)."""
    cfg = (cfg or SolverConfig(Algorithm.SP)).resolved(problem.K, None)
    scorer = lambda A, r, support: omp_scores(A, r)
    return _pursuit_rounds(problem, scorer, cfg.selection_size, cfg.max_iters, True, trace)


def solve(problem: RecoveryProblem, model: SignalModel | None,
          cfg: SolverConfig, trace: list | None = None) -> SupportEstimate:
    """Run the solver named in ``cfg``; baselines ignore the signal model."""
    alg = cfg.algorithm
    if alg is Algorithm.BMAP:
        return bmap_greedy(problem, model, cfg, trace)
    if alg is Algorithm.B_COSAMP:
        return b_cosamp(problem, model, cfg, trace)
    if alg is Algorithm.B_SP:
        return b_sp(problem, model, cfg, trace)
    if alg is Algorithm.OMP:
        return omp(problem, cfg, trace)
    if alg is Algorithm.COSAMP:
        return cosamp(problem, cfg, trace)
    if alg is Algorithm.SP:
        return sp(problem, cfg, trace)
    raise ValueError(f"unknown algorithm {alg!r}")
