#!/usr/bin/env python3
"""
Risk Functionals and Monte Carlo Experiments
============================================

Risk evaluation of estimates and the replication engine:
- Weighted-norm risk, prediction risk, derivative L2 risk
- Fresh-draw Monte Carlo check of the prediction risk
- Seeded, replication-parallel experiment runner with ordered reduction
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.exceptions import DimensionError, DomainError
from .basis import CoefficientVector, WeightSequence, derivative_transform, weighted_norm_sq
from .estimator import EstimateResult, derivative_estimate
from .model import ProcessSpec, SlopeSpec, derive_seed, make_slope, simulate_sample

MONTE_CARLO_CHUNK = 10000


class RiskKind(Enum):
    """Loss used by an experiment"""
    PREDICTION = "prediction"          # <Gamma(beta_hat - beta), beta_hat - beta>
    L2 = "l2"                          # ||beta_hat - beta||^2
    UPSILON = "upsilon"                # ||beta_hat - beta||^2_upsilon
    DERIVATIVE_L2 = "derivative_l2"    # ||beta_hat^(s) - beta^(s)||^2


def w_risk(est: EstimateResult, beta_true: CoefficientVector, seq: WeightSequence) -> float:
    """Weighted squared norm of the estimation error"""
    if est.beta_hat.truncation != beta_true.truncation:
        raise DimensionError(
            f"Truncation mismatch: estimate {est.beta_hat.truncation}, truth {beta_true.truncation}")
    return weighted_norm_sq(est.beta_hat - beta_true, seq)


def prediction_risk(est: EstimateResult, beta_true: CoefficientVector, proc: ProcessSpec) -> float:
    """sum_j lambda_j ([beta_hat]_j - [beta]_j)^2, exact for the diagonal design"""
    if est.beta_hat.truncation != proc.truncation:
        raise DimensionError(
            f"Truncation mismatch: estimate {est.beta_hat.truncation}, process {proc.truncation}")
    diff = (est.beta_hat - beta_true).coeffs
    return float(np.sum(proc.eigenvalues() * diff ** 2))


def prediction_risk_monte_carlo(est: EstimateResult, beta_true: CoefficientVector,
                                proc: ProcessSpec, draws: int = 100000,
                                seed: int = 0) -> Tuple[float, float]:
    """Mean and standard error of |<beta_hat - beta, X_new>|^2 over fresh regressor draws"""
    diff = (est.beta_hat - beta_true).coeffs
    rng = np.random.default_rng(seed)
    root_lambda = np.sqrt(proc.eigenvalues())
    losses = np.empty(draws)
    for start in range(0, draws, MONTE_CARLO_CHUNK):
        size = min(MONTE_CARLO_CHUNK, draws - start)
        x_new = rng.standard_normal((size, proc.truncation)) * root_lambda
        losses[start:start + size] = (x_new @ diff) ** 2
    return float(np.mean(losses)), float(np.std(losses, ddof=1) / math.sqrt(draws))


def derivative_l2_risk(est: EstimateResult, beta_true: CoefficientVector) -> float:
    """L2 distance between the derivative estimate and the s-th derivative of the truth"""
    truth = derivative_transform(beta_true, est.s)
    return weighted_norm_sq(est.beta_hat - truth, WeightSequence.constant())


def evaluate_risk(kind: RiskKind, est: EstimateResult, beta_true: CoefficientVector,
                  proc: ProcessSpec) -> float:
    """Loss of one estimate under the given risk kind"""
    kind = RiskKind(kind)
    if kind == RiskKind.PREDICTION:
        return prediction_risk(est, beta_true, proc)
    if kind == RiskKind.UPSILON:
        return w_risk(est, beta_true, proc.decay)
    if kind == RiskKind.L2 and est.s == 0:
        return w_risk(est, beta_true, WeightSequence.constant())
    return derivative_l2_risk(est, beta_true)


@dataclass
class RiskReport:
    """Monte Carlo summary of one (n, m, gamma, s) configuration"""
    n: int
    m: int
    gamma: float
    s: int
    weight_kind: str
    replications: int
    mean_risk: float
    std_error: float
    omega_frequency: float
    master_seed: int
    risks: Optional[List[float]] = None

    def to_dict(self, include_risks: bool = False) -> Dict[str, Any]:
        out = {
            'n': self.n,
            'm': self.m,
            'gamma': self.gamma,
            's': self.s,
            'weight_kind': self.weight_kind,
            'replications': self.replications,
            'mean_risk': self.mean_risk,
            'std_error': self.std_error,
            'omega_frequency': self.omega_frequency,
            'master_seed': self.master_seed,
        }
        if include_risks and self.risks is not None:
            out['risks'] = list(self.risks)
        return out


@dataclass
class _Replication:
    risk: float
    omega_held: bool
    sigma_min: float


class ExperimentRunner:
    """Runs simulate -> estimate -> risk replications on a thread pool

    Replication r always uses derive_seed(master_seed, r) and results are
    reduced in replication order, so the number of workers never changes a
    reported digit.
    """

    def __init__(self, workers: int = 1):
        self.logger = logging.getLogger(__name__)
        self.workers = max(1, int(workers))

    def run(self, proc: ProcessSpec, slope: Union[SlopeSpec, CoefficientVector], n: int, m: int,
            gamma: float, s: int, weight_kind: Union[RiskKind, str], R: int, master_seed: int,
            threshold_power: int = 1, retain_risks: bool = False,
            mirror_noise: bool = False) -> RiskReport:
        kind = RiskKind(weight_kind)
        self._validate(proc, slope, n, m, gamma, s, kind, R, threshold_power)
        beta = self._resolve_slope(slope, proc)

        self.logger.info(f"Experiment start: n={n}, m={m}, gamma={gamma:.4g}, s={s}, "
                         f"risk={kind.value}, R={R}, workers={self.workers}")

        def replicate(r: int) -> _Replication:
            sample = simulate_sample(proc, beta, n, derive_seed(master_seed, r), mirror_noise)
            est = derivative_estimate(sample, m, s, gamma, threshold_power)
            return _Replication(evaluate_risk(kind, est, beta, proc), est.omega_held, est.sigma_min)

        if self.workers == 1:
            results = [replicate(r) for r in range(R)]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(replicate, range(R)))

        risks = np.array([res.risk for res in results])
        held = np.array([res.omega_held for res in results])
        report = RiskReport(
            n=n, m=m, gamma=float(gamma), s=s, weight_kind=kind.value, replications=R,
            mean_risk=float(np.mean(risks)),
            std_error=float(np.std(risks, ddof=1) / math.sqrt(R)),
            omega_frequency=float(np.mean(held)),
            master_seed=int(master_seed),
            risks=risks.tolist() if retain_risks else None,
        )
        self.logger.info(f"Experiment done: n={n}, mean risk={report.mean_risk:.4e} "
                         f"+- {report.std_error:.2e}, omega freq={report.omega_frequency:.3f}")
        return report

    @staticmethod
    def _resolve_slope(slope, proc: ProcessSpec) -> CoefficientVector:
        if isinstance(slope, SlopeSpec):
            return make_slope(slope, proc.truncation)
        if slope.truncation != proc.truncation:
            raise DimensionError(
                f"Slope truncation {slope.truncation} differs from process truncation {proc.truncation}")
        return slope

    def _validate(self, proc, slope, n, m, gamma, s, kind, R, threshold_power):
        if R < 2:
            raise DomainError(f"Experiments need R >= 2 replications, got {R}")
        if n < 1:
            raise DomainError(f"Sample size must be >= 1, got {n}")
        if m < 1 or m > proc.truncation:
            raise DimensionError(f"Dimension m={m} outside 1..J={proc.truncation}")
        if not gamma > 0:
            raise DomainError(f"Threshold gamma must be positive, got {gamma}")
        if threshold_power not in (1, 2):
            raise DomainError(f"threshold_power must be 1 or 2, got {threshold_power}")
        if s < 0:
            raise DomainError(f"Derivative order must be nonnegative, got {s}")
        if s > 0 and kind in (RiskKind.PREDICTION, RiskKind.UPSILON):
            raise DomainError(f"Risk '{kind.value}' applies to the slope itself (s=0), got s={s}")
        if isinstance(slope, SlopeSpec) and s > slope.p:
            self.logger.warning(f"Derivative order s={s} exceeds smoothness p={slope.p:g}")


def run_experiment(proc: ProcessSpec, slope: Union[SlopeSpec, CoefficientVector], n: int, m: int,
                   gamma: float, s: int, weight_kind: Union[RiskKind, str], R: int,
                   master_seed: int, threshold_power: int = 1, workers: int = 1,
                   retain_risks: bool = False, mirror_noise: bool = False) -> RiskReport:
    """R seeded replications of simulate -> estimate -> risk"""
    runner = ExperimentRunner(workers)
    return runner.run(proc, slope, n, m, gamma, s, weight_kind, R, master_seed,
                      threshold_power=threshold_power, retain_risks=retain_risks,
                      mirror_noise=mirror_noise)
