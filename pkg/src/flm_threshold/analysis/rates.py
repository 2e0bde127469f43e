#!/usr/bin/env python3
"""
Rate Machinery
==============

Theoretical side of the rate experiments:
- Balancing rule for the dimension m* and the rate delta*
- Closed-form rate exponents for polynomial and exponential decay
- Side condition of the upper bound, evaluated over a grid of n
- Log-log slope fitting of empirical risks
- Dimension and threshold rules used by experiments
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import DomainError, SearchLimitError
from .basis import WeightKind, WeightSequence

logger = logging.getLogger(__name__)

SEARCH_CAP = 10 ** 6
INITIAL_SEARCH_BLOCK = 64


class RateTarget(Enum):
    PREDICTION = "prediction"
    DERIVATIVE_L2 = "derivative_l2"


@dataclass(frozen=True)
class RateCase:
    """Decay family, smoothness and risk target of a rate statement"""
    decay_kind: WeightKind
    a: float
    p: float
    target: RateTarget = RateTarget.PREDICTION
    s: int = 0

    def __post_init__(self):
        if self.decay_kind == WeightKind.POLY_DECAY:
            if self.a <= 0.5:
                raise DomainError(f"Polynomial decay requires a > 1/2, got a={self.a}")
        elif self.decay_kind == WeightKind.EXP_DECAY:
            if self.a <= 0:
                raise DomainError(f"Exponential decay requires a > 0, got a={self.a}")
        else:
            raise DomainError(f"Rate cases need poly or exp decay, got {self.decay_kind.value}")
        if self.p < 0:
            raise DomainError(f"Smoothness p must be nonnegative, got {self.p}")
        if self.s < 0 or self.s > self.p:
            raise DomainError(f"Derivative order must satisfy 0 <= s <= p, got s={self.s}, p={self.p}")

    @property
    def is_poly(self) -> bool:
        return self.decay_kind == WeightKind.POLY_DECAY

    def b(self) -> WeightSequence:
        return WeightSequence.sobolev(self.p)

    def upsilon(self) -> WeightSequence:
        if self.is_poly:
            return WeightSequence.poly_decay(self.a)
        return WeightSequence.exp_decay(self.a)

    def omega(self) -> WeightSequence:
        """Risk weights: upsilon for prediction, b^s for the derivative L2 risk"""
        if self.target == RateTarget.PREDICTION:
            return self.upsilon()
        return WeightSequence.sobolev(self.s)


@dataclass
class BalancingResult:
    """m*, delta* and the achieved value of the balancing expression"""
    m_star: int
    delta_star: float
    achieved_delta: float
    jump: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm_star': self.m_star,
            'delta_star': self.delta_star,
            'achieved_delta': self.achieved_delta,
            'jump': self.jump,
        }


def balancing_expression(n: float, b: WeightSequence, omega: WeightSequence,
                         upsilon: WeightSequence, J: int) -> np.ndarray:
    """E(m) = b_m / (n omega_m) * sum_{j<=m} omega_j / upsilon_j for m = 1..J"""
    bv, wv, uv = b.values(J), omega.values(J), upsilon.values(J)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        return bv / (n * wv) * np.cumsum(wv / uv)


def m_star(n: float, b: WeightSequence, omega: WeightSequence, upsilon: WeightSequence,
           cap: int = SEARCH_CAP) -> BalancingResult:
    """Smallest m with E(m) >= 1, delta* = omega_m* / b_m*"""
    if n < 2:
        raise DomainError(f"Balancing needs n >= 2, got {n}")

    J = min(INITIAL_SEARCH_BLOCK, cap)
    while True:
        expr = balancing_expression(n, b, omega, upsilon, J)
        hits = np.nonzero(expr >= 1.0)[0]
        if hits.size:
            idx = int(hits[0])
            m = idx + 1
            achieved = float(expr[idx])
            jump = achieved / float(expr[idx - 1]) if idx > 0 else achieved
            delta = omega.w(m) / b.w(m)
            logger.debug(f"m*({n:g}) = {m}, delta* = {delta:.4e}, Delta = {achieved:.4g}")
            return BalancingResult(m_star=m, delta_star=delta, achieved_delta=achieved, jump=jump)
        if J >= cap:
            raise SearchLimitError(f"No m <= {cap} balances the expression at n={n:g}")
        J = min(2 * J, cap)


def theoretical_exponent(case: RateCase) -> Tuple[float, float]:
    """(power of n, power of log n) of the minimax rate"""
    if case.s > case.p:
        raise DomainError(f"Derivative order s={case.s} exceeds smoothness p={case.p}")
    p, a, s = case.p, case.a, case.s
    if case.target == RateTarget.PREDICTION:
        if case.is_poly:
            return (-(2 * p + 2 * a) / (2 * p + 2 * a + 1), 0.0)
        return (-1.0, 1.0 / (2 * a))
    if case.is_poly:
        return (-(2 * p - 2 * s) / (2 * p + 2 * a + 1), 0.0)
    return (0.0, -(p - s) / a)


def required_moment_index(case: RateCase) -> Optional[float]:
    """Smallest k for the polynomial upper bound, 2 + 8 / (2p + 2a - 1); None for exp decay"""
    if not case.is_poly:
        return None
    return 2.0 + 8.0 / (2 * case.p + 2 * case.a - 1)


@dataclass
class SideConditionRow:
    n: float
    m_star: int
    delta_star: float
    ratio_moment: float      # m*^{2k} / (delta* n^k)
    ratio_variance: float    # m* / (delta* n) * sup_{j<=m*} omega_j / upsilon_j
    ratio_dimension: float   # m*^{2+k} / n^{k/2 - 1}


@dataclass
class SideConditionReport:
    case: RateCase
    k: int
    rows: List[SideConditionRow] = field(default_factory=list)
    growing: Dict[str, bool] = field(default_factory=dict)
    maxima: Dict[str, float] = field(default_factory=dict)
    required_k: Optional[float] = None

    @property
    def verdict(self) -> str:
        return "warn" if any(self.growing.values()) else "pass"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'decay': self.case.decay_kind.value,
            'a': self.case.a,
            'p': self.case.p,
            's': self.case.s,
            'target': self.case.target.value,
            'k': self.k,
            'required_k': self.required_k,
            'verdict': self.verdict,
            'growing': self.growing,
            'maxima': self.maxima,
            'rows': [row.__dict__ for row in self.rows],
        }


RATIO_NAMES = ("ratio_moment", "ratio_variance", "ratio_dimension")


def check_side_condition(case: RateCase, n_grid: Sequence[float], k: int,
                         growth_factor: float = 2.0) -> SideConditionReport:
    """Evaluate the three side-condition ratios along n_grid

    A ratio is flagged as growing when the mean of its logarithm over the last
    third of the grid exceeds that over the first third by log(growth_factor).
    """
    if k < 4:
        raise DomainError(f"Moment index k must be >= 4, got {k}")
    grid = sorted(float(n) for n in n_grid)
    if len(grid) < 3:
        raise DomainError("Side-condition check needs at least 3 grid points")

    b, omega, upsilon = case.b(), case.omega(), case.upsilon()
    report = SideConditionReport(case=case, k=k, required_k=required_moment_index(case))
    logs = {name: [] for name in RATIO_NAMES}

    for n in grid:
        bal = m_star(n, b, omega, upsilon)
        m, delta = bal.m_star, bal.delta_star
        with np.errstate(divide='ignore'):
            sup_ratio = float(np.max(omega.values(m) / upsilon.values(m)))
        log_m, log_n, log_delta = math.log(m), math.log(n), math.log(delta)
        log_r = {
            'ratio_moment': 2 * k * log_m - log_delta - k * log_n,
            'ratio_variance': log_m - log_delta - log_n + math.log(sup_ratio),
            'ratio_dimension': (2 + k) * log_m - (k / 2.0 - 1.0) * log_n,
        }
        for name in RATIO_NAMES:
            logs[name].append(log_r[name])
        report.rows.append(SideConditionRow(
            n=n, m_star=m, delta_star=delta,
            ratio_moment=math.exp(log_r['ratio_moment']),
            ratio_variance=math.exp(log_r['ratio_variance']),
            ratio_dimension=math.exp(log_r['ratio_dimension']),
        ))

    third = max(1, len(grid) // 3)
    for name in RATIO_NAMES:
        values = np.asarray(logs[name])
        rise = float(np.mean(values[-third:]) - np.mean(values[:third]))
        report.growing[name] = rise > math.log(growth_factor)
        report.maxima[name] = float(np.exp(np.max(values)))

    if report.verdict == "warn":
        logger.warning(f"Side condition shows growth for k={k}: "
                       f"{[name for name, g in report.growing.items() if g]}")
    return report


class FitAxis(Enum):
    LOG_N = "log_n"
    LOG_LOG_N = "log_log_n"


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    axis: FitAxis = FitAxis.LOG_N


def fit_rate(n_grid: Sequence[float], mean_risks: Sequence[float],
             axis: FitAxis = FitAxis.LOG_N) -> RateFit:
    """Least squares of log(risk) on log(n) (or log log n); the slope is the empirical exponent"""
    n = np.asarray(n_grid, dtype=float)
    risks = np.asarray(mean_risks, dtype=float)
    if n.size != risks.size:
        raise DomainError(f"{n.size} grid points but {risks.size} risks")
    if n.size < 3:
        raise DomainError("Rate fit needs at least 3 grid points")
    if np.any(risks <= 0):
        raise DomainError("Rate fit needs strictly positive risks")

    x = np.log(n)
    if axis == FitAxis.LOG_LOG_N:
        if np.any(n <= math.e):
            raise DomainError("log log n axis needs n > e")
        x = np.log(x)
    y = np.log(risks)

    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = np.sum((y - fitted) ** 2)
    ss_tot = np.sum((y - np.mean(y)) ** 2)
    r_squared = 1 - ss_res / ss_tot if ss_tot > 0 else 1.0

    return RateFit(slope=float(slope), intercept=float(intercept),
                   r_squared=float(r_squared), axis=axis)


# Dimension and threshold rules

DIMENSION_RULES = ("m_star", "n^{1/(2p+2a+1)}", "2*n^{1/(2p+2a+1)}+1", "(log n)^{1/(2a)}")
THRESHOLD_RULES = ("n", "8d3_over_upsilon_m", "balanced")


def resolve_dimension(rule: Union[int, str], n: int, case: RateCase) -> int:
    """Dimension m for sample size n under a rule from DIMENSION_RULES or an explicit integer"""
    if isinstance(rule, bool):
        raise DomainError(f"Invalid dimension rule {rule!r}")
    if isinstance(rule, (int, np.integer)):
        if rule < 1:
            raise DomainError(f"Explicit dimension must be >= 1, got {rule}")
        return int(rule)
    if rule == "m_star":
        return m_star(n, case.b(), case.omega(), case.upsilon()).m_star
    if rule == "n^{1/(2p+2a+1)}":
        return max(1, math.ceil(n ** (1.0 / (2 * case.p + 2 * case.a + 1))))
    if rule == "2*n^{1/(2p+2a+1)}+1":
        # frequencies -k..k of the complex exponential basis span the first 2k+1 real functions
        return 2 * math.ceil(n ** (1.0 / (2 * case.p + 2 * case.a + 1))) + 1
    if rule == "(log n)^{1/(2a)}":
        return max(1, math.ceil(math.log(n) ** (1.0 / (2 * case.a))))
    raise DomainError(f"Unknown dimension rule {rule!r}; expected an integer or one of {DIMENSION_RULES}")


def resolve_threshold(rule: Union[float, str], n: int, m: int, d: float,
                      case: RateCase) -> float:
    """Threshold gamma for sample size n and dimension m"""
    if isinstance(rule, bool):
        raise DomainError(f"Invalid threshold rule {rule!r}")
    if isinstance(rule, (int, float, np.number)):
        if not rule > 0:
            raise DomainError(f"Explicit threshold must be positive, got {rule}")
        return float(rule)
    if rule == "n":
        return float(n)
    if rule == "8d3_over_upsilon_m":
        upsilon_m = case.upsilon().w(m)
        gamma = 8.0 * d ** 3 / upsilon_m
        if not math.isfinite(gamma):
            raise DomainError(f"Threshold 8d^3/upsilon_m overflows at m={m} (upsilon_m={upsilon_m:.3g})")
        return gamma
    if rule == "balanced":
        bal = m_star(n, case.b(), case.omega(), case.upsilon())
        return float(n) * max(1.0, 8.0 * d ** 3 * bal.achieved_delta / case.b().w(bal.m_star))
    raise DomainError(f"Unknown threshold rule {rule!r}; expected a number or one of {THRESHOLD_RULES}")


def consistency_diagnostics(n_grid: Sequence[int], dims: Sequence[int], gammas: Sequence[float],
                            omega: WeightSequence, eigenvalues: np.ndarray) -> List[str]:
    """Soft checks of the growth conditions behind consistency

    gamma * (m/n) * sup omega_j, m^2/n and gamma^2 m^3 / n^{3/2} should not grow
    along the grid, and gamma should dominate 2 ||[Gamma]_m^{-1}||.
    """
    findings = []
    n = np.asarray(n_grid, dtype=float)
    m = np.asarray(dims, dtype=float)
    g = np.asarray(gammas, dtype=float)
    if n.size < 2:
        return findings

    sup_omega = np.array([np.max(omega.values(int(mi))) for mi in m])
    quantities = {
        'gamma*(m/n)*sup(omega)': g * m / n * sup_omega,
        'm^2/n': m ** 2 / n,
        'gamma^2*m^3/n^1.5': g ** 2 * m ** 3 / n ** 1.5,
    }
    for name, values in quantities.items():
        if values[-1] > values[0]:
            findings.append(f"{name} grows from {values[0]:.3g} to {values[-1]:.3g} over the grid")

    for ni, mi, gi in zip(n, m, g):
        with np.errstate(divide='ignore', over='ignore'):
            needed = float(2.0 / np.min(eigenvalues[:int(mi)]))
        if gi < needed:
            findings.append(f"gamma={gi:.3g} < 2||[Gamma]_m^-1||={needed:.3g} at n={ni:g}, m={int(mi)}")

    for finding in findings:
        logger.warning(f"Consistency growth condition: {finding}")
    return findings
