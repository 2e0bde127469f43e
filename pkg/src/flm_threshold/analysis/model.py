#!/usr/bin/env python3
"""
Data-Generating Process
=======================

Simulation of the functional linear model Y = <beta, X> + sigma * eps:
- Gaussian regressors with eigenbasis = trigonometric basis and prescribed decay
- Slope functions inside Sobolev ellipsoids
- Error laws (Gaussian, variance-normalized Student-t)
- Worst-case slopes of the Assouad cube used for the lower bound
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..core.exceptions import DimensionError, DomainError, EllipsoidError
from .basis import CoefficientVector, WeightSequence, weighted_norm_sq

logger = logging.getLogger(__name__)

# Relative slack when checking ellipsoid and Assouad inequalities
RELATIVE_TOLERANCE = 1e-12
SMOOTH_DEFAULT_FILL = 0.9
MIN_STUDENT_DF = 17


class LinkPattern(Enum):
    """Pattern of the link factors c_j = lambda_j / upsilon_j"""
    CONSTANT = "constant"        # c_j = 1
    ALTERNATING = "alternating"  # c_j = d for odd j, 1/d for even j


class ErrorKind(Enum):
    """Error distributions, all centered with unit variance"""
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"


@dataclass(frozen=True)
class ErrorLaw:
    """Law of the standardized error term"""
    kind: ErrorKind = ErrorKind.GAUSSIAN
    df: Optional[float] = None

    def __post_init__(self):
        if self.kind == ErrorKind.STUDENT_T:
            if self.df is None or self.df < MIN_STUDENT_DF:
                raise DomainError(
                    f"Student-t errors need df >= {MIN_STUDENT_DF} for 16 finite moments, got {self.df}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == ErrorKind.GAUSSIAN:
            return rng.standard_normal(n)
        scale = math.sqrt(self.df / (self.df - 2.0))
        return rng.standard_t(self.df, size=n) / scale

    def describe(self) -> str:
        if self.kind == ErrorKind.GAUSSIAN:
            return "gaussian"
        return f"student_t(df={self.df:g})"


@dataclass(frozen=True)
class ProcessSpec:
    """Gaussian regressor design and noise model"""
    decay: WeightSequence
    truncation: int
    sigma: float = 1.0
    d: float = 1.0
    link_pattern: LinkPattern = LinkPattern.CONSTANT
    error_law: ErrorLaw = field(default_factory=ErrorLaw)

    def __post_init__(self):
        if self.d < 1.0:
            raise DomainError(f"Link constant d must be >= 1, got {self.d}")
        if self.sigma < 0:
            raise DomainError(f"Noise level sigma must be nonnegative, got {self.sigma}")
        if self.truncation < 1:
            raise DimensionError(f"Truncation J must be >= 1, got {self.truncation}")

    def link_factors(self) -> np.ndarray:
        """c_j for j = 1..J"""
        J = self.truncation
        if self.link_pattern == LinkPattern.CONSTANT:
            return np.ones(J)
        j = np.arange(1, J + 1)
        return np.where(j % 2 == 1, self.d, 1.0 / self.d)

    def upsilon(self) -> np.ndarray:
        return self.decay.values(self.truncation)

    def eigenvalues(self) -> np.ndarray:
        """lambda_j = c_j * upsilon_j for j = 1..J"""
        return self.link_factors() * self.upsilon()

    def link_ratios(self) -> np.ndarray:
        return self.eigenvalues() / self.upsilon()

    def satisfies_link_condition(self) -> bool:
        """1/d <= lambda_j / upsilon_j <= d for all j <= J"""
        ratios = self.link_ratios()
        return bool(np.all(ratios >= 1.0 / self.d) and np.all(ratios <= self.d))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'decay': self.decay.describe(),
            'truncation': self.truncation,
            'sigma': self.sigma,
            'd': self.d,
            'link_pattern': self.link_pattern.value,
            'error_law': self.error_law.describe(),
        }


class SlopeProfile(Enum):
    SMOOTH_DEFAULT = "smooth_default"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class SlopeSpec:
    """Slope function prior: smoothness p, ellipsoid radius rho and profile"""
    p: float
    rho: float
    profile: SlopeProfile = SlopeProfile.SMOOTH_DEFAULT
    coeffs: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.p < 0:
            raise DomainError(f"Smoothness p must be nonnegative, got {self.p}")
        if self.rho <= 0:
            raise DomainError(f"Ellipsoid radius rho must be positive, got {self.rho}")
        if self.profile == SlopeProfile.EXPLICIT:
            if self.coeffs is None:
                raise DomainError("Explicit slope profile needs coefficients")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
            norm = weighted_norm_sq(CoefficientVector(np.asarray(self.coeffs)),
                                    WeightSequence.sobolev(self.p))
            _check_ellipsoid(norm, self.rho, self.p)


def _check_ellipsoid(norm: float, rho: float, p: float):
    if norm > rho * (1.0 + RELATIVE_TOLERANCE):
        raise EllipsoidError(
            f"Slope outside W_p^rho: sum b_j^p [beta]_j^2 = {norm:.6g} > rho = {rho:g} (p={p:g})")


@dataclass
class Sample:
    """n observations: responses y and regressor coefficients x[i, j-1] = [X_i]_j"""
    y: np.ndarray
    x: np.ndarray
    seed: Optional[int] = None
    spec: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if self.y.size < 1:
            raise DimensionError("Sample needs n >= 1 observations")
        if self.x.shape[0] != self.y.size:
            raise DimensionError(f"x has {self.x.shape[0]} rows but y has {self.y.size} entries")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.x))):
            raise DomainError("Sample contains non-finite entries")

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def truncation(self) -> int:
        return int(self.x.shape[1])


def derive_seed(master_seed: int, replication: int) -> int:
    """Seed of replication r: SHA-256 of "master:r", first 8 bytes, 63 bits"""
    digest = hashlib.sha256(f"{int(master_seed)}:{int(replication)}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


def make_slope(spec: SlopeSpec, J: int) -> CoefficientVector:
    """Slope coefficients inside W_p^rho"""
    if J < 3:
        raise DimensionError(f"Slope construction needs J >= 3, got {J}")
    sobolev = WeightSequence.sobolev(spec.p)

    if spec.profile == SlopeProfile.EXPLICIT:
        coeffs = np.asarray(spec.coeffs, dtype=float)
        if coeffs.size > J:
            raise DimensionError(f"Explicit slope has {coeffs.size} coefficients, truncation is {J}")
        padded = np.zeros(J)
        padded[:coeffs.size] = coeffs
        beta = CoefficientVector(padded)
        _check_ellipsoid(weighted_norm_sq(beta, sobolev), spec.rho, spec.p)
        return beta

    raw = np.zeros(J)
    raw[0] = 1.0
    k = np.arange(1, J // 2 + 1)
    raw[2 * k - 1] = k ** (-(spec.p + 1.0))
    norm = weighted_norm_sq(CoefficientVector(raw), sobolev)
    scale = math.sqrt(SMOOTH_DEFAULT_FILL * spec.rho / norm)
    beta = CoefficientVector(scale * raw)

    _check_ellipsoid(weighted_norm_sq(beta, sobolev), spec.rho, spec.p)
    logger.debug(f"Smooth slope built: J={J}, p={spec.p:g}, rho={spec.rho:g}, c={scale:.6g}")
    return beta


def simulate_sample(proc: ProcessSpec, beta: CoefficientVector, n: int, seed: int,
                    mirror_noise: bool = False) -> Sample:
    """Draw n observations of the model

    Regressors are drawn first (n x J, row-major), then errors. With
    mirror_noise the error draws are negated, so a slope -beta with the same
    seed yields exactly the negated responses.
    """
    if n < 1:
        raise DimensionError(f"Sample size must be >= 1, got {n}")
    if beta.truncation != proc.truncation:
        raise DimensionError(
            f"Slope truncation {beta.truncation} differs from process truncation {proc.truncation}")

    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((n, proc.truncation))
    x = xi * np.sqrt(proc.eigenvalues())
    eps = proc.error_law.draw(rng, n)
    if mirror_noise:
        eps = -eps
    y = x @ beta.coeffs + proc.sigma * eps

    return Sample(y=y, x=x, seed=int(seed), spec=proc.to_dict())


def assouad_zeta(sigma: float, d: float, rho: float, Delta: float) -> float:
    """zeta = min(sigma^2 / (2d), rho / Delta)"""
    return min(sigma ** 2 / (2.0 * d), rho / Delta)


def assouad_slope(theta: Sequence[int], n: int, decay: WeightSequence, sigma: float,
                  d: float, rho: float, Delta: float,
                  truncation: Optional[int] = None) -> CoefficientVector:
    """beta^theta = sum_{j <= m*} theta_j u_j psi_j with u_j^2 = zeta / (n upsilon_j)"""
    theta = np.asarray(theta)
    if theta.ndim != 1 or theta.size < 1:
        raise DimensionError("Sign vector must be a nonempty 1-d sequence")
    if not np.all(np.isin(theta, (-1, 1))):
        raise DomainError("Sign vector entries must be -1 or +1")
    if Delta < 1:
        raise DomainError(f"Delta must be >= 1, got {Delta}")
    m_star = theta.size
    J = m_star if truncation is None else truncation
    if J < m_star:
        raise DimensionError(f"Truncation {J} shorter than sign vector length {m_star}")

    zeta = assouad_zeta(sigma, d, rho, Delta)
    u = np.sqrt(zeta / (n * decay.values(m_star)))
    coeffs = np.zeros(J)
    coeffs[:m_star] = theta * u
    return CoefficientVector(coeffs)


@dataclass
class AssouadCheck:
    """The three inequalities satisfied by an Assouad slope"""
    noise_ratio_max: float      # max_j (2 n d / sigma^2) u_j^2 upsilon_j, must be <= 1
    ellipsoid_sum: float        # sum_{j<=m*} u_j^2 b_j, must be <= rho
    separation_sum: float       # sum_{j<=m*} u_j^2 omega_j
    separation_bound: float     # zeta * delta* / Delta
    rho: float

    @property
    def noise_ok(self) -> bool:
        return self.noise_ratio_max <= 1.0 + RELATIVE_TOLERANCE

    @property
    def ellipsoid_ok(self) -> bool:
        return self.ellipsoid_sum <= self.rho * (1.0 + RELATIVE_TOLERANCE)

    @property
    def separation_ok(self) -> bool:
        return self.separation_sum >= self.separation_bound * (1.0 - RELATIVE_TOLERANCE)

    @property
    def passed(self) -> bool:
        return self.noise_ok and self.ellipsoid_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            'noise_ratio_max': self.noise_ratio_max,
            'ellipsoid_sum': self.ellipsoid_sum,
            'separation_sum': self.separation_sum,
            'separation_bound': self.separation_bound,
            'noise_ok': self.noise_ok,
            'ellipsoid_ok': self.ellipsoid_ok,
            'separation_ok': self.separation_ok,
        }


def assouad_checks(slope: CoefficientVector, m_star: int, n: int, b: WeightSequence,
                   omega: WeightSequence, upsilon: WeightSequence, sigma: float, d: float,
                   rho: float, Delta: float, delta_star: float) -> AssouadCheck:
    """Evaluate the Assouad inequalities for a generated slope"""
    u_sq = slope.coeffs[:m_star] ** 2
    ups = upsilon.values(m_star)
    zeta = assouad_zeta(sigma, d, rho, Delta)
    noise = (2.0 * n * d / sigma ** 2) * u_sq * ups if sigma > 0 else np.full(m_star, np.inf)
    return AssouadCheck(
        noise_ratio_max=float(np.max(noise)),
        ellipsoid_sum=float(np.sum(u_sq * b.values(m_star))),
        separation_sum=float(np.sum(u_sq * omega.values(m_star))),
        separation_bound=zeta * delta_star / Delta,
        rho=rho,
    )


def lower_bound_value(sigma: float, d: float, rho: float, Delta: float, delta_star: float) -> float:
    """(1 / (4 Delta)) * zeta * delta*, the minimax lower bound reference"""
    return assouad_zeta(sigma, d, rho, Delta) * delta_star / (4.0 * Delta)


def moment_certificate(proc: ProcessSpec, k: int) -> Dict[str, Any]:
    """k-th absolute moment of the standardized regressor and error coordinates

    Standardized Gaussian coordinates have E|Z|^k = 2^{k/2} Gamma((k+1)/2) / sqrt(pi)
    for every k. Student-t membership is finite only for df > k and is taken
    as assumed rather than certified.
    """
    if k < 1:
        raise DomainError(f"Moment index must be >= 1, got {k}")
    gaussian_moment = 2.0 ** (k / 2.0) * math.gamma((k + 1) / 2.0) / math.sqrt(math.pi)
    if proc.error_law.kind == ErrorKind.GAUSSIAN:
        error_moment: Optional[float] = gaussian_moment
        certified = True
    else:
        df = proc.error_law.df
        error_moment = None if df <= k else _student_abs_moment(df, k)
        certified = False
    return {
        'k': k,
        'regressor_eta': gaussian_moment,
        'error_eta': error_moment,
        'error_certified': certified,
    }


def _student_abs_moment(df: float, k: int) -> float:
    # E|T|^k for T ~ t(df), rescaled to unit variance
    raw = (df ** (k / 2.0) * math.gamma((k + 1) / 2.0) * math.gamma((df - k) / 2.0)
           / (math.sqrt(math.pi) * math.gamma(df / 2.0)))
    return raw / (df / (df - 2.0)) ** (k / 2.0)
