#!/usr/bin/env python3
"""
Thresholded Galerkin Estimator
==============================

Projection estimation of the slope function:
- Empirical moment matrices [g_hat]_m and [Gamma_hat]_m
- Galerkin solve by a symmetric factorization
- Spectral-norm threshold rule (zero estimate off the threshold event)
- Estimator of the s-th weak derivative
- Population Galerkin solution for diagonal operators (bias oracle)
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg

from ..core.exceptions import DimensionError, DomainError
from .basis import CoefficientVector, derivative_transform
from .model import Sample

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096
SINGULAR_TOLERANCE = 1e-14
PSD_TOLERANCE = 1e-10


@dataclass
class MomentMatrices:
    """Empirical moments restricted to the first m basis functions"""
    g_hat: np.ndarray
    gamma_hat: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return int(self.g_hat.size)

    def is_psd(self) -> bool:
        eig = linalg.eigh(self.gamma_hat, eigvals_only=True)
        scale = max(float(np.max(np.abs(eig))), 0.0)
        return bool(eig[0] >= -PSD_TOLERANCE * scale)


@dataclass
class GalerkinSolution:
    """Solution of [Gamma_hat]_m b = [g_hat]_m, or a singularity flag"""
    coeffs: Optional[np.ndarray]
    sigma_min: float
    spectral_norm: float

    @property
    def singular(self) -> bool:
        return self.coeffs is None


@dataclass(eq=False)
class EstimateResult:
    """Output of the threshold estimator"""
    beta_hat: CoefficientVector
    m: int
    sigma_min: float
    omega_held: bool
    s: int = 0
    gamma: float = math.inf
    threshold_power: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'coefficients': self.beta_hat.to_list(),
            'm': self.m,
            'sigma_min': self.sigma_min,
            'omega_held': self.omega_held,
            's': self.s,
            'gamma': self.gamma if math.isfinite(self.gamma) else None,
            'threshold_power': self.threshold_power,
        }


def empirical_moments(sample: Sample, m: int, chunk_size: int = CHUNK_SIZE) -> MomentMatrices:
    """[g_hat]_l = mean(Y_i [X_i]_l), [Gamma_hat]_lj = mean([X_i]_l [X_i]_j)

    Sums run over fixed-size chunks in observation order, so the result does
    not depend on how the caller schedules work.
    """
    if m < 1:
        raise DimensionError(f"Dimension m must be >= 1, got {m}")
    if m > sample.truncation:
        raise DimensionError(f"Dimension m={m} exceeds truncation J={sample.truncation}")

    g = np.zeros(m)
    G = np.zeros((m, m))
    for start in range(0, sample.n, chunk_size):
        xc = sample.x[start:start + chunk_size, :m]
        yc = sample.y[start:start + chunk_size]
        g += xc.T @ yc
        G += xc.T @ xc

    g /= sample.n
    G /= sample.n
    G = 0.5 * (G + G.T)
    return MomentMatrices(g_hat=g, gamma_hat=G, n=sample.n)


def galerkin_solve(mom: MomentMatrices) -> GalerkinSolution:
    """Solve the projected normal equation; singular systems are flagged"""
    eig = linalg.eigh(mom.gamma_hat, eigvals_only=True)
    abs_eig = np.abs(eig)
    sigma_min = float(np.min(abs_eig))
    norm = float(np.max(abs_eig))

    if norm == 0.0 or sigma_min <= SINGULAR_TOLERANCE * norm:
        logger.debug(f"Singular Galerkin system: sigma_min={sigma_min:.3e}, norm={norm:.3e}")
        return GalerkinSolution(coeffs=None, sigma_min=sigma_min, spectral_norm=norm)

    try:
        factor = linalg.cho_factor(mom.gamma_hat, lower=True, check_finite=False)
        coeffs = linalg.cho_solve(factor, mom.g_hat, check_finite=False)
    except linalg.LinAlgError:
        # symmetric but indefinite input
        coeffs = linalg.solve(mom.gamma_hat, mom.g_hat, assume_a='sym')
    return GalerkinSolution(coeffs=np.asarray(coeffs), sigma_min=sigma_min, spectral_norm=norm)


def estimate_from_moments(mom: MomentMatrices, gamma: float, truncation: int,
                          threshold_power: int = 1) -> EstimateResult:
    """Apply the threshold rule to given moments

    Omega holds when [Gamma_hat]_m is nonsingular and ||[Gamma_hat]_m^{-1}||^power <= gamma,
    with the inverse norm taken as 1 / sigma_min.
    """
    if not gamma > 0:
        raise DomainError(f"Threshold gamma must be positive, got {gamma}")
    if threshold_power not in (1, 2):
        raise DomainError(f"threshold_power must be 1 or 2, got {threshold_power}")
    if mom.m > truncation:
        raise DimensionError(f"Dimension m={mom.m} exceeds truncation J={truncation}")

    solution = galerkin_solve(mom)
    omega_held = False
    coeffs = np.zeros(truncation)

    if not solution.singular:
        inverse_norm = 1.0 / solution.sigma_min
        if inverse_norm ** threshold_power <= gamma:
            omega_held = True
            coeffs[:mom.m] = solution.coeffs

    return EstimateResult(
        beta_hat=CoefficientVector(coeffs),
        m=mom.m,
        sigma_min=solution.sigma_min,
        omega_held=omega_held,
        s=0,
        gamma=float(gamma),
        threshold_power=threshold_power,
    )


def threshold_estimate(sample: Sample, m: int, gamma: float,
                       threshold_power: int = 1) -> EstimateResult:
    """Thresholded projection estimate of the slope, embedded into a J-vector"""
    mom = empirical_moments(sample, m)
    return estimate_from_moments(mom, gamma, sample.truncation, threshold_power)


def derivative_estimate(sample: Sample, m: int, s: int, gamma: float,
                        threshold_power: int = 1) -> EstimateResult:
    """Estimate of the s-th weak derivative: threshold estimate, then coefficient transform"""
    estimate = threshold_estimate(sample, m, gamma, threshold_power)
    if s == 0:
        return estimate
    return replace(estimate, beta_hat=derivative_transform(estimate.beta_hat, s), s=int(s))


def oracle_galerkin(true_lambda: np.ndarray, true_beta: CoefficientVector, m: int) -> CoefficientVector:
    """Population Galerkin solution beta^m for a diagonal operator

    [Gamma]_m^{-1} [g]_m with g_j = lambda_j beta_j, zero beyond m.
    """
    J = true_beta.truncation
    if m < 0 or m > J:
        raise DimensionError(f"Dimension m={m} outside 0..{J}")
    lam = np.asarray(true_lambda, dtype=float)
    if lam.size < m:
        raise DimensionError(f"{lam.size} eigenvalues given, need {m}")

    coeffs = np.zeros(J)
    if m > 0:
        g = lam[:m] * true_beta.coeffs[:m]
        coeffs[:m] = g / lam[:m]
    return CoefficientVector(coeffs)


def population_inverse_norm(eigenvalues: np.ndarray, m: int) -> float:
    """||[Gamma]_m^{-1}|| of a diagonal operator"""
    return 1.0 / float(np.min(np.asarray(eigenvalues)[:m]))
