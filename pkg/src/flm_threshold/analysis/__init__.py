"""
Functional Linear Model Analysis Module
=======================================

Numerical core of the package:
- Trigonometric basis, weight sequences and weighted norms
- Data-generating process and Assouad worst-case slopes
- Thresholded Galerkin estimator and derivative estimator
- Risk functionals and the Monte Carlo experiment engine
- Balancing rule, theoretical exponents and rate fitting
"""

from .basis import CoefficientVector, WeightKind, WeightSequence
from .estimator import EstimateResult, derivative_estimate, threshold_estimate
from .model import ProcessSpec, Sample, SlopeSpec, simulate_sample
from .rates import RateCase, m_star, theoretical_exponent
from .risk import ExperimentRunner, RiskReport, run_experiment

__all__ = [
    'CoefficientVector',
    'WeightKind',
    'WeightSequence',
    'EstimateResult',
    'derivative_estimate',
    'threshold_estimate',
    'ProcessSpec',
    'Sample',
    'SlopeSpec',
    'simulate_sample',
    'RateCase',
    'm_star',
    'theoretical_exponent',
    'ExperimentRunner',
    'RiskReport',
    'run_experiment',
]
