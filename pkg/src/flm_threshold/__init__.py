"""
Thresholded Galerkin Estimation for the Functional Linear Model
"""

__version__ = "1.0.0"
__author__ = "FLM Threshold Development Team"
__description__ = "Thresholded projection estimator, simulation and rate verification for functional linear regression"
