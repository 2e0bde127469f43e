"""
Shared fixtures for the flm_threshold test suite
"""

import numpy as np
import pytest

from flm_threshold.analysis.basis import WeightSequence
from flm_threshold.analysis.model import ProcessSpec, Sample, SlopeSpec, make_slope, simulate_sample
from flm_threshold.core.config_manager import ExperimentConfig


@pytest.fixture
def poly_proc():
    """PolyDecay(a=1) design with J=16 and sigma=0.5"""
    return ProcessSpec(decay=WeightSequence.poly_decay(1.0), truncation=16, sigma=0.5)


@pytest.fixture
def smooth_beta(poly_proc):
    return make_slope(SlopeSpec(p=1.0, rho=1.0), poly_proc.truncation)


@pytest.fixture
def poly_sample(poly_proc, smooth_beta):
    return simulate_sample(poly_proc, smooth_beta, 500, seed=7)


@pytest.fixture
def tiny_sample():
    """n=1, x_1 = e_1, y_1 = 2"""
    return Sample(y=np.array([2.0]), x=np.array([[1.0, 0.0, 0.0]]))


@pytest.fixture
def small_config():
    """Fast configuration: short grid, few replications, J=16"""
    config = ExperimentConfig(name="small")
    config.process.truncation = 16
    config.estimator.m = 3
    config.experiment.n_grid = [100, 200, 400]
    config.experiment.replications = 4
    config.experiment.lowerbound_replications = 2
    return config
