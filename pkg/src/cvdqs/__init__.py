"""Continuous-variable distributed quantum sensing with entangled RF-photonic networks."""

from .estimation import (
    DistributedSensingEstimator,
    EstimationReport,
    SensingTask,
    analytic_task_variance,
    build_unbiased_estimator,
    classical_baseline_variance,
    eq1_variance,
    optimum_separable_variance,
    run_task_monte_carlo,
    sweep_transmissivity,
)
from .gaussian import GaussianState, HomodyneSpec, vacuum
from .network import CircuitConfig, amplitudes_from_circuit, circuit_from_amplitudes, optimal_amplitudes, prepare_network_state
from .transduction import ArrayGeometry, RfScene, infer_source

__version__ = "0.1.0"
