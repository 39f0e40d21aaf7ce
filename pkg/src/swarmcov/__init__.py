"""Coverage error metric for robot swarms and its two benchmarks."""

from .domain import (GaussianMixtureDensity, GridDensity, QuadratureGrid, RectDomain,
                     RingDensity, ScaledKernel, SwarmConfig, TargetDensity, UniformDensity,
                     density_mass, sample_positions, scaled_kernel_eval)
from .metric import (BlobField, MetricResult, Partition, TrajectorySeries, blob_function,
                     boundary_mass, cumulative_error, discretization_metric, error_metric)
from .extrema import (ExtremaResult, OptimizerSettings, design_sweep, local_minimize,
                      multistart_extrema, objective_subgradient, relative_error)
from .pdf_bench import (ErfFit, ErrorSampleSet, empirical_cdf, fit_erf_cdf,
                        monte_carlo_samples, normality_diagnostics, pdf_from_fit)
from .stats import (ExpFit, SteadyStateSummary, TestReport, f_test, fit_exponential,
                    mean_diff_ci, steady_state_stats, t_test)
from .sim import ControllerParams, error_time_series, run_trajectory

__version__ = "0.1.0"
