"""Coverage probability error and isotonic recalibration for Gaussian gaze predictions."""

from gazecal._validation import InsufficientDataError
from gazecal.calibration import (
    CalibratedPredictor,
    IsotonicRecalibrator,
    build_recalibration_points,
    calibrated_median,
    calibrated_quantile,
    fit_calibrator,
    pit_values,
)
from gazecal.distributions import (
    GaussianMarginal,
    gaussian_cdf,
    gaussian_quantile,
    std_normal_cdf,
    std_normal_quantile,
)
from gazecal.isotonic import MonotoneMap, pava_fit
from gazecal.metrics import (
    CIQuery,
    angular_error,
    coverage_curve,
    cpe,
    empirical_coverage,
    error_uncertainty_correlation,
    gaussian_quantile_function,
    inclusion_rate,
)
from gazecal.predictions import AngularPair, LabeledPrediction, PredictionSet, QuantileSet
from gazecal.synth import SynthConfig, generate_scenario, scenario
from gazecal.toytrain import HeteroscedasticRegressor, QuantilePairRegressor

__version__ = "0.1.0"
