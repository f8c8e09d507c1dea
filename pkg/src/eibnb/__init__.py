"""Sequential design toolkit: GP surrogates, feature-specific expected
improvement, and branch-and-bound / genetic-algorithm EI maximizers."""

from eibnb.criteria import BestEstimates, FeatureTarget, PredBox
from eibnb.gp import DesignData, GPFit, GPParams, fit_mle, predict
from eibnb.testbed import TestFunction, branin_function, levy_function

__all__ = [
    "BestEstimates",
    "DesignData",
    "FeatureTarget",
    "GPFit",
    "GPParams",
    "PredBox",
    "TestFunction",
    "branin_function",
    "levy_function",
    "fit_mle",
    "predict",
]
