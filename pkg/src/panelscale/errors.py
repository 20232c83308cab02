"""Exception hierarchy.

Input/format problems map to CLI exit code 2, numerical degeneracies to 3.
"""


class PanelScaleError(Exception):
    """Base class for all library errors."""


class PanelFormatError(PanelScaleError):
    """Malformed input data: CSV parse failures, ragged series, bad shapes."""


class GridError(PanelScaleError):
    """Infeasible or empty location-bandwidth grid."""


class QuantileError(PanelScaleError):
    """Too few Monte Carlo draws for the requested quantile."""


class SingularDesignError(PanelScaleError):
    """Localized design matrix not invertible (condition guard tripped)."""


class DegenerateCovarianceError(PanelScaleError):
    """Long-run covariance matrix too close to singular to normalize with."""
