"""Random-weighting inference for LASSO regression."""

__version__ = "0.1.0"

from .estimators import RandomWeightingLasso, ResidualBootstrapLasso, WeightedLasso  # noqa: E402

__all__ = ["RandomWeightingLasso", "ResidualBootstrapLasso", "WeightedLasso", "__version__"]
