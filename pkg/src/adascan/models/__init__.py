"""Built-in hierarchical models pluggable into the scan core."""

from .blasso import BayesianLassoProbit, BlassoState
from .dpmm import DpmmState, DpNormalMixture, NiwPrior
from .lda import LdaState, LdaTopicModel

__all__ = [
    "BayesianLassoProbit",
    "BlassoState",
    "DpNormalMixture",
    "DpmmState",
    "LdaState",
    "LdaTopicModel",
    "NiwPrior",
]
