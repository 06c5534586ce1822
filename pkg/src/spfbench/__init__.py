"""Training frameworks for long-horizon autoregressive latent surrogates."""
from . import metrics, noise, nn, physics, reduction, surrogate, trainers
from .errors import (ConfigError, DimensionError, DivergenceError, FormatError, NumericError,
                     SpfError)

__version__ = "0.1.0"

__all__ = ["metrics", "noise", "nn", "physics", "reduction", "surrogate", "trainers",
           "ConfigError", "DimensionError", "DivergenceError", "FormatError", "NumericError",
           "SpfError", "__version__"]
