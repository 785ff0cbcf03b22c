"""Exception types shared across the library.

Everything raised on purpose derives from :class:`SysidlabError`, so callers
(in particular the CLI) can distinguish domain failures from genuine bugs.
"""

from __future__ import annotations


class SysidlabError(Exception):
    """Base class for all library-level errors."""


class DimensionError(SysidlabError, ValueError):
    """Matrix/vector shapes are incompatible."""


class ExplosiveSpectralRadiusError(SysidlabError, ValueError):
    """Spectral radius of the dynamics exceeds the non-explosive limit."""


class InputMapRankError(SysidlabError, ValueError):
    """Input matrix B is rank deficient (not full column rank)."""


class NoiseMapRankError(SysidlabError, ValueError):
    """Noise matrix H is rank deficient (not full column rank)."""


class RankDeficientRegressionError(SysidlabError, ValueError):
    """Unregularized least squares hit a singular Gram matrix."""


class KlFactorizationError(SysidlabError, ValueError):
    """System pair violates the column-space condition the trajectory KL
    computation requires (A1 - A2 must factor through the noise map H)."""


class ModelFormatError(SysidlabError, ValueError):
    """A model file could not be parsed."""


class ConfigError(SysidlabError, ValueError):
    """An experiment config file could not be parsed."""
