"""Exception types raised at API boundaries."""


class FnlsError(Exception):
    """Base class for all package errors."""


class InvalidGrid(FnlsError):
    """Grid construction rejected (odd or too-small M, nonpositive extent, overflow)."""


class InvalidModel(FnlsError):
    """Model parameters outside the admissible nonlinearity window."""


class InvalidOrder(FnlsError):
    """Fractional order outside (0, 1]."""


class InvalidExponent(FnlsError):
    """Riesz exponent outside (0, N)."""


class GridMismatch(FnlsError):
    """Operands live on different grids."""


class ZeroField(FnlsError):
    """Operation undefined for the zero field."""


class ScalePrecisionLoss(FnlsError):
    """Spectral rescaling lost more mass than the admissible drift."""


class DegenerateInit(FnlsError):
    """Initial guess has (numerically) zero mass."""


class NotCritical(FnlsError):
    """Field fails the residual gate for multiplier recovery."""


class Diverged(FnlsError):
    """Fixed-point iteration residual grew for too many consecutive steps."""


class CutoffTooLarge(FnlsError):
    """Virial cutoff support does not fit inside the periodic box."""


class NonFinite(FnlsError):
    """NaN or Inf encountered in field data."""
