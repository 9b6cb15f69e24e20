"""Exception hierarchy shared by every module of the package."""


class SlitQubitError(Exception):
    """Base class for all package errors."""


class DimensionError(SlitQubitError, ValueError):
    """Operands have incompatible dimensions."""


class GeometryError(SlitQubitError, ValueError):
    """The optical geometry is invalid or unusable for the requested operation."""


class FocalPlaneSingularity(GeometryError):
    """The detector sits in the focal plane (z = f) where R diverges."""


class ImagePlaneSingularity(GeometryError):
    """The detector sits in the image plane (R = 0) where K diverges."""


class QuadratureError(SlitQubitError, ArithmeticError):
    """Adaptive quadrature did not reach its tolerance."""


class TomographyError(SlitQubitError, ValueError):
    """Reconstruction input is malformed or the inversion is ill-posed."""


class RankDeficientFrame(TomographyError):
    """Measurement effects do not span the operator space."""


class FitError(TomographyError):
    """Least-squares fit failed or the scan carries no information."""
