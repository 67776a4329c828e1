"""Exception types raised by the geometry, solver, and charge pipelines."""


class StcmcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StcmcError):
    """Invalid provider spec, run configuration, or CLI arguments."""


class PointInsideCore(StcmcError):
    """Evaluation point lies inside the inner chart radius of the data provider."""


class HorizonReached(StcmcError):
    """Schwarzschild areal radius at or below 2m for positive mass."""


class SliceNotSpacelike(StcmcError):
    """Graphical slice fails 1 - N^2 |dT|^2 > 0 at an evaluation point."""


class SingularMetric(StcmcError):
    """Metric is not invertible at an evaluation point."""


class BandLimitTooSmall(StcmcError):
    """Requested spherical-harmonic band limit below the supported minimum."""


class ShapeMismatch(StcmcError):
    """Nodal array or coefficient vector has the wrong shape for the grid."""


class NonpositiveRadius(StcmcError):
    """Radius argument must be positive."""


class DegenerateInducedMetric(StcmcError):
    """Induced surface metric is degenerate at a node."""


class TrappedRegion(StcmcError):
    """H^2 < P^2 somewhere: the spacetime mean curvature is not real."""


class NewtonDiverged(StcmcError):
    """Residual increased under full and damped Newton steps."""


class MaxIterations(StcmcError):
    """Newton iteration limit reached without meeting the tolerance."""


class ContinuationStalled(StcmcError):
    """Homotopy step failed even after bisection refinement of the step size."""


class EigenSolverFailure(StcmcError):
    """Generalized symmetric eigensolve did not converge."""


class InsufficientLeaves(StcmcError):
    """Foliation limit extrapolation needs at least three leaves."""


class ZeroEnergy(StcmcError):
    """Center-of-mass integrals are undefined for vanishing energy."""


class SpacelikeEnergyMomentum(StcmcError):
    """Energy-momentum vector is spacelike: |P| exceeds E."""


class NotOrthogonal(StcmcError):
    """Matrix is not orthogonal to machine precision."""


class FoliationNotSupported(StcmcError):
    """Graph-equation residual supports only the flat polar background."""
