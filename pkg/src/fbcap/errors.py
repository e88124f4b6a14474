"""Exception hierarchy shared by all fbcap modules."""


class FbcapError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FbcapError):
    """Matrix dimensions are inconsistent with the declared sizes."""


class NotPSD(FbcapError):
    """A matrix that must be positive semidefinite is not."""


class InfiniteCapacity(FbcapError):
    """The noise model makes the channel capacity infinite (singular V)."""


class UnstableModel(FbcapError):
    """Operation requires a stationary noise model (spectral radius < 1)."""


class SingularInnovation(FbcapError):
    """Innovation covariance is singular; capacity is infinite."""


class NoConvergence(FbcapError):
    """An iterative solver exceeded its iteration budget."""


class NotScalar(FbcapError):
    """Operation is defined for scalar channels only."""


class OutOfRange(FbcapError):
    """Argument outside the domain of the requested formula."""


class NotPSDAfterClip(FbcapError):
    """Extracted covariance has eigenvalues below the clipping floor."""


class Infeasible(FbcapError):
    """The optimization problem has no feasible point."""


class SolverStall(FbcapError):
    """The optimizer stopped making progress before reaching tolerance."""


class SingularPsiY(FbcapError):
    """Output innovation covariance is singular in the smoother."""


class PowerViolationWarning(UserWarning):
    """Empirical average power exceeded the budget by more than 5%."""
