"""Exception hierarchy shared by all modules."""


class GNNQSError(Exception):
    """Base class for every error raised by this package."""


class NonCommensurate(GNNQSError, ValueError):
    """Periodicity vectors do not span an integral number of unit cells."""


class SiteCountMismatch(GNNQSError, ValueError):
    pass


class PatternIncompatible(GNNQSError, ValueError):
    """Sublattice pattern cannot be laid on the cluster's torus."""


class LengthMismatch(GNNQSError, ValueError):
    pass


class ShapeMismatch(GNNQSError, ValueError):
    pass


class SectorTooLarge(GNNQSError, ValueError):
    pass


class Polarized(GNNQSError, ValueError):
    """No pair of opposite spins exists to exchange."""


class TooFewSamples(GNNQSError, ValueError):
    pass


class DegenerateOverlap(GNNQSError, ArithmeticError):
    """The mean ratio between target and current state vanished."""


class Diverged(GNNQSError, RuntimeError):
    """Training produced non-finite parameters or repeated degenerate overlaps."""
