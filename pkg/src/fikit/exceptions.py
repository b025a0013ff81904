"""Exception hierarchy."""


class FikitError(Exception):
    """Base class for all errors raised by fikit."""


class InvalidArgumentError(FikitError, ValueError):
    pass


class MetricUndefinedError(FikitError):
    """The input does not define a finite metric (e.g. disconnected graph)."""


class InvalidMetricError(FikitError, ValueError):
    """A distance matrix fails symmetry, positivity or the triangle inequality."""


class EmptyNeighborhoodError(FikitError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"point {point} has an empty neighborhood")


class DomainTruncationError(FikitError):
    """The supremum of a numeric Legendre transform sits on the grid boundary."""

    def __init__(self, u):
        self.u = u
        super().__init__(
            f"maximizer for slope u={u!r} hits v_max; enlarge the sample grid")


class UnsupportedError(FikitError):
    pass


class UndefinedEntropyError(FikitError, ValueError):
    pass


class AbsoluteContinuityError(FikitError, ValueError):
    def __init__(self, points):
        self.points = list(points)
        super().__init__(
            f"measure charges points where the reference measure vanishes: "
            f"{self.points[:10]}")


class CertificationError(FikitError):
    """The transport solver did not close the duality gap."""

    def __init__(self, gap, tol):
        self.gap = gap
        self.tol = tol
        super().__init__(f"duality gap {gap:.3e} exceeds {tol:.1e}")


class NoInformationError(FikitError):
    pass
