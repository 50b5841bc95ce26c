"""Exception types raised across the package."""


class DomainError(ValueError):
    """A score or parameter lies outside the admissible domain of a potential."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given input (e.g. zero total attribution)."""


class ScorerError(RuntimeError):
    """A segment scorer failed inside the refinement recursion."""

    def __init__(self, depth, cause):
        super().__init__(f"scorer failed at depth {depth}: {cause!r}")
        self.depth = depth
