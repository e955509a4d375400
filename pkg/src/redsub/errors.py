"""Exception hierarchy shared by all modules."""


class RedsubError(Exception):
    """Base class for every error raised by this package."""


class NotContained(RedsubError):
    """A lattice that was required to be a sublattice is not contained."""


class OrderValidationError(RedsubError):
    """An order or its normalization fails a structural check."""


class NotAssociative(OrderValidationError):
    pass


class NotCommutative(OrderValidationError):
    pass


class BadUnit(OrderValidationError):
    pass


class EmbeddingNotRingMap(OrderValidationError):
    pass


class EmbeddingNotInjective(OrderValidationError):
    pass


class InfiniteCokernel(OrderValidationError):
    pass


class InvalidComponent(OrderValidationError):
    """Defining polynomial reducible, or the given basis is not a ring."""


class IndexDivisible(RedsubError):
    """The prime divides [O_j : Z[theta]], so Kummer-Dedekind does not apply."""


class NoSolution(RedsubError):
    """An integer system that must be solvable had no solution."""


class ModuleValidationError(RedsubError):
    """Action matrices do not define a module over the order."""


class TorsionElement(RedsubError):
    pass


class AlreadyLocalMember(RedsubError):
    """x already lies in M tensor Z_(p); no separating projection exists."""


class HypothesisFailed(RedsubError):
    """``which`` is the first failing hypothesis, ``failed`` lists all of them."""

    def __init__(self, which, detail="", failed=None):
        self.which = which
        self.failed = tuple(failed) if failed else (which,)
        msg = f"hypothesis ({which}) does not hold"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class BadReduction(RedsubError):
    pass


class PrimeTooLarge(RedsubError):
    pass


class StructureSearchExhausted(RedsubError):
    pass


class ConfigError(RedsubError):
    pass


class ContradictionError(RedsubError):
    """A good prime separates x from Sigma although x lies in Sigma."""
