"""Exception hierarchy shared by every module of the package."""


class ResolventLabError(Exception):
    """Base class for all library errors."""


class EmptyMeasure(ResolventLabError, ValueError):
    pass


class NegativeMass(ResolventLabError, ValueError):
    pass


class OutsideDisk(ResolventLabError, ValueError):
    pass


class BadOrder(ResolventLabError, ValueError):
    pass


class NotProbability(ResolventLabError, ValueError):
    pass


class BadQ(ResolventLabError, ValueError):
    pass


class BadClass(ResolventLabError, ValueError):
    pass


class BelowThreshold(ResolventLabError, ValueError):
    pass


class ThetaOutOfRange(ResolventLabError, ValueError):
    pass


class PoleOrNegative(ResolventLabError, ArithmeticError):
    pass


class BranchAmbiguous(ResolventLabError, ArithmeticError):
    pass


class WindingAmbiguous(ResolventLabError, ArithmeticError):
    pass


class OutsideDomain(ResolventLabError, ValueError):
    pass


class NoConvergence(ResolventLabError, RuntimeError):
    """Newton continuation exhausted its subdivision budget."""

    def __init__(self, message, z=None, node=None):
        super().__init__(message)
        self.z = z
        self.node = node


class DomainEscape(ResolventLabError, RuntimeError):
    """A computation needed a point outside the domain of the generator.

    ``configuration_error`` is set when the escape happens within the first
    two integrator steps, which points at a bad ray or start point rather
    than a genuine boundary crossing.
    """

    def __init__(self, message, s=None, u=None, step_index=None, indices=None):
        super().__init__(message)
        self.s = s
        self.u = u
        self.step_index = step_index
        self.indices = indices

    @property
    def configuration_error(self):
        return self.step_index is not None and self.step_index <= 2


class StepUnderflow(ResolventLabError, RuntimeError):
    pass
