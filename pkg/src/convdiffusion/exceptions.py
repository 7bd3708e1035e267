"""Exception hierarchy shared by every module of the package."""


class ConvDiffusionError(Exception):
    """Base class for all errors raised by convdiffusion."""


class HaloTooShallow(ConvDiffusionError, ValueError):
    pass


class DimensionMismatch(ConvDiffusionError, ValueError):
    pass


class ZeroDivisor(ConvDiffusionError, ZeroDivisionError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"zero divisor at (i, j) = {index}")


class NonPositiveSpacing(ConvDiffusionError, ValueError):
    pass


class NonPositiveDiagonal(ConvDiffusionError, ValueError):
    pass


class UnsupportedCombination(ConvDiffusionError, ValueError):
    pass


class BoundaryHomogeneityError(ConvDiffusionError, ValueError):
    pass


class OddDimensions(ConvDiffusionError, ValueError):
    pass


class IndivisibleDims(ConvDiffusionError, ValueError):
    pass


class ParseError(ConvDiffusionError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class InconsistentGroups(ConvDiffusionError, ValueError):
    pass


class NegativeCrossSection(ConvDiffusionError, ValueError):
    pass


class UnknownMaterial(ConvDiffusionError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown material"


class GridIndivisible(ConvDiffusionError, ValueError):
    pass


class NoFissileMaterial(ConvDiffusionError, ValueError):
    pass


class NonConvergence(ConvDiffusionError, RuntimeError):
    """Iteration budget exhausted.

    ``state`` carries whatever partial result the solver had, e.g. an
    :class:`~convdiffusion.multigroup.EigenSolveState` or a residual history.
    """

    def __init__(self, message, state=None):
        self.state = state
        super().__init__(message)
