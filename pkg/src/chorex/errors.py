"""Exception hierarchy.

Every domain failure derives from :class:`ChorexError`, so the CLI can map
them all to exit code 1 with a structured error document.
"""


class ChorexError(Exception):
    """Base class for all domain errors."""

    def to_doc(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class SchemaError(ChorexError, ValueError):
    pass


class NormalizationError(ChorexError, ValueError):
    def __init__(self, agent: int, total):
        self.agent = agent
        self.total = total
        super().__init__(
            f"agent {agent + 1}: sum_j V_ij([0,1]) = {total}, expected 1"
        )

    def to_doc(self) -> dict:
        doc = super().to_doc()
        doc.update(agent=self.agent + 1, total=str(self.total))
        return doc


class NegativeDensityError(ChorexError, ValueError):
    pass


class DimensionError(ChorexError, ValueError):
    pass


class NotTwoAgents(ChorexError, ValueError):
    pass


class NotPiecewiseConstant(ChorexError, ValueError):
    pass


class BadParams(ChorexError, ValueError):
    pass


class IrrationalRootError(ChorexError, ArithmeticError):
    """A quadratic root that has no exact rational representation."""


class InvalidFractions(ChorexError, ValueError):
    pass


class InfeasibleModel(ChorexError):
    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate

    def to_doc(self) -> dict:
        doc = super().to_doc()
        if self.certificate is not None:
            doc["certificate"] = [str(y) for y in self.certificate]
        return doc


class BadEps(ChorexError, ValueError):
    pass


class OutOfRange(ChorexError, ValueError):
    pass


class OracleError(ChorexError, ValueError):
    """A black-box density broke its declared Lipschitz or range bounds."""


class BadRange(ChorexError, ValueError):
    pass


class Unreachable(ChorexError, ValueError):
    def __init__(self, message: str, shortfall):
        super().__init__(message)
        self.shortfall = shortfall

    def to_doc(self) -> dict:
        doc = super().to_doc()
        doc["shortfall"] = str(self.shortfall)
        return doc


class BudgetExceeded(ChorexError):
    pass


class NoFeasible(ChorexError):
    pass


class NotFound(ChorexError):
    pass
