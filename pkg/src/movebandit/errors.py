"""Exception hierarchy. Every error raised by the library derives from MoveBanditError."""


class MoveBanditError(ValueError):
    pass


# metric validation
class AsymmetricMatrix(MoveBanditError):
    pass


class NonzeroDiagonal(MoveBanditError):
    pass


class TriangleViolation(MoveBanditError):
    def __init__(self, i, j, l, dij, via):
        self.witness = (i, j, l)
        super().__init__(
            f"triangle inequality violated on ({i},{j}) via {l}: {dij:g} > {via:g}"
        )


class EntryOutOfRange(MoveBanditError):
    pass


class ExactTooLarge(MoveBanditError):
    pass


class BadSpec(MoveBanditError):
    pass


# trees
class UnknownAction(MoveBanditError):
    pass


class DominanceViolation(MoveBanditError):
    pass


class ActionMismatch(MoveBanditError):
    pass


class TooShallow(MoveBanditError):
    pass


class NonTermination(MoveBanditError):
    pass


class InvalidTree(MoveBanditError):
    pass


# policies
class BadEta(MoveBanditError):
    pass


class ZeroMassSubtree(MoveBanditError):
    pass


class OutOfRangeLoss(MoveBanditError):
    pass


class NotSelected(MoveBanditError):
    pass


class EstimateTooNegative(MoveBanditError):
    pass


# harness
class FileShapeMismatch(MoveBanditError):
    pass


class HorizonMismatch(MoveBanditError):
    pass


class DimensionUnsupported(MoveBanditError):
    pass


class EnumerationTooLarge(MoveBanditError):
    pass
