"""Exception hierarchy shared by all modules."""


class PencilError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(PencilError, ValueError):
    """Input document does not match the element/form schema."""


class AlgebraMismatch(PencilError, ValueError):
    pass


class NumericalError(PencilError, ArithmeticError):
    """Base for failures caused by floating point limits."""


class NotInvertible(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class GenerationFailure(NumericalError):
    pass


class DegenerateTrial(NumericalError):
    pass


class NotMaximalFiniteRank(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class InputsEqual(PencilError, ValueError):
    pass


class WitnessNotFound(NumericalError):
    pass


class InvalidForm(PencilError, ValueError):
    pass


class ReconstructionError(PencilError):
    """Base for failures of canonical form recovery."""


class NotUnital(ReconstructionError):
    pass


class PermutationAmbiguous(ReconstructionError):
    pass


class NeitherMultiplicativeNorAnti(ReconstructionError):
    pass


class SimilarityInconsistent(ReconstructionError):
    pass


class PsiMismatch(ReconstructionError):
    pass
