"""Exception types for numerical failure modes that are not caller contract bugs."""


class NumericalError(RuntimeError):
    """A numeric procedure (quadrature, normalization) failed or is undefined."""


class GridCoverageError(NumericalError):
    """A quadrature grid does not cover the required mass region."""
