"""Exception types shared across the package."""


class UncertainEventsError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(UncertainEventsError, ValueError):
    """A distribution parameter is outside its admissible domain."""


class DegenerateTruncationError(UncertainEventsError):
    """Left-truncation at zero retains essentially no probability mass."""


class SchemaError(UncertainEventsError, ValueError):
    """Input data does not match an expected schema or vocabulary."""


class IngestError(SchemaError):
    """Survey ingestion failed; `problems` lists offending rows/messages."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class EmptyBeliefError(UncertainEventsError, ValueError):
    """All elicited bin weights are zero; nothing to normalize."""


class ContractError(UncertainEventsError, ValueError):
    """Two inputs that must refer to the same binning/anchor do not."""


class InsufficientDataError(UncertainEventsError, ValueError):
    """Fewer observations than required to fit a model."""


class InsufficientCodersError(InsufficientDataError):
    """Leave-one-coder-out needs at least two distinct coders."""


class CovariateError(UncertainEventsError, ValueError):
    """A required covariate (e.g. information context) is missing."""


class SingularityError(UncertainEventsError, ValueError):
    """Design matrix is rank deficient; `columns` names the collinear ones."""

    def __init__(self, message, columns=()):
        self.columns = tuple(columns)
        super().__init__(message)


class BundleError(UncertainEventsError, ValueError):
    """A coefficient-bundle JSON document is malformed."""
