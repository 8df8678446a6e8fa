"""Exception types shared across the package.

Everything derives from ValueError so callers who do not care about the
fine-grained class can catch one thing.
"""


class EvaluationError(ValueError):
    """A scalar-family evaluation hit a pole or a negative radicand.

    Carries the textual form of the offending sub-expression in ``expr``.
    """

    def __init__(self, message, expr=None):
        super().__init__(message if expr is None else f"{message} in {expr}")
        self.expr = expr


class DegenerateStructureError(ValueError):
    """A structural coefficient that must be nonzero vanished (a1 = 0 etc.)."""


class IntegrabilityError(ValueError):
    """The denominator of the integrability quotients vanished at some t."""


class InadmissibleError(ValueError):
    """A positivity precondition (lambda > 0, lambda + 2t lambda' > 0) failed."""


class SingularCoefficientError(ValueError):
    """A closed-form inverse denominator (c1 c2 - c3^2 or its 2t-shift) vanished."""


class DomainError(ValueError):
    """Input outside the geometric domain (zero covector where T0 is required,
    chart breakdown for c < 0, negative t)."""


class ScenarioError(ValueError):
    """A scenario/config failed validation. CLI maps this to exit code 2."""
