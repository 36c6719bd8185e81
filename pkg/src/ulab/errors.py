"""Exception taxonomy shared by the library and the CLI exit codes."""


class ArgumentError(ValueError):
    """Bad argument: wrong shape, non-divisor, out-of-range parameter."""


class DomainError(ArgumentError):
    """Quantity undefined at this input (e.g. numerical sparsity of zero)."""


class HypothesisError(ArgumentError):
    """A mathematical precondition of the experiment is violated."""


class BudgetError(RuntimeError):
    """Exact enumeration would exceed the configured work budget."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerances."""
