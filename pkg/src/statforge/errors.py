"""Exception hierarchy shared across the package."""


class StatforgeError(Exception):
    """Base class for all package-specific failures."""


class SimulationDivergedError(StatforgeError):
    """A simulated state left the finite/guarded range.

    Carries ``step``, the 1-based index of the first offending iterate.
    """

    def __init__(self, step, value=None):
        self.step = step
        self.value = value
        msg = f"simulation diverged at step {step}"
        if value is not None:
            msg += f" (x={value!r})"
        super().__init__(msg)


class InvalidParameterError(StatforgeError):
    """Parameter vector violates a model precondition (e.g. sigma <= 0)."""


class DegenerateLikelihoodError(StatforgeError):
    """Transition distribution collapses to a point mass."""


class UndefinedStatisticError(StatforgeError):
    """Closed-form statistic has a vanishing denominator."""


class DegenerateStatisticError(StatforgeError):
    """A summary-statistic component has zero spread; cannot standardize."""


class TrainingDivergedError(StatforgeError):
    """Loss or gradient became non-finite during optimization."""
