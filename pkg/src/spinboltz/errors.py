"""Exception types shared across the solver."""


class ValidationError(ValueError):
    """Input violates a model/state contract (bad matrix, bad config value)."""


class GridMismatchError(ValidationError):
    """Two fields live on different energy grids."""


class FitFailure(RuntimeError):
    """Equilibrium fit did not converge; carries the best residual seen."""

    def __init__(self, message, best_residual=None, best_params=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_params = best_params


class StepRejected(RuntimeError):
    """Time step produced an unphysical eigenvalue excursion; reduce dt."""

    def __init__(self, message, species=None, shell=None, time=None, eigenvalue=None):
        super().__init__(message)
        self.species = species
        self.shell = shell
        self.time = time
        self.eigenvalue = eigenvalue


class InvariantFailure(RuntimeError):
    """A runtime invariant check (entropy monotonicity, conservation) failed."""
