"""Exception hierarchy shared by every module.

Each error carries a short machine-readable ``code`` and the process
``exit_code`` the CLI maps it to (2 invalid arguments, 3 numerical failure).
"""


class CovselError(Exception):
    code = "error"
    exit_code = 1


class InvalidArgument(CovselError, ValueError):
    code = "invalid_argument"
    exit_code = 2


class InvalidRho(InvalidArgument):
    code = "invalid_rho"


class InvalidOrder(InvalidArgument):
    code = "invalid_order"


class InvalidKappa(InvalidArgument):
    code = "invalid_kappa"


class DimensionMismatch(InvalidArgument):
    code = "dimension_mismatch"


class InvalidCliqueCover(InvalidArgument):
    code = "invalid_clique_cover"


class NumericalFailure(CovselError, ArithmeticError):
    code = "numerical_failure"
    exit_code = 3


class NotPositiveDefinite(NumericalFailure):
    code = "not_positive_definite"


class ConvergenceFailure(NumericalFailure):
    code = "convergence_failure"


class NoConvergence(NumericalFailure):
    """IPF did not settle within its sweep budget."""

    code = "no_convergence"

    def __init__(self, iterations, residual):
        super().__init__(
            f"IPF did not converge after {iterations} sweeps (residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


class QuadratureFailure(NumericalFailure):
    code = "quadrature_failure"
