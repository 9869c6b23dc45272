"""Exception types shared across the package."""


class DivBarrierError(Exception):
    """Base class for all package errors."""


class InconsistentLambda(DivBarrierError):
    """The four exponents do not come from a single drift/volatility pair."""

    def __init__(self, sum12, sum34, mu_implied=None, mu_asserted=None):
        self.sum12 = sum12
        self.sum34 = sum34
        self.mu_implied = mu_implied
        self.mu_asserted = mu_asserted
        if mu_asserted is None:
            msg = (f"lambda1+lambda2 = {sum12!r} but lambda3+lambda4 = {sum34!r}; "
                   "the pairs imply different drifts")
        else:
            msg = (f"exponent sums {sum12!r}/{sum34!r} imply mu = {mu_implied!r}, "
                   f"contradicting asserted mu = {mu_asserted!r}")
        super().__init__(msg)


class NonMonotoneControl(DivBarrierError):
    """Cumulative dividends decreased somewhere along a path."""


class NonMonotoneMinimum(DivBarrierError):
    """The running-minimum samples increased somewhere along a path."""


class BracketFailure(DivBarrierError):
    """The barrier equation has no sign change on its guaranteed bracket."""


class SingularSystem(DivBarrierError):
    """det(X) fell below the floor while integrating the boundary system."""

    def __init__(self, m, det):
        self.m = m
        self.det = det
        super().__init__(f"2x2 system singular at m = {m!r} (det = {det!r})")


class DiagonalHit(DivBarrierError):
    """Internal signal: the boundary reached the diagonal b(m) = m."""


class NoConvergence(DivBarrierError):
    """The reflection fixed-point iteration did not contract."""

    def __init__(self, max_iter, residual, lipschitz_estimate=None):
        self.max_iter = max_iter
        self.residual = residual
        self.lipschitz_estimate = lipschitz_estimate
        msg = f"no convergence after {max_iter} iterations (residual {residual!r}"
        if lipschitz_estimate is not None:
            msg += f", empirical Lipschitz ~ {lipschitz_estimate:.3g}"
        super().__init__(msg + ")")


class InvalidInitial(DivBarrierError):
    """Initial state violates m0 <= x0."""


class OutOfDomain(DivBarrierError):
    """Evaluation point outside the admissible set of the surface."""


class ConfigError(DivBarrierError):
    """Run configuration is malformed; carries the offending field name."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
