"""Model parameters, discounting, dividend cost, and the exponent algebra.

The state is an arithmetic Brownian motion with drift mu and volatility
sigma, discounted by the two-rate mixture

    beta(t) = rho*exp(-delta*t) + (1-rho)*exp(-(delta+gamma)*t),

and each dividend unit paid while the running minimum sits at m is worth
c(m) = exp(-q*min(m, m_bar)).  The closed-form machinery runs on the four
exponents lambda1..lambda4, the roots of

    sigma^2/2 * L^2 + mu * L = delta        (lambda1 < 0 < lambda2)
    sigma^2/2 * L^2 + mu * L = delta+gamma  (lambda3 < 0 < lambda4)

ordered lambda3 < lambda1 < 0 < lambda2 < lambda4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InconsistentLambda

# relative tolerance for the quadratic (Vieta) identities
_VIETA_RTOL = 1e-10
# tolerance on lambda1+lambda2 vs lambda3+lambda4 when inverting
_SUM_TOL = 1e-8


@dataclass(frozen=True)
class LambdaQuad:
    """The four exponents, ordered lambda3 < lambda1 < 0 < lambda2 < lambda4."""

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float

    def __post_init__(self):
        l1, l2, l3, l4 = self.lambda1, self.lambda2, self.lambda3, self.lambda4
        if not (l3 < l1 < 0.0 < l2 < l4):
            raise ValueError(
                f"exponent ordering lambda3 < lambda1 < 0 < lambda2 < lambda4 "
                f"violated: {(l1, l2, l3, l4)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4])

    @property
    def sum12(self) -> float:
        return self.lambda1 + self.lambda2

    @property
    def sum34(self) -> float:
        return self.lambda3 + self.lambda4

    def validate_consistency(self):
        # both pairs must share -2*mu/sigma^2
        scale = max(abs(self.sum12), abs(self.sum34), 1.0)
        if abs(self.sum12 - self.sum34) > _SUM_TOL * scale:
            raise InconsistentLambda(self.sum12, self.sum34)


def lambda_from_model(mu: float, sigma: float, delta: float, gamma: float) -> LambdaQuad:
    """Solve the two quadratics for the exponent quadruple (closed form)."""
    if sigma <= 0 or delta <= 0 or gamma <= 0:
        raise ValueError("need sigma > 0, delta > 0, gamma > 0")
    s2 = sigma * sigma
    d1 = math.sqrt(mu * mu + 2.0 * s2 * delta)
    d2 = math.sqrt(mu * mu + 2.0 * s2 * (delta + gamma))
    return LambdaQuad(
        lambda1=(-mu - d1) / s2,
        lambda2=(-mu + d1) / s2,
        lambda3=(-mu - d2) / s2,
        lambda4=(-mu + d2) / s2,
    )


def model_from_lambda(lam: LambdaQuad, sigma: float, mu: float | None = None):
    """Invert the root relations: (mu, delta, gamma) from the exponents.

    The two pair-sums must agree (both equal -2*mu/sigma^2); passing an
    asserted mu additionally checks it against the implied one, so callers
    holding an inconsistent published parameter set get a hard error
    instead of a silent reinterpretation.
    """
    lam.validate_consistency()
    s2 = sigma * sigma
    mu_implied = -s2 * 0.5 * (lam.sum12 + lam.sum34) / 2.0
    if mu is not None:
        scale = max(abs(mu), abs(mu_implied), 1.0)
        if abs(mu - mu_implied) > _SUM_TOL * scale:
            raise InconsistentLambda(lam.sum12, lam.sum34,
                                     mu_implied=mu_implied, mu_asserted=mu)
    delta = -s2 * 0.5 * lam.lambda1 * lam.lambda2
    gamma = -s2 * 0.5 * lam.lambda3 * lam.lambda4 - delta
    return mu_implied, delta, gamma


@dataclass(frozen=True)
class ModelParams:
    """Economic and discounting parameters; m_bar may be math.inf."""

    mu: float
    sigma: float
    delta: float
    gamma: float
    rho: float
    q: float
    m_bar: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if not self.m_bar > 0:
            raise ValueError("m_bar must be > 0 (math.inf for unbounded)")

    @cached_property
    def lam(self) -> LambdaQuad:
        return lambda_from_model(self.mu, self.sigma, self.delta, self.gamma)

    @classmethod
    def from_lambda(cls, lam: LambdaQuad, sigma: float, rho: float, q: float,
                    m_bar: float, mu: float | None = None) -> "ModelParams":
        mu_i, delta, gamma = model_from_lambda(lam, sigma, mu=mu)
        return cls(mu=mu_i, sigma=sigma, delta=delta, gamma=gamma,
                   rho=rho, q=q, m_bar=m_bar)


def beta(t, params: ModelParams):
    """Discount factor rho*e^{-delta t} + (1-rho)*e^{-(delta+gamma) t}; t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("beta requires t >= 0")
    out = (params.rho * np.exp(-params.delta * t)
           + (1.0 - params.rho) * np.exp(-(params.delta + params.gamma) * t))
    return out if out.ndim else float(out)


def cost_c(m, params: ModelParams):
    """Marginal dividend value exp(-q*min(m, m_bar)); continuous, any real m."""
    m = np.asarray(m, dtype=float)
    out = np.exp(-params.q * np.minimum(m, params.m_bar))
    return out if out.ndim else float(out)


def rho_bound(params: ModelParams) -> float:
    """Largest mixing weight for which the A3 coefficient stays nonpositive.

    Equals (-mu + sqrt(mu^2+2 sigma^2 (delta+gamma)))
         / (sqrt(mu^2+2 sigma^2 delta) + sqrt(mu^2+2 sigma^2 (delta+gamma))),
    which simplifies to lambda4/(lambda4 - lambda1).
    """
    mu, s2 = params.mu, params.sigma ** 2
    d1 = math.sqrt(mu * mu + 2.0 * s2 * params.delta)
    d2 = math.sqrt(mu * mu + 2.0 * s2 * (params.delta + params.gamma))
    return (-mu + d2) / (d1 + d2)
