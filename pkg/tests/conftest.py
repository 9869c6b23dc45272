"""Shared fixtures: the two main parameter regimes and a classical limit.

Regime "capped": strongly scarred cost (q=5) with a finite cost cap
m_bar=0.1; the boundary run terminates at the cap and extends constantly.
Regime "uncapped": mild cost (q=0.2), no cap; the run ends at the
diagonal touch.  The classical fixture collapses the discount mixture
(rho=1, q=0), where the barrier is the constant De Finetti one with a
textbook closed form.
"""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from divbarrier import (LambdaQuad, ModelParams, ValueSurface,
                        integrate_boundary)

settings.register_profile(
    "default", deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


QUAD_CAPPED = LambdaQuad(-2.0, 1.0, -3.0, 2.0)
QUAD_UNCAPPED = LambdaQuad(-2.5, 0.5, -3.0, 1.0)


@pytest.fixture(scope="session")
def params_capped() -> ModelParams:
    return ModelParams.from_lambda(QUAD_CAPPED, sigma=1.0, rho=0.3, q=5.0,
                                   m_bar=0.1)


@pytest.fixture(scope="session")
def params_uncapped() -> ModelParams:
    return ModelParams.from_lambda(QUAD_UNCAPPED, sigma=1.0, rho=0.5, q=0.2,
                                   m_bar=math.inf)


@pytest.fixture(scope="session")
def params_classical() -> ModelParams:
    return ModelParams(mu=1.0, sigma=1.0, delta=0.5, gamma=1.0, rho=1.0,
                       q=0.0, m_bar=math.inf)


@pytest.fixture(scope="session")
def sol_capped(params_capped):
    return integrate_boundary(params_capped)


@pytest.fixture(scope="session")
def sol_uncapped(params_uncapped):
    return integrate_boundary(params_uncapped)


@pytest.fixture(scope="session")
def sol_classical(params_classical):
    return integrate_boundary(params_classical)


@pytest.fixture(scope="session")
def surf_capped(params_capped, sol_capped):
    return ValueSurface(sol=sol_capped, params=params_capped)


@pytest.fixture(scope="session")
def surf_uncapped(params_uncapped, sol_uncapped):
    return ValueSurface(sol=sol_uncapped, params=params_uncapped)


@pytest.fixture(scope="session")
def surf_classical(params_classical, sol_classical):
    return ValueSurface(sol=sol_classical, params=params_classical)


def random_quad(rng: np.random.Generator, bound: float = 10.0) -> LambdaQuad:
    """Ordered exponent quadruple with |lambda_i| < bound and safe margins."""
    l1 = -rng.uniform(0.1, bound * 0.45)
    l2 = rng.uniform(0.1, bound * 0.45)
    l3 = l1 - rng.uniform(0.05, bound * 0.5)
    l4 = l2 + rng.uniform(0.05, bound * 0.5)
    return LambdaQuad(l1, l2, l3, l4)
