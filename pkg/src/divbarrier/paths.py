"""Discrete trajectories and the two path integrals taken along them.

A DiscretePath carries a strictly increasing time grid with wealth X,
running minimum M, and cumulative dividends D sampled on it.  Lump
dividends are explicit Jump records: a jump at index j happens at t[j],
after any continuous motion inside the step, so (x_pre, m_pre) are the
values immediately before the lump and X[j], M[j], D[j] are post-jump.

The payoff integral weights each dividend unit by the discount at the
time it is paid and by the cost at the running minimum *while it passes
through*: a lump of size dD paid from wealth x with minimum m first eats
the gap down to m (minimum unchanged), then drags the minimum with it.
That is the first/second branch split below.  The companion integral
against the running minimum uses only the dragging part, with a sign
flip because M decreases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import NonMonotoneControl, NonMonotoneMinimum
from .model import ModelParams, beta, cost_c

QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class Jump:
    index: int
    dD: float
    x_pre: float
    m_pre: float


@dataclass(frozen=True)
class DiscretePath:
    t: np.ndarray
    X: np.ndarray
    M: np.ndarray
    D: np.ndarray
    jumps: tuple = field(default_factory=tuple)
    bankrupt_at: Optional[int] = None

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.X) == len(self.M) == len(self.D) == n):
            raise ValueError("t, X, M, D must have equal length")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        for j in self.jumps:
            if not 0 <= j.index < n:
                raise ValueError(f"jump index {j.index} outside the grid")

    def jump_at(self, k: int) -> Optional[Jump]:
        for j in self.jumps:
            if j.index == k:
                return j
        return None


def detect_jumps(t, X, M, D, jump_threshold) -> tuple:
    """Flag control increments larger than jump_threshold on a raw path.

    Externally loaded paths carry no explicit lump records; any step whose
    dividend increment exceeds the threshold is treated as a lump paid at
    the right endpoint from the left endpoint's state.
    """
    jumps = []
    dD = np.diff(D)
    for k in np.nonzero(dD > jump_threshold)[0]:
        jumps.append(Jump(index=int(k) + 1, dD=float(dD[k]),
                          x_pre=float(X[k]), m_pre=float(M[k])))
    return tuple(jumps)


def _check_control(path: DiscretePath):
    dD = np.diff(path.D)
    if dD.size and float(np.min(dD)) < -1e-12 * max(1.0, float(np.max(np.abs(path.D)))):
        raise NonMonotoneControl(f"D decreases by {-float(np.min(dD))!r}")


def _check_minimum(path: DiscretePath):
    dM = np.diff(path.M)
    if dM.size and float(np.max(dM)) > 1e-12 * max(1.0, float(np.max(np.abs(path.M)))):
        raise NonMonotoneMinimum(f"M increases by {float(np.max(dM))!r}")


def cost_jump_integral(x_pre: float, m_pre: float, dD: float, params: ModelParams) -> float:
    """Closed form of one lump's payoff weight for the cost integrand.

    integral_0^{a} c(m_pre) du + integral_a^{dD} c(x_pre - u) du,
    a = min(x_pre - m_pre, dD): the lump pays at cost c(m_pre) until it
    reaches the old minimum, then at c(level) as it pushes the minimum down.
    """
    a = min(max(x_pre - m_pre, 0.0), dD)
    total = cost_c(m_pre, params) * a
    if dD > a:
        q, m_bar = params.q, params.m_bar
        if q == 0.0:
            total += dD - a
        else:
            # piecewise: cost is flat exp(-q*m_bar) while x_pre-u > m_bar
            u1 = min(max(x_pre - m_bar, a), dD)
            total += np.exp(-q * m_bar) * (u1 - a)
            if dD > u1:
                # expm1 form of (e^{-q(x-dD)} - e^{-q(x-u1)})/q: exact as q -> 0
                total += math.exp(-q * (x_pre - u1)) * math.expm1(q * (dD - u1)) / q
    return float(total)


def _jump_terms_diamond(jump: Jump, y_pre: float, g, t_j: float) -> float:
    a = min(max(jump.x_pre - jump.m_pre, 0.0), jump.dD)
    out = 0.0
    if a > 0:
        out += quad(lambda u: g(jump.x_pre - u, jump.m_pre, y_pre + u, t_j),
                    0.0, a, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
    if jump.dD > a:
        out += quad(lambda u: g(jump.x_pre - u, jump.x_pre - u, y_pre + u, t_j),
                    a, jump.dD, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
    return out


def diamond_integral(path: DiscretePath, g: Optional[Callable], s: float,
                     params: ModelParams) -> float:
    """Discounted integral of g against the control along the path.

    g maps (x, m, y, t) -> value; g=None selects the model cost c(m) with
    its closed-form lump evaluation.  The continuous part is a left-point
    Riemann-Stieltjes sum over unflagged increments; each flagged lump
    contributes its two-branch integral at discount beta(t_jump - s).
    """
    _check_control(path)
    t, X, M, D = path.t, path.X, path.M, path.D
    n = len(t)
    total = 0.0
    for k in range(n - 1):
        j = path.jump_at(k + 1)
        if j is not None:
            d_cont = (D[k + 1] - j.dD) - D[k]
        else:
            d_cont = D[k + 1] - D[k]
        if d_cont != 0.0:
            gval = cost_c(M[k], params) if g is None else g(X[k], M[k], D[k], t[k])
            total += beta(t[k] - s, params) * gval * d_cont
    for j in path.jumps:
        y_pre = float(D[j.index] - j.dD)
        w = beta(t[j.index] - s, params)
        if g is None:
            total += w * cost_jump_integral(j.x_pre, j.m_pre, j.dD, params)
        else:
            total += w * _jump_terms_diamond(j, y_pre, g, float(t[j.index]))
    return float(total)


def square_integral(path: DiscretePath, g: Callable, s: float,
                    params: ModelParams) -> float:
    """Discounted integral of g(m, y, t) against the running minimum.

    Continuous decrements enter as a left-point sum (dM <= 0); a lump that
    drags the minimum down subtracts its second-branch integral.
    """
    _check_control(path)
    _check_minimum(path)
    t, X, M, D = path.t, path.X, path.M, path.D
    n = len(t)
    total = 0.0
    for k in range(n - 1):
        j = path.jump_at(k + 1)
        m_next = j.m_pre if j is not None else M[k + 1]
        d_cont = m_next - M[k]
        if d_cont != 0.0:
            total += beta(t[k] - s, params) * g(M[k], D[k], t[k]) * d_cont
    for j in path.jumps:
        a = min(max(j.x_pre - j.m_pre, 0.0), j.dD)
        if j.dD > a:
            y_pre = float(D[j.index] - j.dD)
            t_j = float(t[j.index])
            val = quad(lambda u: g(j.x_pre - u, y_pre + u, t_j),
                       a, j.dD, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
            total -= beta(t_j - s, params) * val
    return float(total)
