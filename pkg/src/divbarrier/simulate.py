"""Reflected state simulation at a running-minimum-dependent barrier.

The half-line problem with a constant barrier has the classical
running-max solution; the moving-boundary problem is solved by iterating
that map with the barrier refreshed from the reflected path's own
running minimum (inner contraction), then refreshing the control
argument (outer sweep).  The equilibrium simulator specializes: the
solved barrier depends on the minimum only and falls in it, so one
reflection per Euler step is already the fixed point.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .boundary import BoundarySolution
from .errors import InvalidInitial, NoConvergence
from .model import ModelParams
from .paths import DiscretePath, Jump


def path_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one path/block stream; stable across runs."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(stream,))))


def skorokhod_fixed(x_path, b_const: float, y0: float = 0.0):
    """Closed-form half-line reflection below a constant barrier.

    k[j] = y0 + max(0, max_{i<=j}(x[i] - b)), w = x - (k - y0); k grows
    only while w sits on the barrier.
    """
    x = np.asarray(x_path, dtype=float)
    over = np.maximum.accumulate(np.maximum(x - b_const, 0.0))
    k = y0 + over
    return x - over, k


@dataclass(frozen=True)
class BoundaryFn:
    """Barrier b(m, y, t) with declared Lipschitz moduli in m and y."""

    fn: Callable
    lipschitz_m: float = 0.0
    lipschitz_y: float = 0.0

    def __post_init__(self):
        if self.lipschitz_m < 0 or self.lipschitz_y < 0:
            raise ValueError("Lipschitz moduli must be >= 0")

    def contraction_ok(self) -> bool:
        return self.lipschitz_m + self.lipschitz_y < 1.0


def skorokhod_moving(t, x_path, boundary: BoundaryFn, m0: float, y0: float = 0.0,
                     tol: float = 1e-12, max_iter: int = 200) -> DiscretePath:
    """Fixed-point solve of the reflection below a moving barrier.

    Inner sweep: w <- x - running_max((x - b(M(w), l, t))^+) with
    M(w) = prefix minimum seeded at m0; outer sweep refreshes the control
    argument l from the last overflow.  Converges when both residuals
    drop below tol; the returned path satisfies its invariants with
    refl_tol = 10*tol.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x_path, dtype=float)
    if not boundary.contraction_ok():
        warnings.warn("Lipschitz moduli sum >= 1: contraction not guaranteed",
                      stacklevel=2)
    b_start = np.asarray(boundary.fn(np.full_like(x, m0), np.full_like(x, y0), t),
                         dtype=float)
    if x[0] > b_start[0] + 1e-12:
        raise InvalidInitial(f"x[0]={x[0]!r} starts above the barrier {b_start[0]!r}")
    w = np.minimum(x, b_start)
    l = np.full_like(x, y0)
    last = math.inf
    ratios = []
    for _ in range(max_iter):
        m = np.minimum(np.minimum.accumulate(w), m0)
        b = np.asarray(boundary.fn(m, l, t), dtype=float)
        over = np.maximum.accumulate(np.maximum(x - b, 0.0))
        w_new = x - over
        k = y0 + over
        resid = max(float(np.max(np.abs(w_new - w))), float(np.max(np.abs(k - l))))
        if last < math.inf and last > 0:
            ratios.append(resid / last)
        w, l = w_new, k
        if resid < tol:
            m = np.minimum(np.minimum.accumulate(w), m0)
            return DiscretePath(t=t, X=w, M=m, D=l, jumps=())
        last = resid
    est = float(np.median(ratios)) if ratios else None
    raise NoConvergence(max_iter, last, lipschitz_estimate=est)


def initial_lump(b_of: Callable, x0: float, m0: float, tol: float = 1e-12) -> float:
    """Smallest lump taking x0 onto the barrier, minimum dragged along.

    Solves x0 - d = b(min(m0, x0 - d)) by bisection; the left side falls
    and the right side rises in d, so the root is unique.
    """
    if x0 <= b_of(m0):
        return 0.0
    lo, hi = 0.0, x0  # paying everything lands at 0 < b(anything)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if b_of(min(m0, x0 - mid)) < x0 - mid:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return hi


def simulate_equilibrium(sol: BoundarySolution, params: ModelParams, x0: float,
                         m0: float, T: float, dt: float, seed: int,
                         stream: int = 0) -> DiscretePath:
    """One Euler path reflected at b(M) with bankruptcy at zero.

    An initial lump (if x0 starts above the barrier) is recorded as a
    jump at index 0; afterwards each step adds the exact Gaussian
    increment, pays the overflow above b(M) as dividend, updates the
    minimum, and stops at the first grid index with X <= 0.  Same seed
    and stream give a bit-identical path.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if m0 < 0 or x0 < m0:
        raise InvalidInitial(f"need 0 <= m0 <= x0, got (x0={x0!r}, m0={m0!r})")

    n_steps = int(round(T / dt))
    rng = path_rng(seed, stream)
    z = rng.standard_normal(n_steps)

    t = np.empty(n_steps + 1)
    X = np.empty(n_steps + 1)
    M = np.empty(n_steps + 1)
    D = np.empty(n_steps + 1)

    jumps = ()
    d0 = initial_lump(sol.b_of, x0, m0)
    if d0 > 0.0:
        jumps = (Jump(index=0, dD=d0, x_pre=x0, m_pre=m0),)
    t[0] = 0.0
    X[0] = x0 - d0
    M[0] = min(m0, X[0])
    D[0] = d0
    bankrupt_at: Optional[int] = None
    if X[0] <= 0.0:
        sl = slice(0, 1)
        return DiscretePath(t=t[sl].copy(), X=X[sl].copy(), M=M[sl].copy(),
                            D=D[sl].copy(), jumps=jumps, bankrupt_at=0)

    sq = params.sigma * math.sqrt(dt)
    drift = params.mu * dt
    x, m, d = X[0], M[0], D[0]
    b_cur = sol.b_of(m)
    k_end = n_steps
    for k in range(n_steps):
        x_free = x + drift + sq * z[k]
        pay = x_free - b_cur
        if pay > 0.0:
            x = b_cur
            d += pay
        else:
            x = x_free
            if x < m:
                m = x
                b_cur = sol.b_of(m)
        t[k + 1] = (k + 1) * dt
        X[k + 1] = x
        M[k + 1] = m
        D[k + 1] = d
        if x <= 0.0:
            bankrupt_at = k + 1
            k_end = k + 1
            break

    sl = slice(0, k_end + 1)
    return DiscretePath(t=t[sl].copy(), X=X[sl].copy(), M=M[sl].copy(),
                        D=D[sl].copy(), jumps=jumps, bankrupt_at=bankrupt_at)


def equilibrium_boundary_fn(sol: BoundarySolution) -> BoundaryFn:
    """Wrap a solved barrier as a (m, y, t)-boundary with estimated modulus."""
    db = np.diff(sol.b) / np.maximum(np.diff(sol.m_grid), 1e-300)
    lm = float(np.max(np.abs(db))) if len(sol.b) > 1 else 0.0

    def fn(m, y, t):
        return sol.b_of(np.clip(m, 0.0, sol.m_star))

    return BoundaryFn(fn=fn, lipschitz_m=lm, lipschitz_y=0.0)
