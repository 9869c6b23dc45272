"""Closed-form equilibrium value surface and its variational checks.

V(x, m) is piecewise: a four-exponential sum below the barrier, affine
with slope equal to the dividend cost above it; the two-time function
f(x, m, kappa) discounts each exponential by its quadratic root value
(delta for the first pair, delta+gamma for the second) and the affine
part by the full discount mixture.  U is the first-order gradient slack
whose nonnegativity on the waiting region is the variational inequality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .boundary import BoundarySolution, _write_table
from .errors import OutOfDomain
from .model import ModelParams, beta, cost_c

DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class ValueSurface:
    sol: BoundarySolution
    params: ModelParams

    @property
    def m_star(self) -> float:
        return self.sol.m_star

    def _disc(self) -> np.ndarray:
        d, g = self.params.delta, self.params.gamma
        return np.array([d, d, d + g, d + g])

    def _check_point(self, x: float, m: float):
        if m < -DOMAIN_TOL or x < m - DOMAIN_TOL:
            raise OutOfDomain(f"point (x={x!r}, m={m!r}) outside 0 <= m <= x")

    def _tail_lump(self, x: float, m: float) -> float:
        # beyond the diagonal touch with unbounded m_bar: lump from x to m*
        # through the minimum, at cost c(m) down to m and c(level) after
        q, ms = self.params.q, self.sol.m_star
        gap = (x - m) * math.exp(-q * m)
        if q == 0.0:
            return gap + (m - ms)
        # expm1 form of (e^{-q*ms} - e^{-q*m})/q: exact as q -> 0
        return gap + math.exp(-q * m) * math.expm1(q * (m - ms)) / q

    def eval_V(self, x: float, m: float) -> float:
        self._check_point(x, m)
        p, sol = self.params, self.sol
        if m > sol.m_star and math.isinf(p.m_bar):
            A = np.array(sol.A_of(sol.m_star))
            lam = sol.lam.as_array()
            return float(self._tail_lump(x, m) + (A * np.exp(lam * sol.m_star)).sum())
        b_m = sol.b_of(m)
        A = np.array(sol.A_of(m))
        lam = sol.lam.as_array()
        if x > b_m:
            return float((x - b_m) * cost_c(m, p) + (A * np.exp(lam * b_m)).sum())
        return float((A * np.exp(lam * x)).sum())

    def eval_f(self, x: float, m: float, kappa: float) -> float:
        self._check_point(x, m)
        p, sol = self.params, self.sol
        decay = np.exp(-self._disc() * kappa)
        lam = sol.lam.as_array()
        if m > sol.m_star and math.isinf(p.m_bar):
            A = np.array(sol.A_of(sol.m_star))
            return float(self._tail_lump(x, m) * beta(kappa, p)
                         + (A * np.exp(lam * sol.m_star) * decay).sum())
        b_m = sol.b_of(m)
        A = np.array(sol.A_of(m))
        if x > b_m:
            return float((x - b_m) * cost_c(m, p) * beta(kappa, p)
                         + (A * np.exp(lam * b_m) * decay).sum())
        return float((A * np.exp(lam * x) * decay).sum())

    def eval_U(self, x: float, m: float) -> float:
        self._check_point(x, m)
        sol = self.sol
        if m > sol.m_star + DOMAIN_TOL:
            raise OutOfDomain(f"m={m!r} beyond the diagonal touch {sol.m_star!r}")
        b_m = sol.b_of(m)
        if x > b_m + 1e-9:
            raise OutOfDomain(f"x={x!r} above the barrier {b_m!r}")
        A = np.array(sol.A_of(m))
        lam = sol.lam.as_array()
        return float((lam * A * np.exp(lam * min(x, b_m))).sum()
                     - cost_c(m, self.params))

    def waiting_grid(self, n_x: int, n_m: int):
        """(x, m) samples mapped uniformly onto the curved waiting region."""
        sol = self.sol
        v = np.linspace(0.0, 1.0, n_m)
        u = np.linspace(0.0, 1.0, n_x)
        m = v * sol.m_star
        b = sol.b_of(m)
        x = m[None, :] + u[:, None] * (b - m)[None, :]
        return x, np.broadcast_to(m[None, :], x.shape)

    def U_grid(self, n_x: int = 200, n_m: int = 200):
        x, m = self.waiting_grid(n_x, n_m)
        lam = self.sol.lam.as_array()
        A = np.stack(self.sol.A_of(m[0]))  # (4, n_m)
        U = np.einsum("k,kj,kij->ij", lam, A,
                      np.exp(lam[:, None, None] * x[None, :, :]))
        U = U - cost_c(m[0], self.params)[None, :]
        return x, m, U

    def write_heatmap_csv(self, path, n_x: int = 200, n_m: int = 200,
                          config_hash: str = "", version: str = ""):
        x, m, U = self.U_grid(n_x, n_m)
        rows = np.column_stack([x.ravel(), m.ravel(), U.ravel()])
        _write_table(path, "x,m,U", rows, config_hash, version)


@dataclass(frozen=True)
class HJBReport:
    """Max residuals of the extended system; tolerances are the assert levels."""

    pde_interior: float          # kappa/x-derivative balance in the waiting region
    gradient_action: float       # |f_x - beta(kappa) c(m)| for x >= b(m)
    generator_max: float         # generator value for x > b(m) (must be <= tol)
    generator_mismatch: float    # |generator - closed form|
    U_min: float                 # min of U on the waiting grid (must be >= -tol)
    neumann: float               # one-sided f_m at the diagonal
    corner: float                # |f(0, 0, kappa)|
    a3_max: float
    rho_bound: float
    rho_within_bound: bool
    a3_cross_flag: bool          # A3 > 0 somewhere yet the inequality still holds

    tol_pde: float = 1e-5
    tol_gradient: float = 1e-8
    tol_generator: float = 1e-8
    tol_generator_mismatch: float = 1e-6
    tol_U: float = 1e-8
    tol_neumann: float = 1e-4
    tol_corner: float = 1e-12

    @property
    def passed(self) -> bool:
        return (self.pde_interior <= self.tol_pde
                and self.gradient_action <= self.tol_gradient
                and self.generator_max <= self.tol_generator
                and self.generator_mismatch <= self.tol_generator_mismatch
                and self.U_min >= -self.tol_U
                and self.neumann <= self.tol_neumann
                and self.corner <= self.tol_corner)

    def as_dict(self) -> dict:
        return {
            "pde_interior": self.pde_interior,
            "gradient_action": self.gradient_action,
            "generator_max": self.generator_max,
            "generator_mismatch": self.generator_mismatch,
            "U_min": self.U_min,
            "neumann": self.neumann,
            "corner": self.corner,
            "a3_max": self.a3_max,
            "rho_bound": self.rho_bound,
            "rho_within_bound": self.rho_within_bound,
            "a3_cross_flag": self.a3_cross_flag,
            "passed": self.passed,
            "tolerances": {
                "pde": self.tol_pde, "gradient": self.tol_gradient,
                "generator": self.tol_generator,
                "generator_mismatch": self.tol_generator_mismatch,
                "U": self.tol_U, "neumann": self.tol_neumann,
                "corner": self.tol_corner,
            },
        }


def verify_hjb(surf: ValueSurface, n_grid: int = 200,
               kappas: Iterable[float] = (0.0, 0.5, 1.0, 2.0),
               a3_offset: float = 0.0) -> HJBReport:
    """Numerical verification of the full variational system.

    a3_offset is a test hook: it corrupts the A3 coefficient inside the U
    evaluation only, so negative-control tests can confirm the checker
    notices a broken surface.
    """
    from .model import rho_bound as _rho_bound

    p, sol = surf.params, surf.sol
    lam = sol.lam.as_array()
    kappas = tuple(kappas)
    h = 1e-5

    # (a) interior balance via central differences, kappa away from 0
    xw, mw = surf.waiting_grid(24, 24)
    pde = 0.0
    for k in (0.5, 1.0, 2.0):
        for i in range(1, xw.shape[0] - 1):
            for j in range(xw.shape[1]):
                x, m = float(xw[i, j]), float(mw[i, j])
                hx = h * (1.0 + abs(x))
                if x - hx < m or x + hx > sol.b_of(m):
                    continue
                fk = (surf.eval_f(x, m, k + h) - surf.eval_f(x, m, k - h)) / (2 * h)
                fx = (surf.eval_f(x + hx, m, k) - surf.eval_f(x - hx, m, k)) / (2 * hx)
                fxx = (surf.eval_f(x + hx, m, k) - 2 * surf.eval_f(x, m, k)
                       + surf.eval_f(x - hx, m, k)) / (hx * hx)
                pde = max(pde, abs(fk + p.mu * fx + 0.5 * p.sigma ** 2 * fxx))

    # (b) + (c): action region, x strictly above the barrier
    grad = gen_max = gen_mis = 0.0
    rate = p.rho * p.delta + (1.0 - p.rho) * (p.delta + p.gamma)
    m_samples = np.linspace(0.0, sol.m_star, 21)
    for m in m_samples:
        m = float(m)
        b_m = sol.b_of(m)
        for w in (0.05, 0.2, 0.5, 1.0):
            x = b_m + w
            hx = h * (1.0 + abs(x))
            for k in kappas:
                fx = (surf.eval_f(x + hx, m, k)
                      - surf.eval_f(x - hx, m, k)) / (2 * hx)
                grad = max(grad, abs(fx - beta(k, p) * cost_c(m, p)))
            # generator at kappa = 0 with a one-sided second-order kappa stencil
            f0 = surf.eval_f(x, m, 0.0)
            fk = (-3 * f0 + 4 * surf.eval_f(x, m, h) - surf.eval_f(x, m, 2 * h)) / (2 * h)
            fx = (surf.eval_f(x + hx, m, 0.0) - surf.eval_f(x - hx, m, 0.0)) / (2 * hx)
            fxx = (surf.eval_f(x + hx, m, 0.0) - 2 * f0
                   + surf.eval_f(x - hx, m, 0.0)) / (hx * hx)
            val = fk + p.mu * fx + 0.5 * p.sigma ** 2 * fxx
            closed = -cost_c(m, p) * (x - b_m) * rate
            gen_max = max(gen_max, val)
            gen_mis = max(gen_mis, abs(val - closed))

    # (d) gradient slack on the waiting grid
    x2, m2, U = surf.U_grid(n_grid, n_grid)
    if a3_offset:
        U = U + lam[2] * a3_offset * np.exp(lam[2] * x2)
    u_min = float(U.min())

    # (e) one-sided minimum-derivative at the diagonal.  Differencing in m
    # runs across the stored coefficient samples, so stick to exact grid
    # nodes (uniform spacing, no interpolation error) and a second-order
    # backward stencil.
    neu = 0.0
    mg = sol.m_grid
    hi = int(np.searchsorted(mg, min(sol.m_bar, sol.m_star)))
    hi = min(hi, len(mg) - 1)
    for ki in np.unique(np.linspace(2, hi, 25, dtype=int)):
        if ki < 2:
            continue
        hp = mg[ki] - mg[ki - 1]
        if abs((mg[ki - 1] - mg[ki - 2]) - hp) > 1e-12 * (1 + hp):
            continue  # skip the non-uniform landing node
        m, m1, m2 = float(mg[ki]), float(mg[ki - 1]), float(mg[ki - 2])
        x = m + 1e-9
        if x >= sol.b_of(m):
            continue
        for k in kappas:
            val = (3 * surf.eval_f(x, m, k) - 4 * surf.eval_f(x, m1, k)
                   + surf.eval_f(x, m2, k)) / (2 * hp)
            neu = max(neu, abs(val))

    # (f) corner value
    corner = max(abs(surf.eval_f(0.0, 0.0, k)) for k in kappas)

    a3_max = float(np.max(sol.A3)) + a3_offset
    rb = _rho_bound(p)
    return HJBReport(
        pde_interior=float(pde), gradient_action=float(grad),
        generator_max=float(gen_max), generator_mismatch=float(gen_mis),
        U_min=u_min, neumann=float(neu), corner=float(corner),
        a3_max=a3_max, rho_bound=rb, rho_within_bound=bool(p.rho < rb),
        a3_cross_flag=bool(a3_max > 0 and u_min >= -1e-8))
