#!/usr/bin/env python3
"""Degenerate-weight sanity check: at rho=1 (single discount rate) and
q=0 (no reflection cost) the model collapses to the classical constant
dividend barrier.  The free-boundary system then returns a flat b(m)
equal to the textbook optimum, the auxiliary slope F vanishes, and the
value surface loses its m-dependence.
"""
import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from divbarrier import ModelParams, ValueSurface, integrate_boundary

OUT = os.environ.get("DIVBARRIER_OUT", "out")
os.makedirs(OUT, exist_ok=True)

mu, sigma, delta = 1.0, 1.0, 0.5
p = ModelParams(mu=mu, sigma=sigma, delta=delta, gamma=1.0, rho=1.0, q=0.0,
                m_bar=math.inf)

# textbook roots and barrier for the single-rate problem
disc = math.sqrt(mu * mu + 2.0 * sigma * sigma * delta)
r_pos = (-mu + disc) / (sigma * sigma)
r_neg = (-mu - disc) / (sigma * sigma)
b_ref = math.log(r_neg * r_neg / (r_pos * r_pos)) / (r_pos - r_neg)

sol = integrate_boundary(p)
print(f"b0 from the ODE system:  {sol.b0:.12f}")
print(f"textbook barrier level:  {b_ref:.12f}")
print(f"difference:              {abs(sol.b0 - b_ref):.2e}")
print(f"max |b - b0| on grid:    {np.max(np.abs(sol.b - sol.b0)):.2e}")
print(f"max |F| on grid:         {np.max(np.abs(sol.F)):.2e}")

surf = ValueSurface(sol=sol, params=p)


def h(x):
    return np.exp(r_pos * x) - np.exp(r_neg * x)


def h1(x):
    return r_pos * np.exp(r_pos * x) - r_neg * np.exp(r_neg * x)


xs = np.linspace(0.0, b_ref, 200)
v_classical = h(xs) / h1(b_ref)
v_surface = np.array([surf.eval_V(x, 0.0) for x in xs])
print(f"max |V - h/h'(b)|:       {np.max(np.abs(v_surface - v_classical)):.2e}")

fig, ax = plt.subplots(figsize=(6.5, 4.5))
ax.plot(xs, v_surface, lw=1.6, label="surface V(x, 0)")
ax.plot(xs, v_classical, "k--", lw=1.0, label="h(x)/h'(b) reference")
ax.axvline(b_ref, color="gray", lw=0.8, ls=":")
ax.set_xlabel("surplus x")
ax.set_ylabel("value")
ax.set_title("single-rate, zero-cost reduction")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "classical_limit.png"), dpi=130)
print(f"wrote {OUT}/classical_limit.png")
