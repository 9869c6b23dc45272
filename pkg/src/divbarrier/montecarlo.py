"""Monte Carlo estimation of the payoff and empirical equilibrium tests.

Paths run in lockstep blocks: each fixed-size block owns one
counter-based stream, so results are deterministic for a given seed no
matter how blocks are scheduled across workers.  Dead paths are
compacted away except in common-random-number mode, where both arms
draw full-block normals every step so the draw consumed by path p at
step k is identical in the two arms.

Ruin is monitored with a Brownian-bridge correction: between grid
points a surviving pair (X_k, X_{k+1}) is killed with probability
exp(-2 X_k X_{k+1} / (sigma^2 dt)), which removes the O(sqrt(dt))
upward bias of pure grid monitoring (paths that dip below zero and
recover between observations).  Grid-level deaths are the p = 1 case
of the same rule.  Reflection at the barrier cannot interfere: kill
candidates sit within a few sigma*sqrt(dt) of zero, far below b.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boundary import BoundarySolution
from .errors import InvalidInitial
from .model import ModelParams, beta, cost_c
from .paths import cost_jump_integral
from .simulate import initial_lump, path_rng
from .surface import ValueSurface

DEFAULT_BLOCK = 4096


@dataclass(frozen=True)
class PayoffEstimate:
    mean: float
    std_err: float
    n_paths: int
    seed: int
    config_hash: str = ""

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("need n_paths >= 2 for a standard error")


@dataclass(frozen=True)
class PerturbationEstimate:
    estimate: float
    std_err: float
    n_paths: int
    h: float
    mode: str
    seed: int


def z_score(est: PayoffEstimate, reference: float) -> float:
    if not est.std_err > 0:
        raise ValueError("std_err must be > 0")
    return (est.mean - reference) / est.std_err


def default_horizon(params: ModelParams) -> float:
    return 40.0 / params.delta


def _lump_sizes(sol: BoundarySolution, X, M, tol: float = 1e-12):
    """Vector bisection for the lump taking each X onto the barrier."""
    X = np.asarray(X, dtype=float)
    M = np.asarray(M, dtype=float)
    need = X > sol.b_of(M)
    lo = np.zeros_like(X)
    hi = np.where(need, X, 0.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        under = sol.b_of(np.minimum(M, X - mid)) < X - mid
        lo = np.where(under, mid, lo)
        hi = np.where(under, hi, mid)
    return np.where(need, hi, 0.0)


def _lump_payoff(x_pre, m_pre, dD, params: ModelParams):
    """Vectorized cost-weighted size of a lump paid from (x_pre, m_pre)."""
    x_pre = np.asarray(x_pre, dtype=float)
    m_pre = np.asarray(m_pre, dtype=float)
    dD = np.asarray(dD, dtype=float)
    q, m_bar = params.q, params.m_bar
    a = np.minimum(np.maximum(x_pre - m_pre, 0.0), dD)
    out = np.exp(-q * np.minimum(m_pre, m_bar)) * a
    if q == 0.0:
        return out + (dD - a)
    u1 = np.minimum(np.maximum(x_pre - m_bar, a), dD)
    out = out + math.exp(-q * m_bar) * (u1 - a)
    tail = dD > u1
    # expm1 form of (e^{-q(x-dD)} - e^{-q(x-u1)})/q: exact as q -> 0
    out = out + np.where(
        tail, np.exp(-q * (x_pre - u1)) * np.expm1(q * (dD - u1)) / q, 0.0)
    return out


def _entry_state(sol, params, x0, m0, n, pause: bool, extra_lump: float):
    """Payoff/dividend arrays seeded with the time-zero lump, if any."""
    if m0 < 0 or x0 < m0:
        raise InvalidInitial(f"need 0 <= m0 <= x0, got (x0={x0!r}, m0={m0!r})")
    payoff = np.zeros(n)
    dividends = np.zeros(n)
    x0_eff, m0_eff = x0, m0
    if not pause:
        d_base = initial_lump(sol.b_of, x0, m0) + extra_lump
        if d_base > 0.0:
            payoff += cost_jump_integral(x0, m0, d_base, params)
            dividends += d_base
            x0_eff = x0 - d_base
            m0_eff = min(m0, x0_eff)
    return payoff, dividends, x0_eff, m0_eff


def _run_block(sol: BoundarySolution, params: ModelParams, x0: float, m0: float,
               n: int, T: float, dt: float, seed: int, stream: int,
               mode: str = "equilibrium", pause_h: float = 0.0,
               extra_lump: float = 0.0, crn: bool = False) -> np.ndarray:
    """Simulate one block of paths in lockstep; returns per-path payoffs.

    mode "equilibrium": reflect at b(M) from t=0 (plus extra_lump at 0).
    mode "pause": no dividends on [0, pause_h), then a lump onto the
    barrier and the equilibrium law afterwards.
    """
    pause = mode == "pause"
    n_steps = int(round(T / dt))
    k_resume = int(round(pause_h / dt)) if pause else 0
    if pause and not 0 <= k_resume < n_steps:
        raise ValueError("pause_h must lie inside the horizon")
    payoff, dividends, x0_eff, m0_eff = _entry_state(sol, params, x0, m0, n,
                                                     pause, extra_lump)
    if x0_eff <= 0.0:
        return payoff  # bankrupt at time zero (any lump already counted)

    rng = path_rng(seed, stream)
    sq = params.sigma * math.sqrt(dt)
    drift = params.mu * dt
    betas = beta(np.arange(n_steps, dtype=float) * dt, params)

    if crn:
        return _loop_crn(sol, params, payoff, dividends, x0_eff, m0_eff, n,
                         n_steps, k_resume if pause else -1, rng, sq, drift,
                         betas)
    # a constant barrier with flat cost needs no per-path minimum at all
    flat = params.q == 0.0 and float(np.ptp(sol.b)) == 0.0
    if flat and not pause:
        return _loop_flat(sol, payoff, dividends, x0_eff, n, n_steps, rng,
                          sq, drift, betas)
    return _loop_general(sol, params, payoff, dividends, x0_eff, m0_eff, n,
                         n_steps, k_resume if pause else -1, rng, sq, drift,
                         betas)


def _bridge_kill(rng, x_old, x_new, cand, sq2):
    """Indices among cand killed by the bridge-crossing rule.

    The exponent is capped at 0 so paths already at or below zero get
    p = 1; uniform draws depend only on path data, never on scheduling.
    """
    arg = np.minimum(-2.0 * x_old[cand] * x_new[cand] / sq2, 0.0)
    return cand[rng.random(cand.size) < np.exp(arg)]


def _loop_flat(sol, payoff, dividends, x0, n, n_steps, rng, sq, drift, betas):
    """Constant barrier, unit cost: no minimum tracking, scalar barrier."""
    b_const = float(sol.b[0])
    sq2 = sq * sq
    thresh = 13.0 * sq2  # beyond this, crossing probability < 6e-12
    X = np.full(n, x0)
    idx = np.arange(n)
    tmp = np.empty(n)
    for k in range(n_steps):
        z = rng.standard_normal(X.size)
        np.multiply(z, sq, out=z)
        z += drift
        z += X
        t = tmp[: z.size]
        np.subtract(z, b_const, out=t)
        np.maximum(t, 0.0, out=t)
        nz = np.flatnonzero(t)
        if nz.size:
            pays = t[nz]
            payoff[idx[nz]] += betas[k] * pays
            dividends[idx[nz]] += pays
            np.subtract(z, t, out=z)
        np.multiply(X, z, out=t)
        cand = np.flatnonzero(t < thresh)
        if cand.size:
            z[_bridge_kill(rng, X, z, cand, sq2)] = -1e-300
        X = z
        if X.min() <= 0.0:
            keep = X > 0.0
            X, idx = X[keep], idx[keep]
            if X.size == 0:
                break
    if np.any(payoff > dividends + 1e-9):
        raise AssertionError("per-path payoff exceeded its dividend bound")
    return payoff


def _loop_general(sol, params, payoff, dividends, x0, m0, n, n_steps,
                  k_resume, rng, sq, drift, betas):
    """Moving barrier via running minimum; dead paths compacted away."""
    sq2 = sq * sq
    thresh = 13.0 * sq2
    X = np.full(n, x0)
    M = np.full(n, m0)
    idx = np.arange(n)
    b_cur = np.full(n, sol.b_of(m0))
    c_cur = cost_c(M, params)
    tmp = np.empty(n)
    paused = k_resume >= 0
    for k in range(n_steps):
        if paused and k == k_resume:
            d = _lump_sizes(sol, X, M)
            nz = np.flatnonzero(d)
            if nz.size:
                payoff[idx[nz]] += betas[k] * _lump_payoff(X[nz], M[nz],
                                                           d[nz], params)
                dividends[idx[nz]] += d[nz]
                X = X - d
                M = np.minimum(M, X)
            b_cur = sol.b_of(M)
            c_cur = cost_c(M, params)
            paused = False
        z = rng.standard_normal(X.size)
        np.multiply(z, sq, out=z)
        z += drift
        z += X
        if not paused:
            t = tmp[: z.size]
            np.subtract(z, b_cur, out=t)
            np.maximum(t, 0.0, out=t)
            nz = np.flatnonzero(t)
            if nz.size:
                pays = t[nz]
                payoff[idx[nz]] += betas[k] * c_cur[nz] * pays
                dividends[idx[nz]] += pays
                np.subtract(z, t, out=z)
        t = tmp[: z.size]
        np.multiply(X, z, out=t)
        cand = np.flatnonzero(t < thresh)
        if cand.size:
            # strictly negative sentinel: with m0 = 0 the running minimum
            # stays exactly 0 while alive, and death detection needs X < M
            z[_bridge_kill(rng, X, z, cand, sq2)] = -1e-300
        X = z
        # while alive M > 0, so any death (X <= 0) is also a new minimum
        ni = np.flatnonzero(X < M)
        if ni.size:
            mni = X[ni]
            M[ni] = mni
            if not paused:
                b_cur[ni] = sol.b_of(mni)
            c_cur[ni] = cost_c(mni, params)
            if mni.min() <= 0.0:
                keep = X > 0.0
                X, M, b_cur, c_cur, idx = (X[keep], M[keep], b_cur[keep],
                                           c_cur[keep], idx[keep])
                if X.size == 0:
                    break
    # every dividend accrues while the running minimum is >= 0, where the
    # cost weight is <= 1, so total payoff cannot exceed total dividends
    if np.any(payoff > dividends + 1e-9):
        raise AssertionError("per-path payoff exceeded its dividend bound")
    return payoff


def _loop_crn(sol, params, payoff, dividends, x0, m0, n, n_steps, k_resume,
              rng, sq, drift, betas):
    """Masked full-width loop: draw order is independent of deaths."""
    sq2 = sq * sq
    X = np.full(n, x0)
    M = np.full(n, m0)
    alive = np.ones(n, dtype=bool)
    b_cur = np.full(n, sol.b_of(m0))
    c_cur = cost_c(M, params)
    paused = k_resume >= 0
    for k in range(n_steps):
        if paused and k == k_resume:
            d = np.zeros(n)
            if np.any(alive):
                d[alive] = _lump_sizes(sol, X[alive], M[alive])
            nz = np.flatnonzero(d)
            if nz.size:
                payoff[nz] += betas[k] * _lump_payoff(X[nz], M[nz], d[nz],
                                                      params)
                dividends[nz] += d[nz]
                X = X - d
                M = np.minimum(M, X)
            b_cur = sol.b_of(M)
            c_cur = cost_c(M, params)
            paused = False
        if not np.any(alive):
            break  # arms own separate generators, so early exit is safe
        z = rng.standard_normal(n)
        u = rng.random(n)  # fixed-width draw keeps the two arms aligned
        x_prev = X
        x_free = np.where(alive, X + drift + sq * z, X)
        if not paused:
            pay = np.maximum(x_free - b_cur, 0.0)
            pay[~alive] = 0.0
            nz = np.flatnonzero(pay)
            if nz.size:
                payoff[nz] += betas[k] * c_cur[nz] * pay[nz]
                dividends[nz] += pay[nz]
            X = x_free - pay
        else:
            X = x_free
        arg = np.minimum(-2.0 * x_prev * X / sq2, 0.0)
        alive &= ~(u < np.exp(arg))
        ni = np.flatnonzero((X < M) & alive)
        if ni.size:
            mni = X[ni]
            M[ni] = mni
            if not paused:
                b_cur[ni] = sol.b_of(mni)
            c_cur[ni] = cost_c(mni, params)
        alive &= X > 0.0
    if np.any(payoff > dividends + 1e-9):
        raise AssertionError("per-path payoff exceeded its dividend bound")
    return payoff


def _payoff_worker(task):
    (sol, params, x0, m0, size, T, dt, seed, stream) = task
    return _run_block(sol, params, x0, m0, size, T, dt, seed, stream)


def _perturb_worker(task):
    (sol, params, x0, m0, size, T, dt, seed, stream, mode, h, eps) = task
    base = _run_block(sol, params, x0, m0, size, T, dt, seed, stream,
                      mode="equilibrium", crn=True)
    if mode == "extra_lump":
        pert = _run_block(sol, params, x0, m0, size, T, dt, seed, stream,
                          mode="equilibrium", extra_lump=eps * h, crn=True)
    else:
        pert = _run_block(sol, params, x0, m0, size, T, dt, seed, stream,
                          mode="pause", pause_h=h, crn=True)
    return pert - base


def _run_tasks(worker, tasks, threads: int):
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, tasks))
    return [worker(t) for t in tasks]


def estimate_payoff(surf: ValueSurface, x0: float, m0: float, n_paths: int,
                    T: Optional[float] = None, dt: float = 1e-4, seed: int = 0,
                    block_size: int = DEFAULT_BLOCK, threads: int = 1,
                    config_hash: str = "", stream_offset: int = 0) -> PayoffEstimate:
    """Sample mean and standard error of the payoff from (x0, m0).

    stream_offset shifts the per-block stream indices so several calls
    under one seed (e.g. rows of a point table) stay independent.
    """
    params, sol = surf.params, surf.sol
    if T is None:
        T = default_horizon(params)
    n_blocks = (n_paths + block_size - 1) // block_size
    tasks = [(sol, params, x0, m0,
              min(block_size, n_paths - i * block_size), T, dt, seed,
              stream_offset + i) for i in range(n_blocks)]
    payoffs = np.concatenate(_run_tasks(_payoff_worker, tasks, threads))
    mean = float(np.mean(payoffs))
    std_err = float(np.std(payoffs, ddof=1) / math.sqrt(n_paths))
    return PayoffEstimate(mean=mean, std_err=std_err, n_paths=n_paths,
                          seed=seed, config_hash=config_hash)


def perturbation_test(surf: ValueSurface, x0: float, m0: float, h: float,
                      mode: str, n_paths: int, seed: int, eps: float = 1.0,
                      T: Optional[float] = None, dt: float = 1e-4,
                      block_size: int = DEFAULT_BLOCK,
                      threads: int = 1) -> PerturbationEstimate:
    """Difference quotient (J(perturbed) - J(equilibrium)) / h.

    mode "extra_lump": an additional eps*h paid on top of the time-zero
    equilibrium lump.  mode "pause": dividends suppressed on [0, h).
    Common random numbers: both arms share each block's stream with
    full-block draws, so eps = 0 gives exactly zero path by path.
    """
    if mode not in ("extra_lump", "pause"):
        raise ValueError(f"unknown perturbation mode {mode!r}")
    if h <= 0:
        raise ValueError("h must be > 0")
    params, sol = surf.params, surf.sol
    if T is None:
        T = default_horizon(params)
    n_blocks = (n_paths + block_size - 1) // block_size
    tasks = [(sol, params, x0, m0,
              min(block_size, n_paths - i * block_size), T, dt, seed, i,
              mode, h, eps) for i in range(n_blocks)]
    diff = np.concatenate(_run_tasks(_perturb_worker, tasks, threads)) / h
    est = float(np.mean(diff))
    se = float(np.std(diff, ddof=1) / math.sqrt(n_paths))
    return PerturbationEstimate(estimate=est, std_err=se, n_paths=n_paths,
                                h=h, mode=mode, seed=seed)
