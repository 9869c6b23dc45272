"""Free-boundary solver: scalar root for b(0), coupled ODE for (b, F).

The barrier starts at the root of a strictly decreasing scalar function G
(guaranteed bracket from the two degenerate mixtures), then evolves in the
running-minimum variable m through a 2x2 linear-in-derivatives system
X * [b'; F'] = R assembled from the exponent quadruple.  The coefficient
functions A1..A4 follow pointwise in closed form; past the cost threshold
m_bar everything is frozen and the grid is extended constantly out to the
diagonal touch m*.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import BracketFailure, SingularSystem
from .model import LambdaQuad, ModelParams

DET_FLOOR = 1e-10
DIAG_TOL = 1e-6
LOCAL_ERR_TOL = 1e-9
ROOT_TOL = 1e-12


def G_of_b(b, lam: LambdaQuad, rho: float):
    """Scalar function whose root is the barrier at m = 0.

    Oriented so G decreases through its root; strictly monotone between
    the two degenerate-mixture roots, so the root there is unique.
    """
    l1, l2, l3, l4 = lam.lambda1, lam.lambda2, lam.lambda3, lam.lambda4
    e1, e2 = np.exp(-l1 * b), np.exp(-l2 * b)
    e3, e4 = np.exp(-l3 * b), np.exp(-l4 * b)
    frac12 = (l2 ** 2 * e1 - l1 ** 2 * e2) / (l2 * e1 - l1 * e2)
    frac34 = (l4 ** 2 * e3 - l3 ** 2 * e4) / (l4 * e3 - l3 * e4)
    return -(rho * frac12 + (1.0 - rho) * frac34)


def root_bracket(lam: LambdaQuad) -> tuple[float, float]:
    """Open interval guaranteed to contain the root of G.

    The endpoints are the closed-form roots of the two degenerate
    mixtures: ln((l3/l4)^2)/(l4-l3) and ln((l1/l2)^2)/(l2-l1).
    """
    lo = math.log((lam.lambda3 / lam.lambda4) ** 2) / (lam.lambda4 - lam.lambda3)
    hi = math.log((lam.lambda1 / lam.lambda2) ** 2) / (lam.lambda2 - lam.lambda1)
    return lo, hi


def solve_b0(lam: LambdaQuad, rho: float) -> float:
    """Bisection for the unique root of G on the guaranteed bracket.

    Runs the bracket down to machine width so both |G| < 1e-12 and
    width < 1e-12 hold; at rho in {0, 1} the root is an endpoint.
    """
    lo, hi = root_bracket(lam)
    if lo > hi:
        lo, hi = hi, lo
    g_lo, g_hi = G_of_b(lo, lam, rho), G_of_b(hi, lam, rho)
    if abs(g_lo) < ROOT_TOL:
        return lo
    if abs(g_hi) < ROOT_TOL:
        return hi
    if not g_lo * g_hi < 0.0:
        raise BracketFailure(
            f"no sign change on [{lo!r}, {hi!r}]: G = ({g_lo!r}, {g_hi!r})")
    best_b, best_g = (lo, g_lo) if abs(g_lo) < abs(g_hi) else (hi, g_hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        g_mid = G_of_b(mid, lam, rho)
        if abs(g_mid) < abs(best_g):
            best_b, best_g = mid, g_mid
        if g_mid == 0.0:
            return mid
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo = mid
        else:
            hi = mid
    return best_b


def F0_forms(b0: float, lam: LambdaQuad, rho: float) -> tuple[float, float]:
    """Both closed-form expressions for F(0); they agree exactly when G(b0)=0."""
    l1, l2, l3, l4 = lam.lambda1, lam.lambda2, lam.lambda3, lam.lambda4
    e1, e2 = math.exp(-l1 * b0), math.exp(-l2 * b0)
    e3, e4 = math.exp(-l3 * b0), math.exp(-l4 * b0)
    form_rho = rho * (l2 ** 2 * e1 - l1 ** 2 * e2) / (l2 * e1 - l1 * e2)
    form_alt = -(1.0 - rho) * (l4 ** 2 * e3 - l3 ** 2 * e4) / (l4 * e3 - l3 * e4)
    return form_rho, form_alt


def F0_from_b0(b0: float, lam: LambdaQuad, rho: float) -> float:
    return F0_forms(b0, lam, rho)[0]


def coefficients(m, b, F, lam: LambdaQuad, rho: float, q: float):
    """Closed-form A1..A4 at (m, b(m), F(m)); m already clamped at m_bar."""
    l1, l2, l3, l4 = lam.lambda1, lam.lambda2, lam.lambda3, lam.lambda4
    eq = np.exp(-q * np.asarray(m, dtype=float))
    A1 = np.exp(-l1 * b) * (rho * eq * l2 - F) / (l1 * (l2 - l1))
    A2 = np.exp(-l2 * b) * (rho * eq * l1 - F) / (l2 * (l1 - l2))
    A3 = np.exp(-l3 * b) * ((1.0 - rho) * eq * l4 + F) / (l3 * (l4 - l3))
    A4 = np.exp(-l4 * b) * ((1.0 - rho) * eq * l3 + F) / (l4 * (l3 - l4))
    return A1, A2, A3, A4


def ode_rhs(m: float, b: float, F: float, lam: LambdaQuad, rho: float, q: float,
            det_floor: float = DET_FLOOR):
    """Assemble the 2x2 system and return (b', F', det) via a Cramer solve."""
    l1, l2, l3, l4 = lam.lambda1, lam.lambda2, lam.lambda3, lam.lambda4
    d = m - b
    e1, e2 = math.exp(l1 * d), math.exp(l2 * d)
    e3, e4 = math.exp(l3 * d), math.exp(l4 * d)
    eq = math.exp(-q * m)
    X11 = l1 * l2 * (rho * eq * (l1 * e2 - l2 * e1) + (e1 - e2) * F)
    X12 = l1 * e2 - l2 * e1
    X21 = l3 * l4 * ((1.0 - rho) * eq * (l3 * e4 - l4 * e3) - (e3 - e4) * F)
    X22 = l4 * e3 - l3 * e4
    R1 = rho * q * eq * (l2 ** 2 * e1 - l1 ** 2 * e2)
    R2 = (1.0 - rho) * q * eq * (l4 ** 2 * e3 - l3 ** 2 * e4)
    det = X11 * X22 - X21 * X12
    if det <= det_floor:
        raise SingularSystem(m, det)
    db = (R1 * X22 - R2 * X12) / det
    dF = (X11 * R2 - X21 * R1) / det
    return db, dF, det


@dataclass(frozen=True)
class BoundarySolution:
    """Densely sampled (b, F, A1..A4) on [0, m*] with scalar summaries."""

    m_grid: np.ndarray
    b: np.ndarray
    F: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray
    b0: float
    F0: float
    m_star: float
    det_min: float
    lam: LambdaQuad
    rho: float
    q: float
    m_bar: float
    step_used: float
    max_local_err: float
    terminated_by: str  # "m_bar" | "diagonal" | "singular"
    singular_at: Optional[float] = None

    @cached_property
    def _b_interp(self):
        return PchipInterpolator(self.m_grid, self.b, extrapolate=False)

    def _clamp(self, m):
        return np.clip(m, 0.0, self.m_grid[-1])

    def b_of(self, m):
        out = self._b_interp(self._clamp(m))
        return float(out) if np.ndim(m) == 0 else out

    def F_of(self, m):
        out = np.interp(self._clamp(m), self.m_grid, self.F)
        return float(out) if np.ndim(m) == 0 else out

    def A_of(self, m):
        mc = self._clamp(m)
        return tuple(np.interp(mc, self.m_grid, a)
                     for a in (self.A1, self.A2, self.A3, self.A4))

    def header_dict(self, config_hash: str = "", version: str = "") -> dict:
        return {
            "b0": self.b0, "F0": self.F0, "m_star": self.m_star,
            "det_min": self.det_min, "m_bar": (None if math.isinf(self.m_bar)
                                               else self.m_bar),
            "rho": self.rho, "q": self.q,
            "lambda": [self.lam.lambda1, self.lam.lambda2,
                       self.lam.lambda3, self.lam.lambda4],
            "step": self.step_used, "max_local_err": self.max_local_err,
            "terminated_by": self.terminated_by, "singular_at": self.singular_at,
            "config_hash": config_hash, "version": version,
        }

    def write_csv(self, path, config_hash: str = "", version: str = ""):
        rows = np.column_stack([self.m_grid, self.b, self.F,
                                self.A1, self.A2, self.A3, self.A4])
        _write_table(path, "m,b,F,A1,A2,A3,A4", rows, config_hash, version)

    def write_json_header(self, path, config_hash: str = "", version: str = ""):
        with open(path, "w") as fh:
            json.dump(self.header_dict(config_hash, version), fh, indent=2)
            fh.write("\n")


def _write_table(path, header: str, rows, config_hash: str, version: str):
    with open(path, "w") as fh:
        fh.write(f"# version={version} config_hash={config_hash}\n")
        fh.write(header + "\n")
        for row in np.atleast_2d(rows):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _rk4(m, y, h, rhs):
    k1 = rhs(m, y)
    k2 = rhs(m + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(m + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(m + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_boundary(params: ModelParams, lam: Optional[LambdaQuad] = None,
                       step: float = 1e-4, det_floor: float = DET_FLOOR,
                       diag_tol: float = DIAG_TOL) -> BoundarySolution:
    """March (b, F) from m = 0 with classical RK4 on a fixed grid.

    Stops at m_bar (then extends constantly to m* = b(m_bar)), at the
    diagonal touch b(m) - m <= diag_tol (m* = that m), or on a singular
    system.  A step-doubling error estimate above LOCAL_ERR_TOL triggers
    one automatic halving of the whole run.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    lam = params.lam if lam is None else lam
    rho, q, m_bar = params.rho, params.q, params.m_bar

    b0 = solve_b0(lam, rho)
    F0 = F0_from_b0(b0, lam, rho)

    state = {"det_min": math.inf}

    def rhs(m, y):
        db, dF, det = ode_rhs(m, float(y[0]), float(y[1]), lam, rho, q, det_floor)
        if det < state["det_min"]:
            state["det_min"] = det
        return np.array([db, dF])

    def advance(m, y, h):
        # step-doubling: full step vs two half steps; keep the finer result
        full = _rk4(m, y, h, rhs)
        half = _rk4(m + 0.5 * h, _rk4(m, y, 0.5 * h, rhs), 0.5 * h, rhs)
        return half, float(np.max(np.abs(half - full)))

    def run(h):
        ms, bs, Fs = [0.0], [b0], [F0]
        max_err = 0.0
        m, y = 0.0, np.array([b0, F0])
        while True:
            if math.isfinite(m_bar) and m >= m_bar - 1e-15:
                return ms, bs, Fs, max_err, "m_bar", None
            h_k = min(h, m_bar - m) if math.isfinite(m_bar) else h
            try:
                y_new, err = advance(m, y, h_k)
            except SingularSystem as exc:
                return ms, bs, Fs, max_err, "singular", exc
            max_err = max(max_err, err)
            m_new = m + h_k
            if y_new[0] - m_new <= diag_tol:
                # land exactly on the diagonal touch with a bisected partial step
                lo_h, hi_h = 0.0, h_k
                for _ in range(80):
                    mid_h = 0.5 * (lo_h + hi_h)
                    y_mid, _ = advance(m, y, mid_h)
                    if y_mid[0] - (m + mid_h) <= diag_tol:
                        hi_h = mid_h
                    else:
                        lo_h = mid_h
                    if hi_h - lo_h < 1e-15 * max(1.0, h_k):
                        break
                if hi_h > 1e-12:
                    y_new, err = advance(m, y, hi_h)
                    ms.append(m + hi_h)
                    bs.append(float(y_new[0]))
                    Fs.append(float(y_new[1]))
                return ms, bs, Fs, max_err, "diagonal", None
            m, y = m_new, y_new
            ms.append(m)
            bs.append(float(y[0]))
            Fs.append(float(y[1]))

    step_used = step
    ms, bs, Fs, max_err, fate, exc = run(step_used)
    if max_err > LOCAL_ERR_TOL:
        step_used = 0.5 * step
        state["det_min"] = math.inf
        ms, bs, Fs, max_err, fate, exc = run(step_used)

    m_arr = np.asarray(ms)
    b_arr = np.asarray(bs)
    F_arr = np.asarray(Fs)

    if fate == "m_bar":
        m_star = float(b_arr[-1])
        # constant extension out to the diagonal touch of the frozen barrier
        n_ext = max(int(math.ceil((m_star - m_bar) / step_used)), 1)
        ext = np.linspace(m_bar, m_star, n_ext + 1)[1:]
        m_arr = np.concatenate([m_arr, ext])
        b_arr = np.concatenate([b_arr, np.full(len(ext), b_arr[-1])])
        F_arr = np.concatenate([F_arr, np.full(len(ext), F_arr[-1])])
    else:
        m_star = float(m_arr[-1])

    m_eff = np.minimum(m_arr, m_bar)
    A1, A2, A3, A4 = coefficients(m_eff, b_arr, F_arr, lam, rho, q)

    sol = BoundarySolution(
        m_grid=m_arr, b=b_arr, F=F_arr, A1=A1, A2=A2, A3=A3, A4=A4,
        b0=b0, F0=F0, m_star=m_star, det_min=state["det_min"], lam=lam,
        rho=rho, q=q, m_bar=m_bar, step_used=step_used,
        max_local_err=max_err, terminated_by=fate,
        singular_at=(exc.m if exc is not None else None))
    if exc is not None:
        err = SingularSystem(exc.m, exc.det)
        err.partial = sol
        raise err
    return sol


@dataclass(frozen=True)
class BoundaryReport:
    """Max-over-grid residuals of the boundary and smooth-fit conditions."""

    deriv_12: float       # |A1' e^{l1 m} + A2' e^{l2 m}|, central differences
    deriv_34: float       # |A3' e^{l3 m} + A4' e^{l4 m}|
    fit_first: float      # |sum_i l_i A_i e^{l_i b} - e^{-q min(m, m_bar)}|
    fit_second: float     # |sum_i l_i^2 A_i e^{l_i b}|
    zero_sum_12: float    # |A1(0) + A2(0)|
    zero_sum_34: float    # |A3(0) + A4(0)|

    def as_dict(self) -> dict:
        return {
            "deriv_12": self.deriv_12, "deriv_34": self.deriv_34,
            "fit_first": self.fit_first, "fit_second": self.fit_second,
            "zero_sum_12": self.zero_sum_12, "zero_sum_34": self.zero_sum_34,
        }


def check_boundary_conditions(sol: BoundarySolution) -> BoundaryReport:
    lam, q = sol.lam, sol.q
    l = lam.as_array()
    m, b = sol.m_grid, sol.b
    A = np.stack([sol.A1, sol.A2, sol.A3, sol.A4])

    # derivative conditions on the interior of the varying range [0, min(m_bar, m*)]
    if math.isfinite(sol.m_bar):
        hi = int(np.searchsorted(m, sol.m_bar, side="left"))
    else:
        hi = len(m) - 1
    d12 = d34 = 0.0
    if hi >= 2:
        sl = slice(1, hi)
        dm = m[2:hi + 1] - m[:hi - 1]
        dA = (A[:, 2:hi + 1] - A[:, :hi - 1]) / dm
        mi = m[sl]
        d12 = float(np.max(np.abs(dA[0] * np.exp(l[0] * mi)
                                  + dA[1] * np.exp(l[1] * mi))))
        d34 = float(np.max(np.abs(dA[2] * np.exp(l[2] * mi)
                                  + dA[3] * np.exp(l[3] * mi))))

    eb = np.exp(np.outer(l, b))
    target = np.exp(-q * np.minimum(m, sol.m_bar))
    fit1 = float(np.max(np.abs((l[:, None] * A * eb).sum(axis=0) - target)))
    fit2 = float(np.max(np.abs((l[:, None] ** 2 * A * eb).sum(axis=0))))

    return BoundaryReport(
        deriv_12=d12, deriv_34=d34, fit_first=fit1, fit_second=fit2,
        zero_sum_12=float(abs(A[0, 0] + A[1, 0])),
        zero_sum_34=float(abs(A[2, 0] + A[3, 0])))
