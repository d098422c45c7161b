"""Action-bounded polynomials through (or near) a set of sample points.

The construction follows the constructive route from smoothing to a
Bernstein-basis polynomial: the interpolant's derivative is first made
continuous by narrow linear ramps, then turned into a polynomial, then
integrated back up. The polynomial step uses the integral (Kantorovich)
variant of the Bernstein operator: its coefficients are exact window
averages of the smoothed derivative, which makes the operator an L^q
contraction, so the q-action of the result never exceeds that of the
smoothed derivative. Certifying a sup-norm tolerance instead would force
degrees far beyond the cap, because the smoothed derivative's Lipschitz
constant scales like 1/ramp-width.

Near-interpolation error concentrates at the knots (the antiderivative has
corners there) and shrinks like max-slope-jump / sqrt(degree); when a
tighter fit is needed, correction rounds add the Kantorovich polynomial of
the residuals' own interpolant, contracting the residual geometrically.

Exact interpolation upgrades the near-interpolant: perturb the targets up
or down by eps1 in all 2^m sign patterns, build a near-interpolant per
pattern, and take the weighted average that the sign structure guarantees
can hit every target exactly. The weighted power mean inequality keeps the
average's action below the worst of the parts, hence below 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .bernstein import (
    DEGREE_CAP,
    BernsteinPolynomial,
    DegreeCapError,
    bernstein_basis_matrix,
    constant_polynomial,
    q_action_poly,
)
from .interpolation import SampleSet, q_action


class SmoothedDerivative:
    """The interpolant's derivative with its jumps bridged by linear ramps.

    Piecewise linear and continuous: equal to segment slope d_i on
    ``(u_i, u_{i+1} - eps2]`` and ramping from d_{i-1} to d_i over
    ``(u_i - eps2, u_i]``. The leading ramp is omitted when the first knot
    sits at 0 (there is no room to its left, and no slope change either).
    """

    def __init__(self, s: SampleSet, eps2: float):
        if len(s) < 2:
            raise ValueError("need at least two points")
        us = np.asarray(s.us)
        vs = np.asarray(s.vs)
        gaps = np.diff(us)
        if eps2 <= 0.0:
            raise ValueError("eps2 must be positive")
        if eps2 >= np.min(gaps):
            raise ValueError(f"eps2={eps2} must be below the smallest knot gap")
        if us[0] > 0.0 and eps2 >= us[0]:
            raise ValueError(f"eps2={eps2} must be below the first knot {us[0]}")
        d = np.concatenate(([0.0], np.diff(vs) / gaps, [0.0]))
        xs = [0.0]
        ys = [d[0] if us[0] > 0.0 else d[1]]
        for i in range(len(us)):
            u = us[i]
            if u == 0.0:
                continue
            xs.extend([u - eps2, u])
            ys.extend([d[i], d[i + 1]])
        if us[-1] < 1.0:
            xs.append(1.0)
            ys.append(d[-1])
        self.eps2 = eps2
        self.slopes = d
        self.xs = np.asarray(xs)
        self.ys = np.asarray(ys)
        self._prefix = np.concatenate(
            ([0.0], np.cumsum(0.5 * (self.ys[1:] + self.ys[:-1]) * np.diff(self.xs)))
        )

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def lipschitz(self) -> float:
        dx = np.diff(self.xs)
        keep = dx > 0.0
        if not np.any(keep):
            return 0.0
        return float(np.max(np.abs(np.diff(self.ys)[keep] / dx[keep])))

    def integral_to(self, x):
        """Exact antiderivative from 0, vectorized (piecewise quadratic)."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        x0 = self.xs[idx]
        y0 = self.ys[idx]
        dx = self.xs[idx + 1] - x0
        dy = self.ys[idx + 1] - y0
        t = x - x0
        slope_part = np.where(dx > 0.0, 0.5 * dy / np.where(dx > 0.0, dx, 1.0) * t * t, 0.0)
        return self._prefix[idx] + y0 * t + slope_part

    def power_integral(self, q: float) -> float:
        """Exact integral of |value|^q over [0, 1], piece by piece."""
        total = 0.0
        for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:]):
            w = x1 - x0
            if w <= 0.0:
                continue
            if y0 == y1:
                total += abs(y0) ** q * w
            else:
                s = (y1 - y0) / w
                total += (_abs_power_anti(y1, q) - _abs_power_anti(y0, q)) / s
        return total


def _abs_power_anti(v: float, q: float) -> float:
    return math.copysign(abs(v) ** (q + 1.0) / (q + 1.0), v)


@dataclass(frozen=True)
class BudgetPlan:
    """The tolerance ledger of one construction run."""

    epsilon: float
    eps1: float | None
    eps2: float
    eps3: float
    C: float
    c1: float
    degree: int


# cached Gauss grid for fast in-pipeline action estimates
@lru_cache(maxsize=4)
def _action_grid(panels: int, order: int):
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    xs = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    ws = (half[:, None] * (0.5 * gw)[None, :] * 2.0).ravel()
    return xs, ws


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _grid_action(deriv_coeffs: np.ndarray, q: float) -> float:
    """Fast composite-Gauss estimate of the action of a derivative poly."""
    xs, ws = _action_grid(192, 8)
    n = len(deriv_coeffs) - 1
    basis = _BASIS_CACHE.get(n)
    if basis is None or basis.shape[0] != len(xs):
        basis = bernstein_basis_matrix(n, xs)
        if len(_BASIS_CACHE) >= 6:
            _BASIS_CACHE.pop(next(iter(_BASIS_CACHE)))
        _BASIS_CACHE[n] = basis
    return float(np.dot(ws, np.abs(basis @ deriv_coeffs) ** q))


def _kantorovich_coeffs(antideriv, n: int) -> np.ndarray:
    # window averages of the derivative = scaled antiderivative increments
    nodes = np.arange(n + 2) / (n + 1)
    return (n + 1) * np.diff(np.asarray(antideriv(nodes), dtype=float))


def _hat_antideriv(us: np.ndarray, rs: np.ndarray) -> Callable:
    # antiderivative of the derivative of the interpolant through (u_i, r_i),
    # i.e. the interpolant itself minus its value at 0
    def anti(x):
        return np.interp(x, us, rs) - np.interp(0.0, us, rs)

    return anti


def _build_near_interpolant(
    s: SampleSet,
    q: float,
    res_target: float,
    act_slack: float,
    degree_cap: int,
    min_degree: int = 32,
) -> tuple[BernsteinPolynomial, BudgetPlan]:
    """Core construction: residuals below res_target, action excess below act_slack."""
    us = np.asarray(s.us)
    vs = np.asarray(s.vs)
    m = len(s)
    base_action = q_action(s, q)
    if np.ptp(vs) == 0.0:
        plan = BudgetPlan(min(res_target, act_slack), None, 0.0, 0.0,
                          2.0 / float(np.min(np.diff(us))), 0.0, 0)
        return constant_polynomial(float(vs[0])), plan
    gaps = np.diff(us)
    d = np.diff(vs) / gaps
    c1 = float(np.max(np.abs(d)))
    c = max(c1 ** q, 1e-12)
    max_jump = float(np.max(np.abs(np.diff(np.concatenate(([0.0], d, [0.0]))))))
    mingap = float(np.min(gaps))
    eps2_cap = 0.499 * mingap
    if us[0] > 0.0:
        eps2_cap = min(eps2_cap, 0.9 * float(us[0]))
    eps2 = min(0.2 * min(act_slack, res_target) / (m * max(c, c1, 1.0)), eps2_cap)
    smooth = SmoothedDerivative(s, eps2)
    smooth_action = smooth.power_integral(q)
    # polynomial-step tolerance honoring both budget constraints:
    # under half the slack, and cheap enough in q-power spread
    eps3 = min(0.45 * res_target,
               (c1 ** q + 0.45 * act_slack) ** (1.0 / q) - c1)

    # correction rounds contract the residual geometrically, so start the
    # degree ladder well below the no-correction estimate and climb on
    # verification failure; building and verifying a level is cheap
    n_seed = (0.45 * max_jump / max(eps3, 1e-13)) ** 2
    n = int(np.clip(2 ** math.ceil(math.log2(max(n_seed / 64.0, 32.0))),
                    min_degree, min(2048, degree_cap)))
    n = max(n, min(min_degree, degree_cap))
    v1 = float(vs[0])
    while True:
        coeffs = _kantorovich_coeffs(smooth.integral_to, n)
        for _ in range(6):
            anti = np.concatenate(([0.0], np.cumsum(coeffs))) / (n + 1)
            p_at_knots = bernstein_basis_matrix(n + 1, us) @ anti + v1
            resid = p_at_knots - vs
            shift = 0.5 * (resid.max() + resid.min())
            if np.max(np.abs(resid - shift)) <= 0.9 * eps3:
                break
            coeffs = coeffs + _kantorovich_coeffs(_hat_antideriv(us, -resid), n)
        anti = np.concatenate(([0.0], np.cumsum(coeffs))) / (n + 1)
        p_at_knots = bernstein_basis_matrix(n + 1, us) @ anti + v1
        resid = p_at_knots - vs
        shift = 0.5 * (resid.max() + resid.min())
        resid_ok = np.max(np.abs(resid - shift)) < eps3
        action_est = _grid_action(coeffs, q)
        action_ok = action_est < base_action + 0.9 * act_slack
        if resid_ok and action_ok:
            poly = BernsteinPolynomial(anti + (v1 - shift))
            plan = BudgetPlan(min(res_target, act_slack), None, eps2,
                              eps3, 2.0 / mingap, c1, poly.degree)
            return poly, plan
        if n >= degree_cap:
            raise DegreeCapError(
                f"degree cap {degree_cap} reached: residual "
                f"{float(np.max(np.abs(resid - shift))):.3e} vs {res_target:.3e}, "
                f"action {action_est:.6f} vs {base_action + act_slack:.6f} "
                f"(smoothed-derivative action {smooth_action:.6f})"
            )
        n = min(2 * n, degree_cap)


def approx_interpolant_poly(
    s: SampleSet, q: float, eps: float, degree_cap: int = DEGREE_CAP
) -> tuple[BernsteinPolynomial, BudgetPlan]:
    """Polynomial within eps of every sample value and of the minimal action.

    Returns the polynomial together with the tolerance plan used to build
    it. Raises ``DegreeCapError`` if the requested eps needs a degree above
    the cap.
    """
    if len(s) < 2:
        raise ValueError("need at least two points; a singleton is a constant")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if q < 1.0:
        raise ValueError("q must be >= 1")
    return _build_near_interpolant(
        s, q, res_target=0.9 * eps, act_slack=0.9 * eps, degree_cap=degree_cap
    )


def weighted_combine(
    fns: Mapping[frozenset, Callable[[float], float]],
    targets: list[tuple[float, float]],
) -> tuple[dict[frozenset, float], Callable[[float], float]]:
    """Convex weights making sign-patterned handles interpolate exactly.

    ``fns`` maps each subset X of target indices to a handle that is above
    target i exactly when i is in X. The recursion merges the half-families
    containing and missing the last index, each already exact on the
    earlier targets, and solves one scalar weight at the last target.
    """
    k = len(targets)
    expected = 1 << k
    if len(fns) != expected:
        raise ValueError(f"need {expected} handles for {k} targets, got {len(fns)}")
    values: dict[frozenset, np.ndarray] = {}
    for key in _all_subsets(k):
        if key not in fns:
            raise ValueError(f"missing handle for subset {sorted(key)}")
        vals = np.array([float(fns[key](u)) for u, _ in targets])
        for i, (_, v) in enumerate(targets):
            above = vals[i] > v
            if vals[i] == v or above != (i in key):
                raise ValueError(
                    f"handle for subset {sorted(key)} is on the wrong side of "
                    f"target {i}: value {vals[i]} vs {v}"
                )
        values[key] = vals

    def solve(level: int, keys: list[frozenset]) -> dict[frozenset, float]:
        if level == 0:
            (key,) = keys
            return {key: 1.0}
        idx = level - 1
        group_a = [key for key in keys if idx in key]
        group_b = [key for key in keys if idx not in key]
        wa = solve(level - 1, group_a)
        wb = solve(level - 1, group_b)
        fa = sum(w * values[key][idx] for key, w in wa.items())
        fb = sum(w * values[key][idx] for key, w in wb.items())
        target = targets[idx][1]
        w = (target - fb) / (fa - fb)
        out = {key: w * wv for key, wv in wa.items()}
        out.update({key: (1.0 - w) * wv for key, wv in wb.items()})
        return out

    weights = solve(k, list(values))
    total = sum(weights.values())
    if not (abs(total - 1.0) <= 1e-12 and all(-1e-15 <= w <= 1.0 + 1e-12 for w in weights.values())):
        raise RuntimeError("combination weights left the simplex")

    def combined(x: float) -> float:
        return sum(w * fns[key](x) for key, w in weights.items())

    for u, v in targets:
        if abs(combined(u) - v) > 1e-10:
            raise RuntimeError(f"combined handle misses target at {u}")
    return weights, combined


def _all_subsets(k: int):
    for mask in range(1 << k):
        yield frozenset(i for i in range(k) if mask >> i & 1)


def perturbation_margin(s: SampleSet, q: float) -> float:
    """The vertical perturbation eps1 used by the exact construction.

    Chosen in closed form so every perturbed set keeps its action strictly
    below 1: the per-segment slope increase 2*eps1/min-gap must not consume
    more than an m-th of the action headroom; halved for safety.
    """
    us = np.asarray(s.us)
    vs = np.asarray(s.vs)
    gap = 1.0 - q_action(s, q)
    if gap <= 0.0:
        raise ValueError("action must be strictly below 1")
    m = len(s)
    mingap = float(np.min(np.diff(us)))
    big_c = 2.0 / mingap
    d = np.abs(np.diff(vs) / np.diff(us))
    eps1 = min(
        ((abs(di) ** q + gap / m) ** (1.0 / q) - abs(di)) / big_c for di in d
    )
    return 0.5 * float(eps1)


def exact_interpolant_poly(
    s: SampleSet,
    q: float,
    m_max: int = 8,
    degree_cap: int = DEGREE_CAP,
    action_tol: float = 1e-9,
) -> BernsteinPolynomial:
    """Polynomial hitting every sample exactly with q-action strictly below 1.

    Requires the set's own action to be strictly below 1 and at most
    ``m_max`` points (the construction builds 2^m sign-patterned parts).
    The result interpolates to 1e-8 and its action is certified by
    quadrature.
    """
    if q < 1.0:
        raise ValueError("q must be >= 1")
    m = len(s)
    if m > m_max:
        raise ValueError(f"{m} points exceed m_max={m_max} (2^m parts)")
    if m == 0:
        return constant_polynomial(0.0)
    if m == 1:
        return constant_polynomial(s.vs[0])
    base_action = q_action(s, q)
    if not base_action < 1.0:
        raise ValueError(f"action {base_action} must be strictly below 1")
    us = np.asarray(s.us)
    vs = np.asarray(s.vs)
    eps1 = perturbation_margin(s, q)

    degree_floor = 32
    while True:
        parts: dict[frozenset, BernsteinPolynomial] = {}
        top_degree = degree_floor
        for key in _all_subsets(m):
            signs = np.array([1.0 if i in key else -1.0 for i in range(m)])
            perturbed = SampleSet(us, vs + eps1 * signs)
            action_x = q_action(perturbed, q)
            if not action_x < 1.0:
                raise DegreeCapError(
                    f"perturbed set action {action_x} >= 1; eps1 too large"
                )
            slack = min(eps1, 1.0 - action_x)
            poly, plan = _build_near_interpolant(
                perturbed,
                q,
                res_target=0.45 * slack,
                act_slack=0.45 * (1.0 - action_x),
                degree_cap=degree_cap,
                min_degree=degree_floor,
            )
            parts[key] = poly
            top_degree = max(top_degree, poly.degree)
        parts = {k: p.elevated(top_degree) for k, p in parts.items()}
        handles = {k: _knot_evaluator(p, us) for k, p in parts.items()}
        weights, _ = weighted_combine(handles, list(zip(us, vs)))
        combined = np.zeros(top_degree + 1)
        for key, w in weights.items():
            combined += w * parts[key].coeffs
        poly = BernsteinPolynomial(combined)
        resid = float(np.max(np.abs(poly(us) - vs)))
        action = q_action_poly(poly, q, tol=action_tol)
        if resid <= 1e-8 and action < 1.0:
            return poly
        if top_degree >= degree_cap:
            raise DegreeCapError(
                f"exact interpolation failed at the cap: residual {resid:.2e}, "
                f"action {action:.9f}"
            )
        degree_floor = 2 * top_degree


def _knot_evaluator(poly: BernsteinPolynomial, us: np.ndarray):
    table = {float(u): float(poly(float(u))) for u in us}

    def handle(x: float) -> float:
        return table[float(x)]

    return handle
