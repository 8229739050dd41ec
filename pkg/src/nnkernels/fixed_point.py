"""Fixed-point analysis of the iterated kernel map.

The layer map g sends (s1^2, s2^2, rho) to the next layer's squared
norms and normalized kernel. Its Jacobian is triangular with
eigenvalues

    lambda_1 = sigma_w^2 E[(Z^2 - 1) psi^2(s1 Z)] / (2 s1^2)
    lambda_2 = likewise in s2
    lambda_3 = sigma_w^2 s1 s2 E[psi'(s1 Z1) psi'(s2 Z2)] / sqrt(g1 g2)

A sup of |lambda_3| below 1 over the angle interval certifies a unique
fixed point of the normalized kernel at rho = 1 (degenerate deep
prior); LReLU satisfies this for every slope in [0, 1), while GELU and
ELU at their norm-preserving weight variance exceed 1 near theta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .activations import Activation
from .deep import LayerState, iterate_state
from .kernels import ELU_S_MAX, diag_mean, kernel_values
from .quadrature import normal_panel_nodes
from .special import TWO_PI, bvn_cdf_exp
from . import activations as act_mod


@dataclass(frozen=True)
class EigenTriple:
    lambda1: float
    lambda2: float
    lambda3: float


@dataclass(frozen=True)
class FixedPointReport:
    converged: bool
    final_state: LayerState
    iterations: int
    per_step_ratio: tuple
    verdict: str  # unique-contraction | not-contraction | inconclusive
    sup_lambda3: float


def _lambda1_quad(act: Activation, s, sigma_w2, nodes=160):
    z, w = normal_panel_nodes(nodes, (0.0,))
    vals = (z * z - 1.0) * act_mod.eval(act, s * z) ** 2
    e = float(w @ vals)
    return sigma_w2 * e / (2.0 * s * s)


def eigenvalues(act: Activation, s1_sq: float, s2_sq: float, rho: float,
                sigma_w2: float, sigma_b2: float, nodes: int = 120) -> EigenTriple:
    """Jacobian eigenvalues of the layer map at the given state.

    Expectations are evaluated by panel-split Gaussian quadrature (1-D
    for lambda_1/lambda_2, 2-D over psi' products for lambda_3); the
    diagonal factors g1, g2 come from the closed-form kernel.
    """
    if s1_sq <= 0.0 or s2_sq <= 0.0:
        raise ValueError("eigenvalues requires positive squared norms")
    if np.isnan(rho) or abs(rho) > 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    s1, s2 = np.sqrt(s1_sq), np.sqrt(s2_sq)
    lam1 = _lambda1_quad(act, s1, sigma_w2)
    lam2 = lam1 if s2_sq == s1_sq else _lambda1_quad(act, s2, sigma_w2)
    g1 = kernel_values(act, s1, s1, 1.0, sigma_w2, sigma_b2)
    g2 = kernel_values(act, s2, s2, 1.0, sigma_w2, sigma_b2)
    f = lambda z: act_mod.deriv(act, z)
    from .quadrature import pair_mean_quad
    e3 = float(pair_mean_quad(f, f, s1, s2, rho, nodes=nodes))
    lam3 = sigma_w2 * s1 * s2 * e3 / np.sqrt(g1 * g2)
    triple = EigenTriple(float(lam1), float(lam2), float(lam3))
    if not all(np.isfinite(v) for v in (triple.lambda1, triple.lambda2, triple.lambda3)):
        raise ArithmeticError("non-finite Jacobian eigenvalue")
    return triple


def lambda3_quad_grid(act: Activation, s: float, thetas, sigma_w2: float,
                      sigma_b2: float, nodes: int = 120) -> np.ndarray:
    """Quadrature lambda_3 along a theta grid at s1 = s2 = s (batched)."""
    thetas = np.asarray(thetas, dtype=float)
    g = kernel_values(act, s, s, 1.0, sigma_w2, sigma_b2)
    f = lambda z: act_mod.deriv(act, z)
    from .quadrature import pair_mean_quad
    e = pair_mean_quad(f, f, np.full_like(thetas, s), np.full_like(thetas, s),
                       np.cos(thetas), nodes=nodes)
    return sigma_w2 * s * s * np.asarray(e) / g


def lambda3_lrelu(a: float, theta) -> float:
    """Closed-form lambda_3 for the leaky ReLU at its norm-preserving
    variance with sigma_b^2 = 0 (scale-free by absolute homogeneity)."""
    if not 0.0 <= a < 1.0:
        raise ValueError("slope must lie in [0, 1)")
    theta = np.asarray(theta, dtype=float)
    out = (((1.0 - a) ** 2 * (np.pi - theta) / TWO_PI + a)
           / ((1.0 - a) ** 2 / 2.0 + a))
    return out if out.shape else float(out)


def lambda3_gelu_lower(norm: float, sigma: float, theta) -> float:
    """Lower bound on lambda_3 for the GELU at s1 = s2 = sigma * norm.

    Assembled from the arcsine quadrant term, the integrated cross-term
    bound at beta = 1, and the mixed-density term; the bound direction
    is only guaranteed for cos(theta) >= 0, but numerically the
    expression coincides with the quadrature value everywhere.
    """
    theta = np.asarray(theta, dtype=float)
    s = sigma * norm
    s2 = s * s
    rho = np.cos(theta)
    d = 1.0 + 2.0 * s2 + s2 * s2 * np.sin(theta) ** 2
    t_quadrant = 0.25 * (1.0 + (2.0 / np.pi) * np.arcsin(s2 * rho / (1.0 + s2)))
    h_one = s2 * rho / (TWO_PI * (1.0 + s2) * np.sqrt(d))
    dh_one = s2 * rho / (TWO_PI * d ** 1.5)
    out = sigma * sigma * (t_quadrant + 2.0 * h_one + dh_one)
    return out if out.shape else float(out)


def lambda3_elu(norm: float, sigma: float, theta) -> float:
    """Exact lambda_3 for the ELU at s1 = s2 = sigma * norm.

    Quadrant term plus two exponential-times-Phi2 cross terms plus the
    double-exponential term, all with the e^(s^2)-scale factors folded
    into the bivariate cdf evaluation.
    """
    s = sigma * norm
    if s > ELU_S_MAX:
        raise OverflowError(f"lambda3_elu limited to sigma*norm <= {ELU_S_MAX}")
    theta = np.asarray(theta, dtype=float)
    rho = np.clip(np.cos(theta), -1.0 + 1e-12, 1.0 - 1e-12)
    quadrant = (np.pi - np.arccos(rho)) / TWO_PI
    cross = bvn_cdf_exp(s * rho, -s, -rho, s * s / 2.0)
    dbl = bvn_cdf_exp(-s * (1.0 + rho), -s * (1.0 + rho), rho,
                      s * s * (1.0 + rho))
    out = sigma * sigma * (quadrant + 2.0 * cross + dbl)
    return out if out.shape else float(out)


_ANALYTIC_SIGMA_STAR = {"relu": lambda a: np.sqrt(2.0),
                        "lrelu": lambda a: np.sqrt(2.0 / (1.0 + a * a))}


def sigma_star(act: Activation, norm: float, tol: float = 1e-8) -> float:
    """Weight std that preserves the expected squared signal norm.

    Solves E[psi^2(sigma * norm * Z)] = norm^2. Analytic for
    ReLU/LReLU; otherwise a bisection root on sigma in [0.5, 3]
    (bracket expanded outward when the root falls outside).
    """
    if norm <= 0.0:
        raise ValueError("norm must be positive")
    if act.kind in _ANALYTIC_SIGMA_STAR:
        return float(_ANALYTIC_SIGMA_STAR[act.kind](act.lrelu_slope))

    def f(sigma):
        return float(diag_mean(act, sigma * norm)) - norm * norm

    lo, hi = 0.5, 3.0
    for _ in range(8):
        if f(lo) * f(hi) < 0.0:
            return float(bisect(f, lo, hi, xtol=tol))
        lo, hi = lo / 2.0, min(hi * 2.0, ELU_S_MAX / norm)
    raise ValueError(
        f"no sign change for sigma in [{lo:.3g}, {hi:.3g}]: norm preservation "
        f"has no root for {act.kind} at norm {norm:.3g}"
    )


def _norm_fixed_point(act: Activation, u0: float, sigma_w2: float,
                      sigma_b2: float) -> float:
    """Fixed point of the squared-norm map g1 near u0.

    The iterated value cannot be trusted directly: for GELU/ELU at
    their norm-preserving variance the fixed point is repelling
    (lambda_1 > 1), so long iterations drift off it. Refine by root
    finding; absolutely homogeneous activations make g1(u) - u vanish
    identically at the preserving variance, in which case u0 is
    returned as-is.
    """
    def h(u):
        return float(kernel_values(act, np.sqrt(u), np.sqrt(u), 1.0,
                                    sigma_w2, sigma_b2)) - u

    if abs(h(u0)) <= 1e-9 * max(1.0, u0):
        return u0
    grid = u0 * np.geomspace(0.01, 100.0, 80)
    vals = np.array([h(u) for u in grid])
    sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if sign_change.size == 0:
        return u0
    i = sign_change[np.argmin(np.abs(np.log(grid[sign_change] / u0)))]
    return float(bisect(h, grid[i], grid[i + 1], xtol=1e-12))


def find_fixed_point(act: Activation, sigma_w2: float, sigma_b2: float,
                     start: LayerState, tol: float = 1e-10,
                     max_iter: int = 10_000, theta_grid: int = 512) -> FixedPointReport:
    """Iterate the layer map and classify the fixed point.

    Non-convergence is reported, not raised. The verdict derives from
    the sup of |lambda_3| on a theta grid over (0, pi) at the final
    norm state: below 1 is "unique-contraction", above 1
    "not-contraction", else "inconclusive".
    """
    state = start
    distances = []
    iterations = 0
    for _ in range(max_iter):
        try:
            new = iterate_state(act, state, sigma_w2, sigma_b2)
        except (ArithmeticError, ValueError, OverflowError):
            break  # diverged (norm map can be repelling); report as-is
        d = float(np.sqrt((new.s1_sq - state.s1_sq) ** 2
                          + (new.s2_sq - state.s2_sq) ** 2
                          + (new.rho - state.rho) ** 2))
        if not np.isfinite(d):
            break
        state = new
        iterations += 1
        distances.append(d)
        if d < tol:
            break
    converged = bool(distances and distances[-1] < tol)
    ratios = tuple(d1 / d0 for d0, d1 in zip(distances[:-1], distances[1:]) if d0 > 0.0)

    # The verdict's lambda_3 grid is anchored at the norm fixed point on
    # the *starting* sphere: the iterated norm cannot be used directly
    # because a repelling fixed point (lambda_1 > 1, as for GELU/ELU at
    # sigma*) lets rounding noise drift it to another attractor.
    thetas = np.pi * (np.arange(theta_grid) + 1.0) / (theta_grid + 1.0)
    s_fp = float(np.sqrt(_norm_fixed_point(act, start.s1_sq, sigma_w2, sigma_b2)))
    lam3 = lambda3_quad_grid(act, s_fp, thetas, sigma_w2, sigma_b2)
    sup = float(np.max(np.abs(lam3)))
    if sup < 1.0 - 1e-9:
        verdict = "unique-contraction"
    elif sup > 1.0 + 1e-9:
        verdict = "not-contraction"
    else:
        verdict = "inconclusive"
    return FixedPointReport(converged, state, iterations, ratios, verdict, sup)


def lambda3_sweep_rows(act: Activation, norm: float, sigma: float,
                       thetas) -> list:
    """Rows (theta, lambda3, activation, norm, sigma, method) for CSV dumps.

    ELU rows carry the exact closed form, GELU rows the lower bound;
    every activation also gets quadrature-exact rows.
    """
    rows = []
    thetas = np.asarray(thetas, dtype=float)
    if act.kind == "gelu":
        vals = lambda3_gelu_lower(norm, sigma, thetas)
        rows += [(float(t), float(v), act.kind, norm, sigma, "lower-bound")
                 for t, v in zip(thetas, vals)]
    elif act.kind in ("elu", "selu"):
        vals = lambda3_elu(norm, sigma, thetas)
        rows += [(float(t), float(v), act.kind, norm, sigma, "closed-form")
                 for t, v in zip(thetas, vals)]
    elif act.kind in ("relu", "lrelu"):
        a = 0.0 if act.kind == "relu" else act.lrelu_slope
        vals = lambda3_lrelu(a, thetas)
        rows += [(float(t), float(v), act.kind, norm, sigma, "closed-form")
                 for t, v in zip(thetas, vals)]
    quad = lambda3_quad_grid(act, sigma * norm, thetas, sigma * sigma, 0.0)
    rows += [(float(t), float(v), act.kind, norm, sigma, "quadrature")
             for t, v in zip(thetas, quad)]
    return rows
