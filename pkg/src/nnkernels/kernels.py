"""Single-layer kernels k and derivative kernels k-dot.

For zero-mean weight priors the kernel of one infinitely wide layer is

    k = sigma_w^2 E[psi(s1 Z1) psi(s2 Z2)] + sigma_b^2,

with (Z1, Z2) standard bivariate normal, correlation rho = cos(theta).
This module provides closed forms for every activation that admits one,
plus quadrature and Monte-Carlo oracles for the rest (and for checking
the closed forms). All closed-form paths are vectorized over
(s1, s2, rho) arrays of a common shape.

Closed forms:
  ReLU / LReLU  arc-cosine degree-1 (Cho & Saul, 2009) plus the linear
                part of the leaky slope;
  ERF           Williams' (1997) arcsine kernel;
  GELU          rational/arctan expression in s1, s2, cos(theta);
  ELU / SELU    assembled from the truncated-moment function of
                Rosenbaum (1961), the bivariate normal CDF, and
                exponential cross terms kept finite via bvn_cdf_exp.

The derivative kernel k-dot = sigma_w^2 E[psi'(s1 Z1) psi'(s2 Z2)] has
closed forms for ReLU/LReLU (quadrant probability) and ELU/SELU; GELU
and ERF go through the quadrature oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import activations as act_mod
from .activations import Activation
from .quadrature import pair_mean_quad
from .special import (SQRT_2PI, TWO_PI, _check_correlation, bvn_cdf_exp,
                      expscaled_cdf)

# e^(s^2)-type factors in the ELU/SELU closed forms leave double range
# (even with exponent folding on the bvn side) beyond this.
ELU_S_MAX = 25.0

_RHO_EPS = 1e-12  # |rho| >= 1 - _RHO_EPS is routed to endpoint limits


@dataclass(frozen=True)
class KernelArgs:
    """Arguments of the layer kernel: signal norms, correlation, variances."""

    s1: float
    s2: float
    rho: float
    sigma_w2: float = 1.0
    sigma_b2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.s1) and np.isfinite(self.s2)):
            raise ValueError("s1, s2 must be finite")
        if self.s1 <= 0.0 or self.s2 <= 0.0:
            raise ValueError("s1, s2 must be strictly positive")
        _check_correlation(self.rho)
        if self.sigma_w2 < 0.0 or self.sigma_b2 < 0.0:
            raise ValueError("variances must be nonnegative")


def _arccos_theta(rho):
    return np.arccos(np.clip(rho, -1.0, 1.0))


def _lrelu_slope(act: Activation) -> float:
    if act.kind == "relu":
        return 0.0
    return act.lrelu_slope


def _selu_params(act: Activation):
    if act.kind == "elu":
        return 1.0, 1.0
    return act.selu_lambda, act.selu_alpha


def _guard_elu_scale(*ss):
    for s in ss:
        if (np.asarray(s) > ELU_S_MAX).any():
            raise OverflowError(
                f"ELU/SELU closed form limited to s <= {ELU_S_MAX}; exponential "
                "factors overflow the double range beyond that"
            )


def _elu_pair_interior(s1, s2, rho, lam, alpha):
    """E[psi psi] for ELU/SELU on rho in the open interval (-1, 1)."""
    theta = _arccos_theta(rho)
    sn, cs = np.sin(theta), np.cos(theta)
    t11 = s1 * s2 * (sn + (np.pi - theta) * cs) / TWO_PI

    def cross(sb):
        # E[Theta(Z1) Z1 Theta(-Z2)(e^{sb Z2} - 1)], the linear side's
        # scale factored out by homogeneity
        return ((expscaled_cdf(sb * sn) - 0.5) / SQRT_2PI
                + sb * cs * bvn_cdf_exp(sb * cs, -sb, -cs, sb * sb / 2.0))

    t12 = s1 * cross(s2)
    t21 = s2 * cross(s1)

    def e4(a, b):
        q = (a * a + 2.0 * a * b * cs + b * b) / 2.0
        return bvn_cdf_exp(-(a + b * cs), -(a * cs + b), cs, q)

    zero = np.zeros_like(cs)
    t22 = e4(s1, s2) - e4(s1, zero) - e4(zero, s2) + e4(zero, zero)
    return lam * lam * (t11 + alpha * (t12 + t21) + alpha * alpha * t22)


def _elu_pair_end(s1, s2, sign, lam, alpha):
    """E[psi(s1 Z) psi(sign * s2 Z)], the rho = +/-1 limits."""
    if sign > 0:
        t11 = s1 * s2 / 2.0
        t22 = expscaled_cdf(s1 + s2) - expscaled_cdf(s1) - expscaled_cdf(s2) + 0.5
        return lam * lam * (t11 + alpha * alpha * t22)
    return -lam * lam * alpha * s1 * s2 * (expscaled_cdf(s1) + expscaled_cdf(s2))


def pair_mean(act: Activation, s1, s2, rho):
    """``E[psi(s1 Z1) psi(s2 Z2)]`` with corr rho, closed form, vectorized."""
    s1, s2, rho = np.broadcast_arrays(
        *[np.asarray(v, dtype=float) for v in (s1, s2, rho)]
    )
    kind = act.kind
    if kind in ("relu", "lrelu"):
        a = _lrelu_slope(act)
        theta = _arccos_theta(rho)
        out = s1 * s2 * ((1.0 - a) ** 2
                         * (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / TWO_PI
                         + a * rho)
    elif kind == "erf":
        out = (2.0 / np.pi) * np.arcsin(
            np.clip(2.0 * rho * s1 * s2
                    / np.sqrt((1.0 + 2.0 * s1 * s1) * (1.0 + 2.0 * s2 * s2)), -1.0, 1.0)
        )
    elif kind == "gelu":
        r = np.clip(rho, -1.0, 1.0)
        s1s, s2s = s1 * s1, s2 * s2
        d = 1.0 + s1s + s2s + s1s * s2s * (1.0 - r * r)
        num = 1.0 + r * r + s1s + s2s + s1s * s2s * (1.0 - r * r)
        out = (s1 * s2 * r / 4.0
               + (s1s * s2s / TWO_PI) * num / ((1.0 + s1s) * (1.0 + s2s) * np.sqrt(d))
               + (s1 * s2 * r / TWO_PI) * np.arctan(r * s1 * s2 / np.sqrt(d)))
    else:  # elu / selu
        _guard_elu_scale(s1, s2)
        lam, alpha = _selu_params(act)
        r = np.clip(rho, -1.0 + _RHO_EPS, 1.0 - _RHO_EPS)
        interior = _elu_pair_interior(s1, s2, r, lam, alpha)
        out = np.where(rho >= 1.0 - _RHO_EPS, _elu_pair_end(s1, s2, +1, lam, alpha),
                       np.where(rho <= -1.0 + _RHO_EPS,
                                _elu_pair_end(s1, s2, -1, lam, alpha), interior))
    return out if out.shape else float(out)


def pair_dot_mean(act: Activation, s1, s2, rho, nodes: int = 120):
    """``E[psi'(s1 Z1) psi'(s2 Z2)]``; closed form where available,
    quadrature for GELU and ERF."""
    s1, s2, rho = np.broadcast_arrays(
        *[np.asarray(v, dtype=float) for v in (s1, s2, rho)]
    )
    kind = act.kind
    if kind in ("relu", "lrelu"):
        a = _lrelu_slope(act)
        theta = _arccos_theta(rho)
        out = (1.0 - a) ** 2 * (np.pi - theta) / TWO_PI + a
    elif kind in ("elu", "selu"):
        _guard_elu_scale(s1, s2)
        lam, alpha = _selu_params(act)
        r = np.clip(rho, -1.0 + _RHO_EPS, 1.0 - _RHO_EPS)
        theta = _arccos_theta(r)
        cs = np.cos(theta)
        quadrant = (np.pi - theta) / TWO_PI
        c1 = bvn_cdf_exp(s2 * cs, -s2, -cs, s2 * s2 / 2.0)
        c2 = bvn_cdf_exp(s1 * cs, -s1, -cs, s1 * s1 / 2.0)
        dbl = bvn_cdf_exp(-(s1 + s2 * cs), -(s1 * cs + s2), cs,
                          (s1 * s1 + 2.0 * s1 * s2 * cs + s2 * s2) / 2.0)
        interior = quadrant + alpha * (c1 + c2) + alpha * alpha * dbl
        hi = 0.5 + alpha * alpha * expscaled_cdf(s1 + s2)
        lo = alpha * (expscaled_cdf(s1) + expscaled_cdf(s2))
        out = lam * lam * np.where(rho >= 1.0 - _RHO_EPS, hi,
                                   np.where(rho <= -1.0 + _RHO_EPS, lo, interior))
    else:  # gelu / erf: quadrature over psi' products
        f = lambda z: act_mod.deriv(act, z)
        out = pair_mean_quad(f, f, s1, s2, rho, nodes=nodes)
    out = np.asarray(out)
    return out if out.shape else float(out)


def diag_mean(act: Activation, s):
    """``E[psi(s Z)^2]``, the rho = 1, s1 = s2 = s diagonal."""
    s = np.asarray(s, dtype=float)
    kind = act.kind
    if kind in ("relu", "lrelu"):
        a = _lrelu_slope(act)
        out = s * s * (1.0 + a * a) / 2.0
    elif kind == "erf":
        out = (2.0 / np.pi) * np.arcsin(2.0 * s * s / (1.0 + 2.0 * s * s))
    elif kind == "gelu":
        s2 = s * s
        d = 1.0 + 2.0 * s2
        out = (s2 / 4.0
               + (s2 * s2 / TWO_PI) * (2.0 + 2.0 * s2) / ((1.0 + s2) ** 2 * np.sqrt(d))
               + (s2 / TWO_PI) * np.arctan(s2 / np.sqrt(d)))
    else:
        _guard_elu_scale(s)
        lam, alpha = _selu_params(act)
        out = lam * lam * (s * s / 2.0 + alpha * alpha
                           * (expscaled_cdf(2.0 * s) - 2.0 * expscaled_cdf(s) + 0.5))
    return out if out.shape else float(out)


def kernel_values(act: Activation, s1, s2, rho, sigma_w2, sigma_b2):
    """Closed-form layer kernel on arrays (no KernelArgs validation)."""
    if np.isscalar(sigma_w2) and sigma_w2 == 0.0:
        out = np.broadcast_arrays(np.asarray(s1, float), np.asarray(rho, float))[0] * 0.0 + sigma_b2
        return out if out.shape else float(out)
    return sigma_w2 * pair_mean(act, s1, s2, rho) + sigma_b2


def kernel_dot_values(act: Activation, s1, s2, rho, sigma_w2, nodes: int = 120):
    """Closed-form/quadrature derivative kernel on arrays."""
    if np.isscalar(sigma_w2) and sigma_w2 == 0.0:
        out = np.broadcast_arrays(np.asarray(s1, float), np.asarray(rho, float))[0] * 0.0
        return out if out.shape else float(out)
    return sigma_w2 * pair_dot_mean(act, s1, s2, rho, nodes=nodes)


def kernel(act: Activation, args: KernelArgs) -> float:
    """Layer kernel ``sigma_w^2 E[psi(s1 Z1) psi(s2 Z2)] + sigma_b^2``."""
    return float(kernel_values(act, args.s1, args.s2, args.rho,
                                args.sigma_w2, args.sigma_b2))


def kernel_dot(act: Activation, args: KernelArgs) -> float:
    """Derivative kernel ``sigma_w^2 E[psi'(s1 Z1) psi'(s2 Z2)]``."""
    return float(kernel_dot_values(act, args.s1, args.s2, args.rho, args.sigma_w2))


def input_geometry(x1, x2, sigma_w2, sigma_b2):
    """(s1, s2, rho) of the transformed inputs under the diagonal prior.

    s_i = sqrt(sigma_w^2 ||x_i||^2 + sigma_b^2); rho is the cosine
    between the transformed augmented inputs (the plain input cosine
    when sigma_b^2 = 0).
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape or x1.ndim != 1 or x1.size < 1:
        raise ValueError("x1, x2 must be 1-D vectors of equal dimension")
    s1_sq = sigma_w2 * float(x1 @ x1) + sigma_b2
    s2_sq = sigma_w2 * float(x2 @ x2) + sigma_b2
    if s1_sq <= 0.0 or s2_sq <= 0.0:
        raise ValueError("zero-norm input with sigma_b^2 = 0 is unsupported")
    dot = sigma_w2 * float(x1 @ x2) + sigma_b2
    rho = float(np.clip(dot / np.sqrt(s1_sq * s2_sq), -1.0, 1.0))
    return np.sqrt(s1_sq), np.sqrt(s2_sq), rho


def kernel_from_inputs(act: Activation, x1, x2, sigma_w2, sigma_b2) -> float:
    """Layer kernel evaluated directly on a pair of input vectors."""
    s1, s2, rho = input_geometry(x1, x2, sigma_w2, sigma_b2)
    return float(kernel_values(act, s1, s2, rho, sigma_w2, sigma_b2))


def kernel_quadrature(act: Activation, args: KernelArgs, nodes: int = 80) -> float:
    """Numerical-integration oracle for the kernel.

    Tensor-product Gaussian quadrature of
    ``sigma_w^2 E[psi(s1 G1) psi(s2 (rho G1 + sqrt(1-rho^2) G2))] + sigma_b^2``
    in the iid parameterization, with ``nodes`` points per dimension and
    panels split at the activation kinks (plain Gauss-Hermite converges
    only algebraically for the piecewise activations, stalling near
    1e-4 relative error at 120 nodes).
    """
    if nodes < 20:
        raise ValueError("nodes must be >= 20")
    f = lambda z: act_mod.eval(act, z)
    e = pair_mean_quad(f, f, args.s1, args.s2, args.rho, nodes=nodes)
    return float(args.sigma_w2 * e + args.sigma_b2)


def kernel_dot_quadrature(act: Activation, args: KernelArgs, nodes: int = 80) -> float:
    """Quadrature oracle for the derivative kernel (psi' products)."""
    if nodes < 20:
        raise ValueError("nodes must be >= 20")
    f = lambda z: act_mod.deriv(act, z)
    e = pair_mean_quad(f, f, args.s1, args.s2, args.rho, nodes=nodes)
    return float(args.sigma_w2 * e)


def kernel_mc(act: Activation, args: KernelArgs, samples: int, seed: int,
              use_deriv: bool = False):
    """Monte-Carlo oracle: (mean, stderr) of the kernel estimate.

    Unbiased, reproducible per seed (counter-based Philox stream),
    chunked so that 1e7-sample runs stay within a small memory budget.
    """
    if samples < 10_000:
        raise ValueError("samples must be >= 1e4")
    rng = np.random.Generator(np.random.Philox(key=seed))
    tau = np.sqrt(max(1.0 - args.rho * args.rho, 0.0))
    f = (lambda z: act_mod.deriv(act, z)) if use_deriv else (lambda z: act_mod.eval(act, z))
    total = 0.0
    total_sq = 0.0
    remaining = samples
    while remaining > 0:
        m = min(remaining, 1_000_000)
        g1 = rng.standard_normal(m)
        g2 = rng.standard_normal(m)
        z2 = args.rho * g1 + tau * g2
        vals = args.sigma_w2 * f(args.s1 * g1) * f(args.s2 * z2)
        if not use_deriv:
            vals = vals + args.sigma_b2
        total += vals.sum()
        total_sq += (vals * vals).sum()
        remaining -= m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    stderr = np.sqrt(var / samples)
    return float(mean), float(stderr)
