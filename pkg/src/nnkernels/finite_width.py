"""Finite-width MLP sampler and empirical-kernel estimator.

Verifies the infinite-width formulas: a sampled network of width n
propagates two inputs, and the per-layer normalized inner products of
the post-activations estimate the analytic normalized kernels with
O(1/sqrt(n)) scatter.

The input layer draws weights at the raw variance sigma_w^2 (matching
the kernel's input map s^2 = sigma_w^2 ||x||^2 + sigma_b^2); hidden
layers scale by 1/fan_in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import activations as act_mod
from .activations import Activation


@dataclass(frozen=True)
class SampledNet:
    weights: tuple            # (n, d), then (n, n) per hidden layer
    biases: tuple             # (n,) per layer
    activation: Activation
    sigma_w2: float
    sigma_b2: float
    seed: int

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def width(self) -> int:
        return self.weights[0].shape[0]


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Orthogonal matrix from the QR decomposition of a U[0,1] matrix.

    Deterministic per seed; column signs are fixed by the R diagonal so
    the factorization is unique.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.Generator(np.random.Philox(key=seed))
    q, r = np.linalg.qr(rng.random((dim, dim)))
    q = q * np.sign(np.diag(r))
    return q


def sample_net(act: Activation, d_in: int, width: int, depth: int,
               sigma_w2: float, sigma_b2: float, seed: int) -> SampledNet:
    if width < 1 or depth < 1 or d_in < 1:
        raise ValueError("width, depth and d_in must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    weights = [np.sqrt(sigma_w2) * rng.standard_normal((width, d_in))]
    biases = [np.sqrt(sigma_b2) * rng.standard_normal(width)]
    for _ in range(depth - 1):
        weights.append(np.sqrt(sigma_w2 / width) * rng.standard_normal((width, width)))
        biases.append(np.sqrt(sigma_b2) * rng.standard_normal(width))
    return SampledNet(tuple(weights), tuple(biases), act, sigma_w2, sigma_b2, seed)


def hidden_activations(net: SampledNet, x) -> list:
    """Post-activations of every hidden layer for one input."""
    h = np.asarray(x, dtype=float)
    outs = []
    for W, b in zip(net.weights, net.biases):
        h = act_mod.eval(net.activation, W @ h + b)
        outs.append(h)
    return outs


def empirical_kernel_trajectory(net: SampledNet, x1, x2) -> np.ndarray:
    """Per-layer empirical normalized kernels for an input pair.

    Layer-l estimate: k_hat = sigma_w^2 <a1, a2>/n + sigma_b^2,
    normalized by the two diagonal estimates.
    """
    a1s = hidden_activations(net, x1)
    a2s = hidden_activations(net, x2)
    n = net.width
    rhos = np.empty(net.depth)
    for l, (a1, a2) in enumerate(zip(a1s, a2s)):
        k12 = net.sigma_w2 * float(a1 @ a2) / n + net.sigma_b2
        k11 = net.sigma_w2 * float(a1 @ a1) / n + net.sigma_b2
        k22 = net.sigma_w2 * float(a2 @ a2) / n + net.sigma_b2
        rhos[l] = k12 / np.sqrt(k11 * k22)
    return rhos


def rotated_pair(theta0: float, norm: float, seed: int):
    """The inputs behind each sampled dot: a random rotation applied to
    norm * (1, 0) and norm * (cos theta0, sin theta0)."""
    q = random_rotation(2, seed)
    x1 = norm * (q @ np.array([1.0, 0.0]))
    x2 = norm * (q @ np.array([np.cos(theta0), np.sin(theta0)]))
    return x1, x2


def empirical_normalized_kernel(act: Activation, theta0: float, norm: float,
                                width: int, depth: int, sigma_w2: float,
                                sigma_b2: float, seed: int) -> float:
    """Final-layer empirical normalized kernel from one sampled network."""
    if width < 100:
        raise ValueError("width must be >= 100")
    rot_seed, net_seed = _derived_seeds(seed)
    x1, x2 = rotated_pair(theta0, norm, rot_seed)
    net = sample_net(act, 2, width, depth, sigma_w2, sigma_b2, net_seed)
    return float(empirical_kernel_trajectory(net, x1, x2)[-1])


def empirical_trajectory(act: Activation, theta0: float, norm: float,
                         width: int, depth: int, sigma_w2: float,
                         sigma_b2: float, seed: int) -> np.ndarray:
    """All per-layer estimates from one sampled network (one forward pass)."""
    rot_seed, net_seed = _derived_seeds(seed)
    x1, x2 = rotated_pair(theta0, norm, rot_seed)
    net = sample_net(act, 2, width, depth, sigma_w2, sigma_b2, net_seed)
    return empirical_kernel_trajectory(net, x1, x2)


def _derived_seeds(seed: int):
    ss = np.random.SeedSequence(seed).spawn(2)
    return (int(ss[0].generate_state(1)[0]), int(ss[1].generate_state(1)[0]))
