"""Depth iteration of kernel and tangent-kernel states.

Conventions
-----------
A network of depth L has L hidden layers and therefore L + 1 parameter
pairs: index 0 is the input map (the linear kernel of the transformed
inputs), indices 1..L drive the expectation updates. ``NetworkHyper``
stores one (sigma_w^2, sigma_b^2) pair per index; the shared
constructor replicates a single pair, which is the default protocol.

The tangent kernel T starts at the first expectation-built kernel
(T = k after update 1) and follows T' = T * kdot + k'.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .activations import Activation
from .kernels import diag_mean, kernel_dot_values, kernel_values

_RHO_OVERSHOOT = 1e-12


@dataclass(frozen=True)
class LayerState:
    """Squared signal norms and normalized kernel of one layer."""

    s1_sq: float
    s2_sq: float
    rho: float

    def __post_init__(self):
        if np.isnan(self.rho) or abs(self.rho) > 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if self.s1_sq < 0.0 or self.s2_sq < 0.0:
            raise ValueError("squared norms must be nonnegative")


@dataclass(frozen=True)
class NtkState:
    """Kernel and tangent-kernel state; ``tau`` only for the rescaled form."""

    s1_sq: float
    s2_sq: float
    k: float
    T: float
    tau: float | None = None


@dataclass(frozen=True)
class NetworkHyper:
    """Per-level (sigma_w^2, sigma_b^2) for a depth-L network."""

    depth: int
    sigma_w2: tuple
    sigma_b2: tuple

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if len(self.sigma_w2) != self.depth + 1 or len(self.sigma_b2) != self.depth + 1:
            raise ValueError("need depth + 1 parameter pairs (input map + updates)")
        if any(v < 0 for v in self.sigma_w2) or any(v < 0 for v in self.sigma_b2):
            raise ValueError("variances must be nonnegative")

    @classmethod
    def shared(cls, depth: int, sigma_w2: float, sigma_b2: float = 0.0):
        return cls(depth, (float(sigma_w2),) * (depth + 1), (float(sigma_b2),) * (depth + 1))


def _normalized(k, s1_sq, s2_sq):
    rho = k / np.sqrt(s1_sq * s2_sq)
    over = np.abs(rho) - 1.0
    if np.any(over > _RHO_OVERSHOOT):
        raise ArithmeticError(
            f"normalized kernel overshoots [-1, 1] by {float(np.max(over)):.3e}; "
            "this signals a kernel bug"
        )
    return np.clip(rho, -1.0, 1.0)


def iterate_state(act: Activation, state: LayerState, sigma_w2: float,
                  sigma_b2: float) -> LayerState:
    """One layer update of (s1^2, s2^2, rho)."""
    s1 = np.sqrt(state.s1_sq)
    s2 = np.sqrt(state.s2_sq)
    if s1 <= 0.0 or s2 <= 0.0:
        raise ValueError("iterate_state requires strictly positive signal norms")
    s1_sq = sigma_w2 * float(diag_mean(act, s1)) + sigma_b2
    s2_sq = sigma_w2 * float(diag_mean(act, s2)) + sigma_b2
    k = float(kernel_values(act, s1, s2, state.rho, sigma_w2, sigma_b2))
    return LayerState(s1_sq, s2_sq, float(_normalized(k, s1_sq, s2_sq)))


def input_state(theta0: float, norm: float, sigma_w2: float, sigma_b2: float) -> LayerState:
    """Level-0 state of two inputs of equal norm at angle theta0."""
    if norm <= 0.0:
        raise ValueError("norm must be positive")
    s_sq = sigma_w2 * norm * norm + sigma_b2
    k0 = sigma_w2 * norm * norm * np.cos(theta0) + sigma_b2
    return LayerState(s_sq, s_sq, float(_normalized(k0, s_sq, s_sq)))


def deep_normalized_kernel(act: Activation, theta0: float, norm: float,
                           hyper: NetworkHyper) -> np.ndarray:
    """Trajectory cos(theta^(l)), l = 1..L, from the angle theta0."""
    state = input_state(theta0, norm, hyper.sigma_w2[0], hyper.sigma_b2[0])
    rhos = np.empty(hyper.depth)
    for l in range(1, hyper.depth + 1):
        state = iterate_state(act, state, hyper.sigma_w2[l], hyper.sigma_b2[l])
        rhos[l - 1] = state.rho
    return rhos


def _trajectory_raw(act, x1, x2, sw, sb):
    s1_sq = sw[0] * float(x1 @ x1) + sb[0]
    s2_sq = sw[0] * float(x2 @ x2) + sb[0]
    k = sw[0] * float(x1 @ x2) + sb[0]
    traj = [(s1_sq, s2_sq, k)]
    for l in range(1, len(sw)):
        rho = float(_normalized(k, s1_sq, s2_sq))
        s1, s2 = np.sqrt(s1_sq), np.sqrt(s2_sq)
        k = float(kernel_values(act, s1, s2, rho, sw[l], sb[l]))
        s1_sq = sw[l] * float(diag_mean(act, s1)) + sb[l]
        s2_sq = sw[l] * float(diag_mean(act, s2)) + sb[l]
        traj.append((s1_sq, s2_sq, k))
    return traj


def state_trajectory(act: Activation, x1, x2, hyper: NetworkHyper):
    """Per-level (s1_sq, s2_sq, k) from the input map through depth L."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return _trajectory_raw(act, x1, x2, hyper.sigma_w2, hyper.sigma_b2)


def ntk_iterate(act: Activation, state: NtkState, sigma_w2: float,
                sigma_b2: float) -> NtkState:
    """One tangent-kernel update: T' = T kdot' + k' (plus diag updates)."""
    s1 = np.sqrt(state.s1_sq)
    s2 = np.sqrt(state.s2_sq)
    if s1 <= 0.0 or s2 <= 0.0:
        raise ValueError("ntk_iterate requires strictly positive signal norms")
    rho = float(_normalized(state.k, state.s1_sq, state.s2_sq))
    k_new = float(kernel_values(act, s1, s2, rho, sigma_w2, sigma_b2))
    kdot = float(kernel_dot_values(act, s1, s2, rho, sigma_w2))
    s1_sq = sigma_w2 * float(diag_mean(act, s1)) + sigma_b2
    s2_sq = sigma_w2 * float(diag_mean(act, s2)) + sigma_b2
    return NtkState(s1_sq, s2_sq, k_new, state.T * kdot + k_new, state.tau)


def scaled_ntk_iterate(act: Activation, state: NtkState, sigma_w2: float,
                       sigma_b2: float) -> NtkState:
    """Depth-rescaled tangent-kernel update.

    T' = tau ((1/tau - 1) T kdot + k'), tau' = 1/(1/tau + 1), so tau
    runs through 1/2, 1/3, 1/4, ... and T stays in a bounded set when
    the kernel map contracts.
    """
    if state.tau is None or not 0.0 < state.tau <= 0.5:
        raise ValueError("scaled_ntk_iterate requires tau in (0, 1/2]")
    s1 = np.sqrt(state.s1_sq)
    s2 = np.sqrt(state.s2_sq)
    rho = float(_normalized(state.k, state.s1_sq, state.s2_sq))
    k_new = float(kernel_values(act, s1, s2, rho, sigma_w2, sigma_b2))
    kdot = float(kernel_dot_values(act, s1, s2, rho, sigma_w2))
    t_new = state.tau * ((1.0 / state.tau - 1.0) * state.T * kdot + k_new)
    s1_sq = sigma_w2 * float(diag_mean(act, s1)) + sigma_b2
    s2_sq = sigma_w2 * float(diag_mean(act, s2)) + sigma_b2
    return NtkState(s1_sq, s2_sq, k_new, t_new, state.tau / (1.0 + state.tau))


def _pair_indices(n):
    iu = np.triu_indices(n, k=1)
    return iu


def kernel_matrices_by_depth(act: Activation, X, sigma_w2: float, sigma_b2: float,
                             depths, use_ntk: bool = False):
    """Yield (depth, K) for each requested depth, sharing the iteration.

    Vectorized over all index pairs; ``depths`` must be increasing.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 1:
        raise ValueError("need at least one row")
    depths = list(depths)
    if depths != sorted(depths) or depths[0] < 1:
        raise ValueError("depths must be increasing and >= 1")
    iu, ju = _pair_indices(n)
    norms_sq = np.einsum("ij,ij->i", X, X)
    s_sq = sigma_w2 * norms_sq + sigma_b2
    k = sigma_w2 * np.einsum("ij,ij->i", X[iu], X[ju]) + sigma_b2
    t_diag = s_sq.copy()
    t_off = k.copy()
    want = set(depths)
    for depth in range(1, depths[-1] + 1):
        s = np.sqrt(s_sq)
        rho = _normalized(k, s_sq[iu], s_sq[ju])
        k_new = kernel_values(act, s[iu], s[ju], rho, sigma_w2, sigma_b2)
        s_sq_new = sigma_w2 * diag_mean(act, s) + sigma_b2
        if use_ntk:
            kdot_off = kernel_dot_values(act, s[iu], s[ju], rho, sigma_w2)
            kdot_diag = kernel_dot_values(act, s, s, np.ones_like(s), sigma_w2)
            if depth == 1:
                t_off = k_new.copy()
                t_diag = s_sq_new.copy()
            else:
                t_off = t_off * kdot_off + k_new
                t_diag = t_diag * kdot_diag + s_sq_new
        k, s_sq = k_new, s_sq_new
        if depth in want:
            K = np.zeros((n, n))
            if use_ntk:
                K[iu, ju] = t_off
                K[ju, iu] = t_off
                np.fill_diagonal(K, t_diag)
            else:
                K[iu, ju] = k
                K[ju, iu] = k
                np.fill_diagonal(K, s_sq)
            yield depth, K


def deep_kernel_matrix(act: Activation, X, hyper: NetworkHyper,
                       use_ntk: bool = False) -> np.ndarray:
    """Depth-L kernel (or tangent-kernel) matrix over the rows of X.

    Symmetry is exact by construction (upper triangle computed once).
    The result must pass a Cholesky check, with one jitter repair of
    1e-8 * trace/N allowed; remaining failures raise.
    """
    sw, sb = set(hyper.sigma_w2), set(hyper.sigma_b2)
    if len(sw) > 1 or len(sb) > 1:
        return _deep_kernel_matrix_per_layer(act, X, hyper, use_ntk)
    gen = kernel_matrices_by_depth(act, X, hyper.sigma_w2[0], hyper.sigma_b2[0],
                                   [hyper.depth], use_ntk=use_ntk)
    _, K = next(gen)
    return _validated(K)


def _deep_kernel_matrix_per_layer(act, X, hyper, use_ntk):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    iu, ju = _pair_indices(n)
    sw, sb = hyper.sigma_w2, hyper.sigma_b2
    s_sq = sw[0] * np.einsum("ij,ij->i", X, X) + sb[0]
    k = sw[0] * np.einsum("ij,ij->i", X[iu], X[ju]) + sb[0]
    t_off = k.copy()
    t_diag = s_sq.copy()
    for l in range(1, hyper.depth + 1):
        s = np.sqrt(s_sq)
        rho = _normalized(k, s_sq[iu], s_sq[ju])
        k_new = kernel_values(act, s[iu], s[ju], rho, sw[l], sb[l])
        s_sq_new = sw[l] * diag_mean(act, s) + sb[l]
        if use_ntk:
            kdot_off = kernel_dot_values(act, s[iu], s[ju], rho, sw[l])
            kdot_diag = kernel_dot_values(act, s, s, np.ones_like(s), sw[l])
            if l == 1:
                t_off, t_diag = k_new.copy(), s_sq_new.copy()
            else:
                t_off = t_off * kdot_off + k_new
                t_diag = t_diag * kdot_diag + s_sq_new
        k, s_sq = k_new, s_sq_new
    K = np.zeros((n, n))
    if use_ntk:
        K[iu, ju] = t_off
        K[ju, iu] = t_off
        np.fill_diagonal(K, t_diag)
    else:
        K[iu, ju] = k
        K[ju, iu] = k
        np.fill_diagonal(K, s_sq)
    return _validated(K)


def _validated(K):
    bad = ~np.isfinite(K)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ArithmeticError(f"non-finite kernel entry at pair ({i}, {j})")
    try:
        np.linalg.cholesky(K)
        return K
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-8 * np.trace(K) / K.shape[0]
    try:
        np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("kernel matrix not PSD even after jitter") from exc
    return K


# ---------------------------------------------------------------------------
# Hyperparameter gradients of the depth-L kernel
# ---------------------------------------------------------------------------

def _relu_layer_jacobian(prev, sigma_w2):
    """Jacobian of the state map (s1^2, s2^2, k) -> next level, ReLU only.

    All three partials hold the remaining state coordinates fixed. The
    off-diagonal entries follow from Euler's relation: the centered
    kernel is jointly degree-1 homogeneous in (s1, k), so
    s1 dk'/ds1 = k' - sigma_b^2 - k dk'/dk = sigma_w^2 s1 s2 sin(theta)/(2 pi).
    """
    s1_sq_p, s2_sq_p, k_p = prev
    rho_p = float(np.clip(k_p / np.sqrt(s1_sq_p * s2_sq_p), -1.0, 1.0))
    theta_p = np.arccos(rho_p)
    s1_p, s2_p = np.sqrt(s1_sq_p), np.sqrt(s2_sq_p)
    lam = sigma_w2 / 2.0
    sin_term = sigma_w2 * np.sin(theta_p) / (4.0 * np.pi)
    dk_dk = sigma_w2 * (np.pi - theta_p) / (2.0 * np.pi)
    return np.array([
        [lam, 0.0, 0.0],
        [0.0, lam, 0.0],
        [sin_term * s2_p / s1_p, sin_term * s1_p / s2_p, dk_dk],
    ])


def kernel_grad_relu(hyper: NetworkHyper, trajectory) -> np.ndarray:
    """Chain-rule gradient of the final ReLU kernel in all hyperparameters.

    ``trajectory`` is the output of :func:`state_trajectory`. Returns an
    array of shape (depth + 1, 2): column 0 is d k_final / d sigma_w^2
    at each level, column 1 the sigma_b^2 gradients. Closed form relies
    on the absolute homogeneity of the ReLU; other activations raise.
    """
    if len(trajectory) != hyper.depth + 1:
        raise ValueError("trajectory length must be depth + 1")
    L = hyper.depth
    jacs = [None] * (L + 1)
    for l in range(1, L + 1):
        jacs[l] = _relu_layer_jacobian(trajectory[l - 1], hyper.sigma_w2[l])
    grads = np.zeros((L + 1, 2))
    suffix = np.eye(3)  # product J_L ... J_{l+1}, built from the top down
    for l in range(L, -1, -1):
        s1_sq, s2_sq, k = trajectory[l]
        sw, sb = hyper.sigma_w2[l], hyper.sigma_b2[l]
        if sw <= 0.0:
            raise ValueError("gradient requires strictly positive sigma_w^2")
        v_w = np.array([(s1_sq - sb) / sw, (s2_sq - sb) / sw, (k - sb) / sw])
        v_b = np.ones(3)
        grads[l, 0] = (suffix @ v_w)[2]
        grads[l, 1] = (suffix @ v_b)[2]
        if l > 0:
            suffix = suffix @ jacs[l]
    return grads


def kernel_grad_relu_from_inputs(x1, x2, hyper: NetworkHyper) -> np.ndarray:
    from .activations import RELU
    return kernel_grad_relu(hyper, state_trajectory(RELU, x1, x2, hyper))


def kernel_grad_fd(act: Activation, hyper: NetworkHyper, x1, x2,
                   rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the depth-L kernel, any activation.

    Perturbed evaluations bypass the nonnegativity validation so that
    a boundary value sigma_b^2 = 0 can be differenced symmetrically.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)

    def k_final(sw, sb):
        return _trajectory_raw(act, x1, x2, sw, sb)[-1][2]

    grads = np.zeros((hyper.depth + 1, 2))
    for l in range(hyper.depth + 1):
        for col, params in enumerate((hyper.sigma_w2, hyper.sigma_b2)):
            base = list(params)
            h = rel_step * max(abs(base[l]), 1.0)
            hi, lo = list(base), list(base)
            hi[l] += h
            lo[l] -= h
            if col == 0:
                grads[l, col] = (k_final(hi, list(hyper.sigma_b2))
                                 - k_final(lo, list(hyper.sigma_b2))) / (2 * h)
            else:
                grads[l, col] = (k_final(list(hyper.sigma_w2), hi)
                                 - k_final(list(hyper.sigma_w2), lo)) / (2 * h)
    return grads


def write_trajectory_csv(path, states):
    """Dump per-layer states: layer, s1_sq, s2_sq, rho [, k, T, tau]."""
    with_ntk = states and isinstance(states[0], NtkState)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if with_ntk:
            writer.writerow(["layer", "s1_sq", "s2_sq", "rho", "k", "T", "tau"])
            for l, st in enumerate(states):
                rho = st.k / np.sqrt(st.s1_sq * st.s2_sq)
                writer.writerow([l, repr(st.s1_sq), repr(st.s2_sq), repr(float(rho)),
                                 repr(st.k), repr(st.T),
                                 "" if st.tau is None else repr(st.tau)])
        else:
            writer.writerow(["layer", "s1_sq", "s2_sq", "rho"])
            for l, st in enumerate(states):
                writer.writerow([l, repr(st.s1_sq), repr(st.s2_sq), repr(st.rho)])
