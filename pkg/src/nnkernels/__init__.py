"""Infinite-width MLP kernels, fixed-point analysis, and GP regression."""

from .activations import (ACTIVATION_NAMES, ELU, ERF, GELU, RELU, Activation,
                          from_name, lrelu, selu)
from .deep import (LayerState, NetworkHyper, NtkState, deep_kernel_matrix,
                   deep_normalized_kernel, input_state, iterate_state,
                   kernel_grad_fd, kernel_grad_relu,
                   kernel_grad_relu_from_inputs, kernel_matrices_by_depth,
                   ntk_iterate, scaled_ntk_iterate, state_trajectory)
from .fixed_point import (EigenTriple, FixedPointReport, eigenvalues,
                          find_fixed_point, lambda3_elu, lambda3_gelu_lower,
                          lambda3_lrelu, sigma_star)
from .gp import GpFit, fit, grid_search, nll, predict, rmse
from .kernels import (KernelArgs, kernel, kernel_dot, kernel_dot_quadrature,
                      kernel_from_inputs, kernel_mc, kernel_quadrature)
from .special import bvn_cdf, bvn_cdf_exp, rosenbaum_m, std_normal_cdf, std_normal_pdf

__all__ = [
    "ACTIVATION_NAMES", "Activation", "ELU", "ERF", "GELU", "RELU",
    "EigenTriple", "FixedPointReport", "GpFit", "KernelArgs", "LayerState",
    "NetworkHyper", "NtkState",
    "bvn_cdf", "bvn_cdf_exp", "deep_kernel_matrix", "deep_normalized_kernel",
    "eigenvalues", "find_fixed_point", "fit", "from_name", "grid_search",
    "input_state", "iterate_state", "kernel", "kernel_dot",
    "kernel_dot_quadrature", "kernel_from_inputs", "kernel_grad_fd",
    "kernel_grad_relu", "kernel_grad_relu_from_inputs",
    "kernel_matrices_by_depth", "kernel_mc", "kernel_quadrature",
    "lambda3_elu", "lambda3_gelu_lower", "lambda3_lrelu", "lrelu", "nll",
    "ntk_iterate", "predict", "rmse", "rosenbaum_m", "scaled_ntk_iterate",
    "selu", "sigma_star", "state_trajectory", "std_normal_cdf",
    "std_normal_pdf",
]
