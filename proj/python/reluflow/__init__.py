"""Exact ReLU compilation of piecewise linear functions and ResNet flow approximation."""

from ._reluflow import (
    KuhnGrid,
    Network,
    PWLFunction,
    ResNet,
    Rhs,
    abs_network,
    build_resnet,
    build_shared_resnet,
    compile_pwl,
    compiled_depth,
    compose_networks,
    euler_solve,
    gronwall_constant,
    growth_bound,
    identity_network,
    interpolate,
    make_rhs,
    min2_network,
    min_tree_network,
    omega_zero_contains,
    parallelize,
    perturbed_euler_bound,
    reference_solve,
    run_convergence,
    solution_map_bound,
    sum_networks,
    zero_network,
)

__all__ = [name for name in dir() if not name.startswith("_")]
