"""Python interface to the cips3d C++ core."""

from ._core import (
    Generator,
    bench_modfc,
    check_counterexample,
    composite,
    default_config,
    distance_curve,
    gamma_encode,
    interpolate_inr,
    modfc,
    swap_layers,
    t_encode,
    train,
)

__all__ = [
    "Generator",
    "bench_modfc",
    "check_counterexample",
    "composite",
    "default_config",
    "distance_curve",
    "gamma_encode",
    "interpolate_inr",
    "modfc",
    "swap_layers",
    "t_encode",
    "train",
]
