"""Riemannian optimization of nearest-neighbor Lindbladian splittings."""

from ._core import (  # noqa: F401
    average_error,
    build_ansatz,
    choi_rank,
    choi_to_kraus,
    compose_global,
    cost,
    expm,
    full_liouvillian,
    jump_operators,
    kraus_to_stiefel,
    layer_count,
    local_dissipator,
    optimize,
    random_density_matrix,
    stiefel_to_superop,
    superop_to_choi,
    trotter_error,
    unvec_row,
    vec_row,
)

__all__ = [
    "average_error",
    "build_ansatz",
    "choi_rank",
    "choi_to_kraus",
    "compose_global",
    "cost",
    "expm",
    "full_liouvillian",
    "jump_operators",
    "kraus_to_stiefel",
    "layer_count",
    "local_dissipator",
    "optimize",
    "random_density_matrix",
    "stiefel_to_superop",
    "superop_to_choi",
    "trotter_error",
    "unvec_row",
    "vec_row",
]
