"""Heat kernels and bound checks on finite ultrametric spaces."""

from ._core import (
    Kernel,
    Space,
    UltraheatError,
    __version__,
    all_checks,
    certificate,
    due_constant,
    eigenvalues,
    fast_diagonal,
    heat_kernel,
    run_checks,
    wue_constant,
)

__all__ = [
    "Kernel",
    "Space",
    "UltraheatError",
    "__version__",
    "all_checks",
    "certificate",
    "due_constant",
    "eigenvalues",
    "fast_diagonal",
    "heat_kernel",
    "run_checks",
    "wue_constant",
]
