from .base import IdentityPreconditioner, Preconditioner, operator_norm_estimate
from .jacobi import JacobiPreconditioner, jacobi_apply
from .ilu import (FactorizationError, Ilu0Factors, Ilu0Preconditioner,
                  SchwarzPreconditioner, block_diagonal, ilu0_apply, ilu0_setup,
                  schwarz_apply)
from .amg import (AmgHierarchy, AmgPreconditioner, aggregate, amg_apply,
                  amg_setup, gauss_seidel_sweep, strength_graph)

PRECONDITIONERS = {
    "identity": IdentityPreconditioner,
    "jacobi": JacobiPreconditioner,
    "ilu0": Ilu0Preconditioner,
    "schwarz": SchwarzPreconditioner,
    "amg": AmgPreconditioner,
}


def make_preconditioner(kind, **params):
    """Instantiate a preconditioner by its config name."""
    if kind == "iluk":
        raise NotImplementedError("ILU(k) with k > 0 is reserved but not implemented")
    try:
        cls = PRECONDITIONERS[kind]
    except KeyError:
        raise ValueError(f"unknown preconditioner {kind!r}; "
                         f"choose from {sorted(PRECONDITIONERS)}") from None
    return cls(**params)


__all__ = [
    "Preconditioner", "IdentityPreconditioner", "JacobiPreconditioner",
    "Ilu0Preconditioner", "SchwarzPreconditioner", "AmgPreconditioner",
    "Ilu0Factors", "AmgHierarchy", "FactorizationError",
    "ilu0_setup", "ilu0_apply", "jacobi_apply", "schwarz_apply", "block_diagonal",
    "amg_setup", "amg_apply", "aggregate", "strength_graph", "gauss_seidel_sweep",
    "operator_norm_estimate", "make_preconditioner", "PRECONDITIONERS",
]
