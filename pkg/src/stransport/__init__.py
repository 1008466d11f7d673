"""Linear transports of tensors along paths, generated by derivations."""

from .engine import (
    AxiomReport,
    NonFiniteSolution,
    Probes,
    TensorFieldAlongPath,
    TransportMatrix,
    basis_fields,
    derivation_at,
    derivation_of_transported,
    generator_action,
    law_from_derivation,
    solve_fundamental,
    transport_matrix,
    transport_tensor,
    verify_axioms,
)
from .law import TransportLaw
from .tensor import (
    BasisChange,
    TensorComponents,
    basis_change_path,
    change_law_basis,
    change_tensor_basis,
    contract,
    tensor_product,
)

__version__ = "0.1.0"
