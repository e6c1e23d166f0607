"""Tavis-Cummings quantum matrices, their quantum diagonalization and closed-form evolution.

Modules:

- :mod:`~tavis_qdm.opalg`   normal-ordered operators in a, a†, N and matrices of them
- :mod:`~tavis_qdm.fock`    dense realizations on a truncated Fock space
- :mod:`~tavis_qdm.model`   A_n, the spin blocks B_j and the intertwiners T
- :mod:`~tavis_qdm.qdm`     B = U D U† by classicalize / quantize / reduce
- :mod:`~tavis_qdm.evolve`  exp(-itgA_n) for one to three atoms and state evolution
- :mod:`~tavis_qdm.verify`  the identity suite
"""

from .evolve import (
    InitialState,
    Propagator,
    evolution,
    evolution_one,
    evolution_three,
    evolution_two,
    evolve_state,
    full_propagator,
    parse_state,
)
from .fock import FockRealization, expm_hermitian, interior_compare, realize
from .model import build_A, build_decomposition, build_hamiltonian_phases, build_spin_block
from .opalg import (
    NumberFunction,
    OperatorEntry,
    QuantumMatrix,
    SubspaceProfile,
    entry_apply,
    entry_multiply,
    nf_shift,
    qm_adjoint,
    qm_multiply,
)
from .qdm import (
    DiagonalizationResult,
    classical_eigensystem,
    classicalize,
    diagonalize,
    diagonalize_reduced,
    quantize,
    reduce,
    three_atom_diagonalization,
)
from .verify import IdentityCheck, SuiteConfig, run_suite

__version__ = "0.1.0"

__all__ = [
    "NumberFunction", "OperatorEntry", "QuantumMatrix", "SubspaceProfile",
    "nf_shift", "entry_multiply", "entry_apply", "qm_multiply", "qm_adjoint",
    "FockRealization", "realize", "expm_hermitian", "interior_compare",
    "build_A", "build_spin_block", "build_decomposition", "build_hamiltonian_phases",
    "classical_eigensystem", "classicalize", "quantize", "reduce", "diagonalize_reduced",
    "diagonalize", "three_atom_diagonalization", "DiagonalizationResult",
    "evolution", "evolution_one", "evolution_two", "evolution_three",
    "full_propagator", "Propagator", "InitialState", "parse_state", "evolve_state",
    "IdentityCheck", "SuiteConfig", "run_suite",
]
