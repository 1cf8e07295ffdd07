"""Matrix Painleve systems, their Lax pairs and Calogero-Painleve particle reductions.

Submodules
----------
matcore     commutators, eigendecomposition, the ``ad``-shifted Sylvester solver
systems     the eight matrix systems: flow fields, Hamiltonians, Lax pairs
flows       complex-time integration of the matrix flows and monitors
reduction   orbit normalisation, the F matrix, reduced particle Hamiltonians
elliptic    Weierstrass ``wp`` for the lattice ``Z + tau Z``
canonical   maps from particle to physical canonical coordinates
monodromy   Stokes relations of the second system
cli         ``cplab simulate | verify | stokes``
"""

from .errors import CplabError, InvalidInput, NumericalError
from .systems import MatrixState, ParamSet, SystemId

__all__ = ["CplabError", "InvalidInput", "NumericalError", "MatrixState", "ParamSet", "SystemId"]
__version__ = "0.1.0"
