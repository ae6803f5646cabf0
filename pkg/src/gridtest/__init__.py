"""Monotonicity-testing machinery for Boolean functions on hypergrids."""

from .grid import (AugEdge, ContractError, DomainError, FormatError, GridDomain, GridFunction,
                   InvariantViolation, Line, func, read_function, restrict, violating_edges,
                   write_function)

__version__ = "0.1.0"

__all__ = [
    "AugEdge", "ContractError", "DomainError", "FormatError", "GridDomain", "GridFunction",
    "InvariantViolation", "Line", "func", "read_function", "restrict", "violating_edges",
    "write_function",
]
