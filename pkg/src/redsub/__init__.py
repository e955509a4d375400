"""Exact lattice, order and module computations for reductions of subgroups."""

from .errors import RedsubError
from .lattice import IntMatrix, Lattice, hnf, snf, solve_integer
from .order import Normalization, Order, check_order, order_from_json

__version__ = "0.1.0"

__all__ = [
    "IntMatrix",
    "Lattice",
    "Normalization",
    "Order",
    "RedsubError",
    "check_order",
    "hnf",
    "order_from_json",
    "snf",
    "solve_integer",
]
