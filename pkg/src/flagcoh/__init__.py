"""Exact sheaf cohomology on the symplectic flag variety Sp4/B over F_p."""
from .cech import BettiVector, Cache, Schedule, Unstable, cohomology_expr, cohomology_line
from .rootdata import Weight, euler_characteristic
from .sheafexpr import Kernel, Line, Sum, Twist, frobenius_pull, spinor_pullback

__all__ = [
    "BettiVector",
    "Cache",
    "Kernel",
    "Line",
    "Schedule",
    "Sum",
    "Twist",
    "Unstable",
    "Weight",
    "cohomology_expr",
    "cohomology_line",
    "euler_characteristic",
    "frobenius_pull",
    "spinor_pullback",
]
