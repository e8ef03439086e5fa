"""Executable Lyapunov theory for forward dynamical systems.

Systems are monoid actions of a timeline on a metric space. The package
checks monovariants, attractors and equilibria, verifies delta and Lyapunov
certificates, converts between them, and ships a brute-force oracle for
finite systems.
"""

from .timeline import CONTINUOUS, DISCRETE, TimelineKind, free
from .verdict import Status, Verdict

__all__ = ["CONTINUOUS", "DISCRETE", "Status", "TimelineKind", "Verdict", "free"]
__version__ = "0.1.0"
