"""lazycasp: a finite-domain constraint answer-set solver.

The solver combines CDCL search over completion nogoods with lazy
generation of order-encoding nogoods and order atoms for linear
constraints, a CSP preprocessing pipeline, branch-and-bound optimization
and multi-shot incremental solving.
"""

from .model import DomainSet, View

__all__ = ["DomainSet", "View", "Session", "Statistics"]

__version__ = "0.1.0"


def __getattr__(name):
    # session pulls in the whole solver stack; load it on demand
    if name in ("Session", "Statistics", "SolveResult"):
        from . import session

        return getattr(session, name)
    raise AttributeError(name)
