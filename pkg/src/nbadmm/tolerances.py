"""Numerical tolerances shared across modules."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    integral: float = 1e-9        # entry counts as 0/1 when this close
    l1_excess: float = 1e-9       # Flanagan symbol may exceed unit weight by this much
    llr_clip: float = 50.0        # |LLR| cap
    hull_gap: float = 1e-8        # optimality certificate for hull projection
    pp_breakpoint: float = 1e-15  # slack used when comparing piecewise-linear knots


TOL = Tolerances()
