"""Exception types shared across the package.

The split mirrors how callers need to react:

* ``DomainError`` -- the input is outside the mathematical domain of the
  operation (a series with the wrong constant term, a non-positive initial
  height, a query outside a trajectory's coverage).  A usage problem, not a
  numerical one.
* ``IntegrationError`` -- the ODE integrator could not proceed (step-size
  collapse, positivity loss).  Indicates a genuinely bad problem or a bug.
* ``ConvergenceError`` -- an iterative solver hit its iteration cap.
* ``AccuracyError`` -- a result was computed but cannot be trusted at the
  requested tolerance; the message carries the diagnostic.  Verification
  studies raise this instead of reporting numbers that would be noise.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class IntegrationError(RuntimeError):
    """The ODE integrator failed to advance the solution."""


class ConvergenceError(RuntimeError):
    """An iterative solver exceeded its iteration budget."""


class AccuracyError(RuntimeError):
    """A result cannot be certified at the requested tolerance."""
