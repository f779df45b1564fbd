"""Exception types raised across the package.

Every error derives from :class:`CircleConjError` so callers (and the CLI)
can catch the whole family at once.  Errors that carry a usable partial
result expose it as an attribute.
"""

from __future__ import annotations


class CircleConjError(Exception):
    """Base class for all package errors."""


class PrecisionExhausted(CircleConjError):
    """Fewer trustworthy partial quotients than requested.

    ``prefix`` holds the trustworthy quotients, ``m`` their count.
    """

    def __init__(self, m, prefix=None):
        self.m = m
        self.prefix = list(prefix) if prefix is not None else []
        super().__init__(f"only {m} trustworthy partial quotients")


class IntegerOverflow(CircleConjError):
    """A convergent denominator left the configured integer width."""

    def __init__(self, n, ps=None, qs=None):
        self.n = n
        self.ps = ps
        self.qs = qs
        super().__init__(f"integer overflow at index {n}")


class OutOfRange(CircleConjError):
    """Argument outside the domain covered by the available data."""


class BadDistribution(CircleConjError):
    """Invalid probability vector or support."""


class InvalidParams(CircleConjError):
    """Parameters outside their admissible range."""


class SeriesDiverges(CircleConjError):
    """A power-series modulus fails its summability test."""


class DiniViolated(CircleConjError):
    """A construction requiring the Dini condition got a non-Dini modulus."""


class Inconclusive(CircleConjError):
    """A convergence test could not decide within its budget."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class InsufficientRange(CircleConjError):
    """Too few samples or too narrow a range of separations to fit."""


class NotADiffeo(CircleConjError):
    """The map is not an orientation-preserving diffeomorphism."""


class PeriodicOrbitDetected(CircleConjError):
    """An exact return was found, so the rotation number is rational.

    ``i`` is the return time, ``p`` the number of turns; ``ks`` the partial
    quotients found before the return.
    """

    def __init__(self, i, p, ks=None):
        self.i = i
        self.p = p
        self.ks = list(ks) if ks is not None else []
        super().__init__(f"periodic orbit: return after {i} steps ({p} turns)")

    @property
    def rho(self):
        from fractions import Fraction

        return Fraction(self.p, self.i)


class DepthExhausted(CircleConjError):
    """Iteration budget ran out before the requested depth."""

    def __init__(self, message, ks=None):
        self.ks = list(ks) if ks is not None else []
        super().__init__(message)


class NoConvergence(CircleConjError):
    """An iterative solver did not meet its target."""


class QuadratureFailure(CircleConjError):
    """Adaptive quadrature did not reach the requested accuracy."""


class DegenerateConfiguration(CircleConjError):
    """Coincident points where no derivative convention applies."""


class NonMonotone(CircleConjError):
    """The function is not strictly increasing on the points used."""


class DepthUnavailable(CircleConjError):
    """The requested partition level exceeds the computed depth."""


class DerivativeUnderflow(CircleConjError):
    """A chain-rule product lost all precision."""


class NonPositiveDerivative(CircleConjError):
    """T' <= 0 was met along an orbit."""


class NotAModulus(CircleConjError):
    """A candidate modulus failed its monotonicity or limit checks."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
