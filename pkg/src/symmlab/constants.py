"""Dimensional constants of the unit ball."""

import math


def omega(N):
    """Lebesgue measure of the unit ball in R^N."""
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


def kappa(N):
    """Isoperimetric constant N * omega_N**(1/N): perimeter of the ball of unit volume."""
    return N * omega(N) ** (1.0 / N)


def exponents(p, N):
    """Return ``(alpha, beta)`` = (p/(p-1), (p-N)/(N(p-1)))."""
    return p / (p - 1.0), (p - N) / (N * (p - 1.0))
