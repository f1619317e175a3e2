"""Closed-form constants of the ABP inequalities."""
import math


def codim1_gamma(n, h):
    return (2.0 * n + 4.0 * h) ** n


def codim1_factors(n, h, a):
    """((1 + a + h/a)^n, sqrt(1 + 4a^2))."""
    return (1.0 + a + h / a) ** n, projection_factor(a)


def general_gamma(n, m, h):
    return 4.0 ** (n - m) * (2.0 * m + 4.0 * h) ** m


def general_factors(n, m, h, a):
    """((1 + a + 1/a)^(n-m), (1 + a + h/a)^m)."""
    return (1.0 + a + 1.0 / a) ** (n - m), (1.0 + a + h / a) ** m


def projection_factor(a):
    return math.sqrt(1.0 + 4.0 * a * a)


def savin_reference(n, h, a):
    """Reciprocal of the codimension-one constant chain; 1/143.1 for n=2, h=0, a=1."""
    f1, f2 = codim1_factors(n, h, a)
    return 1.0 / (codim1_gamma(n, h) * f1 * f2)
