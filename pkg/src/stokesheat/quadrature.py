"""Quadrature rules and closed-form trigonometric integrals.

The strip geometry makes every x1 integral a product of sines/cosines over
an interval, which has a closed form; x2 integrals of the (entire) mode
profiles use Gauss-Legendre nodes.  Keeping the x1 direction exact removes
the dominant quadrature error from the exponentially ill-conditioned
Gramian solves downstream.
"""

import numpy as np

# trig kind codes used for the x1 factor of a field component
COS = 0
SIN = 1

GAUSS_NODES_X2 = 64


def gauss_legendre(n, a, b):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _int_cos(m, a, b):
    """Integral of cos(m*x) over [a, b], elementwise in m (m == 0 allowed)."""
    m = np.asarray(m, dtype=float)
    nz = m != 0
    mn = np.where(nz, m, 1.0)
    return np.where(nz, (np.sin(mn * b) - np.sin(mn * a)) / mn, b - a)


def _int_sin(m, a, b):
    """Integral of sin(m*x) over [a, b], elementwise in m."""
    m = np.asarray(m, dtype=float)
    nz = m != 0
    mn = np.where(nz, m, 1.0)
    return np.where(nz, (np.cos(mn * a) - np.cos(mn * b)) / mn, 0.0)


def trig_pair_integral(kind1, k1, kind2, k2, a, b):
    """Closed-form integral of T1(x)*T2(x) over [a, b].

    T(x) is cos(k*x) for kind COS or sin(k*x) for kind SIN; inputs broadcast,
    so passing column/row vectors yields the full pairwise matrix.  sin(0*x)
    is the zero function and cos(0*x) the constant 1, so k = 0 entries need
    no special casing by the caller.
    """
    kind1 = np.asarray(kind1)
    kind2 = np.asarray(kind2)
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    kd = k1 - k2
    ks = k1 + k2
    cc = 0.5 * (_int_cos(kd, a, b) + _int_cos(ks, a, b))
    ss = 0.5 * (_int_cos(kd, a, b) - _int_cos(ks, a, b))
    sc = 0.5 * (_int_sin(ks, a, b) + _int_sin(kd, a, b))   # sin(k1 x) cos(k2 x)
    cs = 0.5 * (_int_sin(ks, a, b) - _int_sin(kd, a, b))   # cos(k1 x) sin(k2 x)
    out = np.where(
        (kind1 == SIN) & (kind2 == SIN), ss,
        np.where((kind1 == COS) & (kind2 == COS), cc,
                 np.where((kind1 == SIN) & (kind2 == COS), sc, cs)))
    return out


def trig_eval(kind, k, x, deriv=0):
    """Evaluate d^deriv/dx^deriv of cos(kx) or sin(kx), elementwise."""
    kind = np.asarray(kind)
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    phase = np.where(kind == COS, 0.5 * np.pi, 0.0)  # sin(kx + phase)
    return k ** deriv * np.sin(k * x + phase + deriv * 0.5 * np.pi)
