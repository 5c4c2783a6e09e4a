"""The C-infinity bump ``exp(-1/(1-t^2))`` on (-1, 1), its derivatives, and tensor products.

Derivatives are exact: ``b^(n)(t) = P_n(t) (1-t^2)^(-2n) b(t)`` with

    P_{n+1} = P_n' (1-t^2)^2 + 4 n t (1-t^2) P_n - 2 t P_n,    P_0 = 1.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

_ONE_MINUS_T2 = Polynomial([1.0, 0.0, -1.0])
_T = Polynomial([0.0, 1.0])


@lru_cache(maxsize=None)
def _deriv_poly(n):
    if n == 0:
        return Polynomial([1.0])
    p = _deriv_poly(n - 1)
    k = n - 1
    return p.deriv() * _ONE_MINUS_T2 ** 2 + 4 * k * _T * _ONE_MINUS_T2 * p - 2 * _T * p


def bump(t, n=0):
    """``n``-th derivative of the unnormalised bump, zero outside (-1, 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    ti = t[inside]
    s = 1.0 - ti * ti
    logv = -1.0 / s - 2 * n * np.log(s)
    out[inside] = _deriv_poly(n)(ti) * np.exp(logv)
    return out


@lru_cache(maxsize=None)
def bump_mass():
    val, _ = quad(lambda t: float(np.exp(-1.0 / (1.0 - t * t))), -1, 1, epsabs=0, epsrel=1e-13, limit=200)
    return val


def mollifier_profile(t, n=0):
    """Unit-mass 1-D mollifier ``rho`` (or its ``n``-th derivative)."""
    return bump(t, n) / bump_mass()


@lru_cache(maxsize=None)
def bump_sup(n):
    t = np.linspace(-1, 1, 40001)
    return float(np.max(np.abs(bump(t, n))))


class TensorBump:
    """``phi(x) = prod_k b((x_k - c_k) / s_k)``, optionally normalised to unit mass."""

    def __init__(self, center, scale, normalized=False):
        self.center = np.asarray(center, dtype=float)
        self.d = self.center.size
        self.scale = np.broadcast_to(np.asarray(scale, dtype=float), (self.d,)).copy()
        self.normalized = normalized

    def _profile(self, t, n):
        return mollifier_profile(t, n) if self.normalized else bump(t, n)

    def derivative(self, alpha, points):
        """``d^alpha phi`` at an ``(N, d)`` array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.ones(pts.shape[0])
        for k in range(self.d):
            a = int(alpha[k])
            t = (pts[:, k] - self.center[k]) / self.scale[k]
            out *= self._profile(t, a) / self.scale[k] ** a
        return out

    def __call__(self, points):
        return self.derivative((0,) * self.d, points)

    def axis_derivative(self, k, n, t_values):
        """1-D factor ``d^n/dx^n b((x - c_k)/s_k)`` along axis ``k``."""
        t = (np.asarray(t_values, dtype=float) - self.center[k]) / self.scale[k]
        return self._profile(t, n) / self.scale[k] ** n

    def ck_norm(self, order):
        """``max_{|gamma| <= order} sup |d^gamma phi|`` (exact up to the sampled sup of each factor)."""
        best = 0.0
        for gamma in _multi_indices_upto(self.d, order):
            v = 1.0
            for k, g in enumerate(gamma):
                sup = bump_sup(g) / (bump_mass() if self.normalized else 1.0)
                v *= sup / self.scale[k] ** g
            best = max(best, v)
        return best

    def support_box(self):
        return self.center - self.scale, self.center + self.scale


def _multi_indices_upto(d, order):
    if d == 0:
        yield ()
        return
    for first in range(order + 1):
        for rest in _multi_indices_upto(d - 1, order - first):
            yield (first,) + rest
