"""Constant-curvature base manifolds in one conformal chart.

The chart covers every sign of the sectional curvature c:

    g_ij(x) = delta_ij / (1 + (c/4)|x|^2)^2

For c >= 0 it is global (stereographic for the sphere, minus a point); for
c < 0 it is the ball 1 + (c/4)|x|^2 > 0. Christoffel symbols and the
curvature tensor come out in closed form:

    Gamma^k_ij = delta^k_i s_j + delta^k_j s_i - delta_ij s_k,
    s_i = -(c/2) phi x_i,  phi = 1/(1 + (c/4)|x|^2)

    R^h_kij = c (delta^h_i g_kj - delta^h_j g_ki)

with the convention K(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z
- nabla_[X,Y] Z and K(d_i, d_j) d_k = R^h_kij d_h. The index order and the
overall sign are the ones under which numeric sectional curvature equals c
and the lifted complex structure integrates; the tests pin both down against
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["SpaceForm", "r_zero"]


@dataclass(frozen=True)
class SpaceForm:
    """An n-dimensional space form of constant sectional curvature c."""

    n: int
    c: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")

    def conformal_factor(self, x) -> float:
        """phi(x) = 1/(1 + (c/4)|x|^2), with the c < 0 chart-domain check."""
        x = np.asarray(x, float)
        den = 1.0 + 0.25 * self.c * float(x @ x)
        if den <= 1e-12:
            raise DomainError(
                f"point |x| = {np.linalg.norm(x):.4f} outside the conformal chart "
                f"for c = {self.c}")
        return 1.0 / den

    def metric(self, x):
        """Return (g, g^{-1}) at x."""
        phi = self.conformal_factor(x)
        I = np.eye(self.n)
        return phi * phi * I, I / (phi * phi)

    def christoffel(self, x):
        """Gamma[k, i, j] = Gamma^k_ij, symmetric in (i, j)."""
        x = np.asarray(x, float)
        s = -0.5 * self.c * self.conformal_factor(x) * x
        I = np.eye(self.n)
        return (np.einsum('ki,j->kij', I, s) + np.einsum('kj,i->kij', I, s)
                - np.einsum('ij,k->kij', I, s))

    def curvature(self, x):
        """R[h, k, i, j] = R^h_kij = c (delta^h_i g_kj - delta^h_j g_ki)."""
        g, _ = self.metric(x)
        I = np.eye(self.n)
        return self.c * (np.einsum('hi,kj->hkij', I, g)
                         - np.einsum('hj,ki->hkij', I, g))


def r_zero(R, p):
    """Contraction R0_lij = p_h R^h_lij (covector slot first)."""
    return np.einsum('h,hlij->lij', np.asarray(p, float), R)
