"""Assembly of the lifted metric G and endomorphism J on the cotangent bundle.

Everything is expressed in the frame adapted to the Levi-Civita connection of
the base: horizontal fields delta_i = d/dq^i + Gam0_ih d/dp_h and vertical
fields d/dp_i. In that frame both structures are block matrices whose blocks
are combinations of the base metric, its inverse, and rank-one pieces built
from the covector p:

    G = [[c1 g + d1 p p,   c3 I + d3 p g0],      (g0^i = g^ij p_j)
         [ ...sym...,      c2 g^-1 + d2 g0 g0]]

    J = [[-a3 I - b3 g0 p,   -(a2 g^-1 + b2 g0 g0)],
         [ a1 g + b1 p p,     a3 I + b3 p g0]]

The frame matrix converts between adapted and induced-chart components; the
numerical checks (Nijenhuis tensor, d of the fundamental form) differentiate
the chart components, which is what makes them independent of the frame
algebra they are checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientFamily, CoefficientSet
from .fd import STEP, central_d1, grad
from .space_form import SpaceForm, r_zero

__all__ = [
    "CotangentPoint",
    "BlockMatrix",
    "StructureAtPoint",
    "assemble_G",
    "assemble_J",
    "invert_G_closed_form",
    "frame_matrix",
    "frame_matrix_inverse",
    "chart_bilinear",
    "chart_endomorphism",
    "build_structure",
    "fundamental_form",
    "j_squared_residual",
    "hermitian_residual",
    "nijenhuis_numeric",
    "domega_numeric",
    "covector_with_energy",
]


class CotangentPoint:
    """A point (x, p) of T*M with every base quantity cached.

    Attributes: g, gi (metric and inverse at x), gam (Christoffels), R
    (curvature), g0 = g^ij p_j, t = p-energy, gam0[i,h] = p_k Gam^k_ih,
    r0[l,i,j] = p_h R^h_lij, z = (x, p) stacked.
    """

    def __init__(self, sf: SpaceForm, x, p):
        self.sf = sf
        self.x = np.asarray(x, dtype=float)
        self.p = np.asarray(p, dtype=float)
        if self.x.shape != (sf.n,) or self.p.shape != (sf.n,):
            raise ValueError(f"x and p must have shape ({sf.n},)")
        self.g, self.gi = sf.metric(self.x)
        self.gam = sf.christoffel(self.x)
        self.R = sf.curvature(self.x)
        self.g0 = self.gi @ self.p
        self.t = 0.5 * float(self.p @ self.g0)
        self.gam0 = np.einsum('k,kih->ih', self.p, self.gam)
        self.r0 = r_zero(self.R, self.p)
        self.z = np.concatenate([self.x, self.p])

    @property
    def n(self):
        return self.sf.n


@dataclass
class BlockMatrix:
    """2n x 2n matrix split into horizontal/vertical blocks."""

    hh: np.ndarray
    hv: np.ndarray
    vh: np.ndarray
    vv: np.ndarray

    def full(self) -> np.ndarray:
        return np.block([[self.hh, self.hv], [self.vh, self.vv]])

    @classmethod
    def from_full(cls, M: np.ndarray) -> "BlockMatrix":
        n = M.shape[0] // 2
        return cls(hh=M[:n, :n].copy(), hv=M[:n, n:].copy(),
                   vh=M[n:, :n].copy(), vv=M[n:, n:].copy())


def assemble_G(pt: CotangentPoint, cs: CoefficientSet) -> BlockMatrix:
    """The lifted metric in the adapted frame."""
    n = pt.n
    pp = np.outer(pt.p, pt.p)
    pg0 = np.outer(pt.p, pt.g0)
    g0g0 = np.outer(pt.g0, pt.g0)
    G1 = cs.c1.v0 * pt.g + cs.d1.v0 * pp
    G2 = cs.c3.v0 * np.eye(n) + cs.d3.v0 * pg0
    G3 = cs.c2.v0 * pt.gi + cs.d2.v0 * g0g0
    return BlockMatrix(hh=G1, hv=G2, vh=G2.T, vv=G3)


def assemble_J(pt: CotangentPoint, cs: CoefficientSet) -> BlockMatrix:
    """The lifted almost complex structure in the adapted frame."""
    n = pt.n
    g0p = np.outer(pt.g0, pt.p)
    return BlockMatrix(
        hh=-cs.a3.v0 * np.eye(n) - cs.b3.v0 * g0p,
        hv=-(cs.a2.v0 * pt.gi + cs.b2.v0 * np.outer(pt.g0, pt.g0)),
        vh=cs.a1.v0 * pt.g + cs.b1.v0 * np.outer(pt.p, pt.p),
        vv=cs.a3.v0 * np.eye(n) + cs.b3.v0 * g0p.T,
    )


def invert_G_closed_form(pt: CotangentPoint, cs: CoefficientSet) -> BlockMatrix:
    """The inverse metric assembled from the e/f scalars, no linear solve."""
    n = pt.n
    H1 = cs.e1.v0 * pt.gi + cs.f1.v0 * np.outer(pt.g0, pt.g0)
    H2 = cs.e3.v0 * np.eye(n) + cs.f3.v0 * np.outer(pt.g0, pt.p)
    H3 = cs.e2.v0 * pt.g + cs.f2.v0 * np.outer(pt.p, pt.p)
    return BlockMatrix(hh=H1, hv=H2, vh=H2.T, vv=H3)


def frame_matrix(pt: CotangentPoint) -> np.ndarray:
    """Columns are the chart components of (delta_i, d/dp_i)."""
    n = pt.n
    F = np.eye(2 * n)
    F[n:, :n] = pt.gam0.T
    return F


def frame_matrix_inverse(pt: CotangentPoint) -> np.ndarray:
    n = pt.n
    Fi = np.eye(2 * n)
    Fi[n:, :n] = -pt.gam0.T
    return Fi


def chart_bilinear(pt: CotangentPoint, B: BlockMatrix) -> np.ndarray:
    """Adapted-frame bilinear form -> induced-chart components."""
    Fi = frame_matrix_inverse(pt)
    return Fi.T @ B.full() @ Fi


def chart_endomorphism(pt: CotangentPoint, B: BlockMatrix) -> np.ndarray:
    F = frame_matrix(pt)
    return F @ B.full() @ frame_matrix_inverse(pt)


@dataclass
class StructureAtPoint:
    """One-stop bundle of everything evaluated at a single (x, p)."""

    pt: CotangentPoint
    cs: CoefficientSet
    G: np.ndarray       # adapted frame
    J: np.ndarray
    H: np.ndarray       # inverse of G, adapted frame


def build_structure(sf: SpaceForm, family: CoefficientFamily, x, p,
                    admissible: bool = True) -> StructureAtPoint:
    pt = CotangentPoint(sf, x, p)
    cs = family.at(pt.t, admissible=admissible)
    return StructureAtPoint(
        pt=pt, cs=cs,
        G=assemble_G(pt, cs).full(),
        J=assemble_J(pt, cs).full(),
        H=invert_G_closed_form(pt, cs).full(),
    )


def fundamental_form(G: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Omega_AB = G(e_A, J e_B); antisymmetric when (G, J) is Hermitian."""
    return G @ J


def j_squared_residual(J: np.ndarray) -> float:
    n2 = J.shape[0]
    return float(np.abs(J @ J + np.eye(n2)).max())


def hermitian_residual(G: np.ndarray, J: np.ndarray) -> float:
    """max |G(JX, JY) - G(X, Y)| over frame pairs."""
    return float(np.abs(J.T @ G @ J - G).max())


# ------------------------------------------------------------------
# numerical checks. Both differentiate chart components with central
# differences, so they do not reuse any of the frame algebra above beyond
# evaluating it pointwise.

def _chart_J_of(sf: SpaceForm, family: CoefficientFamily):
    n = sf.n

    def Jf(z):
        pt = CotangentPoint(sf, z[:n], z[n:])
        cs = family.at(pt.t)
        return chart_endomorphism(pt, assemble_J(pt, cs))

    return Jf


def nijenhuis_numeric(sf: SpaceForm, family: CoefficientFamily, x, p,
                      h: float = STEP) -> float:
    """max |N(X, Y)| over the adapted frame fields at (x, p), where

        N(X,Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]

    and every bracket is computed from chart partial derivatives.
    """
    n = sf.n
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])
    Jf = _chart_J_of(sf, family)

    def frame_field(a):
        def U(z):
            return frame_matrix(CotangentPoint(sf, z[:n], z[n:]))[:, a]
        return U

    def j_of(field):
        def JU(z):
            return Jf(z) @ field(z)
        return JU

    def bracket(U, V):
        DU = grad(U, z0, h=h)   # DU[k, i] = d_k U_i
        DV = grad(V, z0, h=h)
        return DV.T @ U(z0) - DU.T @ V(z0)

    J0 = Jf(z0)
    worst = 0.0
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            X, Y = frame_field(a), frame_field(b)
            JX, JY = j_of(X), j_of(Y)
            N = (bracket(JX, JY) - J0 @ bracket(JX, Y)
                 - J0 @ bracket(X, JY) - bracket(X, Y))
            worst = max(worst, float(np.abs(N).max()))
    return worst


def domega_numeric(sf: SpaceForm, family: CoefficientFamily, x, p,
                   h: float = STEP) -> float:
    """max coefficient of the exterior derivative of the fundamental form,
    from chart partials: (dOm)_ABC = cyclic sum of d_A Om_BC."""
    n = sf.n
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])

    def Om(z):
        pt = CotangentPoint(sf, z[:n], z[n:])
        cs = family.at(pt.t)
        return chart_bilinear(pt, assemble_G(pt, cs)) \
            @ chart_endomorphism(pt, assemble_J(pt, cs))

    dT = np.stack([central_d1(Om, z0, k, h=h) for k in range(2 * n)])
    worst = 0.0
    for A in range(2 * n):
        for B in range(A + 1, 2 * n):
            for C in range(B + 1, 2 * n):
                val = dT[A, B, C] + dT[B, C, A] + dT[C, A, B]
                worst = max(worst, abs(float(val)))
    return worst


def covector_with_energy(sf: SpaceForm, x, t: float, rng) -> np.ndarray:
    """A covector p at x with exactly the requested energy t = |p|^2_g* / 2,
    in a direction drawn from rng."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return np.zeros(sf.n)
    _, gi = sf.metric(np.asarray(x, float))
    while True:
        v = rng.standard_normal(sf.n)
        norm2 = float(v @ gi @ v)
        if norm2 > 1e-12:
            break
    return v * np.sqrt(2.0 * t / norm2)
