"""Curvature of the lifted metric: twelve adapted-frame blocks, Ricci,
Einstein residuals, holomorphic sectional curvature, and the residuals of
the two scalar equations whose solutions are the Einstein lambda families.

Block naming: a four-letter tag like PQPP records which of the two frame
species (P = vertical, Q = horizontal) sits in each curvature slot. The
vertical derivatives of the connection blocks come from the forward-mode
pass, so the closed-form path contains no difference quotients at all; the
chart oracle at the bottom is pure finite differences and shares nothing
with it but pointwise evaluation of G.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .bundle_structures import (
    CotangentPoint,
    assemble_G,
    assemble_J,
    chart_bilinear,
    frame_matrix,
    frame_matrix_inverse,
)
from .coefficients import CoefficientFamily, CoefficientSet
from .connection import connection_with_derivatives
from .fd import STEP, grad

__all__ = [
    "CurvatureBlocks",
    "RicciBlocks",
    "EinsteinDiagnostics",
    "curvature_blocks",
    "full_curvature",
    "curvature_oracle",
    "bianchi_residual",
    "ricci_blocks",
    "einstein_residual",
    "holomorphic_sectional_curvature",
    "case_equations_residual",
]

_BLOCK_NAMES = ("QQQQ", "QQQP", "QQPQ", "QQPP", "PPQQ", "PPQP", "PPPQ",
                "PPPP", "PQQQ", "PQQP", "PQPQ", "PQPP")

# which half (False = horizontal, True = vertical) each of the assembled
# indices (d, c, a, b) lives in, per block
_PLACEMENT = {
    "QQQQ": (False, False, False, False),
    "QQQP": (True, False, False, False),
    "QQPQ": (False, True, False, False),
    "QQPP": (True, True, False, False),
    "PPQQ": (False, False, True, True),
    "PPQP": (True, False, True, True),
    "PPPQ": (False, True, True, True),
    "PPPP": (True, True, True, True),
    "PQQQ": (False, False, True, False),
    "PQQP": (True, False, True, False),
    "PQPQ": (False, True, True, False),
    "PQPP": (True, True, True, False),
}


@dataclass
class CurvatureBlocks:
    QQQQ: np.ndarray
    QQQP: np.ndarray
    QQPQ: np.ndarray
    QQPP: np.ndarray
    PPQQ: np.ndarray
    PPQP: np.ndarray
    PPPQ: np.ndarray
    PPPP: np.ndarray
    PQQQ: np.ndarray
    PQQP: np.ndarray
    PQPQ: np.ndarray
    PQPP: np.ndarray

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _BLOCK_NAMES}

    def max_deviation(self, other: "CurvatureBlocks") -> float:
        return max(float(np.abs(getattr(self, nm) - getattr(other, nm)).max())
                   for nm in _BLOCK_NAMES)


def curvature_blocks(pt: CotangentPoint, cs: CoefficientSet) -> CurvatureBlocks:
    """All twelve blocks from the connection blocks and their exact
    vertical derivatives."""
    jet = connection_with_derivatives(pt, cs)
    B, d = jet.blocks, jet.d
    Q, Qt, P, Pt, S, St = B.Q, B.Qt, B.P, B.Pt, B.S, B.St
    dQ, dQt, dP, dPt, dS, dSt = d.Q, d.Qt, d.P, d.Pt, d.S, d.St
    r0, R = pt.r0, pt.R
    E = {}
    E["QQQQ"] = (np.einsum("jkl,ilh->ijkh", St, St) + np.einsum("ilh,jkl->ijkh", P, S)
                 - np.einsum("jlh,ikl->ijkh", St, St) - np.einsum("jlh,ikl->ijkh", P, S)
                 - np.einsum("lij,klh->ijkh", r0, P) + np.einsum("hkij->ijkh", R))
    E["QQQP"] = (np.einsum("jkl,ilh->ijkh", St, S) + np.einsum("ilh,jkl->ijkh", Pt, S)
                 - np.einsum("ikl,jlh->ijkh", St, S) - np.einsum("jlh,ikl->ijkh", Pt, S)
                 - np.einsum("klh,lij->ijkh", Pt, r0))
    E["QQPQ"] = (np.einsum("jkl,ilh->ijkh", Pt, P) + np.einsum("jkl,ilh->ijkh", P, St)
                 - np.einsum("ikl,jlh->ijkh", Pt, P) - np.einsum("ikl,jlh->ijkh", P, St)
                 - np.einsum("lij,lkh->ijkh", r0, Qt))
    E["QQPP"] = (np.einsum("jkl,ilh->ijkh", Pt, Pt) + np.einsum("jkl,ilh->ijkh", P, S)
                 - np.einsum("ikl,jlh->ijkh", Pt, Pt) - np.einsum("ikl,jlh->ijkh", P, S)
                 - np.einsum("lij,lkh->ijkh", r0, Q) - np.einsum("khij->ijkh", R))
    E["PPQQ"] = (np.einsum("ikjh->ijkh", dP) - np.einsum("jkih->ijkh", dP)
                 + np.einsum("kjl,ilh->ijkh", Pt, Qt) + np.einsum("kjl,lih->ijkh", P, P)
                 - np.einsum("kil,jlh->ijkh", Pt, Qt) - np.einsum("kil,ljh->ijkh", P, P))
    E["PPQP"] = (np.einsum("ikjh->ijkh", dPt) - np.einsum("jkih->ijkh", dPt)
                 + np.einsum("kjl,ilh->ijkh", Pt, Q) + np.einsum("kjl,lih->ijkh", P, Pt)
                 - np.einsum("kil,jlh->ijkh", Pt, Q) - np.einsum("kil,ljh->ijkh", P, Pt))
    E["PPPQ"] = (dQt - np.einsum("jikh->ijkh", dQt)
                 + np.einsum("jkl,ilh->ijkh", Q, Qt) + np.einsum("jkl,lih->ijkh", Qt, P)
                 - np.einsum("ikl,jlh->ijkh", Q, Qt) - np.einsum("ikl,ljh->ijkh", Qt, P))
    E["PPPP"] = (dQ - np.einsum("jikh->ijkh", dQ)
                 + np.einsum("jkl,ilh->ijkh", Q, Q) + np.einsum("jkl,lih->ijkh", Qt, Pt)
                 - np.einsum("ikl,jlh->ijkh", Q, Q) - np.einsum("ikl,ljh->ijkh", Qt, Pt))
    E["PQQQ"] = (dSt + np.einsum("jkl,ilh->ijkh", S, Qt)
                 + np.einsum("jkl,lih->ijkh", St, P) - np.einsum("kil,jlh->ijkh", Pt, P)
                 - np.einsum("kil,jlh->ijkh", P, St))
    E["PQQP"] = (dS + np.einsum("jkl,lih->ijkh", St, Pt)
                 + np.einsum("jkl,ilh->ijkh", S, Q) - np.einsum("kil,jlh->ijkh", Pt, Pt)
                 - np.einsum("kil,jlh->ijkh", P, S))
    E["PQPQ"] = (dP + np.einsum("jkl,ilh->ijkh", Pt, Qt)
                 + np.einsum("jkl,lih->ijkh", P, P) - np.einsum("ikl,jlh->ijkh", Q, P)
                 - np.einsum("ikl,jlh->ijkh", Qt, St))
    E["PQPP"] = (dPt + np.einsum("jkl,ilh->ijkh", Pt, Q)
                 + np.einsum("jkl,lih->ijkh", P, Pt) - np.einsum("ikl,jlh->ijkh", Q, Pt)
                 - np.einsum("ikl,jlh->ijkh", Qt, S))
    return CurvatureBlocks(**E)


def full_curvature(n: int, blocks: CurvatureBlocks) -> np.ndarray:
    """K[d, c, a, b] with K(E_a, E_b) E_c = K^d_{cab} E_d."""
    K = np.zeros((2 * n,) * 4)
    for name, (dv, cv, av, bv) in _PLACEMENT.items():
        sd = slice(n, 2 * n) if dv else slice(0, n)
        sc_ = slice(n, 2 * n) if cv else slice(0, n)
        sa = slice(n, 2 * n) if av else slice(0, n)
        sb = slice(n, 2 * n) if bv else slice(0, n)
        K[sd, sc_, sa, sb] = np.einsum("ijkh->hkij", getattr(blocks, name))
    # remaining (a vertical, b horizontal entries already set; the mirrored
    # a-horizontal, b-vertical family follows from antisymmetry in (a, b))
    K[:, :, :n, n:] = -np.transpose(K[:, :, n:, :n], (0, 1, 3, 2))
    return K


def bianchi_residual(K: np.ndarray) -> float:
    """max component of the cyclic sum K(X,Y)Z + K(Y,Z)X + K(Z,X)Y."""
    B = K + np.einsum("dabc->dcab", K) + np.einsum("dbca->dcab", K)
    return float(np.abs(B).max())


def curvature_oracle(sf, family: CoefficientFamily, x, p,
                     h_outer: float = 5e-4, h_inner: float = STEP) -> CurvatureBlocks:
    """Curvature recomputed in the induced chart by two nested rounds of
    finite differences (chart Christoffels from the metric, then their
    derivatives), converted to adapted-frame blocks at the end.

    The outer step is smaller than the inner one: coefficient profiles
    with poles just outside the sampling window make the truncation term
    the dominant error, and the nested first round leaves the outer
    difference plenty of clean digits to work with."""
    n = sf.n
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])

    def Gf(z):
        ptz = CotangentPoint(sf, z[:n], z[n:])
        return chart_bilinear(ptz, assemble_G(ptz, family.at(ptz.t)))

    def gamf(z):
        G = Gf(z)
        Gi = np.linalg.inv(G)
        dG = grad(Gf, z, h=h_inner)
        return 0.5 * np.einsum("DL,BLC->DBC", Gi,
                               dG + np.einsum("clb->blc", dG)
                               - np.einsum("lbc->blc", dG))

    gm = gamf(z0)
    dgm = grad(gamf, z0, h=h_outer)
    Rch = (np.einsum("aDbc->Dcab", dgm) - np.einsum("bDac->Dcab", dgm)
           + np.einsum("Dal,lbc->Dcab", gm, gm)
           - np.einsum("Dbl,lac->Dcab", gm, gm))
    pt = CotangentPoint(sf, x, p)
    F, Fi = frame_matrix(pt), frame_matrix_inverse(pt)
    Kad = np.einsum("dD,DCAB,Cc,Aa,Bb->dcab", Fi, Rch, F, F, F)
    out = {}
    for name, (dv, cv, av, bv) in _PLACEMENT.items():
        sd = slice(n, 2 * n) if dv else slice(0, n)
        sc_ = slice(n, 2 * n) if cv else slice(0, n)
        sa = slice(n, 2 * n) if av else slice(0, n)
        sb = slice(n, 2 * n) if bv else slice(0, n)
        out[name] = np.einsum("hkij->ijkh", Kad[sd, sc_, sa, sb])
    return CurvatureBlocks(**out)


@dataclass
class RicciBlocks:
    RicQQ: np.ndarray   # horizontal-horizontal, covariant
    RicPP: np.ndarray   # vertical-vertical, contravariant
    RicQP: np.ndarray   # mixed

    def full(self) -> np.ndarray:
        n = self.RicQQ.shape[0]
        Ric = np.zeros((2 * n, 2 * n))
        Ric[:n, :n] = self.RicQQ
        Ric[n:, n:] = self.RicPP
        Ric[:n, n:] = self.RicQP
        Ric[n:, :n] = self.RicQP.T
        return Ric


def ricci_blocks(blocks: CurvatureBlocks) -> RicciBlocks:
    """Trace over the frame argument; the mixed block uses the identity
    RicQP = RicPQ, so only one of the two is materialized."""
    RicQQ = (np.einsum("hjkh->jk", blocks.QQQQ)
             + np.einsum("hjkh->jk", blocks.PQQP))
    RicPP = (np.einsum("hjkh->jk", blocks.PPPP)
             - np.einsum("jhkh->jk", blocks.PQPQ))
    RicQP = (np.einsum("hjkh->jk", blocks.PQPP)
             + np.einsum("hjkh->jk", blocks.QQPQ))
    return RicciBlocks(RicQQ=RicQQ, RicPP=RicPP, RicQP=RicQP)


@dataclass
class EinsteinDiagnostics:
    """Blockwise residuals of Ric = rho G plus the two-pattern least-squares
    decomposition of each residual (metric pattern, p-bilinear pattern)."""

    residual_hh: np.ndarray
    residual_vv: np.ndarray
    residual_hv: np.ndarray
    max_residual: float
    decomposition: Dict[str, Tuple[float, float]]


def _two_pattern_fit(res, pat_metric, pat_p, p_norm_sq):
    """Least-squares coefficients (u, v) with res ~ u*pat_metric + v*pat_p.
    Below the conditioning guard the p-pattern is numerically invisible and
    only u is fitted."""
    b = res.ravel()
    if p_norm_sq < 1e-4:
        col = pat_metric.ravel()
        return float(col @ b / (col @ col)), 0.0
    A = np.stack([pat_metric.ravel(), pat_p.ravel()], axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return float(sol[0]), float(sol[1])


def einstein_residual(pt: CotangentPoint, cs: CoefficientSet,
                      rho: float) -> EinsteinDiagnostics:
    blocks = curvature_blocks(pt, cs)
    Ric = ricci_blocks(blocks)
    G = assemble_G(pt, cs)
    res_hh = Ric.RicQQ - rho * G.hh
    res_vv = Ric.RicPP - rho * G.vv
    res_hv = Ric.RicQP - rho * G.hv
    n = pt.n
    pns = float(pt.p @ pt.p)
    decomposition = {
        "hh": _two_pattern_fit(res_hh, pt.g, np.outer(pt.p, pt.p), pns),
        "vv": _two_pattern_fit(res_vv, pt.gi, np.outer(pt.g0, pt.g0), pns),
        "hv": _two_pattern_fit(res_hv, np.eye(n), np.outer(pt.p, pt.g0), pns),
    }
    mx = max(float(np.abs(r).max()) for r in (res_hh, res_vv, res_hv))
    return EinsteinDiagnostics(residual_hh=res_hh, residual_vv=res_vv,
                               residual_hv=res_hv, max_residual=mx,
                               decomposition=decomposition)


def holomorphic_sectional_curvature(pt: CotangentPoint, cs: CoefficientSet,
                                    X) -> float:
    """k(X) = G(K(X, JX) JX, X) / G(X, X)^2 in adapted components. For a
    Hermitian (G, J) the plane {X, JX} has G-orthogonal legs of equal norm,
    so G(X,X)^2 is the right normalization."""
    X = np.asarray(X, dtype=float)
    K = full_curvature(pt.n, curvature_blocks(pt, cs))
    G = assemble_G(pt, cs).full()
    J = assemble_J(pt, cs).full()
    nrm = float(X @ G @ X)
    if nrm <= 0.0:
        raise ValueError("X must have positive G-norm")
    Y = J @ X
    W = np.einsum("dcab,c,a,b->d", K, Y, X, Y)
    return float(W @ G @ X) / nrm ** 2


def case_equations_residual(cs: CoefficientSet):
    """Residuals of the two scalar Einstein equations at cs.t, each with a
    magnitude scale for relative comparison.

    Returns ((raw1, scale1), (raw2, scale2)). The first is the linear
    relation in lambda' solved by lambda_case1; the second is the
    homogeneous quadratic T2 lambda'^2 + T1 lambda lambda' + T0 lambda^2
    solved by lambda_case2. Scales are sums of absolute term magnitudes
    plus a lambda'-free floor, so a residual tiny relative to its scale
    means the equation is satisfied.
    """
    t, c = cs.t, cs.base_c
    a1, a1p = cs.a1.v0, cs.a1.v1
    a3, a3p = cs.a3.v0, cs.a3.v1
    lam, lamp = cs.lam.v0, cs.lam.v1

    terms1 = (
        a1 ** 2 * a1p * lam,
        2 * a1 * c * lam,
        2 * a1 * a3 ** 2 * c * lam,
        a1 ** 3 * lamp,
        -2 * a1p * c * lam * t,
        -2 * a1p * a3 ** 2 * c * lam * t,
        4 * a1 * a3 * a3p * c * lam * t,
        2 * a1 * c * lamp * t,
        2 * a1 * a3 ** 2 * c * lamp * t,
    )
    raw1 = sum(terms1)
    scale1 = sum(abs(x) for x in terms1) + abs(a1 ** 3 * lam)

    Qt_ = (a1 ** 4 - 4 * a1 ** 2 * c * t + 4 * a1 ** 2 * a3 ** 2 * c * t
           + 4 * c ** 2 * t ** 2 + 8 * a3 ** 2 * c ** 2 * t ** 2
           + 4 * a3 ** 4 * c ** 2 * t ** 2)
    T2 = a1 ** 2 * t * Qt_
    T1 = a1 ** 2 * Qt_
    T0 = (a1 ** 5 * a1p + 2 * a1 ** 4 * a3 ** 2 * c - a1 ** 4 * a1p ** 2 * t
          - 4 * a1 ** 3 * a1p * c * t - 4 * a1 ** 3 * a1p * a3 ** 2 * c * t
          + 4 * a1 ** 4 * a3 * a3p * c * t
          + 4 * a1 ** 2 * a1p ** 2 * c * t ** 2
          + 4 * a1 ** 2 * a1p ** 2 * a3 ** 2 * c * t ** 2
          - 8 * a1 ** 3 * a1p * a3 * a3p * c * t ** 2
          + 4 * a1 * a1p * c ** 2 * t ** 2
          + 8 * a1 * a1p * a3 ** 2 * c ** 2 * t ** 2
          + 4 * a1 * a1p * a3 ** 4 * c ** 2 * t ** 2
          - 8 * a1 ** 2 * a3 * a3p * c ** 2 * t ** 2
          - 8 * a1 ** 2 * a3 ** 3 * a3p * c ** 2 * t ** 2
          - 4 * a1p ** 2 * c ** 2 * t ** 3
          - 8 * a1p ** 2 * a3 ** 2 * c ** 2 * t ** 3
          - 4 * a1p ** 2 * a3 ** 4 * c ** 2 * t ** 3
          + 16 * a1 * a1p * a3 * a3p * c ** 2 * t ** 3
          + 16 * a1 * a1p * a3 ** 3 * a3p * c ** 2 * t ** 3
          - 16 * a1 ** 2 * a3 ** 2 * a3p ** 2 * c ** 2 * t ** 3)
    terms2 = (T2 * lamp ** 2, T1 * lam * lamp, T0 * lam ** 2)
    raw2 = sum(terms2)
    scale2 = sum(abs(x) for x in terms2) + abs(T1) * lam ** 2
    return (raw1, scale1), (raw2, scale2)
