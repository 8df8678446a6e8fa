"""Closed-form Levi-Civita connection of the lifted metric.

The connection of G splits into six block tensors in the adapted frame
(nabla of horizontal/vertical along horizontal/vertical). Each block is a
rational combination of the scalars, the base metric, p, g0 and the
curvature contraction r0; together with the base Christoffels they assemble
into the full 2n x 2n x 2n connection.

Every block is computed in forward-mode arithmetic over the fibre variables
(``PDual``): values and exact vertical derivatives come out of one pass, so
downstream curvature never touches a difference quotient. The t-dependence
of the scalars rides along through their jets; the chain rule closes because
dt/dp_z = g0^z.

The finite-difference Koszul oracle at the bottom recomputes the connection
from nothing but chart derivatives of the metric components and is the
independent reference the closed form is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bundle_structures import (
    CotangentPoint,
    assemble_G,
    chart_bilinear,
    frame_matrix,
    frame_matrix_inverse,
)
from .coefficients import CoefficientFamily, CoefficientSet
from .fd import STEP, directional_d1, grad
from .jets import Jet3

__all__ = [
    "PDual",
    "pd_einsum",
    "ConnectionBlocks",
    "ConnectionJet",
    "connection_with_derivatives",
    "full_connection",
    "koszul_connection_oracle",
    "metricity_residual",
    "torsion_residual",
]

_DERIV_LETTER = "z"   # reserved for the derivative axis in pd_einsum


class PDual:
    """A tensor with its exact gradient along the p-directions.

    val has some shape S; dp has shape (n,) + S with the derivative axis
    first, matching the stacking convention of fd.grad.
    """

    __slots__ = ("val", "dp")

    def __init__(self, val, dp):
        self.val = np.asarray(val, dtype=float)
        self.dp = np.asarray(dp, dtype=float)
        if self.dp.shape[1:] != self.val.shape:
            raise ValueError(
                f"dp shape {self.dp.shape} does not extend val shape {self.val.shape}")

    def __add__(self, other):
        if isinstance(other, PDual):
            return PDual(self.val + other.val, self.dp + other.dp)
        return PDual(self.val + other, self.dp)

    __radd__ = __add__

    def __neg__(self):
        return PDual(-self.val, -self.dp)

    def __sub__(self, other):
        return self + (-other if isinstance(other, PDual) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        if not np.isscalar(k):
            raise TypeError("PDual only multiplies by scalars; use pd_einsum")
        return PDual(k * self.val, k * self.dp)

    __rmul__ = __mul__

    def t(self, sub: str) -> "PDual":
        """Transpose val by an einsum pattern like 'ijk->kij'; dp follows
        with the derivative axis pinned in front."""
        src, dst = sub.split("->")
        return PDual(np.einsum(sub, self.val),
                     np.einsum(f"{_DERIV_LETTER}{src}->{_DERIV_LETTER}{dst}", self.dp))


def pd_einsum(subs: str, *ops):
    """einsum over a mix of PDual and plain arrays, with the product rule.

    Plain operands are constants in p. Scalars enter with an empty
    subscript, e.g. pd_einsum(',ij->ij', s, M). The letter 'z' is reserved.
    """
    if _DERIV_LETTER in subs:
        raise ValueError(f"subscript letter {_DERIV_LETTER!r} is reserved")
    in_part, out = subs.split("->")
    in_subs = in_part.split(",")
    vals = [op.val if isinstance(op, PDual) else np.asarray(op, float) for op in ops]
    val = np.einsum(subs, *vals)
    dp = None
    for k, op in enumerate(ops):
        if not isinstance(op, PDual):
            continue
        terms = list(in_subs)
        terms[k] = _DERIV_LETTER + terms[k]
        args = list(vals)
        args[k] = op.dp
        contrib = np.einsum(",".join(terms) + "->" + _DERIV_LETTER + out, *args)
        dp = contrib if dp is None else dp + contrib
    if dp is None:
        return val   # no PDual among the operands
    return PDual(val, dp)


def _sc(jet: Jet3, g0: np.ndarray, order: int = 0) -> PDual:
    """A scalar jet as a PDual: the k-th t-derivative with its p-gradient
    (k+1-th derivative times g0)."""
    vals = jet.as_tuple()
    return PDual(np.float64(vals[order]), vals[order + 1] * g0)


@dataclass
class ConnectionBlocks:
    """The six adapted-frame blocks.

    Index conventions: Q[i,j,h] = Q^ij_h, Qt[i,j,h] = Qt^ijh,
    P[j,i,h] = P_j^ih, Pt[j,i,h] = Pt_j^i_h, S[i,j,h] = S_ijh,
    St[i,j,h] = St_ij^h.
    """

    Q: np.ndarray
    Qt: np.ndarray
    P: np.ndarray
    Pt: np.ndarray
    S: np.ndarray
    St: np.ndarray

    def as_list(self):
        return [self.Q, self.Qt, self.P, self.Pt, self.S, self.St]


@dataclass
class ConnectionJet:
    """Blocks plus their exact vertical derivatives; d.Q[m] is the
    derivative of Q along p_m, and so on."""

    blocks: ConnectionBlocks
    d: ConnectionBlocks


def _pd_blocks(pt: CotangentPoint, cs: CoefficientSet):
    """The six connection blocks as PDual tensors."""
    n = pt.n
    I = np.eye(n)
    g, gi = pt.g, pt.gi
    P_ = PDual(pt.p, I)                      # dp_i/dp_z = delta
    G0 = PDual(pt.g0, gi)                    # dg0^i/dp_z = g^zi
    R0 = PDual(pt.r0, pt.R)                  # d(p_h R^h_lij)/dp_z = R^z_lij
    s = lambda jet, k=0: _sc(jet, pt.g0, k)

    # metric blocks (1 = horizontal covariant, 2 = vertical contravariant,
    # 3 = mixed) and inverse blocks with the numbering the formulas use
    G2 = (pd_einsum(",jk->jk", s(cs.c2), gi)
          + pd_einsum(",j,k->jk", s(cs.d2), G0, G0))
    H1 = (pd_einsum(",jk->jk", s(cs.e1), gi)
          + pd_einsum(",j,k->jk", s(cs.f1), G0, G0))
    H2 = (pd_einsum(",jk->jk", s(cs.e2), g)
          + pd_einsum(",j,k->jk", s(cs.f2), P_, P_))
    H3 = (pd_einsum(",jk->jk", s(cs.e3), I)
          + pd_einsum(",j,k->jk", s(cs.f3), G0, P_))

    # first vertical derivatives of the metric blocks, themselves carried as
    # PDuals so the connection blocks inherit exact second derivatives
    dG1 = (pd_einsum(",m,jk->mjk", s(cs.c1, 1), G0, g)
           + pd_einsum(",m,j,k->mjk", s(cs.d1, 1), G0, P_, P_)
           + pd_einsum(",mj,k->mjk", s(cs.d1), I, P_)
           + pd_einsum(",j,mk->mjk", s(cs.d1), P_, I))
    dG2 = (pd_einsum(",m,jk->mjk", s(cs.c2, 1), G0, gi)
           + pd_einsum(",m,j,k->mjk", s(cs.d2, 1), G0, G0, G0)
           + pd_einsum(",mj,k->mjk", s(cs.d2), gi, G0)
           + pd_einsum(",j,mk->mjk", s(cs.d2), G0, gi))
    dG3 = (pd_einsum(",m,jk->mjk", s(cs.c3, 1), G0, I)
           + pd_einsum(",m,j,k->mjk", s(cs.d3, 1), G0, G0, P_)
           + pd_einsum(",mj,k->mjk", s(cs.d3), gi, P_)
           + pd_einsum(",j,mk->mjk", s(cs.d3), G0, I))

    T1 = dG2 + dG2.t("jik->ijk") - dG2.t("kij->ijk")
    T2 = dG3 + dG3.t("jik->ijk")
    Q = (0.5 * pd_einsum("ijk,kh->ijh", T1, H2)
         + 0.5 * pd_einsum("ijk,kh->ijh", T2, H3))
    Qt = (0.5 * pd_einsum("ijk,hk->ijh", T1, H3)
          + 0.5 * pd_einsum("ijk,kh->ijh", T2, H1))

    V = dG3 - dG3.t("kij->ikj")
    W = dG1 - pd_einsum("ljk,li->ijk", R0, G2)
    P = (0.5 * pd_einsum("ikj,hk->jih", V, H3)
         + 0.5 * pd_einsum("ijk,kh->jih", W, H1))
    Pt = (0.5 * pd_einsum("ikj,kh->jih", V, H2)
          + 0.5 * pd_einsum("ijk,kh->jih", W, H3))

    X = pd_einsum(",kl,lij->kij", s(cs.c2), gi, R0) - dG1
    S = (0.5 * pd_einsum("kij,kh->ijh", X, H2)
         - pd_einsum(",ijk,kh->ijh", s(cs.c3), R0, H3))
    St = (0.5 * pd_einsum("kij,hk->ijh", X, H3)
          - pd_einsum(",ijk,kh->ijh", s(cs.c3), R0, H1))
    return Q, Qt, P, Pt, S, St


def connection_with_derivatives(pt: CotangentPoint, cs: CoefficientSet) -> ConnectionJet:
    pd = _pd_blocks(pt, cs)
    return ConnectionJet(
        blocks=ConnectionBlocks(*[b.val for b in pd]),
        d=ConnectionBlocks(*[b.dp for b in pd]),
    )


_FLIPPABLE = (None, "S", "P", "Q")


def full_connection(pt: CotangentPoint, cs: CoefficientSet,
                    flip_block: Optional[str] = None) -> np.ndarray:
    """C[d, a, b]: adapted components of nabla_{E_a} E_b including the base
    Christoffel terms. flip_block negates one block pair ("S", "P" or "Q"),
    which the torsion/metricity controls use to prove the checks can fail.
    """
    if flip_block not in _FLIPPABLE:
        raise ValueError(f"flip_block must be one of {_FLIPPABLE}")
    n = pt.n
    B = connection_with_derivatives(pt, cs).blocks
    Q, Qt, P, Pt, S, St = B.Q, B.Qt, B.P, B.Pt, B.S, B.St
    if flip_block == "S":
        S, St = -S, -St
    elif flip_block == "P":
        P, Pt = -P, -Pt
    elif flip_block == "Q":
        Q, Qt = -Q, -Qt
    gm = pt.gam
    C = np.zeros((2 * n,) * 3)
    C[:n, :n, :n] = gm + np.einsum("ijh->hij", St)
    C[n:, :n, :n] = np.einsum("ijh->hij", S)
    C[:n, :n, n:] = np.einsum("ijh->hij", P)
    C[n:, :n, n:] = -np.einsum("jih->hij", gm) + np.einsum("ijh->hij", Pt)
    C[:n, n:, :n] = np.einsum("jih->hij", P)
    C[n:, n:, :n] = np.einsum("jih->hij", Pt)
    C[n:, n:, n:] = np.einsum("ijh->hij", Q)
    C[:n, n:, n:] = np.einsum("ijh->hij", Qt)
    return C


# ------------------------------------------------------------------
# independent oracle and invariant checks, all built on chart FD

def _chart_metric_field(sf, family: CoefficientFamily):
    n = sf.n

    def Gf(z):
        pt = CotangentPoint(sf, z[:n], z[n:])
        return chart_bilinear(pt, assemble_G(pt, family.at(pt.t)))

    return Gf


def koszul_connection_oracle(sf, family: CoefficientFamily, x, p,
                             h: float = STEP) -> np.ndarray:
    """The adapted-frame connection recomputed from chart derivatives of the
    chart metric via the Koszul formula, then pushed through the frame.
    Shares no algebra with the closed form beyond pointwise evaluation."""
    n = sf.n
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])
    Gf = _chart_metric_field(sf, family)

    G = Gf(z0)
    Gi = np.linalg.inv(G)
    dG = grad(Gf, z0, h=h)
    Gam = 0.5 * np.einsum("DL,BLC->DBC", Gi,
                          dG + np.einsum("clb->blc", dG) - np.einsum("lbc->blc", dG))

    def Ff(z):
        return frame_matrix(CotangentPoint(sf, z[:n], z[n:]))

    dF = grad(Ff, z0, h=h)
    pt = CotangentPoint(sf, x, p)
    F, Fi = frame_matrix(pt), frame_matrix_inverse(pt)
    cov = (np.einsum("Ba,BDb->Dab", F, dF)
           + np.einsum("Ba,Cb,DBC->Dab", F, F, Gam))
    return np.einsum("dD,Dab->dab", Fi, cov)


def metricity_residual(sf, family: CoefficientFamily, x, p,
                       h: float = STEP, flip_block: Optional[str] = None) -> float:
    """max |nabla G| over frame triples: frame-directional derivatives of
    the adapted metric components minus the two connection contractions."""
    n = sf.n
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])
    pt = CotangentPoint(sf, x, p)
    C = full_connection(pt, family.at(pt.t), flip_block=flip_block)

    def Gad(z):
        ptz = CotangentPoint(sf, z[:n], z[n:])
        return assemble_G(ptz, family.at(ptz.t)).full()

    G0 = Gad(z0)
    F = frame_matrix(pt)
    worst = 0.0
    for a in range(2 * n):
        dG_a = directional_d1(Gad, z0, F[:, a], h=h)
        res = (dG_a - np.einsum("db,dc->bc", C[:, a, :], G0)
               - np.einsum("dc,bd->bc", C[:, a, :], G0))
        worst = max(worst, float(np.abs(res).max()))
    return worst


def torsion_residual(sf, family: CoefficientFamily, x, p,
                     h: float = STEP, flip_block: Optional[str] = None) -> float:
    """max |C[:,a,b] - C[:,b,a] - [E_a, E_b]| in adapted components."""
    n = sf.n
    z0 = np.concatenate([np.asarray(x, float), np.asarray(p, float)])
    pt = CotangentPoint(sf, x, p)
    C = full_connection(pt, family.at(pt.t), flip_block=flip_block)
    Fi = frame_matrix_inverse(pt)

    def field(a):
        def U(z):
            return frame_matrix(CotangentPoint(sf, z[:n], z[n:]))[:, a]
        return U

    worst = 0.0
    for a in range(2 * n):
        Ua = field(a)
        DUa = grad(Ua, z0, h=h)
        for b in range(a + 1, 2 * n):
            Ub = field(b)
            DUb = grad(Ub, z0, h=h)
            bracket = DUb.T @ Ua(z0) - DUa.T @ Ub(z0)
            res = C[:, a, b] - C[:, b, a] - Fi @ bracket
            worst = max(worst, float(np.abs(res).max()))
    return worst
