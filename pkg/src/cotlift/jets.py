"""Order-3 truncated Taylor arithmetic in a single scalar variable.

A ``Jet3`` bundles a function value with its first three derivatives with
respect to the energy density t and propagates them exactly through +, -, *,
/, sqrt and integer powers. Order 3 is enough for everything downstream: the
third derivative of the conformal factor lambda is the deepest derivative any
formula consumes.

``FamilySpec`` is a closed, serializable expression grammar (prefix form) for
the coefficient functions a1(t), a3(t), lambda(t), so presets and config
files can carry them as plain text instead of Python callables.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EvaluationError

__all__ = ["Jet3", "FamilySpec", "jet_var", "jet_const"]


def _coerce(x):
    if isinstance(x, Jet3):
        return x
    if isinstance(x, (int, float)):
        return Jet3(float(x))
    return NotImplemented


@dataclass(frozen=True)
class Jet3:
    """Value and d/dt, d2/dt2, d3/dt3 at a point.

    Constant jets have v1 = v2 = v3 = 0 exactly; arithmetic follows the
    Leibniz / Faa di Bruno rules truncated at order 3.
    """

    v0: float
    v1: float = 0.0
    v2: float = 0.0
    v3: float = 0.0

    def __add__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return Jet3(self.v0 + o.v0, self.v1 + o.v1, self.v2 + o.v2, self.v3 + o.v3)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.v0, -self.v1, -self.v2, -self.v3)

    def __sub__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __mul__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        a, b = self, o
        return Jet3(
            a.v0 * b.v0,
            a.v1 * b.v0 + a.v0 * b.v1,
            a.v2 * b.v0 + 2.0 * a.v1 * b.v1 + a.v0 * b.v2,
            a.v3 * b.v0 + 3.0 * a.v2 * b.v1 + 3.0 * a.v1 * b.v2 + a.v0 * b.v3,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        a, b = self, o
        if b.v0 == 0.0:
            raise EvaluationError("division by a jet with zero value")
        c0 = a.v0 / b.v0
        c1 = (a.v1 - c0 * b.v1) / b.v0
        c2 = (a.v2 - c0 * b.v2 - 2.0 * c1 * b.v1) / b.v0
        c3 = (a.v3 - c0 * b.v3 - 3.0 * c1 * b.v2 - 3.0 * c2 * b.v1) / b.v0
        return Jet3(c0, c1, c2, c3)

    def __rtruediv__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return Jet3(1.0) / self ** (-k)
        out = Jet3(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sqrt(self) -> "Jet3":
        if self.v0 <= 0.0:
            raise EvaluationError("sqrt of a jet with non-positive value")
        r0 = math.sqrt(self.v0)
        r1 = self.v1 / (2.0 * r0)
        r2 = (self.v2 - 2.0 * r1 * r1) / (2.0 * r0)
        r3 = (self.v3 - 6.0 * r1 * r2) / (2.0 * r0)
        return Jet3(r0, r1, r2, r3)

    def d_dt(self) -> "Jet3":
        """Jet of the derivative function.

        The top slot is zero-filled (the fourth derivative of the original is
        unknown at order 3), so the result is exact only through v2. Callers
        that consume v3 of a derived jet must obtain it another way.
        """
        return Jet3(self.v1, self.v2, self.v3, 0.0)

    def as_tuple(self):
        return (self.v0, self.v1, self.v2, self.v3)


def jet_const(v: float) -> Jet3:
    return Jet3(float(v))


def jet_var(t: float) -> Jet3:
    """The identity function t -> t as a jet at t."""
    return Jet3(float(t), 1.0)


# --------------------------------------------------------------------------
# family grammar
#
# expr := NUMBER | t | (poly c0 c1 ...) | (OP expr expr) | (sqrt expr)
#         | (pow expr INT)
# with OP in + - * /.  + and * fold left over 2 or more arguments.

_TOKEN = re.compile(r"\(|\)|[^\s()]+")

_BINARY = {"+", "-", "*", "/"}


def _tokenize(text: str):
    return _TOKEN.findall(text)


def _parse_tokens(toks, pos):
    if pos >= len(toks):
        raise ValueError("unexpected end of family expression")
    tok = toks[pos]
    if tok == "(":
        if pos + 1 >= len(toks):
            raise ValueError("dangling '(' in family expression")
        head = toks[pos + 1]
        pos += 2
        if head == "poly":
            coeffs = []
            while pos < len(toks) and toks[pos] != ")":
                coeffs.append(_parse_number(toks[pos]))
                pos += 1
            if not coeffs:
                raise ValueError("(poly ...) needs at least one coefficient")
            node = ("poly", tuple(coeffs))
        elif head in _BINARY:
            args = []
            while pos < len(toks) and toks[pos] != ")":
                sub, pos = _parse_tokens(toks, pos)
                args.append(sub)
            if len(args) < 2:
                raise ValueError(f"operator '{head}' needs at least two arguments")
            if head in ("-", "/") and len(args) != 2:
                raise ValueError(f"operator '{head}' is strictly binary")
            node = args[0]
            for a in args[1:]:
                node = ({"+": "add", "-": "sub", "*": "mul", "/": "div"}[head], node, a)
        elif head == "sqrt":
            sub, pos = _parse_tokens(toks, pos)
            node = ("sqrt", sub)
        elif head == "pow":
            sub, pos = _parse_tokens(toks, pos)
            if pos >= len(toks) or toks[pos] == ")":
                raise ValueError("(pow expr k) needs an integer exponent")
            k = toks[pos]
            try:
                exp = int(k)
            except ValueError as exc:
                raise ValueError(f"pow exponent must be an integer, got {k!r}") from exc
            pos += 1
            node = ("pow", sub, exp)
        else:
            raise ValueError(f"unknown family operator {head!r}")
        if pos >= len(toks) or toks[pos] != ")":
            raise ValueError(f"missing ')' after ({head} ...)")
        return node, pos + 1
    if tok == ")":
        raise ValueError("unbalanced ')' in family expression")
    if tok == "t":
        return ("t",), pos + 1
    return ("const", _parse_number(tok)), pos + 1


def _parse_number(tok: str) -> float:
    try:
        return float(tok)
    except ValueError as exc:
        raise ValueError(f"expected a number, got {tok!r}") from exc


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _to_text(node) -> str:
    kind = node[0]
    if kind == "const":
        return _fmt_num(node[1])
    if kind == "t":
        return "t"
    if kind == "poly":
        return "(poly " + " ".join(_fmt_num(c) for c in node[1]) + ")"
    if kind == "sqrt":
        return f"(sqrt {_to_text(node[1])})"
    if kind == "pow":
        return f"(pow {_to_text(node[1])} {node[2]})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[kind]
    return f"({sym} {_to_text(node[1])} {_to_text(node[2])})"


def _eval_node(node, tj: Jet3) -> Jet3:
    kind = node[0]
    if kind == "const":
        return Jet3(node[1])
    if kind == "t":
        return tj
    if kind == "poly":
        # Horner in jet arithmetic
        acc = Jet3(0.0)
        for c in reversed(node[1]):
            acc = acc * tj + c
        return acc
    if kind == "sqrt":
        try:
            return _eval_node(node[1], tj).sqrt()
        except EvaluationError as exc:
            raise EvaluationError(str(exc), expr=_to_text(node)) from None
    if kind == "pow":
        try:
            return _eval_node(node[1], tj) ** node[2]
        except EvaluationError as exc:
            raise EvaluationError(str(exc), expr=_to_text(node)) from None
    left = _eval_node(node[1], tj)
    right = _eval_node(node[2], tj)
    if kind == "add":
        return left + right
    if kind == "sub":
        return left - right
    if kind == "mul":
        return left * right
    # division: report which subtree blew up
    if right.v0 == 0.0:
        raise EvaluationError("denominator vanished", expr=_to_text(node))
    return left / right


class FamilySpec:
    """A scalar function of t in a closed grammar: constants, t, polynomials,
    +, -, *, /, sqrt, integer powers.

    The textual prefix form round-trips through ``parse``/``str`` and is what
    scenario files store. Evaluation returns a full Jet3 so derivatives come
    out exact.

        >>> f = FamilySpec.parse("(/ 1 (poly 1 2))")
        >>> f.eval(0.0).as_tuple()
        (1.0, -2.0, 8.0, -48.0)
    """

    __slots__ = ("node",)

    def __init__(self, node):
        self.node = node

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        toks = _tokenize(text)
        if not toks:
            raise ValueError("empty family expression")
        node, pos = _parse_tokens(toks, 0)
        if pos != len(toks):
            raise ValueError(f"trailing tokens after family expression: {' '.join(toks[pos:])}")
        return cls(node)

    @classmethod
    def const(cls, v: float) -> "FamilySpec":
        return cls(("const", float(v)))

    @classmethod
    def poly(cls, *coeffs: float) -> "FamilySpec":
        """c0 + c1 t + c2 t^2 + ..."""
        if not coeffs:
            raise ValueError("poly needs at least one coefficient")
        return cls(("poly", tuple(float(c) for c in coeffs)))

    def eval(self, t: float) -> Jet3:
        return _eval_node(self.node, jet_var(t))

    def __str__(self) -> str:
        return _to_text(self.node)

    def __repr__(self) -> str:
        return f"FamilySpec({_to_text(self.node)!r})"

    def __eq__(self, other):
        return isinstance(other, FamilySpec) and self.node == other.node

    def __hash__(self):
        return hash(self.node)
