"""Text format for operator systems.

Grammar::

    system   := decl* equation+
    decl     := ("dims" | "components") INT ";"
    equation := term (("+" | "-") term)* "=" "0" [";"]
    term     := ["-"] [coef ["*"]] "D[" INT ("," INT)* "]" "u" INT
    coef     := "(" poly ")" | NUMBER
    poly     := signed sum of monomials in x1..xd, e.g. (3/2*x1^2*x2 - 1)

Whitespace is insignificant and ``#`` starts a comment running to end of line.
Repeated ``(alpha, component)`` pairs within an equation are summed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionError, ParseError
from .operators import MultiIndex, OperatorSystem, PolyCoefficient

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_]+)
  | (?P<op>[\[\],+\-*/^()=;])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src):
    toks = []
    pos = 0
    while pos < len(src):
        mt = _TOKEN_RE.match(src, pos)
        if mt is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos, src)
        kind = mt.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, mt.group(), pos))
        pos = mt.end()
    toks.append(_Tok("eof", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.pos, self.src)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def expect_int(self, what="integer"):
        tok = self.tok
        if tok.text == "-":
            self.i += 1
            if self.tok.kind == "num":
                raise self.error(f"negative exponent not allowed in {what}", tok)
        if tok.kind != "num" or "." in tok.text:
            raise self.error(f"expected {what}")
        self.i += 1
        return int(tok.text)

    # grammar
    def parse(self):
        decl_dims = decl_comps = None
        while self.tok.text in ("dims", "components"):
            key = self.tok.text
            self.i += 1
            val = self.expect_int()
            self.expect(";")
            if key == "dims":
                decl_dims = val
            else:
                decl_comps = val
        equations = []
        while self.tok.kind != "eof":
            equations.append(self.equation())
        if not equations:
            raise self.error("no equations found")
        return decl_dims, decl_comps, equations

    def equation(self):
        terms = [self.term(sign=1)]
        while True:
            if self.accept("+"):
                terms.append(self.term(sign=1))
            elif self.accept("-"):
                terms.append(self.term(sign=-1))
            else:
                break
        self.expect("=")
        tok = self.tok
        if tok.text != "0":
            raise self.error("right-hand side must be 0")
        self.i += 1
        self.accept(";")
        return terms

    def term(self, sign):
        start = self.tok
        if self.accept("-"):
            sign = -sign
        coef = [((), Fraction(1), start.pos)]
        if self.tok.text == "(":
            self.i += 1
            coef = self.poly()
            self.expect(")")
            self.accept("*")
        elif self.tok.kind == "num":
            value = Fraction(self.tok.text)
            self.i += 1
            if self.accept("/"):
                value /= self.expect_int("denominator")
            coef = [((), value, start.pos)]
            self.accept("*")
        if self.tok.text != "D":
            raise self.error("expected derivative 'D[...]'")
        dtok = self.tok
        self.i += 1
        self.expect("[")
        exps = [self.expect_int("multi-index entry")]
        while self.accept(","):
            exps.append(self.expect_int("multi-index entry"))
        self.expect("]")
        if self.tok.text != "u":
            raise self.error("expected component 'u<k>'")
        self.i += 1
        utok = self.tok
        k = self.expect_int("component index")
        if k < 1:
            raise self.error("component indices start at u1", utok)
        coef = [(mono, sign * c, pos) for mono, c, pos in coef]
        return tuple(exps), k, coef, dtok, utok

    def poly(self):
        """Returns a list of (((var, exp), ...), coefficient, pos) monomials."""
        monos = []
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        monos.append(self.monomial(sign))
        while True:
            if self.accept("+"):
                monos.append(self.monomial(1))
            elif self.accept("-"):
                monos.append(self.monomial(-1))
            else:
                return monos

    def monomial(self, sign):
        pos = self.tok.pos
        coef = Fraction(sign)
        powers = []
        while True:
            tok = self.tok
            if tok.kind == "num":
                self.i += 1
                value = Fraction(tok.text)
                if self.accept("/"):
                    value /= self.expect_int("denominator")
                coef *= value
            elif tok.text == "x":
                self.i += 1
                var = self.expect_int("variable index")
                if var < 1:
                    raise self.error("variable indices start at x1", tok)
                exp = 1
                if self.accept("^"):
                    exp = self.expect_int("exponent")
                powers.append((var, exp, tok))
            else:
                raise self.error("expected number or variable in coefficient")
            if not self.accept("*"):
                break
        return tuple(powers), coef, pos


def parse_operator(source: str) -> OperatorSystem:
    """Parse DSL text into an :class:`OperatorSystem`.

    ``d`` is inferred from the multi-index length and ``m`` from the largest
    component index unless declared with ``dims``/``components``.
    """
    p = _Parser(source)
    decl_dims, decl_comps, raw = p.parse()

    d = decl_dims
    for terms in raw:
        for exps, _, _, dtok, _ in terms:
            if d is None:
                d = len(exps)
            elif len(exps) != d:
                raise ParseError(
                    f"dimension mismatch: multi-index of length {len(exps)}, expected {d}",
                    dtok.pos, source)
    max_comp = max(k for terms in raw for _, k, _, _, _ in terms)
    if decl_comps is not None:
        for terms in raw:
            for _, k, _, _, utok in terms:
                if k > decl_comps:
                    raise ParseError(f"undeclared component u{k} (components {decl_comps})",
                                     utok.pos, source)
        m = decl_comps
    else:
        m = max_comp

    equations = []
    for terms in raw:
        acc: dict[tuple[int, ...], list[PolyCoefficient]] = {}
        for exps, k, coef, _, _ in terms:
            monos = []
            for powers, c, pos in coef:
                e = [0] * d
                for var, exp, vtok in powers:
                    if var > d:
                        raise ParseError(f"dimension mismatch: x{var} used in R^{d}", vtok.pos, source)
                    e[var - 1] += exp
                monos.append((tuple(e), c))
            poly = PolyCoefficient(d, monos)
            row = acc.setdefault(exps, [PolyCoefficient.zero(d) for _ in range(m)])
            row[k - 1] = row[k - 1] + poly
        equations.append({MultiIndex(a): tuple(cs) for a, cs in acc.items()})
    try:
        return OperatorSystem(d, m, tuple(equations))
    except (ValueError, DimensionError) as exc:
        raise ParseError(str(exc)) from exc


def _format_fraction(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_poly(poly: PolyCoefficient) -> str:
    if poly.is_zero():
        return "0"
    parts = []
    for exps, c in sorted(poly.terms, key=lambda t: (-sum(t[0]), tuple(-e for e in t[0]))):
        factors = []
        mag = abs(c)
        if mag != 1 or sum(exps) == 0:
            factors.append(_format_fraction(mag))
        for i, e in enumerate(exps):
            if e == 1:
                factors.append(f"x{i + 1}")
            elif e > 1:
                factors.append(f"x{i + 1}^{e}")
        body = "*".join(factors)
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


def serialize_operator(op: OperatorSystem) -> str:
    """Render ``op`` in the DSL; ``parse_operator`` inverts this exactly."""
    lines = [f"dims {op.d};", f"components {op.m};"]
    for eq in op.equations:
        terms = []
        for alpha, coeffs in eq.items():
            deriv = "D[" + ",".join(str(e) for e in alpha.exponents) + "]"
            for k, c in enumerate(coeffs):
                if c.is_zero():
                    continue
                if c.is_constant() and c.terms[0][1] == 1:
                    terms.append(f"{deriv} u{k + 1}")
                else:
                    terms.append(f"({format_poly(c)}) * {deriv} u{k + 1}")
        lines.append(" + ".join(terms) + " = 0;")
    return "\n".join(lines) + "\n"
