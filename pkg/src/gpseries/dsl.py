"""Text format for functional equations and the surrounding run data.

An equation is written with explicit operators ``delta``, ``sigma`` and ``mu``
applied to ``y``::

    sigma^2(y) - q^(1+i)*sigma(y) + q^(2*(1+i))*(x^2 + y^2) = 0

A document adds line directives around one equation::

    param q = exp(2*pi*i*omega)      # overridable from the command line
    let r2 = 1 - r                   # derived constant
    lattice r, 1 - r                 # semigroup generators
    init (1,0) = 1                   # prescribed coefficient
    map 2*x + x^2                    # germ for conjugation tasks
    task certify depth=8             # what the corpus runner does
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from .equation import FunctionalEquation
from .errors import MixedOperators, ParseError, UnknownOperator, ValidationError
from .numbers import as_scalar, is_exact, is_zero, power, to_mpc
from .series import Differential, Mahler, MultiSeries, QDifference

GRAMMAR = r"""
    equation: sum "=" sum
    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub
    ?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div
    ?unary: power
        | "-" unary         -> neg
        | "+" unary
    ?power: atom
        | atom "^" exponent -> pow
    ?exponent: NUMBER       -> num
        | NAME              -> name
        | "(" sum ")"
    ?atom: NUMBER           -> num
        | NAME              -> name
        | NAME "(" sum ")"  -> call
        | OPNAME "(" sum ")"            -> apply
        | OPNAME "^" NUMBER "(" sum ")" -> apply
        | "(" sum ")"
    vector: "(" INT ("," INT)* ")"
    list: sum ("," sum)*

    OPNAME.2: /(delta|sigma|mu)(?![A-Za-z0-9_])/
    NUMBER: /\d+(\.\d+)?([eE][+-]?\d+)?i?/
    INT: /\d+/
    NAME: /[A-Za-z_][A-Za-z0-9_]*/
    %ignore /[ \t]+/
"""

_PARSER = Lark(GRAMMAR, start=["equation", "sum", "vector", "list"], parser="lalr", propagate_positions=True)

OPERATORS = ("delta", "sigma", "mu")
FUNCTIONS = {
    "sqrt": mpmath.sqrt,
    "exp": mpmath.exp,
    "log": mpmath.log,
    "cos": mpmath.cos,
    "sin": mpmath.sin,
}
DIRECTIVES = ("param", "let", "lattice", "init", "map", "task")


# ----------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Num:
    text: str
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Apply:
    op: str
    power: int
    arg: object
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object
    pos: tuple = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Equation:
    lhs: object
    rhs: object
    pos: tuple = field(default=(1, 1), compare=False)


def _pos(meta, line_offset=0, col_offset=0):
    if getattr(meta, "empty", True):
        return (1 + line_offset, 1 + col_offset)
    return (meta.line + line_offset, meta.column + col_offset)


class _Build(Transformer):
    def __init__(self, line_offset=0, col_offset=0):
        super().__init__()
        self.dl = line_offset
        self.dc = col_offset

    def _at(self, meta):
        return _pos(meta, self.dl, self.dc)

    @v_args(meta=True)
    def equation(self, meta, ch):
        return Equation(ch[0], ch[1], self._at(meta))

    @v_args(meta=True)
    def num(self, meta, ch):
        return Num(str(ch[0]), self._at(meta))

    @v_args(meta=True)
    def name(self, meta, ch):
        return Name(str(ch[0]), self._at(meta))

    @v_args(meta=True)
    def call(self, meta, ch):
        return Call(str(ch[0]), ch[1], self._at(meta))

    @v_args(meta=True)
    def apply(self, meta, ch):
        if len(ch) == 2:
            return Apply(str(ch[0]), 1, ch[1], self._at(meta))
        text = str(ch[1])
        if not text.isdigit():
            raise ParseError("operator powers must be non-negative integers", *self._at(meta))
        return Apply(str(ch[0]), int(text), ch[2], self._at(meta))

    @v_args(meta=True)
    def neg(self, meta, ch):
        return Neg(ch[0], self._at(meta))

    def _bin(op):
        @v_args(meta=True)
        def build(self, meta, ch):
            return Bin(op, ch[0], ch[1], self._at(meta))
        return build

    add, sub, mul, div = _bin("+"), _bin("-"), _bin("*"), _bin("/")

    @v_args(meta=True)
    def pow(self, meta, ch):
        return Pow(ch[0], ch[1], self._at(meta))

    def vector(self, ch):
        return tuple(int(t) for t in ch)

    def list(self, ch):
        return list(ch)


def _parse(text: str, start: str, line: int = 1, column: int = 1):
    try:
        tree = _PARSER.parse(text, start=start)
    except UnexpectedEOF:
        raise ParseError("unexpected end of input", line, column + len(text.rstrip())) from None
    except UnexpectedCharacters as exc:
        raise ParseError(f"unexpected character {text[exc.pos_in_stream]!r}", line + exc.line - 1,
                         column + exc.column - 1) from None
    except UnexpectedToken as exc:
        tok = exc.token
        if tok.type == "$END":
            raise ParseError("unexpected end of input", line, column + len(text.rstrip())) from None
        raise ParseError(f"unexpected {str(tok)!r}", line + tok.line - 1, column + tok.column - 1) from None
    except UnexpectedInput:
        raise ParseError("malformed input", line, column) from None
    result = _Build(line - 1, column - 1).transform(tree)
    if isinstance(result, Token):
        raise ParseError("malformed input", line, column)
    return result


def parse_expression(text: str, line: int = 1, column: int = 1):
    return _parse(text, "sum", line, column)


def parse_equation_ast(text: str, line: int = 1, column: int = 1) -> Equation:
    return _parse(text, "equation", line, column)


# ----------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def emit(node) -> str:
    """Text that parses back to ``node``."""
    if isinstance(node, Equation):
        return f"{emit(node.lhs)} = {emit(node.rhs)}"
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Call):
        return f"{node.fn}({emit(node.arg)})"
    if isinstance(node, Apply):
        head = node.op if node.power == 1 else f"{node.op}^{node.power}"
        return f"{head}({emit(node.arg)})"
    if isinstance(node, Neg):
        inner = emit(node.operand)
        return f"-({inner})" if isinstance(node.operand, Bin) else f"-{inner}"
    if isinstance(node, Pow):
        base = emit(node.base)
        if isinstance(node.base, (Bin, Neg, Pow)):
            base = f"({base})"
        ex = node.exponent
        exp_text = emit(ex) if isinstance(ex, Name) or (isinstance(ex, Num)) else f"({emit(ex)})"
        return f"{base}^{exp_text}"
    if isinstance(node, Bin):
        p = _PREC[node.op]
        left = emit(node.left)
        if isinstance(node.left, Bin) and _PREC[node.left.op] < p:
            left = f"({left})"
        right = emit(node.right)
        if isinstance(node.right, Bin) and _PREC[node.right.op] <= p:
            right = f"({right})"
        sep = f" {node.op} " if p == 1 else node.op
        return f"{left}{sep}{right}"
    raise TypeError(f"not a syntax node: {node!r}")


# ----------------------------------------------------------------------------
# evaluation


NAMED_CONSTANTS = {
    "pi": lambda: mpmath.pi * 1,
    "i": lambda: mpmath.mpc(0, 1),
    "sqrt2": lambda: mpmath.sqrt(2),
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
    "liouville": lambda: _liouville(),
}


def _liouville():
    """sum 10^(-k!) over every k whose term is visible at the working precision."""
    total, k = mpmath.mpf(0), 1
    floor = mpmath.mpf(2) ** (-2 * mpmath.mp.prec)
    while True:
        term = mpmath.mpf(10) ** (-mpmath.factorial(k))
        if term < floor:
            return total
        total += term
        k += 1


def _scalar(value):
    if isinstance(value, (Fraction, mpmath.mpc)):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return as_scalar(value)


def _number(text: str):
    if text.endswith("i"):
        return mpmath.mpc(0, mpmath.mpf(text[:-1]) if any(ch in text for ch in ".eE") else int(text[:-1]))
    return Fraction(text)


class _Scope:
    """Evaluates syntax trees to scalars or MultiSeries in (x, y_0, ..., y_n)."""

    def __init__(self, names: dict, nvars: int | None = None):
        self.names = names
        self.nvars = nvars

    def scalar(self, node):
        value = self.value(node)
        if isinstance(value, MultiSeries):
            raise ParseError("expected a constant, found an expression in x or y", *node.pos)
        return value

    def value(self, node):
        if isinstance(node, Num):
            return _number(node.text)
        if isinstance(node, Name):
            return self._name(node)
        if isinstance(node, Call):
            if node.fn in OPERATORS:
                raise ParseError(f"{node.fn} needs an argument", *node.pos)
            fn = FUNCTIONS.get(node.fn)
            if fn is None:
                raise UnknownOperator(f"unknown function or operator {node.fn!r}", *node.pos)
            return _scalar(mpmath.mpc(fn(to_mpc(self.scalar(node.arg)))))
        if isinstance(node, Apply):
            if not (isinstance(node.arg, Name) and node.arg.id == "y"):
                raise ParseError(f"{node.op} applies to y only", *node.pos)
            if self.nvars is None:
                raise ParseError("operators are not allowed here", *node.pos)
            return MultiSeries.variable(self.nvars, node.power + 1)
        if isinstance(node, Neg):
            return -self.value(node.operand)
        if isinstance(node, Bin):
            return self._binary(node)
        if isinstance(node, Pow):
            return self._power(node)
        raise ParseError("malformed expression", *getattr(node, "pos", (1, 1)))

    def _name(self, node):
        if node.id in ("x", "y"):
            if self.nvars is None:
                raise ParseError(f"{node.id} is not allowed here", *node.pos)
            return MultiSeries.variable(self.nvars, 0 if node.id == "x" else 1)
        if node.id in self.names:
            return self.names[node.id]
        if node.id in NAMED_CONSTANTS:
            return NAMED_CONSTANTS[node.id]()
        raise ParseError(f"unbound name {node.id!r}", *node.pos)

    def _binary(self, node):
        a, b = self.value(node.left), self.value(node.right)
        series_a, series_b = isinstance(a, MultiSeries), isinstance(b, MultiSeries)
        if node.op == "+":
            return a + b if series_a or not series_b else b + a
        if node.op == "-":
            return a - b if series_a or not series_b else (-b) + a
        if node.op == "*":
            return a * b if series_a or not series_b else b * a
        if series_b:
            raise ParseError("division by an expression in x or y", *node.right.pos)
        if is_zero(b):
            raise ParseError("division by zero", *node.right.pos)
        if is_exact(b):
            return a * (1 / Fraction(b))
        return a * (1 / to_mpc(b))

    def _power(self, node):
        base = self.value(node.base)
        ex = self.scalar(node.exponent)
        if isinstance(base, MultiSeries):
            if not (is_exact(ex) and Fraction(ex).denominator == 1 and ex >= 0):
                raise ParseError("x and y take non-negative integer powers only", *node.exponent.pos)
            return base ** int(ex)
        try:
            return power(base, ex)
        except (ZeroDivisionError, ValueError) as exc:
            raise ParseError(str(exc), *node.pos) from None


def _operators(node, found: list):
    if isinstance(node, Apply):
        found.append(node)
    if isinstance(node, Call) and node.fn not in FUNCTIONS:
        raise UnknownOperator(f"unknown function or operator {node.fn!r}", *node.pos)
    for child in (getattr(node, a, None) for a in ("lhs", "rhs", "left", "right", "operand", "base",
                                                    "exponent", "arg")):
        if child is not None and not isinstance(child, (str, int)):
            _operators(child, found)
    return found


def lower(ast: Equation, names: dict) -> FunctionalEquation:
    """Turn an equation tree into a FunctionalEquation, binding q or ell from ``names``."""
    applied = _operators(ast, [])
    kinds = {a.op for a in applied}
    if len(kinds) > 1:
        raise MixedOperators(f"one equation mixes the operators {sorted(kinds)}")
    if not kinds:
        raise ParseError("the equation applies no operator to y", *ast.pos)
    kind = kinds.pop()
    order = max(a.power for a in applied)
    if kind == "delta":
        op = Differential()
    elif kind == "sigma":
        if "q" not in names:
            raise ParseError("sigma needs a value for q", *applied[0].pos)
        op = QDifference(names["q"])
    else:
        if "ell" not in names:
            raise ParseError("mu needs a value for ell", *applied[0].pos)
        ell = names["ell"]
        if not (is_exact(ell) and Fraction(ell).denominator == 1):
            raise ValidationError("ell must be an integer")
        op = Mahler(int(ell))
    scope = _Scope(names, order + 2)
    F = scope.value(ast.lhs) - scope.value(ast.rhs)
    if not isinstance(F, MultiSeries):
        raise ParseError("the equation does not involve x or y", *ast.pos)
    return FunctionalEquation(F, op, order)


@dataclass
class EquationSource:
    text: str
    params: dict = field(default_factory=dict)


def parse_equation(src: EquationSource | str, params: dict | None = None) -> FunctionalEquation:
    if isinstance(src, str):
        src = EquationSource(src, params or {})
    return parse_document(src.text, src.params).equation


# ----------------------------------------------------------------------------
# documents


@dataclass
class Document:
    ast: Equation | None = None
    equation: FunctionalEquation | None = None
    names: dict = field(default_factory=dict)
    lattice: list = field(default_factory=list)
    init: dict = field(default_factory=dict)
    germ: dict | None = None
    task: str | None = None
    options: dict = field(default_factory=dict)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _param_value(text, names):
    if isinstance(text, str):
        return _Scope(names).scalar(parse_expression(text))
    return _scalar(text)


def parse_document(text: str, params: dict | None = None) -> Document:
    """Parse an equation file; ``params`` (name -> value or expression text) override ``param`` lines."""
    overrides = dict(params or {})
    doc = Document()
    names = doc.names
    pending = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        word = body.split(None, 1)[0]
        if word not in DIRECTIVES:
            if doc.ast is not None:
                raise ParseError("a document holds a single equation", lineno, indent + 1)
            doc.ast = parse_equation_ast(body, lineno, indent + 1)
            continue
        rest = body[len(word):]
        col = indent + len(word) + 1 + (len(rest) - len(rest.lstrip()))
        rest = rest.strip()
        if word in ("param", "let"):
            name, sep, expr = rest.partition("=")
            name = name.strip()
            if not sep or not name.isidentifier():
                raise ParseError(f"expected '{word} NAME = value'", lineno, col)
            if name in ("x", "y") or name in OPERATORS:
                raise ParseError(f"{name!r} is reserved", lineno, col)
            if word == "param" and name in overrides:
                names[name] = _param_value(overrides.pop(name), names)
            else:
                ecol = col + len(rest) - len(expr.lstrip())
                names[name] = _Scope(names).scalar(parse_expression(expr.strip(), lineno, ecol))
        elif word == "task":
            parts = rest.split()
            if not parts:
                raise ParseError("task needs a name", lineno, col)
            doc.task = parts[0]
            for item in parts[1:]:
                key, sep, val = item.partition("=")
                if not sep:
                    raise ParseError(f"expected key=value, found {item!r}", lineno, col)
                doc.options[key] = int(val) if val.lstrip("-").isdigit() else val
        else:
            pending.append((word, rest, lineno, col))
    for name, value in overrides.items():
        names[name] = _param_value(value, names)
    scope = _Scope(names)
    for word, rest, lineno, col in pending:
        if word == "lattice":
            doc.lattice = [scope.scalar(e) for e in _parse(rest, "list", lineno, col)]
        elif word == "init":
            vec, sep, expr = rest.partition("=")
            if not sep:
                raise ParseError("expected 'init (m1, ...) = value'", lineno, col)
            key = _parse(vec.strip(), "vector", lineno, col)
            ecol = col + len(vec) + 1 + (len(expr) - len(expr.lstrip()))
            doc.init[key] = scope.scalar(parse_expression(expr.strip(), lineno, ecol))
        elif word == "map":
            doc.germ = _germ(parse_expression(rest, lineno, col), names)
    if doc.ast is not None:
        doc.equation = lower(doc.ast, names)
    return doc


def _germ(ast, names) -> dict:
    """Taylor coefficients {k: c} of a polynomial map in x."""
    series = _Scope(names, 2).value(ast)
    if not isinstance(series, MultiSeries):
        raise ParseError("a map must depend on x", *ast.pos)
    if series.uses(1):
        raise ParseError("a map depends on x only", *ast.pos)
    return {e[0]: c for e, c in series.terms.items()}


def emit_equation(eq: FunctionalEquation) -> str:
    """DSL text for an equation whose coefficients are exact rationals or complex numbers."""
    terms = []
    op = {Differential: "delta", QDifference: "sigma", Mahler: "mu"}[type(eq.op)]
    for e, c in sorted(eq.F.terms.items()):
        factors = []
        if e[0]:
            factors.append("x" if e[0] == 1 else f"x^{e[0]}")
        for j, k in enumerate(e[1:]):
            if not k:
                continue
            head = "y" if j == 0 else (f"{op}(y)" if j == 1 else f"{op}^{j}(y)")
            factors.append(head if k == 1 else f"{head}^{k}" if j == 0 else f"({head})^{k}")
        terms.append("*".join([f"({_coeff_text(c)})"] + factors))
    return " + ".join(terms) + " = 0"


def _coeff_text(c) -> str:
    if is_exact(c):
        return str(Fraction(c))
    z = to_mpc(c)
    digits = int(mpmath.mp.prec * 0.30103) + 3
    re_, im_ = mpmath.nstr(z.real, digits), mpmath.nstr(abs(z.imag), digits)
    return f"{re_} {'-' if z.imag < 0 else '+'} {im_}i"
