# -*- coding: utf-8 -*-
"""Small expression grammar with forward-mode differentiation to order 2.

Expressions are built from literals, coordinate names, + - * / ^ and the
functions sin, cos, exp, log, sqrt. Evaluation runs on Jet numbers carrying
the value, gradient and Hessian with respect to the coordinates.
"""

import logging
import re

import numpy as np

from kropina_geodesics import kropina_base

LOGGER = logging.getLogger(__name__)

FUNCTIONS = ('sin', 'cos', 'exp', 'log', 'sqrt')
CONSTANTS = {'pi': np.pi}

TOKEN_SPEC = [
    ('NUMBER', r'(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?'),
    ('NAME', r'[A-Za-z_][A-Za-z_0-9]*'),
    ('POW', r'\*\*|\^'),
    ('PLUS', r'\+'),
    ('MINUS', r'-|−'),
    ('TIMES', r'\*'),
    ('DIVIDE', r'/'),
    ('LPAREN', r'\('),
    ('RPAREN', r'\)'),
    ('SPACE', r'[ \t]+'),
    ('MISMATCH', r'.'),
]
TOKEN_RE = re.compile('|'.join('(?P<%s>%s)' % pair for pair in TOKEN_SPEC))


class ConfigSyntaxError(kropina_base.Error):
    """A configuration or expression does not parse.

    Attributes:
        line: Int, 1-based line of the offending token.
        column: Int, 1-based column of the offending token.
    """

    def __init__(self, message, line=1, column=1):
        super(ConfigSyntaxError, self).__init__('%s (line %d, column %d)' % (message, line, column))
        self.line = line
        self.column = column


class UnknownSymbol(kropina_base.Error):
    """An expression names a symbol that is neither a coordinate nor a function."""

    def __init__(self, name, line=1, column=1):
        super(UnknownSymbol, self).__init__('unknown symbol %r (line %d, column %d)' % (name, line, column))
        self.name = name
        self.line = line
        self.column = column


class Jet(object):
    """Second-order forward-mode number: value, gradient and Hessian."""

    __slots__ = ('value', 'grad', 'hess')

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, value, n):
        return cls(float(value), np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variable(cls, value, index, n):
        grad = np.zeros(n)
        grad[index] = 1.0
        return cls(float(value), grad, np.zeros((n, n)))

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.grad.shape[0])

    def apply(self, f0, f1, f2):
        """Chain rule for a scalar function with derivatives f1, f2."""
        return Jet(f0, f1 * self.grad, f2 * np.outer(self.grad, self.grad) + f1 * self.hess)

    def __add__(self, other):
        other = self._lift(other)
        return Jet(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        cross = np.outer(self.grad, other.grad)
        return Jet(self.value * other.value,
                   self.value * other.grad + other.value * self.grad,
                   self.value * other.hess + other.value * self.hess + cross + cross.T)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.value
        return self.apply(1.0 / a, -1.0 / a ** 2, 2.0 / a ** 3)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, other):
        other = self._lift(other)
        if not np.any(other.grad) and not np.any(other.hess):
            c = other.value
            a = self.value
            f1 = 0.0 if c == 0.0 else c * a ** (c - 1.0)
            f2 = 0.0 if c * (c - 1.0) == 0.0 else c * (c - 1.0) * a ** (c - 2.0)
            return self.apply(a ** c, f1, f2)
        return exp(other * log(self))

    def __rpow__(self, other):
        return self._lift(other) ** self

    def __repr__(self):
        return 'Jet(%r, %s, %s)' % (self.value, self.grad, self.hess)


def sin(a):
    return a.apply(np.sin(a.value), np.cos(a.value), -np.sin(a.value))


def cos(a):
    return a.apply(np.cos(a.value), -np.sin(a.value), -np.cos(a.value))


def exp(a):
    e = np.exp(a.value)
    return a.apply(e, e, e)


def log(a):
    return a.apply(np.log(a.value), 1.0 / a.value, -1.0 / a.value ** 2)


def sqrt(a):
    r = np.sqrt(a.value)
    return a.apply(r, 0.5 / r, -0.25 / r ** 3)


_JET_FUNCTIONS = {'sin': sin, 'cos': cos, 'exp': exp, 'log': log, 'sqrt': sqrt}
_FLOAT_FUNCTIONS = {'sin': np.sin, 'cos': np.cos, 'exp': np.exp, 'log': np.log, 'sqrt': np.sqrt}


class Node(object):
    """Parse tree node."""

    def evaluate(self, env, functions):
        raise NotImplementedError

    def to_text(self):
        raise NotImplementedError

    def symbols(self):
        return set()


class Number(Node):

    def __init__(self, value):
        self.value = float(value)

    def evaluate(self, env, functions):
        return self.value

    def to_text(self):
        return repr(self.value)


class Symbol(Node):

    def __init__(self, name):
        self.name = name

    def evaluate(self, env, functions):
        return env[self.name]

    def to_text(self):
        return self.name

    def symbols(self):
        return {self.name}


class Negate(Node):

    def __init__(self, arg):
        self.arg = arg

    def evaluate(self, env, functions):
        return -self.arg.evaluate(env, functions)

    def to_text(self):
        return '(-%s)' % self.arg.to_text()

    def symbols(self):
        return self.arg.symbols()


class Binary(Node):

    OPERATORS = {
        '+': lambda a, b: a + b,
        '-': lambda a, b: a - b,
        '*': lambda a, b: a * b,
        '/': lambda a, b: a / b,
        '^': lambda a, b: a ** b,
    }

    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right

    def evaluate(self, env, functions):
        return self.OPERATORS[self.op](self.left.evaluate(env, functions),
                                       self.right.evaluate(env, functions))

    def to_text(self):
        return '(%s %s %s)' % (self.left.to_text(), self.op, self.right.to_text())

    def symbols(self):
        return self.left.symbols() | self.right.symbols()


class Call(Node):

    def __init__(self, func, arg):
        self.func = func
        self.arg = arg

    def evaluate(self, env, functions):
        value = self.arg.evaluate(env, functions)
        if not isinstance(value, Jet):
            return float(_FLOAT_FUNCTIONS[self.func](value))
        return functions[self.func](value)

    def to_text(self):
        return '%s(%s)' % (self.func, self.arg.to_text())

    def symbols(self):
        return self.arg.symbols()


class _Scanner(object):
    """Tokenizer keeping 1-based source positions."""

    def __init__(self, text, line, column):
        self.tokens = []
        for match in TOKEN_RE.finditer(text):
            kind = match.lastgroup
            col = column + match.start()
            if kind == 'SPACE':
                continue
            if kind == 'MISMATCH':
                raise ConfigSyntaxError('unexpected character %r' % match.group(), line, col)
            self.tokens.append((kind, match.group(), col))
        self.tokens.append(('END', '', column + len(text)))
        self.line = line
        self.index = 0

    def peek(self, kind):
        return self.tokens[self.index][0] == kind

    def accept(self, kind):
        if self.peek(kind):
            self.index += 1
            return self.tokens[self.index - 1]
        return None

    def expect(self, kind):
        token = self.accept(kind)
        if token is None:
            self.fail('expected %s' % kind.lower())
        return token

    def fail(self, message):
        kind, text, col = self.tokens[self.index]
        found = 'end of input' if kind == 'END' else repr(text)
        raise ConfigSyntaxError('%s, found %s' % (message, found), self.line, col)


class _Parser(object):

    def __init__(self, text, names, line, column, aliases=None):
        self.scanner = _Scanner(text, line, column)
        self.aliases = dict(aliases or {})
        self.names = set(names) | set(CONSTANTS) | set(self.aliases)

    def parse(self):
        tree = self._expression()
        if not self.scanner.peek('END'):
            self.scanner.fail('unexpected token')
        return tree

    # <EXPRESSION> -> <TERM> { ( '+' | '-' ) <TERM> }*
    def _expression(self):
        tree = self._term()
        while True:
            if self.scanner.accept('PLUS'):
                tree = Binary('+', tree, self._term())
            elif self.scanner.accept('MINUS'):
                tree = Binary('-', tree, self._term())
            else:
                return tree

    # <TERM> -> <UNARY> { ( '*' | '/' ) <UNARY> }*
    def _term(self):
        tree = self._unary()
        while True:
            if self.scanner.accept('TIMES'):
                tree = Binary('*', tree, self._unary())
            elif self.scanner.accept('DIVIDE'):
                tree = Binary('/', tree, self._unary())
            else:
                return tree

    # <UNARY> -> ( '-' | '+' ) <UNARY> | <POWER>
    def _unary(self):
        if self.scanner.accept('MINUS'):
            return Negate(self._unary())
        if self.scanner.accept('PLUS'):
            return self._unary()
        return self._power()

    # <POWER> -> <ATOM> [ '^' <UNARY> ]
    def _power(self):
        base = self._atom()
        if self.scanner.accept('POW'):
            return Binary('^', base, self._unary())
        return base

    # <ATOM> -> NUMBER | NAME | NAME '(' <EXPRESSION> ')' | '(' <EXPRESSION> ')'
    def _atom(self):
        token = self.scanner.accept('NUMBER')
        if token:
            return Number(token[1])
        token = self.scanner.accept('NAME')
        if token:
            name, col = token[1], token[2]
            if self.scanner.accept('LPAREN'):
                if name not in FUNCTIONS:
                    raise UnknownSymbol(name, self.scanner.line, col)
                tree = Call(name, self._expression())
                self.scanner.expect('RPAREN')
                return tree
            if name in FUNCTIONS:
                self.scanner.fail('expected ( after %s' % name)
            if name not in self.names:
                raise UnknownSymbol(name, self.scanner.line, col)
            return Number(CONSTANTS[name]) if name in CONSTANTS else Symbol(self.aliases.get(name, name))
        if self.scanner.accept('LPAREN'):
            tree = self._expression()
            self.scanner.expect('RPAREN')
            return tree
        self.scanner.fail('expected a number, name or (')


class Expression(object):
    """A parsed expression over an ordered list of coordinate names."""

    def __init__(self, tree, names, text=None):
        self.tree = tree
        self.names = list(names)
        self.text = tree.to_text() if text is None else text

    @classmethod
    def parse(cls, text, names, line=1, column=1, aliases=None):
        """Parses text.

        Args:
            text: Str, the expression source.
            names: Sequence of coordinate names, in coordinate order.
            line: Int, source line reported in errors.
            column: Int, source column of text[0] reported in errors.
        Returns:
            Expression.
        Raises:
            ConfigSyntaxError: If text does not parse.
            UnknownSymbol: If text names an unknown symbol or function.
        """
        return cls(_Parser(text, names, line, column, aliases).parse(), names, text.strip())

    @classmethod
    def constant(cls, value, names):
        return cls(Number(value), names)

    @property
    def is_constant(self):
        return not self.tree.symbols()

    def value(self, x):
        env = dict(zip(self.names, np.asarray(x, dtype=float)))
        return float(self.tree.evaluate(env, _FLOAT_FUNCTIONS))

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        n = len(self.names)
        env = dict((name, Jet.variable(x[i], i, n)) for i, name in enumerate(self.names))
        result = self.tree.evaluate(env, _JET_FUNCTIONS)
        if not isinstance(result, Jet):
            return Jet.constant(result, n)
        return result

    def gradient(self, x):
        return self.jet(x).grad

    def hessian(self, x):
        return self.jet(x).hess

    def to_text(self):
        """Fully parenthesized source; parsing it reproduces this tree."""
        return self.tree.to_text()

    def __repr__(self):
        return 'Expression(%r)' % self.text
