# -*- coding: utf-8 -*-
"""Model configuration files and the catalog of named structures.

A configuration is a list of `key = value` statements separated by newlines
or semicolons; `#` starts a comment. Recognized keys:

    dim = 3                   optional, inferred from w otherwise
    label = my model          free text
    coords = x, y, t          coordinate names, default x1..xn
    g11 = 2; g12 = x*y        upper triangle of g, missing entries are 0
    w = [-2*y, 2*x, 1]        all of omega at once, or w1 = ..., w2 = ...
    cr = 1; upsilon = t^2     a rescaled Heisenberg model instead of g and w

Entries of g use `g<i><j>` or `g<i>_<j>` with 1-based indices.
"""

import logging
import os
import re

import numpy as np

from kropina_geodesics import cr_models
from kropina_geodesics import expressions
from kropina_geodesics import kropina_base
from kropina_geodesics.serialization import IOFailure

LOGGER = logging.getLogger(__name__)

DEFAULT_CLOSED_AMPLITUDE = 0.3
DEFAULT_ALIASES = {1: {'x': 'x1'}, 2: {'x': 'x1', 'y': 'x2'}, 3: {'x': 'x1', 'y': 'x2', 't': 'x3'}}

METRIC_KEY_RE = re.compile(r'^g(?:(\d)(\d)|(\d+)_(\d+))$')
ONEFORM_KEY_RE = re.compile(r'^w(\d+)$')
STATEMENT_RE = re.compile(r'\s*([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.*?)\s*$')


class DimensionMismatch(kropina_base.Error):
    """Entries of a configuration disagree on the dimension."""


class UnknownModel(kropina_base.Error):
    """A model name is neither a catalog entry nor a readable file."""


def default_names(dim):
    return ['x%d' % (i + 1) for i in range(dim)]


class ModelConfig(object):
    """Parsed model configuration.

    Attributes:
        dim: Int, the manifold dimension.
        names: List(str), coordinate names in order.
        aliases: Dict, extra accepted names for coordinates.
        metric: Dict (i, j) -> Expression for i <= j, 0-based.
        oneform: List(Expression) of length dim, or None for rescaled models.
        upsilon: Expression or None.
        cr_dim: Int or None, set for rescaled models.
        label: Str.
    """

    def __init__(self, dim, names, metric=None, oneform=None, upsilon=None, cr_dim=None,
                 label='', aliases=None):
        self.dim = dim
        self.names = list(names)
        self.aliases = dict(aliases or {})
        self.metric = dict(metric or {})
        self.oneform = oneform
        self.upsilon = upsilon
        self.cr_dim = cr_dim
        self.label = label

    @property
    def is_rescaled(self):
        return self.upsilon is not None

    def g(self, x):
        out = np.zeros((self.dim, self.dim))
        for (i, j), expr in self.metric.items():
            out[i, j] = out[j, i] = expr.value(x)
        return out

    def dg(self, x):
        out = np.zeros((self.dim, self.dim, self.dim))
        for (i, j), expr in self.metric.items():
            out[:, i, j] = out[:, j, i] = expr.gradient(x)
        return out

    def omega(self, x):
        return np.array([expr.value(x) for expr in self.oneform])

    def domega(self, x):
        return np.column_stack([expr.gradient(x) for expr in self.oneform])

    def to_structure(self):
        """Returns the KropinaStructure with derivatives from the expression jets."""
        if self.is_rescaled:
            spec = cr_models.CRModelSpec(self.cr_dim, self.upsilon, self.label or None)
            return cr_models.rescaled_kropina(spec)
        return kropina_base.KropinaStructure(self.dim, self.g, self.omega, self.dg, self.domega,
                                             label=self.label or 'config:%d' % self.dim)

    def to_text(self):
        """Canonical text; parse_model_config(to_text()) prints back identically."""
        lines = ['dim = %d' % self.dim]
        if self.label:
            lines.append('label = %s' % self.label)
        if self.is_rescaled:
            lines.append('cr = %d' % self.cr_dim)
            lines.append('upsilon = %s' % self.upsilon.to_text())
            return '\n'.join(lines) + '\n'
        if self.names != default_names(self.dim):
            lines.append('coords = %s' % ', '.join(self.names))
        for (i, j) in sorted(self.metric):
            lines.append('g%d_%d = %s' % (i + 1, j + 1, self.metric[(i, j)].to_text()))
        lines.append('w = [%s]' % ', '.join(expr.to_text() for expr in self.oneform))
        return '\n'.join(lines) + '\n'

    def __repr__(self):
        return 'ModelConfig(dim=%d, label=%r)' % (self.dim, self.label)


def _statements(text):
    """Yields (line, column, key, value, value_column) per statement."""
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0]
        start = 0
        for piece in line.split(';'):
            column = start + 1
            start += len(piece) + 1
            if not piece.strip():
                continue
            match = STATEMENT_RE.match(piece)
            if match is None:
                offset = len(piece) - len(piece.lstrip())
                raise expressions.ConfigSyntaxError('expected key = value', line_no, column + offset)
            yield line_no, column + match.start(1), match.group(1), match.group(2), column + match.start(2)


def _split_list(text, line, column):
    """Splits '[a, b, c]' at top-level commas into (item, column) pairs."""
    body = text.strip()
    if not (body.startswith('[') and body.endswith(']')):
        raise expressions.ConfigSyntaxError('expected a [ ... ] list', line, column)
    offset = column + (len(text) - len(text.lstrip())) + 1
    items = []
    depth = 0
    begin = 0
    inner = body[1:-1]
    for k, char in enumerate(inner):
        if char == '(':
            depth += 1
        elif char == ')':
            depth -= 1
        elif char == ',' and depth == 0:
            items.append((inner[begin:k], offset + begin))
            begin = k + 1
    items.append((inner[begin:], offset + begin))
    return items


def _parse_int(value, key, line, column):
    try:
        number = int(value)
    except ValueError:
        raise expressions.ConfigSyntaxError('%s must be an integer' % key, line, column)
    if number < 1:
        raise DimensionMismatch('%s must be >= 1, got %d' % (key, number))
    return number


def parse_model_config(text):
    """Parses a model configuration.

    Args:
        text: Str, the configuration source.
    Returns:
        ModelConfig.
    Raises:
        ConfigSyntaxError: With line and column of the offending text.
        UnknownSymbol: If an expression names an unknown symbol.
        DimensionMismatch: If the entries disagree on the dimension.
    """
    scalars = {}
    raw_metric = {}
    raw_oneform = {}
    raw_list = None
    for line, key_col, key, value, col in _statements(text):
        metric_key = METRIC_KEY_RE.match(key)
        oneform_key = ONEFORM_KEY_RE.match(key)
        if key in ('dim', 'label', 'coords', 'cr', 'upsilon'):
            scalars[key] = (value, line, col)
        elif key == 'w':
            raw_list = (value, line, col)
        elif metric_key:
            groups = metric_key.groups()
            i, j = (int(groups[0]), int(groups[1])) if groups[0] else (int(groups[2]), int(groups[3]))
            if i < 1 or j < 1:
                raise expressions.ConfigSyntaxError('indices are 1-based in %s' % key, line, key_col)
            if i > j:
                raise expressions.ConfigSyntaxError(
                    'only the upper triangle of g is given, use g%d_%d' % (j, i), line, key_col)
            raw_metric[(i - 1, j - 1)] = (value, line, col)
        elif oneform_key:
            raw_oneform[int(oneform_key.group(1)) - 1] = (value, line, col)
        else:
            raise expressions.ConfigSyntaxError('unknown key %r' % key, line, key_col)

    label = scalars['label'][0] if 'label' in scalars else ''
    if 'upsilon' in scalars:
        return _parse_rescaled(scalars, label, raw_metric, raw_oneform, raw_list)

    list_items = _split_list(*raw_list) if raw_list else None
    dim = None
    if 'dim' in scalars:
        dim = _parse_int(scalars['dim'][0], 'dim', scalars['dim'][1], scalars['dim'][2])
    if list_items is not None:
        if dim is not None and len(list_items) != dim:
            raise DimensionMismatch('w has %d entries but dim = %d' % (len(list_items), dim))
        dim = len(list_items)
    if dim is None:
        raise DimensionMismatch('cannot infer the dimension: give dim or w = [...]')
    if list_items is not None and raw_oneform:
        raise expressions.ConfigSyntaxError('give w as a list or as w1.., not both',
                                            raw_list[1], raw_list[2])

    if 'coords' in scalars:
        names = [name.strip() for name in scalars['coords'][0].split(',')]
        if len(names) != dim or len(set(names)) != dim:
            raise DimensionMismatch('coords names %d distinct coordinates, expected %d'
                                    % (len(set(names)), dim))
        aliases = {}
    else:
        names = default_names(dim)
        aliases = DEFAULT_ALIASES.get(dim, {})

    def parse(entry):
        value, line, col = entry
        return expressions.Expression.parse(value, names, line, col, aliases)

    metric = {}
    for (i, j), entry in raw_metric.items():
        if j >= dim:
            raise DimensionMismatch('g%d_%d is outside dimension %d' % (i + 1, j + 1, dim))
        metric[(i, j)] = parse(entry)
    if list_items is not None:
        oneform = [expressions.Expression.parse(item, names, raw_list[1], column, aliases)
                   for item, column in list_items]
    else:
        if any(k >= dim for k in raw_oneform):
            raise DimensionMismatch('w%d is outside dimension %d' % (max(raw_oneform) + 1, dim))
        oneform = [parse(raw_oneform[k]) if k in raw_oneform else expressions.Expression.constant(0.0, names)
                   for k in range(dim)]
    LOGGER.debug('Parsed model config of dimension %d with %d metric entries', dim, len(metric))
    return ModelConfig(dim, names, metric, oneform, label=label, aliases=aliases)


def _parse_rescaled(scalars, label, raw_metric, raw_oneform, raw_list):
    value, line, col = scalars['upsilon']
    if raw_metric or raw_oneform or raw_list:
        raise expressions.ConfigSyntaxError('upsilon models take no g or w entries', line, col)
    if 'cr' not in scalars:
        raise DimensionMismatch('upsilon needs the CR dimension cr = n')
    cr_dim = _parse_int(scalars['cr'][0], 'cr', scalars['cr'][1], scalars['cr'][2])
    dim = 2 * cr_dim + 1
    if 'dim' in scalars:
        given = _parse_int(scalars['dim'][0], 'dim', scalars['dim'][1], scalars['dim'][2])
        if given != dim:
            raise DimensionMismatch('cr = %d gives dimension %d, not %d' % (cr_dim, dim, given))
    names = cr_models.coordinate_names(cr_dim)
    aliases = cr_models.coordinate_aliases(cr_dim)
    upsilon = expressions.Expression.parse(value, names, line, col, aliases)
    return ModelConfig(dim, names, upsilon=upsilon, cr_dim=cr_dim,
                       label=label or 'rescaled:%d:%s' % (cr_dim, upsilon.to_text()), aliases=aliases)


def load_model_config(path):
    """Reads and parses a configuration file.

    Raises:
        IOFailure: If the file cannot be read.
    """
    try:
        with open(path, 'r') as config_file:
            text = config_file.read()
    except (IOError, OSError) as e:
        raise IOFailure('cannot read %s: %s' % (path, e))
    config = parse_model_config(text)
    if not config.label:
        config.label = os.path.basename(path)
    return config


def euclidean_kropina(dim):
    """g = identity and omega = dx1."""
    omega = np.zeros(dim)
    omega[0] = 1.0
    return kropina_base.KropinaStructure(
        dim, lambda x: np.eye(dim), lambda x: omega.copy(),
        lambda x: np.zeros((dim, dim, dim)), lambda x: np.zeros((dim, dim)),
        label='euclidean:%d' % dim)


def closed_kropina(dim, amplitude=DEFAULT_CLOSED_AMPLITUDE):
    """g = identity and omega = d(x1 + amplitude sin x2), a closed form."""
    if dim < 2:
        raise kropina_base.InvalidStructure('closed model needs dimension >= 2, got %d' % dim)

    def oneform(x):
        w = np.zeros(dim)
        w[0] = 1.0
        w[1] = amplitude * np.cos(x[1])
        return w

    def doneform(x):
        d = np.zeros((dim, dim))
        d[1, 1] = -amplitude * np.sin(x[1])
        return d

    return kropina_base.KropinaStructure(
        dim, lambda x: np.eye(dim), oneform, lambda x: np.zeros((dim, dim, dim)), doneform,
        label='closed:%d' % dim)


def _catalog_int(name, value):
    try:
        number = int(value)
    except ValueError:
        raise UnknownModel('%r: %r is not an integer' % (name, value))
    if number < 1:
        raise UnknownModel('%r: dimension must be >= 1' % name)
    return number


def structure_from_name(name):
    """Resolves a model name to a KropinaStructure.

    Names: heisenberg:<n>, burns-shnider:<n>, rescaled:<n>:<upsilon id>,
    euclidean:<dim>, closed:<dim>, or the path of a configuration file.

    Raises:
        UnknownModel: If the name matches nothing.
    """
    parts = name.split(':')
    kind = parts[0]
    if kind == 'heisenberg' and len(parts) == 2:
        return cr_models.heisenberg_kropina(_catalog_int(name, parts[1]))
    if kind == 'burns-shnider' and len(parts) == 2:
        return cr_models.burns_shnider_kropina(_catalog_int(name, parts[1]))
    if kind == 'rescaled' and len(parts) == 3:
        try:
            spec = cr_models.CRModelSpec.from_catalog(_catalog_int(name, parts[1]), parts[2])
        except KeyError as e:
            raise UnknownModel(str(e))
        return cr_models.rescaled_kropina(spec)
    if kind == 'euclidean' and len(parts) == 2:
        return euclidean_kropina(_catalog_int(name, parts[1]))
    if kind == 'closed' and len(parts) == 2:
        return closed_kropina(_catalog_int(name, parts[1]))
    if os.path.isfile(name):
        return load_model_config(name).to_structure()
    raise UnknownModel('unknown model %r' % name)
