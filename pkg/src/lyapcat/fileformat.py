"""Text formats for systems and certificates.

Both are YAML documents. Exact numbers are written as integers or ``"p/q"``
strings; floats are accepted only inside ``quadratic`` and ``power``
sections. Every load is all-or-nothing and errors carry the line and column
of the offending node.

System file::

    timeline: discrete            # discrete | continuous | free
    space:
      euclidean: 1                # or  finite: [[0, 1], [1, 0]]
    generators:
      matrices: [[["1/2"]]]       # or maps / affine: {A, b} / velocity
    observables:
      dist: {distance_to: origin}
      energy: {quadratic: [[1.0]]}
    points:
      origin: [0]

Certificate file::

    certificate: delta            # delta | lyapunov
    point: origin
    grid: ["1/4", 1, 4]
    delta: {breakpoints: [[1, 1]], left_slope: 1, right_slope: 1}
    # lyapunov certificates instead give inner, outer and
    # levels: {observable: name} | {sets: [[...], ...]} | {quadratic: [[...]]}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import yaml

from .certificates import DeltaCertificate, LyapunovCertificate
from .comparison import IDENTITY, PiecewiseLinear, Power
from .monovariant import (Coordinate, DistanceTo, LevelSetFamily, QuadraticForm,
                          TableLookup, sublevel)
from .system import (AffineMaps, DynamicalSystem, EuclideanSpace, FiniteMaps, FiniteMetric,
                     LinearMaps, MetricError, UniformMotion)
from .timeline import CONTINUOUS, DISCRETE, TimelineKind


class FormatError(ValueError):
    def __init__(self, message, mark=None):
        self.line = mark.line + 1 if mark is not None else None
        self.column = mark.column + 1 if mark is not None else None
        where = f"line {self.line}, column {self.column}: " if mark is not None else ""
        super().__init__(where + message)


@dataclass
class SystemFile:
    system: DynamicalSystem
    observables: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)


# -- node helpers ----------------------------------------------------------------

def _compose(text: str):
    try:
        node = yaml.compose(text)
    except yaml.MarkedYAMLError as err:
        raise FormatError(err.problem or "malformed YAML", err.problem_mark) from err
    except yaml.YAMLError as err:
        raise FormatError(str(err)) from err
    if node is None:
        raise FormatError("empty document")
    return node


def _mapping(node, what="section") -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise FormatError(f"{what} must be a mapping", node.start_mark)
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise FormatError("keys must be plain names", k.start_mark)
        if k.value in out:
            raise FormatError(f"duplicate key {k.value!r}", k.start_mark)
        out[k.value] = v
    return out


def _seq(node, what="value") -> list:
    if not isinstance(node, yaml.SequenceNode):
        raise FormatError(f"{what} must be a list", node.start_mark)
    return list(node.value)


def _require(mapping: dict, key: str, parent):
    if key not in mapping:
        raise FormatError(f"missing key {key!r}", parent.start_mark)
    return mapping[key]


def _scalar(node):
    if not isinstance(node, yaml.ScalarNode):
        raise FormatError("expected a single value", node.start_mark)
    return yaml.SafeLoader("").construct_object(node, deep=True)


def _number(node, floats: bool = False):
    value = _scalar(node)
    if isinstance(value, bool):
        raise FormatError("expected a number", node.start_mark)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not floats:
            raise FormatError("floats are only allowed in quadratic and power sections; "
                              "write exact values as \"p/q\"", node.start_mark)
        return value
    if isinstance(value, str):
        text = value.strip()
        if text in ("inf", "+inf"):
            return math.inf
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            pass
        if floats:
            try:
                return float(text)
            except ValueError:
                pass
    raise FormatError(f"cannot read {value!r} as a number", node.start_mark)


def _int(node) -> int:
    value = _scalar(node)
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError("expected an integer", node.start_mark)
    return value


def _vector(node, floats=False) -> tuple:
    return tuple(_number(v, floats) for v in _seq(node, "vector"))


def _matrix(node, floats=False) -> tuple:
    return tuple(_vector(row, floats) for row in _seq(node, "matrix"))


# -- systems -----------------------------------------------------------------------

def _timeline(node, generators_arity) -> TimelineKind:
    tag = _scalar(node)
    if tag == "discrete":
        return DISCRETE
    if tag == "continuous":
        return CONTINUOUS
    if tag == "free":
        return TimelineKind("free", generators_arity)
    raise FormatError(f"unknown timeline {tag!r}", node.start_mark)


def _generators(node):
    gens = _mapping(node, "generators")
    if len(gens) != 1:
        raise FormatError("give exactly one of maps, matrices, affine, velocity", node.start_mark)
    (kind, value), = gens.items()
    if kind == "maps":
        return FiniteMaps(tuple(tuple(_int(x) for x in _seq(m, "map"))
                                for m in _seq(value, "maps")))
    if kind == "matrices":
        return LinearMaps(tuple(_matrix(m) for m in _seq(value, "matrices")))
    if kind == "affine":
        aff = _mapping(value, "affine")
        return AffineMaps(_matrix(_require(aff, "A", value)), _vector(_require(aff, "b", value)))
    if kind == "velocity":
        return UniformMotion(_vector(value))
    raise FormatError(f"unknown generator kind {kind!r}", node.start_mark)


def _point(node, space, points: dict):
    value = _scalar(node) if isinstance(node, yaml.ScalarNode) else None
    if isinstance(value, str):
        if value in points:
            return points[value]
        raise FormatError(f"unknown point {value!r}", node.start_mark)
    if space.is_finite:
        idx = _int(node)
        if not space.contains(idx):
            raise FormatError(f"state {idx} outside the space", node.start_mark)
        return idx
    vec = _vector(node)
    if len(vec) != space.dim:
        raise FormatError(f"point has dimension {len(vec)}, expected {space.dim}",
                          node.start_mark)
    return vec


def _observable(node, space, points, name):
    spec = _mapping(node, "observable")
    if len(spec) != 1:
        raise FormatError("an observable has exactly one kind", node.start_mark)
    (kind, value), = spec.items()
    try:
        if kind == "distance_to":
            return DistanceTo(space, _point(value, space, points), name)
        if kind == "quadratic":
            return QuadraticForm(_matrix(value, floats=True), name)
        if kind == "coordinate":
            return Coordinate(_int(value), name)
        if kind == "table":
            return TableLookup(_vector(value), name)
    except (ValueError, TypeError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError(str(err), value.start_mark) from err
    raise FormatError(f"unknown observable kind {kind!r}", node.start_mark)


def parse_system(text: str) -> SystemFile:
    root = _compose(text)
    doc = _mapping(root, "system document")
    space_node = _require(doc, "space", root)
    space_spec = _mapping(space_node, "space")
    try:
        if "finite" in space_spec:
            space = FiniteMetric(_matrix(space_spec["finite"]))
        elif "euclidean" in space_spec:
            space = EuclideanSpace(_int(space_spec["euclidean"]))
        else:
            raise FormatError("space must be finite or euclidean", space_node.start_mark)
    except (MetricError, ValueError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError(str(err), space_node.start_mark) from err
    gen_node = _require(doc, "generators", root)
    generators = _generators(gen_node)
    timeline = _timeline(_require(doc, "timeline", root), generators.arity)
    try:
        system = DynamicalSystem(space, timeline, generators)
    except ValueError as err:
        raise FormatError(str(err), gen_node.start_mark) from err
    points = {}
    if "points" in doc:
        for name, node in _mapping(doc["points"], "points").items():
            points[name] = _point(node, space, {})
    observables = {}
    if "observables" in doc:
        for name, node in _mapping(doc["observables"], "observables").items():
            observables[name] = _observable(node, space, points, name)
    return SystemFile(system, observables, points)


# -- certificates --------------------------------------------------------------------

def _function(node):
    if isinstance(node, yaml.ScalarNode):
        if _scalar(node) == "identity":
            return IDENTITY
        raise FormatError("a comparison function is 'identity' or a mapping", node.start_mark)
    spec = _mapping(node, "comparison function")
    try:
        if "linear" in spec:
            return PiecewiseLinear.linear(_number(spec["linear"]))
        if "power" in spec:
            p = _mapping(spec["power"], "power")
            return Power(_number(_require(p, "coefficient", node), floats=True),
                         _number(_require(p, "exponent", node), floats=True))
        if "breakpoints" in spec:
            pts = [_vector(p) for p in _seq(spec["breakpoints"], "breakpoints")]
            if any(len(p) != 2 for p in pts):
                raise FormatError("breakpoints are [x, y] pairs", spec["breakpoints"].start_mark)
            return PiecewiseLinear(tuple(p[0] for p in pts), tuple(p[1] for p in pts),
                                   _number(_require(spec, "left_slope", node)),
                                   _number(_require(spec, "right_slope", node)))
    except (ValueError, TypeError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError(str(err), node.start_mark) from err
    raise FormatError("unknown comparison function", node.start_mark)


def parse_certificate(text: str, sysfile: SystemFile):
    root = _compose(text)
    doc = _mapping(root, "certificate document")
    space = sysfile.system.space
    kind = _scalar(_require(doc, "certificate", root))
    x_star = _point(_require(doc, "point", root), space, sysfile.points)
    grid_node = _require(doc, "grid", root)
    grid = _vector(grid_node, floats=_has_float_section(doc))
    horizon = _int(doc["horizon"]) if "horizon" in doc else None
    try:
        if kind == "delta":
            return DeltaCertificate(x_star, _function(_require(doc, "delta", root)), grid, horizon)
        if kind == "lyapunov":
            levels_node = _require(doc, "levels", root)
            levels, notes = _levels(levels_node, sysfile, grid)
            return LyapunovCertificate(x_star, levels, _function(_require(doc, "inner", root)),
                                       _function(_require(doc, "outer", root)), notes)
    except (ValueError, TypeError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError(str(err), root.start_mark) from err
    raise FormatError(f"unknown certificate kind {kind!r}", root.start_mark)


def _has_float_section(doc: dict) -> bool:
    """Grids may hold floats only next to a quadratic or power section."""
    levels = doc.get("levels")
    if isinstance(levels, yaml.MappingNode) and any(k.value == "quadratic" for k, _ in levels.value):
        return True
    for key in ("delta", "inner", "outer"):
        node = doc.get(key)
        if isinstance(node, yaml.MappingNode) and any(k.value == "power" for k, _ in node.value):
            return True
    return False


def _levels(node, sysfile: SystemFile, grid) -> tuple:
    """The level-set family plus certificate notes (the matrix of a quadratic family)."""
    spec = _mapping(node, "levels")
    space = sysfile.system.space
    if "observable" in spec:
        name = _scalar(spec["observable"])
        if name not in sysfile.observables:
            raise FormatError(f"unknown observable {name!r}", spec["observable"].start_mark)
        return sublevel(sysfile.observables[name], space, grid), {}
    if "quadratic" in spec:
        P = _matrix(spec["quadratic"], floats=True)
        return sublevel(QuadraticForm(P), space, grid), {"P": P}
    if "sets" in spec:
        if not space.is_finite:
            raise FormatError("extensional level sets need a finite space", node.start_mark)
        sets = [frozenset(_int(x) for x in _seq(s, "set")) for s in _seq(spec["sets"], "sets")]
        if len(sets) != len(grid):
            raise FormatError(f"{len(sets)} sets for {len(grid)} grid radii", node.start_mark)
        return LevelSetFamily(space, grid, dict(zip(grid, sets))), {}
    raise FormatError("levels need observable, quadratic or sets", node.start_mark)


# -- emission ---------------------------------------------------------------------------

def _num(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    if isinstance(v, int):
        return v
    if v == math.inf:
        return "inf"
    return float(v)


def _point_out(x):
    return x if isinstance(x, int) else [_num(v) for v in x]


def _function_out(f):
    if f == IDENTITY:
        return "identity"
    if isinstance(f, Power):
        return {"power": {"coefficient": float(f.coefficient), "exponent": float(f.exponent)}}
    if isinstance(f, PiecewiseLinear):
        return {"breakpoints": [[_num(x), _num(y)] for x, y in zip(f.xs, f.ys)],
                "left_slope": _num(f.left_slope), "right_slope": _num(f.right_slope)}
    raise TypeError(f"{type(f).__name__} has no file representation")


def dump_certificate(cert) -> str:
    doc = {"point": _point_out(cert.x_star), "grid": [_num(e) for e in cert.grid]}
    if isinstance(cert, DeltaCertificate):
        doc = {"certificate": "delta", **doc, "delta": _function_out(cert.delta)}
        if cert.horizon is not None:
            doc["horizon"] = cert.horizon
    else:
        levels = cert.levels
        if levels.space.is_finite:
            lv = {"sets": [sorted(levels.at(e)) for e in cert.grid]}
        elif "P" in cert.notes:
            lv = {"quadratic": [[float(v) for v in row] for row in cert.notes["P"]]}
        else:
            raise TypeError("only finite or quadratic Lyapunov certificates can be written")
        doc = {"certificate": "lyapunov", **doc, "levels": lv,
               "inner": _function_out(cert.inner), "outer": _function_out(cert.outer)}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
