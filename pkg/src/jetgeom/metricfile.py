"""Line-oriented metric definition files.

Format (UTF-8, ``#`` starts a comment)::

    dimension = <int>
    kind = riemannian | affine
    coordinates = x1, x2[, ...]
    g[i][j] = <expr>            # riemannian; symmetric entries may be given once
    gamma[i][j][k] = <expr>     # optional; omitted => Levi-Civita (riemannian),
                                # required (affine)
    domain = [lo1, hi1] x [lo2, hi2] ...
    base_point = (p1, p2, ...)
    samples = <int>             # default 20
    rk_step = <real>            # default 1e-3

Expressions use the grammar of `jetgeom.expr` over the declared coordinates.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import ExprSyntaxError, JetGeomError, MetricFileError, UnknownIdentifierError
from .geometry import Box, GeometricObject, from_metric
from .jets import AFFINE, RIEMANNIAN

__all__ = ["MetricFile", "parse_metric_text", "load_metric_file"]

_G_KEY = re.compile(r"^g\[(\d+)\]\[(\d+)\]$")
_GAMMA_KEY = re.compile(r"^gamma\[(\d+)\]\[(\d+)\]\[(\d+)\]$")
_INTERVAL = re.compile(r"\[([^\[\]]*)\]")


@dataclass
class MetricFile:
    """Parsed form of a metric definition file."""

    dimension: int
    kind: str
    coordinates: tuple
    metric_entries: dict = field(default_factory=dict)
    gamma_entries: dict = field(default_factory=dict)
    domain: Box = None
    base_point: tuple = None
    samples: int = 20
    rk_step: float = 1e-3

    def metric_grid(self):
        n = self.dimension
        grid = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                e = self.metric_entries.get((i, j))
                if e is None:
                    e = self.metric_entries.get((j, i))
                if e is None:
                    raise MetricFileError(f"missing metric entry g[{i + 1}][{j + 1}]")
                grid[i, j] = e
        return grid

    def gamma_grid(self):
        if not self.gamma_entries:
            return None
        n = self.dimension
        grid = np.empty((n, n, n), dtype=object)
        for i, j, k in np.ndindex(n, n, n):
            e = self.gamma_entries.get((i, j, k))
            if e is None:
                e = self.gamma_entries.get((i, k, j))
            if e is None:
                raise MetricFileError(
                    f"missing connection entry gamma[{i + 1}][{j + 1}][{k + 1}]")
            grid[i, j, k] = e
        return grid

    def build(self) -> GeometricObject:
        """Construct the geometric object described by the file."""
        connection = self.gamma_grid()
        if self.kind == AFFINE:
            if connection is None:
                raise MetricFileError("kind = affine requires gamma entries")
            return from_metric(None, self.domain, self.base_point,
                               connection=connection, kind=AFFINE)
        return from_metric(self.metric_grid(), self.domain, self.base_point,
                           connection=connection)

    def analysis_points(self):
        """Deterministic analysis sample set: coarse lattice + seeded uniforms."""
        pts = [self.domain.grid(3)]
        if self.samples > 0:
            rng = np.random.default_rng(2029)
            pts.append(self.domain.uniform(self.samples, rng))
        return np.concatenate(pts, axis=0)


def _parse_floats(text, count, what, line):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count or any(not p for p in parts):
        raise MetricFileError(f"{what} must list {count} comma-separated reals", line)
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise MetricFileError(f"bad real in {what}: {exc}", line) from None


def _check_index(value, n, line, key):
    if not 1 <= value <= n:
        raise MetricFileError(
            f"index {value} in {key} is out of range 1..{n}", line)
    return value - 1


def parse_metric_text(text: str) -> MetricFile:
    """Parse file content; raises MetricFileError with the offending line."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MetricFileError("expected 'key = value'", lineno)
        key, value = line.split("=", 1)
        entries.append((lineno, key.strip(), value.strip()))

    headers = {k: (ln, v) for ln, k, v in entries
               if k in ("dimension", "kind", "coordinates", "domain",
                        "base_point", "samples", "rk_step")}
    if "dimension" not in headers:
        raise MetricFileError("missing 'dimension'")
    ln, v = headers["dimension"]
    try:
        n = int(v)
    except ValueError:
        raise MetricFileError(f"dimension must be an integer, got {v!r}", ln) from None
    if not 1 <= n <= 4:
        raise MetricFileError(f"dimension must be in 1..4, got {n}", ln)

    kind = RIEMANNIAN
    if "kind" in headers:
        ln, v = headers["kind"]
        if v not in (RIEMANNIAN, AFFINE):
            raise MetricFileError(
                f"kind must be 'riemannian' or 'affine', got {v!r}", ln)
        kind = v

    expected = tuple(f"x{i + 1}" for i in range(n))
    coords = expected
    if "coordinates" in headers:
        ln, v = headers["coordinates"]
        coords = tuple(p.strip() for p in v.split(","))
        if coords != expected:
            raise MetricFileError(
                f"coordinates must be {', '.join(expected)}", ln)

    if "domain" not in headers:
        raise MetricFileError("missing 'domain'")
    ln, v = headers["domain"]
    intervals = _INTERVAL.findall(v)
    leftover = _INTERVAL.sub("", v).replace("x", "").strip()
    if len(intervals) != n or leftover:
        raise MetricFileError(
            f"domain must be {n} bracketed intervals joined by 'x'", ln)
    lo, hi = [], []
    for iv in intervals:
        a, b = _parse_floats(iv, 2, "interval", ln)
        lo.append(a)
        hi.append(b)
    try:
        box = Box(tuple(lo), tuple(hi))
    except ValueError as exc:
        raise MetricFileError(str(exc), ln) from None

    if "base_point" not in headers:
        raise MetricFileError("missing 'base_point'")
    ln, v = headers["base_point"]
    base = _parse_floats(v.strip().lstrip("(").rstrip(")"), n, "base_point", ln)
    if not box.contains(base):
        raise MetricFileError(f"base_point {base} is outside the domain box", ln)

    samples = 20
    if "samples" in headers:
        ln, v = headers["samples"]
        try:
            samples = int(v)
        except ValueError:
            raise MetricFileError(f"samples must be an integer, got {v!r}", ln) from None
        if samples < 0:
            raise MetricFileError("samples must be nonnegative", ln)

    rk_step = 1e-3
    if "rk_step" in headers:
        ln, v = headers["rk_step"]
        try:
            rk_step = float(v)
        except ValueError:
            raise MetricFileError(f"rk_step must be a real, got {v!r}", ln) from None
        if rk_step <= 0:
            raise MetricFileError("rk_step must be positive", ln)

    mf = MetricFile(dimension=n, kind=kind, coordinates=coords, domain=box,
                    base_point=base, samples=samples, rk_step=rk_step)

    header_names = {"dimension", "kind", "coordinates", "domain",
                    "base_point", "samples", "rk_step"}
    for ln, key, value in entries:
        if key in header_names:
            continue
        m = _G_KEY.match(key)
        if m is not None:
            if kind == AFFINE:
                raise MetricFileError("kind = affine does not take g entries", ln)
            i = _check_index(int(m.group(1)), n, ln, key)
            j = _check_index(int(m.group(2)), n, ln, key)
            mf.metric_entries[(i, j)] = _parse_entry(value, n, ln)
            continue
        m = _GAMMA_KEY.match(key)
        if m is not None:
            i = _check_index(int(m.group(1)), n, ln, key)
            j = _check_index(int(m.group(2)), n, ln, key)
            k = _check_index(int(m.group(3)), n, ln, key)
            mf.gamma_entries[(i, j, k)] = _parse_entry(value, n, ln)
            continue
        raise MetricFileError(f"unknown key {key!r}", ln)

    if kind == RIEMANNIAN and not mf.metric_entries:
        raise MetricFileError("riemannian file requires g[i][j] entries")
    return mf


def _parse_entry(value, n, line):
    try:
        return ex.parse_expr(value, n)
    except (ExprSyntaxError, UnknownIdentifierError) as exc:
        raise MetricFileError(f"bad expression: {exc}", line) from None


def load_metric_file(path) -> MetricFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise MetricFileError(f"cannot read {path}: {exc}") from None
    try:
        return parse_metric_text(text)
    except MetricFileError:
        raise
    except JetGeomError as exc:
        raise MetricFileError(str(exc)) from None
