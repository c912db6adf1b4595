"""Line-oriented system description files (``eds-spec 1``).

Grammar::

    file    := header line*
    header  := 'eds-spec 1'
    line    := blank | '#' comment | key ':' value

Repeated keys accumulate into lists.  Recognised keys:

    name, coordinates, parameter, define (NAME = expr), F, G,
    invariant_F, invariant_G, base_frame_F, base_frame_G,
    domain (coord lo hi), exclude (expr), seed, samples, tolerance,
    symmetry_F, symmetry_G, frame, reciprocal, base_point (c=v, ...),
    grid (NxM), grid_box (coord lo hi), pde (expr in jets such as z_xy),
    independent (coords), lift_gamma1, lift_gamma2 (comma separated
    components in u resp. v), lift_u, lift_v (lo hi), lift_start (c=expr, ...)
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import Expr, ExprError, SymbolTable, eval_at, free_symbols, normalize, parse_expr
from .geometry import Chart, VectorField

HEADER = "eds-spec 1"

KEYS = {
    "name", "coordinates", "parameter", "define", "F", "G", "invariant_F", "invariant_G",
    "base_frame_F", "base_frame_G", "domain", "exclude", "seed", "samples", "tolerance",
    "symmetry_F", "symmetry_G", "frame", "reciprocal", "base_point", "grid", "grid_box", "pde",
    "independent", "lift_gamma1", "lift_gamma2", "lift_u", "lift_v", "lift_start",
}
SINGLE = {"name", "coordinates", "seed", "samples", "tolerance", "base_point", "grid", "pde",
          "independent", "lift_gamma1", "lift_gamma2", "lift_u", "lift_v", "lift_start"}
_JET = re.compile(r"([A-Za-z][A-Za-z0-9]*)_([A-Za-z]+)$")


class SpecError(ValueError):
    def __init__(self, message: str, path: str = "<string>", line: int = 0, column: int = 0,
                 key: str | None = None):
        self.path, self.line, self.column, self.key = path, line, column, key
        self.message = message
        where = f"{path}:{line}:{column}" if line else path
        super().__init__(f"{where}: {message}")


@dataclass
class _Entry:
    key: str
    value: str
    line: int
    column: int


@dataclass
class SystemSpec:
    name: str
    chart: Chart
    F: list[VectorField] = field(default_factory=list)
    G: list[VectorField] = field(default_factory=list)
    invariants_F: list[Expr] = field(default_factory=list)
    invariants_G: list[Expr] = field(default_factory=list)
    base_frame_F: list[str] = field(default_factory=list)
    base_frame_G: list[str] = field(default_factory=list)
    symmetries_F: list[VectorField] = field(default_factory=list)
    symmetries_G: list[VectorField] = field(default_factory=list)
    frame: list[VectorField] = field(default_factory=list)
    reciprocal: list[VectorField] = field(default_factory=list)
    base_point: dict[str, float] = field(default_factory=dict)
    grid: tuple[int, ...] = ()
    grid_box: dict[str, tuple[float, float]] = field(default_factory=dict)
    pde: Expr | None = None
    independent: tuple[str, ...] = ()
    lift_gamma1: tuple[Expr, ...] = ()
    lift_gamma2: tuple[Expr, ...] = ()
    lift_u: tuple[float, float] | None = None
    lift_v: tuple[float, float] | None = None
    lift_start: dict[str, float] = field(default_factory=dict)
    digest: str = ""
    path: str = ""

    @property
    def has_system(self) -> bool:
        return bool(self.F) and bool(self.G)

    def require(self, *names: str) -> None:
        for n in names:
            v = getattr(self, n)
            if v is None or (hasattr(v, "__len__") and len(v) == 0):
                raise SpecError(f"field {n!r} is required for this command", self.path, key=n)

    def with_sampling(self, seed: int | None = None, samples: int | None = None,
                      tolerance: float | None = None) -> "SystemSpec":
        """Re-home every field on a chart whose sampling policy is overridden."""
        kw = {k: v for k, v in (("seed", seed), ("samples", samples), ("tolerance", tolerance))
              if v is not None}
        if not kw:
            return self
        chart = self.chart.with_policy(self.chart.policy.replace(**kw))

        def move(fs):
            return [VectorField(chart, X.coeffs) for X in fs]

        out = SystemSpec(**{**self.__dict__})
        out.chart = chart
        for name in ("F", "G", "symmetries_F", "symmetries_G", "frame", "reciprocal"):
            setattr(out, name, move(getattr(self, name)))
        return out


def _split(text: str, path: str) -> list[_Entry]:
    lines = text.splitlines()
    first = next((i for i, l in enumerate(lines) if l.strip() and not l.lstrip().startswith("#")), None)
    if first is None or lines[first].strip() != HEADER:
        raise SpecError(f"missing header {HEADER!r}", path, (first or 0) + 1, 1)
    out = []
    for i in range(first + 1, len(lines)):
        raw = lines[i]
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if ":" not in raw:
            raise SpecError("expected 'key: value'", path, i + 1, len(raw) - len(raw.lstrip()) + 1)
        k, v = raw.split(":", 1)
        key = k.strip()
        kcol = len(k) - len(k.lstrip()) + 1
        if key not in KEYS:
            raise SpecError(f"unknown key {key!r}", path, i + 1, kcol, key)
        vcol = len(k) + 2 + (len(v) - len(v.lstrip()))
        out.append(_Entry(key, v.strip(), i + 1, vcol))
    return out


class _Loader:
    def __init__(self, entries: list[_Entry], path: str):
        self.path = path
        self.by_key: dict[str, list[_Entry]] = {}
        for e in entries:
            if e.key in SINGLE and e.key in self.by_key:
                raise SpecError(f"key {e.key!r} given twice", path, e.line, 1, e.key)
            self.by_key.setdefault(e.key, []).append(e)

    def all(self, key: str) -> list[_Entry]:
        return self.by_key.get(key, [])

    def one(self, key: str) -> _Entry | None:
        es = self.all(key)
        return es[0] if es else None

    def fail(self, e: _Entry, message: str, offset: int = 0) -> SpecError:
        return SpecError(message, self.path, e.line, e.column + offset, e.key)

    def expr(self, e: _Entry, table: SymbolTable | None, text: str | None = None, offset: int = 0) -> Expr:
        text = e.value if text is None else text
        try:
            return parse_expr(text, table)
        except ExprError as exc:
            raise self.fail(e, exc.message, offset + exc.index) from None

    def field(self, e: _Entry, chart: Chart) -> VectorField:
        try:
            return chart.field(e.value)
        except ExprError as exc:
            raise self.fail(e, exc.message, exc.index) from None

    def number(self, e: _Entry, text: str, offset: int = 0) -> float:
        try:
            return float(text)
        except ValueError:
            raise self.fail(e, f"expected a number, got {text!r}", offset) from None

    def names(self, e: _Entry) -> list[str]:
        return e.value.replace(",", " ").split()

    def bounds(self, e: _Entry, known) -> tuple[str, float, float]:
        parts = e.value.split()
        if len(parts) != 3:
            raise self.fail(e, "expected 'coordinate lo hi'")
        name = parts[0]
        if name not in known:
            raise self.fail(e, f"undeclared symbol {name!r}")
        lo, hi = self.number(e, parts[1]), self.number(e, parts[2])
        if not lo < hi:
            raise self.fail(e, "empty interval")
        return name, lo, hi

    def assignments(self, e: _Entry, table: SymbolTable, known) -> dict[str, float]:
        out = {}
        pos = 0
        for chunk in e.value.split(","):
            off = pos + len(chunk) - len(chunk.lstrip())
            pos += len(chunk) + 1
            if not chunk.strip():
                continue
            if "=" not in chunk:
                raise self.fail(e, "expected 'name=value'", off)
            n, v = chunk.split("=", 1)
            n = n.strip()
            if n not in known:
                raise self.fail(e, f"undeclared symbol {n!r}", off)
            ex = self.expr(e, SymbolTable(), v.strip(), off + len(chunk.split("=")[0]) + 1)
            out[n] = eval_at(ex, {})
        return out


def load_system_spec(path: str | Path) -> SystemSpec:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise SpecError(f"cannot read file: {exc.strerror}", str(p)) from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise SpecError("file is not valid UTF-8", str(p)) from None
    spec = parse_system_spec(text, str(p))
    return spec


def parse_system_spec(text: str, path: str = "<string>") -> SystemSpec:
    L = _Loader(_split(text, path), path)
    ce = L.one("coordinates")
    if ce is None:
        raise SpecError("field 'coordinates' is required", path, key="coordinates")
    coords = L.names(ce)
    if not coords or len(set(coords)) != len(coords):
        raise L.fail(ce, "coordinates must be distinct names")
    params = [n for e in L.all("parameter") for n in L.names(e)]
    table = SymbolTable.of(coords, params)
    for e in L.all("define"):
        if "=" not in e.value:
            raise L.fail(e, "expected 'NAME = expr'")
        n, body = e.value.split("=", 1)
        n = n.strip()
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", n) or n in coords or n in params:
            raise L.fail(e, f"invalid definition name {n!r}")
        val = L.expr(e, table, body.strip(), len(e.value.split("=")[0]) + 1 + (len(body) - len(body.lstrip())))
        table = table.with_definition(n, normalize(val))
    known = set(coords) | set(params)
    box = {}
    for e in L.all("domain"):
        n, lo, hi = L.bounds(e, known)
        box[n] = (lo, hi)
    excl = [L.expr(e, table) for e in L.all("exclude")]
    seed = int(L.number(se, se.value)) if (se := L.one("seed")) else 0
    samples = int(L.number(se, se.value)) if (se := L.one("samples")) else 8
    tol = L.number(se, se.value) if (se := L.one("tolerance")) else 1e-9
    chart = Chart.make(coords, box or None, excl, seed=seed, samples=samples, tolerance=tol,
                       parameters=params)
    chart = Chart(chart.coordinates, chart.policy, chart.parameters, table.definitions)
    spec = SystemSpec(name=(L.one("name").value if L.one("name") else Path(path).stem), chart=chart,
                      path=path, digest=hashlib.sha256(text.encode("utf-8")).hexdigest())
    spec.F = [L.field(e, chart) for e in L.all("F")]
    spec.G = [L.field(e, chart) for e in L.all("G")]
    spec.invariants_F = [normalize(L.expr(e, table)) for e in L.all("invariant_F")]
    spec.invariants_G = [normalize(L.expr(e, table)) for e in L.all("invariant_G")]
    spec.base_frame_F = [e.value for e in L.all("base_frame_F")]
    spec.base_frame_G = [e.value for e in L.all("base_frame_G")]
    spec.symmetries_F = [L.field(e, chart) for e in L.all("symmetry_F")]
    spec.symmetries_G = [L.field(e, chart) for e in L.all("symmetry_G")]
    spec.frame = [L.field(e, chart) for e in L.all("frame")]
    spec.reciprocal = [L.field(e, chart) for e in L.all("reciprocal")]
    if e := L.one("base_point"):
        spec.base_point = L.assignments(e, table, known)
    if e := L.one("grid"):
        m = re.fullmatch(r"\s*(\d+)(?:\s*x\s*(\d+))*\s*", e.value)
        if not m:
            raise L.fail(e, "expected a grid size such as 21x21")
        spec.grid = tuple(int(t) for t in re.findall(r"\d+", e.value))
    for e in L.all("grid_box"):
        n, lo, hi = L.bounds(e, known)
        spec.grid_box[n] = (lo, hi)
    if e := L.one("independent"):
        spec.independent = tuple(L.names(e))
        for n in spec.independent:
            if n not in coords:
                raise L.fail(e, f"undeclared symbol {n!r}")
    if e := L.one("pde"):
        spec.pde = _parse_pde(L, e, table, coords, spec.independent)
    for key, var in (("lift_gamma1", "u"), ("lift_gamma2", "v")):
        if e := L.one(key):
            gt = SymbolTable.of((var,), params, dict(table.definitions))
            comps, pos = [], 0
            for chunk in e.value.split(","):
                comps.append(normalize(L.expr(e, gt, chunk, pos)))
                pos += len(chunk) + 1
            setattr(spec, key, tuple(comps))
    for key in ("lift_u", "lift_v"):
        if e := L.one(key):
            parts = e.value.split()
            if len(parts) != 2:
                raise L.fail(e, "expected 'lo hi'")
            setattr(spec, key, (L.number(e, parts[0]), L.number(e, parts[1])))
    if e := L.one("lift_start"):
        spec.lift_start = L.assignments(e, table, known)
    return spec


def _parse_pde(L: _Loader, e: _Entry, table: SymbolTable, coords, independent) -> Expr:
    ex = L.expr(e, None)
    allowed = set(coords) | set(table.parameters) | {n for n, _ in table.definitions}
    for name in sorted(free_symbols(ex)):
        if name in allowed:
            continue
        m = _JET.match(name)
        if m and m.group(1) in coords and all(ch in independent for ch in m.group(2)):
            continue
        raise L.fail(e, f"undeclared symbol {name!r}", e.value.find(name))
    defs = dict(table.definitions)
    if defs:
        from .expr import substitute
        ex = substitute(ex, defs)
    return normalize(ex)
