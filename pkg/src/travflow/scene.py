"""Scene model: a compact domain X = {z <= 0} inside a bounding box,
a vector field v, and a function f expected to grow along the flow.

The scene owns the compiled programs and the tower of iterated Lie
derivatives of z, both built lazily and cached.  Validation runs the
grid checks that every other stage assumes: nonempty domain, f strictly
increasing along v on X, a regular boundary, no flow through the box
walls inside the domain, and a nowhere vanishing field.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field, fields

import numpy as np

from . import _backend
from .errors import SceneInvalid, TravflowError
from .expr import Add, Constant, Mul, differentiate, max_variable, parse, simplify, to_string
from ._program import compile_program, compile_vector


@dataclass
class ToleranceSet:
    regularity: float = 1e-6      # lower bound for |grad z| near the boundary
    contact: float = 1e-7        # |z| below this counts as on the boundary
    deriv_zero: float = 1e-5     # Lie derivatives below this count as zero
    ode_rel: float = 1e-10
    ode_abs: float = 1e-12
    cluster: float = 1e-5        # trajectory class merge radius, scaled by bbox extent
    grid: int = 0                # validation grid per axis; 0 picks a default

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise TravflowError(f"unknown tolerance keys: {sorted(unknown)}")
        merged = cls(**data)
        merged.grid = int(merged.grid)
        return merged

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ValidationReport:
    ok: bool
    failures: list

    def to_dict(self):
        return {"ok": self.ok, "failures": self.failures}


@dataclass(eq=False)
class Scene:
    dimension: int
    z: object
    v: tuple
    f: object
    bbox_lo: tuple
    bbox_hi: tuple
    tol: ToleranceSet = field(default_factory=ToleranceSet)
    reference_betti: tuple | None = None

    def __post_init__(self):
        self.v = tuple(self.v)
        self.bbox_lo = tuple(float(x) for x in self.bbox_lo)
        self.bbox_hi = tuple(float(x) for x in self.bbox_hi)
        if self.dimension < 1:
            raise TravflowError("dimension must be at least 1")
        if len(self.v) != self.dimension:
            raise TravflowError("field component count must equal the dimension")
        if len(self.bbox_lo) != self.dimension or len(self.bbox_hi) != self.dimension:
            raise TravflowError("bbox extents must match the dimension")
        for lo, hi in zip(self.bbox_lo, self.bbox_hi):
            if not lo < hi:
                raise TravflowError("bbox min must be strictly below bbox max")
        for expression in (self.z, self.f, *self.v):
            if max_variable(expression) >= self.dimension:
                raise TravflowError("expression uses a variable beyond the dimension")
        self._lock = threading.Lock()
        self._tower = [simplify(self.z)]
        self._tower_programs = [compile_program(self._tower[0], self.dimension)]
        self.z_program = self._tower_programs[0]
        self.f_program = compile_program(simplify(self.f), self.dimension)
        self.v_program = compile_vector([simplify(c) for c in self.v], self.dimension)
        gradient = [simplify(differentiate(self._tower[0], i)) for i in range(self.dimension)]
        self.grad_z_program = compile_vector(gradient, self.dimension)
        self.lie_f_program = compile_program(self.lie_derivative(self.f), self.dimension)

    # Construction from the JSON scene format.

    @classmethod
    def from_dict(cls, data):
        dimension = int(data["dimension"])
        tol = ToleranceSet.from_dict(data.get("tol", {}))
        reference = data.get("reference_betti")
        return cls(
            dimension=dimension,
            z=parse(data["z"], dimension),
            v=tuple(parse(text, dimension) for text in data["v"]),
            f=parse(data["f"], dimension),
            bbox_lo=tuple(data["bbox"]["min"]),
            bbox_hi=tuple(data["bbox"]["max"]),
            tol=tol,
            reference_betti=tuple(int(b) for b in reference) if reference is not None else None,
        )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self):
        data = {
            "dimension": self.dimension,
            "z": to_string(self.z),
            "v": [to_string(component) for component in self.v],
            "f": to_string(self.f),
            "bbox": {"min": list(self.bbox_lo), "max": list(self.bbox_hi)},
            "tol": self.tol.to_dict(),
        }
        if self.reference_betti is not None:
            data["reference_betti"] = list(self.reference_betti)
        return data

    # Lie derivatives.

    def lie_derivative(self, expression):
        """Derivative of the expression along the field v."""
        total = Constant(0.0)
        for index, component in enumerate(self.v):
            total = Add(total, Mul(component, differentiate(expression, index)))
        return simplify(total)

    def tower_expression(self, order):
        """L_v^order z as an expression (order 0 is z itself)."""
        with self._lock:
            while len(self._tower) <= order:
                self._tower.append(self.lie_derivative(self._tower[-1]))
                self._tower_programs.append(compile_program(self._tower[-1], self.dimension))
            return self._tower[order]

    def tower_program(self, order):
        self.tower_expression(order)
        return self._tower_programs[order]

    def tower_gradient_program(self, order):
        """Vector program for grad(L_v^order z)."""
        expression = self.tower_expression(order)
        with self._lock:
            cache = getattr(self, "_tower_gradient_cache", None)
            if cache is None:
                cache = {}
                self._tower_gradient_cache = cache
            if order not in cache:
                cache[order] = compile_vector(
                    [simplify(differentiate(expression, i))
                     for i in range(self.dimension)],
                    self.dimension)
            return cache[order]

    # Point evaluation.

    def z_at(self, point):
        return _backend.kernel.eval_program(self.z_program, point)

    def f_at(self, point):
        return _backend.kernel.eval_program(self.f_program, point)

    def lie_at(self, point, order):
        return _backend.kernel.eval_program(self.tower_program(order), point)

    def v_at(self, point):
        out = np.empty(self.dimension, dtype=np.float64)
        _backend.kernel.eval_vector(self.v_program, point, out)
        return out

    def grad_z_at(self, point):
        out = np.empty(self.dimension, dtype=np.float64)
        _backend.kernel.eval_vector(self.grad_z_program, point, out)
        return out

    def tower_gradient_at(self, point, order):
        out = np.empty(self.dimension, dtype=np.float64)
        _backend.kernel.eval_vector(self.tower_gradient_program(order), point, out)
        return out

    # Geometry helpers.

    @property
    def bbox_extent(self):
        return max(hi - lo for lo, hi in zip(self.bbox_lo, self.bbox_hi))

    @property
    def bbox_diameter(self):
        return math.sqrt(sum((hi - lo) ** 2 for lo, hi in zip(self.bbox_lo, self.bbox_hi)))

    def grid_resolution(self):
        if self.tol.grid > 0:
            return self.tol.grid
        return 64 if self.dimension == 2 else 32

    def grid_points(self):
        """Regular validation grid over the bbox, one row per point,
        plus a mask marking points on the outer faces."""
        resolution = self.grid_resolution()
        axes = [np.linspace(lo, hi, resolution)
                for lo, hi in zip(self.bbox_lo, self.bbox_hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        on_wall = np.zeros(points.shape[0], dtype=bool)
        index = np.indices([resolution] * self.dimension).reshape(self.dimension, -1)
        for axis in range(self.dimension):
            on_wall |= (index[axis] == 0) | (index[axis] == resolution - 1)
        return points, on_wall

    # Validation.

    def validate(self):
        failures = []
        points, on_wall = self.grid_points()
        kernel = _backend.kernel
        z_values = kernel.eval_program_batch(self.z_program, points)
        inside = z_values <= 0.0

        if not bool(inside.any()):
            failures.append({"check": "nonempty",
                             "message": "no grid point satisfies z <= 0"})
            return ValidationReport(ok=False, failures=failures)

        lie_f = kernel.eval_program_batch(self.lie_f_program, points)
        worst = int(np.argmin(np.where(inside, lie_f, np.inf)))
        if lie_f[worst] <= 0.0:
            failures.append({
                "check": "lyapunov",
                "message": "f does not strictly increase along v on the domain",
                "point": [float(x) for x in points[worst]],
                "value": float(lie_f[worst]),
            })

        gradient_rows = np.stack(
            [kernel.eval_program_batch(self._gradient_component(i), points)
             for i in range(self.dimension)], axis=1)
        gradient_norm = np.sqrt((gradient_rows ** 2).sum(axis=1))
        resolution = self.grid_resolution()
        cell = max((hi - lo) / (resolution - 1)
                   for lo, hi in zip(self.bbox_lo, self.bbox_hi))
        z_scale = float(np.max(np.abs(z_values)))
        # Shell: points within roughly one cell of the zero set.  The
        # absolute term keeps points where both z and grad z vanish.
        shell = np.abs(z_values) <= 1.5 * cell * gradient_norm + 1e-12 * z_scale
        if bool(shell.any()):
            weakest = int(np.argmin(np.where(shell, gradient_norm, np.inf)))
            if gradient_norm[weakest] <= self.tol.regularity:
                failures.append({
                    "check": "regularity",
                    "message": "grad z vanishes on the boundary",
                    "point": [float(x) for x in points[weakest]],
                    "value": float(gradient_norm[weakest]),
                })

        field_rows = np.stack(
            [kernel.eval_program_batch(self._field_component(i), points)
             for i in range(self.dimension)], axis=1)
        speed = np.sqrt((field_rows ** 2).sum(axis=1))
        slowest = int(np.argmin(speed))
        if speed[slowest] <= 1e-12:
            failures.append({
                "check": "field",
                "message": "the field vanishes inside the bounding box",
                "point": [float(x) for x in points[slowest]],
            })

        wall_inside = on_wall & inside
        if bool(wall_inside.any()):
            flux = self._wall_flux(points, field_rows, wall_inside)
            if flux is not None:
                index, value = flux
                failures.append({
                    "check": "containment",
                    "message": "the flow crosses the bounding box inside the domain",
                    "point": [float(x) for x in points[index]],
                    "value": value,
                })

        return ValidationReport(ok=not failures, failures=failures)

    def _wall_flux(self, points, field_rows, wall_inside):
        """Largest |v . n| over wall points inside the domain; None when
        every such point has no flux through its wall."""
        resolution = self.grid_resolution()
        worst = None
        for row in np.nonzero(wall_inside)[0]:
            point = points[row]
            for axis in range(self.dimension):
                near_lo = abs(point[axis] - self.bbox_lo[axis]) < 1e-12 * self.bbox_extent
                near_hi = abs(point[axis] - self.bbox_hi[axis]) < 1e-12 * self.bbox_extent
                if not (near_lo or near_hi):
                    continue
                normal_flux = abs(float(field_rows[row, axis]))
                if normal_flux > 1e-9 and (worst is None or normal_flux > worst[1]):
                    worst = (int(row), normal_flux)
        return worst

    def require_valid(self):
        report = self.validate()
        if not report.ok:
            summary = "; ".join(f"{item['check']}: {item['message']}"
                                for item in report.failures)
            raise SceneInvalid(summary)
        return report

    # Per-component programs, cached.

    def _gradient_component(self, index):
        cache = getattr(self, "_gradient_programs", None)
        if cache is None:
            with self._lock:
                cache = getattr(self, "_gradient_programs", None)
                if cache is None:
                    cache = [compile_program(simplify(differentiate(self._tower[0], i)),
                                             self.dimension)
                             for i in range(self.dimension)]
                    self._gradient_programs = cache
        return cache[index]

    def _field_component(self, index):
        cache = getattr(self, "_field_programs", None)
        if cache is None:
            with self._lock:
                cache = getattr(self, "_field_programs", None)
                if cache is None:
                    cache = [compile_program(simplify(component), self.dimension)
                             for component in self.v]
                    self._field_programs = cache
        return cache[index]
