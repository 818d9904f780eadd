"""Base spaces, charts, loops and tangent fields along loops.

Supported bases are the circle (one global periodic chart, or two
overlapping arcs for exercising transition-function bookkeeping) and the
two-torus (one periodic chart).  Loops are stored analytically as

    gamma(t) = basepoint + winding * t + sum_f c_f exp(2 pi i f t)

so coordinates, velocities and deformations can be evaluated exactly at
arbitrary parameter values; the uniform sample grid demanded by the public
contract is derived from this representation (and raw sample input is
turned into it by exact trigonometric interpolation).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, CoverageError, IncompatibilityError

_ARC_EPS = 1e-9

# Arcs used by the two-chart circle atlas; chosen so that windings 1 and 2
# admit assignments with p in {2, 3, 4, 6} and both overlaps are wide.
TWO_CHART_ARCS = ((-0.26, 0.60), (0.24, 1.10))


@dataclass(frozen=True)
class Chart:
    """A chart domain: an arc (lo, hi) in the circle coordinate, or everything."""

    index: int
    arc: tuple[float, float] | None = None

    def contains_interval(self, vmin: float, vmax: float) -> bool:
        if self.arc is None:
            return True
        lo, hi = self.arc
        n_min = np.ceil(lo - vmin - _ARC_EPS)
        n_max = np.floor(hi - vmax + _ARC_EPS)
        return n_min <= n_max

    def contains_values(self, values: np.ndarray) -> bool:
        v = np.asarray(values, dtype=float)
        return self.contains_interval(float(v.min()), float(v.max()))


@dataclass(frozen=True)
class BaseSpace:
    kind: str            # "circle" | "torus2"
    atlas: str           # "one" | "two" (circle), "one" (torus)
    charts: tuple[Chart, ...]

    @classmethod
    def circle(cls, atlas: str = "one") -> "BaseSpace":
        if atlas == "one":
            return cls("circle", "one", (Chart(0, None),))
        if atlas == "two":
            return cls("circle", "two",
                       (Chart(0, TWO_CHART_ARCS[0]), Chart(1, TWO_CHART_ARCS[1])))
        raise ConfigurationError(f"unknown circle atlas {atlas!r}")

    @classmethod
    def torus2(cls) -> "BaseSpace":
        return cls("torus2", "one", (Chart(0, None),))

    @property
    def dim(self) -> int:
        return 1 if self.kind == "circle" else 2

    def overlap_points(self, i: int, j: int, count: int = 9) -> np.ndarray:
        """Sample points (in the global coordinate) of the chart overlap."""
        arc_i, arc_j = self.charts[i].arc, self.charts[j].arc
        if arc_i is None and arc_j is None:
            pts = np.linspace(0.0, 1.0, count, endpoint=False)
            return pts[:, None] if self.dim == 1 else np.stack(
                [pts, np.zeros_like(pts)], axis=1)
        if arc_i is None:
            arc_i = (arc_j[0] - 1.0, arc_j[1] + 1.0)
        if arc_j is None:
            arc_j = (arc_i[0] - 1.0, arc_i[1] + 1.0)
        pieces = []
        for shift in (-1.0, 0.0, 1.0):
            lo = max(arc_i[0], arc_j[0] + shift)
            hi = min(arc_i[1], arc_j[1] + shift)
            if hi - lo > 1e-6:
                pieces.append(np.linspace(lo + 1e-4, hi - 1e-4, count))
        if not pieces:
            raise ConfigurationError(f"charts {i} and {j} do not overlap")
        return np.concatenate(pieces)[:, None]


class FourierField:
    """Vector-valued trigonometric polynomial of the loop parameter."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: dict[int, np.ndarray] | None = None):
        self.dim = dim
        self.coeffs: dict[int, np.ndarray] = {}
        if coeffs:
            for f, c in coeffs.items():
                self.add(f, c)

    def add(self, freq: int, coeff) -> None:
        c = np.asarray(coeff, dtype=complex).reshape(self.dim)
        self.coeffs[int(freq)] = self.coeffs.get(int(freq), 0.0) + c

    def scaled(self, h: float) -> "FourierField":
        return FourierField(self.dim, {f: h * c for f, c in self.coeffs.items()})

    def plus(self, other: "FourierField") -> "FourierField":
        out = FourierField(self.dim, dict(self.coeffs))
        for f, c in other.coeffs.items():
            out.add(f, c)
        return out

    def eval(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.zeros(ts.shape + (self.dim,), dtype=complex)
        for f, c in self.coeffs.items():
            out += np.exp(2j * np.pi * f * ts)[..., None] * c
        return out

    def deriv(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.zeros(ts.shape + (self.dim,), dtype=complex)
        for f, c in self.coeffs.items():
            if f != 0:
                out += (2j * np.pi * f) * np.exp(2j * np.pi * f * ts)[..., None] * c
        return out

    def is_real(self, tol: float = 1e-12) -> bool:
        grid = np.linspace(0.0, 1.0, 32, endpoint=False)
        return bool(np.abs(self.eval(grid).imag).max() <= tol)

    @classmethod
    def fit_samples(cls, samples: np.ndarray) -> "FourierField":
        """Exact trigonometric interpolation of periodic samples (N+1, d)."""
        samples = np.asarray(samples, dtype=complex)
        n = samples.shape[0] - 1
        if np.abs(samples[0] - samples[-1]).max() > 1e-9:
            raise ConfigurationError("variation samples are not periodic")
        spec = np.fft.fft(samples[:n], axis=0) / n
        out = cls(samples.shape[1])
        for k in range(n):
            if np.abs(spec[k]).max() > 1e-14:
                out.add(k if k <= n // 2 else k - n, spec[k])
        return out


class LoopVariation:
    """Tangent field along a loop, given in chart coordinates.

    Stored as a Fourier field so values and time derivatives exist at every
    parameter; the sampled components on the loop grid remain the public
    face.  Extension off the loop is coordinate-flat (components constant
    in the chart coordinates), which makes brackets of variations vanish.
    """

    def __init__(self, field_: FourierField, N: int):
        self.field = field_
        self.N = int(N)
        ts = np.arange(N + 1) / N
        self.components = field_.eval(ts)
        self.dcomponents = field_.deriv(ts)

    @property
    def dim(self) -> int:
        return self.field.dim

    @classmethod
    def from_fourier(cls, coeffs: dict[int, object], dim: int, N: int) -> "LoopVariation":
        f = FourierField(dim)
        for freq, c in coeffs.items():
            f.add(freq, np.asarray(c, dtype=complex).reshape(dim))
        return cls(f, N)

    @classmethod
    def constant(cls, vector, N: int) -> "LoopVariation":
        vector = np.asarray(vector, dtype=complex)
        return cls(FourierField(vector.size, {0: vector}), N)

    @classmethod
    def from_samples(cls, samples, N: int | None = None) -> "LoopVariation":
        samples = np.asarray(samples, dtype=complex)
        n = samples.shape[0] - 1
        if N is not None and n != N:
            raise ConfigurationError("variation grid does not match the loop grid")
        return cls(FourierField.fit_samples(samples), n)

    def eval(self, ts) -> np.ndarray:
        return self.field.eval(ts)


class Loop:
    """Closed curve with uniform grid and a (p, chart list) subdivision."""

    def __init__(self, base: BaseSpace, winding, basepoint, displacement: FourierField,
                 N: int, p: int, chart_assignment):
        if N < 16:
            raise ConfigurationError(f"grid size {N} is below the minimum of 16")
        if p < 1 or N % p != 0:
            raise ConfigurationError(f"subdivision p={p} must divide the grid size N={N}")
        chart_assignment = tuple(int(c) for c in chart_assignment)
        if len(chart_assignment) != p:
            raise ConfigurationError("chart assignment length must equal p")
        for c in chart_assignment:
            if not 0 <= c < len(base.charts):
                raise ConfigurationError(f"chart index {c} out of range")
        self.base = base
        self.winding = tuple(int(k) for k in np.atleast_1d(winding))
        self.basepoint = np.asarray(basepoint, dtype=float).reshape(base.dim)
        self.displacement = displacement
        self.N = int(N)
        self.p = int(p)
        self.chart_assignment = chart_assignment
        ts = np.arange(N + 1) / N
        self.samples = self.eval(ts)
        self.velocity_samples = self.velocity(ts)
        self._check_coverage()

    # -- analytic evaluation --------------------------------------------
    def eval(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        lin = self.basepoint + np.outer(ts, np.asarray(self.winding, dtype=float)) \
            .reshape(ts.shape + (len(self.winding),))
        return lin + self.displacement.eval(ts)

    def velocity(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        lin = np.broadcast_to(np.asarray(self.winding, dtype=float),
                              ts.shape + (len(self.winding),))
        return lin + self.displacement.deriv(ts)

    # -- structure --------------------------------------------------------
    def chart_of_segment(self, j: int) -> int:
        return self.chart_assignment[j]

    def segment_slice(self, j: int) -> slice:
        step = self.N // self.p
        return slice(j * step, (j + 1) * step + 1)

    def _check_coverage(self) -> None:
        if np.abs(self.displacement.eval(np.array([0.0])) -
                  self.displacement.eval(np.array([1.0]))).max() > 1e-9:
            raise ConfigurationError("loop displacement is not periodic")
        for j in range(self.p):
            chart = self.base.charts[self.chart_of_segment(j)]
            if chart.arc is None:
                continue
            seg = self.samples[self.segment_slice(j), 0]
            if np.abs(seg.imag).max() > 1e-12:
                raise CoverageError("cannot chart-check a complexified loop")
            if not chart.contains_values(seg.real):
                raise CoverageError(
                    f"segment {j} of the loop leaves chart {chart.index}")

    def is_closed_mod_lattice(self) -> bool:
        gap = self.samples[-1] - self.samples[0]
        return bool(np.abs(gap - np.round(gap.real)).max() <= 1e-9)


def make_circle_loop(winding: int, N: int, atlas: str = "one", p: int = 1,
                     basepoint: float = 0.0, chart_assignment=None) -> Loop:
    """The loop t -> winding * t in the circle coordinate."""
    base = BaseSpace.circle(atlas)
    if chart_assignment is None:
        chart_assignment = _auto_assignment(base, winding, p, basepoint)
    return Loop(base, (winding,), (basepoint,), FourierField(1), N, p, chart_assignment)


def _auto_assignment(base: BaseSpace, winding: int, p: int, basepoint: float):
    assignment = []
    for j in range(p):
        vmin = basepoint + winding * j / p
        vmax = basepoint + winding * (j + 1) / p
        vmin, vmax = min(vmin, vmax), max(vmin, vmax)
        for chart in base.charts:
            if chart.contains_interval(vmin, vmax):
                assignment.append(chart.index)
                break
        else:
            raise CoverageError(
                f"no chart contains segment {j} (winding {winding}, p={p})")
    return assignment


def make_torus_loop(winding, N: int, basepoint=(0.0, 0.0), p: int = 1) -> Loop:
    base = BaseSpace.torus2()
    return Loop(base, winding, basepoint, FourierField(2), N, p, [0] * p)


def make_constant_loop(base: BaseSpace, point, N: int, p: int = 1) -> Loop:
    point = np.atleast_1d(np.asarray(point, dtype=float))
    assignment = _auto_assignment(base, 0, p, float(point[0])) \
        if base.kind == "circle" else [0] * p
    return Loop(base, (0,) * base.dim, point, FourierField(base.dim), N, p, assignment)


def deform_loop(loop: Loop, variation: LoopVariation, h: float) -> Loop:
    """Shift the loop coordinates by h * V, keeping grid and subdivision."""
    if variation.dim != loop.base.dim or variation.N != loop.N:
        raise IncompatibilityError("variation does not match the loop grid")
    if h != 0.0 and not variation.field.is_real():
        raise ConfigurationError("deformations require a real variation field")
    disp = loop.displacement.plus(variation.field.scaled(h))
    return Loop(loop.base, loop.winding, loop.basepoint, disp,
                loop.N, loop.p, loop.chart_assignment)
